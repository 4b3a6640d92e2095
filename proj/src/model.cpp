#include "stabpade/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stabpade/errors.hpp"

namespace stabpade {

std::string to_string(PotentialFamily family) {
  switch (family) {
    case PotentialFamily::gaussian_well_barrier:
      return "gaussian_well_barrier";
    case PotentialFamily::custom_polynomial_gaussian:
      return "custom_polynomial_gaussian";
  }
  return "unknown";
}

PotentialFamily potential_family_from_string(const std::string& name) {
  if (name == "gaussian_well_barrier") return PotentialFamily::gaussian_well_barrier;
  if (name == "custom_polynomial_gaussian") return PotentialFamily::custom_polynomial_gaussian;
  throw ValidationError("potential_family", "unknown potential family '" + name + "'");
}

void ModelSpec::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ValidationError("mass", "must be > 0");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ValidationError("hbar", "must be > 0");
  for (double p : parameters)
    if (!std::isfinite(p)) throw ValidationError("parameters", "non-finite value");
  switch (family) {
    case PotentialFamily::gaussian_well_barrier:
      if (parameters.size() != 2)
        throw ValidationError("parameters", "gaussian_well_barrier takes {J, lambda}");
      if (!(parameters[1] > 0.0)) throw ValidationError("lambda", "must be > 0");
      break;
    case PotentialFamily::custom_polynomial_gaussian:
      if (parameters.size() < 2)
        throw ValidationError("parameters",
                              "custom_polynomial_gaussian takes {gamma, offset, c0, ...}");
      if (parameters[0] < 0.0) throw ValidationError("gamma", "must be >= 0");
      break;
  }
}

ModelSpec::PolyGaussian ModelSpec::canonical() const {
  PolyGaussian pg;
  if (family == PotentialFamily::gaussian_well_barrier) {
    const double J = parameters.at(0);
    pg.gamma = parameters.at(1);
    pg.offset = J;
    pg.coefficients = {-J, 0.0, 0.5};
  } else {
    pg.gamma = parameters.at(0);
    pg.offset = parameters.at(1);
    pg.coefficients.assign(parameters.begin() + 2, parameters.end());
  }
  return pg;
}

cplx ModelSpec::potential(cplx x) const {
  const PolyGaussian pg = canonical();
  cplx poly = 0.0;
  for (auto it = pg.coefficients.rbegin(); it != pg.coefficients.rend(); ++it) poly = poly * x + *it;
  return pg.offset + std::exp(-pg.gamma * x * x) * poly;
}

std::optional<double> ModelSpec::threshold() const {
  const PolyGaussian pg = canonical();
  const bool no_poly = std::all_of(pg.coefficients.begin(), pg.coefficients.end(),
                                   [](double c) { return c == 0.0; });
  if (pg.gamma > 0.0 || no_poly) return pg.offset;
  return std::nullopt;
}

ModelSpec benchmark_model() { return ModelSpec{}; }

ModelSpec harmonic_model() {
  return ModelSpec{PotentialFamily::custom_polynomial_gaussian, {0.0, 0.0, 0.0, 0.0, 0.5}, 1.0, 1.0};
}

ModelSpec free_particle_model() {
  return ModelSpec{PotentialFamily::custom_polynomial_gaussian, {0.0, 0.0}, 1.0, 1.0};
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::harmonic_oscillator:
      return "harmonic_oscillator";
    case BasisKind::even_tempered_gaussian:
      return "even_tempered_gaussian";
  }
  return "unknown";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "harmonic_oscillator") return BasisKind::harmonic_oscillator;
  if (name == "even_tempered_gaussian") return BasisKind::even_tempered_gaussian;
  throw ValidationError("kind", "unknown basis kind '" + name + "'");
}

namespace {
constexpr int kMaxQuadratureOrder = 600;
}

void BasisSpec::validate() const {
  if (size < 2) throw ValidationError("size", "basis size must be >= 2");
  if (quadrature_order < 0) throw ValidationError("quadrature_order", "must be positive");
  if (kind == BasisKind::harmonic_oscillator) {
    if (!(width > 0.0) || !std::isfinite(width)) throw ValidationError("width", "omega must be > 0");
    if (size > 300) throw ValidationError("size", "harmonic_oscillator basis limited to 300 functions");
    if (effective_quadrature_order() < size + 2)
      throw ValidationError("quadrature_order", "must exceed basis size + 1");
    if (effective_quadrature_order() > kMaxQuadratureOrder)
      throw ValidationError("quadrature_order", "must be <= 600");
  } else {
    if (!(base_exponent > 0.0) || !std::isfinite(base_exponent))
      throw ValidationError("base_exponent", "beta0 must be > 0");
    if (!(ratio > 1.0) || !std::isfinite(ratio)) throw ValidationError("ratio", "must be > 1");
    if (!std::isfinite(base_exponent * std::pow(ratio, size - 1)))
      throw ValidationError("ratio", "largest exponent overflows");
  }
}

int BasisSpec::effective_quadrature_order() const {
  if (quadrature_order > 0) return quadrature_order;
  return std::max(200, 3 * size);
}

BasisSpec ho_basis(int size, double omega, int quadrature_order) {
  BasisSpec spec;
  spec.kind = BasisKind::harmonic_oscillator;
  spec.size = size;
  spec.width = omega;
  spec.quadrature_order = quadrature_order;
  return spec;
}

BasisSpec even_tempered_basis(int size, double beta0, double ratio) {
  BasisSpec spec;
  spec.kind = BasisKind::even_tempered_gaussian;
  spec.size = size;
  spec.base_exponent = beta0;
  spec.ratio = ratio;
  return spec;
}

std::vector<double> hermite_functions(int count, double y) {
  std::vector<double> h(static_cast<std::size_t>(std::max(count, 0)), 0.0);
  if (count <= 0) return h;
  h[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * y * y);
  if (count > 1) h[1] = std::sqrt(2.0) * y * h[0];
  for (int k = 2; k < count; ++k)
    h[k] = std::sqrt(2.0 / k) * y * h[k - 1] - std::sqrt((k - 1.0) / k) * h[k - 2];
  return h;
}

GaussHermiteRule gauss_hermite(int order) {
  if (order < 1 || order > kMaxQuadratureOrder)
    throw ValidationError("quadrature_order", "must be in [1, 600]");
  // Golub-Welsch for starting values, then Newton on h_order for full accuracy.
  VectorR diag = VectorR::Zero(order);
  VectorR sub(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<MatrixR> jacobi;
  jacobi.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  rule.scaled_weights.resize(order);
  for (int i = 0; i < order; ++i) {
    double y = jacobi.eigenvalues()[i];
    for (int iter = 0; iter < 4; ++iter) {
      const auto h = hermite_functions(order + 1, y);
      // h_n' = sqrt(2n) h_{n-1} - y h_n
      const double hn = h[order];
      const double dh = std::sqrt(2.0 * order) * h[order - 1] - y * hn;
      if (dh == 0.0) break;
      const double step = hn / dh;
      y -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(y))) break;
    }
    const auto h = hermite_functions(order, y);
    const double hm = h[order - 1];
    rule.nodes[i] = y;
    rule.scaled_weights[i] = 1.0 / (order * hm * hm);
    rule.weights[i] = rule.scaled_weights[i] * std::exp(-y * y);
  }
  // Enforce exact symmetry of the rule about 0.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double y = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double sw = 0.5 * (rule.scaled_weights[i] + rule.scaled_weights[j]);
    rule.nodes[i] = -y;
    rule.nodes[j] = y;
    rule.scaled_weights[i] = rule.scaled_weights[j] = sw;
    rule.weights[i] = rule.weights[j] = sw * std::exp(-y * y);
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

namespace {

void fill_harmonic_oscillator(const BasisSpec& spec, std::vector<double>& norms, MatrixR& kinetic,
                              MatrixR& overlap, std::vector<double>& nodes,
                              std::vector<double>& weights, MatrixR& values) {
  const int n = spec.size;
  const double omega = spec.width;
  norms.resize(n);
  for (int k = 0; k < n; ++k) {
    // omega^{1/4} / sqrt(2^k k! sqrt(pi)), evaluated in logs
    const double log_norm = 0.25 * std::log(omega) -
                            0.5 * (k * std::log(2.0) + std::lgamma(k + 1.0) + 0.5 * std::log(kPi));
    norms[k] = std::exp(log_norm);
  }
  kinetic = MatrixR::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    kinetic(k, k) = 0.25 * omega * (2.0 * k + 1.0);
    if (k + 2 < n) {
      const double off = -0.25 * omega * std::sqrt((k + 1.0) * (k + 2.0));
      kinetic(k, k + 2) = off;
      kinetic(k + 2, k) = off;
    }
  }
  overlap = MatrixR::Identity(n, n);

  const GaussHermiteRule rule = gauss_hermite(spec.effective_quadrature_order());
  nodes = rule.nodes;
  weights = rule.scaled_weights;
  const int q = static_cast<int>(nodes.size());
  values.resize(n, q);
  for (int i = 0; i < q; ++i) {
    const auto h = hermite_functions(n, nodes[i]);
    for (int k = 0; k < n; ++k) values(k, i) = h[k];
  }
}

void fill_even_tempered(const BasisSpec& spec, std::vector<double>& norms,
                        std::vector<double>& exponents, MatrixR& kinetic, MatrixR& overlap) {
  const int n = spec.size;
  exponents.resize(n);
  norms.resize(n);
  for (int k = 0; k < n; ++k) {
    exponents[k] = spec.base_exponent * std::pow(spec.ratio, k);
    norms[k] = std::pow(2.0 * exponents[k] / kPi, 0.25);
  }
  kinetic.resize(n, n);
  overlap.resize(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      const double p = exponents[k] + exponents[l];
      const double nn = norms[k] * norms[l];
      const double s = nn * std::sqrt(kPi / p);
      const double t = nn * exponents[k] * exponents[l] * std::sqrt(kPi) / std::pow(p, 1.5);
      overlap(k, l) = overlap(l, k) = s;
      kinetic(k, l) = kinetic(l, k) = t;
    }
  }
}

}  // namespace

BasisSet build_basis(const BasisSpec& spec) {
  spec.validate();
  BasisSet basis;
  basis.spec_ = spec;
  if (spec.kind == BasisKind::harmonic_oscillator) {
    fill_harmonic_oscillator(spec, basis.norms_, basis.kinetic_, basis.overlap_, basis.nodes_,
                             basis.weights_, basis.values_);
  } else {
    fill_even_tempered(spec, basis.norms_, basis.exponents_, basis.kinetic_, basis.overlap_);
  }
  return basis;
}

void ScalingParameter::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha", "must be > 0");
  if (!(theta >= 0.0 && theta <= kMaxTheta + 1e-15))
    throw ValidationError("theta", "must lie in [0, pi/4]");
}

namespace {

MatrixC potential_matrix_ho(const ModelSpec& model, const BasisSet& basis, cplx eta,
                            const MatrixR& values, const std::vector<double>& nodes,
                            const std::vector<double>& weights) {
  const int n = basis.size();
  const int q = static_cast<int>(nodes.size());
  const double inv_sqrt_omega = 1.0 / std::sqrt(basis.spec().width);
  std::vector<cplx> wv(q);
  for (int i = 0; i < q; ++i) wv[i] = weights[i] * model.potential(eta * (nodes[i] * inv_sqrt_omega));
  MatrixC v(n, n);
  for (int m = 0; m < n; ++m) {
    for (int k = m; k < n; ++k) {
      cplx acc = 0.0;
      for (int i = 0; i < q; ++i) acc += wv[i] * (values(m, i) * values(k, i));
      v(m, k) = acc;
      v(k, m) = acc;
    }
  }
  return v;
}

// int x^j exp(-q x^2) dx over the real line, Re q > 0.
cplx gaussian_moment(int j, cplx q) {
  if (j % 2 == 1) return 0.0;
  const double half = 0.5 * j + 0.5;
  return std::tgamma(half) * std::exp(-half * std::log(q));
}

MatrixC potential_matrix_et(const ModelSpec& model, const BasisSet& basis, cplx eta) {
  const int n = basis.size();
  const auto pg = model.canonical();
  const auto& beta = basis.exponents();
  const auto& norms = basis.norms();
  const cplx eta2 = eta * eta;
  MatrixC v(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      const double p = beta[k] + beta[l];
      const cplx q = p + pg.gamma * eta2;
      cplx acc = pg.offset * std::sqrt(kPi / p);
      cplx eta_pow = 1.0;
      for (std::size_t j = 0; j < pg.coefficients.size(); ++j) {
        if (pg.coefficients[j] != 0.0)
          acc += pg.coefficients[j] * eta_pow * gaussian_moment(static_cast<int>(j), q);
        eta_pow *= eta;
      }
      acc *= norms[k] * norms[l];
      v(k, l) = acc;
      v(l, k) = acc;
    }
  }
  return v;
}

void check_finite(const MatrixC& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r <= c; ++r)
      if (!std::isfinite(m(r, c).real()) || !std::isfinite(m(r, c).imag())) {
        std::ostringstream os;
        os << "non-finite matrix element at (" << r << ", " << c << ")";
        throw NumericError(os.str());
      }
}

}  // namespace

MatrixC potential_matrix(const ModelSpec& model, const BasisSet& basis, cplx eta) {
  if (basis.spec().kind == BasisKind::harmonic_oscillator)
    return potential_matrix_ho(model, basis, eta, basis.values(), basis.nodes(), basis.weights());
  return potential_matrix_et(model, basis, eta);
}

ComplexMatrixPair scaled_matrices(const ModelSpec& model, const BasisSet& basis, cplx eta) {
  if (eta == 0.0 || !std::isfinite(eta.real()) || !std::isfinite(eta.imag()))
    throw ValidationError("eta", "must be finite and nonzero");
  const double h2m = model.hbar * model.hbar / model.mass;
  ComplexMatrixPair pair;
  pair.H = potential_matrix(model, basis, eta);
  const cplx kin = h2m / (eta * eta);
  const int n = basis.size();
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) pair.H(r, c) += kin * basis.kinetic()(r, c);
  if (eta.imag() == 0.0)
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) pair.H(r, c).imag(0.0);
  check_finite(pair.H);
  if (!basis.orthonormal()) pair.S = basis.overlap().cast<cplx>();
  return pair;
}

ComplexMatrixPair scaled_matrices(const ModelSpec& model, const BasisSet& basis,
                                  const ScalingParameter& eta) {
  eta.validate();
  // polar() leaves a tiny imaginary part only when theta != 0
  return scaled_matrices(model, basis, eta.theta == 0.0 ? cplx(eta.alpha, 0.0) : eta.eta());
}

QuadratureCheck quadrature_self_test(const ModelSpec& model, const BasisSet& basis,
                                     std::span<const cplx> etas, double tolerance) {
  QuadratureCheck check;
  check.order = basis.spec().effective_quadrature_order();
  if (basis.spec().kind != BasisKind::harmonic_oscillator) {
    // closed-form elements; nothing to compare
    check.reference_order = check.order;
    check.passed = true;
    return check;
  }
  BasisSpec ref_spec = basis.spec();
  ref_spec.quadrature_order = (3 * check.order + 1) / 2;
  check.reference_order = ref_spec.quadrature_order;
  const BasisSet reference = build_basis(ref_spec);
  double worst = 0.0;
  for (cplx eta : etas) {
    const MatrixC a = potential_matrix(model, basis, eta);
    const MatrixC b = potential_matrix(model, reference, eta);
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / scale);
  }
  check.max_relative_change = worst;
  check.passed = worst < tolerance;
  return check;
}

QuadratureCheck quadrature_self_test(const ModelSpec& model, const BasisSet& basis) {
  const std::vector<cplx> etas{cplx(1.0, 0.0), std::polar(1.0, 0.3), std::polar(1.6, kMaxTheta)};
  return quadrature_self_test(model, basis, etas);
}

}  // namespace stabpade
