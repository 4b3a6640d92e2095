#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stabpade {

using cplx = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using MatrixR = Eigen::MatrixXd;
using VectorC = Eigen::VectorXcd;
using VectorR = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMaxTheta = kPi / 4.0;

enum class PotentialFamily { gaussian_well_barrier, custom_polynomial_gaussian };

std::string to_string(PotentialFamily family);
PotentialFamily potential_family_from_string(const std::string& name);

// One-dimensional model Hamiltonian  H = -hbar^2/(2 mass) d^2/dx^2 + V(x).
//
// gaussian_well_barrier, parameters {J, lambda}:
//     V(x) = (x^2/2 - J) exp(-lambda x^2) + J
// custom_polynomial_gaussian, parameters {gamma, offset, c0, c1, ..., cK}:
//     V(x) = offset + exp(-gamma x^2) * sum_k c_k x^k
//
// Both are entire functions of x, so V(eta x) exists for every complex eta.
struct ModelSpec {
  PotentialFamily family = PotentialFamily::gaussian_well_barrier;
  std::vector<double> parameters{0.8, 0.1};
  double mass = 1.0;
  double hbar = 1.0;

  void validate() const;

  // Parameters rewritten in the custom_polynomial_gaussian layout.
  struct PolyGaussian {
    double gamma = 0.0;
    double offset = 0.0;
    std::vector<double> coefficients;
  };
  PolyGaussian canonical() const;

  cplx potential(cplx x) const;

  // Asymptotic value of V when the polynomial part is damped (gamma > 0).
  std::optional<double> threshold() const;

  bool operator==(const ModelSpec&) const = default;
};

ModelSpec benchmark_model();      // J = 0.8, lambda = 0.1
ModelSpec harmonic_model();       // V = x^2/2
ModelSpec free_particle_model();  // V = 0

enum class BasisKind { harmonic_oscillator, even_tempered_gaussian };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

struct BasisSpec {
  BasisKind kind = BasisKind::harmonic_oscillator;
  int size = 60;
  double width = 1.0;          // harmonic_oscillator: omega
  double base_exponent = 0.0;  // even_tempered_gaussian: beta_0
  double ratio = 0.0;          // even_tempered_gaussian: s
  int quadrature_order = 0;    // 0 selects default_quadrature_order()

  void validate() const;
  int effective_quadrature_order() const;

  bool operator==(const BasisSpec&) const = default;
};

BasisSpec ho_basis(int size, double omega = 1.0, int quadrature_order = 0);
BasisSpec even_tempered_basis(int size, double beta0, double ratio);

// Immutable basis descriptor.  Kinetic and overlap matrices are stored for
// hbar^2/mass = 1; scaled_matrices rescales by the model's hbar^2/mass.
//
// harmonic_oscillator: phi_n(x) = omega^{1/4} h_n(sqrt(omega) x), h_n the
//   normalized Hermite functions; orthonormal, so the overlap is the identity.
// even_tempered_gaussian: phi_k(x) = (2 beta_k/pi)^{1/4} exp(-beta_k x^2),
//   beta_k = beta_0 s^k.  Only even functions, so only the even-parity
//   sector of a symmetric potential is represented.
class BasisSet {
 public:
  const BasisSpec& spec() const noexcept { return spec_; }
  int size() const noexcept { return spec_.size; }
  bool orthonormal() const noexcept { return spec_.kind == BasisKind::harmonic_oscillator; }

  const std::vector<double>& norms() const noexcept { return norms_; }
  const std::vector<double>& exponents() const noexcept { return exponents_; }
  const MatrixR& kinetic() const noexcept { return kinetic_; }
  const MatrixR& overlap() const noexcept { return overlap_; }

  // Quadrature data (harmonic_oscillator only).  Nodes are in the
  // dimensionless coordinate y = sqrt(omega) x; weights already absorb the
  // Gaussian factor, so  int f(y) dy ~ sum_i weight_i f(y_i)  with f
  // containing the exp(-y^2) of the basis product.
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const MatrixR& values() const noexcept { return values_; }  // N x Q, h_n(y_i)

 private:
  friend BasisSet build_basis(const BasisSpec& spec);
  BasisSpec spec_;
  std::vector<double> norms_;
  std::vector<double> exponents_;
  MatrixR kinetic_;
  MatrixR overlap_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  MatrixR values_;
};

BasisSet build_basis(const BasisSpec& spec);

// Gauss-Hermite rule for weight exp(-y^2); nodes ascending.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;         // classical weights w_i
  std::vector<double> scaled_weights;  // w_i exp(y_i^2)
};
GaussHermiteRule gauss_hermite(int order);

// Normalized Hermite functions h_0..h_{count-1} at y (including exp(-y^2/2)).
std::vector<double> hermite_functions(int count, double y);

// eta = alpha exp(i theta).
struct ScalingParameter {
  double alpha = 1.0;
  double theta = 0.0;

  cplx eta() const { return std::polar(alpha, theta); }
  static ScalingParameter from_eta(cplx eta) { return {std::abs(eta), std::arg(eta)}; }
  // Rejects alpha <= 0 and theta outside [0, pi/4].
  void validate() const;

  bool operator==(const ScalingParameter&) const = default;
};

struct ComplexMatrixPair {
  MatrixC H;
  std::optional<MatrixC> S;  // empty means identity

  bool overlap_is_identity() const noexcept { return !S.has_value(); }
};

// H(eta) = eta^-2 T + V(eta), S(eta) = S, in the fixed (unscaled) basis.
ComplexMatrixPair scaled_matrices(const ModelSpec& model, const BasisSet& basis,
                                  const ScalingParameter& eta);
// Unvalidated complex-eta entry point for analytic work near the real axis.
ComplexMatrixPair scaled_matrices(const ModelSpec& model, const BasisSet& basis, cplx eta);

// Potential matrix alone, V_mn(eta) = <phi_m| V(eta x) |phi_n>.
MatrixC potential_matrix(const ModelSpec& model, const BasisSet& basis, cplx eta);

struct QuadratureCheck {
  int order = 0;
  int reference_order = 0;
  double max_relative_change = 0.0;
  bool passed = false;
};

// Compares potential matrices at quadrature_order and 1.5x that order for
// each eta; change is measured relative to the largest element magnitude.
QuadratureCheck quadrature_self_test(const ModelSpec& model, const BasisSet& basis,
                                     std::span<const cplx> etas, double tolerance = 1e-12);
QuadratureCheck quadrature_self_test(const ModelSpec& model, const BasisSet& basis);

}  // namespace stabpade
