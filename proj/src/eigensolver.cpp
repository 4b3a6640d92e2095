#include "stabpade/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stabpade/errors.hpp"

namespace stabpade {

namespace {

constexpr double kMaxCondition = 1e12;

bool is_real(const MatrixC& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; }

void normalize_columns(MatrixC& vectors, const std::optional<MatrixC>& S) {
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    auto v = vectors.col(k);
    const cplx cprod = S ? (v.transpose() * (*S) * v)(0, 0) : v.transpose() * v;
    const double norm2 = v.squaredNorm();
    if (std::abs(cprod) > 1e-8 * norm2) {
      v /= std::sqrt(cprod);
    } else {
      v /= std::sqrt(norm2);
    }
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v[big].real() < 0.0) v = -v;
  }
}

}  // namespace

MatrixC symmetric_factor(const MatrixC& S) {
  const Eigen::Index n = S.rows();
  MatrixC L = MatrixC::Zero(n, n);
  const double scale = S.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < n; ++j) {
    cplx d = S(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(std::abs(d) > 1e-14 * scale)) {
      std::ostringstream os;
      os << "symmetric factorization broke down at pivot " << j;
      throw NumericError(os.str());
    }
    L(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      cplx s = S(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

double condition_estimate(const MatrixC& S) {
  if (is_real(S)) {
    Eigen::JacobiSVD<MatrixR> svd(S.real());
    const auto& sv = svd.singularValues();
    return sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
  }
  Eigen::JacobiSVD<MatrixC> svd(S);
  const auto& sv = svd.singularValues();
  return sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
}

EigenSet eig(const MatrixC& H, const std::optional<MatrixC>& S) {
  const Eigen::Index n = H.rows();
  if (H.cols() != n) throw ValidationError("H", "matrix must be square");
  if (S && (S->rows() != n || S->cols() != n))
    throw ValidationError("S", "overlap dimension mismatch");

  MatrixC reduced;
  MatrixC L;
  if (S) {
    const double cond = condition_estimate(*S);
    if (!(cond < kMaxCondition)) throw IllConditionedOverlapError(cond);
    L = symmetric_factor(*S);
    const MatrixC x = L.triangularView<Eigen::Lower>().solve(H);
    reduced = L.triangularView<Eigen::Lower>().solve(x.transpose()).transpose();
    reduced = (0.5 * (reduced + reduced.transpose())).eval();
  } else {
    reduced = H;
  }

  Eigen::ComplexEigenSolver<MatrixC> solver;
  solver.setMaxIterations(60 * std::max<Eigen::Index>(n, 1));
  solver.compute(reduced, true);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "complex eigensolver did not converge (n = " << n
       << ", iteration cap = " << 60 * n << ")";
    throw NumericError(os.str());
  }

  MatrixC vectors = solver.eigenvectors();
  if (S) vectors = L.transpose().triangularView<Eigen::Upper>().solve(vectors).eval();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (ev[a].real() != ev[b].real()) return ev[a].real() < ev[b].real();
    return ev[a].imag() < ev[b].imag();
  });

  EigenSet set;
  set.values.resize(n);
  set.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    set.values[k] = ev[order[k]];
    set.vectors.col(k) = vectors.col(order[k]);
  }
  normalize_columns(set.vectors, S);
  return set;
}

EigenSet eig(const ComplexMatrixPair& pair) { return eig(pair.H, pair.S); }

RealEigenSet eig_real(const MatrixR& H, const MatrixR* S) {
  RealEigenSet out;
  if (S) {
    const double cond = condition_estimate(S->cast<cplx>());
    if (!(cond < kMaxCondition)) throw IllConditionedOverlapError(cond);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixR> solver(H, *S);
    if (solver.info() != Eigen::Success) throw NumericError("generalized symmetric eigensolver failed");
    out.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + H.rows());
    out.vectors = solver.eigenvectors();
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixR> solver(H);
    if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
    out.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + H.rows());
    out.vectors = solver.eigenvectors();
  }
  for (Eigen::Index k = 0; k < out.vectors.cols(); ++k) {
    auto v = out.vectors.col(k);
    const double n2 = S ? (v.transpose() * (*S) * v)(0, 0) : v.squaredNorm();
    v /= std::sqrt(n2);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v[big] < 0.0) v = -v;
  }
  return out;
}

RealEigenSet eig_real(const ComplexMatrixPair& pair) {
  if (!is_real(pair.H)) throw ValidationError("H", "real solver requires a real matrix (theta = 0)");
  if (pair.S) {
    const MatrixR s = pair.S->real();
    return eig_real(pair.H.real(), &s);
  }
  return eig_real(pair.H.real(), nullptr);
}

double max_relative_residual(const MatrixC& H, const std::optional<MatrixC>& S, const EigenSet& set) {
  const double hnorm = std::max(H.norm(), 1e-300);
  double worst = 0.0;
  for (std::size_t k = 0; k < set.values.size(); ++k) {
    const VectorC v = set.vectors.col(static_cast<Eigen::Index>(k));
    const VectorC sv = S ? VectorC(*S * v) : v;
    const double r = (H * v - set.values[k] * sv).norm() / (hnorm * v.norm());
    worst = std::max(worst, r);
  }
  return worst;
}

double overlap_magnitude(const VectorC& v, const VectorC& w, const std::optional<MatrixC>& S) {
  const VectorC sw = S ? VectorC(*S * w) : w;
  const VectorC sv = S ? VectorC(*S * v) : v;
  // Hermitian product: bounded by 1, unlike the c-product of complex vectors
  const double c = std::abs(cplx(v.adjoint() * sw));
  const double nv = std::abs(cplx(v.adjoint() * sv));
  const double nw = std::abs(cplx(w.adjoint() * sw));
  return std::min(1.0, c / std::sqrt(std::max(nv * nw, 1e-300)));
}

OverlapMatching match_by_overlap(const MatrixC& previous, const MatrixC& current,
                                 const std::optional<MatrixC>& S) {
  const Eigen::Index np = previous.cols();
  const Eigen::Index nc = current.cols();
  if (np > nc) throw ValidationError("previous", "more tracked roots than available roots");

  MatrixC sc = S ? MatrixC(*S * current) : current;
  MatrixR overlap = (previous.adjoint() * sc).cwiseAbs();
  VectorR pn(np), cn(nc);
  for (Eigen::Index i = 0; i < np; ++i) {
    const VectorC v = previous.col(i);
    pn[i] = std::sqrt(std::abs(cplx(v.adjoint() * (S ? VectorC(*S * v) : v))));
  }
  for (Eigen::Index j = 0; j < nc; ++j) {
    const VectorC w = current.col(j);
    cn[j] = std::sqrt(std::abs(cplx(w.adjoint() * sc.col(j))));
  }
  for (Eigen::Index i = 0; i < np; ++i)
    for (Eigen::Index j = 0; j < nc; ++j)
      overlap(i, j) = std::min(1.0, overlap(i, j) / std::max(pn[i] * cn[j], 1e-300));

  OverlapMatching m;
  m.permutation.assign(np, -1);
  m.overlaps.assign(np, 0.0);
  std::vector<bool> row_used(np, false), col_used(nc, false);
  for (Eigen::Index step = 0; step < np; ++step) {
    double best = -1.0;
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index i = 0; i < np; ++i) {
      if (row_used[i]) continue;
      for (Eigen::Index j = 0; j < nc; ++j) {
        if (col_used[j]) continue;
        if (overlap(i, j) > best) {
          best = overlap(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    row_used[bi] = true;
    col_used[bj] = true;
    m.permutation[bi] = static_cast<int>(bj);
    m.overlaps[bi] = best;
  }
  m.worst = np == 0 ? 1.0 : *std::min_element(m.overlaps.begin(), m.overlaps.end());
  return m;
}

}  // namespace stabpade
