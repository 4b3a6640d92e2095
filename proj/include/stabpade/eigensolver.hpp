#pragma once

#include <optional>
#include <vector>

#include "stabpade/model.hpp"

namespace stabpade {

enum class EigenOrdering { by_real_part, by_tracking };

// Full spectrum of H v = E S v.  Vectors are columns, c-normalized so that
// v^T S v = 1 wherever that product is not vanishingly small (near a
// defective point it falls back to unit 2-norm).
struct EigenSet {
  std::vector<cplx> values;
  MatrixC vectors;
  EigenOrdering ordering = EigenOrdering::by_real_part;
};

// Complex-symmetric (generalized) eigenproblem.  The overlap is reduced by an
// unpivoted symmetric factorization S = L L^T (no conjugation) and the
// reduced matrix L^-1 H L^-T is diagonalized by a dense complex QR solver.
EigenSet eig(const MatrixC& H, const std::optional<MatrixC>& S = std::nullopt);
EigenSet eig(const ComplexMatrixPair& pair);

struct RealEigenSet {
  std::vector<double> values;  // ascending
  MatrixR vectors;             // v^T S v = 1
};

// Real symmetric specialization for theta = 0.
RealEigenSet eig_real(const MatrixR& H, const MatrixR* S = nullptr);
RealEigenSet eig_real(const ComplexMatrixPair& pair);

// Cholesky-like factor of a complex symmetric matrix, S = L L^T.
MatrixC symmetric_factor(const MatrixC& S);

// Ratio of extreme singular values.
double condition_estimate(const MatrixC& S);

// ||H v_k - E_k S v_k||_2 / ||H||_F, maximized over k.
double max_relative_residual(const MatrixC& H, const std::optional<MatrixC>& S, const EigenSet& set);

// Magnitude of the c-product v^T S w normalized by the c-norms
// sqrt|v^T S v| sqrt|w^T S w|, clamped to 1.  Distinct eigenvectors of a
// complex symmetric pencil are c-orthogonal, so this is ~1 for the same root
// and ~0 for others.
double overlap_magnitude(const VectorC& v, const VectorC& w, const std::optional<MatrixC>& S);

// Greedy maximum-overlap assignment of previous eigenvectors (columns) to
// current ones.  permutation[i] is the current column matched to previous
// column i; overlaps[i] is its magnitude; ties break toward lower indices.
struct OverlapMatching {
  std::vector<int> permutation;
  std::vector<double> overlaps;
  double worst = 1.0;
};
OverlapMatching match_by_overlap(const MatrixC& previous, const MatrixC& current,
                                 const std::optional<MatrixC>& S);

}  // namespace stabpade
