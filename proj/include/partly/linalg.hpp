#pragma once

#include "partly/common.hpp"

#include <optional>

namespace partly::linalg {

// Inverse of a symmetric positive definite matrix, or nullopt when the
// smallest eigenvalue is nonpositive or the condition number exceeds
// `max_condition`.
std::optional<Matrix> guarded_inverse(const Matrix& a,
                                      double max_condition = kMaxCondition);

// Same as guarded_inverse but throws RankError tagged with `time`.
Matrix inverse_or_throw(const Matrix& a, double time, const std::string& what);

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

struct PsdRepair {
  Matrix matrix;
  double min_eigenvalue = 0.0;
  bool clipped = false;  // any negative eigenvalue was floored
  bool logged = false;   // |min eigenvalue| > 1e-8 * trace
};

// Symmetrizes, then floors negative eigenvalues at zero.
PsdRepair repair_psd(const Matrix& a);

struct PseudoInverse {
  Matrix matrix;
  Index rank = 0;
};

// Moore-Penrose inverse of a symmetric matrix; eigenvalues below
// rel_tol * max|eigenvalue| are treated as zero.
PseudoInverse pseudo_inverse(const Matrix& a, double rel_tol = 1e-10);

// Schur complement A11 - A12 A22^{-1} A21 for the leading `p` rows/columns.
Matrix schur_leading(const Matrix& a, Index p, double time);

}  // namespace partly::linalg
