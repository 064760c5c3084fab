#pragma once

// Linear drive-line crosstalk: on-chip fields o = C(omega) i. Compensation
// solves for the inputs that produce a desired field pattern.

#include "qutrit/core.hpp"

#include <limits>
#include <string>

namespace qutrit {

struct CrosstalkMatrix {
  double frequency_ghz = 0.0;  // C is only meaningful at this drive frequency
  Matrix c;
};

inline constexpr double kMaxCrosstalkCondition = 1e8;

/// 2-norm condition number of C.
inline double condition_number(const Matrix& c) {
  Eigen::JacobiSVD<Matrix> svd(c);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) throw ValidationError("empty matrix");
  const double smin = sv(sv.size() - 1);
  return smin == 0.0 ? std::numeric_limits<double>::infinity() : sv(0) / smin;
}

/// Drive-line inputs i = C^{-1} desired.
inline Vector crosstalk_compensate(const CrosstalkMatrix& xt, const Vector& desired) {
  if (xt.c.rows() != xt.c.cols() || xt.c.rows() == 0) throw ValidationError("crosstalk matrix must be square");
  if (desired.size() != xt.c.rows()) throw ValidationError("desired field has wrong length");
  const double cond = condition_number(xt.c);
  if (!(cond <= kMaxCrosstalkCondition))
    throw NumericalError("crosstalk matrix is singular or ill-conditioned (condition number " + std::to_string(cond) + ")");
  return Eigen::PartialPivLU<Matrix>(xt.c).solve(desired);
}

}  // namespace qutrit
