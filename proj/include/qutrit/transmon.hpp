#pragma once

// Transmon charge dispersion and anharmonicity in the large E_J/E_C limit.

#include "qutrit/core.hpp"

#include <cmath>

namespace qutrit {

/// E_J and E_C in any common energy unit (results come back in that unit).
struct TransmonParams {
  double ej = 0.0;
  double ec = 0.0;

  static TransmonParams from_ratio(double ratio, double ec = 1.0) { return {ratio * ec, ec}; }
  double ratio() const { return ej / ec; }
};

/// epsilon_m ~ (-1)^m E_C 2^{4m+5}/m! sqrt(2/pi) (E_J/2E_C)^{m/2+3/4} e^{-sqrt(8 E_J/E_C)}.
inline double charge_dispersion(int m, const TransmonParams& p) {
  if (m < 0) throw ValidationError("level index must be nonnegative");
  if (!(p.ej > 0.0) || !(p.ec > 0.0)) throw ValidationError("E_J and E_C must be positive");
  if (!(p.ratio() > 1.0)) throw ValidationError("asymptotic formula needs E_J/E_C > 1");
  const double r = p.ratio();
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  const double log_mag = (4.0 * m + 5.0) * std::log(2.0) - std::lgamma(m + 1.0) + 0.5 * std::log(2.0 / kPi) +
                         (0.5 * m + 0.75) * std::log(r / 2.0) - std::sqrt(8.0 * r);
  return sign * p.ec * std::exp(log_mag);
}

/// alpha_r ~ -(8 E_J/E_C)^{-1/2}.
inline double relative_anharmonicity(const TransmonParams& p) {
  if (!(p.ej > 0.0) || !(p.ec > 0.0)) throw ValidationError("E_J and E_C must be positive");
  return -1.0 / std::sqrt(8.0 * p.ratio());
}

}  // namespace qutrit
