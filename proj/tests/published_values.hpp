#pragma once

// Published device numbers, typed in by hand for tests that check against them.

#include "qutrit/schedule.hpp"

namespace published {

// Cross-Kerr coefficients, kHz: a11, a12, a21, a22.
inline qutrit::CrossKerrCoeffs q1q2() { return qutrit::CrossKerrCoeffs::from_khz(-279, 160, -528, -743); }
inline qutrit::CrossKerrCoeffs q2q3() { return qutrit::CrossKerrCoeffs::from_khz(-138, 158, -335, -342); }
inline qutrit::CrossKerrCoeffs q3q4() { return qutrit::CrossKerrCoeffs::from_khz(-276, -631, 243, -748); }
inline qutrit::CrossKerrCoeffs q4q5() { return qutrit::CrossKerrCoeffs::from_khz(-262, -495, -528, -708); }

inline qutrit::Couplings line_couplings() {
  qutrit::Couplings c;
  c.set(1, 2, q1q2());
  c.set(2, 3, q2q3());
  c.set(3, 4, q3q4());
  c.set(4, 5, q4q5());
  return c;
}

}  // namespace published
