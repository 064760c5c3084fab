#pragma once

// Entangling-gate synthesis: cross-resonance conditional-pi, EPR preparation,
// cross-Kerr controlled-phase schedules and the decoupling variants.

#include "qutrit/core.hpp"
#include "qutrit/rotations.hpp"
#include "qutrit/schedule.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qutrit {

// ---------------------------------------------------------------------------
// Reference two-qutrit gates

/// U_CSUM = sum_n |n><n| (x) X^n (site 1 controls).
inline Matrix csum_unitary() {
  Matrix u = Matrix::Zero(9, 9);
  const Matrix x = shift_x();
  for (int n = 0; n < 3; ++n) {
    Matrix p = Matrix::Zero(3, 3);
    p(n, n) = 1.0;
    u += kron(p, matrix_power(x, n));
  }
  return u;
}

/// U_Cphi = sum_n |n><n| (x) Z^n.
inline Matrix cphase_unitary() {
  Matrix u = Matrix::Zero(9, 9);
  const Matrix z = clock_z();
  for (int n = 0; n < 3; ++n) {
    Matrix p = Matrix::Zero(3, 3);
    p(n, n) = 1.0;
    u += kron(p, matrix_power(z, n));
  }
  return u;
}

/// CSUM with the control on site 2.
inline Matrix csum_reversed_unitary() {
  const std::vector<int> swapped{2, 1};
  return embed(csum_unitary(), std::span<const int>(swapped), 2);
}

/// Swap of two qutrits.
inline Matrix swap_unitary() {
  Matrix u = Matrix::Zero(9, 9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) u(3 * b + a, 3 * a + b) = 1.0;
  return u;
}

/// Conditional-pi: the target's |0>,|1> swap when the control (site 1) is |1>.
inline Matrix conditional_pi() {
  Matrix u = Matrix::Zero(9, 9);
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < 3; ++t) {
      int out = t;
      if (c == 1 && t < 2) out = 1 - t;
      u(3 * c + out, 3 * c + t) = 1.0;
    }
  return u;
}

inline Vector epr_vector() {
  Vector v = Vector::Zero(9);
  for (int k = 0; k < 3; ++k) v(4 * k) = 1.0 / std::sqrt(3.0);
  return v;
}

inline PureState epr_state() { return PureState(Register{3, 2}, epr_vector()); }

// ---------------------------------------------------------------------------
// Cross-resonance

/// Conditional Rabi frequencies (rad/s) of the target's 01 transition for
/// control |0>,|1>,|2>, and the gate time in seconds.
struct CrossResonanceParams {
  double omega0 = 0.0, omega1 = 0.0, omega2 = 0.0;
  double t_gate = 125e-9;
};

/// H = sum_c (omega_c / 2) |c><c| (x) lambda_1, so omega_c is the angular Rabi
/// frequency of the target. An optional target drive adds a constant term
/// (theta / 2 t_g) s on the target, i.e. the given rotation if run alone.
inline Matrix cross_resonance_unitary(const CrossResonanceParams& p, const std::optional<SubspaceRotation>& target_drive = std::nullopt) {
  if (!(p.t_gate > 0.0)) throw ValidationError("cross-resonance gate time must be positive");
  if (!std::isfinite(p.omega0) || !std::isfinite(p.omega1) || !std::isfinite(p.omega2))
    throw ValidationError("cross-resonance frequencies must be finite");
  Matrix h = Matrix::Zero(9, 9);
  const std::array<double, 3> w{p.omega0, p.omega1, p.omega2};
  for (int c = 0; c < 3; ++c) {
    Matrix proj = Matrix::Zero(3, 3);
    proj(c, c) = 1.0;
    h += kron(proj, Matrix(0.5 * w[static_cast<std::size_t>(c)] * gell_mann(1)));
  }
  if (target_drive) {
    const auto& r = *target_drive;
    Matrix gen = subspace_generator(r.subspace, r.axis);
    if (r.axis != Axis::z) {
      const double phi = drive_phase(r);
      gen = std::cos(phi) * subspace_generator(r.subspace, Axis::x) + std::sin(phi) * subspace_generator(r.subspace, Axis::y);
    }
    h += kron(Matrix(Matrix::Identity(3, 3)), Matrix((r.angle / (2.0 * p.t_gate)) * gen));
  }
  return expm_hermitian(h, p.t_gate);
}

// ---------------------------------------------------------------------------
// EPR preparation

namespace detail {

/// Single-qutrit pulses that take |0> to (|0>+|1>+|2>)/sqrt(3).
inline void append_equal_superposition(PulseSchedule& s, int site) {
  const double theta = 2.0 * std::acos(1.0 / std::sqrt(3.0));
  s.pulse(site, SubspaceRotation{Subspace::s01, Axis::y, theta, 0.0});
  s.pulse(site, SubspaceRotation{Subspace::s12, Axis::y, kPi / 2.0, 0.0});
}

/// Appends z-rotations on `target` that equalise the phases of the |kk>
/// branches of the (control, target) pair, read off the simulated state.
inline void append_branch_phase_correction(PulseSchedule& s, const Couplings& cpl, int control, int target) {
  const Register reg{3, s.sites};
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(reg.dim()));
  psi(0) = 1.0;
  psi = simulate_state(s, cpl, psi);
  const std::vector<int> keep{control, target};
  const Matrix rho = partial_trace(psi * psi.adjoint(), std::span<const int>(keep), reg);
  // rho(kk, 00) = c_k conj(c_0): its argument is the branch phase relative to |00>.
  const double b1 = -std::arg(rho(4, 0));
  const double b2 = -std::arg(rho(8, 0));
  for (const auto& r : diagonal_phase_as_z(b1, b2)) s.pulse(target, r);
}

}  // namespace detail

/// Two-qutrit EPR preparation (site 1 control, site 2 target) from two
/// conditional-pi gates:
///   equal superposition on the control, CPi -> |00>+|11>+|20>,
///   pi12 on both -> |00>+|22>+|10>, CPi -> |00>+|11>+|22>,
/// followed by software z-corrections of the branch phases.
inline PulseSchedule epr_prep_schedule(double cpi_ns = 125.0) {
  PulseSchedule s{2, {}};
  detail::append_equal_superposition(s, 1);
  s.cond_pi({{1, 2}}, {}, cpi_ns);
  s.pulse(2, Permutation::pi12);
  s.pulse(1, Permutation::pi12);
  s.cond_pi({{1, 2}}, {}, cpi_ns);
  detail::append_branch_phase_correction(s, Couplings{}, 1, 2);
  return s;
}

/// Five-qutrit simultaneous EPR preparation on (2,3) and (4,5) with Q1 idle in
/// |0>. Pair A uses Q3 as control and Q2 as target; pair B uses Q4 as control
/// and Q5 as target. With `decoupled`, each conditional-pi window becomes three
/// 125 ns periods (the gates in the first) with an X on Q4 after every period,
/// which cancels the always-on Q3/Q4 coupling. Without it the windows are the
/// bare 125 ns gates.
inline PulseSchedule dd_epr_prep_schedule(const Couplings& cpl, bool decoupled = true, double period_ns = 125.0) {
  const std::vector<SitePair> all{{1, 2}, {2, 3}, {3, 4}, {4, 5}};
  for (const auto& p : all)
    if (!cpl.has(p.first, p.second))
      throw ValidationError("missing coupling for pair (" + std::to_string(p.first) + "," + std::to_string(p.second) + ")");
  PulseSchedule s{5, {}};
  detail::append_equal_superposition(s, 3);
  detail::append_equal_superposition(s, 4);
  auto window = [&]() {
    s.cond_pi({{3, 2}, {4, 5}}, {{1, 2}, {3, 4}}, period_ns);
    if (!decoupled) return;
    s.pulse(4, Permutation::shift);
    s.evolve(all, period_ns);
    s.pulse(4, Permutation::shift);
    s.evolve(all, period_ns);
    s.pulse(4, Permutation::shift);
  };
  window();
  s.pulse(2, Permutation::pi12);
  s.pulse(5, Permutation::pi12);
  s.pulse(3, Permutation::pi12);
  s.pulse(4, Permutation::pi12);
  window();
  detail::append_branch_phase_correction(s, cpl, 3, 2);
  detail::append_branch_phase_correction(s, cpl, 4, 5);
  return s;
}

/// <EPR| rho_pair |EPR> after running `s` from |0...0>.
inline double prepared_pair_fidelity(const PulseSchedule& s, const Couplings& cpl, int a, int b) {
  const Register reg{3, s.sites};
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(reg.dim()));
  psi(0) = 1.0;
  psi = simulate_state(s, cpl, psi);
  const std::vector<int> keep{a, b};
  const Matrix rho = partial_trace(psi * psi.adjoint(), std::span<const int>(keep), reg);
  const Vector e = epr_vector();
  return std::clamp((e.adjoint() * rho * e)(0, 0).real(), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Distances

/// ||U - (Da (x) Db) V||_F / ||V||_F minimised over single-qutrit diagonal
/// unitaries Da, Db acting on the left, for 9x9 operators.
/// Coordinate ascent from several starts; each step is an exact maximiser.
inline double distance_up_to_local_diagonal(const Matrix& u, const Matrix& v) {
  if (u.rows() != 9 || u.cols() != 9 || v.rows() != 9 || v.cols() != 9) throw ValidationError("two-qutrit operators expected");
  // c_r = sum_k conj(v_rk) u_rk; the overlap with D = e^{-i(a_m + b_n)} is sum_r c_r e^{i(a_m + b_n)}.
  std::array<cplx, 9> c{};
  for (int r = 0; r < 9; ++r) {
    cplx acc = 0.0;
    for (int k = 0; k < 9; ++k) acc += std::conj(v(r, k)) * u(r, k);
    c[static_cast<std::size_t>(r)] = acc;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (int start = 0; start < 9; ++start) {
    std::array<double, 3> a{}, b{0.0, 2.0 * kPi * (start / 3) / 3.0, 2.0 * kPi * (start % 3) / 3.0};
    double val = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      for (int m = 0; m < 3; ++m) {
        cplx s = 0.0;
        for (int n = 0; n < 3; ++n) s += c[static_cast<std::size_t>(3 * m + n)] * std::polar(1.0, b[static_cast<std::size_t>(n)]);
        a[static_cast<std::size_t>(m)] = std::abs(s) > 0.0 ? -std::arg(s) : 0.0;
      }
      for (int n = 0; n < 3; ++n) {
        cplx s = 0.0;
        for (int m = 0; m < 3; ++m) s += c[static_cast<std::size_t>(3 * m + n)] * std::polar(1.0, a[static_cast<std::size_t>(m)]);
        b[static_cast<std::size_t>(n)] = std::abs(s) > 0.0 ? -std::arg(s) : 0.0;
      }
      double nv = 0.0;
      for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n)
          nv += (c[static_cast<std::size_t>(3 * m + n)] * std::polar(1.0, a[static_cast<std::size_t>(m)] + b[static_cast<std::size_t>(n)])).real();
      if (iter > 0 && std::abs(nv - val) < 1e-15) {
        val = nv;
        break;
      }
      val = nv;
    }
    best = std::max(best, val);
  }
  // ||U - DV||^2 = ||U||^2 + ||V||^2 - 2 Re sum conj(DV) U, with phases chosen to maximise the overlap.
  const double d2 = u.squaredNorm() + v.squaredNorm() - 2.0 * best;
  return std::sqrt(std::max(0.0, d2)) / v.norm();
}

// ---------------------------------------------------------------------------
// Four-segment controlled-phase synthesis

/// Phases (rad) on |11>, |12>, |21>, |22>.
using PhaseTargets = std::array<double, 4>;

inline PhaseTargets cphase_targets() { return {2.0 * kPi / 3.0, -2.0 * kPi / 3.0, -2.0 * kPi / 3.0, 2.0 * kPi / 3.0}; }

/// Segment times in ns, (T_A, T_B, T_C, T_D).
struct FourSegmentTimes {
  std::array<double, 4> ns{};
  std::array<int, 4> branch{};
  double total_ns() const { return ns[0] + ns[1] + ns[2] + ns[3]; }
};

/// Rows |11>,|12>,|21>,|22>; columns segments A..D. In time order the
/// sequence is pi12(2), D, pi12(1), C, pi12(2), B, pi12(1), A, so each state
/// visits every coefficient exactly once.
inline Eigen::Matrix4d four_segment_transfer(const CrossKerrCoeffs& c) {
  Eigen::Matrix4d m;
  m << c.a11, c.a21, c.a22, c.a12,
       c.a12, c.a22, c.a21, c.a11,
       c.a21, c.a11, c.a12, c.a22,
       c.a22, c.a12, c.a11, c.a21;
  return m;
}

/// Phase acquired is -M T; solves M T = -phi + 2 pi k over k in [-3,3]^4,
/// keeps nonnegative solutions and returns the shortest.
inline FourSegmentTimes solve_four_segment(const CrossKerrCoeffs& c, const PhaseTargets& target) {
  if (!c.finite()) throw ValidationError("non-finite cross-Kerr coefficients");
  for (double t : target)
    if (!std::isfinite(t)) throw ValidationError("non-finite target phase");
  const Eigen::Matrix4d m = four_segment_transfer(c);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(3) / sv(0) < 1e-12) throw NumericalError("four-segment transfer matrix is singular");
  const Eigen::PartialPivLU<Eigen::Matrix4d> lu(m);

  constexpr double kTol = 1e-15;  // seconds; tolerated rounding below zero
  FourSegmentTimes best;
  double best_total = std::numeric_limits<double>::infinity();
  for (int k0 = -3; k0 <= 3; ++k0)
    for (int k1 = -3; k1 <= 3; ++k1)
      for (int k2 = -3; k2 <= 3; ++k2)
        for (int k3 = -3; k3 <= 3; ++k3) {
          const std::array<int, 4> k{k0, k1, k2, k3};
          Eigen::Vector4d rhs;
          for (int i = 0; i < 4; ++i) rhs(i) = -target[static_cast<std::size_t>(i)] + 2.0 * kPi * k[static_cast<std::size_t>(i)];
          const Eigen::Vector4d t = lu.solve(rhs);
          if ((t.array() < -kTol).any()) continue;
          const double total = t.sum();
          if (total < best_total - 1e-18) {
            best_total = total;
            for (int i = 0; i < 4; ++i) best.ns[static_cast<std::size_t>(i)] = std::max(0.0, t(i)) * 1e9;
            best.branch = k;
          }
        }
  if (!std::isfinite(best_total)) throw NumericalError("no nonnegative segment times in the searched 2pi branches");
  return best;
}

/// Four-segment schedule on sites (a, b) of an n-site register.
inline PulseSchedule four_segment_schedule(const FourSegmentTimes& t, int a = 1, int b = 2, int n = 2) {
  PulseSchedule s{n, {}};
  const std::vector<SitePair> pair{{a, b}};
  s.pulse(b, Permutation::pi12).evolve(pair, t.ns[3]);
  s.pulse(a, Permutation::pi12).evolve(pair, t.ns[2]);
  s.pulse(b, Permutation::pi12).evolve(pair, t.ns[1]);
  s.pulse(a, Permutation::pi12).evolve(pair, t.ns[0]);
  return s;
}

inline Couplings single_pair(const CrossKerrCoeffs& c, int a = 1, int b = 2) {
  Couplings out;
  out.set(a, b, c);
  return out;
}

/// Diagonal phases of a two-qutrit unitary relative to |00>, for |11>,|12>,|21>,|22>,
/// plus the largest relative phase magnitude among the other five states.
struct DiagonalPhaseReport {
  PhaseTargets phases{};
  double other_max = 0.0;
  double offdiag_max = 0.0;
};

inline DiagonalPhaseReport diagonal_phases(const Matrix& u) {
  DiagonalPhaseReport r;
  const cplx ref = u(0, 0);
  const std::array<int, 4> idx{4, 5, 7, 8};
  for (std::size_t k = 0; k < 4; ++k) r.phases[k] = std::arg(u(idx[k], idx[k]) / ref);
  for (int label : {1, 2, 3, 6}) r.other_max = std::max(r.other_max, std::abs(std::arg(u(label, label) / ref)));
  Matrix off = u;
  off.diagonal().setZero();
  r.offdiag_max = off.cwiseAbs().maxCoeff();
  return r;
}

/// Largest |phase - target| reduced to (-pi, pi].
inline double phase_residual(const PhaseTargets& got, const PhaseTargets& want) {
  double worst = 0.0;
  for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(std::remainder(got[k] - want[k], 2.0 * kPi)));
  return worst;
}

// ---------------------------------------------------------------------------
// Six-segment decoupled synthesis

/// Three repetitions of [pi01 (x) pi01, ZZ_T, pi12 (x) pi12, ZZ_T] in time
/// order. Every computational state spends one segment under each label pair,
/// so the net gate is diag(e^{-iTA}) on |ii> and diag(e^{-iTB}) on |ij>, i != j,
/// with A = 2(a11 + a22) and B = a12 + a21.
inline PulseSchedule six_segment_schedule(double t_ns, int a = 1, int b = 2, int n = 2) {
  if (!(t_ns >= 0.0)) throw ValidationError("segment duration must be nonnegative");
  PulseSchedule s{n, {}};
  const std::vector<SitePair> pair{{a, b}};
  for (int rep = 0; rep < 3; ++rep) {
    s.pulse(a, Permutation::pi01).pulse(b, Permutation::pi01).evolve(pair, t_ns);
    s.pulse(a, Permutation::pi12).pulse(b, Permutation::pi12).evolve(pair, t_ns);
  }
  return s;
}

enum class PhaseOrientation { cphase, cphase_conj };

inline std::string_view to_string(PhaseOrientation o) { return o == PhaseOrientation::cphase ? "cphase" : "cphase_conj"; }

struct SixSegmentScan {
  double t_ns = 0.0;
  double distance = 0.0;
  PhaseOrientation orientation = PhaseOrientation::cphase;
};

/// Grid search (step ns over [lo, hi]) for the segment time whose gate is
/// closest, up to local diagonal phases, to U_Cphi or its conjugate. Ties go to
/// the smaller T.
inline SixSegmentScan scan_six_segment(const CrossKerrCoeffs& c, double lo_ns = 0.0, double hi_ns = 1000.0, double step_ns = 1.0) {
  if (!(step_ns > 0.0) || hi_ns < lo_ns || lo_ns < 0.0) throw ValidationError("invalid scan grid");
  const Matrix target = cphase_unitary();
  const Matrix target_conj = target.conjugate();
  const Couplings cpl = single_pair(c);
  SixSegmentScan best{0.0, std::numeric_limits<double>::infinity(), PhaseOrientation::cphase};
  const auto steps = static_cast<long>(std::floor((hi_ns - lo_ns) / step_ns + 1e-9));
  for (long i = 0; i <= steps; ++i) {
    const double t = lo_ns + static_cast<double>(i) * step_ns;
    const Matrix u = simulate(six_segment_schedule(t), cpl);
    const double d1 = distance_up_to_local_diagonal(u, target);
    const double d2 = distance_up_to_local_diagonal(u, target_conj);
    const double d = std::min(d1, d2);
    if (d < best.distance - 1e-14) best = {t, d, d1 <= d2 ? PhaseOrientation::cphase : PhaseOrientation::cphase_conj};
  }
  return best;
}

/// Distance of the six-segment gate at T to the controlled-phase class.
inline double six_segment_distance(const CrossKerrCoeffs& c, double t_ns) {
  const Matrix u = simulate(six_segment_schedule(t_ns), single_pair(c));
  const Matrix target = cphase_unitary();
  return std::min(distance_up_to_local_diagonal(u, target), distance_up_to_local_diagonal(u, target.conjugate()));
}

// ---------------------------------------------------------------------------
// Parallel pairs and idle decoupling

enum class ParallelDecoupling {
  none,              // both pairs run the same pulse order
  order_reversal,    // pair B runs pi12 before pi01
  reversal_cycling,  // reversal plus X (x) X cycling of pair B in thirds of each segment
};

/// Six-segment gates on pairs A = (1,2) and B = (3,4) of a four-qutrit line,
/// run simultaneously with the (2,3) coupling on throughout.
inline PulseSchedule parallel_pair_schedule(double t_ns, ParallelDecoupling mode = ParallelDecoupling::reversal_cycling) {
  if (!(t_ns >= 0.0)) throw ValidationError("segment duration must be nonnegative");
  PulseSchedule s{4, {}};
  const std::vector<SitePair> all{{1, 2}, {2, 3}, {3, 4}};
  const bool reverse = mode != ParallelDecoupling::none;
  const bool cycle = mode == ParallelDecoupling::reversal_cycling;
  auto segment = [&]() {
    if (!cycle) {
      s.evolve(all, t_ns);
      return;
    }
    for (int k = 0; k < 3; ++k) {
      s.evolve(all, t_ns / 3.0);
      s.pulse(3, Permutation::shift).pulse(4, Permutation::shift);
    }
  };
  for (int rep = 0; rep < 3; ++rep) {
    const Permutation first_b = reverse ? Permutation::pi12 : Permutation::pi01;
    const Permutation second_b = reverse ? Permutation::pi01 : Permutation::pi12;
    s.pulse(1, Permutation::pi01).pulse(2, Permutation::pi01).pulse(3, first_b).pulse(4, first_b);
    segment();
    s.pulse(1, Permutation::pi12).pulse(2, Permutation::pi12).pulse(3, second_b).pulse(4, second_b);
    segment();
  }
  return s;
}

/// Three periods of T/3 with an X on `site` before each, on a two-qutrit
/// register coupled through (1,2). The coupling averages over every label of
/// the decoupled qutrit, leaving only phases on the other one.
inline PulseSchedule idle_decoupling_schedule(double t_ns, int site = 2) {
  if (!(t_ns >= 0.0)) throw ValidationError("duration must be nonnegative");
  if (site != 1 && site != 2) throw ValidationError("decoupled site must be 1 or 2");
  PulseSchedule s{2, {}};
  for (int k = 0; k < 3; ++k) s.pulse(site, Permutation::shift).evolve({{1, 2}}, t_ns / 3.0);
  return s;
}

/// Phase -arg of the idle-decoupled gate for label i of the undecoupled qutrit:
/// (T/3) sum_c alpha_{ic}.
inline std::array<double, 3> idle_decoupling_phases(const CrossKerrCoeffs& c, double t_ns, int site = 2) {
  const double t = t_ns * 1e-9 / 3.0;
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += site == 2 ? c.rate(i, k) : c.rate(k, i);
    out[static_cast<std::size_t>(i)] = t * s;
  }
  return out;
}

}  // namespace qutrit
