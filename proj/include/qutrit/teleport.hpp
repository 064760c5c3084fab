#pragma once

// Five-qutrit scrambling-based teleportation (Q1 -> Q5), exact density-matrix
// simulation with lifetime noise and readout error, plus a shot mode that
// reconstructs the heralded output by tomography.

#include "qutrit/device_config.hpp"
#include "qutrit/noise.hpp"
#include "qutrit/readout.hpp"
#include "qutrit/scrambling.hpp"
#include "qutrit/synthesis.hpp"
#include "qutrit/tomography.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qutrit {

inline constexpr int kTeleportSites = 5;

/// Ideal EPR preparation on (control, target): Hadamard on the control then
/// CSUM, taking |00> to (|00>+|11>+|22>)/sqrt3.
inline Matrix epr_prep_unitary() { return csum_unitary() * kron(qudit_hadamard(), Matrix::Identity(3, 3)); }

/// Segment durations of the protocol, ns.
struct TeleportTiming {
  double epr_ns = 750.0;        // dynamically decoupled simultaneous prep
  double scrambler_ns = 3000.0;  // two controlled-SUMs, U and U* in parallel
  double unprep_ns = 250.0;     // reversed EPR prep on (Q2, Q3)

  /// EPR windows from the DD schedule; scrambler from the four-segment
  /// controlled-phase solutions on Q1/Q2 (U) and Q3/Q4 (U*, conjugate targets).
  static TeleportTiming from_config(const DeviceConfig& cfg) {
    TeleportTiming t;
    t.epr_ns = dd_epr_prep_schedule(cfg.couplings).total_duration_ns();
    t.unprep_ns = epr_prep_schedule().total_duration_ns();
    const PhaseTargets phi = cphase_targets();
    const PhaseTargets conj{-phi[0], -phi[1], -phi[2], -phi[3]};
    const double u = solve_four_segment(cfg.couplings.get(1, 2), phi).total_ns();
    const double ustar = solve_four_segment(cfg.couplings.get(3, 4), conj).total_ns();
    t.scrambler_ns = 2.0 * std::max(u, ustar);
    return t;
  }
};

struct NoiseToggles {
  bool amplitude = true;
  bool dephasing = true;
  bool readout = true;
};

struct TeleportNoise {
  DeviceConfig config;
  double scale = 1.0;  // multiplies every 1/T1 and 1/T2; 0 is noiseless
  NoiseToggles on;
};

struct TeleportSetup {
  ScramblerKind scrambler = ScramblerKind::maximally_scrambling;
  std::optional<TeleportNoise> noise;
  TeleportTiming timing;
  std::optional<Matrix> unitary_override;  // any two-qutrit U in place of the scrambler

  /// Timing follows the config when noise is given.
  static TeleportSetup make(ScramblerKind k, std::optional<TeleportNoise> noise = std::nullopt) {
    TeleportSetup s{k, std::move(noise), {}, std::nullopt};
    if (s.noise) s.timing = TeleportTiming::from_config(s.noise->config);
    return s;
  }
};

namespace detail {

inline QuantumChannel site_noise(const QutritLifetimes& q, double t_s, const NoiseToggles& on) {
  QuantumChannel ch = QuantumChannel::identity(3);
  if (t_s <= 0.0) return ch;
  if (on.amplitude) ch = compose(ch, amplitude_damping_channel(t_s, q.t1_10, q.t1_21));
  if (on.dephasing) ch = compose(ch, dephasing_channel(t_s, q.t2_01, q.t2_12, q.t2_02));
  return ch;
}

/// Idle noise on every qutrit for `ns`.
inline void idle_all(const TeleportSetup& s, double ns, const Register& reg, Matrix& rho) {
  if (!s.noise || s.noise->scale == 0.0 || ns <= 0.0) return;
  if (!(s.noise->scale > 0.0)) throw ValidationError("noise scale must be nonnegative");
  for (int site = 1; site <= reg.sites; ++site) {
    const auto ch = site_noise(s.noise->config.lifetimes(site), ns * 1e-9 * s.noise->scale, s.noise->on);
    const int sites[] = {site};
    apply_channel_in_place(ch, sites, reg, rho);
  }
}

inline void gate(const Matrix& u, std::initializer_list<int> sites, const Register& reg, Matrix& rho) {
  const std::vector<int> v(sites);
  conjugate_in_place(u, v, reg, rho);
}

}  // namespace detail

/// Five-qutrit state just before readout, for input rho_in on Q1.
/// EPR pairs on (Q2,Q3) and (Q4,Q5); U on (Q1,Q2) and U* on (Q4,Q3) (Q4 in
/// the slot Q1 occupies, mirroring through the EPR pairs); reversed prep on
/// (Q2,Q3). Each gate layer sits between two half-length idle segments.
inline Matrix teleport_final_state(const TeleportSetup& s, const Matrix& rho_in) {
  if (rho_in.rows() != 3 || rho_in.cols() != 3) throw ValidationError("teleportation input must be a single-qutrit state");
  const Register reg{3, kTeleportSites};
  Matrix zero4 = Matrix::Zero(81, 81);
  zero4(0, 0) = 1.0;
  Matrix rho = kron(rho_in, zero4);

  const Matrix prep = epr_prep_unitary();
  const Matrix u = s.unitary_override ? *s.unitary_override : scrambler_unitary(s.scrambler);
  const Matrix ustar = conjugate_unitary(u);
  const auto& t = s.timing;

  detail::idle_all(s, t.epr_ns / 2, reg, rho);
  detail::gate(prep, {2, 3}, reg, rho);
  detail::gate(prep, {4, 5}, reg, rho);
  detail::idle_all(s, t.epr_ns / 2, reg, rho);

  detail::idle_all(s, t.scrambler_ns / 2, reg, rho);
  detail::gate(u, {1, 2}, reg, rho);
  detail::gate(ustar, {4, 3}, reg, rho);
  detail::idle_all(s, t.scrambler_ns / 2, reg, rho);

  detail::idle_all(s, t.unprep_ns / 2, reg, rho);
  detail::gate(prep.adjoint(), {2, 3}, reg, rho);
  detail::idle_all(s, t.unprep_ns / 2, reg, rho);
  return rho;
}

namespace detail {

inline std::vector<Confusion> readout_matrices(const TeleportSetup& s, std::initializer_list<int> sites) {
  std::vector<Confusion> out;
  for (int site : sites)
    out.push_back(s.noise && s.noise->on.readout && s.noise->scale > 0.0 ? s.noise->config.qutrit(site).confusion : Confusion::Identity());
  return out;
}

/// Q5 block weighted by the probability of reading (Q2,Q3) = (0,0).
inline Matrix herald_q5(const Matrix& rho235, const Confusion& m2, const Confusion& m3) {
  Matrix out = Matrix::Zero(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double w = m2(0, a) * m3(0, b);
      if (w == 0.0) continue;
      const Eigen::Index off = 9 * a + 3 * b;
      out += w * rho235.block(off, off, 3, 3);
    }
  return out;
}

}  // namespace detail

/// Unnormalised heralded output on Q5; its trace is the herald probability.
/// Linear in rho_in.
inline Matrix heralded_output(const TeleportSetup& s, const Matrix& rho_in) {
  const Register reg{3, kTeleportSites};
  const Matrix rho = teleport_final_state(s, rho_in);
  const Matrix r235 = partial_trace(rho, {2, 3, 5}, reg);
  const auto ms = detail::readout_matrices(s, {2, 3});
  return detail::herald_q5(r235, ms[0], ms[1]);
}

struct TeleportationOutcome {
  std::string label;
  double herald_prob = 0.0;
  Matrix rho_out;  // normalised heralded state of Q5
  double fidelity = 0.0;
};

struct ShotOptions {
  std::uint64_t shots = 10000;  // per tomography setting
  std::uint64_t seed = 0;
};

/// Exact mode when `shots` is empty; otherwise four MUB settings on Q5,
/// `shots` each, with readout-corrected state tomography of the heralded
/// counts. Streams are keyed by (seed, 4 * index + setting).
inline TeleportationOutcome run_teleportation(const TeleportSetup& s, const DesignState& input, const std::optional<ShotOptions>& shots = std::nullopt,
                                              std::uint64_t index = 0) {
  TeleportationOutcome out;
  out.label = input.label;
  const Vector& psi = input.state.amplitudes();
  if (psi.size() != 3) throw ValidationError("teleportation input must be a single qutrit");
  if (!shots) {
    const Matrix h = heralded_output(s, input.state.projector());
    out.herald_prob = std::clamp(h.trace().real(), 0.0, 1.0);
    if (!(out.herald_prob > 0.0)) throw NumericalError("herald probability is zero");
    out.rho_out = h / h.trace().real();
  } else {
    if (shots->shots == 0) throw ValidationError("shot mode needs shots > 0");
    const Register reg{3, kTeleportSites};
    const Matrix r235 = partial_trace(teleport_final_state(s, input.state.projector()), {2, 3, 5}, reg);
    const auto ms = detail::readout_matrices(s, {2, 3, 5});
    const auto settings = all_settings(1);
    std::vector<TomographyRecord> recs;
    std::uint64_t heralded = 0, total = 0;
    for (std::size_t k = 0; k < settings.size(); ++k) {
      const Matrix rot = kron(Matrix::Identity(9, 9), settings[k].pre_rotation());
      const Eigen::VectorXd p = measured_distribution(rot * r235 * rot.adjoint(), ms);
      auto rng = task_rng(shots->seed, index * settings.size() + k);
      const auto c = sample_multinomial(p, shots->shots, rng);
      TomographyRecord rec{settings[k], {}, 0, shots->seed};
      for (std::size_t o = 0; o < 3; ++o) {
        const std::uint64_t n = c[o];  // labels 0..2 have (Q2,Q3) = (0,0)
        if (n == 0) continue;
        rec.counts[std::string(1, static_cast<char>('0' + o))] = n;
        rec.shots += n;
      }
      heralded += rec.shots;
      total += shots->shots;
      recs.push_back(std::move(rec));
    }
    if (heralded == 0) throw NumericalError("no heralded shots");
    for (const auto& r : recs)
      if (r.shots == 0) throw NumericalError("a tomography setting received no heralded shots");
    out.herald_prob = static_cast<double>(heralded) / static_cast<double>(total);
    out.rho_out = state_tomography(recs, {ms[2]}, 1).rho.matrix();
  }
  out.fidelity = std::clamp((psi.adjoint() * out.rho_out * psi)(0, 0).real(), 0.0, 1.0);
  return out;
}

inline std::vector<TeleportationOutcome> run_design_set(const TeleportSetup& s, const std::optional<ShotOptions>& shots = std::nullopt) {
  std::vector<TeleportationOutcome> out;
  const auto states = design_states();
  for (std::size_t i = 0; i < states.size(); ++i) out.push_back(run_teleportation(s, states[i], shots, i));
  return out;
}

/// F_avg = (1/12) sum F_psi over exactly the 12 design states.
inline double average_teleportation_fidelity(const std::vector<TeleportationOutcome>& outcomes) {
  const auto states = design_states();
  if (outcomes.size() != states.size()) throw ValidationError("average fidelity needs the 12 design states");
  std::vector<std::string> want, got;
  for (const auto& d : states) want.push_back(d.label);
  for (const auto& o : outcomes) got.push_back(o.label);
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  if (want != got) throw ValidationError("average fidelity needs the 12 design states");
  double f = 0.0;
  for (const auto& o : outcomes) f += o.fidelity;
  return f / static_cast<double>(outcomes.size());
}

/// Haar average of <psi|E(psi)|psi> for a linear map E on one qutrit:
/// (sum_i Tr E(|i><i|) + sum_ij <i|E(|i><j|)|j>) / (d (d + 1)).
inline double haar_average_fidelity(const ChannelFn& e, int d = 3) {
  double a = 0.0, b = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Matrix eij = Matrix::Zero(d, d);
      eij(i, j) = 1.0;
      const Matrix out = e(eij);
      if (i == j) a += out.trace().real();
      b += out(i, j).real();
    }
  return (a + b) / (d * (d + 1.0));
}

// ---------------------------------------------------------------------------
// Noise sweep and shortfall attribution

struct ShortfallReport {
  double f_avg = 0.0;
  bool below_classical = false;           // F_avg <= 1/2
  std::map<std::string, double> isolated;  // F_avg with only that error source on
  std::string dominant;                    // source with the lowest isolated F_avg
};

inline ShortfallReport attribute_shortfall(const TeleportSetup& s) {
  if (!s.noise) throw ValidationError("shortfall attribution needs a noise model");
  ShortfallReport r;
  r.f_avg = average_teleportation_fidelity(run_design_set(s));
  r.below_classical = r.f_avg <= 0.5;
  const std::array<std::pair<const char*, NoiseToggles>, 3> sources{{
      {"amplitude_damping", {true, false, false}},
      {"dephasing", {false, true, false}},
      {"readout", {false, false, true}},
  }};
  double worst = 2.0;
  for (const auto& [name, on] : sources) {
    TeleportSetup iso = s;
    iso.noise->on = on;
    const double f = average_teleportation_fidelity(run_design_set(iso));
    r.isolated[name] = f;
    if (f < worst) {
      worst = f;
      r.dominant = name;
    }
  }
  return r;
}

}  // namespace qutrit
