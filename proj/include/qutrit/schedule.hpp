#pragma once

// Pulse schedules: timed cross-Kerr evolution, conditional-pi windows and
// instantaneous local pulses, plus their exact unitary simulation.

#include "qutrit/core.hpp"
#include "qutrit/rotations.hpp"

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace qutrit {

/// Cross-Kerr rates (rad/s) for an ordered pair: alpha[a-1][b-1] multiplies
/// |a b><a b| with a on the first site of the pair.
struct CrossKerrCoeffs {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  static CrossKerrCoeffs from_khz(double k11, double k12, double k21, double k22) {
    constexpr double s = 2.0 * kPi * 1e3;
    return {k11 * s, k12 * s, k21 * s, k22 * s};
  }

  /// Rate for labels (a, b); zero whenever either label is 0.
  double rate(int a, int b) const {
    if (a == 0 || b == 0) return 0.0;
    if (a == 1) return b == 1 ? a11 : a12;
    return b == 1 ? a21 : a22;
  }

  CrossKerrCoeffs transposed() const { return {a11, a21, a12, a22}; }
  bool finite() const { return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a21) && std::isfinite(a22); }
  bool operator==(const CrossKerrCoeffs&) const = default;
};

using SitePair = std::pair<int, int>;

/// Always-on couplings of a device, keyed by ordered site pair.
class Couplings {
 public:
  Couplings() = default;

  void set(int i, int j, const CrossKerrCoeffs& c) {
    if (i == j) throw ValidationError("coupling needs two distinct sites");
    if (!c.finite()) throw ValidationError("non-finite cross-Kerr coefficient");
    if (i < j) map_[{i, j}] = c;
    else map_[{j, i}] = c.transposed();
  }

  /// Coefficients oriented as (i, j); zero if the pair is absent.
  CrossKerrCoeffs get(int i, int j) const {
    if (i < j) {
      auto it = map_.find({i, j});
      return it == map_.end() ? CrossKerrCoeffs{} : it->second;
    }
    auto it = map_.find({j, i});
    return it == map_.end() ? CrossKerrCoeffs{} : it->second.transposed();
  }

  bool has(int i, int j) const { return map_.count({std::min(i, j), std::max(i, j)}) > 0; }

  std::vector<SitePair> pairs() const {
    std::vector<SitePair> out;
    for (const auto& [k, v] : map_) out.push_back(k);
    return out;
  }

  const std::map<SitePair, CrossKerrCoeffs>& raw() const { return map_; }

 private:
  std::map<SitePair, CrossKerrCoeffs> map_;
};

/// Free cross-Kerr evolution of the listed pairs.
struct Evolve {
  std::vector<SitePair> pairs;
  double duration_ns = 0.0;
  bool operator==(const Evolve&) const = default;
};

/// Instantaneous single-qutrit pulse.
struct LocalPulse {
  int site = 1;
  std::variant<SubspaceRotation, Permutation> gate;
  bool operator==(const LocalPulse&) const = default;
};

/// Simultaneous conditional-pi gates, each (control, target), realised by a
/// cross-resonance drive of length duration_ns with only the control-|1>
/// branch rotating the target. Pairs in `coupled` keep their cross-Kerr
/// interaction on during the window; the driven pairs' own cross-Kerr phase
/// is part of the gate calibration.
struct CondPi {
  std::vector<SitePair> pairs;
  std::vector<SitePair> coupled;
  double duration_ns = 125.0;
  bool operator==(const CondPi&) const = default;
};

using ScheduleItem = std::variant<Evolve, LocalPulse, CondPi>;

struct PulseSchedule {
  int sites = 2;
  std::vector<ScheduleItem> items;

  double total_duration_ns() const {
    double t = 0.0;
    for (const auto& it : items) {
      if (const auto* e = std::get_if<Evolve>(&it)) t += e->duration_ns;
      else if (const auto* c = std::get_if<CondPi>(&it)) t += c->duration_ns;
    }
    return t;
  }

  PulseSchedule& evolve(std::vector<SitePair> pairs, double ns) {
    if (!(ns >= 0.0)) throw ValidationError("negative evolution duration");
    items.emplace_back(Evolve{std::move(pairs), ns});
    return *this;
  }
  PulseSchedule& pulse(int site, SubspaceRotation r) {
    items.emplace_back(LocalPulse{site, r});
    return *this;
  }
  PulseSchedule& pulse(int site, Permutation p) {
    items.emplace_back(LocalPulse{site, p});
    return *this;
  }
  PulseSchedule& cond_pi(std::vector<SitePair> pairs, std::vector<SitePair> coupled, double ns = 125.0) {
    if (!(ns > 0.0)) throw ValidationError("conditional-pi needs a positive duration");
    items.emplace_back(CondPi{std::move(pairs), std::move(coupled), ns});
    return *this;
  }
  PulseSchedule& append(const PulseSchedule& other) {
    if (other.sites != sites) throw ValidationError("appending schedule on a different register");
    items.insert(items.end(), other.items.begin(), other.items.end());
    return *this;
  }

  bool operator==(const PulseSchedule&) const = default;
};

inline Matrix local_pulse_unitary(const LocalPulse& p) {
  return std::visit(
      [](const auto& g) -> Matrix {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, SubspaceRotation>) return rotation_unitary(g);
        else return permutation_unitary(g);
      },
      p.gate);
}

namespace detail {

inline void check_pair(const SitePair& p, int n) {
  if (p.first < 1 || p.first > n || p.second < 1 || p.second > n || p.first == p.second)
    throw ValidationError("pair (" + std::to_string(p.first) + "," + std::to_string(p.second) + ") invalid on " + std::to_string(n) + " sites");
}

/// Diagonal of exp(-i t sum_pairs H_ck) over the full register.
inline Vector cross_kerr_phases(const std::vector<SitePair>& pairs, const Couplings& cpl, const Register& reg, double t_s) {
  const auto dim = reg.dim();
  Vector out(static_cast<Eigen::Index>(dim));
  std::vector<CrossKerrCoeffs> coeffs;
  for (const auto& p : pairs) {
    check_pair(p, reg.sites);
    if (!cpl.has(p.first, p.second))
      throw ValidationError("no cross-Kerr coefficients for pair (" + std::to_string(p.first) + "," + std::to_string(p.second) + ")");
    coeffs.push_back(cpl.get(p.first, p.second));
  }
  for (std::size_t label = 0; label < dim; ++label) {
    const auto dg = reg.digits(label);
    double energy = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      energy += coeffs[k].rate(dg[static_cast<std::size_t>(pairs[k].first - 1)], dg[static_cast<std::size_t>(pairs[k].second - 1)]);
    out(static_cast<Eigen::Index>(label)) = std::polar(1.0, -energy * t_s);
  }
  return out;
}

}  // namespace detail

/// Unitary of a conditional-pi window restricted to the sites it touches,
/// returned with that site list (in register order).
inline std::pair<Matrix, std::vector<int>> cond_pi_block(const CondPi& c, const Couplings& cpl, int n) {
  std::vector<int> involved;
  auto add = [&](int s) {
    if (std::find(involved.begin(), involved.end(), s) == involved.end()) involved.push_back(s);
  };
  for (const auto& p : c.pairs) {
    detail::check_pair(p, n);
    add(p.first);
    add(p.second);
  }
  for (const auto& p : c.coupled) {
    detail::check_pair(p, n);
    add(p.first);
    add(p.second);
  }
  std::sort(involved.begin(), involved.end());
  const int k = static_cast<int>(involved.size());
  const Register sub{3, k};
  auto local = [&](int site) {
    return static_cast<int>(std::find(involved.begin(), involved.end(), site) - involved.begin()) + 1;
  };

  const double t = c.duration_ns * 1e-9;
  const auto dim = static_cast<Eigen::Index>(sub.dim());
  Matrix h = Matrix::Zero(dim, dim);
  Matrix proj1 = Matrix::Zero(3, 3);
  proj1(1, 1) = 1.0;
  const double rabi = kPi / t;  // pi rotation of the target in the control-|1> branch
  for (const auto& p : c.pairs) {
    const std::vector<int> s{local(p.first), local(p.second)};
    h += embed(kron(proj1, Matrix(0.5 * rabi * gell_mann(1))), std::span<const int>(s), k);
  }
  if (!c.coupled.empty()) {
    std::vector<SitePair> mapped;
    Couplings sub_cpl;
    for (const auto& p : c.coupled) {
      if (!cpl.has(p.first, p.second))
        throw ValidationError("no cross-Kerr coefficients for pair (" + std::to_string(p.first) + "," + std::to_string(p.second) + ")");
      mapped.emplace_back(local(p.first), local(p.second));
      sub_cpl.set(local(p.first), local(p.second), cpl.get(p.first, p.second));
    }
    for (Eigen::Index label = 0; label < dim; ++label) {
      const auto dg = sub.digits(static_cast<std::size_t>(label));
      double e = 0.0;
      for (const auto& p : mapped) e += sub_cpl.get(p.first, p.second).rate(dg[static_cast<std::size_t>(p.first - 1)], dg[static_cast<std::size_t>(p.second - 1)]);
      h(label, label) += e;
    }
  }
  return {expm_hermitian(h, t), involved};
}

/// Apply every schedule item to the columns of `m` (a state or a unitary).
inline void simulate_in_place(const PulseSchedule& s, const Couplings& cpl, Matrix& m) {
  const Register reg{3, s.sites};
  if (static_cast<std::size_t>(m.rows()) != reg.dim()) throw ValidationError("state does not match schedule register");
  for (const auto& item : s.items) {
    if (const auto* e = std::get_if<Evolve>(&item)) {
      if (e->duration_ns < 0.0) throw ValidationError("negative evolution duration");
      if (e->pairs.empty() || e->duration_ns == 0.0) continue;
      const Vector ph = detail::cross_kerr_phases(e->pairs, cpl, reg, e->duration_ns * 1e-9);
      m = ph.asDiagonal() * m;
    } else if (const auto* p = std::get_if<LocalPulse>(&item)) {
      const std::vector<int> site{p->site};
      check_sites(site, s.sites);
      apply_left(local_pulse_unitary(*p), site, reg, m);
    } else {
      const auto& c = std::get<CondPi>(item);
      auto [u, involved] = cond_pi_block(c, cpl, s.sites);
      apply_left(u, involved, reg, m);
    }
  }
}

/// Full register unitary of a schedule.
inline Matrix simulate(const PulseSchedule& s, const Couplings& cpl = {}) {
  const auto dim = static_cast<Eigen::Index>(Register{3, s.sites}.dim());
  Matrix u = Matrix::Identity(dim, dim);
  simulate_in_place(s, cpl, u);
  return u;
}

inline Vector simulate_state(const PulseSchedule& s, const Couplings& cpl, const Vector& psi) {
  Matrix m = psi;
  simulate_in_place(s, cpl, m);
  return m.col(0);
}

/// Schedule whose unitary is the inverse: items reversed, rotations negated,
/// permutations inverted. Evolution cannot run backwards in time, so
/// schedules containing Evolve or CondPi items are rejected.
inline PulseSchedule local_inverse(const PulseSchedule& s) {
  PulseSchedule out{s.sites, {}};
  for (auto it = s.items.rbegin(); it != s.items.rend(); ++it) {
    const auto* p = std::get_if<LocalPulse>(&*it);
    if (p == nullptr) throw ValidationError("only local-pulse schedules can be inverted");
    LocalPulse q = *p;
    if (auto* r = std::get_if<SubspaceRotation>(&q.gate)) r->angle = -r->angle;
    else {
      auto& g = std::get<Permutation>(q.gate);
      if (g == Permutation::shift) g = Permutation::shift_dag;
      else if (g == Permutation::shift_dag) g = Permutation::shift;
    }
    out.items.emplace_back(q);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Virtual-Z bookkeeping

/// Per-site diagonal frame diag(e^{i d0}, e^{i d1}, e^{i d2}) accumulated from
/// z-rotations that are applied in software instead of as pulses.
struct VirtualPhaseFrame {
  std::vector<std::array<double, 3>> phases;

  explicit VirtualPhaseFrame(int n = 1) : phases(static_cast<std::size_t>(n), {0.0, 0.0, 0.0}) {}

  Matrix site_matrix(int site) const {
    const auto& d = phases.at(static_cast<std::size_t>(site - 1));
    Matrix m = Matrix::Zero(3, 3);
    for (int k = 0; k < 3; ++k) m(k, k) = std::polar(1.0, d[static_cast<std::size_t>(k)]);
    return m;
  }

  /// Relative phase of level 2 against level 0 (the idle-state correction).
  double level2_phase(int site) const {
    const auto& d = phases.at(static_cast<std::size_t>(site - 1));
    return d[2] - d[0];
  }

  VirtualPhaseFrame inverse() const {
    VirtualPhaseFrame out(static_cast<int>(phases.size()));
    for (std::size_t s = 0; s < phases.size(); ++s)
      for (std::size_t k = 0; k < 3; ++k) out.phases[s][k] = -phases[s][k];
    return out;
  }

  Matrix matrix() const {
    std::vector<Matrix> f;
    for (int s = 1; s <= static_cast<int>(phases.size()); ++s) f.push_back(site_matrix(s));
    return kron_all(f);
  }
};

struct VirtualZCompiled {
  PulseSchedule schedule;  // no z-rotations left
  VirtualPhaseFrame frame;  // applied after the schedule
};

/// Removes z-rotations by re-phasing later pulses: each pulse g seen through
/// the accumulated frame F becomes F^dag g F, and the final unitary is
/// F_final * U(compiled). Permutations move the frame instead of absorbing it.
/// A conditional-pi target must carry no relative 0/1 frame phase.
inline VirtualZCompiled compile_virtual_z(const PulseSchedule& s) {
  VirtualZCompiled out{PulseSchedule{s.sites, {}}, VirtualPhaseFrame(s.sites)};
  auto& fr = out.frame.phases;
  for (const auto& item : s.items) {
    if (const auto* p = std::get_if<LocalPulse>(&item)) {
      auto& d = fr.at(static_cast<std::size_t>(p->site - 1));
      if (const auto* r = std::get_if<SubspaceRotation>(&p->gate)) {
        const auto [lo, hi] = subspace_levels(r->subspace);
        if (r->axis == Axis::z) {
          d[static_cast<std::size_t>(lo)] -= r->angle / 2.0;
          d[static_cast<std::size_t>(hi)] += r->angle / 2.0;
          continue;
        }
        SubspaceRotation q = *r;
        q.phase += d[static_cast<std::size_t>(lo)] - d[static_cast<std::size_t>(hi)];
        out.schedule.items.emplace_back(LocalPulse{p->site, q});
      } else {
        const auto map = permutation_map(std::get<Permutation>(p->gate));
        std::array<double, 3> moved{};
        for (std::size_t k = 0; k < 3; ++k) moved[static_cast<std::size_t>(map[k])] = d[k];
        d = moved;
        out.schedule.items.push_back(item);
      }
    } else if (const auto* c = std::get_if<CondPi>(&item)) {
      for (const auto& pr : c->pairs) {
        const auto& d = fr.at(static_cast<std::size_t>(pr.second - 1));
        if (std::abs(std::remainder(d[0] - d[1], 2.0 * kPi)) > 1e-12)
          throw ValidationError("conditional-pi target carries a virtual phase on its 01 transition");
      }
      out.schedule.items.push_back(item);
    } else {
      out.schedule.items.push_back(item);
    }
  }
  return out;
}

}  // namespace qutrit
