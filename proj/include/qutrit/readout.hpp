#pragma once

// Readout: confusion matrices, shot sampling, and ensemble correction.

#include "qutrit/core.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace qutrit {

/// Column-stochastic M(i, j) = P(read i | state j).
using Confusion = Eigen::Matrix3d;

inline void validate_confusion(const Confusion& m) {
  for (int j = 0; j < 3; ++j) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (!(m(i, j) >= 0.0 && m(i, j) <= 1.0)) throw ValidationError("confusion entry outside [0, 1]");
      s += m(i, j);
    }
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError("confusion column " + std::to_string(j) + " does not sum to 1");
  }
}

/// Diagonal = per-state assignment fidelity, misassignment split evenly
/// between the two wrong outcomes.
inline Confusion confusion_from_fidelities(const std::array<double, 3>& f) {
  Confusion m;
  for (int j = 0; j < 3; ++j) {
    const double fj = f[static_cast<std::size_t>(j)];
    if (!(fj >= 0.0 && fj <= 1.0)) throw ValidationError("readout fidelity outside [0, 1]");
    for (int i = 0; i < 3; ++i) m(i, j) = i == j ? fj : 0.5 * (1.0 - fj);
  }
  return m;
}

using Counts = std::map<std::string, std::uint64_t>;

/// Base-3 outcome string, site 1 first.
inline std::string outcome_string(std::size_t label, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int k = n - 1; k >= 0; --k) {
    s[static_cast<std::size_t>(k)] = static_cast<char>('0' + label % 3);
    label /= 3;
  }
  return s;
}

inline std::size_t outcome_label(const std::string& s) {
  std::size_t l = 0;
  for (char c : s) {
    if (c < '0' || c > '2') throw ValidationError("outcome string '" + s + "' is not base 3");
    l = l * 3 + static_cast<std::size_t>(c - '0');
  }
  return l;
}

/// v <- (M_1 (x) ... (x) M_n) v for a length-3^n vector.
inline Eigen::VectorXd apply_site_matrices(const std::vector<Eigen::Matrix3d>& ms, const Eigen::VectorXd& v) {
  const int n = static_cast<int>(ms.size());
  if (static_cast<std::size_t>(v.size()) != ipow(3, static_cast<std::size_t>(n))) throw ValidationError("vector length does not match site count");
  Eigen::VectorXd out = v;
  Eigen::VectorXd next(v.size());
  for (int s = 0; s < n; ++s) {
    const std::size_t stride = ipow(3, static_cast<std::size_t>(n - 1 - s));
    next.setZero();
    for (std::size_t l = 0; l < static_cast<std::size_t>(v.size()); ++l) {
      const int digit = static_cast<int>((l / stride) % 3);
      const std::size_t base = l - static_cast<std::size_t>(digit) * stride;
      for (int i = 0; i < 3; ++i)
        next(static_cast<Eigen::Index>(base + static_cast<std::size_t>(i) * stride)) += ms[static_cast<std::size_t>(s)](i, digit) * out(static_cast<Eigen::Index>(l));
    }
    out.swap(next);
  }
  return out;
}

/// Outcome distribution (x)M . diag(rho).
inline Eigen::VectorXd measured_distribution(const Matrix& rho, const std::vector<Confusion>& ms) {
  Eigen::VectorXd p = rho.diagonal().real().cwiseMax(0.0);
  p /= p.sum();
  return apply_site_matrices(ms, p);
}

// ---------------------------------------------------------------------------
// Sampling

/// SplitMix64 finaliser; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Generator for work item `task` under `seed`; independent of scheduling.
inline std::mt19937_64 task_rng(std::uint64_t seed, std::uint64_t task) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ (task * 0xd1b54a32d192ed03ULL + 1)));
}

/// Multinomial counts by sequential binomial draws.
inline std::vector<std::uint64_t> sample_multinomial(const Eigen::VectorXd& p, std::uint64_t shots, std::mt19937_64& rng) {
  std::vector<std::uint64_t> out(static_cast<std::size_t>(p.size()), 0);
  double rest = 1.0;
  std::uint64_t left = shots;
  for (Eigen::Index k = 0; k < p.size() && left > 0; ++k) {
    if (k == p.size() - 1 || rest <= 0.0) {
      out[static_cast<std::size_t>(k)] = left;
      break;
    }
    const double q = std::clamp(p(k) / rest, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> b(left, q);
    const std::uint64_t c = b(rng);
    out[static_cast<std::size_t>(k)] = c;
    left -= c;
    rest -= p(k);
  }
  return out;
}

/// Shot counts for a computational-basis readout of rho through per-site
/// confusion matrices. Deterministic given (seed, task).
inline Counts readout_sample(const DensityState& rho, const std::vector<Confusion>& ms, std::uint64_t shots, std::uint64_t seed,
                             std::uint64_t task = 0) {
  if (static_cast<int>(ms.size()) != rho.reg().sites) throw ValidationError("one confusion matrix per site required");
  for (const auto& m : ms) validate_confusion(m);
  const Eigen::VectorXd p = measured_distribution(rho.matrix(), ms);
  auto rng = task_rng(seed, task);
  const auto c = sample_multinomial(p, shots, rng);
  Counts out;
  for (std::size_t l = 0; l < c.size(); ++l)
    if (c[l] > 0) out[outcome_string(l, rho.reg().sites)] = c[l];
  return out;
}

/// Quasi-probabilities (x)M^{-1} . frequencies; negative entries are kept.
inline Eigen::VectorXd readout_correct(const Counts& counts, const std::vector<Confusion>& ms) {
  const int n = static_cast<int>(ms.size());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ipow(3, static_cast<std::size_t>(n))));
  std::uint64_t total = 0;
  for (const auto& [k, v] : counts) {
    if (static_cast<int>(k.size()) != n) throw ValidationError("outcome '" + k + "' has the wrong length");
    f(static_cast<Eigen::Index>(outcome_label(k))) += static_cast<double>(v);
    total += v;
  }
  if (total == 0) throw ValidationError("no shots to correct");
  f /= static_cast<double>(total);
  std::vector<Eigen::Matrix3d> inv;
  for (const auto& m : ms) {
    Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
    if (!lu.isInvertible() || std::abs(m.determinant()) < 1e-12) throw NumericalError("confusion matrix is singular");
    inv.push_back(lu.inverse());
  }
  return apply_site_matrices(inv, f);
}

}  // namespace qutrit
