#pragma once

// CPTP channels as Kraus sets, and the lifetime-driven qutrit noise channels.

#include "qutrit/core.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace qutrit {

struct QuantumChannel {
  std::vector<Matrix> kraus;
  std::optional<double> duration_s;

  Eigen::Index dim() const {
    if (kraus.empty()) throw ValidationError("channel has no Kraus operators");
    return kraus.front().rows();
  }

  static QuantumChannel identity(Eigen::Index dim) { return {{Matrix::Identity(dim, dim)}, std::nullopt}; }

  static QuantumChannel unitary(const Matrix& u) {
    if (!is_unitary(u, 1e-10)) throw ValidationError("operator is not unitary");
    return {{u}, std::nullopt};
  }

  /// max |sum K^dag K - I|.
  double completeness_error() const {
    const Eigen::Index d = dim();
    Matrix s = Matrix::Zero(d, d);
    for (const auto& k : kraus) {
      if (k.rows() != d || k.cols() != d) throw ValidationError("Kraus operators of mixed shape");
      s += k.adjoint() * k;
    }
    return (s - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  }

  /// Choi matrix sum_ij |i><j| (x) L(|i><j|), unnormalised.
  Matrix choi() const {
    const Eigen::Index d = dim();
    Matrix c = Matrix::Zero(d * d, d * d);
    for (const auto& k : kraus) {
      // vec of K with row index (i, out): column-stacking the transpose.
      Vector v(d * d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index o = 0; o < d; ++o) v(i * d + o) = k(o, i);
      c += v * v.adjoint();
    }
    return c;
  }

  double choi_min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(choi(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  /// Throws NumericalError unless complete within tol and Choi PSD above -floor.
  void validate(double tol = 1e-10, double floor = 1e-9) const {
    const double ce = completeness_error();
    if (ce > tol) throw NumericalError("Kraus set is not trace preserving (error " + std::to_string(ce) + ")");
    const double ev = choi_min_eigenvalue();
    if (ev < -floor) throw NumericalError("Choi matrix has negative eigenvalue " + std::to_string(ev));
  }

  Matrix apply(const Matrix& rho) const {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& k : kraus) out += k * rho * k.adjoint();
    return out;
  }
};

/// `second` after `first`: Kraus products B_j A_i.
inline QuantumChannel compose(const QuantumChannel& first, const QuantumChannel& second) {
  if (first.dim() != second.dim()) throw ValidationError("composing channels of different dimension");
  QuantumChannel out;
  for (const auto& b : second.kraus)
    for (const auto& a : first.kraus) {
      Matrix ba = b * a;
      if (ba.cwiseAbs().maxCoeff() > 0.0) out.kraus.push_back(std::move(ba));
    }
  if (out.kraus.empty()) out.kraus.push_back(Matrix::Zero(first.dim(), first.dim()));
  if (first.duration_s && second.duration_s) out.duration_s = *first.duration_s + *second.duration_s;
  return out;
}

/// In-place rho <- sum_k K rho K^dag with the channel embedded on `sites`.
inline void apply_channel_in_place(const QuantumChannel& ch, std::span<const int> sites, const Register& reg, Matrix& rho) {
  if (static_cast<std::size_t>(ch.dim()) != ipow(static_cast<std::size_t>(reg.d), sites.size()))
    throw ValidationError("channel dimension does not match the number of sites");
  if (static_cast<std::size_t>(rho.rows()) != reg.dim() || rho.rows() != rho.cols()) throw ValidationError("density matrix does not match register");
  if (ch.kraus.size() == 1) {
    conjugate_in_place(ch.kraus.front(), sites, reg, rho);
    return;
  }
  Matrix acc = Matrix::Zero(rho.rows(), rho.cols());
  Matrix work;
  for (const auto& k : ch.kraus) {
    work = rho;
    conjugate_in_place(k, sites, reg, work);
    acc += work;
  }
  rho = std::move(acc);
}

inline DensityState apply_channel(const QuantumChannel& ch, const DensityState& rho, std::span<const int> sites) {
  Matrix m = rho.matrix();
  apply_channel_in_place(ch, sites, rho.reg(), m);
  m = (0.5 * (m + m.adjoint())).eval();  // exact Hermiticity against rounding
  return DensityState(rho.reg(), std::move(m));
}

inline DensityState apply_channel(const QuantumChannel& ch, const DensityState& rho, std::initializer_list<int> sites) {
  const std::vector<int> s(sites);
  return apply_channel(ch, rho, std::span<const int>(s));
}

// ---------------------------------------------------------------------------
// Qutrit amplitude damping

namespace detail {
/// (1 - e^{-x}) / x, continuous at 0.
inline double one_minus_exp_over(double x) { return x == 0.0 ? 1.0 : -std::expm1(-x) / x; }
}  // namespace detail

/// Exact solution of the cascade |2> -> |1> -> |0> with rates 1/T1_21 and
/// 1/T1_10 over time t: populations follow the two-step decay, coherences
/// decay with half the summed rates of their levels. Composes exactly in t.
inline QuantumChannel amplitude_damping_channel(double t, double t1_10, double t1_21) {
  if (!(t >= 0.0)) throw ValidationError("amplitude damping duration must be nonnegative");
  if (!(t1_10 > 0.0) || !(t1_21 > 0.0)) throw ValidationError("T1 times must be positive");
  const double g1 = 1.0 / t1_10, g2 = 1.0 / t1_21;
  const double p1 = std::exp(-g1 * t);  // survival of |1>
  const double p2 = std::exp(-g2 * t);  // survival of |2>
  // Population reaching |1> from |2> and still there at t.
  double q21 = g2 * t * std::exp(-g1 * t) * detail::one_minus_exp_over((g2 - g1) * t);
  q21 = std::clamp(q21, 0.0, 1.0 - p2);
  const double q20 = std::max(0.0, 1.0 - p2 - q21);

  QuantumChannel ch;
  ch.duration_s = t;
  Matrix k0 = Matrix::Zero(3, 3);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(p1);
  k0(2, 2) = std::sqrt(p2);
  ch.kraus.push_back(k0);
  Matrix k1 = Matrix::Zero(3, 3);
  k1(0, 1) = std::sqrt(-std::expm1(-g1 * t));
  ch.kraus.push_back(k1);
  Matrix k2 = Matrix::Zero(3, 3);
  k2(1, 2) = std::sqrt(q21);
  ch.kraus.push_back(k2);
  Matrix k3 = Matrix::Zero(3, 3);
  k3(0, 2) = std::sqrt(q20);
  ch.kraus.push_back(k3);
  return ch;
}

// ---------------------------------------------------------------------------
// Qutrit dephasing

enum class DephasingFallback { error, project_psd };

/// Coherence factors G(a,b) with unit diagonal; the channel multiplies rho_ab
/// by G(a,b). It is CP exactly when G is positive semidefinite, and its Choi
/// spectrum is the spectrum of G.
inline Eigen::Matrix3d dephasing_gram(double f01, double f12, double f02) {
  Eigen::Matrix3d g;
  g << 1.0, f01, f02,
       f01, 1.0, f12,
       f02, f12, 1.0;
  return g;
}

/// Kraus set diag(sqrt(l_m) u_m) from the eigendecomposition of the Gram
/// matrix: a mixture of diagonal unitaries when realisable.
inline QuantumChannel dephasing_from_gram(Eigen::Matrix3d g, DephasingFallback fallback = DephasingFallback::error) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(g);
  Eigen::Vector3d lam = es.eigenvalues();
  if (lam.minCoeff() < -1e-12) {
    if (fallback == DephasingFallback::error)
      throw NumericalError("coherence decay factors are not realisable by a CP channel (Choi eigenvalue " + std::to_string(lam.minCoeff()) + ")");
    // Nearest PSD matrix by eigenvalue clipping, then restore the unit diagonal.
    g = es.eigenvectors() * lam.cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
    const Eigen::Vector3d s = g.diagonal().cwiseSqrt().cwiseInverse();
    g = (s.asDiagonal() * g * s.asDiagonal()).eval();
    es.compute(g);
    lam = es.eigenvalues();
  }
  QuantumChannel ch;
  for (int m = 0; m < 3; ++m) {
    if (lam(m) <= 1e-15) continue;
    Matrix k = Matrix::Zero(3, 3);
    for (int a = 0; a < 3; ++a) k(a, a) = std::sqrt(lam(m)) * es.eigenvectors()(a, m);
    ch.kraus.push_back(k);
  }
  return ch;
}

/// Pure dephasing over time t: rho_ij -> e^{-t/T2_ij} rho_ij, populations fixed.
inline QuantumChannel dephasing_channel(double t, double t2_01, double t2_12, double t2_02,
                                        DephasingFallback fallback = DephasingFallback::error) {
  if (!(t >= 0.0)) throw ValidationError("dephasing duration must be nonnegative");
  if (!(t2_01 > 0.0) || !(t2_12 > 0.0) || !(t2_02 > 0.0)) throw ValidationError("T2 times must be positive");
  auto ch = dephasing_from_gram(dephasing_gram(std::exp(-t / t2_01), std::exp(-t / t2_12), std::exp(-t / t2_02)), fallback);
  ch.duration_s = t;
  return ch;
}

/// Lifetimes of one qutrit, seconds.
struct QutritLifetimes {
  double t1_10 = 0.0, t1_21 = 0.0;
  double t2_01 = 0.0, t2_12 = 0.0, t2_02 = 0.0;
};

/// Amplitude damping followed by dephasing for a segment of length t, with all
/// rates multiplied by `scale` (scale 0 is noiseless).
inline QuantumChannel idle_noise_channel(const QutritLifetimes& q, double t, double scale = 1.0,
                                         DephasingFallback fallback = DephasingFallback::error) {
  if (!(scale >= 0.0)) throw ValidationError("noise scale must be nonnegative");
  const double te = t * scale;
  if (te == 0.0) return QuantumChannel::identity(3);
  return compose(amplitude_damping_channel(te, q.t1_10, q.t1_21), dephasing_channel(te, q.t2_01, q.t2_12, q.t2_02, fallback));
}

}  // namespace qutrit
