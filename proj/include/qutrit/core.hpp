#pragma once

// Dense linear algebra on registers of qudits (qutrits by default).
//
// Basis-state labels follow a single global convention: site 1 is the most
// significant base-d digit, so |m,n> on two qutrits has label 3*m + n.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qutrit {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Raised for malformed inputs: bad dimensions, labels, out-of-range parameters.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot produce a result (singular
/// systems, non-CP channels, rank-deficient tomography).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

/// Register shape: `sites` qudits of dimension `d`.
struct Register {
  int d = 3;
  int sites = 1;

  std::size_t dim() const { return ipow(static_cast<std::size_t>(d), static_cast<std::size_t>(sites)); }

  /// Digits of a basis label, site 1 first.
  std::vector<int> digits(std::size_t label) const {
    if (label >= dim()) throw ValidationError("basis label out of range");
    std::vector<int> out(static_cast<std::size_t>(sites));
    for (int s = sites - 1; s >= 0; --s) {
      out[static_cast<std::size_t>(s)] = static_cast<int>(label % static_cast<std::size_t>(d));
      label /= static_cast<std::size_t>(d);
    }
    return out;
  }

  std::size_t label(std::span<const int> digits) const {
    if (digits.size() != static_cast<std::size_t>(sites)) throw ValidationError("digit count does not match register");
    std::size_t out = 0;
    for (int v : digits) {
      if (v < 0 || v >= d) throw ValidationError("digit out of range");
      out = out * static_cast<std::size_t>(d) + static_cast<std::size_t>(v);
    }
    return out;
  }

  bool operator==(const Register&) const = default;
};

/// Register inferred from a square matrix dimension, assuming qudit dimension d.
inline Register register_for_dim(std::size_t dim, int d = 3) {
  Register r{d, 0};
  std::size_t acc = 1;
  while (acc < dim) {
    acc *= static_cast<std::size_t>(d);
    ++r.sites;
  }
  if (acc != dim) throw ValidationError("dimension " + std::to_string(dim) + " is not a power of " + std::to_string(d));
  return r;
}

inline cplx root_of_unity(int d, int power = 1) {
  const double angle = 2.0 * kPi * static_cast<double>(power) / static_cast<double>(d);
  return std::polar(1.0, angle);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline Matrix kron_all(std::span<const Matrix> factors) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

// ---------------------------------------------------------------------------
// Named operators

/// Gell-Mann matrix lambda_k, k in 1..8.
inline Matrix gell_mann(int index) {
  Matrix m = Matrix::Zero(3, 3);
  switch (index) {
    case 1: m(0, 1) = m(1, 0) = 1.0; break;
    case 2: m(0, 1) = -kI; m(1, 0) = kI; break;
    case 3: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    case 4: m(0, 2) = m(2, 0) = 1.0; break;
    case 5: m(0, 2) = -kI; m(2, 0) = kI; break;
    case 6: m(1, 2) = m(2, 1) = 1.0; break;
    case 7: m(1, 2) = -kI; m(2, 1) = kI; break;
    case 8:
      m(0, 0) = m(1, 1) = 1.0 / std::sqrt(3.0);
      m(2, 2) = -2.0 / std::sqrt(3.0);
      break;
    default: throw ValidationError("Gell-Mann index must be in 1..8, got " + std::to_string(index));
  }
  return m;
}

/// Cyclic shift X|j> = |j+1 mod d>.
inline Matrix shift_x(int d = 3) {
  Matrix m = Matrix::Zero(d, d);
  for (int j = 0; j < d; ++j) m((j + 1) % d, j) = 1.0;
  return m;
}

/// Clock Z|j> = omega^j |j>.
inline Matrix clock_z(int d = 3) {
  Matrix m = Matrix::Zero(d, d);
  for (int j = 0; j < d; ++j) m(j, j) = root_of_unity(d, j);
  return m;
}

/// H = d^{-1/2} sum_ij omega^{ij} |i><j|; satisfies H^dag Z H = X.
inline Matrix qudit_hadamard(int d = 3) {
  if (d < 2) throw ValidationError("Hadamard needs d >= 2");
  Matrix m(d, d);
  const double norm = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = norm * root_of_unity(d, (i * j) % d);
  return m;
}

inline Matrix matrix_power(const Matrix& m, int p) {
  if (p < 0) throw ValidationError("negative matrix power");
  Matrix out = Matrix::Identity(m.rows(), m.cols());
  for (int k = 0; k < p; ++k) out = out * m;
  return out;
}

/// Per-site exponents (a, b) of the Weyl operator prod_k X^{a_k} Z^{b_k}.
struct PauliLabel {
  struct Exponents {
    int x = 0;
    int z = 0;
    bool operator==(const Exponents&) const = default;
  };
  std::vector<Exponents> sites;

  PauliLabel() = default;
  explicit PauliLabel(std::vector<Exponents> s, int d = 3) : sites(std::move(s)) {
    for (auto& e : sites) {
      e.x = ((e.x % d) + d) % d;
      e.z = ((e.z % d) + d) % d;
    }
  }

  static PauliLabel identity(int n) { return PauliLabel(std::vector<Exponents>(static_cast<std::size_t>(n))); }

  /// Label from index in [0, d^{2n}): per site, digit pair (x, z) with site 1 most significant.
  static PauliLabel from_index(std::size_t index, int n, int d = 3) {
    std::vector<Exponents> s(static_cast<std::size_t>(n));
    const auto dd = static_cast<std::size_t>(d);
    for (int k = n - 1; k >= 0; --k) {
      s[static_cast<std::size_t>(k)].z = static_cast<int>(index % dd);
      index /= dd;
      s[static_cast<std::size_t>(k)].x = static_cast<int>(index % dd);
      index /= dd;
    }
    return PauliLabel(std::move(s), d);
  }

  std::size_t index(int d = 3) const {
    std::size_t out = 0;
    const auto dd = static_cast<std::size_t>(d);
    for (const auto& e : sites) out = (out * dd + static_cast<std::size_t>(e.x)) * dd + static_cast<std::size_t>(e.z);
    return out;
  }

  bool is_identity() const {
    return std::all_of(sites.begin(), sites.end(), [](const Exponents& e) { return e.x == 0 && e.z == 0; });
  }

  /// Number of sites carrying a non-identity factor.
  int weight() const {
    return static_cast<int>(std::count_if(sites.begin(), sites.end(), [](const Exponents& e) { return e.x != 0 || e.z != 0; }));
  }

  /// Human-readable form, e.g. "XZ2.I" (sites separated by '.').
  std::string str() const {
    std::string out;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (k > 0) out += '.';
      const auto& e = sites[k];
      if (e.x == 0 && e.z == 0) {
        out += 'I';
        continue;
      }
      if (e.x > 0) out += (e.x == 1 ? std::string("X") : "X" + std::to_string(e.x));
      if (e.z > 0) out += (e.z == 1 ? std::string("Z") : "Z" + std::to_string(e.z));
    }
    return out;
  }

  bool operator==(const PauliLabel&) const = default;
};

/// Symplectic form s(P, Q) such that P Q = omega^{s} Q P.
inline int symplectic_form(const PauliLabel& p, const PauliLabel& q, int d = 3) {
  if (p.sites.size() != q.sites.size()) throw ValidationError("Pauli labels on different registers");
  int s = 0;
  for (std::size_t k = 0; k < p.sites.size(); ++k) s += p.sites[k].z * q.sites[k].x - p.sites[k].x * q.sites[k].z;
  return ((s % d) + d) % d;
}

inline Matrix weyl_pauli(const PauliLabel& label, int d = 3) {
  if (label.sites.empty()) throw ValidationError("empty Pauli label");
  const Matrix x = shift_x(d);
  const Matrix z = clock_z(d);
  std::vector<Matrix> factors;
  factors.reserve(label.sites.size());
  for (const auto& e : label.sites) {
    if (e.x < 0 || e.x >= d || e.z < 0 || e.z >= d) throw ValidationError("Pauli exponent out of range");
    factors.push_back(matrix_power(x, e.x) * matrix_power(z, e.z));
  }
  return kron_all(factors);
}

// ---------------------------------------------------------------------------
// Site bookkeeping

inline void check_sites(std::span<const int> sites, int n) {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i] < 1 || sites[i] > n) throw ValidationError("site " + std::to_string(sites[i]) + " outside register of " + std::to_string(n));
    for (std::size_t j = 0; j < i; ++j)
      if (sites[i] == sites[j]) throw ValidationError("duplicate site " + std::to_string(sites[i]));
  }
}

/// Index table for acting on a subset of sites: table[r * d^k + s] is the full
/// basis label whose digits on `sites` encode s (in `sites` order) and whose
/// remaining digits encode r (in ascending site order).
inline std::vector<std::size_t> site_index_table(std::span<const int> sites, const Register& reg) {
  check_sites(sites, reg.sites);
  const std::size_t k = sites.size();
  const std::size_t sub = ipow(static_cast<std::size_t>(reg.d), k);
  const std::size_t rest = reg.dim() / sub;
  std::vector<int> others;
  for (int s = 1; s <= reg.sites; ++s)
    if (std::find(sites.begin(), sites.end(), s) == sites.end()) others.push_back(s);

  std::vector<std::size_t> stride(static_cast<std::size_t>(reg.sites) + 1);
  for (int s = 1; s <= reg.sites; ++s) stride[static_cast<std::size_t>(s)] = ipow(static_cast<std::size_t>(reg.d), static_cast<std::size_t>(reg.sites - s));

  std::vector<std::size_t> table(reg.dim());
  const auto d = static_cast<std::size_t>(reg.d);
  for (std::size_t r = 0; r < rest; ++r) {
    std::size_t base = 0;
    std::size_t rr = r;
    for (auto it = others.rbegin(); it != others.rend(); ++it) {
      base += (rr % d) * stride[static_cast<std::size_t>(*it)];
      rr /= d;
    }
    for (std::size_t s = 0; s < sub; ++s) {
      std::size_t idx = base;
      std::size_t ss = s;
      for (std::size_t q = k; q-- > 0;) {
        idx += (ss % d) * stride[static_cast<std::size_t>(sites[q])];
        ss /= d;
      }
      table[r * sub + s] = idx;
    }
  }
  return table;
}

/// Operator acting as `op` on `sites` (in the given order) and identity elsewhere.
inline Matrix embed(const Matrix& op, std::span<const int> sites, int n, int d = 3) {
  const Register reg{d, n};
  const std::size_t sub = ipow(static_cast<std::size_t>(d), sites.size());
  if (static_cast<std::size_t>(op.rows()) != sub || op.rows() != op.cols())
    throw ValidationError("operator dimension does not match number of sites");
  const auto table = site_index_table(sites, reg);
  const std::size_t rest = reg.dim() / sub;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(reg.dim()), static_cast<Eigen::Index>(reg.dim()));
  for (std::size_t r = 0; r < rest; ++r)
    for (std::size_t a = 0; a < sub; ++a)
      for (std::size_t b = 0; b < sub; ++b)
        out(static_cast<Eigen::Index>(table[r * sub + a]), static_cast<Eigen::Index>(table[r * sub + b])) =
            op(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return out;
}

inline Matrix embed(const Matrix& op, std::initializer_list<int> sites, int n, int d = 3) {
  const std::vector<int> s(sites);
  return embed(op, std::span<const int>(s), n, d);
}

/// In-place m <- embed(op, sites) * m without forming the embedded operator.
inline void apply_left(const Matrix& op, std::span<const int> sites, const Register& reg, Matrix& m) {
  const std::size_t sub = ipow(static_cast<std::size_t>(reg.d), sites.size());
  if (static_cast<std::size_t>(op.rows()) != sub || op.rows() != op.cols())
    throw ValidationError("operator dimension does not match number of sites");
  if (static_cast<std::size_t>(m.rows()) != reg.dim()) throw ValidationError("matrix does not match register");
  const auto table = site_index_table(sites, reg);
  const std::size_t rest = reg.dim() / sub;
  const auto k = static_cast<Eigen::Index>(sub);
  Matrix block(k, m.cols());
  for (std::size_t r = 0; r < rest; ++r) {
    for (Eigen::Index s = 0; s < k; ++s) block.row(s) = m.row(static_cast<Eigen::Index>(table[r * sub + static_cast<std::size_t>(s)]));
    block = op * block;
    for (Eigen::Index s = 0; s < k; ++s) m.row(static_cast<Eigen::Index>(table[r * sub + static_cast<std::size_t>(s)])) = block.row(s);
  }
}

inline void apply_left(const Matrix& op, std::span<const int> sites, const Register& reg, Vector& v) {
  Matrix m = v;
  apply_left(op, sites, reg, m);
  v = m.col(0);
}

/// In-place rho <- K rho K^dag with K embedded on `sites`.
inline void conjugate_in_place(const Matrix& op, std::span<const int> sites, const Register& reg, Matrix& rho) {
  apply_left(op, sites, reg, rho);
  Matrix t = rho.adjoint();
  apply_left(op, sites, reg, t);
  rho = t.adjoint();
}

// ---------------------------------------------------------------------------
// States

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

/// Normalised state vector on a register.
class PureState {
 public:
  PureState(Register reg, Vector amplitudes) : reg_(reg), amp_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amp_.size()) != reg_.dim()) throw ValidationError("amplitude count does not match register");
    if (std::abs(amp_.norm() - 1.0) > 1e-12) throw ValidationError("state is not normalised");
  }

  /// Normalises the input; fails on the zero vector.
  static PureState normalized(Register reg, const Vector& v) {
    const double n = v.norm();
    if (n == 0.0) throw ValidationError("cannot normalise zero vector");
    return PureState(reg, v / n);
  }

  static PureState basis(Register reg, std::size_t label) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(reg.dim()));
    v(static_cast<Eigen::Index>(label)) = 1.0;
    return PureState(reg, v);
  }

  const Register& reg() const { return reg_; }
  const Vector& amplitudes() const { return amp_; }
  Matrix projector() const { return amp_ * amp_.adjoint(); }

 private:
  Register reg_;
  Vector amp_;
};

/// Density matrix with checked invariants (Hermitian, unit trace, PSD).
class DensityState {
 public:
  DensityState(Register reg, Matrix rho) : reg_(reg), rho_(std::move(rho)) {
    if (static_cast<std::size_t>(rho_.rows()) != reg_.dim() || rho_.rows() != rho_.cols())
      throw ValidationError("density matrix does not match register");
    if (!is_hermitian(rho_, 1e-10)) throw ValidationError("density matrix is not Hermitian");
    if (std::abs(rho_.trace() - cplx(1.0)) > 1e-10) throw ValidationError("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho_ + rho_.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) throw ValidationError("density matrix has a negative eigenvalue");
  }

  explicit DensityState(const PureState& psi) : reg_(psi.reg()), rho_(psi.projector()) {}

  static DensityState maximally_mixed(Register reg) {
    const auto n = static_cast<Eigen::Index>(reg.dim());
    return DensityState(reg, Matrix::Identity(n, n) / static_cast<double>(n));
  }

  const Register& reg() const { return reg_; }
  const Matrix& matrix() const { return rho_; }

 private:
  Register reg_;
  Matrix rho_;
};

/// F = <psi|rho|psi>, clamped to [0, 1].
inline double state_fidelity(const DensityState& rho, const PureState& psi) {
  if (!(rho.reg() == psi.reg())) throw ValidationError("fidelity between states on different registers");
  const double f = (psi.amplitudes().adjoint() * rho.matrix() * psi.amplitudes())(0, 0).real();
  return std::clamp(f, 0.0, 1.0);
}

inline double trace_distance(const Matrix& a, const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Reduced density matrix on `keep` (in the given order).
inline Matrix partial_trace(const Matrix& rho, std::span<const int> keep, const Register& reg) {
  const std::size_t sub = ipow(static_cast<std::size_t>(reg.d), keep.size());
  const auto table = site_index_table(keep, reg);
  const std::size_t rest = reg.dim() / sub;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(sub), static_cast<Eigen::Index>(sub));
  for (std::size_t r = 0; r < rest; ++r)
    for (std::size_t a = 0; a < sub; ++a)
      for (std::size_t b = 0; b < sub; ++b)
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            rho(static_cast<Eigen::Index>(table[r * sub + a]), static_cast<Eigen::Index>(table[r * sub + b]));
  return out;
}

inline Matrix partial_trace(const Matrix& rho, std::initializer_list<int> keep, const Register& reg) {
  const std::vector<int> k(keep);
  return partial_trace(rho, std::span<const int>(k), reg);
}

// ---------------------------------------------------------------------------
// Matrix functions and comparisons

/// exp(-i H t) for Hermitian H, via eigendecomposition.
inline Matrix expm_hermitian(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  const Eigen::VectorXd& w = es.eigenvalues();
  Vector phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) phases(k) = std::polar(1.0, -w(k) * t);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// ||A e^{i phi} - B||_F / sqrt(dim), with phi aligning the largest-modulus entry of A to B.
inline double distance_up_to_phase(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("shape mismatch");
  Eigen::Index r = 0, c = 0;
  a.cwiseAbs().maxCoeff(&r, &c);
  cplx phase = 1.0;
  if (std::abs(a(r, c)) > 0.0 && std::abs(b(r, c)) > 0.0) phase = std::polar(1.0, std::arg(b(r, c)) - std::arg(a(r, c)));
  return (a * phase - b).norm() / std::sqrt(static_cast<double>(a.rows()));
}

/// ||A - D B||_F / sqrt(dim) minimised over left diagonal unitaries D.
inline double distance_up_to_left_diagonal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("shape mismatch");
  Matrix db = b;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const cplx overlap = a.row(i).dot(b.row(i));  // conj(a) . b
    const cplx phase = std::abs(overlap) > 0.0 ? std::conj(overlap) / std::abs(overlap) : cplx(1.0);
    db.row(i) *= phase;
  }
  return (a - db).norm() / std::sqrt(static_cast<double>(a.rows()));
}

/// Number of singular values of the operator reshuffled across the cut
/// (part_a | rest) that exceed tol.
inline int operator_schmidt_rank(const Matrix& op, std::span<const int> part_a, const Register& reg, double tol = 1e-8) {
  if (op.rows() != op.cols() || static_cast<std::size_t>(op.rows()) != reg.dim()) throw ValidationError("operator does not match register");
  if (part_a.empty() || part_a.size() >= static_cast<std::size_t>(reg.sites)) throw ValidationError("invalid bipartition");
  check_sites(part_a, reg.sites);
  const auto table = site_index_table(part_a, reg);
  const std::size_t da = ipow(static_cast<std::size_t>(reg.d), part_a.size());
  const std::size_t db = reg.dim() / da;
  // table[r * da + s]: s = digits on A, r = digits on B.
  Matrix reshuffled(static_cast<Eigen::Index>(da * da), static_cast<Eigen::Index>(db * db));
  for (std::size_t ar = 0; ar < da; ++ar)
    for (std::size_t ac = 0; ac < da; ++ac)
      for (std::size_t br = 0; br < db; ++br)
        for (std::size_t bc = 0; bc < db; ++bc)
          reshuffled(static_cast<Eigen::Index>(ar * da + ac), static_cast<Eigen::Index>(br * db + bc)) =
              op(static_cast<Eigen::Index>(table[br * da + ar]), static_cast<Eigen::Index>(table[bc * da + ac]));
  Eigen::BDCSVD<Matrix> svd(reshuffled);
  const auto& sv = svd.singularValues();
  return static_cast<int>((sv.array() > tol).count());
}

inline int operator_schmidt_rank(const Matrix& op, std::initializer_list<int> part_a, const Register& reg, double tol = 1e-8) {
  const std::vector<int> a(part_a);
  return operator_schmidt_rank(op, std::span<const int>(a), reg, tol);
}

}  // namespace qutrit
