#pragma once

// State and process tomography over the four mutually unbiased qutrit bases,
// with the Pauli transfer representation in the Weyl basis.

#include "qutrit/core.hpp"
#include "qutrit/readout.hpp"
#include "qutrit/serialization.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qutrit {

enum class MubBasis { z = 0, x = 1, xz = 2, xz2 = 3 };

inline constexpr int kMubCount = 4;

inline std::string_view to_string(MubBasis b) {
  switch (b) {
    case MubBasis::z: return "Z";
    case MubBasis::x: return "X";
    case MubBasis::xz: return "XZ";
    case MubBasis::xz2: return "XZ2";
  }
  return "?";
}

/// Columns are the basis vectors. Z: computational; X: Hadamard columns;
/// XZ^b: v_i = omega^{b i(i-1)/2 - k i}/sqrt(3), eigenvalue omega^k.
inline std::array<Matrix, 4> mub_bases(int d = 3) {
  if (d != 3) throw ValidationError("mutually unbiased bases implemented for d = 3 only");
  std::array<Matrix, 4> out;
  out[0] = Matrix::Identity(3, 3);
  out[1] = qudit_hadamard(3);
  for (int b = 1; b <= 2; ++b) {
    Matrix m(3, 3);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i) m(i, k) = root_of_unity(3, ((b * (i * (i - 1) / 2) - k * i) % 3 + 3) % 3) / std::sqrt(3.0);
    out[static_cast<std::size_t>(b + 1)] = m;
  }
  return out;
}

/// One basis per site; index = base-4 number, site 1 most significant.
struct MeasurementSetting {
  std::vector<int> bases;

  static MeasurementSetting from_index(std::size_t index, int n) {
    std::vector<int> b(static_cast<std::size_t>(n));
    for (int k = n - 1; k >= 0; --k) {
      b[static_cast<std::size_t>(k)] = static_cast<int>(index % kMubCount);
      index /= kMubCount;
    }
    return {b};
  }

  std::size_t index() const {
    std::size_t out = 0;
    for (int b : bases) out = out * kMubCount + static_cast<std::size_t>(b);
    return out;
  }

  /// Pre-rotation B^dag per site, so that outcome k flags basis vector k.
  Matrix pre_rotation() const {
    const auto bs = mub_bases();
    std::vector<Matrix> f;
    for (int b : bases) {
      if (b < 0 || b >= kMubCount) throw ValidationError("measurement basis index out of range");
      f.push_back(bs[static_cast<std::size_t>(b)].adjoint());
    }
    return kron_all(f);
  }

  bool operator==(const MeasurementSetting&) const = default;
};

inline std::vector<MeasurementSetting> all_settings(int n) {
  std::vector<MeasurementSetting> out;
  const std::size_t count = ipow(kMubCount, static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < count; ++i) out.push_back(MeasurementSetting::from_index(i, n));
  return out;
}

struct TomographyRecord {
  MeasurementSetting setting;
  Counts counts;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
};

inline Json record_to_json(const TomographyRecord& r) {
  Json counts = Json::object();
  for (const auto& [k, v] : r.counts) counts[k] = v;
  return Json{{"setting", r.setting.bases}, {"counts", counts}, {"shots", r.shots}, {"seed", r.seed}};
}

template <class J>
TomographyRecord record_from_json(const J& j) {
  TomographyRecord r;
  r.setting.bases = j.at("setting").template get<std::vector<int>>();
  std::uint64_t total = 0;
  for (const auto& [k, v] : j.at("counts").items()) {
    r.counts[k] = v.template get<std::uint64_t>();
    total += r.counts[k];
  }
  r.shots = j.at("shots").template get<std::uint64_t>();
  r.seed = j.value("seed", std::uint64_t{0});
  if (total != r.shots) throw ValidationError("tomography record counts do not sum to the shot count");
  return r;
}

/// Simulated measurement records of rho for each setting; setting i draws from
/// the stream (seed, i).
inline std::vector<TomographyRecord> measure_settings(const DensityState& rho, const std::vector<MeasurementSetting>& settings,
                                                      const std::vector<Confusion>& ms, std::uint64_t shots, std::uint64_t seed,
                                                      std::uint64_t task_offset = 0) {
  std::vector<TomographyRecord> out;
  out.reserve(settings.size());
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const Matrix r = settings[i].pre_rotation();
    Matrix rotated = r * rho.matrix() * r.adjoint();
    rotated = (0.5 * (rotated + rotated.adjoint())).eval();
    const DensityState rs(rho.reg(), rotated);
    out.push_back({settings[i], readout_sample(rs, ms, shots, seed, task_offset + i), shots, seed});
  }
  return out;
}

/// Exact outcome probabilities for one setting (no readout error).
inline Eigen::VectorXd setting_probabilities(const Matrix& rho, const MeasurementSetting& s) {
  const Matrix r = s.pre_rotation();
  return (r * rho * r.adjoint()).diagonal().real();
}

// ---------------------------------------------------------------------------
// Reconstruction

/// Eigenvalue clipping then trace renormalisation.
inline Matrix project_to_density(const Matrix& m) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const double tr = lam.sum();
  if (!(tr > 0.0)) throw NumericalError("estimate has no positive spectrum to project onto");
  Matrix out = es.eigenvectors() * (lam / tr).cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  return (0.5 * (out + out.adjoint())).eval();
}

/// Rows: <b_{s,o}| . |b_{s,o}> as a linear functional of vec(rho) (row-major).
inline Matrix sensing_matrix(const std::vector<MeasurementSetting>& settings, int n) {
  const auto dim = static_cast<Eigen::Index>(ipow(3, static_cast<std::size_t>(n)));
  Matrix a(static_cast<Eigen::Index>(settings.size()) * dim, dim * dim);
  Eigen::Index row = 0;
  for (const auto& s : settings) {
    if (static_cast<int>(s.bases.size()) != n) throw ValidationError("setting has the wrong number of sites");
    const Matrix r = s.pre_rotation();
    for (Eigen::Index o = 0; o < dim; ++o, ++row) {
      // p_o = (R rho R^dag)_oo = sum_ij R(o,i) rho(i,j) conj(R(o,j))
      for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(row, i * dim + j) = r(o, i) * std::conj(r(o, j));
    }
  }
  return a;
}

struct StateEstimate {
  Matrix raw;         // linear-inversion estimate (Hermitian, unit trace, maybe not PSD)
  DensityState rho;   // after PSD projection
};

/// Linear inversion from per-setting outcome probabilities.
inline StateEstimate state_from_probabilities(const std::vector<MeasurementSetting>& settings, const std::vector<Eigen::VectorXd>& probs, int n) {
  if (n < 1 || n > 3) throw ValidationError("state tomography supports 1 to 3 qutrits");
  if (settings.size() != probs.size()) throw ValidationError("one probability vector per setting required");
  const auto dim = static_cast<Eigen::Index>(ipow(3, static_cast<std::size_t>(n)));
  const Matrix a = sensing_matrix(settings, n);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  cod.setThreshold(1e-10);
  if (cod.rank() != dim * dim)
    throw ValidationError("measurement settings are not informationally complete (sensing rank " + std::to_string(cod.rank()) + " < " +
                          std::to_string(dim * dim) + ")");
  Vector p(a.rows());
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (probs[s].size() != dim) throw ValidationError("probability vector has the wrong length");
    p.segment(static_cast<Eigen::Index>(s) * dim, dim) = probs[s].cast<cplx>();
  }
  const Vector x = cod.solve(p);
  Matrix raw(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) raw(i, j) = x(i * dim + j);
  raw = (0.5 * (raw + raw.adjoint())).eval();
  raw /= raw.trace().real();
  const Register reg{3, n};
  return {raw, DensityState(reg, project_to_density(raw))};
}

/// Readout-corrected linear inversion from shot records.
inline StateEstimate state_tomography(const std::vector<TomographyRecord>& records, const std::vector<Confusion>& ms, int n) {
  std::vector<MeasurementSetting> settings;
  std::vector<Eigen::VectorXd> probs;
  for (const auto& r : records) {
    settings.push_back(r.setting);
    probs.push_back(readout_correct(r.counts, ms));
  }
  return state_from_probabilities(settings, probs, n);
}

// ---------------------------------------------------------------------------
// Process tomography and the Pauli transfer representation

/// R(i, j) = (1/D) Tr[P_i^dag L(P_j)] over Weyl labels in index order.
struct ProcessMatrix {
  int sites = 2;
  Matrix ptm;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(ipow(3, static_cast<std::size_t>(sites))); }

  /// max_j |R(0,j) - delta_j0|: zero for trace-preserving maps. (The
  /// identity column is the unit vector only for unital maps.)
  double trace_preservation_error() const {
    double e = 0.0;
    for (Eigen::Index j = 0; j < ptm.cols(); ++j) e = std::max(e, std::abs(ptm(0, j) - (j == 0 ? cplx(1.0) : cplx(0.0))));
    return e;
  }
};

namespace detail {
inline std::vector<Matrix> weyl_basis(int n) {
  std::vector<Matrix> out;
  const std::size_t count = ipow(9, static_cast<std::size_t>(n));
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(weyl_pauli(PauliLabel::from_index(k, n)));
  return out;
}
}  // namespace detail

/// PTM of rho -> U rho U^dag through the superoperator conj(U) (x) U acting on
/// column-stacked vec, then a change to the Weyl basis.
inline ProcessMatrix ptm_from_unitary(const Matrix& u) {
  if (!is_unitary(u, 1e-9)) throw ValidationError("operator is not unitary");
  const Register reg = register_for_dim(static_cast<std::size_t>(u.rows()));
  const Eigen::Index d = u.rows();
  const auto basis = detail::weyl_basis(reg.sites);
  Matrix b(d * d, d * d);  // columns: vec(P_k)/sqrt(d)
  for (std::size_t k = 0; k < basis.size(); ++k)
    b.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Vector>(basis[k].data(), d * d) / std::sqrt(static_cast<double>(d));
  const Matrix super = kron(u.conjugate(), u);
  return {reg.sites, b.adjoint() * super * b};
}

/// Nine single-qutrit inputs: |0>,|1>,|2> and (|a>+|b>)/sqrt2, (|a>-i|b>)/sqrt2
/// for each level pair.
inline std::vector<Vector> process_input_kets() {
  std::vector<Vector> out;
  for (int k = 0; k < 3; ++k) {
    Vector v = Vector::Zero(3);
    v(k) = 1.0;
    out.push_back(v);
  }
  const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {1, 2}, {0, 2}}};
  for (const auto& [a, b] : pairs) {
    Vector p = Vector::Zero(3), q = Vector::Zero(3);
    p(a) = q(a) = 1.0 / std::sqrt(2.0);
    p(b) = 1.0 / std::sqrt(2.0);
    q(b) = -kI / std::sqrt(2.0);
    out.push_back(p);
    out.push_back(q);
  }
  return out;
}

/// Product inputs, site 1 most significant in the input index.
inline std::vector<Matrix> process_inputs(int n) {
  const auto kets = process_input_kets();
  std::vector<Matrix> out;
  const std::size_t count = ipow(kets.size(), static_cast<std::size_t>(n));
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rest = idx;
    std::vector<Vector> parts(static_cast<std::size_t>(n));
    for (int k = n - 1; k >= 0; --k) {
      parts[static_cast<std::size_t>(k)] = kets[rest % kets.size()];
      rest /= kets.size();
    }
    Vector v = parts[0];
    for (int k = 1; k < n; ++k) v = kron(v, parts[static_cast<std::size_t>(k)]);
    out.push_back(v * v.adjoint());
  }
  return out;
}

using ChannelFn = std::function<Matrix(const Matrix&)>;

struct ProcessTomographyOptions {
  std::optional<std::uint64_t> shots;  // nullopt: exact output states
  std::vector<Confusion> confusions;   // per site; empty = ideal readout
  std::uint64_t seed = 0;
};

/// Reconstructs the PTM from outputs on the product inputs.
inline ProcessMatrix process_tomography_from(const std::vector<Matrix>& inputs, const std::vector<Matrix>& outputs, int n) {
  if (inputs.size() != outputs.size()) throw ValidationError("one output per input required");
  const Eigen::Index d = static_cast<Eigen::Index>(ipow(3, static_cast<std::size_t>(n)));
  const Eigen::Index d2 = d * d;
  if (static_cast<Eigen::Index>(inputs.size()) != d2) throw ValidationError("process tomography needs d^2 inputs");
  const auto basis = detail::weyl_basis(n);
  // C(k, j) = (1/d) Tr[P_k^dag rho_j]; likewise for outputs.
  Matrix c(d2, d2), o(d2, d2);
  for (Eigen::Index j = 0; j < d2; ++j)
    for (Eigen::Index k = 0; k < d2; ++k) {
      const Matrix& pk = basis[static_cast<std::size_t>(k)];
      c(k, j) = (pk.adjoint() * inputs[static_cast<std::size_t>(j)]).trace() / static_cast<double>(d);
      o(k, j) = (pk.adjoint() * outputs[static_cast<std::size_t>(j)]).trace() / static_cast<double>(d);
    }
  Eigen::FullPivLU<Matrix> lu(c);
  lu.setThreshold(1e-10);
  if (lu.rank() != d2) throw ValidationError("process-tomography inputs do not span operator space (Gram rank " + std::to_string(lu.rank()) + ")");
  return {n, o * lu.inverse()};
}

inline ProcessMatrix process_tomography(const ChannelFn& channel, int n, const ProcessTomographyOptions& opt = {}) {
  if (n < 1 || n > 2) throw ValidationError("process tomography supports 1 or 2 qutrits");
  const auto inputs = process_inputs(n);
  const Register reg{3, n};
  const auto settings = all_settings(n);
  std::vector<Confusion> ms = opt.confusions;
  if (ms.empty()) ms.assign(static_cast<std::size_t>(n), Confusion::Identity());
  std::vector<Matrix> outputs;
  outputs.reserve(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    Matrix out = channel(inputs[j]);
    if (opt.shots) {
      out = (0.5 * (out + out.adjoint())).eval();
      const auto recs = measure_settings(DensityState(reg, out), settings, ms, *opt.shots, opt.seed, j * settings.size());
      out = state_tomography(recs, ms, n).rho.matrix();
    }
    outputs.push_back(std::move(out));
  }
  return process_tomography_from(inputs, outputs, n);
}

/// Single-site-column block of the PTM: rows are the non-identity Paulis (index 1..D^2-1),
/// columns the non-identity single-site Paulis, site 1 first, (x, z)
/// lexicographic within a site.
struct PtmRestriction {
  Matrix block;
  std::vector<PauliLabel> rows;
  std::vector<PauliLabel> cols;
};

inline PtmRestriction ptm_restriction(const ProcessMatrix& p) {
  const int n = p.sites;
  PtmRestriction r;
  const auto d2 = static_cast<std::size_t>(p.ptm.rows());
  for (std::size_t i = 1; i < d2; ++i) r.rows.push_back(PauliLabel::from_index(i, n));
  for (int site = 0; site < n; ++site)
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 3; ++z) {
        if (x == 0 && z == 0) continue;
        auto l = PauliLabel::identity(n);
        l.sites[static_cast<std::size_t>(site)] = {x, z};
        r.cols.push_back(l);
      }
  r.block.resize(static_cast<Eigen::Index>(r.rows.size()), static_cast<Eigen::Index>(r.cols.size()));
  for (std::size_t a = 0; a < r.rows.size(); ++a)
    for (std::size_t b = 0; b < r.cols.size(); ++b)
      r.block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          p.ptm(static_cast<Eigen::Index>(r.rows[a].index()), static_cast<Eigen::Index>(r.cols[b].index()));
  return r;
}

struct FidelityReport {
  double entanglement = 0.0;  // F_e
  double average = 0.0;       // (D F_e + 1)/(D + 1)
};

/// Entanglement fidelity Tr(R_U^dag R)/D^2 against the ideal conjugation map.
inline FidelityReport process_fidelity(const ProcessMatrix& p, const Matrix& u_ideal) {
  const ProcessMatrix ideal = ptm_from_unitary(u_ideal);
  if (ideal.ptm.rows() != p.ptm.rows()) throw ValidationError("process and ideal unitary have different dimensions");
  const double d = static_cast<double>(p.dim());
  const double fe = std::clamp((ideal.ptm.adjoint() * p.ptm).trace().real() / (d * d), 0.0, 1.0);
  return {fe, (d * fe + 1.0) / (d + 1.0)};
}

}  // namespace qutrit
