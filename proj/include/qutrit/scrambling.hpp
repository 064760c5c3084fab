#pragma once

// The two-qutrit Clifford scrambler, Pauli conjugation tables, averaged OTOCs
// and the 12-state MUB design.

#include "qutrit/core.hpp"
#include "qutrit/synthesis.hpp"
#include "qutrit/tomography.hpp"

#include <array>
#include <string>
#include <vector>

namespace qutrit {

enum class ScramblerKind { maximally_scrambling, identity_control };

inline std::string_view to_string(ScramblerKind k) { return k == ScramblerKind::maximally_scrambling ? "us" : "identity"; }

inline ScramblerKind parse_scrambler(std::string_view s) {
  if (s == "us" || s == "maximally_scrambling") return ScramblerKind::maximally_scrambling;
  if (s == "identity" || s == "identity_control") return ScramblerKind::identity_control;
  throw ValidationError("unknown scrambler '" + std::string(s) + "' (expected us or identity)");
}

/// CSUM with site 1 controlling, then CSUM with site 2 controlling:
/// |m,n> -> |m, m+n> -> |2m+n, m+n>.
inline Matrix scrambler_unitary() { return csum_reversed_unitary() * csum_unitary(); }

inline Matrix scrambler_unitary(ScramblerKind k) {
  return k == ScramblerKind::maximally_scrambling ? scrambler_unitary() : Matrix::Identity(9, 9);
}

/// Entrywise complex conjugate in the computational basis.
inline Matrix conjugate_unitary(const Matrix& u) {
  if (!is_unitary(u, 1e-9)) throw ValidationError("operator is not unitary");
  return u.conjugate();
}

// ---------------------------------------------------------------------------
// Clifford bookkeeping

struct CliffordImage {
  PauliLabel from;
  PauliLabel to;
  cplx phase;  // U P_from U^dag = phase * P_to
};

/// Image of every Weyl label under conjugation by U, in label index order.
/// Throws NumericalError naming the first Pauli whose image is not a single
/// Pauli up to phase.
inline std::vector<CliffordImage> clifford_conjugation_table(const Matrix& u, double tol = 1e-9) {
  if (!is_unitary(u, 1e-9)) throw ValidationError("operator is not unitary");
  const Register reg = register_for_dim(static_cast<std::size_t>(u.rows()));
  const auto d = static_cast<double>(u.rows());
  const std::size_t count = ipow(9, static_cast<std::size_t>(reg.sites));
  std::vector<Matrix> basis;
  basis.reserve(count);
  for (std::size_t k = 0; k < count; ++k) basis.push_back(weyl_pauli(PauliLabel::from_index(k, reg.sites)));

  std::vector<CliffordImage> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const Matrix img = u * basis[j] * u.adjoint();
    std::size_t best = 0;
    cplx best_c = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const cplx c = (basis[k].adjoint() * img).trace() / d;
      if (std::abs(c) > std::abs(best_c)) {
        best_c = c;
        best = k;
      }
    }
    const double residual = (img - best_c * basis[best]).norm() / std::sqrt(d);
    if (residual > tol || std::abs(std::abs(best_c) - 1.0) > tol) {
      throw NumericalError("not a Clifford: image of " + PauliLabel::from_index(j, reg.sites).str() + " is not a single Pauli (residual " +
                           std::to_string(residual) + ")");
    }
    out.push_back({PauliLabel::from_index(j, reg.sites), PauliLabel::from_index(best, reg.sites), best_c});
  }
  return out;
}

// ---------------------------------------------------------------------------
// OTOC

/// (1/81) sum_{B on site 1, D on site 2} (1/9) Tr[B(t)^dag D^dag B(t) D],
/// B(t) = U^dag B U, identities included on both sides.
inline double average_otoc(const Matrix& u) {
  if (u.rows() != 9 || !is_unitary(u, 1e-9)) throw ValidationError("average_otoc needs a two-qutrit unitary");
  const Matrix id = Matrix::Identity(3, 3);
  cplx sum = 0.0;
  for (std::size_t b = 0; b < 9; ++b) {
    const Matrix bt = u.adjoint() * kron(weyl_pauli(PauliLabel::from_index(b, 1)), id) * u;
    const Matrix btd = bt.adjoint();
    for (std::size_t dd = 0; dd < 9; ++dd) {
      const Matrix dm = kron(id, weyl_pauli(PauliLabel::from_index(dd, 1)));
      sum += (btd * dm.adjoint() * bt * dm).trace() / 9.0;
    }
  }
  sum /= 81.0;
  if (std::abs(sum.imag()) > 1e-10) throw NumericalError("averaged OTOC has an imaginary part " + std::to_string(sum.imag()));
  return sum.real();
}

/// Upper bound (4F - 1)^{-2} on the averaged OTOC given teleportation fidelity F.
inline double otoc_bound_from_fidelity(double f) {
  if (!(f > 0.25)) throw ValidationError("OTOC bound undefined for F <= 1/4");
  if (f > 1.0) throw ValidationError("fidelity above 1");
  return 1.0 / ((4.0 * f - 1.0) * (4.0 * f - 1.0));
}

// ---------------------------------------------------------------------------
// Design states

struct DesignState {
  std::string label;  // basis name and eigenvector index, e.g. "XZ2_1"
  PureState state;
};

/// Three eigenstates each of Z, X, XZ, XZ^2.
inline std::vector<DesignState> design_states() {
  const auto bs = mub_bases();
  std::vector<DesignState> out;
  for (int b = 0; b < kMubCount; ++b)
    for (int k = 0; k < 3; ++k)
      out.push_back({std::string(to_string(static_cast<MubBasis>(b))) + "_" + std::to_string(k),
                     PureState(Register{3, 1}, bs[static_cast<std::size_t>(b)].col(k))});
  return out;
}

/// Expectation values Tr(rho lambda_k), k = 0..8, with lambda_0 = I/sqrt(3).
/// Then rho = lambda_0 c_0 + (1/2) sum_{k>=1} c_k lambda_k.
inline std::array<double, 9> gell_mann_coefficients(const Matrix& rho) {
  if (rho.rows() != 3 || rho.cols() != 3) throw ValidationError("Gell-Mann decomposition needs a single-qutrit matrix");
  std::array<double, 9> c{};
  c[0] = rho.trace().real() / std::sqrt(3.0);
  for (int k = 1; k <= 8; ++k) c[static_cast<std::size_t>(k)] = (rho * gell_mann(k)).trace().real();
  return c;
}

}  // namespace qutrit
