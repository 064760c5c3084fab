#include "qutrit/core.hpp"
#include "qutrit/synthesis.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qutrit;

namespace {

const cplx w = std::polar(1.0, 2.0 * kPi / 3.0);

Matrix random_matrix(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

// Hand-written single-site X and Z, independent of the library builders.
Matrix oracle_x() {
  Matrix m = Matrix::Zero(3, 3);
  m(1, 0) = m(2, 1) = m(0, 2) = 1.0;
  return m;
}
Matrix oracle_z() {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = w;
  m(2, 2) = w * w;
  return m;
}

}  // namespace

TEST(Indexing, SiteOneIsMostSignificant) {
  const Register r{3, 3};
  EXPECT_EQ(r.label(std::vector<int>{1, 0, 2}), 11u);
  EXPECT_EQ(r.digits(11), (std::vector<int>{1, 0, 2}));
  for (std::size_t l = 0; l < r.dim(); ++l) EXPECT_EQ(r.label(r.digits(l)), l);
  EXPECT_THROW(r.digits(27), ValidationError);
}

TEST(GellMann, FirstMatrixAndTraceOrthogonality) {
  Matrix g1 = Matrix::Zero(3, 3);
  g1(0, 1) = g1(1, 0) = 1.0;
  EXPECT_LT((gell_mann(1) - g1).norm(), 1e-15);
  for (int j = 1; j <= 8; ++j) {
    EXPECT_NEAR(std::abs(gell_mann(j).trace()), 0.0, 1e-15);
    EXPECT_TRUE(is_hermitian(gell_mann(j), 1e-15));
    for (int k = 1; k <= 8; ++k) {
      const cplx t = (gell_mann(j) * gell_mann(k)).trace();
      EXPECT_NEAR(std::abs(t - cplx(j == k ? 2.0 : 0.0)), 0.0, 1e-14) << j << "," << k;
    }
  }
  EXPECT_THROW(gell_mann(0), ValidationError);
  EXPECT_THROW(gell_mann(9), ValidationError);
}

TEST(WeylPauli, ShiftClockAndCommutation) {
  using E = PauliLabel::Exponents;
  EXPECT_LT((weyl_pauli(PauliLabel({E{1, 0}})) - oracle_x()).norm(), 1e-15);
  EXPECT_LT((weyl_pauli(PauliLabel({E{0, 0}, E{0, 0}})) - Matrix::Identity(9, 9)).norm(), 1e-15);
  const Matrix zx = oracle_z() * oracle_x();
  const Matrix xz = oracle_x() * oracle_z();
  EXPECT_LT((zx - w * xz).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(WeylPauli, SymplecticCommutationExhaustive) {
  for (int n : {1, 2}) {
    const std::size_t count = ipow(9, static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < count; ++i) {
      const auto p = PauliLabel::from_index(i, n);
      const Matrix pm = weyl_pauli(p);
      EXPECT_TRUE(is_unitary(pm, 1e-13));
      EXPECT_EQ(p.index(), i);
      for (std::size_t j = 0; j < count; ++j) {
        const auto q = PauliLabel::from_index(j, n);
        const Matrix qm = weyl_pauli(q);
        const int s = symplectic_form(p, q);
        EXPECT_LT((pm * qm - std::pow(w, s) * qm * pm).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(WeylPauli, TwoQutritTraceOrthogonality) {
  std::vector<Matrix> ps;
  for (std::size_t i = 0; i < 81; ++i) ps.push_back(weyl_pauli(PauliLabel::from_index(i, 2)));
  for (std::size_t i = 0; i < 81; ++i)
    for (std::size_t j = 0; j < 81; ++j) {
      const cplx t = (ps[i].adjoint() * ps[j]).trace();
      EXPECT_NEAR(std::abs(t - cplx(i == j ? 9.0 : 0.0)), 0.0, 1e-12);
    }
}

TEST(WeylPauli, LabelReductionAndString) {
  using E = PauliLabel::Exponents;
  const PauliLabel p({E{4, -1}, E{0, 0}});
  EXPECT_EQ(p.sites[0].x, 1);
  EXPECT_EQ(p.sites[0].z, 2);
  EXPECT_EQ(p.str(), "XZ2.I");
  EXPECT_EQ(p.weight(), 1);
  EXPECT_TRUE(PauliLabel::identity(3).is_identity());
}

TEST(Hadamard, QubitQutritAndConjugation) {
  const Matrix h2 = qudit_hadamard(2);
  Matrix ref(2, 2);
  ref << 1, 1, 1, -1;
  ref /= std::sqrt(2.0);
  EXPECT_LT(distance_up_to_phase(h2, ref), 1e-15);

  const Matrix h = qudit_hadamard(3);
  EXPECT_TRUE(is_unitary(h, 1e-14));
  // H^dag Z H = X exactly, which fixes the controlled-phase -> CSUM relation.
  // The same H sends X to Z^dag and Z to X^dag when conjugated the other way.
  EXPECT_LT((h.adjoint() * oracle_z() * h - oracle_x()).norm(), 1e-14);
  EXPECT_LT((h.adjoint() * oracle_x() * h - oracle_z().adjoint()).norm(), 1e-14);
  EXPECT_LT((h * oracle_z() * h.adjoint() - oracle_x().adjoint()).norm(), 1e-14);
  EXPECT_LT((h * oracle_x() * h.adjoint() - oracle_z()).norm(), 1e-14);
  EXPECT_LT((matrix_power(h, 4) - Matrix::Identity(3, 3)).norm(), 1e-13);
  EXPECT_THROW(qudit_hadamard(1), ValidationError);
}

TEST(Embed, BasisActionAndKronecker) {
  const Matrix x = oracle_x();
  Vector s00 = Vector::Zero(9);
  s00(0) = 1.0;
  EXPECT_NEAR(std::abs((embed(x, {1}, 2) * s00)(3)), 1.0, 1e-15);  // |10>
  EXPECT_NEAR(std::abs((embed(x, {2}, 2) * s00)(1)), 1.0, 1e-15);  // |01>

  std::mt19937_64 rng(7);
  const Matrix a = random_matrix(3, rng), b = random_matrix(3, rng);
  Matrix ab(9, 9);  // Kronecker oracle by index arithmetic
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) ab(i, j) = a(i / 3, j / 3) * b(i % 3, j % 3);
  EXPECT_LT((embed(a, {1}, 2) * embed(b, {2}, 2) - ab).norm(), 1e-12);

  const Matrix c = random_matrix(3, rng);
  EXPECT_LT((embed(Matrix(a * c), {2}, 3) - embed(a, {2}, 3) * embed(c, {2}, 3)).norm(), 1e-11);

  EXPECT_THROW(embed(a, {1, 1}, 2), ValidationError);
  EXPECT_THROW(embed(a, {1, 2}, 2), ValidationError);
  EXPECT_THROW(embed(a, {3}, 2), ValidationError);
}

TEST(Embed, ReversedSiteOrderMatchesSwapConjugation) {
  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(9, rng);
  const Matrix sw = swap_unitary();
  EXPECT_LT((embed(a, {2, 1}, 2) - sw * a * sw).norm(), 1e-12);
}

TEST(ApplyLeft, MatchesEmbeddedProduct) {
  std::mt19937_64 rng(11);
  const Register reg{3, 4};
  const Matrix op = random_matrix(9, rng);
  const Matrix m = random_matrix(81, rng);
  const std::vector<int> sites{4, 2};
  Matrix got = m;
  apply_left(op, sites, reg, got);
  EXPECT_LT((got - embed(op, sites, 4) * m).norm(), 1e-10);

  Matrix rho = m * m.adjoint();
  Matrix conj = rho;
  conjugate_in_place(op, sites, reg, conj);
  const Matrix e = embed(op, sites, 4);
  EXPECT_LT((conj - e * rho * e.adjoint()).norm() / rho.norm(), 1e-12);
}

TEST(Fidelity, BasicValues) {
  const Register one{3, 1};
  const auto psi = PureState::normalized(one, Vector::Constant(3, cplx(1.0, 0.5)));
  EXPECT_NEAR(state_fidelity(DensityState(psi), psi), 1.0, 1e-14);
  EXPECT_NEAR(state_fidelity(DensityState::maximally_mixed(one), psi), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(state_fidelity(DensityState(epr_state()), PureState::basis(Register{3, 2}, 0)), 1.0 / 3.0, 1e-14);

  const PureState phased(one, psi.amplitudes() * std::polar(1.0, 0.7));
  const DensityState rho(Register{3, 1}, Matrix(Vector::Constant(3, 1.0).asDiagonal()) / 3.0 * 0.5 + psi.projector() * 0.5);
  EXPECT_NEAR(state_fidelity(rho, psi), state_fidelity(rho, phased), 1e-14);
  EXPECT_THROW(state_fidelity(rho, epr_state()), ValidationError);
}

TEST(States, InvariantsAreChecked) {
  EXPECT_THROW(PureState(Register{3, 1}, Vector::Ones(3)), ValidationError);
  Matrix bad = Matrix::Identity(3, 3);
  EXPECT_THROW(DensityState(Register{3, 1}, bad), ValidationError);
  Matrix neg = Matrix::Zero(3, 3);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(DensityState(Register{3, 1}, neg), ValidationError);
  Matrix nonherm = Matrix::Identity(3, 3) / 3.0;
  nonherm(0, 1) = 0.1;
  EXPECT_THROW(DensityState(Register{3, 1}, nonherm), ValidationError);
}

TEST(SchmidtRank, ProductControlledPhaseAndSwap) {
  std::mt19937_64 rng(5);
  const Register reg{3, 2};
  const Matrix a = random_matrix(3, rng), b = random_matrix(3, rng);
  EXPECT_EQ(operator_schmidt_rank(kron(a, b), {1}, reg), 1);
  EXPECT_EQ(operator_schmidt_rank(cphase_unitary(), {1}, reg), 3);
  EXPECT_EQ(operator_schmidt_rank(swap_unitary(), {1}, reg), 9);
  EXPECT_THROW(operator_schmidt_rank(swap_unitary(), {1, 2}, reg), ValidationError);

  // Three sites: A on 1, B(x)C on 2,3 -> rank 1 for cut {1}; cphase on (1,3) -> 3.
  const Register r3{3, 3};
  EXPECT_EQ(operator_schmidt_rank(kron(a, kron(b, a)), {2}, r3), 1);
  EXPECT_EQ(operator_schmidt_rank(embed(cphase_unitary(), {1, 3}, 3), {1}, r3), 3);
  EXPECT_EQ(operator_schmidt_rank(embed(cphase_unitary(), {1, 3}, 3), {2}, r3), 1);
}

TEST(PartialTrace, ProductStateAndEpr) {
  const Matrix rho = epr_vector() * epr_vector().adjoint();
  const Register reg{3, 2};
  EXPECT_LT((partial_trace(rho, {1}, reg) - Matrix::Identity(3, 3) / 3.0).norm(), 1e-14);
  std::mt19937_64 rng(1);
  Matrix a = random_matrix(3, rng);
  a = a * a.adjoint();
  a /= a.trace();
  Matrix b = random_matrix(3, rng);
  b = b * b.adjoint();
  b /= b.trace();
  EXPECT_LT((partial_trace(kron(a, b), {2}, reg) - b).norm(), 1e-14);
  EXPECT_LT((partial_trace(kron(a, b), {2, 1}, reg) - kron(b, a)).norm(), 1e-14);
}

TEST(Expm, MatchesTaylorSeries) {
  std::mt19937_64 rng(9);
  Matrix h = random_matrix(9, rng);
  h = (0.5 * (h + h.adjoint())).eval();
  const double t = 0.3;
  // Taylor oracle with scaling and squaring.
  const int squarings = 10;
  const Matrix a = (-kI * t / std::pow(2.0, squarings)) * h;
  Matrix term = Matrix::Identity(9, 9), sum = Matrix::Identity(9, 9);
  for (int k = 1; k < 20; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  EXPECT_LT((expm_hermitian(h, t) - sum).norm(), 1e-11);
}

TEST(Distances, PhaseAlignment) {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(9, rng);
  EXPECT_LT(distance_up_to_phase(a * std::polar(1.0, 1.3), a), 1e-14);
  Vector d(9);
  for (int i = 0; i < 9; ++i) d(i) = std::polar(1.0, 0.37 * i);
  EXPECT_LT(distance_up_to_left_diagonal(d.asDiagonal() * a, a), 1e-13);
  EXPECT_GT(distance_up_to_left_diagonal(a, csum_unitary()), 0.1);
}
