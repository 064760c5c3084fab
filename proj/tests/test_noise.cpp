#include "oracles.hpp"
#include "published_values.hpp"
#include "qutrit/device_config.hpp"
#include "qutrit/noise.hpp"
#include "qutrit/readout.hpp"
#include "qutrit/rotations.hpp"
#include "qutrit/synthesis.hpp"
#include "qutrit/transmon.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace qutrit;

namespace {

constexpr double kUs = 1e-6;

// Choi matrix written out from the action on |i><j| (independent of the Kraus route).
Matrix choi_by_action(const QuantumChannel& ch) {
  const Eigen::Index d = ch.dim();
  Matrix c = Matrix::Zero(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      e(i, j) = 1.0;
      c.block(i * d, j * d, d, d) = ch.apply(e);
    }
  return c;
}

double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix proj(int k) {
  Matrix p = Matrix::Zero(3, 3);
  p(k, k) = 1.0;
  return p;
}

// Lindblad cascade integrated by small Euler-free steps: each step applies the
// first-order-exact population map on diagonal states.
Eigen::Vector3d cascade_populations(Eigen::Vector3d p, double t, double t1_10, double t1_21, int steps) {
  const double dt = t / steps;
  for (int s = 0; s < steps; ++s) {
    // RK4 on dp/dt = A p.
    auto f = [&](const Eigen::Vector3d& x) {
      return Eigen::Vector3d(x(1) / t1_10, -x(1) / t1_10 + x(2) / t1_21, -x(2) / t1_21);
    };
    const Eigen::Vector3d k1 = f(p), k2 = f(p + 0.5 * dt * k1), k3 = f(p + 0.5 * dt * k2), k4 = f(p + dt * k3);
    p += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return p;
}

std::string data_path() { return std::string(QUTRIT_SOURCE_DIR) + "/data/device_paper.json"; }

}  // namespace

// ---------------------------------------------------------------------------
// Channels

TEST(Channels, RandomDrawsAreCptp) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t1(5.0, 150.0), t2(2.0, 150.0), tt(0.0, 200.0);
  int fallbacks = 0;
  for (int k = 0; k < 500; ++k) {
    const QutritLifetimes q{t1(rng) * kUs, t1(rng) * kUs, t2(rng) * kUs, t2(rng) * kUs, t2(rng) * kUs};
    const double t = tt(rng) * kUs;
    const auto ad = amplitude_damping_channel(t, q.t1_10, q.t1_21);
    EXPECT_NO_THROW(ad.validate());
    QuantumChannel dp;
    try {
      dp = dephasing_channel(t, q.t2_01, q.t2_12, q.t2_02);
    } catch (const NumericalError&) {
      ++fallbacks;
      dp = dephasing_channel(t, q.t2_01, q.t2_12, q.t2_02, DephasingFallback::project_psd);
    }
    EXPECT_NO_THROW(dp.validate());
    const auto both = idle_noise_channel(q, t, 1.0, DephasingFallback::project_psd);
    EXPECT_NO_THROW(both.validate());
    EXPECT_GE(min_eig(choi_by_action(both)), -1e-9);
  }
  // Some independent T2 triples are unrealisable; the fallback must have been exercised.
  EXPECT_GT(fallbacks, 0);
}

TEST(Channels, ChoiMatchesActionDefinition) {
  const auto ch = idle_noise_channel({70 * kUs, 38 * kUs, 73 * kUs, 13 * kUs, 16 * kUs}, 3 * kUs);
  EXPECT_LT((ch.choi() - choi_by_action(ch)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AmplitudeDamping, ZeroTimeIsIdentity) {
  const auto ch = amplitude_damping_channel(0.0, 70 * kUs, 38 * kUs);
  std::mt19937_64 rng(2);
  const Matrix rho = oracle::random_density(3, rng);
  EXPECT_LT((ch.apply(rho) - rho).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AmplitudeDamping, Semigroup) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 100.0);
  for (int k = 0; k < 50; ++k) {
    const double a = u(rng) * kUs, b = u(rng) * kUs, t10 = u(rng) * kUs, t21 = u(rng) * kUs;
    const auto two = compose(amplitude_damping_channel(a, t10, t21), amplitude_damping_channel(b, t10, t21));
    const auto one = amplitude_damping_channel(a + b, t10, t21);
    EXPECT_LT((two.choi() - one.choi()).cwiseAbs().maxCoeff(), 1e-10);
  }
  // Equal rates exercise the degenerate branch of the cascade.
  const auto two = compose(amplitude_damping_channel(5 * kUs, 30 * kUs, 30 * kUs), amplitude_damping_channel(7 * kUs, 30 * kUs, 30 * kUs));
  EXPECT_LT((two.choi() - amplitude_damping_channel(12 * kUs, 30 * kUs, 30 * kUs).choi()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(AmplitudeDamping, CascadeMatchesSmallSteps) {
  const double t10 = 70 * kUs, t21 = 38 * kUs;
  for (double t : {10 * kUs, 60 * kUs, 400 * kUs}) {
    const Matrix out = amplitude_damping_channel(t, t10, t21).apply(proj(2));
    const Eigen::Vector3d ref = cascade_populations({0, 0, 1}, t, t10, t21, 4000);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(out(k, k).real(), ref(k), 1e-9) << "t=" << t;
    EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
  }
  // Many small steps reach the same state as one long step.
  QuantumChannel acc = QuantumChannel::identity(3);
  const auto step = amplitude_damping_channel(20 * kUs, t10, t21);
  for (int k = 0; k < 100; ++k) acc = compose(acc, step);
  const Matrix far = acc.apply(proj(2));
  EXPECT_NEAR(far(0, 0).real(), amplitude_damping_channel(2000 * kUs, t10, t21).apply(proj(2))(0, 0).real(), 1e-10);
  EXPECT_GT(far(0, 0).real(), 1.0 - 1e-10);
}

TEST(AmplitudeDamping, HalfLife) {
  const double t1 = 70 * kUs;
  const Matrix out = amplitude_damping_channel(t1 * std::log(2.0), t1, 38 * kUs).apply(proj(1));
  EXPECT_NEAR(out(1, 1).real(), 0.5, 1e-12);
  EXPECT_NEAR(out(0, 0).real(), 0.5, 1e-12);
}

TEST(AmplitudeDamping, RejectsNegativeTime) {
  EXPECT_THROW(amplitude_damping_channel(-1e-9, 70 * kUs, 38 * kUs), ValidationError);
}

TEST(Dephasing, ZeroTimeAndFullDephasing) {
  std::mt19937_64 rng(5);
  const Matrix rho = oracle::random_density(3, rng);
  const auto id = dephasing_channel(0.0, 73 * kUs, 13 * kUs, 16 * kUs);
  EXPECT_LT((id.apply(rho) - rho).cwiseAbs().maxCoeff(), 1e-14);
  const auto full = dephasing_from_gram(dephasing_gram(0, 0, 0));
  EXPECT_NO_THROW(full.validate());
  const Matrix diag = rho.diagonal().asDiagonal();
  EXPECT_LT((full.apply(rho) - diag).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Dephasing, PaperQ1AtOneMicrosecond) {
  const auto ch = dephasing_channel(1 * kUs, 73 * kUs, 13 * kUs, 16 * kUs);
  EXPECT_NO_THROW(ch.validate());
  EXPECT_GE(min_eig(choi_by_action(ch)), -1e-9);
  Matrix rho = Matrix::Constant(3, 3, 1.0 / 3.0);
  const Matrix out = ch.apply(rho);
  EXPECT_NEAR(std::abs(out(0, 1)) / std::abs(rho(0, 1)), std::exp(-1.0 / 73.0), 1e-12);
  EXPECT_NEAR(std::abs(out(1, 2)) / std::abs(rho(1, 2)), std::exp(-1.0 / 13.0), 1e-12);
  EXPECT_NEAR(std::abs(out(0, 2)) / std::abs(rho(0, 2)), std::exp(-1.0 / 16.0), 1e-12);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(out(k, k).real(), 1.0 / 3.0, 1e-14);
}

TEST(Dephasing, UnrealisableTripleThrowsWithEigenvalue) {
  // 0-1 and 1-2 fully coherent but 0-2 fully dephased: impossible.
  try {
    dephasing_from_gram(dephasing_gram(1.0, 1.0, 0.0));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("eigenvalue"), std::string::npos);
  }
  const auto fb = dephasing_from_gram(dephasing_gram(1.0, 1.0, 0.0), DephasingFallback::project_psd);
  EXPECT_NO_THROW(fb.validate());
  const Matrix out = fb.apply(Matrix::Identity(3, 3) / 3.0);
  EXPECT_LT((out - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyChannel, IdentityAndEprHalfDephasing) {
  const DensityState epr(epr_state());
  const auto same = apply_channel(QuantumChannel::identity(3), epr, {1});
  EXPECT_LT((same.matrix() - epr.matrix()).cwiseAbs().maxCoeff(), 1e-15);

  const auto full = dephasing_from_gram(dephasing_gram(0, 0, 0));
  const auto out = apply_channel(full, epr, {2});
  // Direct computation: only |kk><kk| terms survive, each weighted 1/3.
  Matrix ref = Matrix::Zero(9, 9);
  for (int k = 0; k < 3; ++k) ref(4 * k, 4 * k) = 1.0 / 3.0;
  EXPECT_LT((out.matrix() - ref).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(out.matrix().isApprox(out.matrix().adjoint(), 0.0));
}

TEST(ApplyChannel, PreservesTraceOnRandomStates) {
  std::mt19937_64 rng(8);
  const Register reg{3, 3};
  const auto ch = idle_noise_channel({70 * kUs, 38 * kUs, 73 * kUs, 13 * kUs, 16 * kUs}, 20 * kUs);
  for (int k = 0; k < 20; ++k) {
    const DensityState rho(reg, oracle::random_density(27, rng));
    const auto out = apply_channel(ch, rho, {static_cast<int>(1 + k % 3)});
    EXPECT_NEAR(out.matrix().trace().real(), 1.0, 1e-10);
    EXPECT_EQ(out.matrix(), out.matrix().adjoint().eval());
  }
  EXPECT_THROW(apply_channel(QuantumChannel::identity(9), DensityState::maximally_mixed(Register{3, 1}), {1}), ValidationError);
}

TEST(ApplyChannel, CompositionOrder) {
  const auto ad = amplitude_damping_channel(30 * kUs, 70 * kUs, 38 * kUs);
  const auto dp = dephasing_channel(30 * kUs, 73 * kUs, 13 * kUs, 16 * kUs);
  // Both act on coherences by entrywise factors and do not move coherence
  // between level pairs, so this pair commutes exactly.
  EXPECT_LT((compose(ad, dp).choi() - compose(dp, ad).choi()).cwiseAbs().maxCoeff(), 1e-13);
  // A level-moving step does not commute with damping.
  const auto mix = QuantumChannel::unitary(rotation_unitary({Subspace::s01, Axis::y, kPi / 2, 0.0}));
  const auto a = compose(ad, mix), b = compose(mix, ad);
  EXPECT_NO_THROW(a.validate());
  EXPECT_NO_THROW(b.validate());
  EXPECT_GT((a.choi() - b.choi()).cwiseAbs().maxCoeff(), 1e-3);
}

// ---------------------------------------------------------------------------
// Readout

TEST(Readout, IdentityConfusionIsExact) {
  const DensityState rho(PureState::basis(Register{3, 2}, 5));  // |12>
  const std::vector<Confusion> id(2, Confusion::Identity());
  const auto c = readout_sample(rho, id, 100, 7);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.at("12"), 100u);
  const auto corrected = readout_correct(c, id);
  EXPECT_DOUBLE_EQ(corrected(5), 1.0);
}

TEST(Readout, InfiniteShotLimit) {
  const auto m = confusion_from_fidelities({0.99, 0.97, 0.95});
  EXPECT_NO_THROW(validate_confusion(m));
  const DensityState zero(PureState::basis(Register{3, 1}, 0));
  const auto p = measured_distribution(zero.matrix(), {m});
  EXPECT_NEAR(p(0), 0.99, 1e-15);
  EXPECT_NEAR(p(1), 0.005, 1e-15);
}

TEST(Readout, ChiSquareGoodnessOfFit) {
  // alpha = 0.001, 8 degrees of freedom.
  constexpr double kCritical = 26.12448155837614;
  std::mt19937_64 rng(13);
  const DensityState rho(Register{3, 2}, oracle::random_density(9, rng));
  const std::vector<Confusion> ms{confusion_from_fidelities({0.99, 0.97, 0.95}), confusion_from_fidelities({0.98, 0.96, 0.93})};
  // Expected distribution from an explicit Kronecker product.
  Eigen::MatrixXd big(9, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) big(i, j) = ms[0](i / 3, j / 3) * ms[1](i % 3, j % 3);
  const Eigen::VectorXd p = big * rho.matrix().diagonal().real();
  constexpr std::uint64_t shots = 100000;
  int passes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = readout_sample(rho, ms, shots, seed);
    double chi2 = 0.0;
    for (int l = 0; l < 9; ++l) {
      const double obs = c.count(outcome_string(static_cast<std::size_t>(l), 2)) ? static_cast<double>(c.at(outcome_string(static_cast<std::size_t>(l), 2))) : 0.0;
      const double exp = p(l) * shots;
      chi2 += (obs - exp) * (obs - exp) / exp;
    }
    if (chi2 < kCritical) ++passes;
  }
  // Each seed fails with probability 0.001.
  EXPECT_GE(passes, 19);
}

TEST(Readout, DeterministicGivenSeed) {
  const DensityState rho = DensityState::maximally_mixed(Register{3, 2});
  const std::vector<Confusion> ms(2, confusion_from_fidelities({0.99, 0.97, 0.95}));
  EXPECT_EQ(readout_sample(rho, ms, 5000, 42), readout_sample(rho, ms, 5000, 42));
  EXPECT_NE(readout_sample(rho, ms, 5000, 42), readout_sample(rho, ms, 5000, 43));
  EXPECT_NE(readout_sample(rho, ms, 5000, 42, 0), readout_sample(rho, ms, 5000, 42, 1));
}

TEST(Readout, CorrectionInvertsExpectation) {
  std::mt19937_64 rng(21);
  const DensityState rho(Register{3, 2}, oracle::random_density(9, rng));
  const std::vector<Confusion> ms{confusion_from_fidelities({0.99, 0.97, 0.95}), confusion_from_fidelities({0.9, 0.8, 0.85})};
  // Expected counts at a huge shot number stand in for the infinite limit.
  const Eigen::VectorXd p = measured_distribution(rho.matrix(), ms);
  Counts expected;
  constexpr double big = 1e15;
  for (int l = 0; l < 9; ++l) expected[outcome_string(static_cast<std::size_t>(l), 2)] = static_cast<std::uint64_t>(std::llround(p(l) * big));
  const auto corr = readout_correct(expected, ms);
  EXPECT_LT((corr - rho.matrix().diagonal().real()).cwiseAbs().maxCoeff(), 1e-9);

  const auto finite = readout_correct(readout_sample(rho, ms, 997, 3), ms);
  EXPECT_NEAR(finite.sum(), 1.0, 1e-9);
}

TEST(Readout, SingularConfusionThrows) {
  Confusion m;
  m << 0.5, 0.5, 0.0,
       0.5, 0.5, 0.0,
       0.0, 0.0, 1.0;
  Counts c{{"0", 10}};
  EXPECT_THROW(readout_correct(c, {m}), NumericalError);
  Confusion bad = Confusion::Identity();
  bad(0, 0) = 0.9;
  EXPECT_THROW(validate_confusion(bad), ValidationError);
}

// ---------------------------------------------------------------------------
// Transmon formulas

TEST(Transmon, DispersionRatioAtPaperOperatingPoint) {
  const auto p = TransmonParams::from_ratio(73.0);
  const double ratio = charge_dispersion(2, p) / charge_dispersion(1, p);
  EXPECT_NEAR(std::abs(ratio), 8.0 * std::sqrt(73.0 / 2.0), 1e-9);
  // Measured: 12 kHz / 261 Hz.
  EXPECT_NEAR(std::abs(ratio), 12000.0 / 261.0, 0.15 * 12000.0 / 261.0);
}

TEST(Transmon, SignAlternatesAndDecays) {
  for (double r : {10.0, 50.0, 73.0, 120.0})
    for (int m = 0; m < 5; ++m) EXPECT_EQ(charge_dispersion(m, TransmonParams::from_ratio(r)) > 0, m % 2 == 0);
  for (int m = 0; m < 4; ++m) {
    double prev = std::abs(charge_dispersion(m, TransmonParams::from_ratio(20.0)));
    for (double r = 21.0; r <= 200.0; r += 1.0) {
      const double cur = std::abs(charge_dispersion(m, TransmonParams::from_ratio(r)));
      EXPECT_LT(cur, prev);
      prev = cur;
    }
  }
}

TEST(Transmon, RelativeAnharmonicity) {
  EXPECT_DOUBLE_EQ(relative_anharmonicity(TransmonParams::from_ratio(50.0)), -0.05);
  EXPECT_NEAR(relative_anharmonicity(TransmonParams::from_ratio(73.0)), -1.0 / std::sqrt(584.0), 1e-15);
  EXPECT_NEAR(relative_anharmonicity(TransmonParams::from_ratio(73.0)), -0.0414, 5e-5);
  EXPECT_GT(relative_anharmonicity(TransmonParams::from_ratio(100.0)), relative_anharmonicity(TransmonParams::from_ratio(50.0)));
  EXPECT_THROW(relative_anharmonicity({0.0, 1.0}), ValidationError);
}

// ---------------------------------------------------------------------------
// Device config

TEST(DeviceConfig, BundledFileIsValid) {
  const auto rep = validate_config(data_path());
  ASSERT_TRUE(rep.ok()) << rep.summary();
  const auto& cfg = *rep.config;
  ASSERT_EQ(cfg.size(), 5);
  EXPECT_NEAR(cfg.couplings.get(1, 2).a22, published::q1q2().a22, 1e-9);
  EXPECT_NEAR(cfg.couplings.get(1, 2).a22, -743e3 * 2 * kPi, 1e-6);
  EXPECT_NEAR(cfg.qutrit(1).t2star_01, 73 * kUs, 1e-15);
  EXPECT_NEAR(cfg.qutrit(3).omega01, 5.776e9 * 2 * kPi, 1.0);
  EXPECT_NEAR(cfg.lifetimes(1).t2_12, 13 * kUs, 1e-15);
  for (const auto& m : cfg.confusions()) EXPECT_NO_THROW(validate_confusion(m));
  for (const auto& [a, b] : {std::pair{2, 3}, {3, 4}, {4, 5}}) EXPECT_TRUE(cfg.couplings.has(a, b));
}

TEST(DeviceConfig, ReportsFieldPaths) {
  std::ifstream in(data_path());
  nlohmann::json doc;
  in >> doc;

  auto zero_t1 = doc;
  zero_t1["qutrits"][2]["t1_10_us"] = 0;
  auto rep = parse_device_config(zero_t1);
  ASSERT_FALSE(rep.ok());
  EXPECT_NE(rep.summary().find("$.qutrits[2].t1_10_us"), std::string::npos) << rep.summary();

  auto missing = doc;
  missing["couplings"].erase(2);
  rep = parse_device_config(missing);
  ASSERT_FALSE(rep.ok());
  EXPECT_NE(rep.summary().find("adjacent pair (3,4)"), std::string::npos) << rep.summary();

  auto bad_m = doc;
  bad_m["qutrits"][0]["confusion"] = {{0.9, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  rep = parse_device_config(bad_m);
  EXPECT_NE(rep.summary().find("$.qutrits[0].confusion"), std::string::npos) << rep.summary();

  auto dup = doc;
  dup["couplings"].push_back(doc["couplings"][0]);
  rep = parse_device_config(dup);
  EXPECT_NE(rep.summary().find("duplicate"), std::string::npos);
}

TEST(DeviceConfig, LoadThrowsOnMissingFile) {
  EXPECT_THROW(load_device_config("/nonexistent/device.json"), ValidationError);
}
