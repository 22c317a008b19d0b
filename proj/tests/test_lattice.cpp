#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rydberg/lattice.hpp"

using namespace rydberg;

namespace {

Matrix3c random_density(std::mt19937_64& gen) {
  return random_init(1, gen())[0].rho;
}

Matrix3c random_hermitian(std::mt19937_64& gen, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix3c a;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a(r, c) = cplx(n(gen), n(gen));
  return 0.5 * (a + a.adjoint());
}

Rates random_rates(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  return {u(gen), u(gen), u(gen)};
}

CouplingTable single_site_table() { return build_coupling_table(LatticeConfig{}, 1.0); }

double max_abs(const Matrix3c& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(DipoleCoupling, AngularAndRadialLaw) {
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  EXPECT_NEAR(dipole_coupling({0, 0, 1}, 1.0, z), -2.0, 1e-15);
  EXPECT_NEAR(dipole_coupling({1, 0, 0}, 1.0, z), 1.0, 1e-15);
  // cos^2 theta = 1/3 along a body diagonal
  EXPECT_NEAR(dipole_coupling({1, 1, 1}, 5.0, z), 0.0, 1e-15);
  const Eigen::Vector3d r(0.3, -0.7, 0.4);
  EXPECT_NEAR(dipole_coupling(2.0 * r, 3.0, z), dipole_coupling(r, 3.0, z) / 8.0, 1e-14);
  // axis need not be normalised
  EXPECT_NEAR(dipole_coupling({0, 0, 1}, 1.0, 3.0 * z), -2.0, 1e-15);
  EXPECT_THROW(dipole_coupling({0, 0, 0}, 1.0, z), std::domain_error);
}

TEST(CouplingTable, SmallLattices) {
  LatticeConfig lat;
  EXPECT_EQ(build_coupling_table(lat, 1.0).ordered_pairs(), 0u);

  lat.dims = {2, 1, 1};
  lat.cutoff_radius = lat.spacing;
  const auto t2 = build_coupling_table(lat, 1.0);
  EXPECT_EQ(t2.unordered_pairs(), 1u);
  EXPECT_EQ(t2.ordered_pairs(), 2u);
  EXPECT_NEAR(*t2.find(0, 1), 1.0 / std::pow(lat.spacing, 3), 1e-9);
}

TEST(CouplingTable, CubeNearestNeighbours) {
  LatticeConfig lat;
  lat.dims = {3, 3, 3};
  lat.cutoff_radius = lat.spacing;
  const auto t = build_coupling_table(lat, 2.0);
  EXPECT_EQ(oracle::count_pairs(lat), 54u);
  EXPECT_EQ(t.unordered_pairs(), 54u);
  EXPECT_EQ(t.ordered_pairs(), 108u);
  EXPECT_GT(t.truncation_error(), 0.0);
}

TEST(CouplingTable, SymmetricWithinCutoff) {
  LatticeConfig lat;
  lat.dims = {4, 3, 2};
  lat.cutoff_radius = 2.5 * lat.spacing;
  lat.quantization_axis = Eigen::Vector3d(1, 2, 3);
  const auto t = build_coupling_table(lat, 1.7);
  EXPECT_EQ(t.unordered_pairs(), oracle::count_pairs(lat));
  for (std::size_t i = 0; i < t.sites(); ++i) {
    for (const auto& e : t.row(i)) {
      ASSERT_NE(e.site, i);
      const auto back = t.find(e.site, i);
      ASSERT_TRUE(back.has_value());
      EXPECT_EQ(*back, e.v);
      EXPECT_LE((lat.position(i) - lat.position(e.site)).norm(), lat.cutoff_radius * (1 + 1e-9));
    }
  }
  lat.cutoff_radius = 0.5 * lat.spacing;
  EXPECT_THROW(build_coupling_table(lat, 1.0), std::domain_error);
}

TEST(EffectiveHamiltonian, DecoupledLimitAndNeighborField) {
  LatticeConfig lat;
  lat.dims = {2, 1, 1};
  const auto table = build_coupling_table(lat, 1.0);
  DriveParams drive;
  drive.omega = 0.8;
  drive.delta = 0.3;

  const std::vector<cplx> zero(2, 0.0);
  const Matrix3c h0 = effective_hamiltonian(0, drive, table, zero);
  EXPECT_EQ(h0, oracle::drive_hamiltonian(0.8, 0.3));
  EXPECT_EQ(h0(kS, kP), cplx(0.0));

  const cplx c(0.2, -0.1);
  const double v = *table.find(0, 1);
  const std::vector<cplx> coh{0.0, c};
  const Matrix3c h = effective_hamiltonian(0, drive, table, coh);
  EXPECT_EQ(h(kS, kP), v * c);
  EXPECT_EQ(h(kS, kS), cplx(-0.3));
  EXPECT_EQ(h(kS, kG), cplx(0.4));
  EXPECT_EQ(h, h.adjoint().eval());

  EXPECT_EQ(effective_hamiltonian(0, drive, table, std::map<std::size_t, cplx>{{1, c}}), h);
  EXPECT_THROW(effective_hamiltonian(0, drive, table, std::map<std::size_t, cplx>{}), std::out_of_range);
  EXPECT_THROW(effective_hamiltonian(0, drive, table, std::vector<cplx>{0.0}), std::out_of_range);
}

TEST(EffectiveHamiltonian, AlwaysHermitian) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n(0.0, 1.0);
  LatticeConfig lat;
  lat.dims = {3, 3, 1};
  const auto table = build_coupling_table(lat, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<cplx> coh(9);
    for (auto& c : coh) c = cplx(n(gen), n(gen));
    DriveParams d;
    d.omega = n(gen);
    d.delta = n(gen);
    for (std::size_t i = 0; i < 9; ++i) {
      const Matrix3c h = effective_hamiltonian(i, d, table, coh);
      EXPECT_EQ(h, h.adjoint().eval());
    }
  }
}

TEST(LindbladRhs, FixedPointsAndDecay) {
  const Rates rates{0.3, 0.2, 0.1};
  const Matrix3c h0 = oracle::drive_hamiltonian(0.0, 0.0);
  EXPECT_EQ(max_abs(lindblad_rhs(SiteState::pure(kG), h0, rates)), 0.0);
  const Matrix3c ds = lindblad_rhs(SiteState::pure(kS), h0, rates);
  EXPECT_DOUBLE_EQ(ds(kS, kS).real(), -(0.3 + 0.1));
  EXPECT_DOUBLE_EQ(ds(kG, kG).real(), 0.3);
  EXPECT_DOUBLE_EQ(ds(kP, kP).real(), 0.1);
  const Matrix3c dp = lindblad_rhs(SiteState::pure(kP), h0, rates);
  EXPECT_DOUBLE_EQ(dp(kP, kP).real(), -0.2);
}

TEST(LindbladRhs, TracelessAndMatchesLiouvillian) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix3c rho = random_density(gen);
    const Matrix3c h = random_hermitian(gen, 2.0);
    const Rates rates = random_rates(gen);
    const Matrix3c rhs = lindblad_rhs(rho, h, rates);
    EXPECT_LT(std::abs(rhs.trace()), 1e-12);
    const Matrix3c ref = oracle::unvec(oracle::liouvillian(h, rates) * oracle::vec(rho));
    EXPECT_LT(max_abs(rhs - ref), 1e-13);
  }
}

TEST(Rk4Step, GroundStateIsStationary) {
  LatticeConfig lat;
  lat.dims = {2, 2, 2};
  const auto table = build_coupling_table(lat, 5.0);
  LatticeState st(lat.size(), SiteState::pure(kG));
  DriveParams d;
  const auto next = rk4_step(st, 0.01, d, table, Rates{0.3, 0.2, 0.1});
  for (std::size_t i = 0; i < st.size(); ++i) EXPECT_EQ(next[i].rho, st[i].rho);
  EXPECT_THROW(rk4_step(st, 0.0, d, table, Rates{}), std::domain_error);
  EXPECT_THROW(rk4_step(st, -1.0, d, table, Rates{}), std::domain_error);
}

TEST(Rk4Step, SingleSiteMatchesMatrixExponential) {
  std::mt19937_64 gen(23);
  const auto table = single_site_table();
  for (int trial = 0; trial < 20; ++trial) {
    const Rates rates = random_rates(gen);
    DriveParams d;
    d.omega = 1.0 + std::uniform_real_distribution<double>(0.0, 2.0)(gen);
    d.delta = std::uniform_real_distribution<double>(-1.0, 1.0)(gen);
    const Matrix3c h = oracle::drive_hamiltonian(d.omega, d.delta);
    const LatticeState st{SiteState{random_density(gen)}};

    auto one_step_error = [&](double dt) {
      const auto next = rk4_step(st, dt, d, table, rates);
      return max_abs(next[0].rho - oracle::propagate_exact(st[0].rho, h, rates, dt));
    };
    const double e1 = one_step_error(0.02);
    const double e2 = one_step_error(0.01);
    // local error is fifth order
    EXPECT_LT(e1, 1e-8);
    EXPECT_GT(e1 / e2, 16.0);
    EXPECT_LT(e1 / e2, 40.0);

    auto trace_drift = std::abs(rk4_step(st, 0.02, d, table, rates)[0].trace() - st[0].trace());
    EXPECT_LT(trace_drift, 1e-10);
  }
}

TEST(Rk4Step, GlobalErrorIsFourthOrder) {
  const auto table = single_site_table();
  const Rates rates{0.4, 0.3, 0.2};
  DriveParams d;
  d.omega = 2.0;
  d.delta = 0.5;
  const Matrix3c h = oracle::drive_hamiltonian(d.omega, d.delta);
  const LatticeState init = random_init(1, 99);
  const double t_end = 2.0;
  const Matrix3c exact = oracle::propagate_exact(init[0].rho, h, rates, t_end);
  auto error = [&](int steps) {
    LatticeState st = init;
    for (int i = 0; i < steps; ++i) st = rk4_step(st, t_end / steps, d, table, rates);
    return max_abs(st[0].rho - exact);
  };
  const double ratio = error(40) / error(80);
  EXPECT_GT(ratio, 14.0);
  EXPECT_LT(ratio, 18.0);
}

TEST(RandomInit, DeterministicAndValid) {
  LatticeConfig lat;
  lat.dims = {3, 2, 2};
  const auto a = random_init(lat, 42);
  const auto b = random_init(lat, 42);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].rho, b[i].rho);
    EXPECT_LT(a[i].hermiticity_defect(), 1e-15);
    EXPECT_NEAR(a[i].trace(), 1.0, 1e-14);
    EXPECT_GT(a[i].min_eigenvalue(), -1e-12);
  }
}

TEST(RandomInit, SeedsGiveDifferentStates) {
  std::vector<LatticeState> states;
  for (std::uint64_t seed = 0; seed < 100; ++seed) states.push_back(random_init(4, seed));
  for (std::size_t a = 0; a < states.size(); ++a) {
    for (std::size_t b = a + 1; b < states.size(); ++b) {
      double diff = 0.0;
      for (std::size_t i = 0; i < 4; ++i) diff = std::max(diff, max_abs(states[a][i].rho - states[b][i].rho));
      EXPECT_GT(diff, 1e-6) << a << " vs " << b;
    }
  }
}

TEST(SteadyState, TwoLevelLimit) {
  // Gamma_r = 0, delta = 0, Omega = Gamma_s: saturation parameter 2
  const double gs = 0.5;
  DriveParams d;
  d.omega = gs;
  SteadyStateOptions opts;
  opts.tol = 1e-12;
  opts.t_max = 500.0;
  opts.dt = 0.01;
  const auto rep = evolve_to_steady_state(random_init(1, 5), d, single_site_table(), Rates{gs, 0.3, 0.0}, opts);
  ASSERT_TRUE(rep.converged);
  EXPECT_NEAR(rep.populations[kS], oracle::two_level_excited_population(gs, gs), 1e-9);
  EXPECT_NEAR(rep.populations[kS], 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(rep.populations[kP], 0.0, 1e-9);
}

TEST(SteadyState, SingleSiteMatchesNullSpace) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Rates rates = random_rates(gen);
    DriveParams d;
    d.omega = 1.0 + u(gen);
    d.delta = u(gen);
    SteadyStateOptions opts;
    opts.tol = 1e-12;
    opts.t_max = 2000.0;
    const auto rep = evolve_to_steady_state(random_init(1, gen()), d, single_site_table(), rates, opts);
    ASSERT_TRUE(rep.converged);
    const Matrix3c ref = oracle::null_space_steady_state(oracle::drive_hamiltonian(d.omega, d.delta), rates);
    EXPECT_LT(max_abs(rep.final_state[0].rho - ref), 1e-8);
    EXPECT_LT(rep.max_trace_drift, 1e-8);
    EXPECT_LT(rep.max_hermiticity_defect, 1e-10);
    EXPECT_GT(rep.min_eigenvalue, -1e-8);
  }
}

TEST(SteadyState, ReportsNonConvergence) {
  DriveParams d;
  d.omega = 1.0;
  SteadyStateOptions opts;
  opts.t_max = 0.5;
  const auto rep = evolve_to_steady_state(random_init(1, 1), d, single_site_table(), Rates{0.1, 0.1, 0.1}, opts);
  EXPECT_FALSE(rep.converged);
  EXPECT_GE(rep.t, 0.5);
  EXPECT_GT(rep.residual, opts.tol);
  EXPECT_THROW(evolve_to_steady_state(random_init(1, 1), d, single_site_table(), Rates{}, {.tol = 0.0}),
               std::domain_error);
}

TEST(SteadyState, CoherenceFreeUniformLatticeEvolvesLikeOneAtom) {
  LatticeConfig lat;
  lat.dims = {3, 3, 2};
  const auto table = build_coupling_table(lat, 50.0);
  Matrix3c rho = random_init(1, 77)[0].rho;
  rho(kS, kP) = rho(kP, kS) = rho(kG, kP) = rho(kP, kG) = 0.0;
  rho /= rho.trace().real();
  const LatticeState uniform(lat.size(), SiteState{rho});
  const LatticeState single{SiteState{rho}};
  DriveParams d;
  d.omega = 0.9;
  d.delta = 0.2;
  const Rates rates{0.2, 0.1, 0.05};

  LatticeState a = uniform, b = single;
  const auto single_table = single_site_table();
  for (int step = 0; step < 200; ++step) {
    a = rk4_step(a, 0.01, d, table, rates);
    b = rk4_step(b, 0.01, d, single_table, rates);
  }
  for (const auto& site : a) EXPECT_EQ(site.rho, b[0].rho);
}

TEST(SteadyState, ThreadCountDoesNotChangeTrajectory) {
  LatticeConfig lat;
  lat.dims = {3, 3, 3};
  const auto table = build_coupling_table(lat, 20.0);
  DriveParams d;
  d.omega = 1.0;
  const Rates rates{0.3, 0.1, 0.1};
  const auto init = random_init(lat, 8);
  LatticeState a = init, b = init;
  for (int step = 0; step < 20; ++step) {
    a = rk4_step(a, 1e-3, d, table, rates, 1);
    b = rk4_step(b, 1e-3, d, table, rates, 4);
  }
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].rho, b[i].rho);
}

TEST(SteadyState, SmallLatticesAreSelfConsistentFixedPoints) {
  DriveParams d;
  d.omega = 1.0;
  d.delta = 0.4;
  const Rates rates{0.5, 1.0, 0.2};
  for (int n : {1, 2}) {
    LatticeConfig lat;
    lat.dims = {n, 1, 1};
    lat.cutoff_radius = lat.spacing;
    const auto table = build_coupling_table(lat, 10.0 * std::pow(lat.spacing, 3));
    SteadyStateOptions opts;
    opts.tol = 1e-12;
    opts.t_max = 2000.0;
    const auto rep = evolve_to_steady_state(random_init(lat, 3), d, table, rates, opts);
    ASSERT_TRUE(rep.converged);

    std::vector<Matrix3c> evolved, start;
    for (const auto& s : rep.final_state) evolved.push_back(s.rho);
    for (const auto& s : random_init(lat, 3)) start.push_back(s.rho);
    const auto swept = oracle::self_consistent_sweep(evolved, d, table, rates);
    const auto iterated = oracle::self_consistent_steady_state(start, d, table, rates);
    for (std::size_t i = 0; i < evolved.size(); ++i) {
      EXPECT_LT(max_abs(swept[i] - evolved[i]), 1e-8) << "n = " << n;
      EXPECT_LT(max_abs(iterated[i] - evolved[i]), 1e-8) << "n = " << n;
    }
  }
}

TEST(SteadyState, LongLivedPStateDestabilisesCoherenceFreeState) {
  LatticeConfig lat;
  lat.dims = {2, 2, 2};
  const double omega = mhz(0.14);
  const auto table = build_coupling_table(lat, 100.0 * omega * std::pow(lat.spacing, 3));
  DriveParams d;
  d.omega = omega;
  auto grow = [&](double gamma_p) {
    const Rates rates{mhz(0.036), gamma_p, mhz(0.009)};
    const Matrix3c fixed = oracle::null_space_steady_state(oracle::drive_hamiltonian(omega, 0.0), rates);
    LatticeState st = random_init(lat, 11);
    for (auto& site : st) site.rho = fixed + 1e-6 * (site.rho - fixed);
    double start = 0.0;
    for (const auto& site : st) start = std::max(start, std::abs(site.ps_coherence()));
    const double dt = 0.25 / table.max_abs_coupling();
    for (int step = 0; step < static_cast<int>(100.0 / dt); ++step) st = rk4_step(st, dt, d, table, rates);
    double end = 0.0;
    for (const auto& site : st) end = std::max(end, std::abs(site.ps_coherence()));
    return end / start;
  };
  EXPECT_GT(grow(mhz(0.005)), 10.0);
  EXPECT_LT(grow(mhz(0.045)), 0.1);
}
