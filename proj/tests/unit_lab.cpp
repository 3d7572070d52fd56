#include <doctest.h>

#include "liesim/lab.hpp"

using namespace liesim;

namespace {

// Shared fast settings: the acceptance suite runs the full-scale versions.
ExperimentSpec bm_rotation_spec(std::uint64_t seed) {
  ExperimentSpec spec;
  spec.driver = DriverSpec::brownian(2);
  spec.action = rotation_action(spec.driver.group);
  spec.gauge = GaugeProcess::of_transformed(
      [](std::size_t, const DriverView& past) {
        return detail::flatten(
            rotation2(past.coords(past.size() - 1)(0) + 1.5707963267948966));
      });
  spec.n_paths = 1200;
  spec.h = 1.0 / 256;
  spec.seed = seed;
  spec.tso.n_permutations = 400;
  return spec;
}

}  // namespace

TEST_CASE("rotated Brownian motion is again a Brownian motion") {
  ExperimentSpec spec = bm_rotation_spec(101);
  spec.qv_expected = Matrix::Identity(2, 2);
  spec.qv_tol = 0.05;
  const auto rep = invariance_experiment(spec);
  CHECK(rep.valid);
  CHECK(rep.verdict);
  CHECK(rep.explosion_rate == 0.0);
  REQUIRE(rep.qv.has_value());
  CHECK(rep.qv->max_abs_dev < 0.05);
}

TEST_CASE("negative controls are detected, not merely non-rejected") {
  // Deterministic scaling by 2: variance quadruples.
  {
    ExperimentSpec spec = bm_rotation_spec(102);
    spec.action = scaling_action(spec.driver.group);
    spec.gauge = GaugeProcess::constant(Vector::Constant(1, 2.0));
    const auto rep = invariance_experiment(spec);
    CHECK(!rep.verdict);
    CHECK(rep.worst_p() < 0.01);
  }
  // Anisotropic diffusion: past-dependent rotations change the law.
  {
    ExperimentSpec spec = bm_rotation_spec(103);
    LevyTriplet t;
    t.b0 = Vector::Zero(2);
    t.A0 = (Matrix(2, 2) << 1, 0, 0, 2).finished();
    spec.driver = DriverSpec::levy(LieGroup::additive(2), t, "aniso");
    const auto rep = invariance_experiment(spec);
    CHECK(!rep.verdict);
    CHECK(rep.worst_p() < 0.01);
  }
}

TEST_CASE("experiment verdicts are deterministic given seeds") {
  const auto a = invariance_experiment(bm_rotation_spec(104));
  const auto b = invariance_experiment(bm_rotation_spec(104));
  REQUIRE(a.tests.size() == b.tests.size());
  for (std::size_t i = 0; i < a.tests.size(); ++i) {
    CHECK(a.tests[i].test.statistic == b.tests[i].test.statistic);
    CHECK(a.tests[i].test.p_value == b.tests[i].test.p_value);
  }
}

TEST_CASE("shipped discrete cases agree across modes") {
  DiscreteCheckOptions opts;
  opts.n_paths = 1200;
  opts.tso.n_permutations = 400;
  opts.seed = 105;
  const auto cases = shipped_discrete_cases();
  CHECK(cases.size() == 6);
  for (const auto& c : cases) {
    const auto rep = discrete_gauge_check(c, opts);
    INFO(c.name);
    CHECK(rep.modes_agree);
    CHECK(rep.density_invariant == c.expected_invariant);
    CHECK(rep.verdict);
    if (!c.expected_invariant) CHECK(rep.density_residual >= 0.05);
  }
}

TEST_CASE("anisotropic density residual is large at the quarter turn") {
  DiscreteCheckOptions opts;
  opts.n_paths = 400;
  opts.tso.n_permutations = 200;
  opts.seed = 106;
  for (const auto& c : shipped_discrete_cases()) {
    if (c.name == "aniso-gauss") {
      const auto rep = discrete_gauge_check(c, opts);
      CHECK(rep.density_residual >= 0.1);
    }
  }
}

TEST_CASE("non-Markovian construction keeps its rotation symmetry") {
  NonMarkovianOptions opts;
  opts.n_paths = 1000;
  opts.h = 1.0 / 256;
  opts.seed = 107;
  opts.tso.n_permutations = 400;
  const auto rep = nonmarkovian_demo(opts);
  CHECK(rep.statistical.verdict);
  CHECK(rep.conditional.verdict);
  CHECK(rep.conditional.worst_diffusion <= 1e-12);
  CHECK(rep.verdict);

  // G == 1 degenerates to plain Brownian rotation invariance.
  NonMarkovianOptions opts1 = opts;
  opts1.seed = 108;
  opts1.integrand = [](std::span<const double>) { return 1.0; };
  CHECK(nonmarkovian_demo(opts1).verdict);

  // Anisotropic variant fails both the law test and the conditional check.
  NonMarkovianOptions opts2 = opts;
  opts2.seed = 109;
  opts2.anisotropy = 2.0;
  const auto bad = nonmarkovian_demo(opts2);
  CHECK(!bad.verdict);
  CHECK(bad.conditional.worst_diffusion > 0.1);
  CHECK(bad.statistical.worst_p() < 0.01);
}

TEST_CASE("anticipating rotations break the invariance") {
  // The classical counterexample: rotate by B(W_T) with B(x) x = (|x|, 0).
  // Such a process is predictable only for the enlarged filtration
  // F_t v sigma(W_T) — the gauge-process interface cannot express it, so the
  // transformed sample is built by hand — and the transformed endpoint
  // (|W_T|, 0) is not Gaussian.
  const int n = 1500;
  const auto spec = DriverSpec::brownian(2);
  auto g2 = spec.group;
  auto act = rotation_action(g2);
  Eigen::MatrixXd endp_t(n, 2), endp_r(n, 2);
  for (int i = 0; i < n; ++i) {
    RngStream rng(112, static_cast<std::uint64_t>(i), Role::driver);
    const CadlagPath z = simulate_driver(spec, 1.0, 1.0 / 128, rng);
    const Vector w_t = g2->log(z.nodes.back());
    // Rotation sending the terminal value to (|W_T|, 0).
    const double theta = -std::atan2(w_t(1), w_t(0));
    const CadlagPath zt = random_transform(
        act, GaugeProcess::constant(detail::flatten(rotation2(theta))), z);
    endp_t.row(i) = g2->log(zt.nodes.back()).transpose();
    RngStream rng_ref(112, static_cast<std::uint64_t>(i), Role::reference);
    const CadlagPath zr = simulate_driver(spec, 1.0, 1.0 / 128, rng_ref);
    endp_r.row(i) = g2->log(zr.nodes.back()).transpose();
  }
  // Every transformed endpoint sits on the positive first axis.
  CHECK(endp_t.col(1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(endp_t.col(0).minCoeff() >= 0.0);
  TwoSampleOptions opts;
  opts.seed = 113;
  opts.n_permutations = 400;
  const auto rej = two_sample_test(endp_t, endp_r, opts);
  CHECK(rej.p_value < 0.01);
}

TEST_CASE("thread count does not change experiment results") {
  ExperimentSpec spec = bm_rotation_spec(114);
  spec.n_paths = 400;
  spec.tso.n_permutations = 200;
  spec.threads = 1;
  const auto serial = invariance_experiment(spec);
  spec.threads = 2;
  const auto parallel = invariance_experiment(spec);
  REQUIRE(serial.tests.size() == parallel.tests.size());
  for (std::size_t i = 0; i < serial.tests.size(); ++i) {
    CHECK(serial.tests[i].test.statistic == parallel.tests[i].test.statistic);
    CHECK(serial.tests[i].test.p_value == parallel.tests[i].test.p_value);
  }
}

TEST_CASE("squared Bessel reduction") {
  BesselOptions opts;
  opts.n_paths = 2000;
  opts.h = 1.0 / 512;
  opts.seed = 110;
  opts.tso.n_permutations = 400;

  // f == 0: BESQ(2); E[R_1] = R_0 + 2.
  const auto besq = bessel_reduction_demo(opts);
  CHECK(besq.valid);
  REQUIRE(besq.direct_mean.has_value());
  REQUIRE(besq.reduced_mean.has_value());
  CHECK(besq.direct_mean->target == doctest::Approx(3.0));
  CHECK(besq.direct_mean->pass);
  CHECK(besq.reduced_mean->pass);
  CHECK(besq.verdict);

  // Nontrivial radial drift: direct vs reduced laws still agree.
  BesselOptions opts2 = opts;
  opts2.seed = 111;
  opts2.radial_drift = [](double r) { return -r / (1.0 + r); };
  const auto drift = bessel_reduction_demo(opts2);
  CHECK(drift.valid);
  CHECK(!drift.direct_mean.has_value());
  CHECK(drift.verdict);
}
