#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liesim/driver.hpp"
#include "liesim/gauge.hpp"
#include "liesim/parallel.hpp"
#include "liesim/stats.hpp"
#include "liesim/triplet.hpp"

namespace liesim {

struct ObservableResult {
  std::string name;
  TwoSampleResult test;
};

struct QvComparison {
  Matrix estimate;
  Matrix expected;
  double max_abs_dev = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct ExperimentReport {
  std::vector<ObservableResult> tests;
  std::optional<QvComparison> qv;
  double explosion_rate = 0.0;
  bool valid = true;
  double p_min = 0.01;
  bool verdict = false;

  double worst_p() const {
    double p = 1.0;
    for (const auto& t : tests) p = std::min(p, t.test.p_value);
    return p;
  }
};

struct ExperimentSpec {
  DriverSpec driver;
  GaugeAction action;
  GaugeProcess gauge;
  double T = 1.0;
  double h = 1.0 / 1024;
  std::vector<double> obs_times = {0.5, 1.0};
  int n_paths = 5000;
  std::uint64_t seed = 0;
  std::vector<int> observable_coords;  // empty = all coordinates
  bool include_norm_observable = true;
  bool include_qv_observable = true;
  std::optional<Matrix> qv_expected;
  double qv_tol = 0.05;
  double p_min = 0.01;
  double max_explosion_rate = 0.01;
  TwoSampleOptions tso;
  int threads = 0;
};

// Law-comparison experiment: n_paths of Z are simulated and transformed by
// the gauge process, an independent sample of n_paths fresh driver paths is
// the reference, and the two ensembles are compared at the observation times
// (marginal vectors, norms of marginals, realized QV trace). The transformed
// and reference samples use independent streams; comparing a transform of
// the same noise against itself would be trivially dependent.
inline ExperimentReport invariance_experiment(const ExperimentSpec& spec) {
  const int n_all = spec.driver.group->algebra_dim();
  std::vector<int> coords = spec.observable_coords;
  if (coords.empty())
    for (int i = 0; i < n_all; ++i) coords.push_back(i);
  const int d = static_cast<int>(coords.size());
  const int nt = static_cast<int>(spec.obs_times.size());
  const int np = spec.n_paths;

  Eigen::MatrixXd marg_t(np, d * nt), marg_r(np, d * nt);
  Eigen::MatrixXd norm_t(np, nt), norm_r(np, nt);
  Eigen::MatrixXd qv_t(np, 1), qv_r(np, 1);
  std::vector<Matrix> qv_mats(static_cast<std::size_t>(np));
  std::vector<std::uint8_t> exploded(static_cast<std::size_t>(np), 0);

  auto extract = [&](const CadlagPath& p, Eigen::MatrixXd& marg,
                     Eigen::MatrixXd& nrm, Eigen::MatrixXd& qv, int row,
                     Matrix* qv_mat) {
    for (int t = 0; t < nt; ++t) {
      const std::size_t idx = p.index_at(spec.obs_times[static_cast<std::size_t>(t)]);
      const Vector v = p.group->log(p.nodes[idx]);
      for (int c = 0; c < d; ++c)
        marg(row, t * d + c) = v(coords[static_cast<std::size_t>(c)]);
      double s = 0.0;
      for (int c = 0; c < d; ++c) {
        const double vc = v(coords[static_cast<std::size_t>(c)]);
        s += vc * vc;
      }
      nrm(row, t) = std::sqrt(s);
    }
    const Matrix q = brownian_qv(p);
    qv(row, 0) = q.trace();
    if (qv_mat) *qv_mat = q;
  };

  parallel_for(
      static_cast<std::size_t>(np),
      [&](std::size_t i) {
        RngStream rng_ref(spec.seed, i, Role::reference);
        const CadlagPath zr =
            simulate_driver(spec.driver, spec.T, spec.h, rng_ref);
        extract(zr, marg_r, norm_r, qv_r, static_cast<int>(i), nullptr);

        RngStream rng(spec.seed, i, Role::driver);
        const CadlagPath z = simulate_driver(spec.driver, spec.T, spec.h, rng);
        const CadlagPath zt = random_transform(spec.action, spec.gauge, z);
        if (zt.times.size() < z.times.size()) {
          exploded[i] = 1;
          marg_t.row(static_cast<int>(i)).setZero();
          norm_t.row(static_cast<int>(i)).setZero();
          qv_t(static_cast<int>(i), 0) = 0.0;
          qv_mats[i] = Matrix::Zero(n_all, n_all);
          return;
        }
        extract(zt, marg_t, norm_t, qv_t, static_cast<int>(i), &qv_mats[i]);
      },
      spec.threads);

  ExperimentReport rep;
  rep.p_min = spec.p_min;
  std::size_t n_exploded = 0;
  for (auto e : exploded) n_exploded += e;
  rep.explosion_rate = static_cast<double>(n_exploded) / np;
  rep.valid = rep.explosion_rate <= spec.max_explosion_rate;

  if (n_exploded > 0) {
    // Drop exploded replicas from both ensembles before testing.
    const int keep = np - static_cast<int>(n_exploded);
    if (keep == 0) {
      rep.valid = false;
      rep.verdict = false;
      return rep;
    }
    auto compact = [&](Eigen::MatrixXd& mat) {
      Eigen::MatrixXd out(keep, mat.cols());
      int r = 0;
      for (int i = 0; i < np; ++i)
        if (!exploded[static_cast<std::size_t>(i)]) out.row(r++) = mat.row(i);
      mat = std::move(out);
    };
    compact(marg_t);
    compact(marg_r);
    compact(norm_t);
    compact(norm_r);
    compact(qv_t);
    compact(qv_r);
  }

  int test_idx = 0;
  auto run_test = [&](const std::string& name, const Eigen::MatrixXd& a,
                      const Eigen::MatrixXd& b) {
    TwoSampleOptions o = spec.tso;
    o.seed = spec.seed + 7919 * static_cast<std::uint64_t>(++test_idx);
    o.threads = spec.threads;
    rep.tests.push_back({name, two_sample_test(a, b, o)});
  };
  for (int t = 0; t < nt; ++t) {
    const std::string tag = "t=" + std::to_string(spec.obs_times[static_cast<std::size_t>(t)]);
    run_test("marginal@" + tag, marg_t.middleCols(t * d, d),
             marg_r.middleCols(t * d, d));
    if (spec.include_norm_observable)
      run_test("norm@" + tag, norm_t.col(t), norm_r.col(t));
  }
  if (spec.include_qv_observable) run_test("qv-trace", qv_t, qv_r);

  if (spec.qv_expected && n_exploded < static_cast<std::size_t>(np)) {
    QvComparison q;
    q.expected = *spec.qv_expected;
    q.estimate = Matrix::Zero(n_all, n_all);
    for (const auto& m : qv_mats) q.estimate += m;
    q.estimate /= static_cast<double>(np - static_cast<int>(n_exploded));
    q.max_abs_dev = (q.estimate - q.expected).cwiseAbs().maxCoeff();
    q.tolerance = spec.qv_tol;
    q.pass = q.max_abs_dev <= q.tolerance;
    rep.qv = std::move(q);
  }

  bool ok = rep.valid;
  for (const auto& t : rep.tests) ok = ok && t.test.p_value > spec.p_min;
  if (rep.qv) ok = ok && rep.qv->pass;
  rep.verdict = ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Discrete-time characterization.

// A discrete-time jump law: the density of the next increment given the
// history of previous increments (both in R^d coordinates), plus a sampler
// realizing it. expected_invariant records the analytically known verdict.
struct DiscreteCase {
  std::string name;
  int dim = 2;
  std::size_t n_steps = 3;
  std::function<double(const std::vector<Vector>&, const Vector&)> density;
  std::function<Vector(std::size_t, const std::vector<Vector>&, RngStream&)>
      sampler;
  bool expected_invariant = true;
};

struct DiscreteCheckOptions {
  int n_histories = 8;
  int n_rotations = 12;
  int n_points = 64;
  int n_paths = 2000;
  std::uint64_t seed = 0;
  double density_tol = 1e-10;
  double p_min = 0.01;
  TwoSampleOptions tso{.n_permutations = 500};
  int threads = 0;
};

struct DiscreteCheckReport {
  std::string name;
  double density_residual = 0.0;
  bool density_invariant = true;
  double sampler_p = 1.0;
  bool sampler_invariant = true;
  bool expected_invariant = true;
  bool modes_agree = true;
  bool verdict = true;  // both modes match the expected answer
};

// Density mode: sup over sampled histories, per-slot rotations and probe
// points of |F_n(dz_1..dz_{n-1}, z) - F_n(B_1 dz_1, .., B_{n-1} dz_{n-1},
// B_n z)|; the quarter-turn is always probed. Sampler mode: embeds the
// discrete process as a cadlag path, applies history-dependent random
// rotations and runs the law-comparison test against a fresh sample.
inline DiscreteCheckReport discrete_gauge_check(
    const DiscreteCase& dc, const DiscreteCheckOptions& opts = {}) {
  DiscreteCheckReport rep;
  rep.name = dc.name;
  rep.expected_invariant = dc.expected_invariant;
  const int d = dc.dim;

  // --- density mode ---
  RngStream rng(opts.seed, 0, Role::test);
  const Matrix quarter = rotation2(1.5707963267948966);
  std::vector<Matrix> rotations = {quarter};
  for (int i = 0; i < opts.n_rotations; ++i)
    rotations.push_back(rotation2(rng.uniform(0.0, 6.283185307179586)));
  std::vector<Vector> probes;
  {
    Vector p1(2), p2(2), p3(2), p4(2);
    p1 << 0.8, 0.0;
    p2 << 1.5, 0.0;
    p3 << 0.7, 0.7;
    p4 << 0.0, 1.2;
    probes = {p1, p2, p3, p4};
    for (int i = 0; i < opts.n_points; ++i) {
      Vector z(d);
      for (int c = 0; c < d; ++c) z(c) = 1.2 * rng.normal();
      probes.push_back(z);
    }
  }
  double worst = 0.0;
  for (std::size_t len = 0; len < dc.n_steps; ++len) {
    for (int hi = 0; hi < opts.n_histories; ++hi) {
      std::vector<Vector> hist;
      for (std::size_t s = 0; s < len; ++s)
        hist.push_back(dc.sampler(s + 1, hist, rng));
      for (const Matrix& bz : rotations) {
        std::vector<Vector> hist_rot;
        hist_rot.reserve(hist.size());
        for (const auto& dz : hist) {
          const Matrix b = rotations[static_cast<std::size_t>(
              rng.next_u64() % rotations.size())];
          hist_rot.push_back(b * dz);
        }
        for (const Vector& z : probes) {
          const double diff =
              std::abs(dc.density(hist, z) - dc.density(hist_rot, bz * z));
          worst = std::max(worst, diff);
        }
      }
    }
  }
  rep.density_residual = worst;
  rep.density_invariant = worst <= opts.density_tol;

  // --- sampler mode ---
  auto group = LieGroup::additive(d);
  auto case_sampler = dc.sampler;
  DiscreteSampler ds = [group, case_sampler](
                           std::size_t step, const std::vector<Matrix>& hist,
                           RngStream& r) {
    std::vector<Vector> deltas;
    deltas.reserve(hist.size());
    Vector prev = Vector::Zero(group->algebra_dim());
    for (const auto& zn : hist) {
      const Vector cur = group->log(zn);
      deltas.push_back(cur - prev);
      prev = cur;
    }
    return group->exp(case_sampler(step, deltas, r));
  };
  const DriverSpec driver =
      DriverSpec::discrete(group, dc.n_steps, ds, "discrete:" + dc.name);
  const GaugeAction act = rotation_action(group);
  // History-dependent rotation with a quarter-turn base angle; laws that are
  // rotation-invariant are unaffected, anything anisotropic is exposed hard.
  const GaugeProcess g = GaugeProcess::of_transformed(
      [](std::size_t, const DriverView& past) {
        const Vector v = past.coords(past.size() - 1);
        const double theta = 1.1 * v(0) - 0.7 * v(1) + 1.5707963267948966;
        return detail::flatten(rotation2(theta));
      });

  const int np = opts.n_paths;
  const auto m = static_cast<int>(dc.n_steps);
  Eigen::MatrixXd obs_t(np, d * m), obs_r(np, d * m);
  parallel_for(
      static_cast<std::size_t>(np),
      [&](std::size_t i) {
        RngStream r1(opts.seed, i, Role::driver);
        const CadlagPath z = simulate_driver(driver, 1.0, 1.0, r1);
        const CadlagPath zt = random_transform(act, g, z);
        RngStream r2(opts.seed, i, Role::reference);
        const CadlagPath zr = simulate_driver(driver, 1.0, 1.0, r2);
        for (int s = 1; s <= m; ++s) {
          const Vector vt = group->log(zt.nodes[static_cast<std::size_t>(s)]);
          const Vector vr = group->log(zr.nodes[static_cast<std::size_t>(s)]);
          for (int c = 0; c < d; ++c) {
            obs_t(static_cast<int>(i), (s - 1) * d + c) = vt(c);
            obs_r(static_cast<int>(i), (s - 1) * d + c) = vr(c);
          }
        }
      },
      opts.threads);
  TwoSampleOptions tso = opts.tso;
  tso.seed = opts.seed + 104729;
  tso.threads = opts.threads;
  const TwoSampleResult joint = two_sample_test(obs_t, obs_r, tso);
  tso.seed = opts.seed + 224737;
  const TwoSampleResult step1 =
      two_sample_test(obs_t.leftCols(d), obs_r.leftCols(d), tso);
  rep.sampler_p = std::min(joint.p_value, step1.p_value);
  rep.sampler_invariant = rep.sampler_p > opts.p_min;

  rep.modes_agree = rep.density_invariant == rep.sampler_invariant;
  rep.verdict = rep.modes_agree &&
                rep.density_invariant == rep.expected_invariant;
  return rep;
}

// The six shipped discrete-time laws: three rotation-invariant (isotropic
// Gaussian, moduli-dependent conditional Gaussian, radial mixture) and three
// not (axis-anisotropic, rotated anisotropic, shifted mean).
inline std::vector<DiscreteCase> shipped_discrete_cases() {
  const double two_pi = 6.283185307179586476925286766559;
  auto gauss2 = [two_pi](const Vector& z, double var) {
    return std::exp(-0.5 * z.squaredNorm() / var) / (two_pi * var);
  };
  std::vector<DiscreteCase> cases;

  {
    DiscreteCase c;
    c.name = "iso-gauss";
    c.density = [gauss2](const std::vector<Vector>&, const Vector& z) {
      return gauss2(z, 1.0);
    };
    c.sampler = [](std::size_t, const std::vector<Vector>&, RngStream& r) {
      Vector z(2);
      z << r.normal(), r.normal();
      return z;
    };
    c.expected_invariant = true;
    cases.push_back(std::move(c));
  }
  {
    // F_n(dz_1.., z) = C exp(-|z|^2 (1 + a^2)), a = |dz_{n-1}|: Gaussian with
    // per-coordinate variance 1 / (2 (1 + a^2)), a function of the moduli.
    DiscreteCase c;
    c.name = "moduli-gauss";
    auto var_of = [](const std::vector<Vector>& hist) {
      const double a = hist.empty() ? 0.0 : hist.back().norm();
      return 0.5 / (1.0 + a * a);
    };
    c.density = [gauss2, var_of](const std::vector<Vector>& hist,
                                 const Vector& z) {
      return gauss2(z, var_of(hist));
    };
    c.sampler = [var_of](std::size_t, const std::vector<Vector>& hist,
                         RngStream& r) {
      const double sd = std::sqrt(var_of(hist));
      Vector z(2);
      z << sd * r.normal(), sd * r.normal();
      return z;
    };
    c.expected_invariant = true;
    cases.push_back(std::move(c));
  }
  {
    DiscreteCase c;
    c.name = "radial-mixture";
    c.density = [gauss2](const std::vector<Vector>&, const Vector& z) {
      return 0.5 * gauss2(z, 0.25) + 0.5 * gauss2(z, 2.25);
    };
    c.sampler = [](std::size_t, const std::vector<Vector>&, RngStream& r) {
      const double sd = r.uniform() < 0.5 ? 0.5 : 1.5;
      Vector z(2);
      z << sd * r.normal(), sd * r.normal();
      return z;
    };
    c.expected_invariant = true;
    cases.push_back(std::move(c));
  }
  {
    // proportional to exp(-z1^2 - 2 z2^2)
    DiscreteCase c;
    c.name = "aniso-gauss";
    c.density = [two_pi](const std::vector<Vector>&, const Vector& z) {
      const double det = std::sqrt(0.5 * 0.25);
      return std::exp(-z(0) * z(0) - 2.0 * z(1) * z(1)) / (two_pi * det);
    };
    c.sampler = [](std::size_t, const std::vector<Vector>&, RngStream& r) {
      Vector z(2);
      z << std::sqrt(0.5) * r.normal(), 0.5 * r.normal();
      return z;
    };
    c.expected_invariant = false;
    cases.push_back(std::move(c));
  }
  {
    DiscreteCase c;
    c.name = "rotated-aniso";
    const Matrix rot = rotation2(0.5235987755982988);  // pi/6
    const Matrix cov =
        rot * (Matrix(2, 2) << 0.5, 0.0, 0.0, 0.25).finished() * rot.transpose();
    const Matrix prec = cov.inverse();
    const double norm = two_pi * std::sqrt(cov.determinant());
    c.density = [prec, norm](const std::vector<Vector>&, const Vector& z) {
      return std::exp(-0.5 * z.dot(prec * z)) / norm;
    };
    const Matrix chol = Eigen::LLT<Matrix>(cov).matrixL();
    c.sampler = [chol](std::size_t, const std::vector<Vector>&, RngStream& r) {
      Vector z(2);
      z << r.normal(), r.normal();
      return (chol * z).eval();
    };
    c.expected_invariant = false;
    cases.push_back(std::move(c));
  }
  {
    DiscreteCase c;
    c.name = "shifted-gauss";
    Vector mean(2);
    mean << 1.5, 0.0;
    c.density = [gauss2, mean](const std::vector<Vector>&, const Vector& z) {
      return gauss2(z - mean, 1.0);
    };
    c.sampler = [mean](std::size_t, const std::vector<Vector>&, RngStream& r) {
      Vector z(2);
      z << mean(0) + r.normal(), mean(1) + r.normal();
      return z;
    };
    c.expected_invariant = false;
    cases.push_back(std::move(c));
  }
  return cases;
}

// ---------------------------------------------------------------------------
// Non-Markovian example driven by the composite three-component construction.

struct NonMarkovianOptions {
  std::function<double(std::span<const double>)> integrand;  // default: 1+max
  double anisotropy = 1.0;
  int n_paths = 5000;
  double T = 1.0;
  double h = 1.0 / 1024;
  std::uint64_t seed = 0;
  int n_aux_paths = 16;
  int n_gauge = 16;
  double p_min = 0.01;
  double conditional_tol = 1e-12;
  TwoSampleOptions tso;
  int threads = 0;
};

struct NonMarkovianReport {
  ExperimentReport statistical;
  ConditionalReport conditional;
  bool verdict = false;
};

inline double one_plus_running_max(std::span<const double> w0) {
  double m = 0.0;
  for (double v : w0) m = std::max(m, v);
  return 1.0 + m;
}

// The composite pair (Wtilde^1, Wtilde^2) is transformed by a rotation
// depending on the transformed pair's own past and compared in law against a
// fresh sample; the model triplet dA = diag(G^2, a^2 G^2, 1) dt is checked
// per sampled auxiliary path with rotations acting on the first two
// coordinates.
inline NonMarkovianReport nonmarkovian_demo(NonMarkovianOptions opts = {}) {
  if (!opts.integrand) opts.integrand = one_plus_running_max;

  ExperimentSpec spec;
  spec.driver = DriverSpec::composite_w(opts.integrand, opts.anisotropy);
  spec.action = rotation_action(spec.driver.group, {0, 1});
  spec.gauge = GaugeProcess::of_transformed(
      [](std::size_t, const DriverView& past) {
        const Vector v = past.coords(past.size() - 1);
        const double theta =
            1.25 * v(0) + 0.75 * v(1) + 1.5707963267948966;
        return detail::flatten(rotation2(theta));
      });
  spec.T = opts.T;
  spec.h = opts.h;
  spec.n_paths = opts.n_paths;
  spec.seed = opts.seed;
  spec.observable_coords = {0, 1};
  spec.p_min = opts.p_min;
  spec.tso = opts.tso;
  spec.threads = opts.threads;

  NonMarkovianReport rep;
  rep.statistical = invariance_experiment(spec);

  // Conditional characteristics given the auxiliary component.
  auto aux_group = LieGroup::additive(1);
  std::vector<CadlagPath> aux;
  aux.reserve(static_cast<std::size_t>(opts.n_aux_paths));
  DriverSpec aux_driver = DriverSpec::brownian(1);
  for (int i = 0; i < opts.n_aux_paths; ++i) {
    RngStream rng(opts.seed, static_cast<std::uint64_t>(i), Role::aux);
    aux.push_back(simulate_driver(aux_driver, opts.T, 1.0 / 64, rng));
  }
  const double aniso = opts.anisotropy;
  auto integrand = opts.integrand;
  ConditionalModel model = [integrand, aniso, aux_group](
                               const CadlagPath& w0, std::size_t step) {
    std::vector<double> vals(step);
    for (std::size_t i = 0; i < step; ++i)
      vals[i] = aux_group->log(w0.nodes[i])(0);
    const double g = integrand(std::span<const double>(vals.data(), step));
    Matrix a = Matrix::Zero(3, 3);
    a(0, 0) = g * g;
    a(1, 1) = aniso * aniso * g * g;
    a(2, 2) = 1.0;
    return std::make_pair(Vector::Zero(3).eval(), a);
  };
  std::vector<Vector> gs = {spec.action.group.identity};
  RngStream grng(opts.seed, 1, Role::gauge_sample);
  for (int i = 0; i < opts.n_gauge; ++i)
    gs.push_back(spec.action.group.sample(grng));
  rep.conditional = check_conditional_invariance(model, spec.action, gs, aux,
                                                 opts.conditional_tol);

  rep.verdict = rep.statistical.verdict && rep.conditional.verdict;
  return rep;
}

// ---------------------------------------------------------------------------
// Polar reduction / squared Bessel comparison.

struct BesselOptions {
  std::function<double(double)> radial_drift;  // f; nullptr means f == 0
  int n_paths = 5000;
  double T = 1.0;
  double h = 1.0 / 1024;
  std::vector<double> obs_times = {0.5, 1.0};
  double r0 = 1.0;
  std::uint64_t seed = 0;
  double p_min = 0.01;
  double max_clip_rate = 0.01;
  TwoSampleOptions tso;
  int threads = 0;
};

struct MeanCheck {
  double mean = 0.0;
  double se = 0.0;
  double target = 0.0;
  bool pass = true;
};

struct BesselReport {
  std::vector<ObservableResult> tests;
  std::optional<MeanCheck> direct_mean;   // only for f == 0
  std::optional<MeanCheck> reduced_mean;  // only for f == 0
  double clip_rate = 0.0;
  bool valid = true;
  bool verdict = false;
};

// Compares R = |X|^2 for the two-dimensional SDE dX = X f(R) dt + dZ against
// the reduced one-dimensional radial equation dR = (2 R f(R) + 2) dt +
// 2 sqrt(R) dW driven by a fresh Brownian motion. For f == 0 the reduced
// equation is the dimension-2 squared Bessel equation and E[R_T] = R_0 + 2T.
inline BesselReport bessel_reduction_demo(const BesselOptions& opts) {
  const bool zero_f = !opts.radial_drift;
  const std::function<double(double)> f =
      opts.radial_drift ? opts.radial_drift
                        : std::function<double(double)>([](double) { return 0.0; });

  // Direct side: driver (t, W^1, W^2) on R^3, state x in R^2.
  DriverSpec driver;
  {
    auto g3 = LieGroup::additive(3);
    LevyTriplet t;
    t.b0 = Vector::Zero(3);
    t.b0(0) = 1.0;
    t.A0 = Matrix::Zero(3, 3);
    t.A0(1, 1) = 1.0;
    t.A0(2, 2) = 1.0;
    driver = DriverSpec::levy(g3, t, "time+bm2");
  }
  GeometricalSDE sde;
  sde.state_dim = 2;
  sde.param_dim = 0;
  sde.driver_group = driver.group;
  GroupPtr g3 = driver.group;
  sde.psi = [g3, f](const Vector&, const Vector& x, const Matrix& z) -> Vector {
    const Vector c = g3->log(z);
    const double r = x.squaredNorm();
    Vector out = x + x * (f(r) * c(0));
    out(0) += c(1);
    out(1) += c(2);
    return out;
  };
  Vector x0(2);
  x0 << std::sqrt(opts.r0), 0.0;

  const int np = opts.n_paths;
  const int nt = static_cast<int>(opts.obs_times.size());
  Eigen::MatrixXd r_direct(np, nt), r_reduced(np, nt);
  std::vector<double> clip_counts(static_cast<std::size_t>(np), 0.0);
  const auto m = static_cast<std::size_t>(std::llround(opts.T / opts.h));

  parallel_for(
      static_cast<std::size_t>(np),
      [&](std::size_t i) {
        RngStream rng(opts.seed, i, Role::driver);
        const CadlagPath z = simulate_driver(driver, opts.T, opts.h, rng);
        const auto sol = integrate_jump_map(
            sde, PredictableControl::constant(Vector::Zero(0)), z, x0);
        for (int t = 0; t < nt; ++t) {
          const std::size_t idx =
              z.index_at(opts.obs_times[static_cast<std::size_t>(t)]);
          r_direct(static_cast<int>(i), t) = sol.states[idx].squaredNorm();
        }
        // Reduced side with an independent one-dimensional Brownian driver.
        RngStream rng2(opts.seed, i, Role::reference);
        double r = opts.r0;
        double clips = 0.0;
        const double sdt = std::sqrt(opts.h);
        int next_obs = 0;
        for (std::size_t s = 1; s <= m; ++s) {
          const double dw = sdt * rng2.normal();
          r += (2.0 * r * f(r) + 2.0) * opts.h +
               2.0 * std::sqrt(std::max(r, 0.0)) * dw;
          if (r < 0.0) {
            r = 0.0;
            clips += 1.0;
          }
          const double t_now = static_cast<double>(s) * opts.h;
          while (next_obs < nt &&
                 t_now >= opts.obs_times[static_cast<std::size_t>(next_obs)] -
                              1e-12) {
            r_reduced(static_cast<int>(i), next_obs) = r;
            ++next_obs;
          }
        }
        clip_counts[i] = clips;
      },
      opts.threads);

  BesselReport rep;
  double clips = 0.0;
  for (double c : clip_counts) clips += c;
  rep.clip_rate = clips / (static_cast<double>(np) * static_cast<double>(m));
  rep.valid = rep.clip_rate <= opts.max_clip_rate;

  auto mean_check = [&](const Eigen::MatrixXd& r, int col) {
    MeanCheck mc;
    const double n = static_cast<double>(np);
    mc.mean = r.col(col).mean();
    const double var =
        (r.col(col).array() - mc.mean).square().sum() / (n - 1.0);
    mc.se = std::sqrt(var / n);
    mc.target = opts.r0 + 2.0 * opts.obs_times.back();
    mc.pass = std::abs(mc.mean - mc.target) <= 3.0 * mc.se;
    return mc;
  };
  if (zero_f) {
    rep.direct_mean = mean_check(r_direct, nt - 1);
    rep.reduced_mean = mean_check(r_reduced, nt - 1);
  }

  for (int t = 0; t < nt; ++t) {
    TwoSampleOptions o = opts.tso;
    o.seed = opts.seed + 31 * static_cast<std::uint64_t>(t + 1);
    o.threads = opts.threads;
    const std::string name =
        "R@t=" + std::to_string(opts.obs_times[static_cast<std::size_t>(t)]);
    rep.tests.push_back(
        {name, two_sample_test(r_direct.col(t), r_reduced.col(t), o)});
  }

  bool ok = rep.valid;
  for (const auto& t : rep.tests) ok = ok && t.test.p_value > opts.p_min;
  if (rep.direct_mean) ok = ok && rep.direct_mean->pass;
  if (rep.reduced_mean) ok = ok && rep.reduced_mean->pass;
  rep.verdict = ok;
  return rep;
}

}  // namespace liesim
