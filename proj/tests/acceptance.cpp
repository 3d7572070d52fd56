// Acceptance suite: every criterion below runs at its stated tolerance and
// prints one pass/fail line. The process exits 0 only if all criteria pass.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "liesim/config.hpp"
#include "liesim/lab.hpp"

using namespace liesim;

namespace {

const double kPi = 3.14159265358979323846;

struct Check {
  std::string name;
  std::function<bool(std::string&)> run;
};

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

bool all_nodes_close(const std::vector<Vector>& a, const std::vector<Vector>& b,
                     double tol, double* worst = nullptr) {
  double w = 0.0;
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    w = std::max(w, (a[i] - b[i]).cwiseAbs().maxCoeff());
  if (worst) *worst = w;
  return w <= tol;
}

// Random driver over additive:2 or so:2, always with jumps.
DriverSpec random_driver(RngStream& rng, bool so_group) {
  if (so_group) {
    auto g = LieGroup::special_orthogonal(2);
    LevyTriplet t;
    t.b0 = Vector::Constant(1, 0.4 * rng.normal());
    t.A0 = Matrix::Constant(1, 1, 0.2 + 0.3 * rng.uniform());
    t.jumps = algebra_gaussian_jumps(g, 1.0 + 2.0 * rng.uniform(), 0.3);
    return DriverSpec::levy(g, t, "so2-levy");
  }
  auto g = LieGroup::additive(2);
  LevyTriplet t;
  t.b0 = vec2(0.5 * rng.normal(), 0.5 * rng.normal());
  Matrix c(2, 2);
  c << 1.0, 0.3 * rng.normal(), 0.3 * rng.normal(), 1.0;
  t.A0 = c * c.transpose();
  t.jumps = gaussian_jumps(g, 1.0 + 3.0 * rng.uniform(), Vector::Zero(2),
                           0.25 * Matrix::Identity(2, 2));
  return DriverSpec::levy(g, t, "additive-levy");
}

GaugeAction random_action(RngStream& rng, const GroupPtr& group, int* kind) {
  if (group->kind() == LieGroup::Kind::special_orthogonal) {
    *kind = 3;
    return scaling_action(group);
  }
  *kind = static_cast<int>(rng.next_u64() % 3);
  switch (*kind) {
    case 0:
      return rotation_action(group);
    case 1:
      return scaling_action(group);
    default:
      return qshear_action(group);
  }
}

GaugeProcess random_process(RngStream& rng, const GaugeAction& act, int kind) {
  const int mode = static_cast<int>(rng.next_u64() % 3);
  if (mode == 0) return GaugeProcess::constant(act.group.sample(rng));
  const double w = rng.uniform(0.5, 1.5);
  if (kind == 0) {
    auto fn = [w](std::size_t, const DriverView& past) {
      return detail::flatten(rotation2(w * past.coords(past.size() - 1)(0)));
    };
    return mode == 1 ? GaugeProcess::of_transformed(fn)
                     : GaugeProcess::of_source(fn);
  }
  if (kind == 1 || kind == 3) {
    auto fn = [w](std::size_t, const DriverView& past) {
      const double v = past.coords(past.size() - 1)(0);
      return Vector::Constant(1, std::exp(0.5 * std::tanh(w * v))).eval();
    };
    return mode == 1 ? GaugeProcess::of_transformed(fn)
                     : GaugeProcess::of_source(fn);
  }
  auto fn = [w](std::size_t, const DriverView& past) {
    return Vector::Constant(1, std::tanh(w * past.coords(past.size() - 1)(1)))
        .eval();
  };
  return mode == 1 ? GaugeProcess::of_transformed(fn)
                   : GaugeProcess::of_source(fn);
}

// --- criterion 1a: composition identity ------------------------------------
bool criterion_1a(std::string& detail_out) {
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    RngStream rng(900 + static_cast<std::uint64_t>(rep), 0, Role::test);
    const bool so_group = rep % 3 == 2;
    const DriverSpec driver = random_driver(rng, so_group);
    int kind = 0;
    const GaugeAction act = random_action(rng, driver.group, &kind);
    const GaugeProcess gp = random_process(rng, act, kind);
    const int n = driver.group->algebra_dim();

    GeometricalSDE sde;
    sde.state_dim = 2;
    sde.param_dim = 1;
    sde.driver_group = driver.group;
    GroupPtr g = driver.group;
    sde.psi = [g, n](const Vector& k, const Vector& x, const Matrix& z) -> Vector {
      const Vector v = g->log(z);
      Vector out(2);
      const double v0 = v(0);
      const double v1 = n > 1 ? v(1) : v(0);
      out(0) = x(0) + k(0) * ((1.0 + 0.2 * std::sin(x(1))) * v0 + 0.1 * v1);
      out(1) = x(1) + k(0) * (0.3 * std::cos(x(0)) * v0 + v1);
      return out;
    };
    const PredictableControl k =
        PredictableControl::constant(Vector::Constant(1, 0.5 + rng.uniform()));

    const CadlagPath z =
        simulate_driver(driver, 1.0, 1.0 / 512, 1400 + rep, 0);
    const CadlagPath zt = random_transform(act, gp, z);
    const Vector x0 = vec2(0.2 * rng.normal(), 0.2 * rng.normal());
    const auto lhs = integrate_jump_map(sde, k, zt, x0);
    const auto rhs = integrate_jump_map(compose_sde(sde, act),
                                        pair_control(k, gp, zt), z, x0);
    double w = 0.0;
    if (!all_nodes_close(lhs.states, rhs.states, 1e-12, &w)) {
      detail_out = "config " + std::to_string(rep) +
                   " node distance " + std::to_string(w);
      return false;
    }
    worst = std::max(worst, w);
  }
  detail_out = "worst node distance " + std::to_string(worst);
  return true;
}

// --- criterion 1b: inversion round trip -------------------------------------
bool criterion_1b(std::string& detail_out) {
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    RngStream rng(1900 + static_cast<std::uint64_t>(rep), 0, Role::test);
    const bool so_group = rep % 4 == 3;
    const DriverSpec driver = random_driver(rng, so_group);
    int kind = 0;
    const GaugeAction act = random_action(rng, driver.group, &kind);
    const GaugeProcess gp = random_process(rng, act, kind);
    const CadlagPath z =
        simulate_driver(driver, 1.0, 1.0 / 512, 2400 + rep, 0);
    std::vector<Vector> applied;
    const CadlagPath zt = random_transform(act, gp, z, &applied);
    // Invert both from the recorded values and from the functional itself.
    const CadlagPath back_rec =
        invert_transform(act, GaugeProcess::recorded(applied), zt);
    const CadlagPath back_fn = invert_transform(act, gp, zt);
    for (std::size_t i = 0; i < z.nodes.size(); ++i) {
      worst = std::max(
          worst, (back_rec.nodes[i] - z.nodes[i]).cwiseAbs().maxCoeff());
      worst = std::max(
          worst, (back_fn.nodes[i] - z.nodes[i]).cwiseAbs().maxCoeff());
    }
  }
  // Discrete-time explicit inverse on random 6-step paths.
  auto g2 = LieGroup::additive(2);
  auto act = rotation_action(g2);
  for (int rep = 0; rep < 10; ++rep) {
    RngStream rng(3100 + static_cast<std::uint64_t>(rep), 0, Role::test);
    std::vector<Matrix> samples = {g2->identity()};
    for (int s = 0; s < 6; ++s)
      samples.push_back(g2->mul(g2->random_element(rng, 1.0), samples.back()));
    const CadlagPath z = discrete_to_cadlag(g2, samples);
    const GaugeProcess gp = GaugeProcess::of_source(
        [](std::size_t, const DriverView& past) {
          const Vector v = past.coords(past.size() - 1);
          return detail::flatten(rotation2(0.9 * v(0) - 0.4 * v(1)));
        });
    const CadlagPath zt = random_transform(act, gp, z);
    const CadlagPath back = invert_transform(act, gp, zt);
    for (std::size_t i = 0; i < z.nodes.size(); ++i)
      worst = std::max(worst,
                       (back.nodes[i] - z.nodes[i]).cwiseAbs().maxCoeff());
  }
  detail_out = "worst round-trip residual " + std::to_string(worst);
  return worst <= 1e-12;
}

// --- criterion 1c: automorphism coincidence ---------------------------------
bool criterion_1c(std::string& detail_out) {
  auto g2 = LieGroup::additive(2);
  auto act = rotation_action(g2);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    RngStream rng(3600 + static_cast<std::uint64_t>(rep), 0, Role::test);
    const DriverSpec driver = random_driver(rng, false);
    const Matrix b = rotation2(rng.uniform(0.0, 2.0 * kPi));
    const CadlagPath z = simulate_driver(driver, 1.0, 1.0 / 512, 3700 + rep, 0);
    const CadlagPath zt =
        random_transform(act, GaugeProcess::constant(detail::flatten(b)), z);
    for (std::size_t i = 0; i < z.nodes.size(); ++i) {
      const Vector expect = b * g2->log(z.nodes[i]);
      worst = std::max(
          worst, (g2->log(zt.nodes[i]) - expect).cwiseAbs().maxCoeff());
    }
  }
  detail_out = "worst pointwise distance " + std::to_string(worst);
  return worst <= 1e-12;
}

// --- criterion 2: Brownian random-rotation invariance ------------------------
bool criterion_2(std::string& detail_out) {
  ExperimentSpec spec;
  spec.driver = DriverSpec::brownian(2);
  spec.action = rotation_action(spec.driver.group);
  // Past-dependent rotation with a quarter-turn base angle; Brownian law is
  // invariant under any predictable rotation, and the offset maximizes the
  // detection power of the anisotropic negative control.
  spec.gauge = GaugeProcess::of_transformed(
      [](std::size_t, const DriverView& past) {
        return detail::flatten(
            rotation2(past.coords(past.size() - 1)(0) + kPi / 2));
      });
  spec.n_paths = 5000;
  spec.T = 1.0;
  spec.h = 1.0 / 1024;
  spec.seed = 4000;
  spec.qv_expected = Matrix::Identity(2, 2);
  spec.qv_tol = 0.05;
  spec.include_norm_observable = false;
  spec.include_qv_observable = false;
  const auto pos = invariance_experiment(spec);
  double p_pos = 1.0;
  for (const auto& t : pos.tests) p_pos = std::min(p_pos, t.test.p_value);
  bool ok = pos.verdict && p_pos > 0.01 && pos.qv && pos.qv->pass;

  // Negative control: deterministic scaling by 2.
  ExperimentSpec neg1 = spec;
  neg1.seed = 4001;
  neg1.qv_expected.reset();
  neg1.action = scaling_action(spec.driver.group);
  neg1.gauge = GaugeProcess::constant(Vector::Constant(1, 2.0));
  const auto rep1 = invariance_experiment(neg1);
  ok = ok && rep1.worst_p() < 0.001;

  // Negative control: anisotropic diffusion diag(1,2).
  ExperimentSpec neg2 = spec;
  neg2.seed = 4002;
  neg2.qv_expected.reset();
  LevyTriplet t;
  t.b0 = Vector::Zero(2);
  t.A0 = (Matrix(2, 2) << 1, 0, 0, 2).finished();
  neg2.driver = DriverSpec::levy(LieGroup::additive(2), t, "aniso");
  const auto rep2 = invariance_experiment(neg2);
  ok = ok && rep2.worst_p() < 0.001;

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "positive min p %.4f, qv dev %.4f, negatives p %.6f / %.6f",
                p_pos, pos.qv ? pos.qv->max_abs_dev : -1.0, rep1.worst_p(),
                rep2.worst_p());
  detail_out = buf;
  return ok;
}

// --- criterion 3: deterministic Levy checker ---------------------------------
bool criterion_3(std::string& detail_out) {
  auto g2 = LieGroup::additive(2);
  auto act = rotation_action(g2);

  const auto bm = levy_triplet_of(DriverSpec::brownian(2));
  const auto rep_bm = check_levy_invariance(bm, act);
  double worst_exact = 0.0;
  for (const auto& row : rep_bm.rows) {
    worst_exact = std::max(worst_exact, row.drift_residual);
    worst_exact = std::max(worst_exact, row.diffusion_residual);
  }
  bool ok = rep_bm.verdict && worst_exact <= 1e-10;

  LevyTriplet ta;
  ta.b0 = Vector::Zero(2);
  ta.A0 = (Matrix(2, 2) << 1, 0, 0, 2).finished();
  const auto aniso = levy_triplet_of(DriverSpec::levy(g2, ta));
  const auto rep_aniso = check_levy_invariance(
      aniso, act, {detail::flatten(rotation2(kPi / 4))});
  const double resid = rep_aniso.rows[0].diffusion_residual;
  ok = ok && !rep_aniso.verdict && std::abs(resid - 1.0) <= 1e-10;

  LevyTriplet ts;
  ts.b0 = Vector::Zero(2);
  ts.A0 = Matrix::Zero(2, 2);
  ts.jumps = truncated_stable_jumps(g2, 1.5, 1.0, 0.01);
  LevyCheckOptions opts;
  opts.seed = 5;
  const auto stable = levy_triplet_of(DriverSpec::levy(g2, ts, "stable"),
                                      opts.measure_draws, opts.seed);
  const auto rep_stable = check_levy_invariance(stable, act, {}, {}, opts);
  int measure_checks = 0;
  int measure_fails = 0;
  for (const auto& row : rep_stable.rows) {
    for (const auto& m : row.measure) {
      ++measure_checks;
      if (!m.pass) ++measure_fails;
    }
  }
  ok = ok && rep_stable.verdict && measure_checks == 33 * 16;

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "exact resid %.2e, aniso resid %.12f, stable checks %d (%d over 3SE)",
                worst_exact, resid, measure_checks, measure_fails);
  detail_out = buf;
  return ok;
}

// --- criterion 4: transformation law vs empirical characteristics -----------
bool criterion_4(std::string& detail_out) {
  auto g2 = LieGroup::additive(2);
  LevyTriplet t;
  t.b0 = vec2(0.2, -0.1);
  t.A0 = Matrix::Identity(2, 2);
  t.jumps = gaussian_jumps(g2, 2.0, vec2(0.15, 0.0),
                           0.16 * Matrix::Identity(2, 2));
  const auto spec = DriverSpec::levy(g2, t);
  const auto trip = levy_triplet_of(spec);

  struct Case {
    std::string name;
    GaugeAction act;
    Vector g;
  };
  std::vector<Case> cases;
  cases.push_back({"rot(pi/3)", rotation_action(g2),
                   detail::flatten(rotation2(kPi / 3))});
  cases.push_back({"scaling 2", scaling_action(g2), Vector::Constant(1, 2.0)});
  cases.push_back({"qshear 0.5", qshear_action(g2), Vector::Constant(1, 0.5)});

  bool ok = true;
  std::string parts;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto target = transform_triplet(trip, cases[c].act, cases[c].g,
                                          131072, 6000 + c);
    const GaugeProcess gp = GaugeProcess::constant(cases[c].g);
    // h = 2^-12: the realized-covariation estimator carries an O(h) bias on
    // sheared components (3 g^2 h per unit rate), which must stay well under
    // the 3 SE band at 10^4 paths.
    const auto est = estimate_characteristics(
        [&](std::size_t i) {
          return random_transform(
              cases[c].act, gp,
              simulate_driver(spec, 1.0, 1.0 / 4096, 6700 + c, i));
        },
        10000, g2);
    const auto rep =
        triplet_consistency(est, target, {}, 3.0, 131072, 6200 + c);
    int fails = 0;
    double worst_z = 0.0;
    for (const auto& row : rep.rows) {
      if (!row.pass) ++fails;
      worst_z = std::max(worst_z, row.z);
    }
    ok = ok && rep.verdict;
    parts += cases[c].name + " worst z " + std::to_string(worst_z).substr(0, 4) +
             (fails ? (" FAILS " + std::to_string(fails)) : "") + "; ";
  }
  detail_out = parts;
  return ok;
}

// --- criterion 5: Gamma/O correctness ----------------------------------------
bool criterion_5(std::string& detail_out) {
  auto g2 = LieGroup::additive(2);
  RngStream rng(7000, 0, Role::test);
  auto rot = rotation_action(g2);
  auto fd_only = [](GaugeAction a) {
    a.analytic_gamma = nullptr;
    a.analytic_big_o = nullptr;
    return a;
  };
  double worst_rot = 0.0;
  for (int i = 0; i < 16; ++i) {
    const Vector g = rot.group.sample(rng);
    const Matrix b = detail::unflatten(g, 2);
    worst_rot = std::max(worst_rot,
                         (gamma(fd_only(rot), g) - b).cwiseAbs().maxCoeff());
    for (const auto& m : big_o(fd_only(rot), g))
      worst_rot = std::max(worst_rot, m.cwiseAbs().maxCoeff());
  }
  bool ok = worst_rot <= 1e-10;

  auto qs = fd_only(qshear_action(g2));
  const double gsh = 0.5;
  const auto o = big_o(qs, Vector::Constant(1, gsh));
  const double shear_err = std::abs(o[1](0, 0) - 2.0 * gsh);
  ok = ok && shear_err <= 1e-4;

  char buf[120];
  std::snprintf(buf, sizeof(buf), "rotation worst %.2e, shear O error %.2e",
                worst_rot, shear_err);
  detail_out = buf;
  return ok;
}

// --- criterion 6: Marcus SDE strong error ------------------------------------
CadlagPath coarsen4(const CadlagPath& p) {
  CadlagPath out;
  out.group = p.group;
  for (std::size_t i = 0; i < p.nodes.size(); i += 4) {
    out.times.push_back(p.times[i]);
    out.nodes.push_back(p.nodes[i]);
  }
  for (const auto& j : p.jumps) {
    if (j.index % 4 != 0) throw GroupError("coarsen4: jump off the coarse grid");
    out.jumps.push_back({j.index / 4, j.left_limit});
  }
  return out;
}

void insert_jump(CadlagPath& p, std::size_t index, const Matrix& delta) {
  for (std::size_t i = index; i < p.nodes.size(); ++i)
    p.nodes[i] = p.group->mul(delta, p.nodes[i]);
  p.jumps.push_back({index, p.group->mul(p.group->inv(delta), p.nodes[index])});
  std::sort(p.jumps.begin(), p.jumps.end(),
            [](const JumpRecord& a, const JumpRecord& b) {
              return a.index < b.index;
            });
}

bool criterion_6(std::string& detail_out) {
  std::vector<VectorField> fields = {[](const Vector& x) -> Vector { return x; }};
  auto sde = marcus_sde(fields, 1);
  auto g = sde.driver_group;
  const PredictableControl k = PredictableControl::constant(Vector::Zero(0));
  const QvSource qv = QvSource::model(Matrix::Identity(1, 1));

  double jump_map_err = 0.0;
  double taylor_fine = 0.0, taylor_coarse = 0.0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    CadlagPath z = simulate_driver(DriverSpec::brownian(1), 1.0, 1.0 / 4096,
                                   8000, static_cast<std::uint64_t>(rep));
    // Two jumps at dyadic times present in both grids.
    insert_jump(z, 1024, g->exp(Vector::Constant(1, 0.5)));   // t = 0.25
    insert_jump(z, 3072, g->exp(Vector::Constant(1, -0.3)));  // t = 0.75
    const CadlagPath zc = coarsen4(z);

    const double oracle = std::exp(g->log(z.nodes.back())(0));
    const auto jm = integrate_jump_map(sde, k, z, Vector::Ones(1));
    jump_map_err += std::abs(jm.final_state()(0) - oracle) / oracle;
    const auto tf = integrate_taylor(sde, k, z, Vector::Ones(1), qv);
    const auto tc = integrate_taylor(sde, k, zc, Vector::Ones(1), qv);
    taylor_fine += std::abs(tf.final_state()(0) - oracle) / oracle;
    taylor_coarse += std::abs(tc.final_state()(0) - oracle) / oracle;
  }
  jump_map_err /= reps;
  taylor_fine /= reps;
  taylor_coarse /= reps;
  const double ratio = taylor_coarse / taylor_fine;
  const bool ok = jump_map_err <= 0.05 && taylor_fine <= 0.05 && ratio >= 1.5;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "jump-map err %.2e, taylor err(2^-12) %.4f, ratio %.2f",
                jump_map_err, taylor_fine, ratio);
  detail_out = buf;
  return ok;
}

// --- criterion 7: cross-integrator validation --------------------------------
bool criterion_7(std::string& detail_out) {
  GeometricalSDE sde;
  sde.state_dim = 2;
  sde.param_dim = 0;
  sde.driver_group = LieGroup::additive(2);
  GroupPtr g = sde.driver_group;
  sde.psi = [g](const Vector&, const Vector& x, const Matrix& z) -> Vector {
    const Vector v = g->log(z);
    Vector out(2);
    out(0) = x(0) + (1.0 + 0.3 * std::sin(x(1))) * v(0) +
             0.2 * std::cos(x(0)) * v(1) + 0.1 * v(0) * v(1);
    out(1) = x(1) + 0.5 * std::tanh(x(0)) * v(0) + v(1) + 0.05 * v(0) * v(0);
    return out;
  };
  const PredictableControl k = PredictableControl::constant(Vector::Zero(0));
  const QvSource qv = QvSource::model(Matrix::Identity(2, 2));
  const Vector x0 = vec2(0.3, -0.2);

  const int reps = 100;
  const std::vector<double> hs = {1.0 / 256, 1.0 / 1024, 1.0 / 4096};
  // Per-replica slots; the reduction below runs in replica order.
  std::vector<std::array<double, 3>> rms(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t rep) {
    const CadlagPath zf = simulate_driver(DriverSpec::brownian(2), 1.0,
                                          1.0 / 4096, 8100, rep);
    CadlagPath z10, z8;
    z10.group = g;
    z8.group = g;
    for (std::size_t i = 0; i < zf.nodes.size(); i += 4) {
      z10.times.push_back(zf.times[i]);
      z10.nodes.push_back(zf.nodes[i]);
    }
    for (std::size_t i = 0; i < zf.nodes.size(); i += 16) {
      z8.times.push_back(zf.times[i]);
      z8.nodes.push_back(zf.nodes[i]);
    }
    const CadlagPath* zs[3] = {&z8, &z10, &zf};
    for (int l = 0; l < 3; ++l) {
      const auto a = integrate_jump_map(sde, k, *zs[l], x0);
      const auto b = integrate_taylor(sde, k, *zs[l], x0, qv);
      double acc = 0.0;
      for (std::size_t i = 0; i < zs[l]->nodes.size(); ++i)
        acc += (a.states[i] - b.states[i]).squaredNorm();
      rms[rep][static_cast<std::size_t>(l)] =
          std::sqrt(acc / static_cast<double>(zs[l]->nodes.size()));
    }
  });
  std::vector<double> sums(3, 0.0);
  for (const auto& row : rms)
    for (int l = 0; l < 3; ++l) sums[static_cast<std::size_t>(l)] += row[static_cast<std::size_t>(l)];
  for (auto& s : sums) s /= reps;
  bool ok = true;
  for (int l = 0; l < 3; ++l)
    ok = ok && sums[static_cast<std::size_t>(l)] <=
                   10.0 * std::sqrt(hs[static_cast<std::size_t>(l)]);
  ok = ok && sums[0] > sums[1] && sums[1] > sums[2];
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "RMS %.4f / %.4f / %.4f vs budgets %.4f / %.4f / %.4f",
                sums[0], sums[1], sums[2], 10.0 * std::sqrt(hs[0]),
                10.0 * std::sqrt(hs[1]), 10.0 * std::sqrt(hs[2]));
  detail_out = buf;
  return ok;
}

// --- criterion 8: Bessel reduction -------------------------------------------
bool criterion_8(std::string& detail_out) {
  BesselOptions opts;
  opts.n_paths = 10000;
  opts.seed = 8200;
  const auto besq = bessel_reduction_demo(opts);
  bool ok = besq.valid && besq.verdict && besq.direct_mean->pass &&
            besq.reduced_mean->pass;

  BesselOptions opts2;
  opts2.n_paths = 5000;
  opts2.seed = 8300;
  opts2.radial_drift = [](double r) { return -r / (1.0 + r); };
  const auto drift = bessel_reduction_demo(opts2);
  ok = ok && drift.valid && drift.verdict;

  double worst_p = 1.0;
  for (const auto& t : besq.tests) worst_p = std::min(worst_p, t.test.p_value);
  for (const auto& t : drift.tests) worst_p = std::min(worst_p, t.test.p_value);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "E[R1] %.3f+-%.3f (direct) %.3f+-%.3f (reduced), min p %.3f, "
                "clip %.2e",
                besq.direct_mean->mean, besq.direct_mean->se,
                besq.reduced_mean->mean, besq.reduced_mean->se, worst_p,
                besq.clip_rate);
  detail_out = buf;
  return ok;
}

// --- criterion 9: discrete-time characterization -----------------------------
bool criterion_9(std::string& detail_out) {
  DiscreteCheckOptions opts;
  opts.seed = 8400;
  bool ok = true;
  std::string parts;
  for (const auto& c : shipped_discrete_cases()) {
    const auto rep = discrete_gauge_check(c, opts);
    ok = ok && rep.modes_agree && rep.density_invariant == c.expected_invariant;
    if (c.expected_invariant) {
      ok = ok && rep.density_residual <= 1e-10;
    } else if (c.name == "aniso-gauss") {
      ok = ok && rep.density_residual >= 0.1;
    }
    parts += c.name + (rep.verdict ? " ok" : " MISMATCH") + "; ";
  }
  detail_out = parts;
  return ok;
}

// --- criterion 10: non-Markovian example -------------------------------------
bool criterion_10(std::string& detail_out) {
  NonMarkovianOptions opts;
  opts.n_paths = 5000;
  opts.seed = 8500;
  const auto rep = nonmarkovian_demo(opts);
  bool ok = rep.verdict && rep.conditional.worst_diffusion <= 1e-12 &&
            rep.conditional.worst_drift <= 1e-12;

  NonMarkovianOptions bad_opts;
  bad_opts.n_paths = 5000;
  bad_opts.seed = 8600;
  bad_opts.anisotropy = 2.0;
  const auto bad = nonmarkovian_demo(bad_opts);
  ok = ok && !bad.verdict && bad.statistical.worst_p() < 0.01 &&
       bad.conditional.worst_diffusion > 0.1;

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "default p %.3f cond %.1e; aniso p %.5f cond %.2f",
                rep.statistical.worst_p(), rep.conditional.worst_diffusion,
                bad.statistical.worst_p(), bad.conditional.worst_diffusion);
  detail_out = buf;
  return ok;
}

// --- criterion 11: statistical calibration -----------------------------------
bool criterion_11(std::string& detail_out) {
  int rejections = 0;
  const int reps = 200;
  std::vector<int> flags(reps, 0);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    // Two independent Brownian endpoint samples (exact normals).
    RngStream ra(9000 + r, 0, Role::test);
    RngStream rb(9000 + r, 1, Role::test);
    Eigen::MatrixXd x(512, 2), y(512, 2);
    for (int i = 0; i < 512; ++i) {
      x(i, 0) = ra.normal();
      x(i, 1) = ra.normal();
      y(i, 0) = rb.normal();
      y(i, 1) = rb.normal();
    }
    TwoSampleOptions opts;
    opts.seed = 9500 + r;
    opts.n_permutations = 199;
    opts.threads = 1;
    flags[r] = two_sample_test(x, y, opts).p_value <= 0.01 ? 1 : 0;
  });
  for (int f : flags) rejections += f;
  const double rate = static_cast<double>(rejections) / reps;
  char buf[80];
  std::snprintf(buf, sizeof(buf), "rejection rate %.3f (%d/200)", rate,
                rejections);
  detail_out = buf;
  return rate >= 0.002 && rate <= 0.05;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  std::vector<Check> checks = {
      {"1a composition identity (<= 1e-12, 50 configs)", criterion_1a},
      {"1b inversion round trip (<= 1e-12, incl discrete inverse)", criterion_1b},
      {"1c automorphism coincidence (<= 1e-12)", criterion_1c},
      {"2  Brownian random-rotation invariance (n=5000, h=2^-10)", criterion_2},
      {"3  Levy checker (exact <= 1e-10; aniso = 1.0; stable <= 3SE)", criterion_3},
      {"4  transformation law vs empirical triplet (3SE, 10^4 paths)", criterion_4},
      {"5  Gamma/O correctness (rotations exact, shear 2g)", criterion_5},
      {"6  Marcus strong error (<= 0.05 at 2^-12, ratio >= 1.5)", criterion_6},
      {"7  cross-integrator RMS <= 10 sqrt(h), monotone", criterion_7},
      {"8  Bessel reduction (E[R1] = 3 within 3SE; two-sample p > 0.01)", criterion_8},
      {"9  discrete-time characterization (6 cases, both modes)", criterion_9},
      {"10 non-Markovian demo (pass) and anisotropic variant (fail)", criterion_10},
      {"11 null calibration at alpha = 0.01 in [0.002, 0.05]", criterion_11},
  };

  int failures = 0;
  for (auto& c : checks) {
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] %s (%.1fs) %s\n", ok ? "PASS" : "FAIL", c.name.c_str(),
                secs, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
