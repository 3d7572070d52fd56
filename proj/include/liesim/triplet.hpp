#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liesim/driver.hpp"
#include "liesim/gauge.hpp"
#include "liesim/group.hpp"
#include "liesim/parallel.hpp"
#include "liesim/path.hpp"

namespace liesim {

// The drift component of a characteristic triplet depends on the truncation
// functions; triplets carry a fingerprint of the h configuration so values
// computed under different truncations never compare equal.
struct TruncationConfig {
  std::string group_name;
  double r0 = 1.0;

  static TruncationConfig of(const LieGroup& g) {
    return TruncationConfig{g.name(), g.truncation_radius()};
  }
  std::string fingerprint() const {
    return group_name + ":r0=" + std::to_string(r0) + ":chi=cubic-smoothstep";
  }
};

// Deterministic (Levy-type) characteristic triplet: b(t) = b0 t, A(t) = A0 t,
// nu(dt, dz) = nu0(dz) dt. The b0 entries may carry a Monte Carlo standard
// error when a truncation integral was evaluated by sampling.
struct CharTriplet {
  GroupPtr group;
  Vector b0;
  Vector b0_se;
  Matrix A0;
  std::optional<FiniteActivityJumps> nu;
  TruncationConfig h_config;
};

// Characteristic triplet of a simulated Levy driver: the truncated drift is
// b0 + rate * E[h(J)], the h-integral evaluated over the jump sampler.
inline CharTriplet levy_triplet_of(const DriverSpec& spec, int draws = 32768,
                                   std::uint64_t seed = 0) {
  if (!std::holds_alternative<LevyDriver>(spec.model))
    throw GroupError("levy_triplet_of: driver has no deterministic triplet");
  const auto& d = std::get<LevyDriver>(spec.model);
  const int n = spec.group->algebra_dim();
  CharTriplet t;
  t.group = spec.group;
  t.b0 = d.triplet.b0;
  t.b0_se = Vector::Zero(n);
  t.A0 = d.triplet.A0;
  t.nu = d.triplet.jumps;
  t.h_config = TruncationConfig::of(*spec.group);
  // Centrally symmetric measures have int h dnu = 0 exactly: h inherits the
  // odd symmetry h(exp(-v)) = -h(exp(v)) from canonical coordinates.
  if (t.nu && t.nu->rate > 0.0 && !t.nu->symmetric) {
    RngStream rng(seed, 0, Role::quadrature);
    Vector sum = Vector::Zero(n), sumsq = Vector::Zero(n);
    for (int i = 0; i < draws; ++i) {
      const Vector h = spec.group->truncation(t.nu->sampler(rng));
      sum += h;
      sumsq += h.cwiseProduct(h);
    }
    const Vector mean = sum / draws;
    const Vector var = (sumsq / draws - mean.cwiseProduct(mean)).cwiseMax(0.0);
    t.b0 += t.nu->rate * mean;
    t.b0_se = t.nu->rate * (var / draws).cwiseSqrt();
  }
  return t;
}

// Transformation of a triplet under a deterministic gauge element
// (the transformation law specialized to constant G):
//   b~0 = Gamma b0 + (1/2) O : A0 + int (h(Xi_g(z)) - Gamma h(z)) nu0(dz)
//   A~0 = Gamma A0 Gamma^T
//   nu~0 = pushforward of nu0 under Xi_g.
// The h-correction integral is evaluated by Monte Carlo over the jump
// sampler with a reported standard error.
inline CharTriplet transform_triplet(const CharTriplet& t,
                                     const GaugeAction& act, const Vector& g,
                                     int draws = 32768,
                                     std::uint64_t seed = 0) {
  const int n = t.group->algebra_dim();
  const Matrix gm = gamma(act, g);
  const auto o = big_o(act, g);
  CharTriplet out;
  out.group = t.group;
  out.h_config = t.h_config;
  out.A0 = gm * t.A0 * gm.transpose();
  out.A0 = 0.5 * (out.A0 + out.A0.transpose().eval());
  out.b0 = gm * t.b0 + 0.5 * contract_big_o(o, t.A0);
  Vector se_sq = (gm.cwiseProduct(gm)) * t.b0_se.cwiseProduct(t.b0_se);
  if (t.nu && t.nu->rate > 0.0) {
    RngStream rng(seed, 0, Role::quadrature);
    Vector sum = Vector::Zero(n), sumsq = Vector::Zero(n);
    for (int i = 0; i < draws; ++i) {
      const Matrix j = t.nu->sampler(rng);
      const Vector d = t.group->truncation(act.apply(g, j)) -
                       gm * t.group->truncation(j);
      sum += d;
      sumsq += d.cwiseProduct(d);
    }
    const Vector mean = sum / draws;
    const Vector var = (sumsq / draws - mean.cwiseProduct(mean)).cwiseMax(0.0);
    out.b0 += t.nu->rate * mean;
    se_sq += (t.nu->rate * t.nu->rate) * (var / draws);

    FiniteActivityJumps pushed;
    pushed.rate = t.nu->rate;
    pushed.name = t.nu->name + "@" + act.name;
    auto sampler = t.nu->sampler;
    auto apply = act.apply;
    pushed.sampler = [sampler, apply, g](RngStream& r) {
      return apply(g, sampler(r));
    };
    out.nu = std::move(pushed);
  }
  out.b0_se = se_sq.cwiseSqrt();
  return out;
}

struct TestFunction {
  std::string name;
  std::function<double(const Matrix&)> f;  // evaluated on group elements
};

// Weak-testing dictionary for the jump-measure condition: radial bumps,
// coordinate-wise odd and even bumps, cross terms, and the truncation
// components themselves. 16 functions on a two-dimensional group.
inline std::vector<TestFunction> default_test_functions(const GroupPtr& group) {
  const int n = group->algebra_dim();
  std::vector<TestFunction> fs;
  auto coords = [group, n](const Matrix& z) -> Vector {
    try {
      return group->log(z);
    } catch (const OutOfDomainError&) {
      return Vector::Zero(n);
    }
  };
  for (double c : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0}) {
    fs.push_back({"radial:" + std::to_string(c), [coords, c](const Matrix& z) {
                    const double r = coords(z).norm();
                    const double w = 0.5 * c;
                    const double u = (r - c) / w;
                    return std::exp(-0.5 * u * u);
                  }});
  }
  const int m = std::min(n, 2);
  for (int i = 0; i < m; ++i) {
    for (double s : {1.0, 4.0}) {
      fs.push_back({"odd:" + std::to_string(i) + ":" + std::to_string(s),
                    [coords, i, s](const Matrix& z) {
                      const Vector v = coords(z);
                      return v(i) * std::exp(-v.squaredNorm() / (2.0 * s));
                    }});
    }
  }
  for (int i = 0; i < m; ++i) {
    fs.push_back({"even:" + std::to_string(i), [coords, i](const Matrix& z) {
                    const Vector v = coords(z);
                    return v(i) * v(i) * std::exp(-0.5 * v.squaredNorm());
                  }});
  }
  if (n >= 2) {
    fs.push_back({"cross:01", [coords](const Matrix& z) {
                    const Vector v = coords(z);
                    return v(0) * v(1) * std::exp(-0.5 * v.squaredNorm());
                  }});
    fs.push_back({"aniso:0-1", [coords](const Matrix& z) {
                    const Vector v = coords(z);
                    return (v(0) * v(0) - v(1) * v(1)) *
                           std::exp(-0.5 * v.squaredNorm());
                  }});
  }
  for (int i = 0; i < m; ++i) {
    fs.push_back({"h:" + std::to_string(i), [group, i](const Matrix& z) {
                    return group->truncation(z)(i);
                  }});
  }
  return fs;
}

struct MeasureCheck {
  std::string fn;
  double diff = 0.0;
  double se = 0.0;
  bool pass = true;
};

struct GaugeCheckRow {
  Vector g;
  double drift_residual = 0.0;
  double drift_tolerance = 0.0;
  double diffusion_residual = 0.0;
  double diffusion_tolerance = 0.0;
  std::vector<MeasureCheck> measure;
  bool pass = true;
};

struct InvarianceReport {
  std::string h_fingerprint;
  std::vector<GaugeCheckRow> rows;
  bool verdict = true;
};

struct LevyCheckOptions {
  int n_gauge_samples = 32;
  int measure_draws = 32768;
  std::uint64_t seed = 0;
  double exact_tol = 1e-8;   // exact-structure residuals
  double se_mult = 3.0;      // Monte Carlo residuals
  double abs_floor = 1e-12;
};

// Deterministic invariance conditions for an independent-increments process:
// drift, diffusion and jump-measure equations checked for every sampled g
// (the identity always included). Exact-structure residuals and Monte Carlo
// residuals are reported separately and never mixed.
inline InvarianceReport check_levy_invariance(
    const CharTriplet& t, const GaugeAction& act,
    std::vector<Vector> g_sample = {},
    std::vector<TestFunction> fs = {},
    const LevyCheckOptions& opts = {}) {
  if (g_sample.empty()) {
    RngStream rng(opts.seed, 0, Role::gauge_sample);
    g_sample.push_back(act.group.identity);
    for (int i = 0; i < opts.n_gauge_samples; ++i)
      g_sample.push_back(act.group.sample(rng));
  }
  if (fs.empty()) fs = default_test_functions(t.group);

  InvarianceReport rep;
  rep.h_fingerprint = t.h_config.fingerprint();
  const int n = t.group->algebra_dim();
  const bool has_jumps = t.nu && t.nu->rate > 0.0;

  // One shared jump sample across gauge elements and test functions.
  std::vector<Matrix> jumps;
  if (has_jumps) {
    RngStream rng(opts.seed, 1, Role::quadrature);
    jumps.reserve(static_cast<std::size_t>(opts.measure_draws));
    for (int i = 0; i < opts.measure_draws; ++i)
      jumps.push_back(t.nu->sampler(rng));
  }

  for (const Vector& g : g_sample) {
    GaugeCheckRow row;
    row.g = g;
    const Matrix gm = gamma(act, g);
    const auto o = big_o(act, g);

    Vector rhs = gm * t.b0 + 0.5 * contract_big_o(o, t.A0);
    Vector corr_se = Vector::Zero(n);
    if (has_jumps) {
      Vector sum = Vector::Zero(n), sumsq = Vector::Zero(n);
      for (const Matrix& j : jumps) {
        const Vector d = t.group->truncation(act.apply(g, j)) -
                         gm * t.group->truncation(j);
        sum += d;
        sumsq += d.cwiseProduct(d);
      }
      const double m = static_cast<double>(jumps.size());
      const Vector mean = sum / m;
      const Vector var = (sumsq / m - mean.cwiseProduct(mean)).cwiseMax(0.0);
      rhs += t.nu->rate * mean;
      corr_se = t.nu->rate * (var / m).cwiseSqrt();
    }
    row.drift_residual = (t.b0 - rhs).cwiseAbs().maxCoeff();
    row.drift_tolerance =
        opts.exact_tol +
        opts.se_mult * (corr_se + t.b0_se).cwiseAbs().maxCoeff();
    bool ok = row.drift_residual <= row.drift_tolerance;

    row.diffusion_residual = (t.A0 - gm * t.A0 * gm.transpose()).norm();
    row.diffusion_tolerance = opts.exact_tol;
    ok = ok && row.diffusion_residual <= row.diffusion_tolerance;

    if (has_jumps) {
      for (const auto& fn : fs) {
        double sum = 0.0, sumsq = 0.0;
        for (const Matrix& j : jumps) {
          const double d = fn.f(act.apply(g, j)) - fn.f(j);
          sum += d;
          sumsq += d * d;
        }
        const double m = static_cast<double>(jumps.size());
        const double mean = sum / m;
        const double var = std::max(0.0, sumsq / m - mean * mean);
        MeasureCheck mc;
        mc.fn = fn.name;
        mc.diff = t.nu->rate * mean;
        mc.se = t.nu->rate * std::sqrt(var / m);
        mc.pass = std::abs(mc.diff) <= opts.se_mult * mc.se + opts.abs_floor;
        ok = ok && mc.pass;
        row.measure.push_back(std::move(mc));
      }
    }
    row.pass = ok;
    rep.verdict = rep.verdict && ok;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// Conditional (product-group) model: per auxiliary path, per step, the rates
// (db/dt, dA/dt); the jump part is absent in the supported models.
using ConditionalModel =
    std::function<std::pair<Vector, Matrix>(const CadlagPath&, std::size_t)>;

struct ConditionalReport {
  double worst_drift = 0.0;
  double worst_diffusion = 0.0;
  std::size_t n_aux = 0;
  std::size_t n_gauge = 0;
  bool verdict = true;
};

// Conditional invariance: the deterministic conditions hold per auxiliary
// realization; residuals are aggregated worst-case over paths, steps and
// sampled gauge elements.
inline ConditionalReport check_conditional_invariance(
    const ConditionalModel& model, const GaugeAction& act,
    const std::vector<Vector>& g_sample,
    const std::vector<CadlagPath>& aux_paths, double tol = 1e-10) {
  ConditionalReport rep;
  rep.n_aux = aux_paths.size();
  rep.n_gauge = g_sample.size();
  for (const Vector& g : g_sample) {
    const Matrix gm = gamma(act, g);
    const auto o = big_o(act, g);
    for (const auto& aux : aux_paths) {
      for (std::size_t s = 1; s <= aux.steps(); ++s) {
        const auto [b, a] = model(aux, s);
        const double ra = (a - gm * a * gm.transpose()).norm();
        const double rb =
            (b - (gm * b + 0.5 * contract_big_o(o, a))).cwiseAbs().maxCoeff();
        rep.worst_diffusion = std::max(rep.worst_diffusion, ra);
        rep.worst_drift = std::max(rep.worst_drift, rb);
      }
    }
  }
  rep.verdict = rep.worst_diffusion <= tol && rep.worst_drift <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Empirical characteristics.

struct JumpHistogram {
  double floor = 1e-8;
  double r_max = 4.0;
  int bins = 24;
  std::vector<double> radial_rate;  // per-bin rate estimates

  void init() { radial_rate.assign(static_cast<std::size_t>(bins), 0.0); }
};

// Per-path sufficient statistics for the characteristic estimators.
struct PathStats {
  Vector b_total;   // sum of continuous log-increments + h(jumps)
  Matrix a_total;   // realized covariation of the continuous part
  double jump_count = 0.0;
  Vector f_totals;  // per test function, sum over jumps
  std::vector<double> radial_counts;
  double horizon = 0.0;
};

inline PathStats path_statistics(const CadlagPath& p,
                                 const std::vector<TestFunction>& fs,
                                 const JumpHistogram& histo_cfg) {
  const auto& g = *p.group;
  const int n = g.algebra_dim();
  PathStats s;
  s.b_total = Vector::Zero(n);
  s.a_total = Matrix::Zero(n, n);
  s.f_totals = Vector::Zero(static_cast<int>(fs.size()));
  s.radial_counts.assign(static_cast<std::size_t>(histo_cfg.bins), 0.0);
  s.horizon = p.horizon();
  for (std::size_t i = 1; i < p.times.size(); ++i) {
    const Matrix& left = p.left_limit(i);
    const Vector v = g.log(g.mul(left, g.inv(p.nodes[i - 1])));
    s.b_total += v;
    s.a_total.noalias() += v * v.transpose();
  }
  for (const auto& j : p.jumps) {
    const Matrix delta = g.mul(p.nodes[j.index], g.inv(j.left_limit));
    s.b_total += g.truncation(delta);
    s.jump_count += 1.0;
    for (std::size_t f = 0; f < fs.size(); ++f)
      s.f_totals(static_cast<int>(f)) += fs[f].f(delta);
    double r = 0.0;
    try {
      r = g.log(delta).norm();
    } catch (const OutOfDomainError&) {
      r = histo_cfg.r_max;
    }
    if (r > histo_cfg.floor) {
      const int b = std::min(
          histo_cfg.bins - 1,
          static_cast<int>(r / histo_cfg.r_max * histo_cfg.bins));
      s.radial_counts[static_cast<std::size_t>(b)] += 1.0;
    }
  }
  return s;
}

struct EstimatedTriplet {
  Vector b0, b0_se;
  Matrix A0, A0_se;
  double rate = 0.0, rate_se = 0.0;
  Vector nu_f, nu_f_se;  // estimates of int f dnu0 per test function
  std::vector<std::string> f_names;
  JumpHistogram histogram;
  std::size_t n_paths = 0;
  TruncationConfig h_config;
};

// Mean/standard-error reduction over per-path statistics; the merge over
// paths is commutative and associative, so partial aggregation parallelizes.
class TripletEstimator {
 public:
  TripletEstimator(GroupPtr group, std::vector<TestFunction> fs,
                   JumpHistogram histo = {})
      : group_(std::move(group)), fs_(std::move(fs)), histo_(histo) {
    const int n = group_->algebra_dim();
    const int nf = static_cast<int>(fs_.size());
    histo_.init();
    b_sum_ = Vector::Zero(n);
    b_sumsq_ = Vector::Zero(n);
    a_sum_ = Matrix::Zero(n, n);
    a_sumsq_ = Matrix::Zero(n, n);
    f_sum_ = Vector::Zero(nf);
    f_sumsq_ = Vector::Zero(nf);
  }

  const std::vector<TestFunction>& test_functions() const { return fs_; }

  void accumulate(const CadlagPath& p) { accumulate(path_statistics(p, fs_, histo_)); }

  void accumulate(const PathStats& s) {
    if (horizon_ == 0.0) horizon_ = s.horizon;
    b_sum_ += s.b_total;
    b_sumsq_ += s.b_total.cwiseProduct(s.b_total);
    a_sum_ += s.a_total;
    a_sumsq_ += s.a_total.cwiseProduct(s.a_total);
    count_sum_ += s.jump_count;
    count_sumsq_ += s.jump_count * s.jump_count;
    f_sum_ += s.f_totals;
    f_sumsq_ += s.f_totals.cwiseProduct(s.f_totals);
    for (std::size_t b = 0; b < s.radial_counts.size(); ++b)
      histo_.radial_rate[b] += s.radial_counts[b];
    ++n_;
  }

  void merge(const TripletEstimator& other) {
    b_sum_ += other.b_sum_;
    b_sumsq_ += other.b_sumsq_;
    a_sum_ += other.a_sum_;
    a_sumsq_ += other.a_sumsq_;
    count_sum_ += other.count_sum_;
    count_sumsq_ += other.count_sumsq_;
    f_sum_ += other.f_sum_;
    f_sumsq_ += other.f_sumsq_;
    for (std::size_t b = 0; b < histo_.radial_rate.size(); ++b)
      histo_.radial_rate[b] += other.histo_.radial_rate[b];
    n_ += other.n_;
    if (horizon_ == 0.0) horizon_ = other.horizon_;
  }

  EstimatedTriplet finalize() const {
    if (n_ < 100) throw GroupError("estimate_characteristics: need >= 100 paths");
    const double p = static_cast<double>(n_);
    const double T = horizon_;
    EstimatedTriplet e;
    e.n_paths = n_;
    e.h_config = TruncationConfig::of(*group_);
    auto se_vec = [p](const Vector& sum, const Vector& sumsq) {
      const Vector mean = sum / p;
      const Vector var = (sumsq / p - mean.cwiseProduct(mean)).cwiseMax(0.0);
      return ((var / p).cwiseSqrt()).eval();
    };
    e.b0 = b_sum_ / (p * T);
    e.b0_se = se_vec(b_sum_, b_sumsq_) / T;
    e.A0 = a_sum_ / (p * T);
    {
      const Matrix mean = a_sum_ / p;
      const Matrix var =
          (a_sumsq_ / p - mean.cwiseProduct(mean)).cwiseMax(0.0);
      e.A0_se = (var / p).cwiseSqrt() / T;
    }
    const double cmean = count_sum_ / p;
    const double cvar = std::max(0.0, count_sumsq_ / p - cmean * cmean);
    e.rate = cmean / T;
    e.rate_se = std::sqrt(cvar / p) / T;
    e.nu_f = f_sum_ / (p * T);
    e.nu_f_se = se_vec(f_sum_, f_sumsq_) / T;
    e.f_names.reserve(fs_.size());
    for (const auto& f : fs_) e.f_names.push_back(f.name);
    e.histogram = histo_;
    for (auto& r : e.histogram.radial_rate) r /= p * T;
    return e;
  }

 private:
  GroupPtr group_;
  std::vector<TestFunction> fs_;
  JumpHistogram histo_;
  Vector b_sum_, b_sumsq_;
  Matrix a_sum_, a_sumsq_;
  double count_sum_ = 0.0, count_sumsq_ = 0.0;
  Vector f_sum_, f_sumsq_;
  std::size_t n_ = 0;
  double horizon_ = 0.0;
};

// Streaming estimation over generated paths; generation runs in parallel,
// the reduction is performed in replica order.
inline EstimatedTriplet estimate_characteristics(
    const std::function<CadlagPath(std::size_t)>& make_path,
    std::size_t n_paths, const GroupPtr& group,
    std::vector<TestFunction> fs = {}, int threads = 0) {
  if (fs.empty()) fs = default_test_functions(group);
  JumpHistogram cfg;
  std::vector<PathStats> stats(n_paths);
  parallel_for(
      n_paths,
      [&](std::size_t i) {
        stats[i] = path_statistics(make_path(i), fs, cfg);
      },
      threads);
  TripletEstimator est(group, fs, cfg);
  for (const auto& s : stats) est.accumulate(s);
  return est.finalize();
}

struct ConsistencyRow {
  std::string name;
  double estimate = 0.0;
  double target = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = true;
};

struct ConsistencyReport {
  std::vector<ConsistencyRow> rows;
  bool verdict = true;
};

// Entrywise comparison of an empirical triplet against a model triplet:
// |difference| <= se_mult * combined standard error (with a small absolute
// floor for exactly-zero entries). The jump measure is compared weakly via
// the estimator's test-function dictionary, with the model side evaluated by
// Monte Carlo over the model jump sampler.
inline ConsistencyReport triplet_consistency(const EstimatedTriplet& est,
                                             const CharTriplet& model,
                                             std::vector<TestFunction> fs = {},
                                             double se_mult = 3.0,
                                             int draws = 65536,
                                             std::uint64_t seed = 0,
                                             double abs_floor = 1e-9) {
  if (est.h_config.fingerprint() != model.h_config.fingerprint())
    throw GroupError("triplet_consistency: truncation configs differ");
  ConsistencyReport rep;
  const int n = est.b0.size();
  auto push = [&](const std::string& name, double a, double b, double se) {
    ConsistencyRow r;
    r.name = name;
    r.estimate = a;
    r.target = b;
    r.se = se;
    r.z = se > 0.0 ? std::abs(a - b) / se : 0.0;
    r.pass = std::abs(a - b) <= se_mult * se + abs_floor;
    rep.verdict = rep.verdict && r.pass;
    rep.rows.push_back(std::move(r));
  };
  for (int i = 0; i < n; ++i)
    push("b0[" + std::to_string(i) + "]", est.b0(i), model.b0(i),
         std::sqrt(est.b0_se(i) * est.b0_se(i) +
                   model.b0_se(i) * model.b0_se(i)));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      push("A0[" + std::to_string(i) + "," + std::to_string(j) + "]",
           est.A0(i, j), model.A0(i, j), est.A0_se(i, j));
  const double model_rate = model.nu ? model.nu->rate : 0.0;
  push("nu.rate", est.rate, model_rate, est.rate_se);
  if (model.nu && model.nu->rate > 0.0) {
    // Model-side integrals rate * E[f(J)] with their own Monte Carlo error.
    // The dictionary must be the one the estimator used.
    if (fs.empty()) fs = default_test_functions(model.group);
    if (fs.size() != static_cast<std::size_t>(est.nu_f.size()))
      throw GroupError("triplet_consistency: test-function dictionary mismatch");
    RngStream rng(seed, 2, Role::quadrature);
    const int nf = est.nu_f.size();
    Vector sum = Vector::Zero(nf), sumsq = Vector::Zero(nf);
    for (int d = 0; d < draws; ++d) {
      const Matrix j = model.nu->sampler(rng);
      for (int f = 0; f < nf; ++f) {
        const double v = fs[static_cast<std::size_t>(f)].f(j);
        sum(f) += v;
        sumsq(f) += v * v;
      }
    }
    for (int f = 0; f < nf; ++f) {
      const double mean = sum(f) / draws;
      const double var = std::max(0.0, sumsq(f) / draws - mean * mean);
      const double target = model_rate * mean;
      const double mse = model_rate * std::sqrt(var / draws);
      push("nu[" + est.f_names[static_cast<std::size_t>(f)] + "]",
           est.nu_f(f), target,
           std::sqrt(est.nu_f_se(f) * est.nu_f_se(f) + mse * mse));
    }
  }
  return rep;
}

}  // namespace liesim
