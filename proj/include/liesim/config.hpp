#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "liesim/driver.hpp"
#include "liesim/gauge.hpp"
#include "liesim/lab.hpp"
#include "liesim/sde.hpp"
#include "liesim/triplet.hpp"

namespace liesim {

using Json = nlohmann::ordered_json;

// Config violations carry a JSON-pointer path to the offending field.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& pointer, const std::string& what)
      : std::runtime_error("config error at " + pointer + ": " + what),
        pointer_path(pointer) {}
  std::string pointer_path;
};

namespace cfg {

inline const Json* find(const Json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double number(const Json& j, const std::string& ptr,
                     const std::string& key,
                     std::optional<double> fallback = std::nullopt) {
  const Json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(ptr + "/" + key, "missing required number");
  }
  if (!v->is_number()) throw ConfigError(ptr + "/" + key, "expected a number");
  return v->get<double>();
}

inline double positive(const Json& j, const std::string& ptr,
                       const std::string& key,
                       std::optional<double> fallback = std::nullopt) {
  const double v = number(j, ptr, key, fallback);
  if (!(v > 0.0)) throw ConfigError(ptr + "/" + key, "must be positive");
  return v;
}

inline std::int64_t integer(const Json& j, const std::string& ptr,
                            const std::string& key,
                            std::optional<std::int64_t> fallback = std::nullopt) {
  const Json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(ptr + "/" + key, "missing required integer");
  }
  if (!v->is_number_integer())
    throw ConfigError(ptr + "/" + key, "expected an integer");
  return v->get<std::int64_t>();
}

inline std::string text(const Json& j, const std::string& ptr,
                        const std::string& key,
                        std::optional<std::string> fallback = std::nullopt) {
  const Json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(ptr + "/" + key, "missing required string");
  }
  if (!v->is_string()) throw ConfigError(ptr + "/" + key, "expected a string");
  return v->get<std::string>();
}

inline Vector vector(const Json& j, const std::string& ptr,
                     const std::string& key) {
  const Json* v = find(j, key);
  if (!v || !v->is_array())
    throw ConfigError(ptr + "/" + key, "expected an array of numbers");
  Vector out(static_cast<int>(v->size()));
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number())
      throw ConfigError(ptr + "/" + key + "/" + std::to_string(i),
                        "expected a number");
    out(static_cast<int>(i)) = (*v)[i].get<double>();
  }
  return out;
}

inline Matrix matrix(const Json& j, const std::string& ptr,
                     const std::string& key) {
  const Json* v = find(j, key);
  if (!v || !v->is_array() || v->empty())
    throw ConfigError(ptr + "/" + key, "expected an array of rows");
  const std::size_t rows = v->size();
  const std::size_t cols = (*v)[0].size();
  Matrix out(static_cast<int>(rows), static_cast<int>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!(*v)[r].is_array() || (*v)[r].size() != cols)
      throw ConfigError(ptr + "/" + key + "/" + std::to_string(r),
                        "ragged matrix row");
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<int>(r), static_cast<int>(c)) = (*v)[r][c].get<double>();
  }
  return out;
}

}  // namespace cfg

// Group specs addressable by name: "additive:n", "so:n",
// "product:<a>,<b>" with top-level comma splitting.
inline GroupPtr make_group(const std::string& name,
                           const std::string& ptr = "/group") {
  if (name.rfind("additive:", 0) == 0) {
    const int n = std::atoi(name.c_str() + 9);
    if (n <= 0) throw ConfigError(ptr, "bad dimension in '" + name + "'");
    return LieGroup::additive(n);
  }
  if (name.rfind("so:", 0) == 0) {
    const int n = std::atoi(name.c_str() + 3);
    if (n < 2) throw ConfigError(ptr, "bad dimension in '" + name + "'");
    return LieGroup::special_orthogonal(n);
  }
  if (name.rfind("product:", 0) == 0) {
    const std::string body = name.substr(8);
    int depth = 0;
    std::size_t split = std::string::npos;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '(') ++depth;
      if (body[i] == ')') --depth;
      if (body[i] == ',' && depth == 0) {
        split = i;
        break;
      }
    }
    if (split == std::string::npos)
      throw ConfigError(ptr, "product needs two comma-separated factors");
    return LieGroup::product(make_group(body.substr(0, split), ptr),
                             make_group(body.substr(split + 1), ptr));
  }
  throw ConfigError(ptr, "unknown group '" + name + "'");
}

// Actions addressable by name: "rotation", "rotation:n", "orthogonal",
// "scaling", "qshear", "first-factor:<inner>". On additive groups
// "first-factor:<inner>" realizes the inner action on the leading
// coordinates and the identity on the rest.
inline GaugeAction make_action(const std::string& name, const GroupPtr& group,
                               const std::string& ptr = "/action") {
  auto leading_coords = [&](int r) {
    std::vector<int> c;
    for (int i = 0; i < r; ++i) c.push_back(i);
    return c;
  };
  if (name == "rotation" || name.rfind("rotation:", 0) == 0) {
    if (name == "rotation") return rotation_action(group);
    const int r = std::atoi(name.c_str() + 9);
    if (r < 2 || r > group->algebra_dim())
      throw ConfigError(ptr, "bad rotation dimension in '" + name + "'");
    return rotation_action(group, leading_coords(r));
  }
  if (name == "orthogonal" || name.rfind("orthogonal:", 0) == 0) {
    if (name == "orthogonal") return rotation_action(group, {}, true);
    const int r = std::atoi(name.c_str() + 11);
    return rotation_action(group, leading_coords(r), true);
  }
  if (name == "scaling") return scaling_action(group);
  if (name == "qshear") return qshear_action(group);
  if (name.rfind("first-factor:", 0) == 0) {
    const std::string inner_name = name.substr(13);
    if (group->kind() == LieGroup::Kind::product) {
      auto f1 = make_group(group->factor1().name(), ptr);
      return first_factor_action(make_action(inner_name, f1, ptr), group);
    }
    if (group->kind() == LieGroup::Kind::additive) {
      if (inner_name.rfind("rotation:", 0) == 0) {
        const int r = std::atoi(inner_name.c_str() + 9);
        if (r < 2 || r > group->algebra_dim())
          throw ConfigError(ptr, "bad inner dimension in '" + name + "'");
        return rotation_action(group, leading_coords(r));
      }
      throw ConfigError(ptr, "unsupported inner action '" + inner_name + "'");
    }
    throw ConfigError(ptr, "first-factor needs a product or additive group");
  }
  throw ConfigError(ptr, "unknown action '" + name + "'");
}

inline FiniteActivityJumps make_jumps(const Json& j, const GroupPtr& group,
                                      const std::string& ptr) {
  const std::string type = cfg::text(j, ptr, "type");
  if (type == "gaussian") {
    const double rate = cfg::positive(j, ptr, "rate");
    const Vector mean = cfg::vector(j, ptr, "mean");
    const Matrix cov = cfg::matrix(j, ptr, "cov");
    if (mean.size() != group->algebra_dim())
      throw ConfigError(ptr + "/mean", "dimension mismatch with group");
    return gaussian_jumps(group, rate, mean, cov);
  }
  if (type == "algebra-gaussian") {
    return algebra_gaussian_jumps(group, cfg::positive(j, ptr, "rate"),
                                  cfg::positive(j, ptr, "sigma"));
  }
  if (type == "stable") {
    return truncated_stable_jumps(group, cfg::positive(j, ptr, "alpha"),
                                  cfg::positive(j, ptr, "scale"),
                                  cfg::positive(j, ptr, "eps"));
  }
  throw ConfigError(ptr + "/type", "unknown jump spec '" + type + "'");
}

inline DriverSpec make_driver(const Json& j, const std::string& ptr = "/driver") {
  const std::string type = cfg::text(j, ptr, "type");
  if (type == "brownian") {
    const int n = static_cast<int>(cfg::integer(j, ptr, "dim", 2));
    if (n <= 0) throw ConfigError(ptr + "/dim", "must be positive");
    return DriverSpec::brownian(n);
  }
  if (type == "levy") {
    const std::string gname = cfg::text(j, ptr, "group", "additive:2");
    GroupPtr group = make_group(gname, ptr + "/group");
    LevyTriplet t;
    t.b0 = cfg::vector(j, ptr, "b0");
    t.A0 = cfg::matrix(j, ptr, "A0");
    if (const Json* js = cfg::find(j, "jumps"))
      t.jumps = make_jumps(*js, group, ptr + "/jumps");
    if (t.b0.size() != group->algebra_dim())
      throw ConfigError(ptr + "/b0", "dimension mismatch with group");
    try {
      t.validate();
    } catch (const std::exception& e) {
      throw ConfigError(ptr, e.what());
    }
    return DriverSpec::levy(std::move(group), std::move(t));
  }
  if (type == "compound-poisson") {
    const std::string gname = cfg::text(j, ptr, "group", "additive:2");
    GroupPtr group = make_group(gname, ptr + "/group");
    const Json* js = cfg::find(j, "jumps");
    if (!js) throw ConfigError(ptr + "/jumps", "missing jump spec");
    return DriverSpec::compound_poisson(group,
                                        make_jumps(*js, group, ptr + "/jumps"));
  }
  if (type == "stable") {
    const int n = static_cast<int>(cfg::integer(j, ptr, "dim", 2));
    GroupPtr group = LieGroup::additive(n);
    LevyTriplet t;
    t.b0 = Vector::Zero(n);
    t.A0 = Matrix::Zero(n, n);
    t.jumps = truncated_stable_jumps(group, cfg::positive(j, ptr, "alpha"),
                                     cfg::positive(j, ptr, "scale", 1.0),
                                     cfg::positive(j, ptr, "eps"));
    return DriverSpec::levy(std::move(group), std::move(t), "stable");
  }
  if (type == "discrete") {
    const std::string case_name = cfg::text(j, ptr, "case");
    for (auto& c : shipped_discrete_cases()) {
      if (c.name == case_name) {
        auto group = LieGroup::additive(c.dim);
        auto cs = c.sampler;
        DiscreteSampler ds = [group, cs](std::size_t step,
                                         const std::vector<Matrix>& hist,
                                         RngStream& r) {
          std::vector<Vector> deltas;
          Vector prev = Vector::Zero(group->algebra_dim());
          for (const auto& zn : hist) {
            const Vector cur = group->log(zn);
            deltas.push_back(cur - prev);
            prev = cur;
          }
          return group->exp(cs(step, deltas, r));
        };
        const auto steps = static_cast<std::size_t>(
            cfg::integer(j, ptr, "steps", static_cast<std::int64_t>(c.n_steps)));
        return DriverSpec::discrete(group, steps, ds, "discrete:" + case_name);
      }
    }
    throw ConfigError(ptr + "/case", "unknown discrete case '" + case_name + "'");
  }
  if (type == "composite-w") {
    const std::string integrand =
        cfg::text(j, ptr, "integrand", "one-plus-max");
    const double aniso = cfg::positive(j, ptr, "anisotropy", 1.0);
    if (integrand == "one-plus-max")
      return DriverSpec::composite_w(one_plus_running_max, aniso);
    if (integrand == "one")
      return DriverSpec::composite_w(
          [](std::span<const double>) { return 1.0; }, aniso);
    throw ConfigError(ptr + "/integrand",
                      "unknown integrand '" + integrand + "'");
  }
  throw ConfigError(ptr + "/type", "unknown driver type '" + type + "'");
}

// Gauge-process presets. "rotation-by-past" turns the previous node's
// coordinates into a rotation angle: theta = sum_i w_i x_{c_i}(t-) + offset.
inline GaugeProcess make_gauge_process(const Json& j, const GaugeAction& action,
                                       const std::string& ptr = "/gauge_process") {
  const std::string preset = cfg::text(j, ptr, "preset");
  if (preset == "constant") {
    const Vector g = cfg::vector(j, ptr, "g");
    if (g.size() != action.group.dim)
      throw ConfigError(ptr + "/g", "dimension mismatch with gauge group");
    return GaugeProcess::constant(g);
  }
  if (preset == "scaling-constant") {
    return GaugeProcess::constant(
        Vector::Constant(1, cfg::positive(j, ptr, "s")));
  }
  if (preset == "identity") {
    return GaugeProcess::constant(action.group.identity);
  }
  if (preset == "rotation-by-past") {
    if (action.group.dim != 4)
      throw ConfigError(ptr, "rotation-by-past needs a planar rotation group");
    std::vector<int> coords = {0};
    std::vector<double> weights = {1.0};
    if (cfg::find(j, "coords")) {
      const Vector c = cfg::vector(j, ptr, "coords");
      const Vector w = cfg::vector(j, ptr, "weights");
      if (c.size() != w.size())
        throw ConfigError(ptr + "/weights", "must match coords length");
      coords.clear();
      weights.clear();
      for (int i = 0; i < c.size(); ++i) {
        coords.push_back(static_cast<int>(c(i)));
        weights.push_back(w(i));
      }
    }
    const double offset = cfg::number(j, ptr, "offset", 0.0);
    const std::string source = cfg::text(j, ptr, "source", "transformed");
    auto fn = [coords, weights, offset](std::size_t,
                                        const DriverView& past) -> Vector {
      const Vector v = past.coords(past.size() - 1);
      double theta = offset;
      for (std::size_t i = 0; i < coords.size(); ++i)
        theta += weights[i] * v(coords[i]);
      return detail::flatten(rotation2(theta));
    };
    if (source == "transformed") return GaugeProcess::of_transformed(fn);
    if (source == "source") return GaugeProcess::of_source(fn);
    throw ConfigError(ptr + "/source", "must be 'transformed' or 'source'");
  }
  throw ConfigError(ptr + "/preset", "unknown preset '" + preset + "'");
}

// SDE presets addressable by name; custom maps are supplied programmatically.
struct SdePreset {
  GeometricalSDE sde;
  Vector x0;
  std::string driver_hint;
};

inline SdePreset make_sde_preset(const std::string& name,
                                 const std::string& ptr = "/sde") {
  if (name == "additive" || name.rfind("additive:", 0) == 0) {
    const int n = name == "additive" ? 2 : std::atoi(name.c_str() + 9);
    if (n <= 0) throw ConfigError(ptr, "bad dimension in '" + name + "'");
    GeometricalSDE sde;
    sde.state_dim = n;
    sde.param_dim = 0;
    sde.driver_group = LieGroup::additive(n);
    GroupPtr g = sde.driver_group;
    sde.psi = [g](const Vector&, const Vector& x, const Matrix& z) -> Vector {
      return x + g->log(z);
    };
    sde.d1 = [n](const Vector&, const Vector&) -> Matrix {
      return Matrix::Identity(n, n);
    };
    sde.d2 = [n](const Vector&, const Vector&) {
      return std::vector<Matrix>(static_cast<std::size_t>(n),
                                 Matrix::Zero(n, n));
    };
    return {std::move(sde), Vector::Zero(n), "brownian:" + std::to_string(n)};
  }
  if (name == "marcus:linear") {
    std::vector<VectorField> fields = {
        [](const Vector& x) -> Vector { return x; }};
    return {marcus_sde(std::move(fields), 1), Vector::Ones(1), "brownian:1"};
  }
  if (name == "smooth-levy:multiplicative") {
    // dX = 0.1 X dt + X dJ with Gaussian finite-activity jumps.
    auto jump_group = LieGroup::additive(1);
    const FiniteActivityJumps nu =
        algebra_gaussian_jumps(jump_group, 1.0, 0.3);
    auto sde = smooth_levy_sde(
        [](const Vector& x) -> Vector { return 0.1 * x; }, {},
        [](const Vector& x, const Vector& z) -> Vector { return x * z(0); },
        nu, 1, 1);
    return {std::move(sde), Vector::Ones(1), "levy(t,jump)"};
  }
  throw ConfigError(ptr, "unknown SDE preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Report serialization (stable field order; no timestamps, so reruns with
// identical config and seeds are byte-identical).

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const CharTriplet& t) {
  Json out{{"group", t.group->name()},
           {"b0", vector_to_json(t.b0)},
           {"b0_se", vector_to_json(t.b0_se)},
           {"A0", matrix_to_json(t.A0)},
           {"h_config", t.h_config.fingerprint()}};
  out["jumps"] = t.nu ? Json{{"rate", t.nu->rate}, {"name", t.nu->name}}
                      : Json(nullptr);
  return out;
}

inline Json to_json(const EstimatedTriplet& e) {
  Json nu = Json::array();
  for (std::size_t f = 0; f < e.f_names.size(); ++f)
    nu.push_back(Json{{"fn", e.f_names[f]},
                      {"value", e.nu_f(static_cast<int>(f))},
                      {"se", e.nu_f_se(static_cast<int>(f))}});
  return Json{{"n_paths", e.n_paths},
              {"b0", vector_to_json(e.b0)},
              {"b0_se", vector_to_json(e.b0_se)},
              {"A0", matrix_to_json(e.A0)},
              {"A0_se", matrix_to_json(e.A0_se)},
              {"rate", e.rate},
              {"rate_se", e.rate_se},
              {"nu_integrals", std::move(nu)},
              {"h_config", e.h_config.fingerprint()}};
}

// Radial jump histogram as CSV: bin boundaries and estimated rate per bin.
inline void write_histogram_csv(std::ostream& os, const JumpHistogram& h) {
  os << "r_lo,r_hi,rate\n";
  const double width = h.r_max / h.bins;
  for (int b = 0; b < h.bins; ++b)
    os << b * width << "," << (b + 1) * width << ","
       << h.radial_rate[static_cast<std::size_t>(b)] << "\n";
}

inline Json to_json(const TwoSampleResult& r) {
  return Json{{"statistic", r.statistic}, {"p_value", r.p_value},
              {"n_x", r.n_x},             {"n_y", r.n_y},
              {"method", r.method},       {"seed", r.seed}};
}

inline Json to_json(const ExperimentReport& r) {
  Json tests = Json::array();
  for (const auto& t : r.tests) {
    Json e = to_json(t.test);
    e["name"] = t.name;
    tests.push_back(std::move(e));
  }
  Json out{{"tests", std::move(tests)},
           {"explosion_rate", r.explosion_rate},
           {"valid", r.valid},
           {"p_min", r.p_min},
           {"verdict", r.verdict ? "pass" : "fail"}};
  if (r.qv) {
    Json q;
    q["max_abs_dev"] = r.qv->max_abs_dev;
    q["tolerance"] = r.qv->tolerance;
    q["pass"] = r.qv->pass;
    Json est = Json::array();
    for (int i = 0; i < r.qv->estimate.rows(); ++i) {
      Json row = Json::array();
      for (int c = 0; c < r.qv->estimate.cols(); ++c)
        row.push_back(r.qv->estimate(i, c));
      est.push_back(std::move(row));
    }
    q["estimate"] = std::move(est);
    out["qv"] = std::move(q);
  }
  return out;
}

inline Json to_json(const InvarianceReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json g = Json::array();
    for (int i = 0; i < row.g.size(); ++i) g.push_back(row.g(i));
    Json measure = Json::array();
    for (const auto& m : row.measure)
      measure.push_back(Json{{"fn", m.fn},
                             {"diff", m.diff},
                             {"se", m.se},
                             {"pass", m.pass}});
    rows.push_back(Json{{"g", std::move(g)},
                        {"drift_residual", row.drift_residual},
                        {"drift_tolerance", row.drift_tolerance},
                        {"diffusion_residual", row.diffusion_residual},
                        {"diffusion_tolerance", row.diffusion_tolerance},
                        {"measure", std::move(measure)},
                        {"pass", row.pass}});
  }
  return Json{{"h_config", r.h_fingerprint},
              {"rows", std::move(rows)},
              {"verdict", r.verdict ? "pass" : "fail"}};
}

inline Json to_json(const ConsistencyReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back(Json{{"name", row.name},
                        {"estimate", row.estimate},
                        {"target", row.target},
                        {"se", row.se},
                        {"z", row.z},
                        {"pass", row.pass}});
  return Json{{"rows", std::move(rows)},
              {"verdict", r.verdict ? "pass" : "fail"}};
}

inline Json to_json(const DiscreteCheckReport& r) {
  return Json{{"name", r.name},
              {"density_residual", r.density_residual},
              {"density_invariant", r.density_invariant},
              {"sampler_p", r.sampler_p},
              {"sampler_invariant", r.sampler_invariant},
              {"expected_invariant", r.expected_invariant},
              {"modes_agree", r.modes_agree},
              {"verdict", r.verdict ? "pass" : "fail"}};
}

inline Json to_json(const MeanCheck& m) {
  return Json{{"mean", m.mean}, {"se", m.se}, {"target", m.target},
              {"pass", m.pass}};
}

inline Json to_json(const BesselReport& r) {
  Json tests = Json::array();
  for (const auto& t : r.tests) {
    Json e = to_json(t.test);
    e["name"] = t.name;
    tests.push_back(std::move(e));
  }
  Json out{{"tests", std::move(tests)},
           {"clip_rate", r.clip_rate},
           {"valid", r.valid},
           {"verdict", r.verdict ? "pass" : "fail"}};
  if (r.direct_mean) out["direct_mean"] = to_json(*r.direct_mean);
  if (r.reduced_mean) out["reduced_mean"] = to_json(*r.reduced_mean);
  return out;
}

inline Json to_json(const NonMarkovianReport& r) {
  return Json{{"statistical", to_json(r.statistical)},
              {"conditional",
               Json{{"worst_drift", r.conditional.worst_drift},
                    {"worst_diffusion", r.conditional.worst_diffusion},
                    {"n_aux", r.conditional.n_aux},
                    {"n_gauge", r.conditional.n_gauge},
                    {"verdict", r.conditional.verdict ? "pass" : "fail"}}},
              {"verdict", r.verdict ? "pass" : "fail"}};
}

}  // namespace liesim
