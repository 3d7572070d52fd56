#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "liesim/group.hpp"
#include "liesim/path.hpp"
#include "liesim/rng.hpp"

namespace liesim {

using JumpSampler = std::function<Matrix(RngStream&)>;

// Finite-activity jump measure nu_0 = rate * law(sampler). The optional
// density is the law of the jump in algebra coordinates (used by density
// style checks only; the sampler is authoritative). `symmetric` marks
// measures invariant under v -> -v in algebra coordinates; for those the
// truncation integral int h dnu vanishes exactly and is not estimated.
struct FiniteActivityJumps {
  double rate = 0.0;
  JumpSampler sampler;
  std::function<double(const Vector&)> density;
  std::string name;
  bool symmetric = false;
};

// Isotropic alpha-stable measure scale * |z|^{-d-alpha} dz truncated to
// |z| >= eps. Jumps below eps are dropped; for an isotropic measure their
// compensator contribution to the drift vanishes by symmetry, so nothing is
// folded into b0. The truncation is a documented approximation and eps is a
// reported configuration value.
inline FiniteActivityJumps truncated_stable_jumps(const GroupPtr& group,
                                                  double alpha, double scale,
                                                  double eps) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw GroupError("truncated_stable: alpha must lie in (0,2)");
  if (!(eps > 0.0)) throw GroupError("truncated_stable: eps must be positive");
  const int d = group->algebra_dim();
  const double surface =
      2.0 * std::pow(3.141592653589793, 0.5 * d) / std::tgamma(0.5 * d);
  FiniteActivityJumps j;
  j.rate = scale * surface * std::pow(eps, -alpha) / alpha;
  j.name = "stable:alpha=" + std::to_string(alpha) +
           ":eps=" + std::to_string(eps);
  j.symmetric = true;
  j.sampler = [group, d, alpha, eps](RngStream& rng) {
    const double r = eps * std::pow(rng.uniform_open(), -1.0 / alpha);
    Vector u(d);
    for (int i = 0; i < d; ++i) u(i) = rng.normal();
    u *= r / u.norm();
    return group->exp(u);
  };
  return j;
}

inline FiniteActivityJumps gaussian_jumps(const GroupPtr& group, double rate,
                                          const Vector& mean,
                                          const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw GroupError("gaussian_jumps: covariance not positive definite");
  const Matrix chol = llt.matrixL();
  const int d = group->algebra_dim();
  FiniteActivityJumps j;
  j.rate = rate;
  j.name = "gaussian";
  j.symmetric = mean.cwiseAbs().maxCoeff() == 0.0;
  j.sampler = [group, d, mean, chol](RngStream& rng) {
    Vector z(d);
    for (int i = 0; i < d; ++i) z(i) = rng.normal();
    return group->exp(mean + chol * z);
  };
  return j;
}

// Jumps exp(v) with v Gaussian in algebra coordinates; usable on any group.
inline FiniteActivityJumps algebra_gaussian_jumps(const GroupPtr& group,
                                                  double rate, double sigma) {
  const int d = group->algebra_dim();
  FiniteActivityJumps j;
  j.rate = rate;
  j.name = "algebra-gaussian";
  j.symmetric = true;
  j.sampler = [group, d, sigma](RngStream& rng) {
    Vector z(d);
    for (int i = 0; i < d; ++i) z(i) = sigma * rng.normal();
    return group->exp(z);
  };
  return j;
}

struct LevyTriplet {
  Vector b0;                                 // drift rate
  Matrix A0;                                 // covariation rate, symmetric PSD
  std::optional<FiniteActivityJumps> jumps;  // nu_0

  void validate() const {
    if (A0.rows() != A0.cols() || A0.rows() != b0.size())
      throw GroupError("LevyTriplet: dimension mismatch");
    if ((A0 - A0.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw GroupError("LevyTriplet: A0 not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(A0);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw GroupError("LevyTriplet: A0 not positive semidefinite");
    if (jumps && jumps->rate < 0.0)
      throw GroupError("LevyTriplet: negative jump rate");
  }
};

// Symmetric PSD square root; eigenvalues in [-1e-12, 0) are clamped to zero.
inline Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw GroupError("psd_sqrt: matrix not positive semidefinite");
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// History-aware sampler for discrete-time drivers: receives the step index
// and the previous samples Z_0..Z_{n-1}.
using DiscreteSampler = std::function<Matrix(
    std::size_t, const std::vector<Matrix>&, RngStream&)>;

struct LevyDriver {
  LevyTriplet triplet;
};

struct DiscreteDriver {
  std::size_t n_steps = 0;
  DiscreteSampler sampler;
};

// Three-component Brownian construction: the path carries
// (Wtilde^1, Wtilde^2, W^0) where Wtilde^a_t = int G(W^0 up to s-) dW^a_s.
// `anisotropy` scales the integrand of the second component (1 = symmetric).
struct CompositeWDriver {
  std::function<double(std::span<const double>)> integrand;
  double anisotropy = 1.0;
};

struct DriverSpec {
  GroupPtr group;
  std::variant<LevyDriver, DiscreteDriver, CompositeWDriver> model;
  std::string name;

  static DriverSpec brownian(int n) {
    DriverSpec s;
    s.group = LieGroup::additive(n);
    LevyTriplet t;
    t.b0 = Vector::Zero(n);
    t.A0 = Matrix::Identity(n, n);
    s.model = LevyDriver{std::move(t)};
    s.name = "brownian:" + std::to_string(n);
    return s;
  }

  static DriverSpec levy(GroupPtr group, LevyTriplet triplet,
                         std::string name = "levy") {
    triplet.validate();
    DriverSpec s;
    s.group = std::move(group);
    s.model = LevyDriver{std::move(triplet)};
    s.name = std::move(name);
    return s;
  }

  static DriverSpec compound_poisson(GroupPtr group, FiniteActivityJumps j) {
    const int n = group->algebra_dim();
    LevyTriplet t;
    t.b0 = Vector::Zero(n);
    t.A0 = Matrix::Zero(n, n);
    t.jumps = std::move(j);
    DriverSpec s;
    s.group = std::move(group);
    s.model = LevyDriver{std::move(t)};
    s.name = "compound-poisson";
    return s;
  }

  static DriverSpec discrete(GroupPtr group, std::size_t n_steps,
                             DiscreteSampler sampler,
                             std::string name = "discrete") {
    DriverSpec s;
    s.group = std::move(group);
    s.model = DiscreteDriver{n_steps, std::move(sampler)};
    s.name = std::move(name);
    return s;
  }

  static DriverSpec composite_w(
      std::function<double(std::span<const double>)> integrand,
      double anisotropy = 1.0) {
    DriverSpec s;
    s.group = LieGroup::additive(3);
    s.model = CompositeWDriver{std::move(integrand), anisotropy};
    s.name = "composite-w";
    return s;
  }
};

namespace detail {

// Uniform grid of step h over [0, T] with the jump times merged in.
inline std::vector<double> jump_adapted_grid(double T, double h,
                                             std::vector<double> jump_times) {
  const auto m = static_cast<std::size_t>(std::llround(T / h));
  if (m == 0 || std::abs(static_cast<double>(m) * h - T) > 1e-9 * std::max(T, 1.0))
    throw GroupError("grid: h must divide T");
  std::vector<double> grid;
  grid.reserve(m + 1 + jump_times.size());
  for (std::size_t i = 0; i <= m; ++i)
    grid.push_back(static_cast<double>(i) * h);
  std::sort(jump_times.begin(), jump_times.end());
  for (double t : jump_times) {
    if (t <= 0.0 || t >= T) continue;
    grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (out.empty() || t - out.back() > 1e-12) out.push_back(t);
  }
  out.back() = T;
  return out;
}

inline CadlagPath simulate_levy(const GroupPtr& group, const LevyDriver& d,
                                double T, double h, RngStream& rng) {
  const int n = group->algebra_dim();
  const Matrix c = psd_sqrt(d.triplet.A0);
  const bool diffuse = c.cwiseAbs().maxCoeff() > 0.0;

  std::vector<double> jump_times;
  std::vector<Matrix> jump_deltas;
  if (d.triplet.jumps && d.triplet.jumps->rate > 0.0) {
    const std::uint64_t count = rng.poisson(d.triplet.jumps->rate * T);
    jump_times.resize(count);
    for (auto& t : jump_times) t = rng.uniform(0.0, T);
    std::sort(jump_times.begin(), jump_times.end());
    jump_deltas.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
      jump_deltas.push_back(d.triplet.jumps->sampler(rng));
  }

  CadlagPath p;
  p.group = group;
  p.times = jump_adapted_grid(T, h, jump_times);
  p.nodes.reserve(p.times.size());
  p.nodes.push_back(group->identity());

  std::size_t next_jump = 0;
  for (std::size_t i = 1; i < p.times.size(); ++i) {
    const double dt = p.times[i] - p.times[i - 1];
    Vector v = d.triplet.b0 * dt;
    if (diffuse) {
      Vector z(n);
      for (int a = 0; a < n; ++a) z(a) = rng.normal();
      v += std::sqrt(dt) * (c * z);
    }
    Matrix node = group->mul(group->exp(v), p.nodes[i - 1]);
    while (next_jump < jump_times.size() &&
           std::abs(jump_times[next_jump] - p.times[i]) <= 1e-12) {
      p.jumps.push_back({i, node});
      node = group->mul(jump_deltas[next_jump], node);
      ++next_jump;
    }
    p.nodes.push_back(std::move(node));
  }
  return p;
}

inline CadlagPath simulate_discrete(const GroupPtr& group,
                                    const DiscreteDriver& d, RngStream& rng) {
  std::vector<Matrix> samples;
  samples.reserve(d.n_steps + 1);
  samples.push_back(group->identity());
  std::vector<Matrix> history;
  for (std::size_t i = 1; i <= d.n_steps; ++i) {
    const Matrix delta = d.sampler(i, history, rng);
    samples.push_back(group->mul(delta, samples.back()));
    history.push_back(samples.back());
  }
  return discrete_to_cadlag(group, samples);
}

inline CadlagPath simulate_composite_w(const GroupPtr& group,
                                       const CompositeWDriver& d, double T,
                                       double h, RngStream& rng) {
  const auto grid = jump_adapted_grid(T, h, {});
  const std::size_t m = grid.size() - 1;
  std::vector<double> w0(m + 1, 0.0);
  CadlagPath p;
  p.group = group;
  p.times = grid;
  p.nodes.reserve(m + 1);
  Vector x = Vector::Zero(3);
  p.nodes.push_back(group->exp(x));
  for (std::size_t i = 1; i <= m; ++i) {
    const double sdt = std::sqrt(grid[i] - grid[i - 1]);
    const double dw1 = sdt * rng.normal();
    const double dw2 = sdt * rng.normal();
    const double dw0 = sdt * rng.normal();
    // Integrand evaluated on the strict past of W^0 (nodes 0..i-1).
    const double g = d.integrand(std::span<const double>(w0.data(), i));
    x(0) += g * dw1;
    x(1) += d.anisotropy * g * dw2;
    w0[i] = w0[i - 1] + dw0;
    x(2) = w0[i];
    p.nodes.push_back(group->exp(x));
  }
  return p;
}

}  // namespace detail

inline CadlagPath simulate_driver(const DriverSpec& spec, double T, double h,
                                  RngStream& rng) {
  if (!(T > 0.0) || !(h > 0.0) || h > T)
    throw GroupError("simulate_driver: need 0 < h <= T");
  if (std::holds_alternative<LevyDriver>(spec.model))
    return detail::simulate_levy(spec.group, std::get<LevyDriver>(spec.model),
                                 T, h, rng);
  if (std::holds_alternative<DiscreteDriver>(spec.model))
    return detail::simulate_discrete(
        spec.group, std::get<DiscreteDriver>(spec.model), rng);
  return detail::simulate_composite_w(
      spec.group, std::get<CompositeWDriver>(spec.model), T, h, rng);
}

inline CadlagPath simulate_driver(const DriverSpec& spec, double T, double h,
                                  std::uint64_t seed, std::uint64_t replica) {
  RngStream rng(seed, replica, Role::driver);
  return simulate_driver(spec, T, h, rng);
}

// Realized covariation of the continuous part in algebra coordinates:
// sum over steps of delta^c (delta^c)^T, jumps excluded via the records.
inline Matrix brownian_qv(const CadlagPath& p) {
  const int n = p.group->algebra_dim();
  Matrix q = Matrix::Zero(n, n);
  for (std::size_t i = 1; i < p.times.size(); ++i) {
    const Matrix& left = p.left_limit(i);
    const Vector v =
        p.group->log(p.group->mul(left, p.group->inv(p.nodes[i - 1])));
    q.noalias() += v * v.transpose();
  }
  return q;
}

}  // namespace liesim
