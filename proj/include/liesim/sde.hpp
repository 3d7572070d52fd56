#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "liesim/driver.hpp"
#include "liesim/group.hpp"
#include "liesim/path.hpp"

namespace liesim {

// Read-only prefix view of a driver path; node(i) is valid for i < size().
// Controls and gauge processes receive views that physically exclude the
// node being computed, which enforces predictability at the interface.
class DriverView {
 public:
  DriverView(const CadlagPath& path, std::size_t prefix)
      : path_(&path), prefix_(prefix) {}

  std::size_t size() const { return prefix_; }
  double time(std::size_t i) const { return path_->times[check(i)]; }
  const Matrix& node(std::size_t i) const { return path_->nodes[check(i)]; }
  Vector coords(std::size_t i) const {
    return path_->group->log(path_->nodes[check(i)]);
  }
  const LieGroup& group() const { return *path_->group; }

 private:
  std::size_t check(std::size_t i) const {
    if (i >= prefix_) throw GroupError("DriverView: access beyond the past");
    return i;
  }
  const CadlagPath* path_;
  std::size_t prefix_;
};

class StateView {
 public:
  StateView(const std::vector<Vector>& states, std::size_t prefix)
      : states_(&states), prefix_(prefix) {}
  std::size_t size() const { return prefix_; }
  const Vector& state(std::size_t i) const {
    if (i >= prefix_) throw GroupError("StateView: access beyond the past");
    return (*states_)[i];
  }

 private:
  const std::vector<Vector>* states_;
  std::size_t prefix_;
};

// Predictable locally bounded parameter process K_t: evaluated once per step
// on the strict past of driver and solution. Evaluation must be pure.
struct PredictableControl {
  std::function<Vector(std::size_t, const DriverView&, const StateView&)> eval;
  double bound = 1.0;

  static PredictableControl constant(Vector k) {
    PredictableControl c;
    c.bound = k.size() > 0 ? k.cwiseAbs().maxCoeff() : 0.0;
    c.eval = [k = std::move(k)](std::size_t, const DriverView&,
                                const StateView&) { return k; };
    return c;
  }
};

// A geometrical SDE: the jump map Psi_k(x, z) with Psi_k(x, 1_N) = x,
// together with optional analytic derivatives of z -> Psi_k(x, z) at the
// group identity along the right-invariant frame.
//
//   d1(k, x): m x n matrix, column a = d/dt Psi_k(x, exp(t xi_a)) at t=0.
//   d2(k, x): m matrices of size n x n,
//             d2[i](a,b) = d^2/(dt ds) Psi_k^i(x, exp(t xi_a) exp(s xi_b)).
struct GeometricalSDE {
  int state_dim = 0;
  int param_dim = 0;
  GroupPtr driver_group;
  std::function<Vector(const Vector&, const Vector&, const Matrix&)> psi;
  std::function<Matrix(const Vector&, const Vector&)> d1;                // optional
  std::function<std::vector<Matrix>(const Vector&, const Vector&)> d2;  // optional
  std::function<bool(const Vector&)> in_domain;                          // optional
};

// Central differences along algebra directions, Richardson-extrapolated once.
inline Matrix fd_d1(const GeometricalSDE& sde, const Vector& k,
                    const Vector& x, double step = 0.0) {
  const int n = sde.driver_group->algebra_dim();
  const double eps =
      step > 0.0 ? step : 1e-5 * std::max(1.0, x.cwiseAbs().maxCoeff());
  Matrix d(sde.state_dim, n);
  for (int a = 0; a < n; ++a) {
    Vector dir = Vector::Zero(n);
    auto central = [&](double e) -> Vector {
      dir(a) = e;
      const Vector plus = sde.psi(k, x, sde.driver_group->exp(dir));
      dir(a) = -e;
      const Vector minus = sde.psi(k, x, sde.driver_group->exp(dir));
      dir(a) = 0.0;
      return (plus - minus) / (2.0 * e);
    };
    const Vector d1v = central(eps);
    const Vector d2v = central(0.5 * eps);
    d.col(a) = (4.0 * d2v - d1v) / 3.0;
  }
  return d;
}

inline std::vector<Matrix> fd_d2(const GeometricalSDE& sde, const Vector& k,
                                 const Vector& x, double step = 0.0) {
  const int n = sde.driver_group->algebra_dim();
  const int m = sde.state_dim;
  const double eps =
      step > 0.0 ? step : 1e-4 * std::max(1.0, x.cwiseAbs().maxCoeff());
  const auto& g = *sde.driver_group;
  auto eval = [&](int a, int b, double ea, double eb) -> Vector {
    Vector va = Vector::Zero(n), vb = Vector::Zero(n);
    va(a) = ea;
    vb(b) = eb;
    return sde.psi(k, x, g.mul(g.exp(va), g.exp(vb)));
  };
  std::vector<Matrix> out(static_cast<std::size_t>(m), Matrix::Zero(n, n));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      auto mixed = [&](double e) -> Vector {
        return (eval(a, b, e, e) - eval(a, b, e, -e) - eval(a, b, -e, e) +
                eval(a, b, -e, -e)) /
               (4.0 * e * e);
      };
      const Vector c1 = mixed(eps);
      const Vector c2 = mixed(0.5 * eps);
      const Vector val = (4.0 * c2 - c1) / 3.0;
      for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)](a, b) = val(i);
    }
  }
  return out;
}

struct IntegrationResult {
  std::vector<double> times;
  std::vector<Vector> states;
  std::optional<std::size_t> explosion_index;

  const Vector& final_state() const { return states.back(); }
};

namespace detail {

inline bool state_ok(const GeometricalSDE& sde, const Vector& x) {
  if (!x.allFinite()) return false;
  if (sde.in_domain && !sde.in_domain(x)) return false;
  return true;
}

}  // namespace detail

// Primary scheme: one-step application of the jump map to every increment,
// continuous factor first and the jump factor exactly where Z jumps. The
// solution jumps satisfy X_t = Psi_{K_t}(X_{t-}, dZ_t) by construction.
inline IntegrationResult integrate_jump_map(const GeometricalSDE& sde,
                                            const PredictableControl& control,
                                            const CadlagPath& z,
                                            const Vector& x0) {
  IntegrationResult r;
  r.times = z.times;
  r.states.reserve(z.times.size());
  r.states.push_back(x0);
  const auto incs = increments(z);
  for (std::size_t i = 1; i < z.times.size(); ++i) {
    const StepIncrement& s = incs[i - 1];
    const Vector k =
        control.eval(i, DriverView(z, i), StateView(r.states, i));
    Vector x = sde.psi(k, r.states.back(), s.continuous);
    if (s.jump != nullptr && detail::state_ok(sde, x))
      x = sde.psi(k, x, s.jump_delta);
    if (!detail::state_ok(sde, x)) {
      r.explosion_index = i;
      r.times.resize(i);
      return r;
    }
    r.states.push_back(std::move(x));
  }
  return r;
}

// Source of the per-step continuous covariation d[Z]^c used by the Taylor
// scheme: the model rate A0 dt when the driver triplet is known (lower
// variance), otherwise the realized product of log-increments.
struct QvSource {
  std::optional<Matrix> model_rate;

  static QvSource model(Matrix a0) { return QvSource{std::move(a0)}; }
  static QvSource realized() { return QvSource{std::nullopt}; }
};

// Independent cross-validation scheme discretizing the defining integral
// equation term by term: Euler in the driving increment, an explicit
// second-order correction against d[Z]^c, and the exact jump map at jumps.
inline IntegrationResult integrate_taylor(const GeometricalSDE& sde,
                                          const PredictableControl& control,
                                          const CadlagPath& z, const Vector& x0,
                                          const QvSource& qv = QvSource::realized()) {
  IntegrationResult r;
  r.times = z.times;
  r.states.reserve(z.times.size());
  r.states.push_back(x0);
  const auto incs = increments(z);
  const int m = sde.state_dim;
  for (std::size_t i = 1; i < z.times.size(); ++i) {
    const StepIncrement& s = incs[i - 1];
    const Vector k =
        control.eval(i, DriverView(z, i), StateView(r.states, i));
    const Vector& xprev = r.states.back();
    const Vector v = sde.driver_group->log(s.continuous);
    const Matrix d1 = sde.d1 ? sde.d1(k, xprev) : fd_d1(sde, k, xprev);
    const std::vector<Matrix> d2 =
        sde.d2 ? sde.d2(k, xprev) : fd_d2(sde, k, xprev);
    const Matrix q = qv.model_rate ? Matrix(*qv.model_rate * (s.t1 - s.t0))
                                   : Matrix(v * v.transpose());
    Vector x = xprev + d1 * v;
    for (int c = 0; c < m; ++c)
      x(c) += 0.5 * (d2[static_cast<std::size_t>(c)].array() * q.array()).sum();
    if (s.jump != nullptr && detail::state_ok(sde, x))
      x = sde.psi(k, x, s.jump_delta);
    if (!detail::state_ok(sde, x)) {
      r.explosion_index = i;
      r.times.resize(i);
      return r;
    }
    r.states.push_back(std::move(x));
  }
  return r;
}

// Marcus-type SDE on R^m: Psi(x, z) integrates the flow
// da Phi = da R(a, z)^alpha V_alpha(Phi), Phi(0) = x, over a in [0, 1]
// with fixed-step classical RK4. The default curve is R(a, z) = a z.
using VectorField = std::function<Vector(const Vector&)>;

inline GeometricalSDE marcus_sde(
    std::vector<VectorField> fields, int state_dim, int substeps = 32,
    std::function<Vector(double, const Vector&)> curve_rate = nullptr) {
  const int n = static_cast<int>(fields.size());
  GeometricalSDE sde;
  sde.state_dim = state_dim;
  sde.param_dim = 0;
  sde.driver_group = LieGroup::additive(n);
  auto shared_fields = std::make_shared<std::vector<VectorField>>(std::move(fields));
  GroupPtr group = sde.driver_group;
  sde.psi = [shared_fields, group, substeps, curve_rate, n](
                const Vector&, const Vector& x, const Matrix& z) -> Vector {
    const Vector zc = group->log(z);
    auto rhs = [&](double a, const Vector& y) -> Vector {
      const Vector rate = curve_rate ? curve_rate(a, zc) : zc;
      Vector f = Vector::Zero(y.size());
      for (int al = 0; al < n; ++al)
        f += rate(al) * (*shared_fields)[static_cast<std::size_t>(al)](y);
      return f;
    };
    Vector y = x;
    const double da = 1.0 / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double a = s * da;
      const Vector k1 = rhs(a, y);
      const Vector k2 = rhs(a + 0.5 * da, y + 0.5 * da * k1);
      const Vector k3 = rhs(a + 0.5 * da, y + 0.5 * da * k2);
      const Vector k4 = rhs(a + da, y + da * k3);
      y += (da / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
  };
  if (!curve_rate) {
    // d/dt Psi(x, t e_a) at t=0 is V_a(x) for the linear curve.
    sde.d1 = [shared_fields, n, state_dim](const Vector&,
                                           const Vector& x) -> Matrix {
      Matrix d(state_dim, n);
      for (int a = 0; a < n; ++a)
        d.col(a) = (*shared_fields)[static_cast<std::size_t>(a)](x);
      return d;
    };
  }
  // Constructor-time probe: the flow from the origin with zero input must
  // return its argument.
  const Vector probe = Vector::Zero(state_dim);
  const Vector back = sde.psi(Vector(), probe, group->identity());
  if (!back.allFinite() || (back - probe).cwiseAbs().maxCoeff() > 1e-10)
    throw GroupError("marcus_sde: flow probe failed");
  return sde;
}

// Smooth SDE driven by a Levy process with components ordered as
// (t, W^2..W^{n1}, jump block): Psi(x, z) = x + mu~(x) z^1 +
// sigma_a(x) z^a + F(x, z_J), with the compensator correction
//   mu~(x) = mu(x) - int_{|z|<=1} (F(x,z) - dF/dz(x,z) z) nu0(dz)
// evaluated by Monte Carlo over the jump sampler (draws fixed at build time).
inline GeometricalSDE smooth_levy_sde(
    VectorField mu, std::vector<VectorField> sigmas,
    std::function<Vector(const Vector&, const Vector&)> jump_map,
    const FiniteActivityJumps& nu0, int state_dim, int jump_dim,
    int quad_draws = 4096, std::uint64_t seed = 0) {
  const int n1 = 1 + static_cast<int>(sigmas.size());
  const int n = n1 + jump_dim;
  auto jump_group = LieGroup::additive(jump_dim);
  // Quadrature sample restricted to |z| <= 1.
  auto quad = std::make_shared<std::vector<Vector>>();
  RngStream rng(seed, 0, Role::quadrature);
  for (int i = 0; i < quad_draws; ++i) {
    const Vector z = jump_group->log(nu0.sampler(rng));
    if (z.norm() <= 1.0) quad->push_back(z);
  }
  const double rate = nu0.rate;
  const int draws = quad_draws;

  auto mu_shared = std::make_shared<VectorField>(std::move(mu));
  auto sig_shared = std::make_shared<std::vector<VectorField>>(std::move(sigmas));
  auto f_shared = std::make_shared<
      std::function<Vector(const Vector&, const Vector&)>>(std::move(jump_map));

  auto mutilde = [mu_shared, f_shared, quad, rate, draws, jump_dim,
                  state_dim](const Vector& x) -> Vector {
    Vector corr = Vector::Zero(state_dim);
    for (const Vector& z : *quad) {
      Vector fz = (*f_shared)(x, z);
      // dF/dz . z by central differences along z.
      Vector grad_dot_z = Vector::Zero(state_dim);
      const double e = 1e-6 * std::max(1.0, z.norm());
      for (int j = 0; j < jump_dim; ++j) {
        Vector zp = z, zm = z;
        zp(j) += e;
        zm(j) -= e;
        grad_dot_z += ((*f_shared)(x, zp) - (*f_shared)(x, zm)) / (2.0 * e) * z(j);
      }
      corr += fz - grad_dot_z;
    }
    corr *= rate / static_cast<double>(draws);
    return (*mu_shared)(x)-corr;
  };

  GeometricalSDE sde;
  sde.state_dim = state_dim;
  sde.param_dim = 0;
  sde.driver_group = LieGroup::additive(n);
  GroupPtr group = sde.driver_group;
  sde.psi = [mutilde, sig_shared, f_shared, group, n1, jump_dim](
                const Vector&, const Vector& x, const Matrix& z) -> Vector {
    const Vector c = group->log(z);
    Vector out = x + mutilde(x) * c(0);
    for (int a = 1; a < n1; ++a)
      out += (*sig_shared)[static_cast<std::size_t>(a - 1)](x)*c(a);
    out += (*f_shared)(x, c.tail(jump_dim));
    return out;
  };
  return sde;
}

}  // namespace liesim
