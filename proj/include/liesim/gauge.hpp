#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "liesim/group.hpp"
#include "liesim/path.hpp"
#include "liesim/rng.hpp"
#include "liesim/sde.hpp"

namespace liesim {

// Gauge group element representation: a flat parameter vector together with
// the group operations on parameters and a sampler over a compact subset.
struct GaugeGroup {
  int dim = 0;
  std::string name;
  Vector identity;
  std::function<Vector(const Vector&, const Vector&)> compose;
  std::function<Vector(const Vector&)> inverse;
  std::function<Vector(RngStream&)> sample;
};

// Action Xi_g of a gauge group on the driver group N, smooth with
// Xi_g(1_N) = 1_N. Analytic Gamma/O are optional; finite differences are
// used otherwise.
struct GaugeAction {
  GroupPtr base;
  GaugeGroup group;
  std::function<Matrix(const Vector&, const Matrix&)> apply;
  bool is_automorphism = false;
  std::function<Matrix(const Vector&)> analytic_gamma;
  std::function<std::vector<Matrix>(const Vector&)> analytic_big_o;
  std::string name;
};

namespace detail {

inline Matrix haar_orthogonal(int r, RngStream& rng, bool allow_reflection) {
  Matrix a(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  const Matrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < r; ++i)
    if (rmat(i, i) < 0.0) q.col(i) = -q.col(i);
  const bool want_reflection = allow_reflection && rng.uniform() < 0.5;
  if ((q.determinant() < 0.0) != want_reflection) q.col(0) = -q.col(0);
  return q;
}

inline Matrix unflatten(const Vector& g, int r) {
  return Eigen::Map<const Matrix>(g.data(), r, r);
}

inline Vector flatten(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace detail

// Rotations acting on a coordinate subset of an additive group:
// Xi_B(z)_I = B z_I, identity elsewhere. With all coordinates selected this
// is the natural action of SO(n) (or O(n)) on R^n.
inline GaugeAction rotation_action(const GroupPtr& base,
                                   std::vector<int> coords = {},
                                   bool allow_reflection = false) {
  if (base->kind() != LieGroup::Kind::additive)
    throw GroupError("rotation_action: base must be an additive group");
  const int n = base->algebra_dim();
  if (coords.empty())
    for (int i = 0; i < n; ++i) coords.push_back(i);
  const int r = static_cast<int>(coords.size());

  GaugeAction act;
  act.base = base;
  act.name = allow_reflection ? "orthogonal" : "rotation";
  act.is_automorphism = true;
  act.group.dim = r * r;
  act.group.name = act.name + ":" + std::to_string(r);
  act.group.identity = detail::flatten(Matrix::Identity(r, r));
  act.group.compose = [r](const Vector& a, const Vector& b) {
    return detail::flatten(detail::unflatten(a, r) * detail::unflatten(b, r));
  };
  act.group.inverse = [r](const Vector& a) {
    return detail::flatten(detail::unflatten(a, r).transpose().eval());
  };
  act.group.sample = [r, allow_reflection](RngStream& rng) {
    return detail::flatten(detail::haar_orthogonal(r, rng, allow_reflection));
  };
  auto idx = std::make_shared<std::vector<int>>(std::move(coords));
  act.apply = [base, idx, r](const Vector& g, const Matrix& z) {
    Vector v = base->log(z);
    Vector sub(r);
    for (int i = 0; i < r; ++i) sub(i) = v((*idx)[static_cast<std::size_t>(i)]);
    sub = detail::unflatten(g, r) * sub;
    for (int i = 0; i < r; ++i) v((*idx)[static_cast<std::size_t>(i)]) = sub(i);
    return base->exp(v);
  };
  act.analytic_gamma = [n, idx, r](const Vector& g) {
    Matrix gamma = Matrix::Identity(n, n);
    const Matrix b = detail::unflatten(g, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        gamma((*idx)[static_cast<std::size_t>(i)],
              (*idx)[static_cast<std::size_t>(j)]) = b(i, j);
    return gamma;
  };
  act.analytic_big_o = [n](const Vector&) {
    return std::vector<Matrix>(static_cast<std::size_t>(n), Matrix::Zero(n, n));
  };
  return act;
}

// Xi_s(z) = exp(s log z): on additive groups the familiar dilation s z, and
// a one-parameter scaling of canonical coordinates on any other group.
inline GaugeAction scaling_action(const GroupPtr& base) {
  GaugeAction act;
  act.base = base;
  act.name = "scaling";
  act.is_automorphism = (base->kind() == LieGroup::Kind::additive);
  act.group.dim = 1;
  act.group.name = "scaling";
  act.group.identity = Vector::Ones(1);
  act.group.compose = [](const Vector& a, const Vector& b) {
    return Vector::Constant(1, a(0) * b(0)).eval();
  };
  act.group.inverse = [](const Vector& a) {
    return Vector::Constant(1, 1.0 / a(0)).eval();
  };
  act.group.sample = [](RngStream& rng) {
    return Vector::Constant(1, std::exp(rng.uniform(-0.69314718055994531,
                                                    0.69314718055994531)))
        .eval();
  };
  act.apply = [base](const Vector& g, const Matrix& z) {
    return base->exp(g(0) * base->log(z));
  };
  const int n = base->algebra_dim();
  act.analytic_gamma = [n](const Vector& g) {
    return (g(0) * Matrix::Identity(n, n)).eval();
  };
  if (base->abelian()) {
    act.analytic_big_o = [n](const Vector&) {
      return std::vector<Matrix>(static_cast<std::size_t>(n),
                                 Matrix::Zero(n, n));
    };
  }
  return act;
}

// Quadratic shear on R^2: Xi_g(z) = (z1, z2 + g z1^2), an action of (R, +)
// with Gamma = I and the only nonzero second-order term O^2_{11} = 2g.
inline GaugeAction qshear_action(const GroupPtr& base) {
  if (base->kind() != LieGroup::Kind::additive || base->algebra_dim() != 2)
    throw GroupError("qshear_action: base must be additive:2");
  GaugeAction act;
  act.base = base;
  act.name = "qshear";
  act.is_automorphism = false;
  act.group.dim = 1;
  act.group.name = "qshear";
  act.group.identity = Vector::Zero(1);
  act.group.compose = [](const Vector& a, const Vector& b) {
    return (a + b).eval();
  };
  act.group.inverse = [](const Vector& a) { return (-a).eval(); };
  act.group.sample = [](RngStream& rng) {
    return Vector::Constant(1, rng.uniform(-1.0, 1.0)).eval();
  };
  act.apply = [base](const Vector& g, const Matrix& z) {
    Vector v = base->log(z);
    v(1) += g(0) * v(0) * v(0);
    return base->exp(v);
  };
  act.analytic_gamma = [](const Vector&) {
    return Matrix::Identity(2, 2).eval();
  };
  act.analytic_big_o = [](const Vector& g) {
    std::vector<Matrix> o(2, Matrix::Zero(2, 2));
    o[1](0, 0) = 2.0 * g(0);
    return o;
  };
  return act;
}

// Xi_g = (Xi^1_g, id_{N_2}) on a product group N_1 x N_2.
inline GaugeAction first_factor_action(const GaugeAction& inner,
                                       const GroupPtr& product) {
  if (product->kind() != LieGroup::Kind::product)
    throw GroupError("first_factor_action: base must be a product group");
  const auto& f1 = product->factor1();
  const auto& f2 = product->factor2();
  if (inner.base->name() != f1.name())
    throw GroupError("first_factor_action: inner action acts on the wrong group");
  const int k1 = f1.matrix_size();
  const int k2 = f2.matrix_size();
  const int n1 = f1.algebra_dim();
  const int n2 = f2.algebra_dim();
  GaugeAction act;
  act.base = product;
  act.name = "first-factor:" + inner.name;
  act.group = inner.group;
  act.is_automorphism = inner.is_automorphism;
  auto inner_apply = inner.apply;
  act.apply = [inner_apply, k1, k2](const Vector& g, const Matrix& z) {
    Matrix out = Matrix::Zero(k1 + k2, k1 + k2);
    out.topLeftCorner(k1, k1) = inner_apply(g, z.topLeftCorner(k1, k1));
    out.bottomRightCorner(k2, k2) = z.bottomRightCorner(k2, k2);
    return out;
  };
  if (inner.analytic_gamma) {
    auto ig = inner.analytic_gamma;
    act.analytic_gamma = [ig, n1, n2](const Vector& g) {
      Matrix gamma = Matrix::Identity(n1 + n2, n1 + n2);
      gamma.topLeftCorner(n1, n1) = ig(g);
      return gamma;
    };
  }
  if (inner.analytic_big_o) {
    auto io = inner.analytic_big_o;
    act.analytic_big_o = [io, n1, n2](const Vector& g) {
      std::vector<Matrix> out(static_cast<std::size_t>(n1 + n2),
                              Matrix::Zero(n1 + n2, n1 + n2));
      const auto inner_o = io(g);
      for (int a = 0; a < n1; ++a)
        out[static_cast<std::size_t>(a)].topLeftCorner(n1, n1) =
            inner_o[static_cast<std::size_t>(a)];
      return out;
    };
  }
  return act;
}

// First-order linearization Gamma_g of the action at the group identity
// along the right-invariant frame; columns are Gamma_g(xi_a) in algebra
// coordinates. Central differences with one Richardson step when no
// analytic form is available.
inline Matrix gamma(const GaugeAction& act, const Vector& g,
                    double step = 1e-5) {
  if (act.analytic_gamma) return act.analytic_gamma(g);
  const auto& base = *act.base;
  const int n = base.algebra_dim();
  Matrix out(n, n);
  for (int a = 0; a < n; ++a) {
    Vector dir = Vector::Zero(n);
    auto central = [&](double e) -> Vector {
      dir(a) = e;
      const Vector plus = base.log(act.apply(g, base.exp(dir)));
      dir(a) = -e;
      const Vector minus = base.log(act.apply(g, base.exp(dir)));
      dir(a) = 0.0;
      return (plus - minus) / (2.0 * e);
    };
    const Vector c1 = central(step);
    const Vector c2 = central(0.5 * step);
    out.col(a) = (4.0 * c2 - c1) / 3.0;
  }
  return out;
}

// Second-order linearization: big_o(act, g)[a](b, c) is the a-coordinate of
// d^2/(ds dt) log Xi_g(exp(s xi_b) exp(t xi_c)) at s = t = 0. Contractions
// against a symmetric A are insensitive to the (b, c) order; use
// symmetrize_big_o when a symmetric tensor is wanted explicitly.
inline std::vector<Matrix> big_o(const GaugeAction& act, const Vector& g,
                                 double step = 1e-4) {
  if (act.analytic_big_o) return act.analytic_big_o(g);
  const auto& base = *act.base;
  const int n = base.algebra_dim();
  std::vector<Matrix> out(static_cast<std::size_t>(n), Matrix::Zero(n, n));
  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < n; ++c) {
      auto eval = [&](double s, double t) -> Vector {
        Vector vb = Vector::Zero(n), vc = Vector::Zero(n);
        vb(b) = s;
        vc(c) = t;
        return base.log(
            act.apply(g, base.mul(base.exp(vb), base.exp(vc))));
      };
      auto mixed = [&](double e) -> Vector {
        return (eval(e, e) - eval(e, -e) - eval(-e, e) + eval(-e, -e)) /
               (4.0 * e * e);
      };
      const Vector c1 = mixed(step);
      const Vector c2 = mixed(0.5 * step);
      const Vector val = (4.0 * c2 - c1) / 3.0;
      for (int a = 0; a < n; ++a) out[static_cast<std::size_t>(a)](b, c) = val(a);
    }
  }
  return out;
}

inline std::vector<Matrix> symmetrize_big_o(std::vector<Matrix> o) {
  for (auto& m : o) m = 0.5 * (m + m.transpose().eval());
  return o;
}

inline Vector contract_big_o(const std::vector<Matrix>& o, const Matrix& a) {
  Vector v(static_cast<int>(o.size()));
  for (std::size_t i = 0; i < o.size(); ++i)
    v(static_cast<int>(i)) = (o[i].array() * a.array()).sum();
  return v;
}

// Predictable gauge-valued process G_t. Strict-past dependence is enforced
// by the view interface; the two reconstructible functional classes (of the
// transformed path's past, of the source path's past) plus constants and
// externally recorded values are supported.
struct GaugeProcess {
  enum class Kind { constant, of_transformed, of_source, recorded };

  Kind kind = Kind::constant;
  Vector constant_value;
  std::function<Vector(std::size_t, const DriverView&)> functional;
  std::vector<Vector> recorded_values;

  static GaugeProcess constant(Vector g) {
    GaugeProcess p;
    p.kind = Kind::constant;
    p.constant_value = std::move(g);
    return p;
  }
  static GaugeProcess of_transformed(
      std::function<Vector(std::size_t, const DriverView&)> f) {
    GaugeProcess p;
    p.kind = Kind::of_transformed;
    p.functional = std::move(f);
    return p;
  }
  static GaugeProcess of_source(
      std::function<Vector(std::size_t, const DriverView&)> f) {
    GaugeProcess p;
    p.kind = Kind::of_source;
    p.functional = std::move(f);
    return p;
  }
  static GaugeProcess recorded(std::vector<Vector> values) {
    GaugeProcess p;
    p.kind = Kind::recorded;
    p.recorded_values = std::move(values);
    return p;
  }
};

// Random transformation dZ~ = Xi_{G_t}(dZ): per step the continuous factor
// and the jump factor are mapped separately, so jump times of Z~ equal those
// of Z and dZ~_t = Xi_{G_t}(dZ_t) exactly. G is evaluated at the left grid
// node for the whole step. Returns a truncated path if the transform leaves
// the group or becomes non-finite.
inline CadlagPath random_transform(const GaugeAction& act,
                                   const GaugeProcess& G, const CadlagPath& z,
                                   std::vector<Vector>* record = nullptr) {
  CadlagPath out;
  out.group = z.group;
  out.times = z.times;
  out.nodes.reserve(z.nodes.size());
  out.nodes.push_back(z.group->identity());
  if (record) record->clear();
  const auto incs = increments(z);
  for (std::size_t i = 1; i < z.times.size(); ++i) {
    Vector g;
    switch (G.kind) {
      case GaugeProcess::Kind::constant:
        g = G.constant_value;
        break;
      case GaugeProcess::Kind::of_transformed:
        g = G.functional(i, DriverView(out, i));
        break;
      case GaugeProcess::Kind::of_source:
        g = G.functional(i, DriverView(z, i));
        break;
      case GaugeProcess::Kind::recorded:
        g = G.recorded_values.at(i - 1);
        break;
    }
    if (record) record->push_back(g);
    const StepIncrement& s = incs[i - 1];
    Matrix node = z.group->mul(act.apply(g, s.continuous), out.nodes.back());
    if (s.jump != nullptr) {
      Matrix left = node;
      node = z.group->mul(act.apply(g, s.jump_delta), left);
      out.jumps.push_back({i, std::move(left)});
    }
    if (!node.allFinite()) {
      out.times.resize(i);
      if (!out.jumps.empty() && out.jumps.back().index >= i) out.jumps.pop_back();
      return out;
    }
    out.nodes.push_back(std::move(node));
  }
  return out;
}

// Inverse transformation dZ = Xi_{G_t^{-1}}(dZ~): G must be reconstructible
// from the transformed path's own past, from the reconstructed source past,
// from recorded values, or constant. Anything else cannot be inverted.
inline CadlagPath invert_transform(const GaugeAction& act,
                                   const GaugeProcess& G,
                                   const CadlagPath& zt) {
  CadlagPath out;
  out.group = zt.group;
  out.times = zt.times;
  out.nodes.reserve(zt.nodes.size());
  out.nodes.push_back(zt.group->identity());
  const auto incs = increments(zt);
  for (std::size_t i = 1; i < zt.times.size(); ++i) {
    Vector g;
    switch (G.kind) {
      case GaugeProcess::Kind::constant:
        g = G.constant_value;
        break;
      case GaugeProcess::Kind::of_transformed:
        g = G.functional(i, DriverView(zt, i));
        break;
      case GaugeProcess::Kind::of_source:
        g = G.functional(i, DriverView(out, i));
        break;
      case GaugeProcess::Kind::recorded:
        if (i - 1 >= G.recorded_values.size())
          throw GroupError("invert_transform: recorded history too short");
        g = G.recorded_values[i - 1];
        break;
    }
    const Vector ginv = act.group.inverse(g);
    const StepIncrement& s = incs[i - 1];
    Matrix node = zt.group->mul(act.apply(ginv, s.continuous), out.nodes.back());
    if (s.jump != nullptr) {
      Matrix left = node;
      node = zt.group->mul(act.apply(ginv, s.jump_delta), left);
      out.jumps.push_back({i, std::move(left)});
    }
    if (!node.allFinite()) {
      out.times.resize(i);
      if (!out.jumps.empty() && out.jumps.back().index >= i) out.jumps.pop_back();
      return out;
    }
    out.nodes.push_back(std::move(node));
  }
  return out;
}

// Composition of Theorem form: solutions of Psi_{K} driven by Xi_{K'}(dZ)
// solve Psi-hat_{(K,K')}(x, z) = Psi_K(x, Xi_{K'}(z)) driven by Z. Parameters
// concatenate as [k; g].
inline GeometricalSDE compose_sde(const GeometricalSDE& sde,
                                  const GaugeAction& act) {
  if (sde.driver_group->name() != act.base->name())
    throw GroupError("compose_sde: group mismatch");
  GeometricalSDE out;
  out.state_dim = sde.state_dim;
  out.param_dim = sde.param_dim + act.group.dim;
  out.driver_group = sde.driver_group;
  out.in_domain = sde.in_domain;
  const int kdim = sde.param_dim;
  const int gdim = act.group.dim;
  auto psi = sde.psi;
  auto apply = act.apply;
  out.psi = [psi, apply, kdim, gdim](const Vector& kg, const Vector& x,
                                     const Matrix& z) {
    return psi(kg.head(kdim), x, apply(kg.tail(gdim), z));
  };
  return out;
}

// Pairs a control K with a gauge process G into the concatenated control for
// a composed SDE.
inline PredictableControl pair_control(const PredictableControl& k,
                                       const GaugeProcess& G,
                                       const CadlagPath& transformed_for_G) {
  PredictableControl c;
  c.bound = k.bound;
  auto keval = k.eval;
  // The gauge process may be a functional of the transformed path's past;
  // the caller supplies that path (as produced by random_transform).
  const CadlagPath* zt = &transformed_for_G;
  c.eval = [keval, G, zt](std::size_t i, const DriverView& dz,
                          const StateView& xs) {
    const Vector kv = keval(i, dz, xs);
    Vector g;
    switch (G.kind) {
      case GaugeProcess::Kind::constant:
        g = G.constant_value;
        break;
      case GaugeProcess::Kind::of_transformed:
        g = G.functional(i, DriverView(*zt, i));
        break;
      case GaugeProcess::Kind::of_source:
        g = G.functional(i, dz);
        break;
      case GaugeProcess::Kind::recorded:
        g = G.recorded_values.at(i - 1);
        break;
    }
    Vector out(kv.size() + g.size());
    out << kv, g;
    return out;
  };
  return c;
}

}  // namespace liesim
