#include <doctest.h>

#include <cmath>

#include "liesim/group.hpp"

using namespace liesim;

namespace {
const double kPi = 3.14159265358979323846;

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("additive group law and identity") {
  auto g = LieGroup::additive(2);
  const Matrix a = g->exp(vec2(1, 0));
  const Matrix b = g->exp(vec2(0, 2));
  CHECK((g->mul(a, b) - g->exp(vec2(1, 2))).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g->mul(a, g->identity()) - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g->inv(a) - g->exp(vec2(-1, 0))).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g->log(g->exp(vec2(3, 4))) - vec2(3, 4)).norm() == 0.0);
}

TEST_CASE("so(2) closed forms") {
  auto g = LieGroup::special_orthogonal(2);
  // exp(theta xi_1) = rot(theta) with xi_1 = [[0,-1],[1,0]]
  Matrix xi = g->algebra_basis()[0];
  CHECK(xi(0, 1) == -1.0);
  CHECK(xi(1, 0) == 1.0);
  const Matrix r = g->exp(Vector::Constant(1, kPi / 3));
  CHECK((r - rotation2(kPi / 3)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((g->mul(g->exp(Vector::Constant(1, kPi / 3)),
                g->exp(Vector::Constant(1, kPi / 6))) -
         rotation2(kPi / 2))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((g->inv(r) - rotation2(-kPi / 3)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(g->log(rotation2(0.7))(0) - 0.7) < 1e-12);
}

TEST_CASE("group axioms on sampled elements") {
  for (auto g : {LieGroup::additive(3), LieGroup::special_orthogonal(2),
                 LieGroup::special_orthogonal(3),
                 LieGroup::product(LieGroup::additive(2),
                                   LieGroup::special_orthogonal(2))}) {
    RngStream rng(17, 0, Role::test);
    for (int i = 0; i < 40; ++i) {
      const Matrix a = g->random_element(rng);
      const Matrix b = g->random_element(rng);
      const Matrix c = g->random_element(rng);
      CHECK((g->mul(g->mul(a, b), c) - g->mul(a, g->mul(b, c)))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
      CHECK((g->mul(a, g->identity()) - a).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((g->mul(g->inv(a), a) - g->identity()).cwiseAbs().maxCoeff() <
            1e-12);
      CHECK(g->membership_residual(a) < 1e-9);
    }
  }
}

TEST_CASE("exp/log round trip inside the injectivity radius") {
  for (auto g : {LieGroup::additive(2), LieGroup::special_orthogonal(2),
                 LieGroup::special_orthogonal(3),
                 LieGroup::product(LieGroup::additive(1),
                                   LieGroup::special_orthogonal(2))}) {
    RngStream rng(23, 0, Role::test);
    const double radius = std::min(g->injectivity_radius(), 3.0);
    for (int i = 0; i < 60; ++i) {
      Vector v(g->algebra_dim());
      for (int c = 0; c < v.size(); ++c) v(c) = rng.normal();
      const double target = rng.uniform(0.0, 0.95 * radius);
      if (v.norm() > 0) v *= target / v.norm();
      CHECK((g->log(g->exp(v)) - v).norm() < 1e-9);
    }
  }
}

TEST_CASE("log outside the injectivity radius is an explicit error") {
  auto g = LieGroup::special_orthogonal(2);
  CHECK_THROWS_AS((void)g->log(rotation2(kPi)), OutOfDomainError);
}

TEST_CASE("additive specialization is compatible with the generic matrix path") {
  auto g = LieGroup::additive(3);
  RngStream rng(31, 0, Role::test);
  for (int i = 0; i < 50; ++i) {
    Vector v(3);
    for (int c = 0; c < 3; ++c) v(c) = 2.0 * rng.normal();
    const Matrix fast = g->exp(v);
    const Matrix generic = g->algebra_matrix(v).exp();
    CHECK((fast - generic).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("frame rows and right invariance") {
  auto g2 = LieGroup::additive(2);
  // Translation generators are constant under right multiplication.
  RngStream rng(37, 0, Role::test);
  const Matrix p0 = g2->frame(g2->identity());
  const Matrix p1 = g2->frame(g2->random_element(rng));
  CHECK((p0 - p1).cwiseAbs().maxCoeff() == 0.0);

  auto so2 = LieGroup::special_orthogonal(2);
  const Matrix z = rotation2(kPi / 2);
  const Matrix expect = so2->algebra_basis()[0] * z;
  const Matrix row = so2->frame(z);
  CHECK((Eigen::Map<const Eigen::RowVectorXd>(expect.data(), 4) - row.row(0))
            .cwiseAbs()
            .maxCoeff() < 1e-15);

  // P(z * n) rows equal flatten(xi * z * n) for random z, n.
  for (auto g : {so2, LieGroup::special_orthogonal(3)}) {
    for (int i = 0; i < 20; ++i) {
      const Matrix a = g->random_element(rng);
      const Matrix b = g->random_element(rng);
      const Matrix pf = g->frame(g->mul(a, b));
      for (int al = 0; al < g->algebra_dim(); ++al) {
        const Matrix direct =
            g->algebra_basis()[static_cast<std::size_t>(al)] * g->mul(a, b);
        CHECK((Eigen::Map<const Eigen::RowVectorXd>(
                   direct.data(), g->matrix_size() * g->matrix_size()) -
               pf.row(al))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("pseudoinverse of the frame") {
  // Square identity.
  CHECK((LieGroup::pseudo_inverse(Matrix::Identity(3, 3)) -
         Matrix::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  // Coordinate injection: left inverse recovers coordinates.
  Matrix inj(2, 3);
  inj << 1, 0, 0, 0, 1, 0;
  const Matrix pinv = LieGroup::pseudo_inverse(inj);
  CHECK((inj * pinv - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  // Random full-rank 2x4.
  RngStream rng(41, 0, Role::test);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix p(2, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 4; ++j) p(i, j) = rng.normal();
    CHECK((p * LieGroup::pseudo_inverse(p) - Matrix::Identity(2, 2)).norm() <
          1e-10);
  }
  // Rank deficiency rejected.
  Matrix bad(2, 4);
  bad.setZero();
  bad.row(0).setOnes();
  bad.row(1).setOnes();
  CHECK_THROWS_AS((void)LieGroup::pseudo_inverse(bad), GroupError);
  // Frames have full rank for sampled elements.
  auto so3 = LieGroup::special_orthogonal(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix p = so3->frame(so3->random_element(rng));
    CHECK((p * LieGroup::pseudo_inverse(p) - Matrix::Identity(3, 3)).norm() <
          1e-10);
  }
}

TEST_CASE("truncation functions") {
  auto g = LieGroup::additive(2);
  CHECK(g->truncation(g->identity()).norm() == 0.0);
  CHECK((g->truncation(g->exp(vec2(0.1, 0))) - vec2(0.1, 0)).norm() < 1e-15);
  CHECK(g->truncation(g->exp(vec2(5, 0))).norm() == 0.0);

  // Jacobian along the frame at the identity is I (finite differences).
  const double eps = 1e-6;
  for (int a = 0; a < 2; ++a) {
    Vector dir = Vector::Zero(2);
    dir(a) = eps;
    const Vector plus = g->truncation(g->exp(dir));
    const Vector minus = g->truncation(g->exp((-dir).eval()));
    const Vector deriv = (plus - minus) / (2.0 * eps);
    Vector expect = Vector::Zero(2);
    expect(a) = 1.0;
    CHECK((deriv - expect).cwiseAbs().maxCoeff() < 1e-6);
  }

  // Bounded by r0 and zero outside.
  RngStream rng(43, 0, Role::test);
  for (int i = 0; i < 200; ++i) {
    Vector v(2);
    v << 3.0 * rng.normal(), 3.0 * rng.normal();
    const Vector h = g->truncation(g->exp(v));
    CHECK(h.norm() <= g->truncation_radius() + 1e-12);
    if (v.norm() >= g->truncation_radius()) CHECK(h.norm() == 0.0);
  }

  // Rotation equivariance h(B z) = B h(z) on the additive group.
  for (int i = 0; i < 100; ++i) {
    Vector v(2);
    v << 1.2 * rng.normal(), 1.2 * rng.normal();
    const Matrix b = rotation2(rng.uniform(0.0, 2.0 * kPi));
    const Vector lhs = g->truncation(g->exp((b * v).eval()));
    const Vector rhs = b * g->truncation(g->exp(v));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }

  // SO(2) truncation vanishes past the cutoff and matches log below it.
  auto so2 = LieGroup::special_orthogonal(2);
  CHECK(so2->truncation(rotation2(0.3))(0) == doctest::Approx(0.3));
  CHECK(so2->truncation(rotation2(3.0)).norm() == 0.0);
}

TEST_CASE("cutoff profile shape") {
  auto g = LieGroup::additive(1);
  CHECK(g->chi(0.0) == 1.0);
  CHECK(g->chi(0.5) == 1.0);
  CHECK(g->chi(1.0) == 0.0);
  CHECK(g->chi(2.0) == 0.0);
  const double mid = g->chi(0.75);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  CHECK(g->chi(0.6) > g->chi(0.9));
}

TEST_CASE("product group blocks") {
  auto g = LieGroup::product(LieGroup::additive(2),
                             LieGroup::special_orthogonal(2));
  CHECK(g->algebra_dim() == 3);
  CHECK(g->matrix_size() == 5);
  Vector v(3);
  v << 0.2, -0.4, 0.9;
  CHECK((g->log(g->exp(v)) - v).norm() < 1e-12);
  const Matrix z = g->exp(v);
  CHECK(g->membership_residual(z) < 1e-12);
  // Blockwise multiplication agrees with factors.
  Vector w(3);
  w << -0.1, 0.3, -0.5;
  const Matrix zw = g->mul(z, g->exp(w));
  CHECK((g->log(zw).head(2) - (v.head(2) + w.head(2))).norm() < 1e-12);
  CHECK(g->log(zw)(2) == doctest::Approx(0.4).epsilon(1e-10));
}

TEST_CASE("algebra basis is linearly independent") {
  for (auto g : {LieGroup::additive(3), LieGroup::special_orthogonal(3),
                 LieGroup::product(LieGroup::additive(1),
                                   LieGroup::additive(2))}) {
    const int n = g->algebra_dim();
    const int k = g->matrix_size();
    Matrix stacked(n, k * k);
    for (int a = 0; a < n; ++a)
      stacked.row(a) = Eigen::Map<const Eigen::RowVectorXd>(
          g->algebra_basis()[static_cast<std::size_t>(a)].data(), k * k);
    Eigen::FullPivLU<Matrix> lu(stacked);
    CHECK(lu.rank() == n);
  }
}
