#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "liesim/rng.hpp"

namespace liesim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct OutOfDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GroupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A matrix Lie group: elements are k x k real matrices, the Lie algebra is
// spanned by a fixed basis xi_1..xi_n, and the right-invariant frame is
// Y_alpha(z) = xi_alpha * z. The truncation functions h^alpha are canonical
// coordinates of the first kind damped by a cubic-smoothstep cutoff chi:
// chi(r) = 1 for r <= r0/2 and chi(r) = 0 for r >= r0.
class LieGroup : public std::enable_shared_from_this<LieGroup> {
 public:
  enum class Kind { additive, special_orthogonal, product };

  static std::shared_ptr<const LieGroup> additive(int n) {
    auto g = std::shared_ptr<LieGroup>(new LieGroup());
    g->kind_ = Kind::additive;
    g->name_ = "additive:" + std::to_string(n);
    g->n_ = n;
    g->k_ = n + 1;
    g->r0_ = 1.0;
    g->injectivity_radius_ = std::numeric_limits<double>::infinity();
    g->basis_.reserve(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      Matrix xi = Matrix::Zero(n + 1, n + 1);
      xi(a, n) = 1.0;
      g->basis_.push_back(xi);
    }
    return g;
  }

  static std::shared_ptr<const LieGroup> special_orthogonal(int k) {
    if (k < 2) throw GroupError("so(k) needs k >= 2");
    auto g = std::shared_ptr<LieGroup>(new LieGroup());
    g->kind_ = Kind::special_orthogonal;
    g->name_ = "so:" + std::to_string(k);
    g->k_ = k;
    g->n_ = k * (k - 1) / 2;
    g->r0_ = 1.5707963267948966;  // pi/2
    g->injectivity_radius_ = 3.141592653589793;
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        // exp(theta * xi_(i,j)) rotates the (i,j) plane counterclockwise.
        Matrix xi = Matrix::Zero(k, k);
        xi(j, i) = 1.0;
        xi(i, j) = -1.0;
        g->basis_.push_back(xi);
      }
    }
    return g;
  }

  static std::shared_ptr<const LieGroup> product(
      std::shared_ptr<const LieGroup> a, std::shared_ptr<const LieGroup> b) {
    auto g = std::shared_ptr<LieGroup>(new LieGroup());
    g->kind_ = Kind::product;
    g->name_ = "product:" + a->name() + "," + b->name();
    g->k_ = a->k_ + b->k_;
    g->n_ = a->n_ + b->n_;
    g->r0_ = std::min(a->r0_, b->r0_);
    g->injectivity_radius_ =
        std::min(a->injectivity_radius_, b->injectivity_radius_);
    g->f1_ = std::move(a);
    g->f2_ = std::move(b);
    for (const auto& xi : g->f1_->basis_) {
      Matrix m = Matrix::Zero(g->k_, g->k_);
      m.topLeftCorner(g->f1_->k_, g->f1_->k_) = xi;
      g->basis_.push_back(m);
    }
    for (const auto& xi : g->f2_->basis_) {
      Matrix m = Matrix::Zero(g->k_, g->k_);
      m.bottomRightCorner(g->f2_->k_, g->f2_->k_) = xi;
      g->basis_.push_back(m);
    }
    return g;
  }

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  int algebra_dim() const { return n_; }
  int matrix_size() const { return k_; }
  double truncation_radius() const { return r0_; }
  double injectivity_radius() const { return injectivity_radius_; }
  const std::vector<Matrix>& algebra_basis() const { return basis_; }
  const LieGroup& factor1() const { return *f1_; }
  const LieGroup& factor2() const { return *f2_; }

  Matrix identity() const { return Matrix::Identity(k_, k_); }

  Matrix mul(const Matrix& a, const Matrix& b) const {
    if (a.rows() != k_ || a.cols() != k_ || b.rows() != k_ || b.cols() != k_)
      throw GroupError("mul: shape mismatch on " + name_);
    return a * b;
  }

  Matrix inv(const Matrix& a) const {
    switch (kind_) {
      case Kind::additive: {
        Matrix r = identity();
        r.topRightCorner(n_, 1) = -a.topRightCorner(n_, 1);
        return r;
      }
      case Kind::special_orthogonal:
        return a.transpose();
      case Kind::product: {
        Matrix r = Matrix::Zero(k_, k_);
        r.topLeftCorner(f1_->k_, f1_->k_) =
            f1_->inv(a.topLeftCorner(f1_->k_, f1_->k_));
        r.bottomRightCorner(f2_->k_, f2_->k_) =
            f2_->inv(a.bottomRightCorner(f2_->k_, f2_->k_));
        return r;
      }
    }
    throw GroupError("inv: unknown kind");
  }

  // Linear combination sum_a v_a xi_a.
  Matrix algebra_matrix(const Vector& v) const {
    Matrix m = Matrix::Zero(k_, k_);
    for (int a = 0; a < n_; ++a) m += v(a) * basis_[static_cast<std::size_t>(a)];
    return m;
  }

  // Coordinates of an algebra matrix in the basis (exact for built-ins).
  Vector algebra_coords(const Matrix& m) const {
    Vector v(n_);
    switch (kind_) {
      case Kind::additive:
        v = m.topRightCorner(n_, 1);
        return v;
      case Kind::special_orthogonal: {
        int idx = 0;
        for (int i = 0; i < k_; ++i)
          for (int j = i + 1; j < k_; ++j) v(idx++) = 0.5 * (m(j, i) - m(i, j));
        return v;
      }
      case Kind::product: {
        v.head(f1_->n_) =
            f1_->algebra_coords(m.topLeftCorner(f1_->k_, f1_->k_));
        v.tail(f2_->n_) =
            f2_->algebra_coords(m.bottomRightCorner(f2_->k_, f2_->k_));
        return v;
      }
    }
    throw GroupError("algebra_coords: unknown kind");
  }

  Matrix exp(const Vector& v) const {
    if (v.size() != n_) throw GroupError("exp: coordinate size mismatch");
    switch (kind_) {
      case Kind::additive: {
        // Translation generators are nilpotent of order two.
        Matrix r = identity();
        r.topRightCorner(n_, 1) = v;
        return r;
      }
      case Kind::special_orthogonal:
        return algebra_matrix(v).exp();
      case Kind::product: {
        Matrix r = Matrix::Zero(k_, k_);
        r.topLeftCorner(f1_->k_, f1_->k_) = f1_->exp(v.head(f1_->n_));
        r.bottomRightCorner(f2_->k_, f2_->k_) = f2_->exp(v.tail(f2_->n_));
        return r;
      }
    }
    throw GroupError("exp: unknown kind");
  }

  Vector log(const Matrix& z) const {
    switch (kind_) {
      case Kind::additive: {
        Vector v = z.topRightCorner(n_, 1);
        if (!v.allFinite()) throw OutOfDomainError("log: non-finite element");
        return v;
      }
      case Kind::special_orthogonal: {
        const Matrix m = z.log();
        if (!m.allFinite())
          throw OutOfDomainError("log: outside injectivity radius on " + name_);
        Vector v = algebra_coords(m);
        if ((exp(v) - z).cwiseAbs().maxCoeff() > 1e-8)
          throw OutOfDomainError("log: round trip failed on " + name_);
        return v;
      }
      case Kind::product: {
        Vector v(n_);
        v.head(f1_->n_) = f1_->log(z.topLeftCorner(f1_->k_, f1_->k_));
        v.tail(f2_->n_) = f2_->log(z.bottomRightCorner(f2_->k_, f2_->k_));
        return v;
      }
    }
    throw GroupError("log: unknown kind");
  }

  // Right-invariant frame P(z): row alpha is the flattening (column-major)
  // of xi_alpha * z.
  Matrix frame(const Matrix& z) const {
    Matrix p(n_, k_ * k_);
    for (int a = 0; a < n_; ++a) {
      const Matrix ya = basis_[static_cast<std::size_t>(a)] * z;
      p.row(a) = Eigen::Map<const Eigen::RowVectorXd>(ya.data(), k_ * k_);
    }
    return p;
  }

  // Moore-Penrose pseudoinverse of the full-row-rank frame: with the row
  // convention above this is P~ = P^T (P P^T)^{-1}, the k^2 x n right
  // inverse with P * P~ = I_n.
  static Matrix pseudo_inverse(const Matrix& p) {
    const Matrix gram = p * p.transpose();
    Eigen::FullPivLU<Matrix> lu(gram);
    if (!lu.isInvertible())
      throw GroupError("pseudo_inverse: rank-deficient frame");
    return p.transpose() * lu.inverse();
  }

  // Cutoff profile: 1 on [0, r0/2], cubic smoothstep down to 0 at r0.
  double chi(double r) const {
    const double half = 0.5 * r0_;
    if (r <= half) return 1.0;
    if (r >= r0_) return 0.0;
    const double u = (r - half) / half;
    return 1.0 - u * u * (3.0 - 2.0 * u);
  }

  // Truncation functions h(z) = log(z) * chi(|log(z)|); identically zero
  // outside a compact neighbourhood of the identity, never throws.
  Vector truncation(const Matrix& z) const {
    Vector v;
    try {
      v = log(z);
    } catch (const OutOfDomainError&) {
      return Vector::Zero(n_);
    }
    const double r = v.norm();
    if (r >= r0_) return Vector::Zero(n_);
    return chi(r) * v;
  }

  double membership_residual(const Matrix& z) const {
    if (z.rows() != k_ || z.cols() != k_ || !z.allFinite())
      return std::numeric_limits<double>::infinity();
    switch (kind_) {
      case Kind::additive: {
        Matrix expect = identity();
        expect.topRightCorner(n_, 1) = z.topRightCorner(n_, 1);
        return (z - expect).cwiseAbs().maxCoeff();
      }
      case Kind::special_orthogonal: {
        const double ortho =
            (z.transpose() * z - identity()).cwiseAbs().maxCoeff();
        return ortho + std::abs(z.determinant() - 1.0);
      }
      case Kind::product: {
        double r = f1_->membership_residual(z.topLeftCorner(f1_->k_, f1_->k_)) +
                   f2_->membership_residual(
                       z.bottomRightCorner(f2_->k_, f2_->k_));
        r += z.topRightCorner(f1_->k_, f2_->k_).cwiseAbs().sum();
        r += z.bottomLeftCorner(f2_->k_, f1_->k_).cwiseAbs().sum();
        return r;
      }
    }
    return std::numeric_limits<double>::infinity();
  }

  // Test helper: exp of a Gaussian algebra vector.
  Matrix random_element(RngStream& rng, double scale = 0.5) const {
    Vector v(n_);
    for (int i = 0; i < n_; ++i) v(i) = scale * rng.normal();
    return exp(v);
  }

  bool abelian() const {
    for (std::size_t a = 0; a < basis_.size(); ++a)
      for (std::size_t b = a + 1; b < basis_.size(); ++b) {
        const Matrix c = basis_[a] * basis_[b] - basis_[b] * basis_[a];
        if (c.cwiseAbs().maxCoeff() > 1e-14) return false;
      }
    return true;
  }

 private:
  LieGroup() = default;

  Kind kind_ = Kind::additive;
  std::string name_;
  int n_ = 0;
  int k_ = 0;
  double r0_ = 1.0;
  double injectivity_radius_ = 1.0;
  std::vector<Matrix> basis_;
  std::shared_ptr<const LieGroup> f1_, f2_;
};

using GroupPtr = std::shared_ptr<const LieGroup>;

// Convenience constructors for additive-group elements.
inline Matrix translation(const GroupPtr& g, const Vector& v) {
  return g->exp(v);
}

inline Matrix rotation2(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

}  // namespace liesim
