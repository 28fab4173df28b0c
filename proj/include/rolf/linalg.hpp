#pragma once

// Dense kernels behind the feature augmentation: rank reduction, orthonormal
// complements of the observed row space, augmented Gram statistics, and the
// Lasso / ridge solvers used by the estimators.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "rolf/types.hpp"

namespace rolf {

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Observed feature matrix X, one column per arm (d x K).
template <typename Scalar>
struct ObservedFeatureSet {
  MatrixX<Scalar> X;

  Eigen::Index dim() const { return X.rows(); }
  Eigen::Index arms() const { return X.cols(); }
};

/// Rows b_i of B span the orthogonal complement of the row space of X.
template <typename Scalar>
struct OrthonormalBasis {
  MatrixX<Scalar> B;

  Eigen::Index size() const { return B.rows(); }
  bool empty() const { return B.rows() == 0; }
};

/// Augmented features, one row per arm: row a = [x_a^T, B(:, a)^T].
template <typename Scalar>
struct AugmentedFeatureSet {
  MatrixX<Scalar> features;
  MatrixX<Scalar> gram;  // sum_a x~_a x~_a^T
  Scalar sigma_min_sq{0};
  Scalar sigma_max_sq{0};
  Eigen::Index observed_dim{0};

  Eigen::Index arms() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  auto row(Eigen::Index arm) const { return features.row(arm); }
};

namespace detail {

template <typename Scalar>
Eigen::Index numerical_rank(const VectorX<Scalar>& singular_values, Scalar rel_tol) {
  if (singular_values.size() == 0) return 0;
  const Scalar cutoff = rel_tol * singular_values(0);
  Eigen::Index r = 0;
  while (r < singular_values.size() && singular_values(r) > cutoff) ++r;
  return r;
}

}  // namespace detail

/// Drops linearly dependent directions so the returned rows are independent and
/// span the row space of X. A matrix that already has full row rank is
/// returned unchanged; otherwise the rows are S_r V_r^T from the SVD.
template <typename Derived>
ObservedFeatureSet<typename Derived::Scalar> reduce_rank(
    const Eigen::MatrixBase<Derived>& X, typename Derived::Scalar rel_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  if (X.cols() < 2) throw LinalgError("feature matrix needs at least two arms");
  if (!(rel_tol > 0)) throw LinalgError("rank tolerance must be positive");
  if (!X.allFinite()) throw LinalgError("feature matrix has non-finite entries");

  const MatrixX<Scalar> M = X;
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(M, Eigen::ComputeThinV);
  const VectorX<Scalar>& s = svd.singularValues();
  if (s.size() == 0 || s(0) == Scalar(0)) throw LinalgError("rank zero feature matrix");

  const Eigen::Index r = detail::numerical_rank<Scalar>(s, rel_tol);
  if (r == M.rows()) return {M};
  MatrixX<Scalar> reduced = s.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
  return {std::move(reduced)};
}

/// Orthonormal basis of R(X)^perp from the right-singular vectors of the zero
/// singular values. Each row is sign-normalised so its first non-negligible
/// entry is positive, which makes the basis reproducible.
template <typename Scalar>
OrthonormalBasis<Scalar> complement_basis(const ObservedFeatureSet<Scalar>& obs,
                                          Scalar rel_tol = Scalar(1e-10)) {
  const Eigen::Index d = obs.dim();
  const Eigen::Index K = obs.arms();
  if (d > K) throw LinalgError("observed features must be rank reduced (d > K)");
  if (d == 0) throw LinalgError("rank zero feature matrix");

  Eigen::JacobiSVD<MatrixX<Scalar>> svd(obs.X, Eigen::ComputeFullV);
  if (detail::numerical_rank<Scalar>(svd.singularValues(), rel_tol) != d)
    throw LinalgError("observed features are rank deficient; call reduce_rank first");
  if (d == K) return {MatrixX<Scalar>(0, K)};

  MatrixX<Scalar> B = svd.matrixV().rightCols(K - d).transpose();
  const Scalar negligible = Eigen::NumTraits<Scalar>::dummy_precision();
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    for (Eigen::Index j = 0; j < K; ++j) {
      if (std::abs(B(i, j)) > negligible) {
        if (B(i, j) < 0) B.row(i) *= Scalar(-1);
        break;
      }
    }
  }
  return {std::move(B)};
}

template <typename Scalar>
AugmentedFeatureSet<Scalar> augment(const ObservedFeatureSet<Scalar>& obs,
                                    const OrthonormalBasis<Scalar>& basis) {
  const Eigen::Index K = obs.arms();
  if (basis.B.cols() != K)
    throw LinalgError("basis has " + std::to_string(basis.B.cols()) + " columns, expected " +
                      std::to_string(K));
  if (obs.dim() + basis.size() != K)
    throw LinalgError("observed dimension plus basis size must equal the number of arms");

  AugmentedFeatureSet<Scalar> out;
  out.observed_dim = obs.dim();
  out.features.resize(K, K);
  out.features.leftCols(obs.dim()) = obs.X.transpose();
  out.features.rightCols(basis.size()) = basis.B.transpose();
  out.gram = out.features.transpose() * out.features;

  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(out.gram, Eigen::EigenvaluesOnly);
  out.sigma_min_sq = eig.eigenvalues().minCoeff();
  out.sigma_max_sq = out.gram.diagonal().maxCoeff();
  return out;
}

/// Orthogonal projector X^T (X X^T)^{-1} X onto the row space of X.
template <typename Derived>
MatrixX<typename Derived::Scalar> row_space_projector(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> XXt = X * X.transpose();
  Eigen::LDLT<MatrixX<Scalar>> ldlt(XXt);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw LinalgError("X X^T is singular");
  return X.transpose() * ldlt.solve(MatrixX<Scalar>(X));
}

// ---------------------------------------------------------------------------
// Lasso

struct LassoOptions {
  double tol = 1e-8;
  int max_iter = 10000;
};

template <typename Scalar>
struct LassoResult {
  VectorX<Scalar> coef;
  int sweeps = 0;
  bool converged = false;
  // Largest violation of the subgradient optimality conditions at `coef`.
  Scalar kkt_violation{0};
};

inline double soft_threshold(double z, double threshold) {
  if (z > threshold) return z - threshold;
  if (z < -threshold) return z + threshold;
  return 0.0;
}

/// Subgradient optimality residual of mu for  mu^T G mu - 2 c^T mu + lambda |mu|_1.
/// With g = c - G mu the conditions are |g_j| <= lambda/2 when mu_j = 0 and
/// g_j = (lambda/2) sign(mu_j) otherwise.
template <typename Scalar>
Scalar lasso_kkt_violation(const MatrixX<Scalar>& gram, const VectorX<Scalar>& cross,
                           Scalar lambda, const VectorX<Scalar>& mu) {
  const VectorX<Scalar> g = cross - gram * mu;
  const Scalar half = lambda / 2;
  Scalar worst = 0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    const Scalar v = mu(j) == Scalar(0) ? std::max(Scalar(0), std::abs(g(j)) - half)
                                        : std::abs(g(j) - (mu(j) > 0 ? half : -half));
    worst = std::max(worst, v);
  }
  return worst;
}

/// Cyclic coordinate descent on the sufficient statistics G = sum x x^T and
/// c = sum x y of the objective  sum (y - x^T mu)^2 + lambda |mu|_1.
/// Stops once a sweep moves no coordinate by more than tol (in gradient units,
/// |delta_j| G_jj) and the fresh KKT residual is below tol.
template <typename Scalar>
LassoResult<Scalar> solve_lasso_gram(const MatrixX<Scalar>& gram, const VectorX<Scalar>& cross,
                                     Scalar lambda, const LassoOptions& opts = {},
                                     const VectorX<Scalar>* warm_start = nullptr) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n || cross.size() != n) throw LinalgError("lasso: dimension mismatch");
  if (lambda < 0) throw LinalgError("lasso: lambda must be non-negative");

  LassoResult<Scalar> res;
  res.coef = warm_start && warm_start->size() == n ? *warm_start : VectorX<Scalar>::Zero(n);
  VectorX<Scalar> g = cross - gram * res.coef;
  const Scalar half = lambda / 2;
  const Scalar tol = static_cast<Scalar>(opts.tol);

  for (res.sweeps = 0; res.sweeps < opts.max_iter;) {
    ++res.sweeps;
    Scalar max_step = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar gjj = gram(j, j);
      Scalar updated = 0;
      if (gjj > 0) updated = soft_threshold(g(j) + gjj * res.coef(j), half) / gjj;
      const Scalar delta = updated - res.coef(j);
      if (delta != Scalar(0)) {
        g.noalias() -= gram.col(j) * delta;
        res.coef(j) = updated;
        max_step = std::max(max_step, std::abs(delta) * std::max(gjj, Scalar(1)));
      }
    }
    if (max_step < tol) {
      g = cross - gram * res.coef;
      res.kkt_violation = lasso_kkt_violation(gram, cross, lambda, res.coef);
      if (res.kkt_violation <= tol) {
        res.converged = true;
        return res;
      }
    }
  }
  res.kkt_violation = lasso_kkt_violation(gram, cross, lambda, res.coef);
  return res;
}

/// Lasso on explicit samples, one per row of `design`.
template <typename DerivedX, typename DerivedY>
LassoResult<typename DerivedX::Scalar> solve_lasso(
    const Eigen::MatrixBase<DerivedX>& design, const Eigen::MatrixBase<DerivedY>& targets,
    typename DerivedX::Scalar lambda, const LassoOptions& opts = {},
    const VectorX<typename DerivedX::Scalar>* warm_start = nullptr) {
  using Scalar = typename DerivedX::Scalar;
  if (design.rows() == 0) throw LinalgError("lasso: need at least one sample");
  if (design.rows() != targets.size()) throw LinalgError("lasso: sample count mismatch");
  const MatrixX<Scalar> G = design.transpose() * design;
  const VectorX<Scalar> c = design.transpose() * targets;
  return solve_lasso_gram<Scalar>(G, c, lambda, opts, warm_start);
}

// ---------------------------------------------------------------------------
// Ridge

/// Running (A, b) = (lambda I + sum w x x^T, sum w x y); the estimate is A^{-1} b.
template <typename Scalar>
class RidgeAccumulator {
 public:
  RidgeAccumulator() = default;
  RidgeAccumulator(Eigen::Index dim, Scalar lambda)
      : A_(MatrixX<Scalar>::Identity(dim, dim) * lambda), b_(VectorX<Scalar>::Zero(dim)) {
    if (!(lambda > 0)) throw LinalgError("ridge: lambda must be positive");
  }

  template <typename Derived>
  void add(const Eigen::MatrixBase<Derived>& x, Scalar y, Scalar weight = Scalar(1)) {
    A_.noalias() += weight * x * x.transpose();
    b_.noalias() += (weight * y) * x;
  }

  /// Adds a whole batch given by its Gram matrix and cross moment.
  void add_moments(const MatrixX<Scalar>& gram, const VectorX<Scalar>& cross) {
    A_ += gram;
    b_ += cross;
  }

  VectorX<Scalar> solve() const { return A_.ldlt().solve(b_); }

  const MatrixX<Scalar>& precision() const { return A_; }
  const VectorX<Scalar>& moment() const { return b_; }
  Eigen::Index dim() const { return b_.size(); }

 private:
  MatrixX<Scalar> A_;
  VectorX<Scalar> b_;
};

/// In-place Sherman-Morrison update of Vinv after V += w x x^T.
template <typename Scalar, typename Derived>
void sherman_morrison_update(MatrixX<Scalar>& Vinv, const Eigen::MatrixBase<Derived>& x,
                             Scalar weight = Scalar(1)) {
  const VectorX<Scalar> Vx = Vinv * x;
  const Scalar denom = Scalar(1) + weight * x.dot(Vx);
  Vinv.noalias() -= (weight / denom) * Vx * Vx.transpose();
}

}  // namespace rolf
