#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Jacobi>

#include "modalbound/errors.hpp"
#include "modalbound/types.hpp"

namespace modalbound {

// Dense real square matrix that is symmetric to within 1e-12 absolute.
template <typename Scalar>
class SymmetricMatrix {
 public:
  template <typename Derived>
  explicit SymmetricMatrix(const Eigen::MatrixBase<Derived>& a, Scalar tol = Scalar(1e-12))
      : entries_(a) {
    if (entries_.rows() != entries_.cols()) throw ShapeError("symmetric matrix must be square");
    if (entries_.rows() > 0 && (entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > tol)
      throw SymmetryError("matrix is not symmetric within tolerance");
  }

  const Matrix<Scalar>& entries() const { return entries_; }
  Index dim() const { return entries_.rows(); }

 private:
  Matrix<Scalar> entries_;
};

template <typename Scalar>
struct Diagonalization {
  Matrix<Scalar> q;       // orthogonal; q * A * q^T is diagonal
  Vector<Scalar> values;  // descending
  int sweeps = 0;
};

// Frobenius norm of the strictly off-diagonal part.
template <typename Derived>
typename Derived::Scalar off_diagonal_norm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Scalar sum = 0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

/// Cyclic Jacobi eigenvalue iteration. Each sweep annihilates every
/// off-diagonal pair (p, q) once with a plane rotation; iteration stops when
/// the off-diagonal Frobenius norm of the working matrix drops below `tol`.
/// Throws ConvergenceError after `max_sweeps` sweeps.
template <typename Scalar>
Diagonalization<Scalar> jacobi_diagonalize(const SymmetricMatrix<Scalar>& input, Scalar tol,
                                           int max_sweeps = 100) {
  if (!(tol > 0)) throw PreconditionError("jacobi tolerance must be positive");
  const Index n = input.dim();
  Matrix<Scalar> a = input.entries();
  Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);

  int sweep = 0;
  while (off_diagonal_norm(a) >= tol) {
    if (sweep == max_sweeps)
      throw ConvergenceError("jacobi did not converge within " + std::to_string(max_sweeps) +
                             " sweeps");
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (a(p, q) == Scalar(0)) continue;
        Eigen::JacobiRotation<Scalar> rot;
        rot.makeJacobi(a, p, q);
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        v.applyOnTheRight(p, q, rot);
        a(p, q) = a(q, p) = Scalar(0);
      }
    }
    ++sweep;
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) > a(j, j); });

  Diagonalization<Scalar> out;
  out.q.resize(n, n);
  out.values.resize(n);
  out.sweeps = sweep;
  for (Index r = 0; r < n; ++r) {
    const Index src = order[static_cast<std::size_t>(r)];
    out.values(r) = a(src, src);
    out.q.row(r) = v.col(src).transpose();
  }
  return out;
}

template <typename Derived>
Diagonalization<typename Derived::Scalar> jacobi_diagonalize(
    const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar tol, int max_sweeps = 100) {
  return jacobi_diagonalize(SymmetricMatrix<typename Derived::Scalar>(a), tol, max_sweeps);
}

}  // namespace modalbound
