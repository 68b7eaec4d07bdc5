#pragma once

// Factorization of the symmetric normal matrix H = J^T W J with solves and
// selected entries of H^-1.
//
// Small systems use a dense LDL^T. Larger ones use Eigen's simplicial LDL^T
// with AMD ordering; the requested inverse entries then come from the
// Takahashi recurrences evaluated on the sparsity pattern of the factor,
// which never forms the dense inverse.

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace g2sfusion::detail {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

class NormalEquations {
 public:
  /// `h` must be symmetric with both triangles stored. Throws
  /// kSingularSystem when a pivot is not safely positive.
  NormalEquations(const SparseMatrix& h, bool dense);
  ~NormalEquations();
  NormalEquations(NormalEquations&&) noexcept;
  NormalEquations& operator=(NormalEquations&&) noexcept;

  /// Refactors a matrix with the same sparsity pattern, reusing the
  /// symbolic analysis.
  void refactorize(const SparseMatrix& h);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  /// 2x2 blocks (H^-1)[o:o+2, o:o+2] for each offset o.
  std::vector<Eigen::Matrix2d> inverse_blocks_2x2(const std::vector<int>& offsets) const;

  int size() const { return size_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int size_ = 0;
};

}  // namespace g2sfusion::detail
