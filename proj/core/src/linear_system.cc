#include "linear_system.h"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include "g2sfusion/error.h"

namespace g2sfusion::detail {

namespace {

constexpr double kRelativePivotFloor = 1e-14;

void check_pivots(const Eigen::VectorXd& d) {
  if (d.size() == 0) return;
  if (!d.allFinite()) {
    throw Error(ErrorCode::kSingularSystem, "non-finite pivot in the normal equations");
  }
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.minCoeff();
  if (!(dmax > 0.0) || dmin <= kRelativePivotFloor * dmax) {
    throw Error(ErrorCode::kSingularSystem,
                "normal equations are rank deficient (gauge not fixed or graph disconnected)");
  }
}

}  // namespace

struct NormalEquations::Impl {
  bool dense = false;

  Eigen::LDLT<Eigen::MatrixXd> dense_ldlt;
  mutable std::optional<Eigen::MatrixXd> dense_inverse;

  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> sparse_ldlt;
  // Selected inverse on the pattern of L (strictly lower part, same layout as
  // the factor's value array) plus the diagonal; permuted coordinates.
  mutable std::vector<double> z_lower;
  mutable Eigen::VectorXd z_diag;
  mutable bool takahashi_ready = false;

  int permuted(int original) const {
    const auto& p = sparse_ldlt.permutationP();
    return p.size() == 0 ? original : p.indices()(original);
  }

  void run_takahashi() const;
  double selected_entry(int r, int c) const;  // permuted coordinates
};

void NormalEquations::Impl::run_takahashi() const {
  const SparseMatrix& l = sparse_ldlt.matrixL().nestedExpression();
  const Eigen::VectorXd d = sparse_ldlt.vectorD();
  const int n = static_cast<int>(l.cols());
  const int* outer = l.outerIndexPtr();
  const int* inner = l.innerIndexPtr();
  const double* lx = l.valuePtr();

  z_lower.assign(static_cast<std::size_t>(outer[n]), 0.0);
  z_diag.resize(n);
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  std::vector<double> acc;

  for (int j = n - 1; j >= 0; --j) {
    const int begin = outer[j];
    const int end = outer[j + 1];
    const int m = end - begin;
    for (int p = begin; p < end; ++p) pos[static_cast<std::size_t>(inner[p])] = p - begin;
    acc.assign(static_cast<std::size_t>(m), 0.0);

    // Z(i, j) = -sum_{k in S} L(k, j) Z(i, k) for i in S = struct(L(:, j)).
    for (int a = 0; a < m; ++a) {
      const int k = inner[begin + a];
      const double lkj = lx[begin + a];
      acc[static_cast<std::size_t>(a)] -= lkj * z_diag(k);
      for (int q = outer[k]; q < outer[k + 1]; ++q) {
        const int b = pos[static_cast<std::size_t>(inner[q])];
        if (b < 0) continue;
        const double zrk = z_lower[static_cast<std::size_t>(q)];
        acc[static_cast<std::size_t>(b)] -= lkj * zrk;
        acc[static_cast<std::size_t>(a)] -= lx[begin + b] * zrk;
      }
    }
    double diag = 1.0 / d(j);
    for (int a = 0; a < m; ++a) {
      z_lower[static_cast<std::size_t>(begin + a)] = acc[static_cast<std::size_t>(a)];
      diag -= lx[begin + a] * acc[static_cast<std::size_t>(a)];
    }
    z_diag(j) = diag;
    for (int p = begin; p < end; ++p) pos[static_cast<std::size_t>(inner[p])] = -1;
  }
  takahashi_ready = true;
}

double NormalEquations::Impl::selected_entry(int r, int c) const {
  if (r == c) return z_diag(r);
  const int row = std::max(r, c);
  const int col = std::min(r, c);
  const SparseMatrix& l = sparse_ldlt.matrixL().nestedExpression();
  const int* inner = l.innerIndexPtr();
  const int* first = inner + l.outerIndexPtr()[col];
  const int* last = inner + l.outerIndexPtr()[col + 1];
  const int* it = std::lower_bound(first, last, row);
  if (it == last || *it != row) {
    // Structurally zero in L implies the entry is off the selected pattern;
    // callers only ask for entries inside one variable block, which the
    // assembly always stores.
    throw Error(ErrorCode::kSingularSystem, "requested inverse entry outside the factor pattern");
  }
  return z_lower[static_cast<std::size_t>(it - inner)];
}

NormalEquations::NormalEquations(const SparseMatrix& h, bool dense)
    : impl_(std::make_unique<Impl>()), size_(static_cast<int>(h.rows())) {
  impl_->dense = dense;
  if (size_ == 0) return;
  if (!dense) impl_->sparse_ldlt.analyzePattern(h);
  refactorize(h);
}

void NormalEquations::refactorize(const SparseMatrix& h) {
  if (size_ == 0) return;
  impl_->dense_inverse.reset();
  impl_->takahashi_ready = false;
  if (impl_->dense) {
    impl_->dense_ldlt.compute(Eigen::MatrixXd(h));
    if (impl_->dense_ldlt.info() != Eigen::Success) {
      throw Error(ErrorCode::kSingularSystem, "dense LDLT failed");
    }
    check_pivots(impl_->dense_ldlt.vectorD());
  } else {
    impl_->sparse_ldlt.factorize(h);
    if (impl_->sparse_ldlt.info() != Eigen::Success) {
      throw Error(ErrorCode::kSingularSystem, "sparse LDLT failed (zero pivot)");
    }
    check_pivots(impl_->sparse_ldlt.vectorD());
  }
}

NormalEquations::~NormalEquations() = default;
NormalEquations::NormalEquations(NormalEquations&&) noexcept = default;
NormalEquations& NormalEquations::operator=(NormalEquations&&) noexcept = default;

Eigen::VectorXd NormalEquations::solve(const Eigen::VectorXd& rhs) const {
  if (size_ == 0) return {};
  return impl_->dense ? Eigen::VectorXd(impl_->dense_ldlt.solve(rhs)) : Eigen::VectorXd(impl_->sparse_ldlt.solve(rhs));
}

std::vector<Eigen::Matrix2d> NormalEquations::inverse_blocks_2x2(const std::vector<int>& offsets) const {
  std::vector<Eigen::Matrix2d> out;
  out.reserve(offsets.size());
  if (impl_->dense) {
    if (!impl_->dense_inverse) {
      impl_->dense_inverse = impl_->dense_ldlt.solve(Eigen::MatrixXd::Identity(size_, size_));
    }
    for (int o : offsets) {
      Eigen::Matrix2d b = impl_->dense_inverse->block<2, 2>(o, o);
      out.push_back(0.5 * (b + b.transpose()));
    }
    return out;
  }
  if (!impl_->takahashi_ready) impl_->run_takahashi();
  for (int o : offsets) {
    const int a = impl_->permuted(o);
    const int b = impl_->permuted(o + 1);
    const double off = impl_->selected_entry(a, b);
    Eigen::Matrix2d m;
    m << impl_->selected_entry(a, a), off, off, impl_->selected_entry(b, b);
    out.push_back(m);
  }
  return out;
}

}  // namespace g2sfusion::detail
