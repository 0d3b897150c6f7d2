#pragma once

#include <algorithm>

namespace mvak::par {

template <typename BlockFn>
ReducedAccumulators accumulate_reduced(Index rows, Index basis, const Matrix& y,
                                       Index chunk, BlockFn&& block) {
  ReducedAccumulators acc;
  acc.gram = Matrix::Zero(basis, basis);
  acc.col_sums = Vector::Zero(basis);
  acc.cross = Matrix::Zero(basis, y.cols());
  acc.rows = rows;
  chunk = std::max<Index>(chunk, 1);
  for (Index start = 0; start < rows; start += chunk) {
    const Index len = std::min(chunk, rows - start);
    // block(start, len) -> len x basis kernel block, computed in parallel
    // inside; accumulation below runs in fixed chunk order.
    const Matrix kc = block(start, len);
    acc.gram.selfadjointView<Eigen::Lower>().rankUpdate(kc.transpose());
    acc.col_sums += kc.colwise().sum().transpose();
    if (y.cols() > 0) acc.cross.noalias() += kc.transpose() * y.middleRows(start, len);
    acc.kernel_evaluations += len * basis;
  }
  acc.gram.triangularView<Eigen::StrictlyUpper>() =
      acc.gram.transpose().triangularView<Eigen::StrictlyUpper>();
  return acc;
}

}  // namespace mvak::par
