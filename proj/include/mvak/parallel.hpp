#pragma once

// Data-parallel inner loops. Every OpenMP kernel has a serial twin with the
// same arithmetic order per output element, so results are bit-identical
// across thread counts and the serial version serves as the test reference.

#include "mvak/numcore.hpp"

#include <vector>

namespace mvak::par {

/// K(i, j) = exp(-|a_i - b_j|^2 / (2 sigma^2)).
Matrix rbf_gram(const Matrix& a, const Matrix& b, double sigma);
Matrix rbf_gram_serial(const Matrix& a, const Matrix& b, double sigma);

/// Euclidean distances over the l(l-1)/2 distinct pairs, row-major upper
/// triangle order.
std::vector<double> pairwise_distances(const Matrix& a);
std::vector<double> pairwise_distances_serial(const Matrix& a);

/// Streams training rows in fixed-size chunks and accumulates
///   gram   += K_c^T K_c   (r x r)
///   col    += K_c^T 1     (r)
///   cross  += K_c^T Y_c   (r x m)
/// where K_c is the chunk's kernel block against the basis. Only one chunk
/// block (chunk x r) is alive at a time.
struct ReducedAccumulators {
  Matrix gram;
  Vector col_sums;
  Matrix cross;
  Index rows = 0;
  Index kernel_evaluations = 0;
};

template <typename BlockFn>
ReducedAccumulators accumulate_reduced(Index rows, Index basis, const Matrix& y,
                                       Index chunk, BlockFn&& block);

}  // namespace mvak::par

#include "mvak/parallel_impl.hpp"
