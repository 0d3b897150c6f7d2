#include "mvak/toydata.hpp"

#include "mvak/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mvak {

double toy_offset(int c) { return 0.5 * c; }

Dataset make_toy(const ToyOptions& opts) {
  if (opts.per_class < 2) throw UsageError("toydata: samples per class must be >= 2");
  if (!(opts.noise >= 0.0) || !std::isfinite(opts.noise))
    throw UsageError("toydata: noise must be a non-negative finite number");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double pi = std::numbers::pi;
  Dataset ds;
  ds.x.resize(3 * opts.per_class, 2);
  Index row = 0;
  for (int c = 0; c < 3; ++c) {
    const double start = c * pi / 2.0;
    for (Index i = 0; i < opts.per_class; ++i, ++row) {
      const double t = start + pi * unit(rng);
      double x = t;
      double y = std::sin(t) + toy_offset(c);
      if (opts.noise > 0.0) {
        x += opts.noise * gauss(rng);
        y += opts.noise * gauss(rng);
      }
      ds.x(row, 0) = x;
      ds.x(row, 1) = y;
      ds.labels.push_back(std::to_string(c + 1));
    }
  }
  return ds;
}

}  // namespace mvak
