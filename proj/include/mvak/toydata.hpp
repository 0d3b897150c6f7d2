#pragma once

#include "mvak/data.hpp"

#include <cstdint>

namespace mvak {

struct ToyOptions {
  Index per_class = 100;
  double noise = 0.15;
  std::uint64_t seed = 0;
};

/// Three noisy sinusoid fragments in the plane. Class c (labels "1".."3")
/// draws t uniformly on [c*pi/2, c*pi/2 + pi] and emits
///   (t, sin(t) + c/2) + N(0, noise^2 I).
/// Neighbouring fragments run parallel at vertical distance 0.5 where their
/// t-ranges meet, so moderate noise makes them overlap.
Dataset make_toy(const ToyOptions& opts);

/// Vertical offset of class c's arc.
double toy_offset(int c);

}  // namespace mvak
