#pragma once

#include <cstdint>
#include <vector>

#include "finsler/jet.hpp"

namespace finsler {

/// Seeded set of admissible (x, y) points in the slit tangent bundle of a chart.
struct SamplePlan {
  std::uint64_t seed = 0;
  std::vector<Point> points;
};

}  // namespace finsler
