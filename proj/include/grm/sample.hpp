#pragma once

#include <cstdint>
#include <vector>

#include "grm/types.hpp"

namespace grm {

struct Detection {
  int object = 0;
  Real confidence = 0;
  Vector feature;  // region feature, length d
};

// Precomputed features for one person pair.
struct Sample {
  std::int64_t id = 0;
  Vector f_union;
  Vector f_p1;
  Vector f_p2;
  Vector geometry;
  std::vector<Detection> detections;
  int label = 0;
};

using Dataset = std::vector<Sample>;

// Detections with confidence strictly above the threshold, order preserved.
std::vector<Detection> simulate_detections(const Sample& sample, Real threshold);

}  // namespace grm
