#pragma once

#include <cstdint>

#include "grm/params.hpp"
#include "grm/types.hpp"

namespace grm {

struct ModelDims {
  int union_dim = 32;
  int person_dim = 32;
  int geometry_dim = 8;
  int feature_dim = 64;  // d; hidden states are d + 2 wide
  int output_dim = 64;
  int rank = 256;  // bilinear fusion rank
  int relationships = 6;
  int objects = 12;

  int input_dim() const { return union_dim + 2 * person_dim + geometry_dim; }
  int hidden_dim() const { return feature_dim + 2; }
  int node_count() const { return relationships + objects; }
};

enum class AttentionMode {
  kLearned,        // sigmoid of the fused-state score on neighbour slots
  kRandom,         // seeded uniforms on every object slot
  kNone,           // 1 on every object slot: plain concatenation of all object nodes
  kRandomMasked,   // seeded uniforms on neighbour slots only
  kMaskOnly,       // 1 on neighbour slots only
};

struct ModelConfig {
  ModelDims dims;
  int steps = 3;
  Real object_threshold = 0.3;  // detections above this initialise object nodes
  bool gate_biases = false;
  bool per_class_scorer = false;
  AttentionMode attention = AttentionMode::kLearned;
  std::uint64_t attention_seed = 0;
};

void validate(const ModelConfig& config);

// Attention starts nearly open, sigmoid(3) = 0.95 on neighbour slots, so
// training begins close to the unattended model.
inline constexpr Real kAttentionBiasInit = 3.0;

// Groups: encoder, ggnn (Adam), output, attention, scorer. Weights are drawn
// uniformly in +-1/sqrt(fan_in); biases start at zero except b_a.
ParamSet init_params(const ModelConfig& config, std::uint64_t seed);

}  // namespace grm
