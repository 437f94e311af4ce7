#pragma once

#include <vector>

#include "grm/attention.hpp"
#include "grm/ggnn.hpp"
#include "grm/knowledge_graph.hpp"
#include "grm/model_config.hpp"
#include "grm/params.hpp"
#include "grm/sample.hpp"

namespace grm {

struct ForwardResult {
  Vector scores;  // M
  Matrix alpha;   // M x N
};

// Intermediate values kept for the backward pass.
struct ForwardTrace {
  Vector f_h;
  GraphState initial;
  std::vector<GruTrace> steps;
  GraphState final_state;
  Matrix O;
  AttentionTrace attention;
};

// encode_pair -> init_hidden -> propagate -> output_features ->
// attention_coefficients -> score_all.
ForwardResult forward(const Sample& sample, const KnowledgeGraph& graph, const ParamSet& params,
                      const ModelConfig& config, ForwardTrace* trace = nullptr);

// Cross-entropy loss of one sample. When `grads` is non-null the parameter
// gradient is added to it.
Real loss_and_gradient(const Sample& sample, const KnowledgeGraph& graph,
                       const ParamSet& params, const ModelConfig& config,
                       ParamSet* grads = nullptr);

}  // namespace grm
