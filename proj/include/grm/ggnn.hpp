#pragma once

#include <vector>

#include "grm/knowledge_graph.hpp"
#include "grm/params.hpp"
#include "grm/sample.hpp"
#include "grm/types.hpp"

namespace grm {

// Hidden states, one row per node (relationships first, then objects).
struct GraphState {
  Matrix H;
  Matrix X;  // the t = 0 states, kept for the output network
  int step = 0;
};

// [f_union; f_p1; f_p2; geometry]
Vector pair_input(const Sample& sample);

// f_h = tanh(W [f_union; f_p1; f_p2; geometry] + b)
Vector encode_pair(const Sample& sample, const ParamGroup& encoder);

// Relationship rows are [1, 0, f_h]; object rows are [0, 1, f_o] when the
// object has a detection above `threshold` (the most confident one wins) and
// [0, 1, 0] otherwise.
GraphState init_hidden(const KnowledgeGraph& graph, const Vector& f_h, const Sample& sample,
                       Real threshold);

// Row v: sum_u adjacency(u, v) h_u + b.
Matrix aggregate(const Matrix& adjacency, const Matrix& H, const ParamGroup& ggnn);

struct GruTrace {
  Matrix A;
  Matrix H_prev;
  Matrix Z;
  Matrix R;
  Matrix C;  // candidate state
};

// Gated update applied to every row; weights are shared across nodes.
Matrix gru_update(const Matrix& A, const Matrix& H, const ParamGroup& ggnn,
                  GruTrace* trace = nullptr);

// T synchronous rounds of aggregate + gru_update.
GraphState propagate(const KnowledgeGraph& graph, GraphState state, int steps,
                     const ParamGroup& ggnn, std::vector<GruTrace>* traces = nullptr);

// o_v = tanh(W [h_v^T; x_v] + b)
Matrix output_features(const GraphState& state, const ParamGroup& output);

struct GruGrad {
  Matrix dA;
  Matrix dH_prev;
};

// Accumulates parameter gradients into `grads` (same layout as ggnn).
GruGrad gru_update_backward(const GruTrace& trace, const Matrix& dH, const ParamGroup& ggnn,
                            ParamGroup& grads);

// Returns dH given dA and adds the bias gradient.
Matrix aggregate_backward(const Matrix& adjacency, const Matrix& dA, ParamGroup& grads);

// Full backward over a propagation trace: returns dH at t = 0.
Matrix propagate_backward(const Matrix& adjacency, const std::vector<GruTrace>& traces,
                          Matrix dH, const ParamGroup& ggnn, ParamGroup& grads);

struct OutputGrad {
  Matrix dH;
  Matrix dX;
};

OutputGrad output_features_backward(const GraphState& state, const Matrix& O, const Matrix& dO,
                                    const ParamGroup& output, ParamGroup& grads);

// Accumulates encoder gradients given the upstream gradient on f_h.
void encode_pair_backward(const Sample& sample, const Vector& f_h, const Vector& df_h,
                          const ParamGroup& encoder, ParamGroup& grads);

}  // namespace grm
