#pragma once

#include <cstdint>

#include "grm/ggnn.hpp"
#include "grm/knowledge_graph.hpp"
#include "grm/params.hpp"
#include "grm/types.hpp"

namespace grm {

// alpha(i, j) is zero exactly when object j is not a neighbour of
// relationship i, and lies in (0, 1) otherwise.
struct AttentionMap {
  Matrix alpha;  // M x N
};

// 1 where the relationship-object edge weight is nonzero.
Matrix neighbor_mask(const KnowledgeGraph& graph);

struct AttentionTrace {
  Matrix P_r;  // tanh(H_r U^T), M x rank
  Matrix P_o;  // tanh(H_o V^T), N x rank
  Matrix mask;
};

// e_ij = w . (tanh(U h_ri) ⊙ tanh(V h_oj)) + b, alpha_ij = sigmoid(e_ij) on
// neighbours. The fused vectors are computed once per node, not per pair.
AttentionMap attention_coefficients(const GraphState& state, const KnowledgeGraph& graph,
                                    const ParamGroup& attention,
                                    AttentionTrace* trace = nullptr);

// Returns dH (full node-count rows) and accumulates into `grads`.
Matrix attention_backward(const GraphState& state, const AttentionTrace& trace,
                          const Matrix& alpha, const Matrix& dalpha,
                          const ParamGroup& attention, ParamGroup& grads);

// Seeded uniforms in (0, 1) on neighbour slots.
Matrix random_attention(const Matrix& mask, std::uint64_t seed, std::int64_t sample_id);

// [o_ri, alpha_i1 o_o1, ..., alpha_iN o_oN]; O holds relationship rows first.
Vector assemble_features(const Matrix& O, const Matrix& alpha, int relationship);

// s_i = W f_i + b. The scorer's W has one row (shared across relationships)
// or M rows (one per relationship).
Vector score_all(const Matrix& O, const Matrix& alpha, const ParamGroup& scorer);

struct ScoreGrad {
  Matrix dO;
  Matrix dalpha;
};

ScoreGrad score_all_backward(const Matrix& O, const Matrix& alpha, const Vector& dscores,
                             const ParamGroup& scorer, ParamGroup& grads);

}  // namespace grm
