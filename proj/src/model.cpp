#include "grm/model.hpp"

#include <cmath>
#include <random>

#include "grm/core_math.hpp"

namespace grm {

void validate(const ModelConfig& config) {
  const auto& d = config.dims;
  if (d.union_dim < 0 || d.person_dim < 0 || d.geometry_dim < 0 || d.input_dim() <= 0 ||
      d.feature_dim <= 0 || d.output_dim <= 0 || d.rank <= 0 || d.relationships <= 0 ||
      d.objects <= 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (config.steps < 0) throw ValidationError("propagation steps must be >= 0");
  if (!(config.object_threshold > 0 && config.object_threshold < 1)) {
    throw ValidationError("object threshold must lie in (0,1)");
  }
}

ParamSet init_params(const ModelConfig& config, std::uint64_t seed) {
  validate(config);
  const auto& dims = config.dims;
  std::mt19937_64 rng(seed);
  auto weight = [&](Eigen::Index rows, Eigen::Index cols) {
    const Real bound = 1.0 / std::sqrt(static_cast<Real>(cols));
    std::uniform_real_distribution<Real> dist(-bound, bound);
    Matrix w(rows, cols);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = dist(rng);
    return w;
  };
  auto bias = [](Eigen::Index n) { return Matrix::Zero(n, 1).eval(); };

  const int D = dims.hidden_dim();
  const int K = dims.output_dim;
  ParamSet params;
  auto& encoder = params.add_group("encoder", OptimizerTag::kSgd);
  encoder.add("W", weight(dims.feature_dim, dims.input_dim()));
  encoder.add("b", bias(dims.feature_dim));

  auto& ggnn = params.add_group("ggnn", OptimizerTag::kAdam);
  ggnn.add("b", bias(D));
  for (const char* name : {"W_z", "U_z", "W_r", "U_r", "W_h", "U_h"}) ggnn.add(name, weight(D, D));
  if (config.gate_biases) {
    for (const char* name : {"b_z", "b_r", "b_h"}) ggnn.add(name, bias(D));
  }

  auto& output = params.add_group("output", OptimizerTag::kSgd);
  output.add("W", weight(K, 2 * D));
  output.add("b", bias(K));

  auto& attention = params.add_group("attention", OptimizerTag::kSgd);
  attention.add("U_a", weight(dims.rank, D));
  attention.add("V_a", weight(dims.rank, D));
  attention.add("w_a", weight(1, dims.rank).transpose().eval());
  attention.add("b_a", Matrix::Constant(1, 1, kAttentionBiasInit));

  auto& scorer = params.add_group("scorer", OptimizerTag::kSgd);
  const int rows = config.per_class_scorer ? dims.relationships : 1;
  scorer.add("W", weight(rows, K * (dims.objects + 1)));
  scorer.add("b", bias(rows));
  return params;
}

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const ShapeError& e) {
    throw ShapeError(std::string(name) + ": " + e.what());
  } catch (const IndexError& e) {
    throw IndexError(std::string(name) + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  }
}

}  // namespace

ForwardResult forward(const Sample& sample, const KnowledgeGraph& graph, const ParamSet& params,
                      const ModelConfig& config, ForwardTrace* trace) {
  ForwardTrace local;
  ForwardTrace& tr = trace != nullptr ? *trace : local;
  tr.steps.clear();

  tr.f_h = stage("encode_pair", [&] { return encode_pair(sample, params.group("encoder")); });
  tr.initial = stage("init_hidden", [&] {
    return init_hidden(graph, tr.f_h, sample, config.object_threshold);
  });
  tr.final_state = stage("propagate", [&] {
    return propagate(graph, tr.initial, config.steps, params.group("ggnn"),
                     trace != nullptr ? &tr.steps : nullptr);
  });
  tr.O = stage("output_features",
               [&] { return output_features(tr.final_state, params.group("output")); });

  ForwardResult result;
  const int m = graph.relationship_count();
  const int n = graph.object_count();
  switch (config.attention) {
    case AttentionMode::kLearned:
      result.alpha = stage("attention_coefficients", [&] {
                       return attention_coefficients(tr.final_state, graph,
                                                     params.group("attention"), &tr.attention);
                     }).alpha;
      break;
    case AttentionMode::kRandom:
      result.alpha = random_attention(Matrix::Ones(m, n), config.attention_seed, sample.id);
      break;
    case AttentionMode::kNone:
      result.alpha = Matrix::Ones(m, n);
      break;
    case AttentionMode::kRandomMasked:
      result.alpha = random_attention(neighbor_mask(graph), config.attention_seed, sample.id);
      break;
    case AttentionMode::kMaskOnly:
      result.alpha = neighbor_mask(graph);
      break;
  }
  result.scores =
      stage("score_all", [&] { return score_all(tr.O, result.alpha, params.group("scorer")); });
  return result;
}

Real loss_and_gradient(const Sample& sample, const KnowledgeGraph& graph,
                       const ParamSet& params, const ModelConfig& config, ParamSet* grads) {
  ForwardTrace tr;
  const ForwardResult result = forward(sample, graph, params, config, grads ? &tr : nullptr);
  const auto xent = stage("loss", [&] { return softmax_xent(result.scores, sample.label); });
  if (grads == nullptr) return xent.loss;

  const ScoreGrad sg = score_all_backward(tr.O, result.alpha, xent.grad, params.group("scorer"),
                                          grads->group("scorer"));
  const OutputGrad og = output_features_backward(tr.final_state, tr.O, sg.dO,
                                                 params.group("output"), grads->group("output"));
  Matrix dH = og.dH;
  if (config.attention == AttentionMode::kLearned) {
    dH += attention_backward(tr.final_state, tr.attention, result.alpha, sg.dalpha,
                             params.group("attention"), grads->group("attention"));
  }
  Matrix dH0 = propagate_backward(graph.adjacency(), tr.steps, std::move(dH),
                                  params.group("ggnn"), grads->group("ggnn"));
  dH0 += og.dX;
  const int m = graph.relationship_count();
  const Vector df_h = dH0.topRows(m).rightCols(tr.f_h.size()).colwise().sum().transpose();
  encode_pair_backward(sample, tr.f_h, df_h, params.group("encoder"), grads->group("encoder"));
  return xent.loss;
}

}  // namespace grm
