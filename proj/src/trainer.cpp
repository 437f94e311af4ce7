#include "grm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "grm/model.hpp"

namespace grm {

void validate(const TrainConfig& c) {
  if (c.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (c.batch_size <= 0) throw ValidationError("batch size must be positive");
  if (c.patience <= 0) throw ValidationError("patience must be positive");
  if (!(c.sgd.lr >= 0) || !(c.adam.lr >= 0)) throw ValidationError("learning rates must be >= 0");
  if (!(c.sgd.momentum >= 0 && c.sgd.momentum < 1)) {
    throw ValidationError("momentum must lie in [0,1)");
  }
  if (!(c.adam.beta1 >= 0 && c.adam.beta1 < 1) || !(c.adam.beta2 >= 0 && c.adam.beta2 < 1) ||
      !(c.adam.eps > 0)) {
    throw ValidationError("adam betas must lie in [0,1) and eps must be positive");
  }
}

TrainingDiverged::TrainingDiverged(int epoch, int batch)
    : std::runtime_error("training diverged (non-finite loss) at epoch " +
                         std::to_string(epoch) + ", batch " + std::to_string(batch)),
      epoch_(epoch),
      batch_(batch) {}

namespace {

Real ordered_mean(const std::vector<Real>& values) {
  Real sum = 0;
  for (Real v : values) sum += v;
  return sum / static_cast<Real>(values.size());
}

}  // namespace

std::vector<Vector> predict_scores(const ParamSet& params, const KnowledgeGraph& graph,
                                   const Dataset& data, const ModelConfig& model) {
  std::vector<Vector> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(forward(s, graph, params, model).scores);
  return out;
}

Metrics evaluate(const ParamSet& params, const KnowledgeGraph& graph, const Dataset& data,
                 const ModelConfig& model, ApMode mode, ApRanking ranking) {
  if (data.empty()) throw ValidationError("evaluate: empty dataset");
  const auto scores = predict_scores(params, graph, data, model);
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& s : data) labels.push_back(s.label);
  return compute_metrics(scores, labels, model.dims.relationships, mode, ranking);
}

Real mean_loss(const ParamSet& params, const KnowledgeGraph& graph, const Dataset& data,
               const ModelConfig& model) {
  if (data.empty()) throw ValidationError("mean_loss: empty dataset");
  std::vector<Real> losses;
  losses.reserve(data.size());
  for (const auto& s : data) losses.push_back(loss_and_gradient(s, graph, params, model));
  return ordered_mean(losses);
}

TrainResult train(const Dataset& train_set, const Dataset& validation_set,
                  const KnowledgeGraph& graph, const ModelConfig& model,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  // keep the initialisation stream apart from the shuffling stream
  return train_from(init_params(model, config.seed * 0x9E3779B97F4A7C15ull + 17), train_set,
                    validation_set, graph, model, config, on_epoch);
}

TrainResult train_from(ParamSet params, const Dataset& train_set, const Dataset& validation_set,
                       const KnowledgeGraph& graph, const ModelConfig& model,
                       const TrainConfig& config, const EpochCallback& on_epoch) {
  validate(model);
  validate(config);
  if (train_set.empty()) throw ValidationError("train: empty training set");
  if (graph.relationship_count() != model.dims.relationships ||
      graph.object_count() != model.dims.objects) {
    throw ValidationError("train: graph has " + std::to_string(graph.relationship_count()) +
                          "x" + std::to_string(graph.object_count()) +
                          " nodes, model expects " + std::to_string(model.dims.relationships) +
                          "x" + std::to_string(model.dims.objects));
  }

  TrainResult result;
  const bool has_validation = !validation_set.empty();
  auto record = [&](int epoch, Real loss) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss;
    if (has_validation) rec.validation = evaluate(params, graph, validation_set, model, config.ap_mode, config.ap_ranking);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    return rec;
  };

  const Real initial = mean_loss(params, graph, train_set, model);
  if (!std::isfinite(initial)) throw TrainingDiverged(0, 0);
  Real best_map = -1;
  int since_best = 0;
  {
    const auto rec = record(0, initial);
    result.params = params;
    result.best_epoch = 0;
    if (rec.validation) best_map = rec.validation->map;
  }

  GroupOptimizer optimizer(params, config.sgd, config.adam);
  std::mt19937_64 shuffle_rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Real> losses(train_set.size());
  ParamSet grads = params.zeros_like();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      grads.set_zero();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const Real loss = loss_and_gradient(train_set[idx], graph, params, model, &grads);
        if (!std::isfinite(loss)) throw TrainingDiverged(epoch, batch_index);
        losses[idx] = loss;
      }
      grads.scale(1.0 / static_cast<Real>(end - start));
      optimizer.step(params, grads);
      if (!params.all_finite()) throw TrainingDiverged(epoch, batch_index);
    }

    const auto rec = record(epoch, ordered_mean(losses));
    if (has_validation) {
      if (rec.validation->map > best_map) {
        best_map = rec.validation->map;
        result.params = params;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    } else {
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace grm
