#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "grm/knowledge_graph.hpp"
#include "grm/metrics.hpp"
#include "grm/model_config.hpp"
#include "grm/optim.hpp"
#include "grm/params.hpp"
#include "grm/sample.hpp"

namespace grm {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  SgdOptions sgd;
  AdamOptions adam;
  int patience = 10;  // epochs without a better validation mAP before stopping
  std::uint64_t seed = 1;
  ApMode ap_mode = ApMode::kPositiveRanks;
  ApRanking ap_ranking = ApRanking::kProbability;
};

void validate(const TrainConfig& config);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, int batch);
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

struct EpochRecord {
  int epoch = 0;  // 0 is the untrained model
  Real train_loss = 0;
  std::optional<Metrics> validation;
};

struct TrainResult {
  ParamSet params;  // best validation mAP, or the last epoch without validation data
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch training; gradients are averaged over each batch, the "ggnn"
// group is stepped with Adam and every other group with SGD.
TrainResult train(const Dataset& train_set, const Dataset& validation_set,
                  const KnowledgeGraph& graph, const ModelConfig& model,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Same, starting from the given parameters.
TrainResult train_from(ParamSet params, const Dataset& train_set, const Dataset& validation_set,
                       const KnowledgeGraph& graph, const ModelConfig& model,
                       const TrainConfig& config, const EpochCallback& on_epoch = {});

std::vector<Vector> predict_scores(const ParamSet& params, const KnowledgeGraph& graph,
                                   const Dataset& data, const ModelConfig& model);

Metrics evaluate(const ParamSet& params, const KnowledgeGraph& graph, const Dataset& data,
                 const ModelConfig& model, ApMode mode = ApMode::kPositiveRanks,
                 ApRanking ranking = ApRanking::kProbability);

// Mean cross-entropy, summed in sample order.
Real mean_loss(const ParamSet& params, const KnowledgeGraph& graph, const Dataset& data,
               const ModelConfig& model);

}  // namespace grm
