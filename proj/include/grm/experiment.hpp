#pragma once

#include <string>
#include <vector>

#include "grm/config.hpp"
#include "grm/knowledge_graph.hpp"
#include "grm/metrics.hpp"
#include "grm/synth.hpp"
#include "grm/trainer.hpp"

namespace grm {

struct Splits {
  WorldModel world;
  Dataset train;
  Dataset val;
  Dataset test;
};

// World and the three splits, each drawn from its own seed derived from
// config.seed.
Splits make_splits(const RunConfig& config);

// Co-occurrence graph over the training split at epsilon2.
KnowledgeGraph build_graph(const RunConfig& config, const Dataset& train,
                           const std::vector<std::string>& relationship_names,
                           const std::vector<std::string>& object_names);

struct RunResult {
  TrainResult training;
  Metrics test;
  KnowledgeGraph graph;  // the graph actually used (random when the flag is set)
};

// Trains on `train` (validation on `val`) and evaluates on `test`.
RunResult run_experiment(const RunConfig& config, const Dataset& train, const Dataset& val,
                         const Dataset& test, const KnowledgeGraph& built_graph);

// Aligned text table with the config as a '#' header.
std::string metrics_report(const Metrics& metrics, const std::vector<std::string>& class_names,
                           const RunConfig& config);
std::string metrics_json(const Metrics& metrics, const std::vector<std::string>& class_names,
                         const RunConfig& config);

// One JSON object per line; the first line carries the config.
std::string history_jsonl(const std::vector<EpochRecord>& history, const RunConfig& config);

struct SweepRow {
  Real epsilon1 = 0;
  Real mean_objects = 0;  // detections above epsilon1 per test sample
  Real map = 0;
  Real accuracy = 0;
  int best_epoch = 0;
};

inline const std::vector<Real>& sweep_thresholds() {
  static const std::vector<Real> values = {0.1, 0.3, 0.5, 0.7};
  return values;
}

std::vector<SweepRow> threshold_sweep(const RunConfig& config, const Dataset& train,
                                      const Dataset& val, const Dataset& test,
                                      const KnowledgeGraph& built_graph);
std::string sweep_report(const std::vector<SweepRow>& rows, const RunConfig& config);
std::string sweep_json(const std::vector<SweepRow>& rows, const RunConfig& config);

struct Explanation {
  std::int64_t sample_id = 0;
  int label = 0;
  int predicted = 0;
  Vector scores;
  Matrix alpha;
  std::vector<std::pair<int, Real>> top_objects;  // for the predicted relationship
};

Explanation explain_sample(const Sample& sample, const KnowledgeGraph& graph,
                           const ParamSet& params, const ModelConfig& model, int top_k);
std::string explanation_json(const Explanation& e, const KnowledgeGraph& graph);

}  // namespace grm
