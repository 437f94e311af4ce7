#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "grm/knowledge_graph.hpp"
#include "grm/model_config.hpp"
#include "grm/synth.hpp"
#include "grm/trainer.hpp"

namespace grm {

// Everything a run needs, read from flat `key = value` text. Unknown keys,
// duplicate keys and ill-typed values are validation errors.
struct RunConfig {
  std::optional<std::uint64_t> seed;  // required; runs are never unseeded

  // world and data
  int union_dim = 32;
  int person_dim = 32;
  int geometry_dim = 8;
  int feature_dim = 64;
  Real noise_scale = 1.0;
  Real clutter_rate = 0.3;
  Real confusable_offset = 0.15;
  Real context_strength = 0;
  int train_samples = 2000;
  int val_samples = 500;
  int test_samples = 500;

  // graph
  Real epsilon2 = 0.7;
  Real prune_threshold = 0.01;
  Normalization normalization = Normalization::kGlobalMax;

  // model
  int output_dim = 64;
  int rank = 256;
  int steps = 3;
  Real epsilon1 = 0.3;
  bool gate_biases = false;
  bool per_class_scorer = false;

  // ablations
  bool random_adjacency = false;
  bool random_attention = false;
  bool no_attention = false;
  bool ablate_neighbors_only = true;  // false: the two attention ablations also fill non-neighbour slots

  // training
  int epochs = 50;
  int batch_size = 32;
  int patience = 10;
  Real sgd_lr = 0.01;
  Real sgd_momentum = 0.9;
  Real adam_lr = 1e-4;
  Real adam_beta1 = 0.9;
  Real adam_beta2 = 0.999;
  Real adam_eps = 1e-8;
  ApMode ap_mode = ApMode::kPositiveRanks;
  ApRanking ap_ranking = ApRanking::kProbability;

  // paths; relative inputs resolve against the working directory
  std::string train_data;
  std::string val_data;
  std::string test_data;
  std::string graph;
  std::string checkpoint;
  std::string output_dir;

  std::uint64_t require_seed() const;
};

// Parsing checks keys and types only; call validate() once command-line
// overrides have been applied.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
void validate(const RunConfig& config);

// Canonical text: every key in a fixed order, reals in shortest round-trip
// form, so parse_run_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

// Applies one `key=value` assignment (command-line overrides).
void set_option(RunConfig& config, const std::string& key, const std::string& value);

WorldOptions world_options(const RunConfig& config);
ModelConfig model_config(const RunConfig& config, int relationships, int objects);
TrainConfig train_config(const RunConfig& config);

// The graph a run trains on: the given co-occurrence graph, or a seeded
// random block with the same node names when random_adjacency is set.
KnowledgeGraph effective_graph(const RunConfig& config, const KnowledgeGraph& built);

}  // namespace grm
