#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grm/sample.hpp"
#include "grm/types.hpp"

namespace grm {

// Detector confidence model: present objects draw Beta(present_a, present_b);
// each absent object produces a clutter detection with probability
// clutter_rate and confidence Beta(clutter_a, clutter_b).
struct ConfidenceModel {
  Real present_a = 8.5;
  Real present_b = 1.5;  // mean 0.85
  Real clutter_rate = 0.3;
  Real clutter_a = 2.0;
  Real clutter_b = 8.0;  // mean 0.2
};

// Ground-truth generator for relationship/object co-occurrence data.
struct WorldModel {
  std::vector<std::string> relationship_names;
  std::vector<std::string> object_names;
  int union_dim = 32;
  int person_dim = 32;
  int geometry_dim = 8;
  int feature_dim = 64;
  Matrix cooccurrence;              // M x N presence probabilities
  Matrix relationship_prototypes;   // M x (union_dim + 2 * person_dim)
  Matrix object_prototypes;         // N x feature_dim
  // Scene context: a genuine detection in a sample labelled r looks like
  // object_prototypes(o) + context_strength * context_prototypes(r).
  Matrix context_prototypes;        // M x feature_dim
  Real context_strength = 0;
  Real noise_scale = 1.0;
  ConfidenceModel confidence;

  int relationships() const { return static_cast<int>(relationship_names.size()); }
  int objects() const { return static_cast<int>(object_names.size()); }
};

struct WorldOptions {
  int union_dim = 32;
  int person_dim = 32;
  int geometry_dim = 8;
  int feature_dim = 64;
  Real noise_scale = 1.0;
  // Relative offset between the prototypes of deliberately confusable
  // relationship pairs (friends/couple, family/professional).
  Real confusable_offset = 0.15;
  Real context_strength = 0;
  ConfidenceModel confidence;
};

// Six relationships against twelve objects, with two confusable pairs whose
// pair features differ little and whose object context differs a lot.
WorldModel default_world(std::uint64_t seed, const WorldOptions& options = {});

void validate(const WorldModel& world);

// Samples are a pure function of (world, index, seed); ids are 0..n-1.
Dataset generate(const WorldModel& world, int n, std::uint64_t seed);

std::string dataset_to_text(const Dataset& data, const WorldModel& world,
                            const std::string& provenance = {});

struct LoadedDataset {
  Dataset samples;
  int union_dim = 0;
  int person_dim = 0;
  int geometry_dim = 0;
  int feature_dim = 0;
  int relationships = 0;
  int objects = 0;
};

LoadedDataset dataset_from_text(const std::string& text);
void save_dataset(const std::string& path, const Dataset& data, const WorldModel& world,
                  const std::string& provenance = {});
LoadedDataset load_dataset(const std::string& path);

std::string world_to_text(const WorldModel& world, const std::string& provenance = {});
WorldModel world_from_text(const std::string& text);

}  // namespace grm
