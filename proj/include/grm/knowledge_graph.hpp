#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grm/sample.hpp"
#include "grm/types.hpp"

namespace grm {

// Bipartite relationship/object graph. Nodes 0..M-1 are relationships,
// M..M+N-1 are objects. Edge weights are stored on a 1e-6 grid so the text
// format (six decimals) reproduces them bit for bit.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  // `weights` is the M x N relationship-object block, entries in [0, 1].
  KnowledgeGraph(std::vector<std::string> relationship_names,
                 std::vector<std::string> object_names, const Matrix& weights);

  int relationship_count() const { return static_cast<int>(relationship_names_.size()); }
  int object_count() const { return static_cast<int>(object_names_.size()); }
  int node_count() const { return relationship_count() + object_count(); }

  const std::vector<std::string>& relationship_names() const { return relationship_names_; }
  const std::vector<std::string>& object_names() const { return object_names_; }

  // Full symmetric (M+N) x (M+N) adjacency.
  const Matrix& adjacency() const { return adjacency_; }
  // M x N block.
  auto block() const {
    return adjacency_.block(0, relationship_count(), relationship_count(), object_count());
  }
  Real weight(int relationship, int object) const;
  Eigen::Index edge_count() const;

  std::vector<int> neighbors(int node) const;

  bool operator==(const KnowledgeGraph& other) const;

 private:
  std::vector<std::string> relationship_names_;
  std::vector<std::string> object_names_;
  Matrix adjacency_;
};

Real quantize_micro(Real value);

struct CooccurrenceCounts {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> counts;
  std::int64_t total_samples = 0;
};

// counts[r][o] = number of samples labelled r with at least one detection of
// object o above `threshold`.
CooccurrenceCounts count_cooccurrence(std::span<const Sample> samples, int relationships,
                                      int objects, Real threshold);

CooccurrenceCounts merge_counts(const CooccurrenceCounts& a, const CooccurrenceCounts& b);

enum class Normalization { kGlobalMax, kPerRow };

KnowledgeGraph normalize_and_prune(const CooccurrenceCounts& counts, Real prune_threshold,
                                   std::vector<std::string> relationship_names,
                                   std::vector<std::string> object_names,
                                   Normalization mode = Normalization::kGlobalMax);

// Uniform random weights on the full relationship-object block.
KnowledgeGraph random_adjacency(std::vector<std::string> relationship_names,
                                std::vector<std::string> object_names, std::uint64_t seed);

std::vector<std::string> default_names(const std::string& prefix, int count);

std::string graph_to_text(const KnowledgeGraph& graph, const std::string& provenance = {});
KnowledgeGraph graph_from_text(const std::string& text);
void save_graph(const std::string& path, const KnowledgeGraph& graph,
                const std::string& provenance = {});
KnowledgeGraph load_graph(const std::string& path);

// Graphviz rendering. With `alpha` (M x N) and a relationship index, the
// edges of that relationship are labelled with attention values.
std::string graph_to_dot(const KnowledgeGraph& graph, const Matrix* alpha = nullptr,
                         int highlight_relationship = -1);

}  // namespace grm
