#include "grm/knowledge_graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "text_io.hpp"

namespace grm {

Real quantize_micro(Real value) { return std::round(value * 1e6) / 1e6; }

KnowledgeGraph::KnowledgeGraph(std::vector<std::string> relationship_names,
                               std::vector<std::string> object_names, const Matrix& weights)
    : relationship_names_(std::move(relationship_names)), object_names_(std::move(object_names)) {
  const int m = relationship_count();
  const int n = object_count();
  if (weights.rows() != m || weights.cols() != n) {
    throw ShapeError("KnowledgeGraph: weight block " + shape_of(weights) + " vs " +
                     shape_string(m, n) + " names");
  }
  adjacency_ = Matrix::Zero(m + n, m + n);
  for (int r = 0; r < m; ++r) {
    for (int o = 0; o < n; ++o) {
      const Real w = weights(r, o);
      if (!(w >= 0 && w <= 1)) {
        throw ValidationError("KnowledgeGraph: weight (" + std::to_string(r) + "," +
                              std::to_string(o) + ") = " + std::to_string(w) +
                              " outside [0,1]");
      }
      const Real q = quantize_micro(w);
      adjacency_(r, m + o) = q;
      adjacency_(m + o, r) = q;
    }
  }
}

Real KnowledgeGraph::weight(int relationship, int object) const {
  if (relationship < 0 || relationship >= relationship_count() || object < 0 ||
      object >= object_count()) {
    throw IndexError("KnowledgeGraph::weight: (" + std::to_string(relationship) + "," +
                     std::to_string(object) + ") out of range");
  }
  return adjacency_(relationship, relationship_count() + object);
}

Eigen::Index KnowledgeGraph::edge_count() const { return (block().array() != 0).count(); }

std::vector<int> KnowledgeGraph::neighbors(int node) const {
  if (node < 0 || node >= node_count()) {
    throw IndexError("neighbors: node " + std::to_string(node) + " out of range [0," +
                     std::to_string(node_count()) + ")");
  }
  std::vector<int> out;
  for (int u = 0; u < node_count(); ++u) {
    if (adjacency_(node, u) != 0) out.push_back(u);
  }
  return out;
}

bool KnowledgeGraph::operator==(const KnowledgeGraph& other) const {
  return relationship_names_ == other.relationship_names_ &&
         object_names_ == other.object_names_ && adjacency_.rows() == other.adjacency_.rows() &&
         (adjacency_.size() == 0 ||
          std::equal(adjacency_.data(), adjacency_.data() + adjacency_.size(),
                     other.adjacency_.data(), [](Real a, Real b) {
                       return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
                     }));
}

CooccurrenceCounts count_cooccurrence(std::span<const Sample> samples, int relationships,
                                      int objects, Real threshold) {
  if (samples.empty()) {
    throw ValidationError("count_cooccurrence: empty sample stream");
  }
  if (!(threshold > 0 && threshold < 1)) {
    throw ValidationError("count_cooccurrence: threshold must lie in (0,1)");
  }
  CooccurrenceCounts out;
  out.counts.setZero(relationships, objects);
  std::vector<char> present(objects);
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= relationships) {
      throw IndexError("count_cooccurrence: sample " + std::to_string(s.id) + " has label " +
                       std::to_string(s.label) + " outside [0," +
                       std::to_string(relationships) + ")");
    }
    std::fill(present.begin(), present.end(), 0);
    for (const auto& d : s.detections) {
      if (d.object < 0 || d.object >= objects) {
        throw IndexError("count_cooccurrence: sample " + std::to_string(s.id) +
                         " has object index " + std::to_string(d.object));
      }
      if (d.confidence > threshold) present[d.object] = 1;
    }
    for (int o = 0; o < objects; ++o) out.counts(s.label, o) += present[o];
    ++out.total_samples;
  }
  return out;
}

CooccurrenceCounts merge_counts(const CooccurrenceCounts& a, const CooccurrenceCounts& b) {
  if (a.counts.rows() != b.counts.rows() || a.counts.cols() != b.counts.cols()) {
    throw ShapeError("merge_counts: " + shape_of(a.counts) + " vs " + shape_of(b.counts));
  }
  return {a.counts + b.counts, a.total_samples + b.total_samples};
}

KnowledgeGraph normalize_and_prune(const CooccurrenceCounts& counts, Real prune_threshold,
                                   std::vector<std::string> relationship_names,
                                   std::vector<std::string> object_names, Normalization mode) {
  if (counts.counts.size() == 0) {
    throw ValidationError("normalize_and_prune: empty count matrix");
  }
  if (!(prune_threshold >= 0 && prune_threshold < 1)) {
    throw ValidationError("normalize_and_prune: prune threshold must lie in [0,1)");
  }
  if (counts.counts.maxCoeff() <= 0) {
    throw ValidationError("normalize_and_prune: all co-occurrence counts are zero");
  }
  const Matrix raw = counts.counts.cast<Real>();
  Matrix weights = Matrix::Zero(raw.rows(), raw.cols());
  if (mode == Normalization::kGlobalMax) {
    weights = raw / raw.maxCoeff();
  } else {
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
      const Real row_max = raw.row(r).maxCoeff();
      if (row_max > 0) weights.row(r) = raw.row(r) / row_max;
    }
  }
  weights = (weights.array() < prune_threshold).select(0.0, weights);
  return KnowledgeGraph(std::move(relationship_names), std::move(object_names), weights);
}

KnowledgeGraph random_adjacency(std::vector<std::string> relationship_names,
                                std::vector<std::string> object_names, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> unit(0.0, 1.0);
  Matrix weights(relationship_names.size(), object_names.size());
  for (Eigen::Index k = 0; k < weights.size(); ++k) weights.data()[k] = unit(rng);
  return KnowledgeGraph(std::move(relationship_names), std::move(object_names), weights);
}

std::vector<std::string> default_names(const std::string& prefix, int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::string graph_to_text(const KnowledgeGraph& graph, const std::string& provenance) {
  std::ostringstream os;
  os << "grm-graph v1\n" << text::provenance_block(provenance);
  os << "relationships " << graph.relationship_count() << "\n";
  for (const auto& name : graph.relationship_names()) os << name << "\n";
  os << "objects " << graph.object_count() << "\n";
  for (const auto& name : graph.object_names()) os << name << "\n";
  const int m = graph.relationship_count();
  os << "edges " << graph.edge_count() << "\n";
  for (int r = 0; r < m; ++r) {
    for (int o = 0; o < graph.object_count(); ++o) {
      const Real w = graph.weight(r, o);
      if (w != 0) os << r << " " << m + o << " " << text::fixed6(w) << "\n";
    }
  }
  os << "end\n";
  return os.str();
}

KnowledgeGraph graph_from_text(const std::string& contents) {
  text::LineReader in(contents, "graph");
  if (in.expect_line("header") != "grm-graph v1") {
    throw in.error("expected header 'grm-graph v1'");
  }
  auto read_count = [&](const char* key) {
    const auto tokens = text::split_ws(in.expect_line(key));
    if (tokens.size() != 2 || tokens[0] != key) {
      throw in.error(std::string("expected '") + key + " <count>'");
    }
    const int n = in.parse_number<int>(tokens[1], key);
    if (n < 0) throw in.error(std::string("negative ") + key + " count");
    return n;
  };
  auto read_names = [&](int n, const char* what) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) {
      const auto line = in.expect_line(what);
      if (line.empty()) throw in.error(std::string("empty ") + what);
      names.emplace_back(line);
    }
    return names;
  };
  const int m = read_count("relationships");
  auto rel = read_names(m, "relationship name");
  const int n = read_count("objects");
  auto obj = read_names(n, "object name");
  const int edges = read_count("edges");
  Matrix weights = Matrix::Zero(m, n);
  for (int e = 0; e < edges; ++e) {
    const auto tokens = text::split_ws(in.expect_line("edge"));
    if (tokens.size() != 3) throw in.error("expected '<i> <j> <weight>'");
    const int i = in.parse_number<int>(tokens[0], "node index i");
    const int j = in.parse_number<int>(tokens[1], "node index j");
    const Real w = in.parse_number<Real>(tokens[2], "weight");
    if (i < 0 || i >= m || j < m || j >= m + n) {
      throw in.error("edge (" + std::to_string(i) + "," + std::to_string(j) +
                     ") is not a relationship-object pair");
    }
    if (!(w > 0 && w <= 1)) throw in.error("edge weight outside (0,1]");
    if (weights(i, j - m) != 0) throw in.error("duplicate edge");
    weights(i, j - m) = w;
  }
  if (in.expect_line("end marker") != "end") throw in.error("expected 'end'");
  std::string_view trailing;
  if (in.next(trailing)) throw in.error("content after 'end'");
  return KnowledgeGraph(std::move(rel), std::move(obj), weights);
}

void save_graph(const std::string& path, const KnowledgeGraph& graph,
                const std::string& provenance) {
  text::write_file(path, graph_to_text(graph, provenance));
}

KnowledgeGraph load_graph(const std::string& path) {
  return graph_from_text(text::read_file(path));
}

std::string graph_to_dot(const KnowledgeGraph& graph, const Matrix* alpha,
                         int highlight_relationship) {
  const int m = graph.relationship_count();
  std::ostringstream os;
  os << "graph knowledge {\n  layout=neato;\n  overlap=false;\n";
  for (int r = 0; r < m; ++r) {
    os << "  n" << r << " [label=\"" << graph.relationship_names()[r]
       << "\", shape=circle, color=red";
    if (r == highlight_relationship) os << ", penwidth=3";
    os << "];\n";
  }
  for (int o = 0; o < graph.object_count(); ++o) {
    os << "  n" << m + o << " [label=\"" << graph.object_names()[o]
       << "\", shape=circle, color=blue];\n";
  }
  for (int r = 0; r < m; ++r) {
    for (int o = 0; o < graph.object_count(); ++o) {
      const Real w = graph.weight(r, o);
      if (w == 0) continue;
      os << "  n" << r << " -- n" << m + o << " [weight=" << text::fixed6(w)
         << ", penwidth=" << text::fixed6(0.5 + 2.5 * w);
      if (alpha != nullptr && r == highlight_relationship) {
        os << ", label=\"" << text::fixed6((*alpha)(r, o)) << "\", color=orange";
      }
      os << "];\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace grm
