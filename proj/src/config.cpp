#include "grm/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <string_view>
#include <vector>

#include "text_io.hpp"

namespace grm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_real(Real v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ValidationError("config: " + key + " = '" + value + "' is not a valid number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ValidationError("config: " + key + " = '" + value + "' is not true/false");
}

struct Field {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number(std::string name, T RunConfig::*member) {
  return {name,
          [name, member](RunConfig& c, const std::string& v) { c.*member = parse_value<T>(name, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_real(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

Field flag(std::string name, bool RunConfig::*member) {
  return {name,
          [name, member](RunConfig& c, const std::string& v) { c.*member = parse_bool(name, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field path(std::string name, std::string RunConfig::*member) {
  return {name, [member](RunConfig& c, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed",
                 [](RunConfig& c, const std::string& v) {
                   c.seed = parse_value<std::uint64_t>("seed", v);
                 },
                 [](const RunConfig& c) {
                   return c.seed ? std::to_string(*c.seed) : std::string();
                 }});
    f.push_back(number("union_dim", &RunConfig::union_dim));
    f.push_back(number("person_dim", &RunConfig::person_dim));
    f.push_back(number("geometry_dim", &RunConfig::geometry_dim));
    f.push_back(number("feature_dim", &RunConfig::feature_dim));
    f.push_back(number("noise_scale", &RunConfig::noise_scale));
    f.push_back(number("clutter_rate", &RunConfig::clutter_rate));
    f.push_back(number("confusable_offset", &RunConfig::confusable_offset));
    f.push_back(number("context_strength", &RunConfig::context_strength));
    f.push_back(number("train_samples", &RunConfig::train_samples));
    f.push_back(number("val_samples", &RunConfig::val_samples));
    f.push_back(number("test_samples", &RunConfig::test_samples));
    f.push_back(number("epsilon2", &RunConfig::epsilon2));
    f.push_back(number("prune_threshold", &RunConfig::prune_threshold));
    f.push_back({"normalization",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "global-max") {
                     c.normalization = Normalization::kGlobalMax;
                   } else if (v == "per-row") {
                     c.normalization = Normalization::kPerRow;
                   } else {
                     throw ValidationError("config: normalization must be global-max or per-row, got '" +
                                           v + "'");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.normalization == Normalization::kGlobalMax ? "global-max"
                                                                                   : "per-row");
                 }});
    f.push_back(number("output_dim", &RunConfig::output_dim));
    f.push_back(number("rank", &RunConfig::rank));
    f.push_back(number("steps", &RunConfig::steps));
    f.push_back(number("epsilon1", &RunConfig::epsilon1));
    f.push_back(flag("gate_biases", &RunConfig::gate_biases));
    f.push_back(flag("per_class_scorer", &RunConfig::per_class_scorer));
    f.push_back(flag("random_adjacency", &RunConfig::random_adjacency));
    f.push_back(flag("random_attention", &RunConfig::random_attention));
    f.push_back(flag("no_attention", &RunConfig::no_attention));
    f.push_back(flag("ablate_neighbors_only", &RunConfig::ablate_neighbors_only));
    f.push_back(number("epochs", &RunConfig::epochs));
    f.push_back(number("batch_size", &RunConfig::batch_size));
    f.push_back(number("patience", &RunConfig::patience));
    f.push_back(number("sgd_lr", &RunConfig::sgd_lr));
    f.push_back(number("sgd_momentum", &RunConfig::sgd_momentum));
    f.push_back(number("adam_lr", &RunConfig::adam_lr));
    f.push_back(number("adam_beta1", &RunConfig::adam_beta1));
    f.push_back(number("adam_beta2", &RunConfig::adam_beta2));
    f.push_back(number("adam_eps", &RunConfig::adam_eps));
    f.push_back({"ap_mode",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "positive-ranks") {
                     c.ap_mode = ApMode::kPositiveRanks;
                   } else if (v == "eleven-point") {
                     c.ap_mode = ApMode::kElevenPoint;
                   } else {
                     throw ValidationError(
                         "config: ap_mode must be positive-ranks or eleven-point, got '" + v + "'");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.ap_mode == ApMode::kPositiveRanks ? "positive-ranks"
                                                                          : "eleven-point");
                 }});
    f.push_back({"ap_ranking",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "probability") {
                     c.ap_ranking = ApRanking::kProbability;
                   } else if (v == "score") {
                     c.ap_ranking = ApRanking::kScore;
                   } else {
                     throw ValidationError("config: ap_ranking must be probability or score, got '" +
                                           v + "'");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.ap_ranking == ApRanking::kProbability ? "probability"
                                                                              : "score");
                 }});
    f.push_back(path("train_data", &RunConfig::train_data));
    f.push_back(path("val_data", &RunConfig::val_data));
    f.push_back(path("test_data", &RunConfig::test_data));
    f.push_back(path("graph", &RunConfig::graph));
    f.push_back(path("checkpoint", &RunConfig::checkpoint));
    f.push_back(path("output_dir", &RunConfig::output_dir));
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.name == key) return f;
  }
  throw ValidationError("config: unknown key '" + key + "'");
}

}  // namespace

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ValidationError("config: seed is required");
  return *seed;
}

void set_option(RunConfig& config, const std::string& key, const std::string& value) {
  field(trim(key)).set(config, trim(value));
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key '" + key +
                            "'");
    }
    try {
      field(key).set(config, value);
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(text::read_file(path));
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError("config: " + msg);
  };
  auto open_unit = [](Real v) { return v > 0 && v < 1; };
  require(c.seed.has_value(), "seed is required");
  require(open_unit(c.epsilon1), "epsilon1 must lie in (0,1)");
  require(open_unit(c.epsilon2), "epsilon2 must lie in (0,1)");
  require(c.prune_threshold >= 0 && c.prune_threshold < 1, "prune_threshold must lie in [0,1)");
  require(c.steps >= 0, "steps must be >= 0");
  require(c.union_dim >= 0 && c.person_dim >= 0 && c.geometry_dim >= 0 &&
              c.union_dim + 2 * c.person_dim + c.geometry_dim > 0,
          "pair feature dimensions must be non-negative and not all zero");
  require(c.feature_dim > 0 && c.output_dim > 0 && c.rank > 0,
          "feature_dim, output_dim and rank must be positive");
  require(c.noise_scale >= 0, "noise_scale must be >= 0");
  require(c.clutter_rate >= 0 && c.clutter_rate <= 1, "clutter_rate must lie in [0,1]");
  require(c.confusable_offset >= 0, "confusable_offset must be >= 0");
  require(c.context_strength >= 0, "context_strength must be >= 0");
  require(c.train_samples > 0 && c.val_samples >= 0 && c.test_samples > 0,
          "sample counts must be positive (val_samples may be 0)");
  require(!(c.random_attention && c.no_attention),
          "random_attention and no_attention are mutually exclusive");
  validate(train_config(c));
}

std::string to_text(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    const std::string value = f.get(config);
    if (value.empty()) continue;
    out += f.name + " = " + value + "\n";
  }
  return out;
}

WorldOptions world_options(const RunConfig& c) {
  WorldOptions w;
  w.union_dim = c.union_dim;
  w.person_dim = c.person_dim;
  w.geometry_dim = c.geometry_dim;
  w.feature_dim = c.feature_dim;
  w.noise_scale = c.noise_scale;
  w.confusable_offset = c.confusable_offset;
  w.context_strength = c.context_strength;
  w.confidence.clutter_rate = c.clutter_rate;
  return w;
}

ModelConfig model_config(const RunConfig& c, int relationships, int objects) {
  ModelConfig m;
  m.dims.union_dim = c.union_dim;
  m.dims.person_dim = c.person_dim;
  m.dims.geometry_dim = c.geometry_dim;
  m.dims.feature_dim = c.feature_dim;
  m.dims.output_dim = c.output_dim;
  m.dims.rank = c.rank;
  m.dims.relationships = relationships;
  m.dims.objects = objects;
  m.steps = c.steps;
  m.object_threshold = c.epsilon1;
  m.gate_biases = c.gate_biases;
  m.per_class_scorer = c.per_class_scorer;
  if (c.random_attention) {
    m.attention = c.ablate_neighbors_only ? AttentionMode::kRandomMasked : AttentionMode::kRandom;
  } else if (c.no_attention) {
    m.attention = c.ablate_neighbors_only ? AttentionMode::kMaskOnly : AttentionMode::kNone;
  }
  m.attention_seed = c.require_seed();
  return m;
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.patience = c.patience;
  t.sgd = {c.sgd_lr, c.sgd_momentum};
  t.adam = {c.adam_lr, c.adam_beta1, c.adam_beta2, c.adam_eps};
  t.seed = c.seed.value_or(0);
  t.ap_mode = c.ap_mode;
  t.ap_ranking = c.ap_ranking;
  return t;
}

KnowledgeGraph effective_graph(const RunConfig& c, const KnowledgeGraph& built) {
  if (!c.random_adjacency) return built;
  return random_adjacency(built.relationship_names(), built.object_names(),
                          c.require_seed() ^ 0x72616e646f6dull);
}

}  // namespace grm
