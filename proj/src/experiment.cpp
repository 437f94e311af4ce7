#include "grm/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "grm/model.hpp"
#include "json.hpp"

namespace grm {

namespace {

using json = nlohmann::ordered_json;

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream * 0x9E3779B97F4A7C15ull);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string header(const RunConfig& config) {
  std::string out;
  const std::string body = to_text(config);
  std::size_t pos = 0;
  while (pos < body.size()) {
    const std::size_t end = body.find('\n', pos);
    out += "# " + body.substr(pos, end - pos) + "\n";
    pos = end + 1;
  }
  return out;
}

std::string fmt(const char* format, Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

json optional_json(const std::optional<Real>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Splits make_splits(const RunConfig& config) {
  validate(config);
  const std::uint64_t seed = config.require_seed();
  Splits s;
  s.world = default_world(seed, world_options(config));
  s.train = generate(s.world, config.train_samples, derive(seed, 1));
  if (config.val_samples > 0) s.val = generate(s.world, config.val_samples, derive(seed, 2));
  s.test = generate(s.world, config.test_samples, derive(seed, 3));
  return s;
}

KnowledgeGraph build_graph(const RunConfig& config, const Dataset& train,
                           const std::vector<std::string>& relationship_names,
                           const std::vector<std::string>& object_names) {
  const auto counts = count_cooccurrence(train, static_cast<int>(relationship_names.size()),
                                         static_cast<int>(object_names.size()), config.epsilon2);
  return normalize_and_prune(counts, config.prune_threshold, relationship_names, object_names,
                             config.normalization);
}

RunResult run_experiment(const RunConfig& config, const Dataset& train, const Dataset& val,
                         const Dataset& test, const KnowledgeGraph& built_graph) {
  validate(config);
  RunResult out;
  out.graph = effective_graph(config, built_graph);
  const ModelConfig model =
      model_config(config, out.graph.relationship_count(), out.graph.object_count());
  out.training = grm::train(train, val, out.graph, model, train_config(config));
  out.test = evaluate(out.training.params, out.graph, test, model, config.ap_mode, config.ap_ranking);
  return out;
}

std::string metrics_report(const Metrics& m, const std::vector<std::string>& names,
                           const RunConfig& config) {
  std::size_t width = 8;
  for (const auto& n : names) width = std::max(width, n.size());
  auto pad = [&](const std::string& s) { return s + std::string(width + 2 - s.size(), ' '); };
  auto cell = [](const std::optional<Real>& v) { return v ? fmt("%8.4f", *v) : std::string("     n/a"); };

  std::string out = header(config);
  out += pad("class") + "  recall        AP\n";
  for (std::size_t c = 0; c < names.size(); ++c) {
    out += pad(names[c]) + cell(m.per_class_recall[c]) + "  " + cell(m.per_class_ap[c]) + "\n";
  }
  out += pad("mAP") + fmt("%8.4f", m.map) + "\n";
  out += pad("accuracy") + fmt("%8.4f", m.accuracy) + "\n";
  for (const auto& w : m.warnings) out += "warning: " + w + "\n";
  return out;
}

std::string metrics_json(const Metrics& m, const std::vector<std::string>& names,
                         const RunConfig& config) {
  json classes = json::array();
  for (std::size_t c = 0; c < names.size(); ++c) {
    classes.push_back({{"name", names[c]},
                       {"recall", optional_json(m.per_class_recall[c])},
                       {"ap", optional_json(m.per_class_ap[c])}});
  }
  const json doc = {{"config", to_text(config)},
                    {"classes", classes},
                    {"map", m.map},
                    {"accuracy", m.accuracy},
                    {"warnings", m.warnings}};
  return doc.dump(2) + "\n";
}

std::string history_jsonl(const std::vector<EpochRecord>& history, const RunConfig& config) {
  std::string out = json{{"config", to_text(config)}}.dump() + "\n";
  for (const auto& rec : history) {
    json line = {{"epoch", rec.epoch}, {"train_loss", rec.train_loss}};
    if (rec.validation) {
      line["val_map"] = rec.validation->map;
      line["val_accuracy"] = rec.validation->accuracy;
    }
    out += line.dump() + "\n";
  }
  return out;
}

std::vector<SweepRow> threshold_sweep(const RunConfig& config, const Dataset& train,
                                      const Dataset& val, const Dataset& test,
                                      const KnowledgeGraph& built_graph) {
  std::vector<SweepRow> rows;
  for (const Real eps : sweep_thresholds()) {
    RunConfig c = config;
    c.epsilon1 = eps;
    const RunResult r = run_experiment(c, train, val, test, built_graph);
    SweepRow row;
    row.epsilon1 = eps;
    std::size_t kept = 0;
    for (const auto& s : test) kept += simulate_detections(s, eps).size();
    row.mean_objects = static_cast<Real>(kept) / static_cast<Real>(test.size());
    row.map = r.test.map;
    row.accuracy = r.test.accuracy;
    row.best_epoch = r.training.best_epoch;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_report(const std::vector<SweepRow>& rows, const RunConfig& config) {
  std::string out = header(config);
  out += "epsilon1  objects/sample     mAP  accuracy  best_epoch\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%8.1f  %14.3f  %6.4f  %8.4f  %10d\n", r.epsilon1,
                  r.mean_objects, r.map, r.accuracy, r.best_epoch);
    out += buf;
  }
  return out;
}

std::string sweep_json(const std::vector<SweepRow>& rows, const RunConfig& config) {
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"epsilon1", r.epsilon1},
                     {"objects_per_sample", r.mean_objects},
                     {"map", r.map},
                     {"accuracy", r.accuracy},
                     {"best_epoch", r.best_epoch}});
  }
  return json{{"config", to_text(config)}, {"rows", table}}.dump(2) + "\n";
}

Explanation explain_sample(const Sample& sample, const KnowledgeGraph& graph,
                           const ParamSet& params, const ModelConfig& model, int top_k) {
  if (top_k < 0) throw ValidationError("explain: top_k must be >= 0");
  const ForwardResult r = forward(sample, graph, params, model);
  Explanation e;
  e.sample_id = sample.id;
  e.label = sample.label;
  e.scores = r.scores;
  e.alpha = r.alpha;
  e.predicted = argmax(r.scores);
  std::vector<int> order(graph.object_count());
  std::iota(order.begin(), order.end(), 0);
  const auto row = r.alpha.row(e.predicted);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row(a) > row(b); });
  for (int k = 0; k < std::min<int>(top_k, static_cast<int>(order.size())); ++k) {
    if (row(order[k]) <= 0) break;
    e.top_objects.emplace_back(order[k], row(order[k]));
  }
  return e;
}

std::string explanation_json(const Explanation& e, const KnowledgeGraph& graph) {
  json top = json::array();
  for (const auto& [obj, a] : e.top_objects) {
    top.push_back({{"object", graph.object_names()[obj]}, {"alpha", a}});
  }
  json scores = json::object();
  for (int i = 0; i < graph.relationship_count(); ++i) {
    scores[graph.relationship_names()[i]] = e.scores(i);
  }
  const json doc = {{"sample_id", e.sample_id},
                    {"label", graph.relationship_names()[e.label]},
                    {"predicted", graph.relationship_names()[e.predicted]},
                    {"scores", scores},
                    {"top_objects", top}};
  return doc.dump();
}

}  // namespace grm
