#include "grm/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "grm/config.hpp"
#include "grm/experiment.hpp"
#include "grm/model.hpp"
#include "json.hpp"
#include "text_io.hpp"

namespace grm::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App& cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd.add_option("-c,--config", c.config_path, "run configuration file (key = value)");
    cmd.add_option("--set", c.overrides, "override one config key, key=value (repeatable)");
    cmd.add_option("--seed", c.seed, "random seed (overrides the config)");
  }
  cmd.add_option("-o,--out", c.out_dir, "output directory");
}

RunConfig resolve_config(const Common& c) {
  RunConfig config = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    set_option(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) config.seed = c.seed;
  validate(config);
  return config;
}

fs::path output_dir(const Common& c, const RunConfig* config) {
  std::string dir = c.out_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("GRM_OUTPUT_DIR"); env != nullptr && *env != '\0') dir = env;
  }
  if (dir.empty() && config != nullptr) dir = config->output_dir;
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  return dir;
}

std::string pick(const std::string& flag, const std::string& from_config, const char* what) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  throw ValidationError(std::string("no ") + what + " given (flag or config key)");
}

std::string dot_header(const RunConfig& config) {
  std::string out;
  std::istringstream in(to_text(config));
  for (std::string line; std::getline(in, line);) out += "// " + line + "\n";
  return out;
}

void write(const fs::path& path, const std::string& contents, std::ostream& out) {
  text::write_file(path.string(), contents);
  out << "wrote " << path.string() << "\n";
}

// The config a checkpoint was trained with is stored as its provenance.
struct LoadedModel {
  RunConfig config;
  ParamSet params;
};

LoadedModel load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  LoadedModel m;
  m.config = parse_run_config(ck.provenance);
  validate(m.config);
  m.params = std::move(ck.params);
  return m;
}

Dataset load_samples(const std::string& path, const KnowledgeGraph& graph) {
  LoadedDataset d = load_dataset(path);
  if (d.relationships != graph.relationship_count() || d.objects != graph.object_count()) {
    throw ValidationError(path + ": dataset has " + std::to_string(d.relationships) + "x" +
                          std::to_string(d.objects) + " classes/objects, graph has " +
                          std::to_string(graph.relationship_count()) + "x" +
                          std::to_string(graph.object_count()));
  }
  return std::move(d.samples);
}

int run_gen_data(const Common& c, std::ostream& out) {
  const RunConfig config = resolve_config(c);
  const fs::path dir = output_dir(c, &config);
  const Splits s = make_splits(config);
  const std::string prov = to_text(config);
  write(dir / "world.txt", world_to_text(s.world, prov), out);
  write(dir / "train.txt", dataset_to_text(s.train, s.world, prov), out);
  if (!s.val.empty()) write(dir / "val.txt", dataset_to_text(s.val, s.world, prov), out);
  write(dir / "test.txt", dataset_to_text(s.test, s.world, prov), out);
  return kSuccess;
}

// Node names come from the world file when one sits next to the data.
std::vector<std::string> names_or_default(const LoadedDataset& data, const std::string& data_path,
                                          bool relationships) {
  const fs::path world = fs::path(data_path).parent_path() / "world.txt";
  if (fs::exists(world)) {
    const WorldModel w = world_from_text(text::read_file(world.string()));
    const auto& names = relationships ? w.relationship_names : w.object_names;
    if (static_cast<int>(names.size()) == (relationships ? data.relationships : data.objects)) {
      return names;
    }
  }
  return default_names(relationships ? "relationship" : "object",
                       relationships ? data.relationships : data.objects);
}

int run_build_graph(const Common& c, const std::string& data_flag, std::ostream& out) {
  const RunConfig config = resolve_config(c);
  const fs::path dir = output_dir(c, &config);
  const std::string data_path = pick(data_flag, config.train_data, "training data");
  const LoadedDataset data = load_dataset(data_path);
  const auto graph = build_graph(config, data.samples, names_or_default(data, data_path, true),
                                 names_or_default(data, data_path, false));
  write(dir / "graph.txt", graph_to_text(graph, to_text(config)), out);
  write(dir / "graph.dot", dot_header(config) + graph_to_dot(graph), out);
  out << graph.edge_count() << " edges\n";
  return kSuccess;
}

struct TrainInputs {
  std::string train;
  std::string val;
  std::string test;
  std::string graph;
};

int run_train(const Common& c, const TrainInputs& in, std::ostream& out) {
  const RunConfig config = resolve_config(c);
  const fs::path dir = output_dir(c, &config);
  const KnowledgeGraph built = load_graph(pick(in.graph, config.graph, "graph"));
  const Dataset train = load_samples(pick(in.train, config.train_data, "training data"), built);
  Dataset val;
  const std::string val_path = in.val.empty() ? config.val_data : in.val;
  if (!val_path.empty()) val = load_samples(val_path, built);

  const KnowledgeGraph graph = effective_graph(config, built);
  const ModelConfig model = model_config(config, graph.relationship_count(), graph.object_count());
  const TrainResult result = grm::train(train, val, graph, model, train_config(config),
                                        [&](const EpochRecord& r) {
                                          out << "epoch " << r.epoch << " loss "
                                              << text::fixed6(r.train_loss);
                                          if (r.validation) {
                                            out << " val_mAP " << text::fixed6(r.validation->map);
                                          }
                                          out << "\n";
                                        });
  save_checkpoint((dir / "checkpoint.grm").string(), result.params, to_text(config));
  out << "wrote " << (dir / "checkpoint.grm").string() << " (best epoch " << result.best_epoch
      << ")\n";
  write(dir / "history.jsonl", history_jsonl(result.history, config), out);
  return kSuccess;
}

int run_eval(const Common& c, const std::string& checkpoint, const TrainInputs& in,
             std::ostream& out) {
  const LoadedModel m = load_model(checkpoint);
  const fs::path dir = output_dir(c, &m.config);
  const KnowledgeGraph built = load_graph(pick(in.graph, m.config.graph, "graph"));
  const Dataset data = load_samples(pick(in.test, m.config.test_data, "evaluation data"), built);
  const KnowledgeGraph graph = effective_graph(m.config, built);
  const ModelConfig model =
      model_config(m.config, graph.relationship_count(), graph.object_count());
  const Metrics metrics = evaluate(m.params, graph, data, model, m.config.ap_mode, m.config.ap_ranking);
  const std::string report = metrics_report(metrics, graph.relationship_names(), m.config);
  write(dir / "metrics.txt", report, out);
  write(dir / "metrics.json", metrics_json(metrics, graph.relationship_names(), m.config), out);
  out << report;
  return kSuccess;
}

std::vector<std::int64_t> parse_ids(const std::string& list) {
  std::vector<std::int64_t> ids;
  std::stringstream ss(list);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      ids.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw ValidationError("bad sample id '" + tok + "'");
    }
  }
  return ids;
}

int run_explain(const Common& c, const std::string& checkpoint, const TrainInputs& in,
                const std::string& id_list, int count, int top_k, std::ostream& out) {
  const LoadedModel m = load_model(checkpoint);
  const fs::path dir = output_dir(c, &m.config);
  const KnowledgeGraph built = load_graph(pick(in.graph, m.config.graph, "graph"));
  const Dataset data = load_samples(pick(in.test, m.config.test_data, "sample data"), built);
  const KnowledgeGraph graph = effective_graph(m.config, built);
  const ModelConfig model =
      model_config(m.config, graph.relationship_count(), graph.object_count());

  std::vector<const Sample*> chosen;
  if (!id_list.empty()) {
    for (const auto id : parse_ids(id_list)) {
      const auto it = std::find_if(data.begin(), data.end(),
                                   [&](const Sample& s) { return s.id == id; });
      if (it == data.end()) throw ValidationError("no sample with id " + std::to_string(id));
      chosen.push_back(&*it);
    }
  } else {
    for (int k = 0; k < std::min<int>(count, static_cast<int>(data.size())); ++k) {
      chosen.push_back(&data[k]);
    }
  }

  std::string records = nlohmann::ordered_json{{"config", to_text(m.config)}}.dump() + "\n";
  for (const Sample* s : chosen) {
    const Explanation e = explain_sample(*s, graph, m.params, model, top_k);
    records += explanation_json(e, graph) + "\n";
    write(dir / ("explain_" + std::to_string(s->id) + ".dot"),
          dot_header(m.config) + graph_to_dot(graph, &e.alpha, e.predicted), out);
  }
  write(dir / "explain.jsonl", records, out);
  return kSuccess;
}

int run_sweep(const Common& c, const TrainInputs& in, std::ostream& out) {
  const RunConfig config = resolve_config(c);
  const fs::path dir = output_dir(c, &config);
  const KnowledgeGraph built = load_graph(pick(in.graph, config.graph, "graph"));
  const Dataset train = load_samples(pick(in.train, config.train_data, "training data"), built);
  Dataset val;
  const std::string val_path = in.val.empty() ? config.val_data : in.val;
  if (!val_path.empty()) val = load_samples(val_path, built);
  const Dataset test = load_samples(pick(in.test, config.test_data, "test data"), built);
  const auto rows = threshold_sweep(config, train, val, test, built);
  const std::string report = sweep_report(rows, config);
  write(dir / "sweep.txt", report, out);
  write(dir / "sweep.json", sweep_json(rows, config), out);
  out << report;
  return kSuccess;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph reasoning model for pairwise relationship recognition", "grm"};
  app.require_subcommand(1);

  Common common;
  TrainInputs inputs;
  std::string data_flag;
  std::string checkpoint;
  std::string ids;
  int count = 5;
  int top_k = 3;

  auto* gen = app.add_subcommand("gen-data", "generate world and train/val/test splits");
  add_common(*gen, common);

  auto* graph_cmd = app.add_subcommand("build-graph", "count co-occurrences into a graph file");
  add_common(*graph_cmd, common);
  graph_cmd->add_option("--data", data_flag, "training dataset");

  auto* train_cmd = app.add_subcommand("train", "train and write a checkpoint plus history");
  add_common(*train_cmd, common);
  train_cmd->add_option("--train", inputs.train, "training dataset");
  train_cmd->add_option("--val", inputs.val, "validation dataset");
  train_cmd->add_option("--graph", inputs.graph, "graph file");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(*eval_cmd, common, false);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", inputs.test, "evaluation dataset");
  eval_cmd->add_option("--graph", inputs.graph, "graph file");

  auto* explain_cmd = app.add_subcommand("explain", "export attention for individual samples");
  add_common(*explain_cmd, common, false);
  explain_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  explain_cmd->add_option("--data", inputs.test, "dataset holding the samples");
  explain_cmd->add_option("--graph", inputs.graph, "graph file");
  explain_cmd->add_option("--samples", ids, "comma-separated sample ids");
  explain_cmd->add_option("--count", count, "explain the first N samples when no ids are given");
  explain_cmd->add_option("--top-k", top_k, "attended objects to report");

  auto* sweep_cmd = app.add_subcommand("sweep", "train once per epsilon1 in {0.1,0.3,0.5,0.7}");
  add_common(*sweep_cmd, common);
  sweep_cmd->add_option("--train", inputs.train, "training dataset");
  sweep_cmd->add_option("--val", inputs.val, "validation dataset");
  sweep_cmd->add_option("--test", inputs.test, "test dataset");
  sweep_cmd->add_option("--graph", inputs.graph, "graph file");

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (gen->parsed()) return run_gen_data(common, out);
    if (graph_cmd->parsed()) return run_build_graph(common, data_flag, out);
    if (train_cmd->parsed()) return run_train(common, inputs, out);
    if (eval_cmd->parsed()) return run_eval(common, checkpoint, inputs, out);
    if (explain_cmd->parsed()) {
      return run_explain(common, checkpoint, inputs, ids, count, top_k, out);
    }
    if (sweep_cmd->parsed()) return run_sweep(common, inputs, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const ShapeError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const IndexError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kRuntime;
  }
  err << app.help();
  return kUsage;
}

}  // namespace grm::cli
