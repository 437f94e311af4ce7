#include <random>
#include <string>

#include "doctest.h"
#include "grm/config.hpp"

using namespace grm;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("parses comments, blank lines and typed values") {
  const RunConfig c = parse_run_config(
      "# run\n"
      "\n"
      "seed = 42\n"
      "  steps=2  \n"
      "epsilon1 = 0.5\n"
      "gate_biases = true\n"
      "per_class_scorer = 1\n"
      "normalization = per-row\n"
      "ap_mode = eleven-point\n"
      "ap_ranking = score\n"
      "output_dir = runs/a b\n");
  REQUIRE(c.seed.has_value());
  CHECK(*c.seed == 42);
  CHECK(c.steps == 2);
  CHECK(c.epsilon1 == 0.5);
  CHECK(c.gate_biases);
  CHECK(c.per_class_scorer);
  CHECK(c.normalization == Normalization::kPerRow);
  CHECK(c.ap_mode == ApMode::kElevenPoint);
  CHECK(c.ap_ranking == ApRanking::kScore);
  CHECK(c.output_dir == "runs/a b");
  CHECK(c.rank == 256);
}

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK_FALSE(c.seed.has_value());
  CHECK(c.feature_dim == 64);
  CHECK(c.output_dim == 64);
  CHECK(c.rank == 256);
  CHECK(c.steps == 3);
  CHECK(c.epsilon1 == 0.3);
  CHECK(c.epsilon2 == 0.7);
  CHECK(c.prune_threshold == 0.01);
  CHECK(c.sgd_lr == 0.01);
  CHECK(c.sgd_momentum == 0.9);
  CHECK(c.adam_lr == 1e-4);
  CHECK(c.batch_size == 32);
  CHECK(c.epochs == 50);
  CHECK(c.ablate_neighbors_only);
  CHECK(c.ap_ranking == ApRanking::kProbability);
}

TEST_CASE("unknown, duplicate and ill-typed keys are rejected with the line number") {
  CHECK(contains(message_of("seed = 1\nstepz = 2\n"), "config line 2"));
  CHECK(contains(message_of("seed = 1\nstepz = 2\n"), "unknown key 'stepz'"));
  CHECK(contains(message_of("steps = 1\nsteps = 2\n"), "duplicate key 'steps'"));
  CHECK(contains(message_of("steps = two\n"), "config line 1"));
  CHECK_FALSE(message_of("steps = 2.5\n").empty());
  CHECK_FALSE(message_of("epsilon1 = 0.3x\n").empty());
  CHECK_FALSE(message_of("gate_biases = yes\n").empty());
  CHECK_FALSE(message_of("normalization = max\n").empty());
  CHECK_FALSE(message_of("ap_ranking = logits\n").empty());
  CHECK_FALSE(message_of("seed = -1\n").empty());
  CHECK(contains(message_of("just text\n"), "expected key = value"));
}

TEST_CASE("to_text round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<Real> unit(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    RunConfig c;
    c.seed = rng();
    c.epsilon1 = unit(rng);
    c.epsilon2 = unit(rng);
    c.sgd_lr = unit(rng) / 7;
    c.adam_eps = unit(rng) * 1e-9;
    c.steps = static_cast<int>(rng() % 5);
    c.no_attention = trial % 2 == 0;
    c.ablate_neighbors_only = trial % 3 == 0;
    c.normalization = trial % 2 ? Normalization::kPerRow : Normalization::kGlobalMax;
    c.ap_ranking = trial % 4 ? ApRanking::kProbability : ApRanking::kScore;
    c.graph = "g" + std::to_string(trial) + ".txt";
    const std::string text = to_text(c);
    const RunConfig back = parse_run_config(text);
    CHECK(to_text(back) == text);
    CHECK(back.seed == c.seed);
    CHECK(back.epsilon1 == c.epsilon1);
    CHECK(back.adam_eps == c.adam_eps);
    CHECK(back.graph == c.graph);
  }
}

TEST_CASE("to_text omits unset keys") {
  const std::string text = to_text(RunConfig{});
  CHECK_FALSE(contains(text, "seed"));
  CHECK_FALSE(contains(text, "train_data"));
  CHECK(contains(text, "rank = 256\n"));
}

TEST_CASE("set_option applies one override and checks it") {
  RunConfig c;
  set_option(c, " rank ", " 16 ");
  CHECK(c.rank == 16);
  CHECK_THROWS_AS(set_option(c, "nope", "1"), ValidationError);
  CHECK_THROWS_AS(set_option(c, "rank", "x"), ValidationError);
}

TEST_CASE("validate") {
  RunConfig c;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("seed is required"), ValidationError);
  CHECK_THROWS_AS(c.require_seed(), ValidationError);
  c.seed = 1;
  CHECK_NOTHROW(validate(c));

  auto rejects = [&](auto mutate) {
    RunConfig bad = c;
    mutate(bad);
    CHECK_THROWS_AS(validate(bad), ValidationError);
  };
  rejects([](RunConfig& x) { x.epsilon1 = 0; });
  rejects([](RunConfig& x) { x.epsilon1 = 1; });
  rejects([](RunConfig& x) { x.epsilon2 = 1.5; });
  rejects([](RunConfig& x) { x.prune_threshold = 1; });
  rejects([](RunConfig& x) { x.steps = -1; });
  rejects([](RunConfig& x) { x.rank = 0; });
  rejects([](RunConfig& x) { x.union_dim = x.person_dim = x.geometry_dim = 0; });
  rejects([](RunConfig& x) { x.clutter_rate = 1.5; });
  rejects([](RunConfig& x) { x.train_samples = 0; });
  rejects([](RunConfig& x) { x.batch_size = 0; });
  rejects([](RunConfig& x) { x.random_attention = x.no_attention = true; });

  RunConfig no_val = c;
  no_val.val_samples = 0;
  CHECK_NOTHROW(validate(no_val));
}

TEST_CASE("ablation flags map to attention modes") {
  RunConfig c;
  c.seed = 5;
  CHECK(model_config(c, 3, 4).attention == AttentionMode::kLearned);
  c.no_attention = true;
  CHECK(model_config(c, 3, 4).attention == AttentionMode::kMaskOnly);
  c.ablate_neighbors_only = false;
  CHECK(model_config(c, 3, 4).attention == AttentionMode::kNone);
  c.no_attention = false;
  c.random_attention = true;
  CHECK(model_config(c, 3, 4).attention == AttentionMode::kRandom);
  c.ablate_neighbors_only = true;
  CHECK(model_config(c, 3, 4).attention == AttentionMode::kRandomMasked);
  CHECK(model_config(c, 3, 4).attention_seed == 5);
}

TEST_CASE("random adjacency keeps node names and is seeded") {
  const KnowledgeGraph built({"a", "b"}, {"x", "y", "z"}, Matrix::Zero(2, 3));
  RunConfig c;
  c.seed = 9;
  CHECK(effective_graph(c, built) == built);
  c.random_adjacency = true;
  const KnowledgeGraph g1 = effective_graph(c, built);
  const KnowledgeGraph g2 = effective_graph(c, built);
  CHECK(g1.object_names() == built.object_names());
  CHECK(g1 == g2);
  CHECK(g1.edge_count() > 0);
}

}  // TEST_SUITE
