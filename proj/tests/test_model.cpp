#include <random>

#include "doctest.h"
#include "grm/model.hpp"
#include "support.hpp"

using namespace grm;

namespace {

// Biases start at zero; give them values so their gradients are exercised.
ParamSet randomized(const ModelConfig& c, std::uint64_t seed) {
  ParamSet p = init_params(c, seed);
  std::mt19937_64 rng(seed + 1);
  for (auto& g : p.groups())
    for (auto& e : g.entries())
      if (e.value.cols() == 1 && e.name != "w_a") e.value = test::uniform(e.value.rows(), 1, rng, -0.5, 0.5);
  return p;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("full loss gradient at toy dimensions") {
  std::mt19937_64 rng(1);
  const ModelConfig c = test::toy_config(3, 5, 8, 2, 8);
  const KnowledgeGraph g = test::random_graph(3, 5, 0.6, rng);
  const Sample s = test::random_sample(c.dims, rng);
  const auto r = grad_check(
      [&](const ParamSet& p, ParamSet* grads) { return loss_and_gradient(s, g, p, c, grads); },
      randomized(c, 2), 1e-5);
  INFO("worst entry " << r.worst_entry);
  CHECK(r.max_relative_error < 1e-3);
}

TEST_CASE("loss gradient with gate biases and a per-class scorer") {
  std::mt19937_64 rng(3);
  ModelConfig c = test::toy_config(3, 4, 5, 2, 4);
  c.gate_biases = true;
  c.per_class_scorer = true;
  const KnowledgeGraph g = test::random_graph(3, 4, 0.6, rng);
  const Sample s = test::random_sample(c.dims, rng);
  const auto r = grad_check(
      [&](const ParamSet& p, ParamSet* grads) { return loss_and_gradient(s, g, p, c, grads); },
      randomized(c, 4), 1e-5);
  INFO("worst entry " << r.worst_entry);
  CHECK(r.max_relative_error < 1e-3);
}

TEST_CASE("loss gradient under every fixed attention mode") {
  std::mt19937_64 rng(5);
  for (const auto mode : {AttentionMode::kRandom, AttentionMode::kNone, AttentionMode::kRandomMasked,
                          AttentionMode::kMaskOnly}) {
    ModelConfig c = test::toy_config(2, 3, 4, 1, 3);
    c.attention = mode;
    c.attention_seed = 9;
    const KnowledgeGraph g = test::random_graph(2, 3, 0.6, rng);
    const Sample s = test::random_sample(c.dims, rng);
    ParamSet p = randomized(c, 6);
    ParamSet grads = p.zeros_like();
    loss_and_gradient(s, g, p, c, &grads);
    CHECK(grads.group("attention").entries()[0].value.isZero(0));
    const auto r = grad_check(
        [&](const ParamSet& q, ParamSet* gr) { return loss_and_gradient(s, g, q, c, gr); }, p, 1e-5);
    CHECK(r.max_relative_error < 1e-3);
  }
}

TEST_CASE("attention modes produce the documented coefficients") {
  std::mt19937_64 rng(7);
  ModelConfig c = test::toy_config();
  c.attention_seed = 11;
  const KnowledgeGraph g = test::random_graph(3, 5, 0.5, rng);
  const Sample s = test::random_sample(c.dims, rng, 42);
  const ParamSet p = init_params(c, 8);
  const Matrix mask = neighbor_mask(g);

  c.attention = AttentionMode::kMaskOnly;
  CHECK(forward(s, g, p, c).alpha == mask);
  c.attention = AttentionMode::kNone;
  CHECK(forward(s, g, p, c).alpha == Matrix::Ones(3, 5));
  c.attention = AttentionMode::kRandomMasked;
  CHECK(forward(s, g, p, c).alpha == random_attention(mask, 11, 42));
  c.attention = AttentionMode::kRandom;
  const Matrix all = forward(s, g, p, c).alpha;
  CHECK(all == random_attention(Matrix::Ones(3, 5), 11, 42));
  CHECK((all.array() > 0).all());
}

TEST_CASE("forward is deterministic and finite on fuzzed inputs") {
  std::mt19937_64 rng(9);
  const ModelConfig c = test::toy_config();
  for (int trial = 0; trial < 30; ++trial) {
    const KnowledgeGraph g = test::random_graph(3, 5, 0.5, rng);
    const Sample s = test::random_sample(c.dims, rng, trial);
    const ParamSet p = init_params(c, trial);
    const ForwardResult a = forward(s, g, p, c);
    const ForwardResult b = forward(s, g, p, c);
    CHECK(a.scores == b.scores);
    CHECK(a.alpha == b.alpha);
    CHECK(a.scores.size() == 3);
    CHECK(a.scores.allFinite());
  }
}

TEST_CASE("a relationship without neighbours ignores object features") {
  std::mt19937_64 rng(10);
  const ModelConfig c = test::toy_config();
  Matrix w = test::uniform(3, 5, rng, 0.2, 1.0);
  w.row(1).setZero();
  const KnowledgeGraph g(default_names("r", 3), default_names("o", 5), w.unaryExpr(&quantize_micro));
  const ParamSet p = randomized(c, 11);
  Sample s = test::random_sample(c.dims, rng);
  const ForwardResult before = forward(s, g, p, c);
  for (auto& d : s.detections) d.feature.setZero();
  const ForwardResult after = forward(s, g, p, c);
  CHECK(after.scores(1) == before.scores(1));
  CHECK(after.scores(0) != before.scores(0));
}

TEST_CASE("errors name the pipeline stage") {
  std::mt19937_64 rng(12);
  const ModelConfig c = test::toy_config();
  const KnowledgeGraph g = test::random_graph(3, 5, 0.5, rng);
  Sample s = test::random_sample(c.dims, rng);
  s.f_p1 = Vector::Zero(1);
  try {
    forward(s, g, init_params(c, 1), c);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("encode_pair") != std::string::npos);
  }
  ModelConfig bad = c;
  bad.steps = -1;
  CHECK_THROWS_AS(init_params(bad, 1), ValidationError);
}

TEST_CASE("initialisation bounds weights by fan-in and sets biases") {
  const ModelConfig c = test::toy_config();
  const ParamSet p = init_params(c, 3);
  CHECK(p == init_params(c, 3));
  CHECK_FALSE(p == init_params(c, 4));
  CHECK(p.group("ggnn").optimizer() == OptimizerTag::kAdam);
  for (const char* group : {"encoder", "output", "attention", "scorer"}) CHECK(p.group(group).optimizer() == OptimizerTag::kSgd);
  const Matrix& W = p.at("encoder", "W");
  CHECK(W.cwiseAbs().maxCoeff() <= 1 / std::sqrt(static_cast<Real>(W.cols())));
  CHECK(p.at("encoder", "b").isZero(0));
  CHECK(p.at("attention", "b_a")(0, 0) == kAttentionBiasInit);
  CHECK(p.at("scorer", "W").cols() == 8 * 6);
}

}
