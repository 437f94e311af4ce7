#include <random>

#include "doctest.h"
#include "grm/attention.hpp"
#include "grm/model.hpp"
#include "support.hpp"

using namespace grm;

namespace {

ParamGroup random_attention_params(int D, int rank, std::mt19937_64& rng) {
  ParamGroup g("attention", OptimizerTag::kSgd);
  g.add("U_a", test::uniform(rank, D, rng));
  g.add("V_a", test::uniform(rank, D, rng));
  g.add("w_a", test::uniform(rank, 1, rng));
  g.add("b_a", test::uniform(1, 1, rng));
  return g;
}

ParamGroup zeroed(ParamGroup g) {
  for (auto& e : g.entries()) e.value.setZero();
  return g;
}

ParamGroup with_entry(ParamGroup g, const std::string& name, const Matrix& value) {
  g.at(name) = value;
  return g;
}

GraphState random_state(int nodes, int D, std::mt19937_64& rng) {
  GraphState s;
  s.H = test::uniform(nodes, D, rng);
  s.X = test::uniform(nodes, D, rng);
  return s;
}

ParamGroup shared_scorer(int k, int n, std::mt19937_64& rng) {
  ParamGroup g("scorer", OptimizerTag::kSgd);
  g.add("W", test::uniform(1, k * (n + 1), rng));
  g.add("b", test::uniform(1, 1, rng));
  return g;
}

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("zero parameters give one half on neighbours and zero elsewhere") {
  std::mt19937_64 rng(1);
  const KnowledgeGraph g = test::random_graph(3, 5, 0.5, rng);
  const GraphState st = random_state(8, 6, rng);
  const auto a = attention_coefficients(st, g, zeroed(random_attention_params(6, 4, rng)));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) CHECK(a.alpha(i, j) == (g.weight(i, j) != 0 ? 0.5 : 0.0));
}

TEST_CASE("a relationship without neighbours gets an all-zero row") {
  std::mt19937_64 rng(2);
  Matrix w = Matrix::Constant(2, 3, 0.5);
  w.row(1).setZero();
  const KnowledgeGraph g(default_names("r", 2), default_names("o", 3), w);
  const auto a = attention_coefficients(random_state(5, 4, rng), g, random_attention_params(4, 3, rng));
  CHECK(a.alpha.row(1).isZero(0));
  CHECK((a.alpha.row(0).array() > 0).all());
}

TEST_CASE("masking is exact and coefficients lie strictly inside (0,1)") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const KnowledgeGraph g = test::random_graph(4, 6, 0.4, rng);
    const auto a = attention_coefficients(random_state(10, 5, rng), g, random_attention_params(5, 4, rng));
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 6; ++j) {
        if (g.weight(i, j) == 0) {
          CHECK(a.alpha(i, j) == 0.0);
        } else {
          CHECK(a.alpha(i, j) > 0.0);
          CHECK(a.alpha(i, j) < 1.0);
        }
      }
    }
  }
}

TEST_CASE("attention rows are not normalised to one") {
  Matrix w = Matrix::Zero(1, 3);
  w << 1, 1, 1;
  const KnowledgeGraph g({"r"}, {"a", "b", "c"}, w);
  std::mt19937_64 rng(4);
  const auto a = attention_coefficients(random_state(4, 3, rng), g, zeroed(random_attention_params(3, 2, rng)));
  CHECK(a.alpha.row(0).sum() == 1.5);
}

TEST_CASE("attention gradient at toy dimensions") {
  std::mt19937_64 rng(5);
  const KnowledgeGraph g = test::random_graph(3, 5, 0.6, rng);
  const GraphState st = random_state(8, 10, rng);
  const ParamGroup p = random_attention_params(10, 8, rng);
  const Matrix C = test::uniform(3, 5, rng);
  AttentionTrace tr;
  const auto a = attention_coefficients(st, g, p, &tr);
  ParamGroup grads = zeroed(p);
  const Matrix dH = attention_backward(st, tr, a.alpha, C, p, grads);
  auto loss = [&](const Matrix& H, const ParamGroup& q) {
    GraphState s = st;
    s.H = H;
    return (attention_coefficients(s, g, q).alpha.array() * C.array()).sum();
  };
  CHECK(test::max_rel_error(dH, test::numeric_gradient([&](const Matrix& v) { return loss(v, p); }, st.H)) < 1e-4);
  for (const auto& e : p.entries()) {
    auto f = [&](const Matrix& v) { return loss(st.H, with_entry(p, e.name, v)); };
    CHECK(test::max_rel_error(grads.at(e.name), test::numeric_gradient(f, e.value)) < 1e-4);
  }
}

TEST_CASE("random attention is seeded, masked and inside (0,1)") {
  std::mt19937_64 rng(6);
  const KnowledgeGraph g = test::random_graph(4, 6, 0.5, rng);
  const Matrix mask = neighbor_mask(g);
  const Matrix a = random_attention(mask, 3, 17);
  CHECK(a == random_attention(mask, 3, 17));
  CHECK_FALSE(a == random_attention(mask, 3, 18));
  CHECK_FALSE(a == random_attention(mask, 4, 17));
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (mask.data()[k] == 0) {
      CHECK(a.data()[k] == 0);
    } else {
      CHECK(a.data()[k] > 0);
      CHECK(a.data()[k] < 1);
    }
  }
}

TEST_CASE("feature assembly") {
  std::mt19937_64 rng(7);
  const Matrix O = test::uniform(4, 3, rng);  // two relationships, two objects
  Matrix alpha(2, 2);
  alpha << 0.5, 0.25, 0, 0;
  Vector expected(9);
  expected << O.row(0).transpose(), 0.5 * O.row(2).transpose(), 0.25 * O.row(3).transpose();
  CHECK(assemble_features(O, alpha, 0) == expected);

  Vector masked(9);
  masked << O.row(1).transpose(), Vector::Zero(6);
  CHECK(assemble_features(O, alpha, 1) == masked);

  Vector plain(9);
  plain << O.row(1).transpose(), O.row(2).transpose(), O.row(3).transpose();
  CHECK(assemble_features(O, Matrix::Ones(2, 2), 1) == plain);

  CHECK_THROWS_AS(assemble_features(O, alpha, 2), IndexError);
  CHECK_THROWS_AS(assemble_features(O, Matrix::Ones(2, 3), 0), ShapeError);
}

TEST_CASE("scores equal W f_i + b for shared and per-class scorers") {
  std::mt19937_64 rng(8);
  const int m = 3, n = 4, k = 5;
  const Matrix O = test::uniform(m + n, k, rng);
  const Matrix alpha = test::uniform(m, n, rng, 0, 1);
  const ParamGroup shared = shared_scorer(k, n, rng);
  const Vector s = score_all(O, alpha, shared);
  for (int i = 0; i < m; ++i) {
    const Real expected = shared.at("W").row(0).dot(assemble_features(O, alpha, i)) + shared.at("b")(0, 0);
    CHECK(s(i) == doctest::Approx(expected).epsilon(1e-13));
  }

  ParamGroup per_class("scorer", OptimizerTag::kSgd);
  per_class.add("W", test::uniform(m, k * (n + 1), rng));
  per_class.add("b", test::uniform(m, 1, rng));
  const Vector t = score_all(O, alpha, per_class);
  for (int i = 0; i < m; ++i) {
    const Real expected = per_class.at("W").row(i).dot(assemble_features(O, alpha, i)) + per_class.at("b")(i, 0);
    CHECK(t(i) == doctest::Approx(expected).epsilon(1e-13));
  }

  ParamGroup zero = zeroed(shared);
  zero.at("b")(0, 0) = 0.75;
  CHECK(score_all(O, alpha, zero) == Vector::Constant(m, 0.75));

  ParamGroup bad("scorer", OptimizerTag::kSgd);
  bad.add("W", Matrix::Zero(1, k * n));
  bad.add("b", Matrix::Zero(1, 1));
  CHECK_THROWS_AS(score_all(O, alpha, bad), ShapeError);
}

TEST_CASE("perturbing one coefficient changes a score iff its weight block is nonzero") {
  std::mt19937_64 rng(9);
  const int m = 3, n = 4, k = 5;
  const Matrix O = test::uniform(m + n, k, rng);
  const Matrix alpha = test::uniform(m, n, rng, 0.1, 0.9);
  ParamGroup scorer = shared_scorer(k, n, rng);
  scorer.at("W").middleCols(k * 3, k).setZero();  // weight block of object 2
  const Vector base = score_all(O, alpha, scorer);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      Matrix a = alpha;
      a(i, j) += 0.125;
      const Vector s = score_all(O, a, scorer);
      for (int q = 0; q < m; ++q) {
        const bool changed = s(q) != base(q);
        CHECK(changed == (q == i && j != 2));
      }
    }
  }
}

TEST_CASE("scorer gradient for both variants") {
  std::mt19937_64 rng(10);
  const int m = 3, n = 4, k = 5;
  const Matrix O = test::uniform(m + n, k, rng);
  const Matrix alpha = test::uniform(m, n, rng, 0, 1);
  const Vector c = test::uniform_vec(m, rng);
  ParamGroup per_class("scorer", OptimizerTag::kSgd);
  per_class.add("W", test::uniform(m, k * (n + 1), rng));
  per_class.add("b", test::uniform(m, 1, rng));
  for (const ParamGroup& p : {shared_scorer(k, n, rng), per_class}) {
    ParamGroup grads = zeroed(p);
    const ScoreGrad g = score_all_backward(O, alpha, c, p, grads);
    auto loss = [&](const Matrix& o, const Matrix& a, const ParamGroup& q) { return c.dot(score_all(o, a, q)); };
    CHECK(test::max_rel_error(g.dO, test::numeric_gradient([&](const Matrix& v) { return loss(v, alpha, p); }, O)) < 1e-4);
    CHECK(test::max_rel_error(g.dalpha, test::numeric_gradient([&](const Matrix& v) { return loss(O, v, p); }, alpha)) < 1e-4);
    for (const auto& e : p.entries()) {
      auto f = [&](const Matrix& v) { return loss(O, alpha, with_entry(p, e.name, v)); };
      CHECK(test::max_rel_error(grads.at(e.name), test::numeric_gradient(f, e.value)) < 1e-4);
    }
  }
}

}
