#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grm/knowledge_graph.hpp"
#include "grm/model_config.hpp"
#include "grm/sample.hpp"
#include "grm/types.hpp"

namespace grm::test {

inline Matrix uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, Real lo = -1,
                      Real hi = 1) {
  std::uniform_real_distribution<Real> dist(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = dist(rng);
  return m;
}

inline Vector uniform_vec(Eigen::Index n, std::mt19937_64& rng, Real lo = -1, Real hi = 1) {
  return uniform(n, 1, rng, lo, hi);
}

// Central difference of a scalar function of one matrix, entry by entry.
template <class Fn>
Matrix numeric_gradient(Fn&& f, Matrix x, Real step = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const Real saved = x.data()[k];
    x.data()[k] = saved + step;
    const Real up = f(x);
    x.data()[k] = saved - step;
    const Real down = f(x);
    x.data()[k] = saved;
    g.data()[k] = (up - down) / (2 * step);
  }
  return g;
}

inline Real max_rel_error(const Matrix& analytic, const Matrix& numeric) {
  Real worst = 0;
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    const Real a = analytic.data()[k];
    const Real n = numeric.data()[k];
    const Real denom = std::max({std::abs(a), std::abs(n), 1e-8});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

// Random bipartite graph with roughly `density` of the M x N block nonzero.
inline KnowledgeGraph random_graph(int m, int n, Real density, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> unit(0, 1);
  Matrix w = Matrix::Zero(m, n);
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (unit(rng) < density) w.data()[k] = quantize_micro(0.05 + 0.95 * unit(rng));
  }
  return KnowledgeGraph(default_names("r", m), default_names("o", n), w);
}

inline ModelConfig toy_config(int m = 3, int n = 5, int d = 8, int steps = 2, int rank = 8) {
  ModelConfig c;
  c.dims.union_dim = 4;
  c.dims.person_dim = 3;
  c.dims.geometry_dim = 2;
  c.dims.feature_dim = d;
  c.dims.output_dim = d;
  c.dims.rank = rank;
  c.dims.relationships = m;
  c.dims.objects = n;
  c.steps = steps;
  return c;
}

inline Sample random_sample(const ModelDims& dims, std::mt19937_64& rng, std::int64_t id = 0) {
  std::uniform_real_distribution<Real> unit(0, 1);
  Sample s;
  s.id = id;
  s.f_union = uniform_vec(dims.union_dim, rng);
  s.f_p1 = uniform_vec(dims.person_dim, rng);
  s.f_p2 = uniform_vec(dims.person_dim, rng);
  s.geometry = uniform_vec(dims.geometry_dim, rng);
  for (int o = 0; o < dims.objects; ++o) {
    if (unit(rng) < 0.6) {
      Detection d;
      d.object = o;
      d.confidence = quantize_micro(unit(rng));
      d.feature = uniform_vec(dims.feature_dim, rng);
      s.detections.push_back(d);
    }
  }
  s.label = std::uniform_int_distribution<int>(0, dims.relationships - 1)(rng);
  return s;
}

// Precision at the rank of each positive, ranks found by counting how many
// samples outrank each one (higher score, or equal score and lower index).
inline Real hand_ap(const std::vector<Real>& scores, const std::vector<bool>& pos) {
  const std::size_t n = scores.size();
  Real sum = 0;
  int total = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (!pos[a]) continue;
    ++total;
    int rank = 1;
    int hits_above = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const bool above = scores[b] > scores[a] || (scores[b] == scores[a] && b < a);
      if (above) {
        ++rank;
        if (pos[b]) ++hits_above;
      }
    }
    sum += static_cast<Real>(hits_above + 1) / rank;
  }
  return total ? sum / total : 0;
}

}  // namespace grm::test
