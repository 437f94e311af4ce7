#include "grm/attention.hpp"

#include "grm/core_math.hpp"

namespace grm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

using ConstBlocks = Eigen::Map<const Matrix>;
using Blocks = Eigen::Map<Matrix>;

void check_scorer(const Matrix& O, const Matrix& alpha, const ParamGroup& scorer) {
  const Eigen::Index m = alpha.rows();
  const Eigen::Index n = alpha.cols();
  const Matrix& W = scorer.at("W");
  const Matrix& b = scorer.at("b");
  if (O.rows() != m + n) {
    throw ShapeError("score_all: output features " + shape_of(O) + " vs attention " +
                     shape_of(alpha));
  }
  const bool shared = W.rows() == 1 && b.size() == 1;
  const bool per_class = W.rows() == m && b.size() == m;
  if ((!shared && !per_class) || W.cols() != O.cols() * (n + 1)) {
    throw ShapeError("score_all: scorer W " + shape_of(W) + ", b " + shape_of(b) +
                     " incompatible with " + std::to_string(m) + " relationships, " +
                     std::to_string(n) + " objects and output width " +
                     std::to_string(O.cols()));
  }
}

}  // namespace

Matrix neighbor_mask(const KnowledgeGraph& graph) {
  return (graph.block().array() != 0).cast<Real>().matrix();
}

AttentionMap attention_coefficients(const GraphState& state, const KnowledgeGraph& graph,
                                    const ParamGroup& attention, AttentionTrace* trace) {
  const int m = graph.relationship_count();
  const int n = graph.object_count();
  if (state.H.rows() != m + n) {
    throw ShapeError("attention_coefficients: states " + shape_of(state.H) + " vs " +
                     std::to_string(m + n) + " graph nodes");
  }
  const Matrix& U = attention.at("U_a");
  const Matrix& V = attention.at("V_a");
  const Matrix& w = attention.at("w_a");
  if (U.cols() != state.H.cols() || V.cols() != state.H.cols() || U.rows() != V.rows() ||
      w.size() != U.rows() || attention.at("b_a").size() != 1) {
    throw ShapeError("attention_coefficients: U_a " + shape_of(U) + ", V_a " + shape_of(V) +
                     ", w_a " + shape_of(w) + " vs hidden width " +
                     std::to_string(state.H.cols()));
  }
  Matrix P_r = (state.H.topRows(m) * U.transpose()).array().tanh().matrix();
  Matrix P_o = (state.H.bottomRows(n) * V.transpose()).array().tanh().matrix();
  // e_ij = sum_k w_k P_r(i,k) P_o(j,k) + b
  const Matrix weighted = P_r.array().rowwise() * w.reshaped().transpose().array();
  const Matrix E = (weighted * P_o.transpose()).array() + attention.at("b_a")(0, 0);
  Matrix mask = neighbor_mask(graph);

  AttentionMap out;
  out.alpha = (mask.array() != 0).select(sigmoid(E), 0.0);
  if (trace != nullptr) {
    trace->P_r = std::move(P_r);
    trace->P_o = std::move(P_o);
    trace->mask = std::move(mask);
  }
  return out;
}

Matrix attention_backward(const GraphState& state, const AttentionTrace& trace,
                          const Matrix& alpha, const Matrix& dalpha,
                          const ParamGroup& attention, ParamGroup& grads) {
  const Eigen::Index m = alpha.rows();
  const Eigen::Index n = alpha.cols();
  const auto w = attention.at("w_a").reshaped().transpose().array();
  const Matrix de =
      (dalpha.array() * alpha.array() * (1 - alpha.array()) * trace.mask.array()).matrix();

  grads.at("b_a")(0, 0) += de.sum();
  const Matrix deP_o = de * trace.P_o;                // M x rank
  const Matrix deTP_r = de.transpose() * trace.P_r;   // N x rank
  grads.at("w_a") += (trace.P_r.array() * deP_o.array()).colwise().sum().transpose().matrix();

  const Matrix dpre_r =
      ((deP_o.array().rowwise() * w) * (1 - trace.P_r.array().square())).matrix();
  const Matrix dpre_o =
      ((deTP_r.array().rowwise() * w) * (1 - trace.P_o.array().square())).matrix();
  grads.at("U_a").noalias() += dpre_r.transpose() * state.H.topRows(m);
  grads.at("V_a").noalias() += dpre_o.transpose() * state.H.bottomRows(n);

  Matrix dH(m + n, state.H.cols());
  dH.topRows(m).noalias() = dpre_r * attention.at("U_a");
  dH.bottomRows(n).noalias() = dpre_o * attention.at("V_a");
  return dH;
}

Matrix random_attention(const Matrix& mask, std::uint64_t seed, std::int64_t sample_id) {
  Matrix alpha = Matrix::Zero(mask.rows(), mask.cols());
  const std::uint64_t base = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(sample_id)));
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      if (mask(i, j) == 0) continue;
      const std::uint64_t bits =
          splitmix64(base + static_cast<std::uint64_t>(i * mask.cols() + j));
      // midpoint of a 2^-53 grid cell: never 0 or 1
      alpha(i, j) = (static_cast<Real>(bits >> 11) + 0.5) * 0x1.0p-53;
    }
  }
  return alpha;
}

Vector assemble_features(const Matrix& O, const Matrix& alpha, int relationship) {
  const Eigen::Index m = alpha.rows();
  const Eigen::Index n = alpha.cols();
  if (relationship < 0 || relationship >= m) {
    throw IndexError("assemble_features: relationship " + std::to_string(relationship) +
                     " outside [0," + std::to_string(m) + ")");
  }
  if (O.rows() != m + n) {
    throw ShapeError("assemble_features: output features " + shape_of(O) + " vs attention " +
                     shape_of(alpha));
  }
  const Eigen::Index k = O.cols();
  Vector f(k * (n + 1));
  f.head(k) = O.row(relationship).transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    f.segment(k * (j + 1), k) = alpha(relationship, j) * O.row(m + j).transpose();
  }
  return f;
}

Vector score_all(const Matrix& O, const Matrix& alpha, const ParamGroup& scorer) {
  check_scorer(O, alpha, scorer);
  const Eigen::Index m = alpha.rows();
  const Eigen::Index n = alpha.cols();
  const Eigen::Index k = O.cols();
  const Matrix& W = scorer.at("W");
  const Matrix& b = scorer.at("b");
  const auto O_r = O.topRows(m);
  const auto O_o = O.bottomRows(n);
  Vector s(m);
  if (W.rows() == 1 && b.size() == 1) {
    const ConstBlocks blocks(W.data(), n + 1, k);
    // q_j = w_j . o_oj
    const Vector q = (blocks.bottomRows(n).array() * O_o.array()).rowwise().sum();
    s = O_r * blocks.row(0).transpose() + alpha * q;
    s.array() += b(0, 0);
  } else {
    for (Eigen::Index i = 0; i < m; ++i) {
      const ConstBlocks blocks(W.row(i).data(), n + 1, k);
      const Vector q = (blocks.bottomRows(n).array() * O_o.array()).rowwise().sum();
      s(i) = O_r.row(i).dot(blocks.row(0)) + alpha.row(i).dot(q.transpose()) + b(i, 0);
    }
  }
  return s;
}

ScoreGrad score_all_backward(const Matrix& O, const Matrix& alpha, const Vector& dscores,
                             const ParamGroup& scorer, ParamGroup& grads) {
  check_scorer(O, alpha, scorer);
  const Eigen::Index m = alpha.rows();
  const Eigen::Index n = alpha.cols();
  const Eigen::Index k = O.cols();
  const Matrix& W = scorer.at("W");
  Matrix& dW = grads.at("W");
  Matrix& db = grads.at("b");
  const auto O_r = O.topRows(m);
  const auto O_o = O.bottomRows(n);

  ScoreGrad out{Matrix::Zero(m + n, k), Matrix::Zero(m, n)};
  if (W.rows() == 1 && db.size() == 1) {
    const ConstBlocks blocks(W.data(), n + 1, k);
    Blocks dblocks(dW.data(), n + 1, k);
    const Vector q = (blocks.bottomRows(n).array() * O_o.array()).rowwise().sum();
    const Vector dq = alpha.transpose() * dscores;
    dblocks.row(0) += dscores.transpose() * O_r;
    dblocks.bottomRows(n) += (O_o.array().colwise() * dq.array()).matrix();
    out.dO.topRows(m) = dscores * blocks.row(0);
    out.dO.bottomRows(n) = (blocks.bottomRows(n).array().colwise() * dq.array()).matrix();
    out.dalpha = dscores * q.transpose();
    db(0, 0) += dscores.sum();
  } else {
    for (Eigen::Index i = 0; i < m; ++i) {
      const ConstBlocks blocks(W.row(i).data(), n + 1, k);
      Blocks dblocks(dW.row(i).data(), n + 1, k);
      const Real ds = dscores(i);
      dblocks.row(0) += ds * O_r.row(i);
      out.dO.row(i) += ds * blocks.row(0);
      for (Eigen::Index j = 0; j < n; ++j) {
        out.dalpha(i, j) = ds * blocks.row(j + 1).dot(O_o.row(j));
        dblocks.row(j + 1) += ds * alpha(i, j) * O_o.row(j);
        out.dO.row(m + j) += ds * alpha(i, j) * blocks.row(j + 1);
      }
      db(i, 0) += ds;
    }
  }
  return out;
}

}  // namespace grm
