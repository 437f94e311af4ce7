#include "grm/ggnn.hpp"

#include "grm/core_math.hpp"

namespace grm {

namespace {

void require_rows_cols(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": got " + shape_of(m) + ", expected " +
                     shape_string(rows, cols));
  }
}

// X W^T (+ b when the group carries it)
Matrix gate_input(const Matrix& A, const Matrix& H, const ParamGroup& ggnn, const char* w,
                  const char* u, const char* b) {
  Matrix pre = A * ggnn.at(w).transpose();
  pre.noalias() += H * ggnn.at(u).transpose();
  if (ggnn.contains(b)) pre.rowwise() += ggnn.at(b).reshaped().transpose();
  return pre;
}

}  // namespace

Vector pair_input(const Sample& sample) {
  Vector x(sample.f_union.size() + sample.f_p1.size() + sample.f_p2.size() +
           sample.geometry.size());
  x << sample.f_union, sample.f_p1, sample.f_p2, sample.geometry;
  return x;
}

Vector encode_pair(const Sample& sample, const ParamGroup& encoder) {
  const Vector x = pair_input(sample);
  return linear(x, encoder.at("W"), encoder.at("b")).array().tanh().matrix();
}

GraphState init_hidden(const KnowledgeGraph& graph, const Vector& f_h, const Sample& sample,
                       Real threshold) {
  if (!(threshold > 0 && threshold < 1)) {
    throw ValidationError("init_hidden: object threshold must lie in (0,1)");
  }
  const int m = graph.relationship_count();
  const int n = graph.object_count();
  const Eigen::Index d = f_h.size();
  GraphState state;
  state.H = Matrix::Zero(m + n, d + 2);
  for (int r = 0; r < m; ++r) {
    state.H(r, 0) = 1;
    state.H.row(r).tail(d) = f_h.transpose();
  }
  std::vector<const Detection*> best(n, nullptr);
  for (const auto& det : sample.detections) {
    if (det.object < 0 || det.object >= n) {
      throw IndexError("init_hidden: sample " + std::to_string(sample.id) + " detection object " +
                       std::to_string(det.object) + " outside [0," + std::to_string(n) + ")");
    }
    if (det.confidence > threshold &&
        (best[det.object] == nullptr || det.confidence > best[det.object]->confidence)) {
      best[det.object] = &det;
    }
  }
  for (int o = 0; o < n; ++o) {
    state.H(m + o, 1) = 1;
    if (best[o] != nullptr) {
      if (best[o]->feature.size() != d) {
        throw ShapeError("init_hidden: object feature of length " +
                         std::to_string(best[o]->feature.size()) + " vs d = " +
                         std::to_string(d));
      }
      state.H.row(m + o).tail(d) = best[o]->feature.transpose();
    }
  }
  state.X = state.H;
  state.step = 0;
  return state;
}

Matrix aggregate(const Matrix& adjacency, const Matrix& H, const ParamGroup& ggnn) {
  if (adjacency.rows() != H.rows() || adjacency.cols() != H.rows()) {
    throw ShapeError("aggregate: adjacency " + shape_of(adjacency) + " vs states " +
                     shape_of(H));
  }
  const Matrix& b = ggnn.at("b");
  if (b.size() != H.cols()) {
    throw ShapeError("aggregate: bias " + shape_of(b) + " vs states " + shape_of(H));
  }
  Matrix A = adjacency.transpose() * H;
  A.rowwise() += b.reshaped().transpose();
  return A;
}

Matrix gru_update(const Matrix& A, const Matrix& H, const ParamGroup& ggnn, GruTrace* trace) {
  const Eigen::Index D = H.cols();
  require_rows_cols(A, H.rows(), D, "gru_update: aggregate");
  for (const char* name : {"W_z", "U_z", "W_r", "U_r", "W_h", "U_h"}) {
    require_rows_cols(ggnn.at(name), D, D, "gru_update: weight");
  }
  const Matrix Z = sigmoid(gate_input(A, H, ggnn, "W_z", "U_z", "b_z"));
  const Matrix R = sigmoid(gate_input(A, H, ggnn, "W_r", "U_r", "b_r"));
  const Matrix RH = R.cwiseProduct(H);
  const Matrix C = gate_input(A, RH, ggnn, "W_h", "U_h", "b_h").array().tanh().matrix();
  Matrix H_new = ((1 - Z.array()) * H.array() + Z.array() * C.array()).matrix();
  if (trace != nullptr) {
    trace->A = A;
    trace->H_prev = H;
    trace->Z = Z;
    trace->R = R;
    trace->C = C;
  }
  return H_new;
}

GraphState propagate(const KnowledgeGraph& graph, GraphState state, int steps,
                     const ParamGroup& ggnn, std::vector<GruTrace>* traces) {
  if (steps < 0) throw ValidationError("propagate: negative step count");
  for (int t = 0; t < steps; ++t) {
    const Matrix A = aggregate(graph.adjacency(), state.H, ggnn);
    if (traces != nullptr) {
      traces->emplace_back();
      state.H = gru_update(A, state.H, ggnn, &traces->back());
    } else {
      state.H = gru_update(A, state.H, ggnn);
    }
    ++state.step;
  }
  return state;
}

Matrix output_features(const GraphState& state, const ParamGroup& output) {
  if (state.X.rows() != state.H.rows() || state.X.cols() != state.H.cols()) {
    throw ShapeError("output_features: H " + shape_of(state.H) + " vs X " + shape_of(state.X));
  }
  Matrix HX(state.H.rows(), 2 * state.H.cols());
  HX << state.H, state.X;
  return affine_rows(HX, output.at("W"), output.at("b")).array().tanh().matrix();
}

GruGrad gru_update_backward(const GruTrace& tr, const Matrix& dH, const ParamGroup& ggnn,
                            ParamGroup& grads) {
  const auto& H = tr.H_prev;
  const auto Z = tr.Z.array();
  const auto R = tr.R.array();
  const auto C = tr.C.array();

  // h_new = h + z ⊙ (c - h)
  const Matrix dpre_z = (dH.array() * (C - H.array()) * Z * (1 - Z)).matrix();
  const Matrix dpre_c = (dH.array() * Z * (1 - C.square())).matrix();
  Matrix dH_prev = (dH.array() * (1 - Z)).matrix();

  const Matrix RH = tr.R.cwiseProduct(H);
  const Matrix dRH = dpre_c * ggnn.at("U_h");
  const Matrix dpre_r = (dRH.array() * H.array() * R * (1 - R)).matrix();
  dH_prev.array() += dRH.array() * R;

  Matrix dA = dpre_c * ggnn.at("W_h");
  dA.noalias() += dpre_z * ggnn.at("W_z");
  dA.noalias() += dpre_r * ggnn.at("W_r");
  dH_prev.noalias() += dpre_z * ggnn.at("U_z");
  dH_prev.noalias() += dpre_r * ggnn.at("U_r");

  grads.at("W_h").noalias() += dpre_c.transpose() * tr.A;
  grads.at("U_h").noalias() += dpre_c.transpose() * RH;
  grads.at("W_z").noalias() += dpre_z.transpose() * tr.A;
  grads.at("U_z").noalias() += dpre_z.transpose() * H;
  grads.at("W_r").noalias() += dpre_r.transpose() * tr.A;
  grads.at("U_r").noalias() += dpre_r.transpose() * H;
  if (grads.contains("b_z")) {
    grads.at("b_z").reshaped() += dpre_z.colwise().sum().transpose();
    grads.at("b_r").reshaped() += dpre_r.colwise().sum().transpose();
    grads.at("b_h").reshaped() += dpre_c.colwise().sum().transpose();
  }
  return {std::move(dA), std::move(dH_prev)};
}

Matrix aggregate_backward(const Matrix& adjacency, const Matrix& dA, ParamGroup& grads) {
  grads.at("b").reshaped() += dA.colwise().sum().transpose();
  return adjacency * dA;
}

Matrix propagate_backward(const Matrix& adjacency, const std::vector<GruTrace>& traces,
                          Matrix dH, const ParamGroup& ggnn, ParamGroup& grads) {
  for (auto it = traces.rbegin(); it != traces.rend(); ++it) {
    GruGrad g = gru_update_backward(*it, dH, ggnn, grads);
    dH = std::move(g.dH_prev);
    dH.noalias() += aggregate_backward(adjacency, g.dA, grads);
  }
  return dH;
}

OutputGrad output_features_backward(const GraphState& state, const Matrix& O, const Matrix& dO,
                                    const ParamGroup& output, ParamGroup& grads) {
  const Eigen::Index D = state.H.cols();
  const Matrix dpre = (dO.array() * (1 - O.array().square())).matrix();
  Matrix HX(state.H.rows(), 2 * D);
  HX << state.H, state.X;
  const auto g = affine_rows_backward(HX, output.at("W"), dpre);
  grads.at("W") += g.dW;
  grads.at("b").reshaped() += g.db;
  return {g.dX.leftCols(D), g.dX.rightCols(D)};
}

void encode_pair_backward(const Sample& sample, const Vector& f_h, const Vector& df_h,
                          const ParamGroup& encoder, ParamGroup& grads) {
  const Vector dpre = (df_h.array() * (1 - f_h.array().square())).matrix();
  const auto g = linear_backward(pair_input(sample), encoder.at("W"), dpre);
  grads.at("W") += g.dW;
  grads.at("b").reshaped() += g.db;
}

}  // namespace grm
