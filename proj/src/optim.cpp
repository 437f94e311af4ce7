#include "grm/optim.hpp"

#include <cmath>

namespace grm {

namespace {

void require_matching(const ParamGroup& group, const ParamGroup& grads, const char* what) {
  const auto p = group.entries();
  const auto g = grads.entries();
  if (p.size() != g.size()) {
    throw ShapeError(std::string(what) + ": group " + group.name() + " has " +
                     std::to_string(p.size()) + " tensors, gradient has " +
                     std::to_string(g.size()));
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].value.rows() != g[i].value.rows() || p[i].value.cols() != g[i].value.cols()) {
      throw ShapeError(std::string(what) + ": " + group.name() + "/" + p[i].name + " " +
                       shape_of(p[i].value) + " vs gradient " + shape_of(g[i].value));
    }
  }
}

void ensure_buffers(std::vector<Matrix>& buffers, const ParamGroup& group) {
  if (buffers.size() == group.entries().size()) return;
  buffers.clear();
  for (const auto& e : group.entries()) {
    buffers.push_back(Matrix::Zero(e.value.rows(), e.value.cols()));
  }
}

}  // namespace

void sgd_step(ParamGroup& group, const ParamGroup& grads, SgdState& state,
              const SgdOptions& options) {
  if (!(options.lr >= 0) || !(options.momentum >= 0 && options.momentum < 1)) {
    throw ValidationError("sgd_step: need lr >= 0 and momentum in [0,1)");
  }
  require_matching(group, grads, "sgd_step");
  ensure_buffers(state.velocity, group);
  auto params = group.entries();
  const auto g = grads.entries();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& v = state.velocity[i];
    v = options.momentum * v + g[i].value;
    params[i].value -= options.lr * v;
  }
}

void adam_step(ParamGroup& group, const ParamGroup& grads, AdamState& state,
               const AdamOptions& options) {
  if (!(options.lr >= 0) || !(options.beta1 >= 0 && options.beta1 < 1) ||
      !(options.beta2 >= 0 && options.beta2 < 1) || !(options.eps > 0)) {
    throw ValidationError("adam_step: need lr >= 0, betas in [0,1) and eps > 0");
  }
  require_matching(group, grads, "adam_step");
  ensure_buffers(state.first, group);
  ensure_buffers(state.second, group);
  ++state.step;
  const Real c1 = 1 - std::pow(options.beta1, static_cast<Real>(state.step));
  const Real c2 = 1 - std::pow(options.beta2, static_cast<Real>(state.step));
  auto params = group.entries();
  const auto g = grads.entries();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first[i];
    Matrix& v = state.second[i];
    m = options.beta1 * m + (1 - options.beta1) * g[i].value;
    v = options.beta2 * v + (1 - options.beta2) * g[i].value.cwiseAbs2();
    params[i].value.array() -=
        options.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + options.eps);
  }
}

GroupOptimizer::GroupOptimizer(const ParamSet& params, SgdOptions sgd, AdamOptions adam)
    : sgd_(sgd), adam_(adam), sgd_states_(params.groups().size()),
      adam_states_(params.groups().size()) {}

void GroupOptimizer::step(ParamSet& params, const ParamSet& grads) {
  require_same_layout(params, grads, "GroupOptimizer::step");
  auto groups = params.groups();
  const auto gg = grads.groups();
  if (groups.size() != sgd_states_.size()) {
    throw ShapeError("GroupOptimizer::step: parameter set changed shape");
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].optimizer() == OptimizerTag::kAdam) {
      adam_step(groups[i], gg[i], adam_states_[i], adam_);
    } else {
      sgd_step(groups[i], gg[i], sgd_states_[i], sgd_);
    }
  }
}

}  // namespace grm
