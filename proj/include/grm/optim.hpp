#pragma once

#include <cstdint>
#include <vector>

#include "grm/params.hpp"

namespace grm {

struct SgdOptions {
  Real lr = 0.01;
  Real momentum = 0.9;
};

struct AdamOptions {
  Real lr = 1e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
};

struct SgdState {
  std::vector<Matrix> velocity;
};

struct AdamState {
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  std::int64_t step = 0;
};

// v <- momentum v + g; p <- p - lr v
void sgd_step(ParamGroup& group, const ParamGroup& grads, SgdState& state,
              const SgdOptions& options);

// Bias-corrected Adam; the step counter advances once per call.
void adam_step(ParamGroup& group, const ParamGroup& grads, AdamState& state,
               const AdamOptions& options);

// Steps every group with the optimizer named by its tag.
class GroupOptimizer {
 public:
  GroupOptimizer(const ParamSet& params, SgdOptions sgd, AdamOptions adam);

  void step(ParamSet& params, const ParamSet& grads);

 private:
  SgdOptions sgd_;
  AdamOptions adam_;
  std::vector<SgdState> sgd_states_;
  std::vector<AdamState> adam_states_;
};

}  // namespace grm
