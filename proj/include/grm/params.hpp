#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grm/types.hpp"

namespace grm {

enum class OptimizerTag { kSgd, kAdam };

std::string_view to_string(OptimizerTag tag);
OptimizerTag parse_optimizer_tag(std::string_view text);

struct NamedTensor {
  std::string name;
  Matrix value;  // vectors are stored as n x 1
};

// A named collection of learnable tensors stepped by one optimizer.
class ParamGroup {
 public:
  ParamGroup(std::string name, OptimizerTag tag);

  void add(std::string name, Matrix value);

  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  const std::string& name() const { return name_; }
  OptimizerTag optimizer() const { return tag_; }
  std::span<NamedTensor> entries() { return entries_; }
  std::span<const NamedTensor> entries() const { return entries_; }
  Eigen::Index scalar_count() const;

  bool operator==(const ParamGroup& other) const;

 private:
  std::string name_;
  OptimizerTag tag_;
  std::vector<NamedTensor> entries_;
};

class ParamSet {
 public:
  ParamGroup& add_group(std::string name, OptimizerTag tag);

  ParamGroup& group(std::string_view name);
  const ParamGroup& group(std::string_view name) const;
  bool has_group(std::string_view name) const;

  Matrix& at(std::string_view group_name, std::string_view tensor_name) {
    return group(group_name).at(tensor_name);
  }
  const Matrix& at(std::string_view group_name, std::string_view tensor_name) const {
    return group(group_name).at(tensor_name);
  }

  std::span<ParamGroup> groups() { return groups_; }
  std::span<const ParamGroup> groups() const { return groups_; }

  // Same layout, every entry zero.
  ParamSet zeros_like() const;
  void set_zero();
  // this += scale * other; layouts must match.
  void add_scaled(const ParamSet& other, Real scale);
  void scale(Real factor);
  bool all_finite() const;
  Eigen::Index scalar_count() const;

  // Bitwise equality of names, tags, shapes and values.
  bool operator==(const ParamSet& other) const;

 private:
  std::vector<ParamGroup> groups_;
};

void require_same_layout(const ParamSet& a, const ParamSet& b, std::string_view what);

// Loss function for gradient checking. When `grads` is non-null it has the
// layout of the parameters, zeroed, and the function adds its analytic
// gradient into it.
using DifferentiableFn = std::function<Real(const ParamSet& params, ParamSet* grads)>;

struct GradCheckResult {
  Real max_relative_error = 0;
  std::string worst_entry;  // "group/name[row,col]"
  Eigen::Index checked = 0;
};

// Compares the analytic gradient with central differences entry by entry.
// Relative error is |ga - gn| / max(|ga|, |gn|, 1e-8).
GradCheckResult grad_check(const DifferentiableFn& fn, ParamSet params, Real step);

// Binary checkpoint: magic, version, a text header listing the provenance
// block and every tensor shape, then row-major little-endian float64 payloads.
struct Checkpoint {
  ParamSet params;
  // Free text, typically the run configuration. Stored line by line; it
  // comes back with every line newline-terminated.
  std::string provenance;
};

void save_checkpoint(const std::string& path, const ParamSet& params,
                     const std::string& provenance);
Checkpoint load_checkpoint(const std::string& path);

// Serialization to/from memory; the file routines wrap these.
std::string encode_checkpoint(const ParamSet& params, const std::string& provenance);
Checkpoint decode_checkpoint(std::string_view bytes);

}  // namespace grm
