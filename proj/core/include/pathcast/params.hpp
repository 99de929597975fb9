#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathcast/rng.hpp"
#include "pathcast/tensor.hpp"

namespace pathcast {

// Named trainable tensors plus per-parameter Adam state. Iteration order is
// registration order, which is fixed by model construction.
class ParamStore {
 public:
  Tensor add(const std::string& name, Tensor leaf);
  Tensor xavier(const std::string& name, std::size_t fan_out, std::size_t fan_in, Rng& rng);
  Tensor xavier_vec(const std::string& name, std::size_t n, Rng& rng);
  Tensor zeros_vec(const std::string& name, std::size_t n);

  bool has(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t total_values() const;

  void zero_grad();
  // Graph tensor: sum of squared L2 norms over all parameters.
  Tensor l2_penalty() const;

  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  std::uint64_t value_checksum() const;

 private:
  struct AdamState {
    std::vector<double> m, v;
    std::int64_t step = 0;
  };
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
  std::vector<AdamState> opt_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct CheckpointEntry {
  std::string name;
  std::vector<std::size_t> shape;
  bool trainable = false;
  std::vector<double> data;
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;
  std::map<std::string, std::string> meta;  // config snapshot and the like
};

// Manifest (<prefix>.json) plus a flat little-endian float64 blob
// (<prefix>.bin). Loading rejects manifest/blob size mismatches.
void save_checkpoint(const std::string& prefix, const ParamStore& params,
                     const std::vector<CheckpointEntry>& buffers,
                     const std::map<std::string, std::string>& meta = {});
Checkpoint load_checkpoint(const std::string& prefix);

// Overwrites store values from checkpoint entries by name; every trainable
// entry must match an existing parameter's shape.
void restore_params(ParamStore& store, const std::vector<CheckpointEntry>& entries);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_coord = 0;
  std::size_t checked = 0;
};

// Central differences on every coordinate of every parameter against one
// reverse-mode pass; loss_fn must be deterministic and is re-evaluated with
// gradients disabled for the probes.
GradCheckReport gradient_check(ParamStore& store, const std::function<Tensor()>& loss_fn,
                               double h = 1e-5);

}  // namespace pathcast
