#pragma once

#include <string>
#include <vector>

#include "pathcast/params.hpp"
#include "pathcast/tensor.hpp"

namespace pathcast {

enum class Activation { kTanh, kRelu, kSigmoid };

Tensor activate(const Tensor& x, Activation act);

// Linear layers with an activation between them (none after the last).
// dims = {in, hidden..., out}; a two-entry dims list is a plain linear map.
struct Mlp {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  Activation act = Activation::kTanh;

  Tensor operator()(const Tensor& x) const;
  std::size_t in_dim() const { return weights.front().cols(); }
  std::size_t out_dim() const { return weights.back().rows(); }
};

// final_bias=false leaves the last layer without a trainable offset, for
// heads whose output level is unidentifiable (pairwise or ranking losses).
Mlp make_mlp(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& dims,
             Activation act, Rng& rng, bool final_bias = true);

// Build an Mlp from explicit tensors (tests configure identity/ones maps).
Mlp mlp_from(std::vector<Tensor> weights, std::vector<Tensor> biases,
             Activation act = Activation::kTanh);

struct GruCell {
  Tensor wz, uz, bz;
  Tensor wr, ur, br;
  Tensor wn, un, bn;

  // h' = (1-z) * h + z * tanh(Wn m + Un (r*h) + bn)
  Tensor step(const Tensor& message, const Tensor& h) const;
};

GruCell make_gru(ParamStore& store, const std::string& prefix, std::size_t msg_dim,
                 std::size_t state_dim, Rng& rng);

}  // namespace pathcast
