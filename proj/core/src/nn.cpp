#include "pathcast/nn.hpp"

#include "pathcast/common.hpp"

namespace pathcast {

Tensor activate(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::kTanh: return tanh(x);
    case Activation::kRelu: return relu(x);
    case Activation::kSigmoid: return sigmoid(x);
  }
  throw NumericError("activate: unknown activation");
}

Tensor Mlp::operator()(const Tensor& x) const {
  if (weights.empty()) throw NumericError("Mlp: no layers");
  Tensor h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = linear(weights[l], h, biases[l]);
    if (l + 1 < weights.size()) h = activate(h, act);
  }
  return h;
}

Mlp make_mlp(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& dims,
             Activation act, Rng& rng, bool final_bias) {
  if (dims.size() < 2) throw NumericError("make_mlp: need at least in and out dims");
  Mlp mlp;
  mlp.act = act;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::string stem = prefix + ".l" + std::to_string(l);
    mlp.weights.push_back(store.xavier(stem + ".w", dims[l + 1], dims[l], rng));
    const bool last = l + 2 == dims.size();
    if (last && !final_bias) {
      mlp.biases.push_back(Tensor::zeros({dims[l + 1]}));  // fixed at zero
    } else {
      mlp.biases.push_back(store.zeros_vec(stem + ".b", dims[l + 1]));
    }
  }
  return mlp;
}

Mlp mlp_from(std::vector<Tensor> weights, std::vector<Tensor> biases, Activation act) {
  if (weights.size() != biases.size() || weights.empty())
    throw NumericError("mlp_from: mismatched layer lists");
  Mlp mlp;
  mlp.weights = std::move(weights);
  mlp.biases = std::move(biases);
  mlp.act = act;
  return mlp;
}

Tensor GruCell::step(const Tensor& message, const Tensor& h) const {
  const Tensor z = sigmoid(add(add(matmul(wz, message), matmul(uz, h)), bz));
  const Tensor r = sigmoid(add(add(matmul(wr, message), matmul(ur, h)), br));
  const Tensor cand = tanh(add(add(matmul(wn, message), matmul(un, elementwise_mul(r, h))), bn));
  std::vector<double> one(z.size(), 1.0);
  const Tensor ones = Tensor::vector(std::move(one));
  return add(elementwise_mul(sub(ones, z), h), elementwise_mul(z, cand));
}

GruCell make_gru(ParamStore& store, const std::string& prefix, std::size_t msg_dim,
                 std::size_t state_dim, Rng& rng) {
  GruCell g;
  g.wz = store.xavier(prefix + ".wz", state_dim, msg_dim, rng);
  g.uz = store.xavier(prefix + ".uz", state_dim, state_dim, rng);
  g.bz = store.zeros_vec(prefix + ".bz", state_dim);
  g.wr = store.xavier(prefix + ".wr", state_dim, msg_dim, rng);
  g.ur = store.xavier(prefix + ".ur", state_dim, state_dim, rng);
  g.br = store.zeros_vec(prefix + ".br", state_dim);
  g.wn = store.xavier(prefix + ".wn", state_dim, msg_dim, rng);
  g.un = store.xavier(prefix + ".un", state_dim, state_dim, rng);
  g.bn = store.zeros_vec(prefix + ".bn", state_dim);
  return g;
}

}  // namespace pathcast
