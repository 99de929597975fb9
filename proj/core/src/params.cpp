#include "pathcast/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "pathcast/common.hpp"

namespace pathcast {

Tensor ParamStore::add(const std::string& name, Tensor leaf) {
  if (index_.count(name)) throw NumericError("ParamStore: duplicate parameter: " + name);
  if (!leaf.defined()) throw NumericError("ParamStore: undefined tensor: " + name);
  leaf.node()->requires_grad = true;
  leaf.node()->ensure_grad();
  index_.emplace(name, params_.size());
  names_.push_back(name);
  params_.push_back(leaf);
  AdamState st;
  st.m.assign(leaf.size(), 0.0);
  st.v.assign(leaf.size(), 0.0);
  opt_.push_back(std::move(st));
  return leaf;
}

Tensor ParamStore::xavier(const std::string& name, std::size_t fan_out, std::size_t fan_in,
                          Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> data(fan_out * fan_in);
  for (auto& v : data) v = rng.uniform(-a, a);
  return add(name, Tensor::from(std::move(data), {fan_out, fan_in}));
}

Tensor ParamStore::xavier_vec(const std::string& name, std::size_t n, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(n + 1));
  std::vector<double> data(n);
  for (auto& v : data) v = rng.uniform(-a, a);
  return add(name, Tensor::vector(std::move(data)));
}

Tensor ParamStore::zeros_vec(const std::string& name, std::size_t n) {
  return add(name, Tensor::zeros({n}));
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) > 0; }

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw NumericError("ParamStore: unknown parameter: " + name);
  return params_[it->second];
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) {
    p.node()->ensure_grad();
    std::fill(p.node()->grad.begin(), p.node()->grad.end(), 0.0);
  }
}

Tensor ParamStore::l2_penalty() const {
  Tensor acc = Tensor::scalar(0.0);
  for (const auto& p : params_) acc = pathcast::add(acc, l2_norm_sq(p));
  return acc;
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto* node = params_[k].node().get();
    if (node->grad.size() != node->value.size())
      throw NumericError("adam_step: missing gradients for " + names_[k]);
    auto& st = opt_[k];
    ++st.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < node->value.size(); ++i) {
      const double g = node->grad[i];
      st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
      st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      node->value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    std::fill(node->grad.begin(), node->grad.end(), 0.0);
  }
}

std::uint64_t ParamStore::value_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    h = fnv1a64(p.value().data(), p.value().size() * sizeof(double), h);
  }
  return h;
}

void save_checkpoint(const std::string& prefix, const ParamStore& params,
                     const std::vector<CheckpointEntry>& buffers,
                     const std::map<std::string, std::string>& meta) {
  nlohmann::ordered_json manifest;
  manifest["version"] = 1;
  nlohmann::ordered_json names = nlohmann::ordered_json::array();
  nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
  nlohmann::ordered_json offsets = nlohmann::ordered_json::array();
  nlohmann::ordered_json trainable = nlohmann::ordered_json::array();

  std::string blob;
  auto append = [&](const std::string& name, const std::vector<std::size_t>& shape,
                    bool is_param, const std::vector<double>& data) {
    names.push_back(name);
    shapes.push_back(shape);
    offsets.push_back(blob.size());
    trainable.push_back(is_param);
    const auto* bytes = reinterpret_cast<const char*>(data.data());
    blob.append(bytes, data.size() * sizeof(double));
  };
  for (const auto& name : params.names()) {
    const Tensor& t = params.get(name);
    append(name, t.shape(), true, t.value());
  }
  for (const auto& b : buffers) append(b.name, b.shape, false, b.data);

  manifest["names"] = names;
  manifest["shapes"] = shapes;
  manifest["offsets"] = offsets;
  manifest["trainable"] = trainable;
  manifest["total_bytes"] = blob.size();
  nlohmann::ordered_json meta_json;
  for (const auto& [k, v] : meta) meta_json[k] = v;
  manifest["meta"] = meta_json;
  write_text_file(prefix + ".json", manifest.dump(2) + "\n");
  write_text_file(prefix + ".bin", blob);
}

Checkpoint load_checkpoint(const std::string& prefix) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(prefix + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint manifest: malformed JSON: ") + e.what());
  }
  const std::string blob = read_text_file(prefix + ".bin");
  if (manifest.at("total_bytes").get<std::size_t>() != blob.size())
    throw DataError("checkpoint: manifest/blob size mismatch");

  const auto names = manifest.at("names").get<std::vector<std::string>>();
  const auto shapes = manifest.at("shapes").get<std::vector<std::vector<std::size_t>>>();
  const auto offsets = manifest.at("offsets").get<std::vector<std::size_t>>();
  const auto trainable = manifest.at("trainable").get<std::vector<bool>>();
  if (names.size() != shapes.size() || names.size() != offsets.size() ||
      names.size() != trainable.size())
    throw DataError("checkpoint: inconsistent manifest arrays");

  Checkpoint out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    CheckpointEntry e;
    e.name = names[i];
    e.shape = shapes[i];
    e.trainable = trainable[i];
    std::size_t count = 1;
    for (const auto d : e.shape) count *= d;
    const std::size_t bytes = count * sizeof(double);
    if (offsets[i] + bytes > blob.size())
      throw DataError("checkpoint: entry '" + e.name + "' exceeds blob");
    e.data.resize(count);
    std::memcpy(e.data.data(), blob.data() + offsets[i], bytes);
    out.entries.push_back(std::move(e));
  }
  if (manifest.contains("meta")) {
    for (const auto& [k, v] : manifest["meta"].items()) out.meta[k] = v.get<std::string>();
  }
  return out;
}

void restore_params(ParamStore& store, const std::vector<CheckpointEntry>& entries) {
  std::size_t restored = 0;
  for (const auto& e : entries) {
    if (!e.trainable) continue;
    if (!store.has(e.name)) throw DataError("checkpoint: unexpected parameter: " + e.name);
    const Tensor& t = store.get(e.name);
    if (t.shape() != e.shape) throw DataError("checkpoint: shape mismatch for " + e.name);
    Tensor mut = t;
    mut.raw_value() = e.data;
    ++restored;
  }
  if (restored != store.names().size())
    throw DataError("checkpoint: covers " + std::to_string(restored) + " of " +
                    std::to_string(store.names().size()) + " parameters");
}

GradCheckReport gradient_check(ParamStore& store, const std::function<Tensor()>& loss_fn,
                               double h) {
  if (h <= 0) throw NumericError("gradient_check: h must be positive");
  store.zero_grad();
  Tensor loss = loss_fn();
  if (!loss.all_finite()) throw NumericError("gradient_check: non-finite loss");
  backward(loss);

  std::vector<std::vector<double>> analytic;
  for (const auto& name : store.names()) analytic.push_back(store.get(name).grad());

  GradCheckReport report;
  for (std::size_t k = 0; k < store.names().size(); ++k) {
    const std::string& name = store.names()[k];
    Tensor t = store.get(name);
    auto& values = t.raw_value();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      double f_plus = 0.0, f_minus = 0.0;
      {
        NoGradGuard ng;
        values[i] = original + h;
        f_plus = loss_fn().item();
        values[i] = original - h;
        f_minus = loss_fn().item();
        values[i] = original;
      }
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
        throw NumericError("gradient_check: non-finite probe at " + name);
      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double a = analytic[k][i];
      const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-8});
      const double err = std::fabs(a - fd) / denom;
      ++report.checked;
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_param = name;
        report.worst_coord = i;
      }
    }
  }
  return report;
}

}  // namespace pathcast
