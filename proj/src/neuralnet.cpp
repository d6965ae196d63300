#include "uwbns/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "uwbns/errors.hpp"

namespace uwbns {

int conv_output_extent(int input_extent, int kernel, int stride, int padding) {
  if (input_extent < 1 || kernel < 1 || stride < 1 || padding < 0)
    throw ValidationError("conv extent: arguments out of range");
  const int span = input_extent - kernel + 2 * padding;
  if (span < 0 || span % stride != 0)
    throw ValidationError("conv extent: extent is not integral for this stride");
  const int out = span / stride + 1;
  if (out < 1) throw ValidationError("conv extent: non-positive output extent");
  return out;
}

std::uint64_t mac_count(const std::vector<LayerSpec>& specs, int input_channels,
                        int input_length) {
  std::uint64_t total = 0;
  int channels = input_channels;
  int length = input_length;
  for (const LayerSpec& spec : specs) {
    if (spec.kind != LayerKind::Conv1d) break; // dense/pooling layers excluded
    const int out_len = conv_output_extent(length, spec.kernel_width, spec.stride,
                                           spec.padding);
    total += static_cast<std::uint64_t>(channels) * spec.kernel_width * spec.units *
             static_cast<std::uint64_t>(out_len);
    channels = spec.units;
    length = out_len;
  }
  return total;
}

namespace {

double activate(double v, Activation act) {
  return act == Activation::Relu ? std::max(0.0, v) : v;
}

double activate_grad(double pre, Activation act) {
  return act == Activation::Relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0;
}

} // namespace

struct QNetwork::Trace {
  std::vector<std::vector<double>> inputs;          // activation entering each layer
  std::vector<std::vector<double>> pre_activations; // layer output before activation
  std::vector<double> head_pre;                     // final activations before softmax
};

QNetwork::QNetwork(int input_length, std::vector<LayerSpec> specs, bool softmax_head,
                   std::uint64_t seed)
    : input_length_(input_length),
      specs_(std::move(specs)),
      softmax_head_(softmax_head),
      seed_(seed) {
  if (input_length_ < 1) throw ValidationError("network: input length must be positive");
  if (specs_.empty()) throw ValidationError("network: need at least one layer");

  int channels = 1;
  int length = input_length_;
  bool seen_dense = false;
  for (const LayerSpec& spec : specs_) {
    if (spec.units < 1) throw ValidationError("network: layer units must be positive");
    in_channels_.push_back(channels);
    in_lengths_.push_back(length);
    if (spec.kind == LayerKind::Conv1d) {
      if (seen_dense) throw ValidationError("network: conv layer after a dense layer");
      if (spec.kernel_width < 1 || spec.stride < 1 || spec.padding < 0)
        throw ValidationError("network: bad conv geometry");
      length = conv_output_extent(length, spec.kernel_width, spec.stride, spec.padding);
      channels = spec.units;
    } else {
      seen_dense = true;
      length = spec.units;
      channels = 1;
    }
    out_channels_.push_back(channels);
    out_lengths_.push_back(length);
  }

  std::mt19937_64 rng(seed_);
  for (std::size_t l = 0; l < specs_.size(); ++l) {
    const LayerSpec& spec = specs_[l];
    std::size_t n_weights;
    int fan_in;
    int fan_out;
    if (spec.kind == LayerKind::Conv1d) {
      n_weights = static_cast<std::size_t>(spec.units) * in_channels_[l] * spec.kernel_width;
      fan_in = in_channels_[l] * spec.kernel_width;
      fan_out = spec.units * spec.kernel_width;
    } else {
      const int flat_in = in_channels_[l] * in_lengths_[l];
      n_weights = static_cast<std::size_t>(spec.units) * flat_in;
      fan_in = flat_in;
      fan_out = spec.units;
    }
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    std::vector<double> w(n_weights);
    for (double& v : w) v = uniform(rng);
    weights_.push_back(std::move(w));
    biases_.emplace_back(static_cast<std::size_t>(spec.units), 0.0);
  }
}

int QNetwork::output_length() const { return out_lengths_.back(); }

std::vector<double> QNetwork::forward_trace(std::span<const double> input,
                                            Trace* trace) const {
  if (static_cast<int>(input.size()) != input_length_)
    throw ValidationError("network: input length mismatch");

  std::vector<double> current(input.begin(), input.end());
  for (std::size_t l = 0; l < specs_.size(); ++l) {
    const LayerSpec& spec = specs_[l];
    if (trace) trace->inputs.push_back(current);
    const int in_c = in_channels_[l];
    const int in_len = in_lengths_[l];
    std::vector<double> pre;
    if (spec.kind == LayerKind::Conv1d) {
      const int out_len = out_lengths_[l];
      pre.assign(static_cast<std::size_t>(spec.units) * out_len, 0.0);
      const std::vector<double>& w = weights_[l];
      for (int f = 0; f < spec.units; ++f) {
        for (int o = 0; o < out_len; ++o) {
          double acc = biases_[l][static_cast<std::size_t>(f)];
          for (int c = 0; c < in_c; ++c) {
            const std::size_t w_base =
                (static_cast<std::size_t>(f) * in_c + c) * spec.kernel_width;
            for (int k = 0; k < spec.kernel_width; ++k) {
              const int pos = o * spec.stride + k - spec.padding;
              if (pos < 0 || pos >= in_len) continue; // zero padding
              acc += w[w_base + static_cast<std::size_t>(k)] *
                     current[static_cast<std::size_t>(c) * in_len + pos];
            }
          }
          pre[static_cast<std::size_t>(f) * out_len + o] = acc;
        }
      }
    } else {
      const int flat_in = in_c * in_len;
      pre.assign(static_cast<std::size_t>(spec.units), 0.0);
      const std::vector<double>& w = weights_[l];
      for (int u = 0; u < spec.units; ++u) {
        double acc = biases_[l][static_cast<std::size_t>(u)];
        const std::size_t w_base = static_cast<std::size_t>(u) * flat_in;
        for (int i = 0; i < flat_in; ++i)
          acc += w[w_base + static_cast<std::size_t>(i)] * current[static_cast<std::size_t>(i)];
        pre[static_cast<std::size_t>(u)] = acc;
      }
    }
    if (trace) trace->pre_activations.push_back(pre);
    current.resize(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i)
      current[i] = activate(pre[i], spec.activation);
  }

  if (softmax_head_) {
    if (trace) trace->head_pre = current;
    const double m = *std::max_element(current.begin(), current.end());
    double sum = 0.0;
    for (double& v : current) {
      v = std::exp(v - m);
      sum += v;
    }
    for (double& v : current) v /= sum;
  }
  return current;
}

std::vector<double> QNetwork::forward(std::span<const double> input) const {
  return forward_trace(input, nullptr);
}

Gradients QNetwork::zero_gradients() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.emplace_back(weights_[l].size(), 0.0);
    g.biases.emplace_back(biases_[l].size(), 0.0);
  }
  return g;
}

Gradients QNetwork::backward(std::span<const double> input, int target_index,
                             double target_value, double* loss_out) const {
  if (target_index < 0 || target_index >= output_length())
    throw ValidationError("network: target index out of range");

  Trace trace;
  const std::vector<double> q = forward_trace(input, &trace);
  const double err = target_value - q[static_cast<std::size_t>(target_index)];
  if (loss_out) *loss_out = err * err;

  // dL/dq is nonzero only on the taken action head
  std::vector<double> grad_out(q.size(), 0.0);
  grad_out[static_cast<std::size_t>(target_index)] = -2.0 * err;

  if (softmax_head_) {
    // softmax jacobian: dq_a/dz_k = q_a (delta_ak - q_k)
    const double ga = grad_out[static_cast<std::size_t>(target_index)];
    const double qa = q[static_cast<std::size_t>(target_index)];
    std::vector<double> grad_z(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double delta = (static_cast<int>(k) == target_index) ? 1.0 : 0.0;
      grad_z[k] = ga * qa * (delta - q[k]);
    }
    grad_out = std::move(grad_z);
  }

  Gradients g = zero_gradients();
  for (int l = static_cast<int>(specs_.size()) - 1; l >= 0; --l) {
    const LayerSpec& spec = specs_[static_cast<std::size_t>(l)];
    const std::vector<double>& pre = trace.pre_activations[static_cast<std::size_t>(l)];
    const std::vector<double>& in = trace.inputs[static_cast<std::size_t>(l)];
    const int in_c = in_channels_[static_cast<std::size_t>(l)];
    const int in_len = in_lengths_[static_cast<std::size_t>(l)];

    // through the activation
    std::vector<double> grad_pre(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i)
      grad_pre[i] = grad_out[i] * activate_grad(pre[i], spec.activation);

    std::vector<double> grad_in(static_cast<std::size_t>(in_c) * in_len, 0.0);
    const std::vector<double>& w = weights_[static_cast<std::size_t>(l)];
    std::vector<double>& gw = g.weights[static_cast<std::size_t>(l)];
    std::vector<double>& gb = g.biases[static_cast<std::size_t>(l)];

    if (spec.kind == LayerKind::Conv1d) {
      const int out_len = out_lengths_[static_cast<std::size_t>(l)];
      for (int f = 0; f < spec.units; ++f) {
        for (int o = 0; o < out_len; ++o) {
          const double gp = grad_pre[static_cast<std::size_t>(f) * out_len + o];
          if (gp == 0.0) continue;
          gb[static_cast<std::size_t>(f)] += gp;
          for (int c = 0; c < in_c; ++c) {
            const std::size_t w_base =
                (static_cast<std::size_t>(f) * in_c + c) * spec.kernel_width;
            for (int k = 0; k < spec.kernel_width; ++k) {
              const int pos = o * spec.stride + k - spec.padding;
              if (pos < 0 || pos >= in_len) continue;
              const std::size_t in_idx = static_cast<std::size_t>(c) * in_len + pos;
              gw[w_base + static_cast<std::size_t>(k)] += gp * in[in_idx];
              grad_in[in_idx] += gp * w[w_base + static_cast<std::size_t>(k)];
            }
          }
        }
      }
    } else {
      const int flat_in = in_c * in_len;
      for (int u = 0; u < spec.units; ++u) {
        const double gp = grad_pre[static_cast<std::size_t>(u)];
        if (gp == 0.0) continue;
        gb[static_cast<std::size_t>(u)] += gp;
        const std::size_t w_base = static_cast<std::size_t>(u) * flat_in;
        for (int i = 0; i < flat_in; ++i) {
          gw[w_base + static_cast<std::size_t>(i)] += gp * in[static_cast<std::size_t>(i)];
          grad_in[static_cast<std::size_t>(i)] += gp * w[w_base + static_cast<std::size_t>(i)];
        }
      }
    }
    grad_out = std::move(grad_in);
  }
  return g;
}

void QNetwork::sgd_step(const Gradients& grad, double learning_rate) {
  if (learning_rate <= 0) throw ValidationError("sgd: learning rate must be positive");
  if (grad.weights.size() != weights_.size() || grad.biases.size() != biases_.size())
    throw ValidationError("sgd: gradient shape mismatch");
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (grad.weights[l].size() != weights_[l].size() ||
        grad.biases[l].size() != biases_[l].size())
      throw ValidationError("sgd: gradient shape mismatch");
    for (double v : grad.weights[l])
      if (!std::isfinite(v)) throw ValidationError("sgd: non-finite gradient");
    for (double v : grad.biases[l])
      if (!std::isfinite(v)) throw ValidationError("sgd: non-finite gradient");
  }
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (std::size_t i = 0; i < weights_[l].size(); ++i)
      weights_[l][i] -= learning_rate * grad.weights[l][i];
    for (std::size_t i = 0; i < biases_[l].size(); ++i)
      biases_[l][i] -= learning_rate * grad.biases[l][i];
  }
}

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json spec_to_json(const LayerSpec& spec) {
  return {{"kind", spec.kind == LayerKind::Conv1d ? "conv1d" : "dense"},
          {"units", spec.units},
          {"kernel_width", spec.kernel_width},
          {"stride", spec.stride},
          {"padding", spec.padding},
          {"activation", spec.activation == Activation::Relu ? "relu" : "linear"}};
}

LayerSpec spec_from_json(const nlohmann::json& j) {
  LayerSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "conv1d")
    spec.kind = LayerKind::Conv1d;
  else if (kind == "dense")
    spec.kind = LayerKind::Dense;
  else
    throw ValidationError("checkpoint: unknown layer kind '" + kind + "'");
  spec.units = j.at("units").get<int>();
  spec.kernel_width = j.at("kernel_width").get<int>();
  spec.stride = j.at("stride").get<int>();
  spec.padding = j.at("padding").get<int>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "relu")
    spec.activation = Activation::Relu;
  else if (act == "linear")
    spec.activation = Activation::Linear;
  else
    throw ValidationError("checkpoint: unknown activation '" + act + "'");
  return spec;
}

} // namespace

std::string QNetwork::to_checkpoint() const {
  nlohmann::json j;
  j["format"] = "uwbns-qnet";
  j["version"] = kCheckpointVersion;
  j["input_length"] = input_length_;
  j["softmax_head"] = softmax_head_;
  j["seed"] = seed_;
  j["layers"] = nlohmann::json::array();
  for (const LayerSpec& spec : specs_) j["layers"].push_back(spec_to_json(spec));
  j["weights"] = weights_;
  j["biases"] = biases_;
  return j.dump();
}

QNetwork QNetwork::from_checkpoint(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: bad JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "uwbns-qnet")
      throw ValidationError("checkpoint: unrecognized format tag");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ValidationError("checkpoint: unsupported version");
    std::vector<LayerSpec> specs;
    for (const auto& layer : j.at("layers")) specs.push_back(spec_from_json(layer));
    QNetwork net(j.at("input_length").get<int>(), std::move(specs),
                 j.at("softmax_head").get<bool>(), j.at("seed").get<std::uint64_t>());
    auto weights = j.at("weights").get<std::vector<std::vector<double>>>();
    auto biases = j.at("biases").get<std::vector<std::vector<double>>>();
    if (weights.size() != net.weights_.size() || biases.size() != net.biases_.size())
      throw ValidationError("checkpoint: layer count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].size() != net.weights_[l].size() ||
          biases[l].size() != net.biases_[l].size())
        throw ValidationError("checkpoint: parameter shape mismatch");
    }
    net.weights_ = std::move(weights);
    net.biases_ = std::move(biases);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: missing or mistyped field: ") + e.what());
  }
}

void QNetwork::save_checkpoint(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << to_checkpoint() << '\n';
}

QNetwork QNetwork::load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_checkpoint(buf.str());
}

GradientReport gradient_check(QNetwork& net, std::span<const double> input,
                              int target_index, double target_value, double step) {
  GradientReport report;
  report.analytic = net.backward(input, target_index, target_value);
  report.numeric = net.zero_gradients();

  auto loss = [&]() {
    const std::vector<double> q = net.forward(input);
    const double err = target_value - q[static_cast<std::size_t>(target_index)];
    return err * err;
  };

  auto probe = [&](double& param, double& slot) {
    const double saved = param;
    param = saved + step;
    const double up = loss();
    param = saved - step;
    const double down = loss();
    param = saved;
    slot = (up - down) / (2.0 * step);
  };

  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    for (std::size_t i = 0; i < net.weights()[l].size(); ++i)
      probe(net.weights()[l][i], report.numeric.weights[l][i]);
    for (std::size_t i = 0; i < net.biases()[l].size(); ++i)
      probe(net.biases()[l][i], report.numeric.biases[l][i]);
  }

  double worst = 0.0;
  auto compare = [&](double a, double n) {
    const double denom = std::max({1.0, std::abs(a), std::abs(n)});
    worst = std::max(worst, std::abs(a - n) / denom);
  };
  for (std::size_t l = 0; l < report.analytic.weights.size(); ++l) {
    for (std::size_t i = 0; i < report.analytic.weights[l].size(); ++i)
      compare(report.analytic.weights[l][i], report.numeric.weights[l][i]);
    for (std::size_t i = 0; i < report.analytic.biases[l].size(); ++i)
      compare(report.analytic.biases[l][i], report.numeric.biases[l][i]);
  }
  report.max_relative_discrepancy = worst;
  return report;
}

} // namespace uwbns
