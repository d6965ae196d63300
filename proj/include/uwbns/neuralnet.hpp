#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace uwbns {

enum class Activation { Relu, Linear };
enum class LayerKind { Conv1d, Dense };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int units = 1;        // filters for conv, output units for dense
  int kernel_width = 1; // conv only
  int stride = 1;       // conv only
  int padding = 0;      // conv only
  Activation activation = Activation::Relu;
};

// Output extent of a 1-D convolution: (input - kernel + 2*padding)/stride + 1.
// Rejects non-integral divisions and non-positive results.
int conv_output_extent(int input_extent, int kernel, int stride, int padding);

// Multiply-accumulate count over the conv layers of a chain; dense layers are
// excluded. The input plane contributes channels x length.
std::uint64_t mac_count(const std::vector<LayerSpec>& specs, int input_channels,
                        int input_length);

// Per-layer parameter gradients, same shapes as the owning network's weights.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

// Minimal Q-value approximator: a chain of 1-D convolutions followed by dense
// layers, trained by plain SGD on the squared error of one action head.
// Activations are stored channel-major (value[c * len + pos]); a dense layer
// consumes the flattened output of whatever precedes it. Weight init is
// uniform +-sqrt(6/(fan_in+fan_out)) from the given seed; biases start at 0.
class QNetwork {
public:
  QNetwork(int input_length, std::vector<LayerSpec> specs, bool softmax_head,
           std::uint64_t seed);

  int input_length() const { return input_length_; }
  int output_length() const;
  const std::vector<LayerSpec>& specs() const { return specs_; }
  bool softmax_head() const { return softmax_head_; }
  std::uint64_t init_seed() const { return seed_; }

  // Q-values for one encoded state; input length must match.
  std::vector<double> forward(std::span<const double> input) const;

  // Analytic gradient of (target_value - q[target_index])^2 with respect to
  // every parameter. Optionally reports the loss.
  Gradients backward(std::span<const double> input, int target_index,
                     double target_value, double* loss_out = nullptr) const;

  // xi <- xi - learning_rate * gradient. Rejects non-finite gradients.
  void sgd_step(const Gradients& grad, double learning_rate);

  Gradients zero_gradients() const;

  // Raw parameter access (tests and checkpointing).
  std::vector<std::vector<double>>& weights() { return weights_; }
  std::vector<std::vector<double>>& biases() { return biases_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& biases() const { return biases_; }

  // Versioned JSON checkpoint; load validates shape compatibility.
  std::string to_checkpoint() const;
  static QNetwork from_checkpoint(const std::string& json_text);
  void save_checkpoint(const std::string& path) const;
  static QNetwork load_checkpoint(const std::string& path);

private:
  struct Trace; // per-layer inputs and pre-activations kept for backward
  std::vector<double> forward_trace(std::span<const double> input, Trace* trace) const;

  int input_length_;
  std::vector<LayerSpec> specs_;
  bool softmax_head_;
  std::uint64_t seed_;
  std::vector<int> in_channels_, in_lengths_;   // per layer
  std::vector<int> out_channels_, out_lengths_; // per layer
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
};

// Analytic-vs-central-finite-difference comparison over every parameter.
// Discrepancy per entry is |a - n| / max(1, |a|, |n|).
struct GradientReport {
  Gradients analytic;
  Gradients numeric;
  double max_relative_discrepancy = 0.0;
};

GradientReport gradient_check(QNetwork& net, std::span<const double> input,
                              int target_index, double target_value,
                              double step = 1e-4);

} // namespace uwbns
