#pragma once

// Dense sine-activated network with exact input derivatives (first order for
// every input, pure second order for selected inputs) and exact parameter
// gradients of losses built from those derivatives.
//
// Derivatives are carried forward as stacked "channels": the value, one
// tangent per input, and one pure second-order tangent per requested axis.
// A channel stack for a batch of B points is a matrix with C * B columns,
// channel c occupying columns [c B, (c + 1) B). The reverse sweep runs the
// adjoint of that forward propagation, so gradients include every
// input-derivative term that enters a PDE residual.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace grinn {

struct NetworkSpec {
  int input_width = 2;
  std::vector<int> hidden{32, 32, 32};
  int output_width = 3;
  /// Frequency factor applied to the first layer's pre-activation.
  double omega0 = 1.0;
  /// Affine map of input j from [input_lower[j], input_upper[j]] onto
  /// [-1, 1]. Empty vectors mean identity.
  std::vector<double> input_lower;
  std::vector<double> input_upper;
  /// Optional hard-periodic embedding: input j with periods[j] > 0 enters as
  /// (cos(2 pi x / P), sin(2 pi x / P)) instead of the affine map. Empty or
  /// non-positive entries disable it.
  std::vector<double> periods;

  void validate() const;
  bool periodic(int input) const;
  /// Width of the first layer's input after embedding.
  int embedded_width() const;
  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_in(int layer) const;
  int layer_out(int layer) const;
  std::size_t parameter_count() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// All weights and biases as one flat vector. Layer l stores its weight
/// matrix (out x in, column-major) followed by its bias.
class NetworkParams {
 public:
  NetworkParams() = default;
  explicit NetworkParams(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  Eigen::VectorXd& flat() { return flat_; }
  const Eigen::VectorXd& flat() const { return flat_; }
  std::size_t size() const { return static_cast<std::size_t>(flat_.size()); }

  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const;

 private:
  NetworkSpec spec_;
  Eigen::VectorXd flat_;
  std::vector<std::size_t> offsets_;
};

/// He-normal weights (std sqrt(2 / fan_in), truncated at two standard
/// deviations by resampling), zero biases.
NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

struct JetRequest {
  bool first = true;
  std::vector<int> second_axes;
};

/// Outputs and their input derivatives for a batch of points; each block is
/// outputs x batch.
class Jet {
 public:
  Jet() = default;
  Jet(int outputs, int batch, int first_count, std::vector<int> second_axes);

  int outputs() const { return static_cast<int>(stack.rows()); }
  int batch() const { return batch_; }
  int first_count() const { return first_count_; }
  const std::vector<int>& second_axes() const { return second_axes_; }
  int channels() const { return 1 + first_count_ + static_cast<int>(second_axes_.size()); }
  /// Channel slot of the second derivative along `axis`, or -1.
  int second_slot(int axis) const;

  auto value() { return stack.middleCols(0, batch_); }
  auto value() const { return stack.middleCols(0, batch_); }
  auto first(int input) { return stack.middleCols((1 + input) * batch_, batch_); }
  auto first(int input) const { return stack.middleCols((1 + input) * batch_, batch_); }
  auto second(int axis) { return stack.middleCols(second_column(axis), batch_); }
  auto second(int axis) const { return stack.middleCols(second_column(axis), batch_); }

  Eigen::MatrixXd stack;

 private:
  Eigen::Index second_column(int axis) const;

  int batch_ = 0;
  int first_count_ = 0;
  std::vector<int> second_axes_;
};

/// Plain forward pass; X is input_width x batch in physical coordinates.
Eigen::MatrixXd forward(const NetworkParams& params, const Eigen::MatrixXd& X);

/// Records the forward jet propagation so that an adjoint seed on the jet can
/// be pulled back to the parameters.
class JetTape {
 public:
  JetTape(const NetworkParams& params, const Eigen::MatrixXd& X, const JetRequest& request);

  const Jet& jet() const { return jet_; }
  /// Zeroed jet of the same layout, to be filled with dLoss/dJet.
  Jet make_adjoint() const;
  /// grad += d(sum_{entries} adjoint * jet) / d(params).
  void backward(const Jet& adjoint, Eigen::Ref<Eigen::VectorXd> grad) const;

 private:
  const NetworkParams* params_;
  int batch_;
  int channels_;
  std::vector<int> second_axes_;
  int first_count_;
  // Per layer: input stack; for hidden layers also pre-activation stack and
  // sin/cos of the value channel.
  std::vector<Eigen::MatrixXd> inputs_;
  std::vector<Eigen::MatrixXd> pre_;
  std::vector<Eigen::MatrixXd> sin_;
  std::vector<Eigen::MatrixXd> cos_;
  Jet jet_;
};

/// Jet without recording a tape.
Jet input_jet(const NetworkParams& params, const Eigen::MatrixXd& X, const JetRequest& request);

}  // namespace grinn
