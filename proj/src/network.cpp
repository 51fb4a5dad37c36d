#include "grinn/network.hpp"

#include <cmath>
#include <numbers>

#include "grinn/error.hpp"
#include "grinn/random.hpp"

namespace grinn {

void NetworkSpec::validate() const {
  if (input_width < 1 || output_width < 1) {
    throw Error(ErrorKind::invalid_config, "network widths must be >= 1");
  }
  for (int w : hidden) {
    if (w < 1) throw Error(ErrorKind::invalid_config, "hidden widths must be >= 1");
  }
  if (!input_lower.empty() || !input_upper.empty()) {
    if (static_cast<int>(input_lower.size()) != input_width ||
        static_cast<int>(input_upper.size()) != input_width) {
      throw Error(ErrorKind::invalid_config, "input bounds must match the input width");
    }
    for (int j = 0; j < input_width; ++j) {
      if (!(input_upper[j] > input_lower[j])) {
        throw Error(ErrorKind::invalid_config, "input bounds must satisfy upper > lower");
      }
    }
  }
  if (!periods.empty() && static_cast<int>(periods.size()) != input_width) {
    throw Error(ErrorKind::invalid_config, "periods must match the input width");
  }
}

bool NetworkSpec::periodic(int input) const {
  return !periods.empty() && periods[input] > 0.0;
}

int NetworkSpec::embedded_width() const {
  int w = 0;
  for (int j = 0; j < input_width; ++j) w += periodic(j) ? 2 : 1;
  return w;
}

int NetworkSpec::layer_in(int layer) const {
  return layer == 0 ? embedded_width() : hidden[layer - 1];
}

int NetworkSpec::layer_out(int layer) const {
  return layer == static_cast<int>(hidden.size()) ? output_width : hidden[layer];
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t p = 0;
  for (int l = 0; l < layer_count(); ++l) {
    p += static_cast<std::size_t>(layer_out(l)) * (layer_in(l) + 1);
  }
  return p;
}

NetworkParams::NetworkParams(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t off = 0;
  for (int l = 0; l < spec_.layer_count(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(spec_.layer_out(l)) * (spec_.layer_in(l) + 1);
  }
  flat_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
}

std::size_t NetworkParams::bias_offset(int layer) const {
  return offsets_[layer] + static_cast<std::size_t>(spec_.layer_out(layer)) * spec_.layer_in(layer);
}

Eigen::Map<Eigen::MatrixXd> NetworkParams::weight(int layer) {
  return {flat_.data() + offsets_[layer], spec_.layer_out(layer), spec_.layer_in(layer)};
}

Eigen::Map<const Eigen::MatrixXd> NetworkParams::weight(int layer) const {
  return {flat_.data() + offsets_[layer], spec_.layer_out(layer), spec_.layer_in(layer)};
}

Eigen::Map<Eigen::VectorXd> NetworkParams::bias(int layer) {
  return {flat_.data() + bias_offset(layer), spec_.layer_out(layer)};
}

Eigen::Map<const Eigen::VectorXd> NetworkParams::bias(int layer) const {
  return {flat_.data() + bias_offset(layer), spec_.layer_out(layer)};
}

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  NetworkParams params(spec);
  for (int l = 0; l < spec.layer_count(); ++l) {
    CounterRng rng(seed, static_cast<std::uint64_t>(l));
    const double stddev = std::sqrt(2.0 / spec.layer_in(l));
    auto W = params.weight(l);
    for (Eigen::Index c = 0; c < W.cols(); ++c) {
      for (Eigen::Index r = 0; r < W.rows(); ++r) {
        double z = rng.normal();
        while (std::abs(z) > 2.0) z = rng.normal();
        W(r, c) = stddev * z;
      }
    }
    params.bias(l).setZero();
  }
  return params;
}

Jet::Jet(int outputs, int batch, int first_count, std::vector<int> second_axes)
    : batch_(batch), first_count_(first_count), second_axes_(std::move(second_axes)) {
  stack = Eigen::MatrixXd::Zero(outputs, static_cast<Eigen::Index>(channels()) * batch);
}

int Jet::second_slot(int axis) const {
  for (std::size_t k = 0; k < second_axes_.size(); ++k) {
    if (second_axes_[k] == axis) return static_cast<int>(k);
  }
  return -1;
}

Eigen::Index Jet::second_column(int axis) const {
  const int slot = second_slot(axis);
  if (slot < 0) throw Error(ErrorKind::evaluation, "second derivative was not requested");
  return static_cast<Eigen::Index>(1 + first_count_ + slot) * batch_;
}

namespace {

void check_inputs(const NetworkSpec& spec, const Eigen::MatrixXd& X) {
  if (X.rows() != spec.input_width) {
    throw Error(ErrorKind::shape, "input rows do not match the network input width");
  }
  if (!X.allFinite()) throw Error(ErrorKind::evaluation, "non-finite network input");
}

// First-layer input stack: embedded coordinates plus their exact tangents.
Eigen::MatrixXd embed(const NetworkSpec& spec, const Eigen::MatrixXd& X, int first_count,
                      const std::vector<int>& second_axes) {
  const Eigen::Index B = X.cols();
  const int channels = 1 + first_count + static_cast<int>(second_axes.size());
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(spec.embedded_width(), channels * B);
  const bool scaled = !spec.input_lower.empty();
  int row = 0;
  for (int j = 0; j < spec.input_width; ++j) {
    if (spec.periodic(j)) {
      const double kappa = 2.0 * std::numbers::pi / spec.periods[j];
      const Eigen::ArrayXd arg = kappa * X.row(j).transpose().array();
      const Eigen::ArrayXd c = arg.cos();
      const Eigen::ArrayXd s = arg.sin();
      E.block(row, 0, 1, B) = c.transpose().matrix();
      E.block(row + 1, 0, 1, B) = s.transpose().matrix();
      if (j < first_count) {
        E.block(row, (1 + j) * B, 1, B) = (-kappa * s).transpose().matrix();
        E.block(row + 1, (1 + j) * B, 1, B) = (kappa * c).transpose().matrix();
      }
      for (std::size_t k = 0; k < second_axes.size(); ++k) {
        if (second_axes[k] != j) continue;
        const Eigen::Index col = (1 + first_count + static_cast<Eigen::Index>(k)) * B;
        E.block(row, col, 1, B) = (-kappa * kappa * c).transpose().matrix();
        E.block(row + 1, col, 1, B) = (-kappa * kappa * s).transpose().matrix();
      }
      row += 2;
    } else {
      double scale = 1.0;
      double shift = 0.0;
      if (scaled) {
        scale = 2.0 / (spec.input_upper[j] - spec.input_lower[j]);
        shift = -1.0 - scale * spec.input_lower[j];
      }
      E.block(row, 0, 1, B) = ((scale * X.row(j).array()) + shift).matrix();
      if (j < first_count) E.block(row, (1 + j) * B, 1, B).setConstant(scale);
      row += 1;
    }
  }
  return E;
}

}  // namespace

Eigen::MatrixXd forward(const NetworkParams& params, const Eigen::MatrixXd& X) {
  const NetworkSpec& spec = params.spec();
  check_inputs(spec, X);
  Eigen::MatrixXd A = embed(spec, X, 0, {});
  const int L = spec.layer_count();
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd Z = params.weight(l) * A;
    Z.colwise() += params.bias(l);
    if (l == L - 1) return Z;
    if (l == 0 && spec.omega0 != 1.0) Z *= spec.omega0;
    A = Z.array().sin().matrix();
  }
  return A;
}

JetTape::JetTape(const NetworkParams& params, const Eigen::MatrixXd& X, const JetRequest& request)
    : params_(&params),
      batch_(static_cast<int>(X.cols())),
      second_axes_(request.second_axes),
      first_count_(request.first || !request.second_axes.empty()
                       ? params.spec().input_width
                       : 0) {
  const NetworkSpec& spec = params.spec();
  check_inputs(spec, X);
  for (int axis : second_axes_) {
    if (axis < 0 || axis >= spec.input_width) {
      throw Error(ErrorKind::evaluation, "second-derivative axis out of range");
    }
  }
  channels_ = 1 + first_count_ + static_cast<int>(second_axes_.size());
  const Eigen::Index B = batch_;
  const int L = spec.layer_count();
  inputs_.reserve(L);
  pre_.reserve(L - 1);
  sin_.reserve(L - 1);
  cos_.reserve(L - 1);

  inputs_.push_back(embed(spec, X, first_count_, second_axes_));
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd Z = params.weight(l) * inputs_.back();
    Z.leftCols(B).colwise() += params.bias(l);
    if (l == L - 1) {
      jet_ = Jet(spec.output_width, batch_, first_count_, second_axes_);
      jet_.stack = std::move(Z);
      break;
    }
    if (l == 0 && spec.omega0 != 1.0) Z *= spec.omega0;
    Eigen::MatrixXd S = Z.leftCols(B).array().sin().matrix();
    Eigen::MatrixXd C = Z.leftCols(B).array().cos().matrix();
    Eigen::MatrixXd A(Z.rows(), Z.cols());
    A.leftCols(B) = S;
    for (int j = 0; j < first_count_; ++j) {
      A.middleCols((1 + j) * B, B) = (C.array() * Z.middleCols((1 + j) * B, B).array()).matrix();
    }
    for (std::size_t k = 0; k < second_axes_.size(); ++k) {
      const Eigen::Index col = (1 + first_count_ + static_cast<Eigen::Index>(k)) * B;
      const auto Zs = Z.middleCols((1 + second_axes_[k]) * B, B).array();
      A.middleCols(col, B) =
          (C.array() * Z.middleCols(col, B).array() - S.array() * Zs * Zs).matrix();
    }
    pre_.push_back(std::move(Z));
    sin_.push_back(std::move(S));
    cos_.push_back(std::move(C));
    inputs_.push_back(std::move(A));
  }
}

Jet JetTape::make_adjoint() const {
  return Jet(jet_.outputs(), batch_, first_count_, second_axes_);
}

void JetTape::backward(const Jet& adjoint, Eigen::Ref<Eigen::VectorXd> grad) const {
  const NetworkParams& params = *params_;
  const NetworkSpec& spec = params.spec();
  const Eigen::Index B = batch_;
  const int L = spec.layer_count();
  if (adjoint.stack.rows() != jet_.stack.rows() || adjoint.stack.cols() != jet_.stack.cols()) {
    throw Error(ErrorKind::shape, "adjoint layout does not match the recorded jet");
  }

  Eigen::MatrixXd G = adjoint.stack;  // adjoint of the current layer's pre-activation
  for (int l = L - 1; l >= 0; --l) {
    if (l == 0 && spec.omega0 != 1.0) G *= spec.omega0;
    const std::size_t w_off = params.weight_offset(l);
    const int out = spec.layer_out(l);
    const int in = spec.layer_in(l);
    Eigen::Map<Eigen::MatrixXd> gW(grad.data() + w_off, out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + params.bias_offset(l), out);
    gW.noalias() += G * inputs_[l].transpose();
    gb.noalias() += G.leftCols(B).rowwise().sum();
    if (l == 0) break;

    // Adjoint of the previous layer's activations, then through sin.
    const Eigen::MatrixXd Abar = params.weight(l).transpose() * G;
    const Eigen::MatrixXd& Z = pre_[l - 1];
    const auto S = sin_[l - 1].array();
    const auto C = cos_[l - 1].array();
    Eigen::MatrixXd Zbar(Z.rows(), Z.cols());
    Zbar.leftCols(B) = (Abar.leftCols(B).array() * C).matrix();
    for (int j = 0; j < first_count_; ++j) {
      const auto Aj = Abar.middleCols((1 + j) * B, B).array();
      const auto Zj = Z.middleCols((1 + j) * B, B).array();
      Zbar.middleCols((1 + j) * B, B) = (Aj * C).matrix();
      Zbar.leftCols(B).array() -= Aj * S * Zj;
    }
    for (std::size_t k = 0; k < second_axes_.size(); ++k) {
      const Eigen::Index col = (1 + first_count_ + static_cast<Eigen::Index>(k)) * B;
      const Eigen::Index fcol = (1 + second_axes_[k]) * B;
      const auto Ak = Abar.middleCols(col, B).array();
      const auto Zk = Z.middleCols(col, B).array();
      const auto Zs = Z.middleCols(fcol, B).array();
      Zbar.middleCols(col, B) = (Ak * C).matrix();
      Zbar.middleCols(fcol, B).array() -= 2.0 * Ak * S * Zs;
      Zbar.leftCols(B).array() -= Ak * (S * Zk + C * Zs * Zs);
    }
    G = std::move(Zbar);
  }
}

Jet input_jet(const NetworkParams& params, const Eigen::MatrixXd& X, const JetRequest& request) {
  return JetTape(params, X, request).jet();
}

}  // namespace grinn
