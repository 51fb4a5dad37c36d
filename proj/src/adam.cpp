#include <cmath>

#include "grinn/error.hpp"
#include "grinn/optim.hpp"

namespace grinn {

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamOptions& o) {
  if (grad.size() != params.size()) throw Error(ErrorKind::shape, "gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = o.beta1 * state.m + (1.0 - o.beta1) * grad;
  state.v = o.beta2 * state.v + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  params.array() -= o.learning_rate * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + o.epsilon);
}

}  // namespace grinn
