#include "bamkit/adam.hpp"

#include <cmath>

namespace bamkit {

template <typename T>
void adam_step(BasicTensor<T>& param, const BasicTensor<T>& grad, AdamState<T>& state, double lr,
               const AdamConfig& cfg) {
  require_shape(grad.shape(), param.shape(), "adam_step grad");
  require_shape(state.first_moment.shape(), param.shape(), "adam_step first moment");
  require_shape(state.second_moment.shape(), param.shape(), "adam_step second moment");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double m = cfg.beta1 * state.first_moment[i] + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * state.second_moment[i] + (1.0 - cfg.beta2) * g * g;
    state.first_moment[i] = static_cast<T>(m);
    state.second_moment[i] = static_cast<T>(v);
    const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.epsilon);
    param[i] = static_cast<T>(param[i] - update);
  }
}

template void adam_step(BasicTensor<float>&, const BasicTensor<float>&, AdamState<float>&, double,
                        const AdamConfig&);
template void adam_step(BasicTensor<double>&, const BasicTensor<double>&, AdamState<double>&, double,
                        const AdamConfig&);

}  // namespace bamkit
