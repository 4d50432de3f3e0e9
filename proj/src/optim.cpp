#include "gatedgan/optim.hpp"

#include <cmath>

namespace gatedgan {

template <typename T>
void Adam<T>::step(const std::vector<ParamUpdate<T>>& updates) {
  step(updates, settings_.learning_rate);
}

template <typename T>
void Adam<T>::step(const std::vector<ParamUpdate<T>>& updates, double learning_rate) {
  for (const ParamUpdate<T>& u : updates) {
    if (u.grad && u.grad->shape() != u.param->shape()) {
      throw ShapeError("adam: gradient " + shape_string(u.grad->shape()) + " for parameter " +
                       u.name + " of shape " + shape_string(u.param->shape()));
    }
  }
  const double b1 = settings_.beta1, b2 = settings_.beta2;
  for (const ParamUpdate<T>& u : updates) {
    auto [it, fresh] = slots_.try_emplace(u.name);
    AdamSlot<T>& slot = it->second;
    if (fresh) {
      slot.m = Tensor<T>(u.param->shape(), T{0});
      slot.v = Tensor<T>(u.param->shape(), T{0});
    } else if (slot.m.shape() != u.param->shape()) {
      throw ShapeError("adam: state for " + u.name + " has shape " +
                       shape_string(slot.m.shape()));
    }
    ++slot.t;
    const double c1 = 1.0 - std::pow(b1, double(slot.t));
    const double c2 = 1.0 - std::pow(b2, double(slot.t));
    Tensor<T>& p = *u.param;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double g = u.grad ? double((*u.grad)[i]) : 0.0;
      const double m = b1 * slot.m[i] + (1.0 - b1) * g;
      const double v = b2 * slot.v[i] + (1.0 - b2) * g * g;
      slot.m[i] = static_cast<T>(m);
      slot.v[i] = static_cast<T>(v);
      const double m_hat = m / c1;
      const double v_hat = v / c2;
      p[i] = static_cast<T>(double(p[i]) - learning_rate * m_hat / (std::sqrt(v_hat) + settings_.eps));
    }
  }
  ++steps_;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace gatedgan
