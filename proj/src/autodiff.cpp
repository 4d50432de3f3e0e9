#include "gatedgan/autodiff.hpp"

namespace gatedgan {

template <typename T>
std::size_t Tape<T>::check(Var<T> v) const {
  if (v.tape != this || v.id >= nodes_.size()) {
    throw ArgumentError("variable does not belong to this tape");
  }
  return v.id;
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  if (!value.all_finite()) throw NumericError("non-finite constant on tape");
  nodes_.push_back(Node{std::move(value), false, {}, std::nullopt});
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::variable(Tensor<T> value) {
  if (!value.all_finite()) throw NumericError("non-finite variable on tape");
  nodes_.push_back(Node{std::move(value), true, {}, std::nullopt});
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs,
                       BackwardFn backward) {
  bool needs = false;
  for (Var<T> in : inputs) needs = needs || nodes_[check(in)].requires_grad;
  if (!value.all_finite()) {
    throw NumericError("op produced non-finite values (shape " +
                       shape_string(value.shape()) + ")");
  }
  nodes_.push_back(Node{std::move(value), needs,
                        needs ? std::move(backward) : BackwardFn{}, std::nullopt});
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Tensor<T>* Tape<T>::grad_target(std::size_t id) {
  Node& node = nodes_.at(id);
  if (!node.requires_grad) return nullptr;
  if (!node.grad) node.grad.emplace(node.value.shape(), T{0});
  return &*node.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  const std::size_t root = check(loss);
  if (nodes_[root].value.numel() != 1) {
    throw ShapeError("backward needs a scalar loss, got " +
                     shape_string(nodes_[root].value.shape()));
  }
  for (Node& n : nodes_) n.grad.reset();
  visits_ = 0;
  if (!nodes_[root].requires_grad) return;
  nodes_[root].grad.emplace(nodes_[root].value.shape(), T{1});
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.grad || !node.backward) continue;
    ++visits_;
    // Callbacks only write to earlier nodes; no node is appended mid-sweep.
    node.backward(*this, *node.grad);
  }
}

template <typename T>
const Tensor<T>* Tape<T>::grad(Var<T> v) const {
  const Node& node = nodes_.at(check(v));
  return node.grad ? &*node.grad : nullptr;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace gatedgan
