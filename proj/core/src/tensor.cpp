#include "mpa/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace mpa::tensor {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T{0}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T fill, bool requires_grad) {
  std::vector<T> values(shape_numel(shape), fill);
  return from_values(std::move(shape), std::move(values), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_values(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), T{0});
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape()));
  }
  return node_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw ShapeError("index rank mismatch for " + shape_string(shape()));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= node_->shape[axis]) throw ShapeError("index out of range for " + shape_string(shape()));
    flat = flat * node_->shape[axis] + i;
    ++axis;
  }
  return node_->value[flat];
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T{0});
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from_values(shape(), node_->value, false);
}

template <typename T>
void Tensor<T>::backward() const {
  if (!node_) throw std::logic_error("backward() on an undefined tensor");
  if (numel() != 1) {
    throw ShapeError("backward() requires a scalar loss, got shape " + shape_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long graphs.
  // `order` owns its nodes: clearing inputs below must not free a node that
  // is still waiting for its turn.
  std::vector<std::shared_ptr<Node<T>>> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<std::shared_ptr<Node<T>>, std::size_t>> stack;
  stack.emplace_back(node_, 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const auto& child = node->inputs[next++];
      if (child->requires_grad && seen.insert(child.get()).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = it->get();
    if (node->leaf) continue;
    if (node->backward && !node->grad.empty()) node->backward(*node);
    // Intermediate state is single-use.
    node->backward = nullptr;
    node->inputs.clear();
    node->grad.clear();
    node->grad.shrink_to_fit();
  }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace mpa::tensor
