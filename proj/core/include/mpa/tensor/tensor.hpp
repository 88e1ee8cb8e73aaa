#pragma once

// Minimal reverse-mode differentiation engine.
//
// A Tensor is a shared handle to a graph node. Ops record their inputs and a
// backward closure on the node they produce; Tensor::backward() walks the
// reachable subgraph in reverse topological order. Leaves created with
// requires_grad own a gradient buffer for their whole lifetime; intermediate
// buffers are released once backward has consumed them.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpa::tensor {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

enum class Mode { train, eval };

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this->grad and accumulates into inputs[i]->grad.
  std::function<void(Node&)> backward;

  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T{0});
    return grad;
  }
};

// Graph recording is on by default. Evaluation code disables it so that
// forward passes over parameters do not retain activations.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T fill, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  bool is_leaf() const noexcept { return node_ && node_->leaf; }

  T item() const;
  T at(std::initializer_list<std::size_t> index) const;

  void zero_grad();
  // Copy of the values with no graph history.
  Tensor detach() const;

  // Seeds d(this)/d(this) = 1 and accumulates into every reachable leaf that
  // requires grad. Only valid on a single-element tensor.
  void backward() const;

  // Op implementation plumbing.
  static Tensor from_node(std::shared_ptr<Node<T>> node) { return Tensor(std::move(node)); }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}
  std::shared_ptr<Node<T>> node_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace mpa::tensor
