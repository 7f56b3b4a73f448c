#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fullend::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One value on the tape. Leaves (parameters, inputs) have no backward
/// function; intermediate nodes keep their inputs alive until released.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until some gradient flows in
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward;
  const char* op = "leaf";

  /// Allocates a zeroed gradient buffer on first use.
  std::vector<double>& grad_buffer();
};

class Tensor {
 public:
  Tensor();
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->value.size(); }

  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  std::span<double> values() { return node_->value; }
  std::span<const double> values() const { return node_->value; }
  double item() const;
  double operator[](std::size_t i) const { return node_->value[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();
  void clear_grad() { node_->grad.clear(); }

  /// Reverse pass from this scalar. Gradients accumulate into every
  /// participating leaf; the graph is released afterwards.
  void backward();

  /// Copy of the value with no tape history.
  Tensor detach() const;
  /// False for a default-constructed (shapeless) tensor.
  bool defined() const { return node_ && !node_->shape.empty(); }
  Node* node() const { return node_.get(); }
  const NodePtr& ptr() const { return node_; }

 private:
  NodePtr node_;
};

/// Disables tape recording in the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Throws NumericError naming `where` when any element is NaN or infinite.
void check_finite(const Tensor& t, const std::string& where);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

}  // namespace fullend::ad
