#pragma once

#include <initializer_list>
#include <string>

#include "fullend/ad/tensor.hpp"
#include "fullend/error.hpp"

namespace fullend::ad::detail {

/// Allocates an op result. Inputs are recorded (in order, skipping null
/// pointers) only when the tape is on and some input needs a gradient.
inline Tensor make_output(const Shape& shape, std::initializer_list<const Tensor*> inputs, const char* op) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(shape_size(shape), 0.0);
  n->op = op;
  bool rg = false;
  if (grad_enabled())
    for (const Tensor* t : inputs)
      if (t != nullptr && t->requires_grad()) rg = true;
  n->requires_grad = rg;
  if (rg)
    for (const Tensor* t : inputs)
      if (t != nullptr) n->inputs.push_back(t->ptr());
  return Tensor(std::move(n));
}

inline bool wants(const Node& n, std::size_t i) { return n.inputs[i]->requires_grad; }
inline std::vector<double>& gbuf(Node& n, std::size_t i) { return n.inputs[i]->grad_buffer(); }
inline const std::vector<double>& val(const Node& n, std::size_t i) { return n.inputs[i]->value; }

inline void expect_shape(const Tensor& t, const Shape& s, const char* op, const char* what) {
  if (t.shape() != s)
    throw ContractError(std::string(op) + ": " + what + " has shape " + shape_str(t.shape()) + ", expected " +
                        shape_str(s));
}

inline void expect_rank(const Tensor& t, std::size_t r, const char* op, const char* what) {
  if (t.rank() != r)
    throw ContractError(std::string(op) + ": " + what + " must have rank " + std::to_string(r) + ", got " +
                        shape_str(t.shape()));
}

}  // namespace fullend::ad::detail
