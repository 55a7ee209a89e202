// Copyright 2026 The ASD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ASD_AUTOGRAD_H_
#define ASD_AUTOGRAD_H_

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "asd/error.h"
#include "asd/tensor.h"

namespace asd {

template <typename T>
class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape<T>& tape() const { return *tape_; }
  Tape<T>* tape_ptr() const { return tape_; }
  std::size_t id() const { return id_; }

  const Shape& shape() const { return tape_->shape(id_); }
  int rank() const { return static_cast<int>(shape().size()); }
  std::int64_t dim(int axis) const { return shape().at(axis); }
  std::span<const T> values() const { return tape_->value(id_); }
  std::size_t size() const { return values().size(); }
  bool tracked() const { return tape_->tracked(id_); }

  T item() const {
    if (size() != 1) throw DimensionError("item() on non-scalar " + shape_string(shape()));
    return values()[0];
  }
  Tensor<T> to_tensor() const {
    auto v = values();
    return Tensor<T>(shape(), Buffer<T>(v.begin(), v.end()));
  }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Dynamic reverse-mode tape. Every forward op appends a node; backward() walks
// the nodes once in reverse and then marks the tape consumed.
template <typename T>
class Tape {
 public:
  // Pushes the node's upstream gradient into its inputs. Invoked only for
  // tracked nodes whose gradient was reached from the loss.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) {
    return push(value.shape(), {value.data().begin(), value.data().end()},
                false, nullptr, "constant");
  }
  Var<T> constant(Shape shape, std::vector<T> values) {
    if (static_cast<std::int64_t>(values.size()) != num_elements(shape)) {
      throw DimensionError("constant data does not match shape " + shape_string(shape));
    }
    return push(std::move(shape), Buffer<T>(values.begin(), values.end()), false, nullptr,
                "constant");
  }

  // Leaf bound to a parameter. Gradients accumulate into `tensor` on
  // backward() when the tensor requires grad. Repeated calls return the
  // same node.
  Var<T> param(Tensor<T>& tensor) {
    auto it = leaves_.find(&tensor);
    if (it != leaves_.end()) return Var<T>(this, it->second);
    const bool tracked = tensor.requires_grad();
    Var<T> v = push(tensor.shape(), {tensor.data().begin(), tensor.data().end()},
                    tracked, nullptr, "param");
    if (tracked) nodes_[v.id()].sink = &tensor;
    leaves_.emplace(&tensor, v.id());
    return v;
  }

  // Records an op result. The node is tracked iff any input is tracked.
  Var<T> record(Shape shape, Buffer<T> value,
                std::initializer_list<Var<T>> inputs, BackwardFn fn,
                const char* op) {
    return record(std::move(shape), std::move(value),
                  std::vector<Var<T>>(inputs), std::move(fn), op);
  }
  Var<T> record(Shape shape, Buffer<T> value,
                const std::vector<Var<T>>& inputs, BackwardFn fn,
                const char* op) {
    bool tracked = false;
    for (const auto& in : inputs) {
      if (in.tape_ptr() != this) throw StateError(std::string(op) + ": input from another tape");
      tracked = tracked || nodes_[in.id()].tracked;
    }
    return push(std::move(shape), std::move(value), tracked,
                tracked ? std::move(fn) : BackwardFn{}, op);
  }

  void backward(const Var<T>& loss) {
    if (consumed_) throw StateError("backward() on a consumed tape");
    if (loss.size() != 1) {
      throw DimensionError("backward() needs a scalar loss, got shape " +
                           shape_string(loss.shape()));
    }
    consumed_ = true;
    if (!nodes_[loss.id()].tracked) return;
    grad_mut(loss.id())[0] = T(1);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.tracked || n.grad.empty()) continue;
      if (n.backward) n.backward(*this, i);
      if (n.sink != nullptr) n.sink->accumulate_grad(n.grad);
    }
    // Tracked leaves never reached still receive a (zero) gradient.
    for (auto& n : nodes_) {
      if (n.sink != nullptr && n.grad.empty()) {
        n.sink->accumulate_grad(Buffer<T>(n.value.size(), T(0)));
      }
    }
  }

  bool consumed() const { return consumed_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  const Shape& shape(std::size_t id) const { return nodes_[id].shape; }
  std::span<const T> value(std::size_t id) const { return nodes_[id].value; }
  bool tracked(std::size_t id) const { return nodes_[id].tracked; }

  // Upstream gradient of a node; call only from a BackwardFn.
  std::span<const T> grad(std::size_t id) const { return nodes_[id].grad; }

  // Gradient accumulator of an input, or an empty span when the input is not
  // tracked.
  std::span<T> grad_mut(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.tracked) return {};
    if (n.grad.empty()) n.grad.assign(n.value.size(), T(0));
    return n.grad;
  }

 private:
  struct Node {
    Shape shape;
    Buffer<T> value;
    Buffer<T> grad;
    bool tracked = false;
    Tensor<T>* sink = nullptr;
    BackwardFn backward;
  };

  Var<T> push(Shape shape, Buffer<T> value, bool tracked, BackwardFn fn,
              const char* op) {
    if (consumed_) throw StateError(std::string(op) + ": tape already consumed");
    for (T x : value) {
      if (!std::isfinite(x)) {
        throw NumericError(std::string(op) + " produced a non-finite value");
      }
    }
    nodes_.push_back(Node{std::move(shape), std::move(value), {}, tracked, nullptr,
                          std::move(fn)});
    return Var<T>(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor<T>*, std::size_t> leaves_;
  bool consumed_ = false;
};

}  // namespace asd

#endif  // ASD_AUTOGRAD_H_
