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

#ifndef ASD_TENSOR_H_
#define ASD_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <new>
#include <deque>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "asd/error.h"

namespace asd {

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "tensors hold f32 or f64");
  return std::is_same_v<T, float> ? DType::kF32 : DType::kF64;
}

using Shape = std::vector<std::int64_t>;

// 64-byte aligned storage. Vectorized kernels pick their peeling from the
// buffer address, so a fixed alignment keeps results bit-reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlignment)));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, std::align_val_t(kAlignment)); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

std::int64_t num_elements(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array with an optional gradient buffer.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape)
      : shape_(std::move(shape)),
        data_(static_cast<std::size_t>(num_elements(shape_)), T(0)) {}
  Tensor(Shape shape, std::initializer_list<T> data)
      : Tensor(std::move(shape), Buffer<T>(data)) {}
  Tensor(Shape shape, const std::vector<T>& data)
      : Tensor(std::move(shape), Buffer<T>(data.begin(), data.end())) {}
  Tensor(Shape shape, Buffer<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != num_elements(shape_)) {
      throw DimensionError("tensor data length " +
                           std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static constexpr DType dtype() { return dtype_of<T>(); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  bool has_grad() const { return grad_.has_value(); }
  std::span<T> grad() {
    if (!grad_) throw StateError("tensor has no gradient buffer");
    return *grad_;
  }
  std::span<const T> grad() const {
    if (!grad_) throw StateError("tensor has no gradient buffer");
    return *grad_;
  }
  void accumulate_grad(std::span<const T> g) {
    if (g.size() != data_.size()) {
      throw DimensionError("gradient length does not match tensor");
    }
    if (!grad_) grad_.emplace(data_.size(), T(0));
    for (std::size_t i = 0; i < g.size(); ++i) (*grad_)[i] += g[i];
  }
  void clear_grad() { grad_.reset(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Buffer<T> data_;
  bool requires_grad_ = false;
  std::optional<Buffer<T>> grad_;
};

// Named parameters in insertion order. Element addresses stay valid while
// entries are added, so a tape may hold pointers into the set.
template <typename T>
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor<T> tensor;
  };

  ParamSet() = default;
  ParamSet(const ParamSet& other) { *this = other; }
  ParamSet& operator=(const ParamSet& other) {
    if (this == &other) return *this;
    entries_.clear();
    index_.clear();
    for (const auto& e : other.entries_) add(e.name, e.tensor);
    return *this;
  }
  ParamSet(ParamSet&&) noexcept = default;
  ParamSet& operator=(ParamSet&&) noexcept = default;

  Tensor<T>& add(std::string name, Tensor<T> tensor) {
    if (index_.contains(name)) {
      throw ConfigError("duplicate parameter name '" + name + "'");
    }
    index_.emplace(name, entries_.size());
    entries_.push_back(Entry{std::move(name), std::move(tensor)});
    return entries_.back().tensor;
  }

  bool contains(std::string_view name) const {
    return index_.contains(std::string(name));
  }
  Tensor<T>& at(std::string_view name) {
    return entries_[lookup(name)].tensor;
  }
  const Tensor<T>& at(std::string_view name) const {
    return entries_[lookup(name)].tensor;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool has_prefix(std::string_view prefix) const {
    for (const auto& e : entries_) {
      if (e.name.starts_with(prefix)) return true;
    }
    return false;
  }

  // Marks every parameter whose name starts with `prefix` as (un)trainable.
  void set_trainable(std::string_view prefix, bool trainable) {
    for (auto& e : entries_) {
      if (e.name.starts_with(prefix)) e.tensor.set_requires_grad(trainable);
    }
  }

  void clear_grads() {
    for (auto& e : entries_) e.tensor.clear_grad();
  }

  // Moves all entries of `other` into this set.
  void merge(ParamSet other) {
    for (auto& e : other.entries_) add(std::move(e.name), std::move(e.tensor));
  }

 private:
  std::size_t lookup(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
      throw StateError("missing parameter '" + std::string(name) + "'");
    }
    return it->second;
  }

  std::deque<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace asd

#endif  // ASD_TENSOR_H_
