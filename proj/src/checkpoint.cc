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

#include "asd/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace asd {

namespace {

constexpr char kMagic[4] = {'A', 'S', 'D', 'C'};

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw LoadError(std::string("checkpoint truncated while reading ") + what);
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  U value;
  std::memcpy(&value, bytes, sizeof(U));
  return value;
}

}  // namespace

template <typename T>
void write_checkpoint(std::ostream& out, const ParamSet<T>& params) {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.tensor.rank()));
    for (std::int64_t d : e.tensor.shape()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    for (T v : e.tensor.data()) put_le<T>(out, v);
  }
  if (!out) throw IoError("failed writing checkpoint");
}

template <typename T>
ParamSet<T> read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw LoadError("not a checkpoint file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw LoadError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in, "tensor count");
  ParamSet<T> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get_le<std::uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw LoadError("checkpoint truncated in name");
    const auto dtype = get_le<std::uint8_t>(in, "dtype");
    if (dtype != static_cast<std::uint8_t>(dtype_of<T>())) {
      throw LoadError("tensor '" + name + "' has dtype code " + std::to_string(dtype) +
                      ", expected " + std::to_string(static_cast<int>(dtype_of<T>())));
    }
    const auto rank = get_le<std::uint8_t>(in, "rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::int64_t>(get_le<std::uint64_t>(in, "dims"));
    Tensor<T> tensor(shape);
    for (T& v : tensor.data()) v = get_le<T>(in, "tensor data");
    params.add(std::move(name), std::move(tensor));
  }
  return params;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
}

template <typename T>
ParamSet<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint<T>(in);
}

template <typename T>
void assign_params(const ParamSet<T>& loaded, ParamSet<T>& target) {
  for (auto& e : target) {
    if (!loaded.contains(e.name)) {
      throw LoadError("checkpoint is missing tensor '" + e.name + "'");
    }
    const Tensor<T>& src = loaded.at(e.name);
    if (src.shape() != e.tensor.shape()) {
      throw LoadError("tensor '" + e.name + "' has shape " + shape_string(src.shape()) +
                      " in checkpoint, expected " + shape_string(e.tensor.shape()));
    }
  }
  for (auto& e : target) {
    auto src = loaded.at(e.name).data();
    std::copy(src.begin(), src.end(), e.tensor.data().begin());
    e.tensor.clear_grad();
  }
}

template void write_checkpoint(std::ostream&, const ParamSet<float>&);
template void write_checkpoint(std::ostream&, const ParamSet<double>&);
template ParamSet<float> read_checkpoint<float>(std::istream&);
template ParamSet<double> read_checkpoint<double>(std::istream&);
template void save_checkpoint(const std::filesystem::path&, const ParamSet<float>&);
template void save_checkpoint(const std::filesystem::path&, const ParamSet<double>&);
template ParamSet<float> load_checkpoint<float>(const std::filesystem::path&);
template ParamSet<double> load_checkpoint<double>(const std::filesystem::path&);
template void assign_params(const ParamSet<float>&, ParamSet<float>&);
template void assign_params(const ParamSet<double>&, ParamSet<double>&);

}  // namespace asd
