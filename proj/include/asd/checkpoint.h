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

#ifndef ASD_CHECKPOINT_H_
#define ASD_CHECKPOINT_H_

#include <filesystem>
#include <iosfwd>

#include "asd/tensor.h"

// Binary parameter file:
//   "ASDC" | u32 version (1) | u32 tensor count
//   per tensor: u32 name length | name bytes | u8 dtype (0 f32, 1 f64) |
//               u8 rank | rank x u64 dims | little-endian scalars
// All integers little-endian.

namespace asd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_checkpoint(std::ostream& out, const ParamSet<T>& params);

// Every tensor in the stream must have dtype T.
template <typename T>
ParamSet<T> read_checkpoint(std::istream& in);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params);

template <typename T>
ParamSet<T> load_checkpoint(const std::filesystem::path& path);

// Copies values for every tensor of `target` from `loaded`. Throws LoadError
// naming the first tensor that is missing or has a different shape; tensors
// only present in `loaded` are ignored. Trainability flags of `target` are
// kept.
template <typename T>
void assign_params(const ParamSet<T>& loaded, ParamSet<T>& target);

}  // namespace asd

#endif  // ASD_CHECKPOINT_H_
