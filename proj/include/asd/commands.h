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

#ifndef ASD_COMMANDS_H_
#define ASD_COMMANDS_H_

#include <ostream>

#include "asd/config.h"

namespace asd {

// Writes <data_dir>/bundles/<entity>/..., train.csv and val.csv, and prints
// per-split frame counts by class.
void cmd_synth(const RunConfig& config, std::ostream& out);

// Trains on train.csv (validating on val.csv when present) and writes the
// checkpoint.
void cmd_train(const RunConfig& config, std::ostream& out);

// Scores every row of the annotations CSV and writes a prediction CSV in
// the same row order.
void cmd_infer(const RunConfig& config, std::ostream& out);

// Per-entity smoothing of a prediction CSV.
void cmd_smooth(const RunConfig& config, std::ostream& out);

// Prints the mAP report; optionally writes the PR curve CSV.
void cmd_score(const RunConfig& config, std::ostream& out);

// Packs a directory of pre-cropped binary PPM (P6) frames, sorted by file
// name, and a raw 16 kHz s16le mono audio file into one bundle.
void cmd_import(const RunConfig& config, std::ostream& out);

}  // namespace asd

#endif  // ASD_COMMANDS_H_
