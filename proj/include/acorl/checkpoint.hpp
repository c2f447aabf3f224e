// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "acorl/nn.hpp"

namespace acorl {

// Checkpoint container: a text manifest followed by a raw blob of
// little-endian 32-bit floats in manifest order.
//
//   ACORL1\n
//   type <model|fusion>\n
//   <key> <value>\n            ... format-specific fields, fixed order
//   param <name> <RxC|N> <byte-offset> <element-count>\n   ... per tensor
//   blob_bytes <n>\n
//   END\n
//   <raw f32 little-endian blob>
//
// Offsets index into the blob and must be contiguous in manifest order.
// Parameters round-trip through f32, so a load returns each value rounded
// to the nearest float.
struct Container {
  std::string type;
  std::vector<std::pair<std::string, std::string>> fields;
  ParamList params;
};

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace acorl
