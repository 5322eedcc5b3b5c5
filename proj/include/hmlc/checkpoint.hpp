#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "hmlc/model.hpp"

namespace hmlc {

// Text checkpoint, version 1:
//
//   hmlc-checkpoint 1
//   layers <L>
//   layer <l> <outputs> <inputs> <frozen 0|1>
//   w <outputs*inputs values, row-major>
//   b <outputs values>
//   ... (one layer block per layer)
//   adam <t>            or   adam none
//   mw <l> <values> / vw <l> <values> / mb <l> <values> / vb <l> <values>
//   end
//
// Values are written in shortest round-trip decimal form, so a load/save
// cycle reproduces every bit.
struct Checkpoint {
  Mlp model;
  std::optional<AdamState> optimizer;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string format_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hmlc
