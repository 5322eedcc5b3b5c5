#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "hmlc/grid.hpp"

namespace hmlc {

// CheXpert label semantics: 1 positive, 0 negative, -1 uncertain, blank missing.
enum class Label : std::int8_t { kNeg = 0, kPos = 1, kUnc = -1, kMissing = 2 };

using LabelMatrix = Grid<Label>;

// "1.0"/"1" -> kPos, "0.0"/"0" -> kNeg, "-1.0"/"-1" -> kUnc, "" -> kMissing.
// Throws DataError for anything else.
Label parse_label(std::string_view cell);
// Canonical CSV spelling; kMissing is the empty string.
std::string_view format_label(Label label);

}  // namespace hmlc
