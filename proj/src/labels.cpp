#include "hmlc/labels.hpp"

#include "hmlc/error.hpp"

namespace hmlc {

Label parse_label(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
  if (cell.empty()) return Label::kMissing;
  if (cell == "1.0" || cell == "1") return Label::kPos;
  if (cell == "0.0" || cell == "0") return Label::kNeg;
  if (cell == "-1.0" || cell == "-1") return Label::kUnc;
  throw DataError("unparsable label value '" + std::string(cell) + "'");
}

std::string_view format_label(Label label) {
  switch (label) {
    case Label::kPos: return "1.0";
    case Label::kNeg: return "0.0";
    case Label::kUnc: return "-1.0";
    case Label::kMissing: return "";
  }
  return "";
}

}  // namespace hmlc
