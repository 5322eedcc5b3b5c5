#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "hmlc/grid.hpp"
#include "hmlc/labels.hpp"

namespace hmlc {

enum class PolicyKind { kIgnore, kOnes, kZeros, kOnesLsr, kZerosLsr };

// Accepts ignore | ones | zeros | ones-lsr | zeros-lsr.
PolicyKind parse_policy_kind(std::string_view name);
std::string_view to_string(PolicyKind kind);

// Bounds of the uniform draw that replaces an uncertain label.
struct LsrParams {
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const LsrParams&, const LsrParams&) = default;
};

// Defaults for the smoothed policies; chosen near 1 (resp. 0) with a gap
// to the opposite class.
inline constexpr LsrParams kDefaultOnesLsr{0.55, 0.85};
inline constexpr LsrParams kDefaultZerosLsr{0.0, 0.3};

class UncertaintyPolicy {
 public:
  // Throws ConfigError when LSR params are missing for an LSR kind, present
  // for another kind, or violate 0 <= a <= b <= 1.
  UncertaintyPolicy(PolicyKind kind, std::optional<LsrParams> lsr = std::nullopt);

  static UncertaintyPolicy ignore() { return {PolicyKind::kIgnore}; }
  static UncertaintyPolicy ones() { return {PolicyKind::kOnes}; }
  static UncertaintyPolicy zeros() { return {PolicyKind::kZeros}; }
  static UncertaintyPolicy ones_lsr(LsrParams p = kDefaultOnesLsr) { return {PolicyKind::kOnesLsr, p}; }
  static UncertaintyPolicy zeros_lsr(LsrParams p = kDefaultZerosLsr) { return {PolicyKind::kZerosLsr, p}; }

  PolicyKind kind() const noexcept { return kind_; }
  const std::optional<LsrParams>& lsr() const noexcept { return lsr_; }
  std::string describe() const;

  friend bool operator==(const UncertaintyPolicy&, const UncertaintyPolicy&) = default;

 private:
  PolicyKind kind_;
  std::optional<LsrParams> lsr_;
};

struct PolicyTargets {
  Matrix targets;  // every entry in [0, 1]
  LossMask mask;
};

// POS -> 1, NEG -> 0, MISSING -> masked out; UNC per policy. LSR draws are
// u = a + (b - a) * U where U is the top 53 bits of a SplitMix64 chain over
// (seed, row, column), so each cell's draw is independent of traversal order.
PolicyTargets apply_policy(const LabelMatrix& labels, const UncertaintyPolicy& policy,
                           std::uint64_t seed);

}  // namespace hmlc
