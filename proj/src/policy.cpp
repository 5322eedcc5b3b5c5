#include "hmlc/policy.hpp"

#include <cmath>
#include <sstream>

#include "hmlc/error.hpp"
#include "hmlc/rng.hpp"

namespace hmlc {

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "ignore") return PolicyKind::kIgnore;
  if (name == "ones") return PolicyKind::kOnes;
  if (name == "zeros") return PolicyKind::kZeros;
  if (name == "ones-lsr") return PolicyKind::kOnesLsr;
  if (name == "zeros-lsr") return PolicyKind::kZerosLsr;
  throw ConfigError("unknown uncertainty policy '" + std::string(name) +
                    "' (expected ignore|ones|zeros|ones-lsr|zeros-lsr)");
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kIgnore: return "ignore";
    case PolicyKind::kOnes: return "ones";
    case PolicyKind::kZeros: return "zeros";
    case PolicyKind::kOnesLsr: return "ones-lsr";
    case PolicyKind::kZerosLsr: return "zeros-lsr";
  }
  return "?";
}

UncertaintyPolicy::UncertaintyPolicy(PolicyKind kind, std::optional<LsrParams> lsr)
    : kind_(kind), lsr_(lsr) {
  const bool needs_lsr = kind == PolicyKind::kOnesLsr || kind == PolicyKind::kZerosLsr;
  if (needs_lsr && !lsr_) {
    throw ConfigError("policy " + std::string(to_string(kind)) + " requires LSR bounds");
  }
  if (!needs_lsr && lsr_) {
    throw ConfigError("policy " + std::string(to_string(kind)) + " takes no LSR bounds");
  }
  if (lsr_) {
    const auto [a, b] = *lsr_;
    if (!(0.0 <= a && a <= b && b <= 1.0)) {
      std::ostringstream msg;
      msg << "LSR bounds must satisfy 0 <= a <= b <= 1 (got a=" << a << ", b=" << b << ")";
      throw ConfigError(msg.str());
    }
  }
}

std::string UncertaintyPolicy::describe() const {
  std::ostringstream out;
  out << to_string(kind_);
  if (lsr_) out << "(" << lsr_->a << "," << lsr_->b << ")";
  return out.str();
}

PolicyTargets apply_policy(const LabelMatrix& labels, const UncertaintyPolicy& policy,
                           std::uint64_t seed) {
  PolicyTargets out{Matrix(labels.rows(), labels.cols(), 0.0),
                    LossMask(labels.rows(), labels.cols(), 0)};
  for (std::size_t i = 0; i < labels.rows(); ++i) {
    for (std::size_t k = 0; k < labels.cols(); ++k) {
      double& target = out.targets(i, k);
      std::uint8_t& mask = out.mask(i, k);
      switch (labels(i, k)) {
        case Label::kPos:
          target = 1.0;
          mask = 1;
          break;
        case Label::kNeg:
          target = 0.0;
          mask = 1;
          break;
        case Label::kMissing:
          break;
        case Label::kUnc:
          switch (policy.kind()) {
            case PolicyKind::kIgnore:
              break;
            case PolicyKind::kOnes:
              target = 1.0;
              mask = 1;
              break;
            case PolicyKind::kZeros:
              mask = 1;
              break;
            case PolicyKind::kOnesLsr:
            case PolicyKind::kZerosLsr: {
              const auto [a, b] = *policy.lsr();
              const double u = cell_uniform(seed, Stream::kLsr, i, k);
              target = std::min(b, a + (b - a) * u);
              mask = 1;
              break;
            }
          }
          break;
      }
    }
  }
  return out;
}

}  // namespace hmlc
