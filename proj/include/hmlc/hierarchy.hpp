#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hmlc {

// One record of a hierarchy description. Indices are either given for every
// node or for none (then they follow listing order).
struct NodeSpec {
  std::string id;
  std::optional<std::string> parent;
  std::optional<std::size_t> index;
};

struct LabelNode {
  std::string id;
  std::size_t index = 0;
  std::optional<std::size_t> parent;  // index of the parent node
};

// Immutable forest of labels. Node i is the label at position i of the
// K-dimensional label vector.
class LabelTree {
 public:
  LabelTree() = default;

  // Throws ConfigError on duplicate ids, unknown parents, cycles, or
  // indices that are not exactly 0..K-1.
  static LabelTree build(std::span<const NodeSpec> specs);

  std::size_t size() const noexcept { return nodes_.size(); }
  const LabelNode& node(std::size_t index) const { return nodes_.at(index); }
  std::span<const LabelNode> nodes() const noexcept { return nodes_; }
  std::vector<std::string> ids() const;

  std::optional<std::size_t> find(std::string_view id) const;
  // Throws ConfigError for unknown ids.
  std::size_t index_of(std::string_view id) const;

  // Path from the root down to the parent; empty for roots.
  std::span<const std::size_t> ancestor_indices(std::size_t index) const {
    return ancestors_.at(index);
  }
  std::vector<std::string> ancestors(std::string_view id) const;

  std::span<const std::size_t> children(std::size_t index) const { return children_.at(index); }
  std::vector<std::size_t> roots() const;
  bool is_root(std::size_t index) const { return !nodes_.at(index).parent.has_value(); }
  bool is_leaf(std::size_t index) const { return children_.at(index).empty(); }
  std::size_t depth(std::size_t index) const { return ancestors_.at(index).size(); }

  // Node indices ordered so that every parent precedes its children.
  std::span<const std::size_t> topological_order() const noexcept { return order_; }

  friend bool operator==(const LabelTree& a, const LabelTree& b) {
    if (a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
      if (a.nodes_[i].id != b.nodes_[i].id || a.nodes_[i].parent != b.nodes_[i].parent) return false;
    }
    return true;
  }

 private:
  std::vector<LabelNode> nodes_;
  std::vector<std::vector<std::size_t>> ancestors_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> order_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

inline LabelTree build_tree(std::span<const NodeSpec> specs) { return LabelTree::build(specs); }

// Hierarchy file: CSV with header `name,parent,index`. `parent` is empty for
// roots; `index` may be empty on every row to use listing order.
std::vector<NodeSpec> parse_hierarchy(std::string_view text);
LabelTree load_hierarchy(const std::filesystem::path& path);
std::string format_hierarchy(const LabelTree& tree);

// Unconditional probabilities from conditionals: out[n] is the product of
// cond over the root path of n, n included. Throws ConfigError if any entry
// lies outside [0, 1] or the length is not K.
std::vector<double> propagate(const LabelTree& tree, std::span<const double> cond);

}  // namespace hmlc
