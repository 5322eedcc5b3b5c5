#include "hmlc/hierarchy.hpp"

#include <algorithm>
#include <cmath>

#include "hmlc/csv.hpp"
#include "hmlc/error.hpp"

namespace hmlc {

LabelTree LabelTree::build(std::span<const NodeSpec> specs) {
  const std::size_t k = specs.size();
  if (k == 0) throw ConfigError("hierarchy: no labels");

  const auto explicit_count = std::count_if(specs.begin(), specs.end(),
                                            [](const NodeSpec& s) { return s.index.has_value(); });
  if (explicit_count != 0 && static_cast<std::size_t>(explicit_count) != k) {
    throw ConfigError("hierarchy: indices must be given for every node or for none");
  }

  LabelTree tree;
  tree.nodes_.resize(k);
  std::vector<bool> seen(k, false);
  for (std::size_t pos = 0; pos < k; ++pos) {
    const NodeSpec& s = specs[pos];
    if (s.id.empty()) throw ConfigError("hierarchy: empty label name at record " + std::to_string(pos + 1));
    const std::size_t index = s.index.value_or(pos);
    if (index >= k || seen[index]) {
      throw ConfigError("hierarchy: indices are not a dense 0.." + std::to_string(k - 1) +
                        " range (label '" + s.id + "' has index " + std::to_string(index) + ")");
    }
    seen[index] = true;
    if (!tree.by_id_.emplace(s.id, index).second) {
      throw ConfigError("hierarchy: duplicate label '" + s.id + "'");
    }
    tree.nodes_[index].id = s.id;
    tree.nodes_[index].index = index;
  }
  for (const NodeSpec& s : specs) {
    if (!s.parent || s.parent->empty()) continue;
    const auto it = tree.by_id_.find(*s.parent);
    if (it == tree.by_id_.end()) {
      throw ConfigError("hierarchy: label '" + s.id + "' names unknown parent '" + *s.parent + "'");
    }
    tree.nodes_[tree.by_id_.at(s.id)].parent = it->second;
  }

  tree.ancestors_.assign(k, {});
  tree.children_.assign(k, {});
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::size_t> path;
    std::optional<std::size_t> cur = tree.nodes_[i].parent;
    while (cur) {
      if (*cur == i || path.size() >= k) {
        throw ConfigError("hierarchy: cycle through label '" + tree.nodes_[i].id + "'");
      }
      path.push_back(*cur);
      cur = tree.nodes_[*cur].parent;
    }
    std::reverse(path.begin(), path.end());
    tree.ancestors_[i] = std::move(path);
    if (tree.nodes_[i].parent) tree.children_[*tree.nodes_[i].parent].push_back(i);
  }

  tree.order_.resize(k);
  for (std::size_t i = 0; i < k; ++i) tree.order_[i] = i;
  std::stable_sort(tree.order_.begin(), tree.order_.end(), [&](std::size_t a, std::size_t b) {
    return tree.ancestors_[a].size() < tree.ancestors_[b].size();
  });
  return tree;
}

std::vector<std::string> LabelTree::ids() const {
  std::vector<std::string> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.id);
  return out;
}

std::optional<std::size_t> LabelTree::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelTree::index_of(std::string_view id) const {
  if (auto idx = find(id)) return *idx;
  throw ConfigError("unknown label '" + std::string(id) + "'");
}

std::vector<std::string> LabelTree::ancestors(std::string_view id) const {
  std::vector<std::string> out;
  for (std::size_t a : ancestor_indices(index_of(id))) out.push_back(nodes_[a].id);
  return out;
}

std::vector<std::size_t> LabelTree::roots() const {
  std::vector<std::size_t> out;
  for (const auto& n : nodes_) {
    if (!n.parent) out.push_back(n.index);
  }
  return out;
}

std::vector<NodeSpec> parse_hierarchy(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const long name_col = table.column("name");
  const long parent_col = table.column("parent");
  const long index_col = table.column("index");
  if (name_col < 0 || parent_col < 0) {
    throw ConfigError("hierarchy file: header must contain 'name' and 'parent' columns");
  }
  std::vector<NodeSpec> specs;
  for (const auto& row : table.rows) {
    NodeSpec s;
    s.id = row[name_col];
    if (!row[parent_col].empty()) s.parent = row[parent_col];
    if (index_col >= 0 && !row[index_col].empty()) {
      double v = 0;
      if (!csv::parse_double(row[index_col], v) || v < 0 || v != std::floor(v)) {
        throw ConfigError("hierarchy file: bad index '" + row[index_col] + "' for label '" + s.id + "'");
      }
      s.index = static_cast<std::size_t>(v);
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

LabelTree load_hierarchy(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("hierarchy file not found: " + path.string());
  }
  std::string text;
  try {
    text = csv::read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  try {
    const auto specs = parse_hierarchy(text);
    return LabelTree::build(specs);
  } catch (const DataError& e) {
    throw ConfigError(std::string("hierarchy file ") + path.string() + ": " + e.what());
  }
}

std::string format_hierarchy(const LabelTree& tree) {
  std::string out = "name,parent,index\n";
  for (const auto& n : tree.nodes()) {
    csv::Row row{n.id, n.parent ? tree.node(*n.parent).id : std::string(), std::to_string(n.index)};
    out += csv::join(row) + "\n";
  }
  return out;
}

std::vector<double> propagate(const LabelTree& tree, std::span<const double> cond) {
  if (cond.size() != tree.size()) {
    throw ConfigError("propagate: expected " + std::to_string(tree.size()) + " values, got " +
                      std::to_string(cond.size()));
  }
  for (std::size_t i = 0; i < cond.size(); ++i) {
    if (!(cond[i] >= 0.0 && cond[i] <= 1.0)) {
      throw ConfigError("propagate: conditional for '" + tree.node(i).id + "' outside [0,1]");
    }
  }
  // Parents come first in topological order, so out[parent] is final when read.
  std::vector<double> out(cond.size());
  for (std::size_t i : tree.topological_order()) {
    const auto& parent = tree.node(i).parent;
    out[i] = parent ? out[*parent] * cond[i] : cond[i];
  }
  return out;
}

}  // namespace hmlc
