#include "dttc/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "dttc/error.hpp"

namespace dttc {

TransitionMatrix::TransitionMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_) {
    throw ShapeError("transition matrix: entry count does not match shape");
  }
}

Taxonomy Taxonomy::from_levels(std::vector<std::vector<std::string>> names,
                               std::vector<std::vector<std::uint32_t>> parents) {
  if (names.empty()) throw DataError("taxonomy: no levels");
  if (parents.size() != names.size()) throw DataError("taxonomy: parent table does not cover every level");
  if (!parents[0].empty()) throw DataError("taxonomy: first-level classes cannot have parents");

  Taxonomy tax;
  tax.offsets_.push_back(0);
  for (std::size_t level = 0; level < names.size(); ++level) {
    if (names[level].empty()) {
      throw DataError("taxonomy: level " + std::to_string(level + 1) + " is empty");
    }
    std::unordered_map<std::string, std::uint32_t> lookup;
    for (std::size_t j = 0; j < names[level].size(); ++j) {
      const auto& n = names[level][j];
      if (n.empty()) throw DataError("taxonomy: empty class name at level " + std::to_string(level + 1));
      if (!lookup.emplace(n, static_cast<std::uint32_t>(j)).second) {
        throw DataError("taxonomy: duplicate class '" + n + "' at level " + std::to_string(level + 1));
      }
    }
    tax.lookup_.push_back(std::move(lookup));
    tax.offsets_.push_back(tax.offsets_.back() + names[level].size());
  }

  tax.children_.resize(names.size());
  for (std::size_t level = 0; level < names.size(); ++level) {
    tax.children_[level].resize(names[level].size());
  }
  for (std::size_t level = 1; level < names.size(); ++level) {
    if (parents[level].size() != names[level].size()) {
      throw DataError("taxonomy: level " + std::to_string(level + 1) + " has classes without a parent");
    }
    for (std::size_t j = 0; j < parents[level].size(); ++j) {
      const auto p = parents[level][j];
      if (p >= names[level - 1].size()) {
        throw DataError("taxonomy: class '" + names[level][j] + "' has an out-of-range parent");
      }
      tax.children_[level - 1][p].push_back(static_cast<std::uint32_t>(j));
    }
  }
  for (std::size_t level = 0; level + 1 < names.size(); ++level) {
    for (std::size_t k = 0; k < names[level].size(); ++k) {
      if (tax.children_[level][k].empty()) {
        throw DataError("taxonomy: class '" + names[level][k] + "' at level " + std::to_string(level + 1) +
                        " has no children (use --allow-childless to pad)");
      }
    }
  }

  tax.names_ = std::move(names);
  tax.parents_ = std::move(parents);
  return tax;
}

std::vector<std::size_t> Taxonomy::level_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& level : names_) sizes.push_back(level.size());
  return sizes;
}

ClassId Taxonomy::id(std::size_t level, std::size_t index) const {
  if (level >= n_levels() || index >= level_size(level)) {
    throw std::out_of_range("taxonomy: class reference out of range");
  }
  return ClassId{static_cast<std::uint32_t>(offsets_[level] + index)};
}

ClassRef Taxonomy::locate(ClassId id) const {
  const auto raw = to_index(id);
  if (raw >= total_classes()) throw std::out_of_range("taxonomy: invalid class id " + std::to_string(raw));
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), static_cast<std::size_t>(raw));
  const auto level = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return {level, raw - offsets_[level]};
}

const std::string& Taxonomy::name(ClassId id) const {
  const auto ref = locate(id);
  return names_[ref.level][ref.index];
}

std::optional<std::uint32_t> Taxonomy::find(std::size_t level, std::string_view name) const {
  const auto& lookup = lookup_.at(level);
  const auto it = lookup.find(std::string(name));
  if (it == lookup.end()) return std::nullopt;
  return it->second;
}

std::optional<ClassId> Taxonomy::parent(ClassId id) const {
  const auto ref = locate(id);
  if (ref.level == 0) return std::nullopt;
  return this->id(ref.level - 1, parents_[ref.level][ref.index]);
}

namespace {

using LevelNames = std::vector<std::vector<std::string>>;
using LevelParents = std::vector<std::vector<std::uint32_t>>;

// Give every childless class above the deepest level a chain of synthetic
// "other" descendants down to the deepest level.
void pad_childless(LevelNames& names, LevelParents& parents) {
  for (std::size_t level = 0; level + 1 < names.size(); ++level) {
    std::vector<bool> has_child(names[level].size(), false);
    for (auto p : parents[level + 1]) has_child[p] = true;
    for (std::size_t k = 0; k < names[level].size(); ++k) {
      if (has_child[k]) continue;
      names[level + 1].push_back("other (" + names[level][k] + ")");
      parents[level + 1].push_back(static_cast<std::uint32_t>(k));
    }
  }
}

struct EdgeNode {
  std::size_t order = 0;
  std::size_t line = 0;
  std::optional<std::string> parent;  // nullopt for roots
};

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

Taxonomy parse_taxonomy(std::string_view text, TaxonomyParseOptions options) {
  std::unordered_map<std::string, EdgeNode> nodes;
  std::vector<std::string> order;                       // first-appearance order
  std::unordered_map<std::string, std::size_t> first_seen;  // name -> line of first mention
  auto mention = [&](const std::string& name, std::size_t line) {
    if (first_seen.emplace(name, line).second) order.push_back(name);
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw DataError("taxonomy " + at_line(line_no) + "expected exactly one TAB separating child and parent");
    }
    std::string child(line.substr(0, tab));
    std::string parent(line.substr(tab + 1));
    if (child.empty() || parent.empty()) {
      throw DataError("taxonomy " + at_line(line_no) + "empty class name");
    }
    const bool is_root = parent == "-";
    if (!is_root && parent == child) {
      throw DataError("taxonomy " + at_line(line_no) + "cycle detected: '" + child + "' is its own parent");
    }
    mention(child, line_no);
    if (!is_root) mention(parent, line_no);

    auto [it, inserted] = nodes.try_emplace(child);
    if (!inserted) {
      const auto& prev = it->second;
      const bool same = is_root ? !prev.parent.has_value() : (prev.parent && *prev.parent == parent);
      if (same) {
        throw DataError("taxonomy " + at_line(line_no) + "duplicate class '" + child + "' (first declared on line " +
                        std::to_string(prev.line) + ")");
      }
      throw DataError("taxonomy " + at_line(line_no) + "class '" + child + "' has multiple parents (also on line " +
                      std::to_string(prev.line) + ")");
    }
    it->second.line = line_no;
    if (!is_root) it->second.parent = parent;
    if (end == text.size()) break;
  }

  if (order.empty()) throw DataError("taxonomy: empty taxonomy (no classes declared)");

  for (const auto& name : order) {
    if (!nodes.contains(name)) {
      throw DataError("taxonomy " + at_line(first_seen[name]) + "class '" + name +
                      "' is used as a parent but never declared (zero parents; declare it as `" + name + "\\t-` if it is a root)");
    }
  }

  // Depth of every class by walking parent links; a walk longer than the
  // number of classes means a cycle.
  std::unordered_map<std::string, std::size_t> depth;
  for (const auto& name : order) {
    std::vector<const std::string*> chain;
    const std::string* cur = &name;
    std::unordered_set<std::string> on_chain;
    while (!depth.contains(*cur)) {
      if (!on_chain.insert(*cur).second) {
        throw DataError("taxonomy " + at_line(nodes[*cur].line) + "cycle detected involving '" + *cur + "'");
      }
      chain.push_back(cur);
      const auto& node = nodes[*cur];
      if (!node.parent) {
        depth[*cur] = 0;
        chain.pop_back();
        break;
      }
      cur = &*node.parent;
    }
    std::size_t d = depth[*cur];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) depth[**it] = ++d;
  }

  std::size_t n_levels = 0;
  for (const auto& [name, d] : depth) n_levels = std::max(n_levels, d + 1);

  LevelNames names(n_levels);
  for (const auto& name : order) names[depth[name]].push_back(name);
  LevelParents parents(n_levels);
  for (std::size_t level = 1; level < n_levels; ++level) {
    std::unordered_map<std::string_view, std::uint32_t> index_of;
    for (std::size_t k = 0; k < names[level - 1].size(); ++k) index_of[names[level - 1][k]] = static_cast<std::uint32_t>(k);
    for (const auto& name : names[level]) parents[level].push_back(index_of.at(*nodes[name].parent));
  }
  if (options.allow_childless) pad_childless(names, parents);
  return Taxonomy::from_levels(std::move(names), std::move(parents));
}

Taxonomy parse_taxonomy_json(std::string_view text, TaxonomyParseOptions options) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("taxonomy json: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("levels") || !doc["levels"].is_array()) {
    throw DataError("taxonomy json: expected an object with a \"levels\" array");
  }
  LevelNames names;
  for (std::size_t level = 0; level < doc["levels"].size(); ++level) {
    const auto& arr = doc["levels"][level];
    if (!arr.is_array()) throw DataError("taxonomy json: levels[" + std::to_string(level) + "] is not an array");
    auto& out = names.emplace_back();
    for (std::size_t k = 0; k < arr.size(); ++k) {
      if (!arr[k].is_string()) {
        throw DataError("taxonomy json: levels[" + std::to_string(level) + "][" + std::to_string(k) + "] is not a string");
      }
      out.push_back(arr[k].get<std::string>());
    }
  }
  if (names.empty()) throw DataError("taxonomy json: empty taxonomy (no levels)");

  std::vector<std::unordered_map<std::string, std::uint32_t>> lookup(names.size());
  for (std::size_t level = 0; level < names.size(); ++level) {
    if (names[level].empty()) throw DataError("taxonomy json: levels[" + std::to_string(level) + "] is empty");
    for (std::size_t k = 0; k < names[level].size(); ++k) {
      if (!lookup[level].emplace(names[level][k], static_cast<std::uint32_t>(k)).second) {
        throw DataError("taxonomy json: duplicate class '" + names[level][k] + "' in levels[" + std::to_string(level) + "]");
      }
    }
  }

  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  LevelParents parents(names.size());
  for (std::size_t level = 1; level < names.size(); ++level) parents[level].assign(names[level].size(), kUnset);

  const auto edges = doc.contains("edges") ? doc["edges"] : nlohmann::json::array();
  if (!edges.is_array()) throw DataError("taxonomy json: \"edges\" is not an array");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto ctx = "taxonomy json: edges[" + std::to_string(e) + "]: ";
    const auto& edge = edges[e];
    if (!edge.is_array() || edge.size() != 2 || !edge[0].is_string() || !edge[1].is_string()) {
      throw DataError(ctx + "expected [child, parent]");
    }
    const auto child = edge[0].get<std::string>();
    const auto parent = edge[1].get<std::string>();
    std::optional<std::size_t> child_level;
    for (std::size_t level = 1; level < names.size(); ++level) {
      if (lookup[level].contains(child) && lookup[level - 1].contains(parent)) {
        if (child_level) throw DataError(ctx + "ambiguous edge '" + child + "' -> '" + parent + "'");
        child_level = level;
      }
    }
    if (!child_level) {
      throw DataError(ctx + "no level holds '" + child + "' directly below '" + parent + "'");
    }
    auto& slot = parents[*child_level][lookup[*child_level][child]];
    const auto p = lookup[*child_level - 1][parent];
    if (slot == p) throw DataError(ctx + "duplicate edge for class '" + child + "'");
    if (slot != kUnset) throw DataError(ctx + "class '" + child + "' has multiple parents");
    slot = p;
  }
  for (std::size_t level = 1; level < names.size(); ++level) {
    for (std::size_t j = 0; j < names[level].size(); ++j) {
      if (parents[level][j] == kUnset) {
        throw DataError("taxonomy json: class '" + names[level][j] + "' in levels[" + std::to_string(level) +
                        "] has no parent");
      }
    }
  }
  if (options.allow_childless) pad_childless(names, parents);
  return Taxonomy::from_levels(std::move(names), std::move(parents));
}

Taxonomy load_taxonomy(const std::filesystem::path& path, TaxonomyParseOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("taxonomy: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    if (path.extension() == ".json") return parse_taxonomy_json(buf.str(), options);
    return parse_taxonomy(buf.str(), options);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_taxonomy(const Taxonomy& tax) {
  std::unordered_set<std::string> seen;
  std::string out;
  for (std::size_t level = 0; level < tax.n_levels(); ++level) {
    for (std::size_t k = 0; k < tax.level_size(level); ++k) {
      const auto& n = tax.name(level, k);
      if (!seen.insert(n).second) {
        throw DataError("taxonomy: class name '" + n + "' repeats across levels; use the JSON form");
      }
      out += n;
      out += '\t';
      out += level == 0 ? std::string("-") : tax.name(level - 1, tax.parent_index(level, k));
      out += '\n';
    }
  }
  return out;
}

std::string serialize_taxonomy_json(const Taxonomy& tax) {
  nlohmann::ordered_json doc;
  doc["levels"] = nlohmann::ordered_json::array();
  doc["edges"] = nlohmann::ordered_json::array();
  for (std::size_t level = 0; level < tax.n_levels(); ++level) {
    auto names = tax.level_names(level);
    doc["levels"].push_back(std::vector<std::string>(names.begin(), names.end()));
    if (level == 0) continue;
    for (std::size_t k = 0; k < names.size(); ++k) {
      doc["edges"].push_back({names[k], tax.name(level - 1, tax.parent_index(level, k))});
    }
  }
  return doc.dump(2) + "\n";
}

TransitionMatrix transition_matrix(const Taxonomy& tax, std::size_t upper) {
  if (upper + 1 >= tax.n_levels()) {
    throw std::out_of_range("transition_matrix: level " + std::to_string(upper) + " has no level below it (n_levels=" +
                            std::to_string(tax.n_levels()) + ")");
  }
  const auto rows = tax.level_size(upper);
  const auto cols = tax.level_size(upper + 1);
  std::vector<std::uint8_t> entries(rows * cols, 0);
  for (std::size_t j = 0; j < cols; ++j) entries[tax.parent_index(upper + 1, j) * cols + j] = 1;
  return TransitionMatrix(rows, cols, std::move(entries));
}

bool is_descendant(const Taxonomy& tax, ClassId child, ClassId ancestor) {
  const auto c = tax.locate(child);
  const auto a = tax.locate(ancestor);
  if (c.level <= a.level) return false;
  auto index = c.index;
  for (auto level = c.level; level > a.level; --level) index = tax.parent_index(level, index);
  return index == a.index;
}

std::vector<ClassId> path_of(const Taxonomy& tax, ClassId leaf) {
  const auto ref = tax.locate(leaf);
  if (ref.level + 1 != tax.n_levels()) {
    throw std::invalid_argument("path_of: class '" + tax.name(leaf) + "' is not on the deepest level");
  }
  std::vector<ClassId> path(tax.n_levels());
  auto index = ref.index;
  for (auto level = ref.level + 1; level-- > 0;) {
    path[level] = tax.id(level, index);
    if (level > 0) index = tax.parent_index(level, index);
  }
  return path;
}

LabelPath leaf_path(const Taxonomy& tax, std::uint32_t leaf_index) {
  const auto n = tax.n_levels();
  LabelPath path(n);
  path[n - 1] = leaf_index;
  for (auto level = n - 1; level > 0; --level) path[level - 1] = tax.parent_index(level, path[level]);
  return path;
}

bool is_consistent(const Taxonomy& tax, const LabelPath& path) {
  if (path.size() != tax.n_levels()) return false;
  for (std::size_t level = 0; level < path.size(); ++level) {
    if (path[level] >= tax.level_size(level)) return false;
    if (level > 0 && tax.parent_index(level, path[level]) != path[level - 1]) return false;
  }
  return true;
}

}  // namespace dttc
