#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dttc {

// Dense global class identifier, assigned level-major in file order.
enum class ClassId : std::uint32_t {};

constexpr std::uint32_t to_index(ClassId id) { return static_cast<std::uint32_t>(id); }

struct ClassRef {
  std::size_t level = 0;
  std::size_t index = 0;
  bool operator==(const ClassRef&) const = default;
};

// One class per level, stored as the class's local index within that level.
using LabelPath = std::vector<std::uint32_t>;

// Binary |upper| x |lower| parent/child incidence between two adjacent levels.
class TransitionMatrix {
 public:
  TransitionMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  std::span<const std::uint8_t> entries() const { return entries_; }

  bool operator==(const TransitionMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> entries_;
};

// An n-level tree taxonomy. Immutable once built; every class below the
// first level has exactly one parent on the level directly above, and every
// class above the deepest level has at least one child.
class Taxonomy {
 public:
  // `parents[i][j]` is the index (within level i-1) of the parent of class j
  // at level i; `parents[0]` must be empty. Throws DataError on violations.
  static Taxonomy from_levels(std::vector<std::vector<std::string>> names,
                              std::vector<std::vector<std::uint32_t>> parents);

  std::size_t n_levels() const { return names_.size(); }
  std::size_t level_size(std::size_t level) const { return names_.at(level).size(); }
  std::vector<std::size_t> level_sizes() const;
  std::size_t total_classes() const { return offsets_.back(); }

  std::span<const std::string> level_names(std::size_t level) const { return names_.at(level); }
  const std::string& name(std::size_t level, std::size_t index) const { return names_.at(level).at(index); }
  const std::string& name(ClassId id) const;

  ClassId id(std::size_t level, std::size_t index) const;
  ClassRef locate(ClassId id) const;
  bool valid(ClassId id) const { return to_index(id) < total_classes(); }
  std::optional<std::uint32_t> find(std::size_t level, std::string_view name) const;

  // Parent of class `index` at `level` (level >= 1), as an index into level-1.
  std::uint32_t parent_index(std::size_t level, std::size_t index) const {
    return parents_.at(level).at(index);
  }
  std::optional<ClassId> parent(ClassId id) const;
  std::span<const std::uint32_t> children(std::size_t level, std::size_t index) const {
    return children_.at(level).at(index);
  }

  bool operator==(const Taxonomy& other) const {
    return names_ == other.names_ && parents_ == other.parents_;
  }

 private:
  Taxonomy() = default;

  std::vector<std::vector<std::string>> names_;
  std::vector<std::vector<std::uint32_t>> parents_;
  std::vector<std::vector<std::vector<std::uint32_t>>> children_;
  std::vector<std::size_t> offsets_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> lookup_;
};

struct TaxonomyParseOptions {
  // Pad childless non-leaf-level classes with a synthetic "other" child chain
  // instead of rejecting the file.
  bool allow_childless = false;
};

// Tab-separated edge list: `child<TAB>parent`, roots as `root<TAB>-`.
// Empty lines and lines starting with '#' are ignored.
Taxonomy parse_taxonomy(std::string_view text, TaxonomyParseOptions options = {});

// {"levels": [[names...], ...], "edges": [[child, parent], ...]}
Taxonomy parse_taxonomy_json(std::string_view text, TaxonomyParseOptions options = {});

// Dispatches on extension: `.json` uses the JSON form, anything else the edge list.
Taxonomy load_taxonomy(const std::filesystem::path& path, TaxonomyParseOptions options = {});

// Edge-list form accepted by parse_taxonomy. Class names must be unique
// across levels for this form; throws DataError otherwise.
std::string serialize_taxonomy(const Taxonomy& tax);
std::string serialize_taxonomy_json(const Taxonomy& tax);

// M between level `upper` and `upper + 1` (zero-based levels).
TransitionMatrix transition_matrix(const Taxonomy& tax, std::size_t upper);

// True iff walking parent links from `child` reaches `ancestor`. A class is
// never its own descendant.
bool is_descendant(const Taxonomy& tax, ClassId child, ClassId ancestor);

// Root-to-leaf path for a class on the deepest level.
std::vector<ClassId> path_of(const Taxonomy& tax, ClassId leaf);

// True iff path[i + 1] is a child of path[i] for every adjacent pair.
bool is_consistent(const Taxonomy& tax, const LabelPath& path);

// Full path (local indices) ending at the given deepest-level class.
LabelPath leaf_path(const Taxonomy& tax, std::uint32_t leaf_index);

}  // namespace dttc
