#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dttc/taxonomy.hpp"

namespace dttc {

// Row-major m x d matrix of backbone feature vectors.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0f) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const float> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  std::span<float> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const float> values() const { return values_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
};

struct GroupTag {
  std::string name;
  bool is_sensitive = true;
  bool operator==(const GroupTag&) const = default;
};

// Declared demographic groups. At most one tag is neutral.
class GroupVocab {
 public:
  GroupVocab() = default;
  GroupVocab(std::vector<std::string> sensitive, std::optional<std::string> neutral);

  std::span<const GroupTag> tags() const { return tags_; }
  std::size_t size() const { return tags_.size(); }
  const GroupTag& operator[](std::size_t g) const { return tags_.at(g); }
  std::optional<std::uint32_t> find(std::string_view name) const;
  std::optional<std::uint32_t> neutral() const { return neutral_; }

  bool operator==(const GroupVocab&) const = default;

 private:
  std::vector<GroupTag> tags_;
  std::optional<std::uint32_t> neutral_;
};

struct Dataset {
  FeatureMatrix features;
  std::vector<LabelPath> labels;
  std::vector<std::uint32_t> groups;  // indices into vocab
  std::vector<std::string> ids;
  GroupVocab vocab;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  // Row counts agree, every path is complete and taxonomy-consistent, every
  // group index is declared and every feature is finite. Throws DataError.
  void validate(const Taxonomy& tax) const;

  bool operator==(const Dataset&) const = default;
};

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);

// Binary features: "DTTC", u32 version=1, u64 m, u64 d, m*d little-endian f32.
std::string encode_features(const FeatureMatrix& features);
FeatureMatrix decode_features(std::string_view bytes);
FeatureMatrix parse_features_csv(std::string_view text);

// `.csv` paths are read as comma-separated text; anything else as binary.
FeatureMatrix load_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureMatrix& features);

struct LabelTable {
  std::vector<std::string> ids;
  std::vector<LabelPath> paths;
};

// Rows `id,l1,...,ln` with class names; an optional header row starting with
// `id` is skipped.
LabelTable parse_labels(std::string_view text, const Taxonomy& tax);
LabelTable load_labels(const std::filesystem::path& path, const Taxonomy& tax);
std::string format_labels(const LabelTable& table, const Taxonomy& tax);

// Rows `id,group`, aligned to `ids`. Throws DataError for unknown groups,
// ids not in `ids` and ids without a group row.
std::vector<std::uint32_t> parse_groups(std::string_view text, const GroupVocab& vocab,
                                        std::span<const std::string> ids);
std::vector<std::uint32_t> load_groups(const std::filesystem::path& path, const GroupVocab& vocab,
                                       std::span<const std::string> ids);
std::string format_groups(std::span<const std::string> ids, std::span<const std::uint32_t> groups,
                          const GroupVocab& vocab);

Dataset load_dataset(const std::filesystem::path& features, const std::filesystem::path& labels,
                     const std::filesystem::path& groups, const Taxonomy& tax, const GroupVocab& vocab);

// Writes features.bin, labels.csv and groups.csv into `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds, const Taxonomy& tax);

struct SplitResult {
  Dataset train;
  Dataset test;
  // Rows whose (leaf, group) stratum had fewer than two members and were
  // assigned from a pooled remainder stratum.
  std::size_t fallback_rows = 0;
};

// Seeded shuffle split. With `stratify`, each (leaf class, group) stratum is
// split in proportion; the train total is always round(fraction * m).
SplitResult split(const Dataset& ds, const Taxonomy& tax, double train_fraction, std::uint64_t seed,
                  bool stratify = true);

// Minimal CSV helpers shared by the loaders and CLI writers.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace dttc
