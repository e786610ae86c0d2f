#pragma once

// Shared fixtures and random generators for the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dttc/dataset.hpp"
#include "dttc/taxonomy.hpp"

namespace dttc::testing {

// Beauty -> {Hair Care, Cosmetics} -> {Hair Color, Shampoo, Lipsticks, Skin Care}
inline const char* kBeautyTsv =
    "Beauty\t-\n"
    "Hair Care\tBeauty\n"
    "Cosmetics\tBeauty\n"
    "Hair Color\tHair Care\n"
    "Shampoo\tHair Care\n"
    "Lipsticks\tCosmetics\n"
    "Skin Care\tCosmetics\n";

inline Taxonomy beauty() { return parse_taxonomy(kBeautyTsv); }

// Random tree with `levels` levels; every non-deepest class gets 1..max_children children.
inline Taxonomy random_tree(std::mt19937_64& rng, std::size_t levels, std::size_t max_roots, std::size_t max_children) {
  std::uniform_int_distribution<std::size_t> roots(1, max_roots);
  std::uniform_int_distribution<std::size_t> kids(1, max_children);
  std::vector<std::vector<std::string>> names(levels);
  std::vector<std::vector<std::uint32_t>> parents(levels);
  const auto r = roots(rng);
  for (std::size_t k = 0; k < r; ++k) names[0].push_back("c0_" + std::to_string(k));
  for (std::size_t level = 1; level < levels; ++level) {
    for (std::uint32_t p = 0; p < names[level - 1].size(); ++p) {
      const auto c = kids(rng);
      for (std::size_t k = 0; k < c; ++k) {
        names[level].push_back("c" + std::to_string(level) + "_" + std::to_string(names[level].size()));
        parents[level].push_back(p);
      }
    }
  }
  return Taxonomy::from_levels(std::move(names), std::move(parents));
}

// Uniformly random consistent path (uniform leaf).
inline LabelPath random_path(std::mt19937_64& rng, const Taxonomy& tax) {
  std::uniform_int_distribution<std::uint32_t> leaf(0, static_cast<std::uint32_t>(tax.level_size(tax.n_levels() - 1) - 1));
  return leaf_path(tax, leaf(rng));
}

// Independent class per level; may be inconsistent.
inline LabelPath random_any_path(std::mt19937_64& rng, const Taxonomy& tax) {
  LabelPath p;
  for (std::size_t level = 0; level < tax.n_levels(); ++level) {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(tax.level_size(level) - 1));
    p.push_back(pick(rng));
  }
  return p;
}

inline GroupVocab default_vocab() { return GroupVocab({"Male", "Female"}, std::string("Background")); }

inline Dataset random_dataset(std::mt19937_64& rng, const Taxonomy& tax, std::size_t m, std::size_t d,
                              const GroupVocab& vocab = default_vocab()) {
  Dataset ds;
  ds.vocab = vocab;
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> values(m * d);
  for (auto& v : values) v = normal(rng);
  ds.features = FeatureMatrix(m, d, std::move(values));
  std::uniform_int_distribution<std::uint32_t> group(0, static_cast<std::uint32_t>(vocab.size() - 1));
  for (std::size_t j = 0; j < m; ++j) {
    ds.labels.push_back(random_path(rng, tax));
    ds.groups.push_back(group(rng));
    ds.ids.push_back("r" + std::to_string(j));
  }
  return ds;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dttc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dttc::testing
