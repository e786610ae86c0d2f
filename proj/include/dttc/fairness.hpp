#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dttc/dataset.hpp"
#include "dttc/taxonomy.hpp"

namespace dttc {

struct FairnessConfig {
  double epsilon = 1e-8;
  std::vector<std::string> sensitive = {"Male", "Female"};
  std::string neutral = "Background";
  // Rescale each level's weights so their batch mean is 1.
  bool normalize_weights = false;

  // Throws std::invalid_argument unless epsilon > 0 and the neutral group is
  // not also sensitive.
  void validate() const;
  GroupVocab vocab() const;
};

// (group index, predicted class index) -> number of instances.
using GroupClassCounts = std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t>;

// Counts instances per (group, predicted class at `level`).
GroupClassCounts group_class_counts(std::span<const std::uint32_t> groups, std::span<const LabelPath> predicted,
                                    std::size_t level);

// 1 / (N(g_j, yhat_j) + epsilon) for sensitive instances, 1 for the rest.
// `counts` defaults to the counts of this same batch.
std::vector<double> dynamic_weights(const FairnessConfig& cfg, const GroupVocab& vocab,
                                    std::span<const std::uint32_t> groups, std::span<const LabelPath> predicted,
                                    std::size_t level);
std::vector<double> dynamic_weights(const FairnessConfig& cfg, const GroupVocab& vocab,
                                    std::span<const std::uint32_t> groups, std::span<const LabelPath> predicted,
                                    std::size_t level, const GroupClassCounts& counts);

// weights[level][instance]
using WeightTable = std::vector<std::vector<double>>;

WeightTable weight_table(const FairnessConfig& cfg, const GroupVocab& vocab, std::span<const std::uint32_t> groups,
                         std::span<const LabelPath> predicted, std::size_t n_levels);

// (1/m) sum_j sum_i pi[i] * weights[i][j] * losses[i][j]; both tables are
// indexed [level][instance].
double apply_weights(const WeightTable& weights, const std::vector<std::vector<double>>& losses,
                     std::span<const double> pi);

}  // namespace dttc
