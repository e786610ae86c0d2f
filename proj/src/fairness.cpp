#include "dttc/fairness.hpp"

#include <stdexcept>

namespace dttc {

void FairnessConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("fairness: epsilon must be positive");
  for (const auto& s : sensitive) {
    if (s == neutral) throw std::invalid_argument("fairness: neutral group '" + neutral + "' is listed as sensitive");
  }
}

GroupVocab FairnessConfig::vocab() const {
  validate();
  return GroupVocab(sensitive, neutral.empty() ? std::nullopt : std::optional<std::string>(neutral));
}

GroupClassCounts group_class_counts(std::span<const std::uint32_t> groups, std::span<const LabelPath> predicted,
                                    std::size_t level) {
  if (groups.size() != predicted.size()) throw std::invalid_argument("group_class_counts: length mismatch");
  GroupClassCounts counts;
  for (std::size_t j = 0; j < groups.size(); ++j) ++counts[{groups[j], predicted[j].at(level)}];
  return counts;
}

std::vector<double> dynamic_weights(const FairnessConfig& cfg, const GroupVocab& vocab,
                                    std::span<const std::uint32_t> groups, std::span<const LabelPath> predicted,
                                    std::size_t level) {
  return dynamic_weights(cfg, vocab, groups, predicted, level, group_class_counts(groups, predicted, level));
}

std::vector<double> dynamic_weights(const FairnessConfig& cfg, const GroupVocab& vocab,
                                    std::span<const std::uint32_t> groups, std::span<const LabelPath> predicted,
                                    std::size_t level, const GroupClassCounts& counts) {
  if (groups.size() != predicted.size()) throw std::invalid_argument("dynamic_weights: length mismatch");
  std::vector<double> w(groups.size(), 1.0);
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (!vocab[groups[j]].is_sensitive) continue;
    const auto it = counts.find({groups[j], predicted[j].at(level)});
    const auto n = it == counts.end() ? 0 : it->second;
    w[j] = 1.0 / (static_cast<double>(n) + cfg.epsilon);
  }
  if (cfg.normalize_weights && !w.empty()) {
    double mean = 0.0;
    for (double x : w) mean += x;
    mean /= static_cast<double>(w.size());
    for (auto& x : w) x /= mean;
  }
  return w;
}

WeightTable weight_table(const FairnessConfig& cfg, const GroupVocab& vocab, std::span<const std::uint32_t> groups,
                         std::span<const LabelPath> predicted, std::size_t n_levels) {
  WeightTable table;
  for (std::size_t level = 0; level < n_levels; ++level) {
    table.push_back(dynamic_weights(cfg, vocab, groups, predicted, level));
  }
  return table;
}

double apply_weights(const WeightTable& weights, const std::vector<std::vector<double>>& losses,
                     std::span<const double> pi) {
  if (weights.size() != losses.size() || pi.size() != losses.size()) {
    throw std::invalid_argument("apply_weights: level count mismatch");
  }
  if (losses.empty()) return 0.0;
  const auto m = losses.front().size();
  if (m == 0) throw std::invalid_argument("apply_weights: empty batch");
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < losses.size(); ++i) {
      if (weights[i].size() != m || losses[i].size() != m) throw std::invalid_argument("apply_weights: length mismatch");
      total += pi[i] * weights[i][j] * losses[i][j];
    }
  }
  return total / static_cast<double>(m);
}

}  // namespace dttc
