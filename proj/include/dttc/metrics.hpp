#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dttc/dataset.hpp"
#include "dttc/taxonomy.hpp"

namespace dttc {

enum class EoAggregation { Mean, Max };

std::string_view eo_aggregation_name(EoAggregation agg);
EoAggregation parse_eo_aggregation(std::string_view text);

// Micro-averaged hierarchical F1 over per-instance class sets. Each
// instance's set is its n predicted (resp. true) classes by global id; a full
// path is its own ancestor closure.
double hierarchical_f1(std::span<const LabelPath> pred, std::span<const LabelPath> truth, const Taxonomy& tax);

// Fraction of predicted paths whose every adjacent pair is parent -> child.
double consistency_rate(std::span<const LabelPath> pred, const Taxonomy& tax);

// Fraction of instances predicted correctly on every level.
double exact_match_rate(std::span<const LabelPath> pred, std::span<const LabelPath> truth);

struct EqualizedOdds {
  // Macro-average over classes of the largest TPR / FPR gap between any two
  // sensitive groups; nullopt when no class has defined rates.
  std::optional<double> value;
  std::size_t classes_used = 0;
  // Classes where some present sensitive group has no positives or no negatives.
  std::size_t classes_skipped = 0;
};

// One-vs-rest equalized-odds gap at `level` over the sensitive groups of
// `vocab` that occur in `groups`. `n_classes` is the level size; 0 means the
// largest class index seen plus one.
EqualizedOdds equalized_odds(std::span<const LabelPath> pred, std::span<const LabelPath> truth,
                             std::span<const std::uint32_t> groups, std::size_t level, const GroupVocab& vocab,
                             std::size_t n_classes = 0);

struct GroupAccuracy {
  std::string group;
  std::size_t count = 0;
  std::vector<double> per_level_accuracy;
  bool operator==(const GroupAccuracy&) const = default;
};

struct MetricsReport {
  std::size_t instances = 0;
  double hf1 = 0.0;
  double consistency = 0.0;
  double exact_match = 0.0;
  std::vector<std::optional<double>> eo_per_level;
  std::vector<std::size_t> eo_skipped_classes;
  std::optional<double> eo_avg;
  EoAggregation eo_aggregation = EoAggregation::Mean;
  std::vector<double> per_level_accuracy;
  std::vector<GroupAccuracy> per_group;  // vocabulary order, groups present only

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport report(std::span<const LabelPath> pred, std::span<const LabelPath> truth,
                     std::span<const std::uint32_t> groups, const Taxonomy& tax, const GroupVocab& vocab,
                     EoAggregation aggregation = EoAggregation::Mean);

// Shortest round-trip decimal form; "NA" for an undefined value.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

// JSON with a fixed key order.
std::string to_json(const MetricsReport& r);
// `hf1,consistency,exact_match,eo_l1..eo_ln,eo_avg`
std::string metrics_csv_header(std::size_t n_levels);
std::string metrics_csv_row(const MetricsReport& r);

}  // namespace dttc
