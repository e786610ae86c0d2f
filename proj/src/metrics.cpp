#include "dttc/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iterator>
#include <stdexcept>

#include <json.hpp>

namespace dttc {

std::string_view eo_aggregation_name(EoAggregation agg) { return agg == EoAggregation::Mean ? "mean" : "max"; }

EoAggregation parse_eo_aggregation(std::string_view text) {
  if (text == "mean") return EoAggregation::Mean;
  if (text == "max") return EoAggregation::Max;
  throw std::invalid_argument("unknown EO aggregation '" + std::string(text) + "' (expected mean or max)");
}

namespace {

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": prediction and truth counts differ");
  if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
}

void check_path(const Taxonomy& tax, const LabelPath& p) {
  if (p.size() != tax.n_levels()) throw std::invalid_argument("metrics: path length does not match taxonomy levels");
  for (std::size_t level = 0; level < p.size(); ++level) {
    if (p[level] >= tax.level_size(level)) throw std::out_of_range("metrics: class index out of range");
  }
}

}  // namespace

double hierarchical_f1(std::span<const LabelPath> pred, std::span<const LabelPath> truth, const Taxonomy& tax) {
  check_aligned(pred.size(), truth.size(), "hierarchical_f1");
  std::size_t inter = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  std::vector<std::uint32_t> p_ids;
  std::vector<std::uint32_t> t_ids;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    check_path(tax, pred[j]);
    check_path(tax, truth[j]);
    p_ids.clear();
    t_ids.clear();
    for (std::size_t level = 0; level < tax.n_levels(); ++level) {
      p_ids.push_back(to_index(tax.id(level, pred[j][level])));
      t_ids.push_back(to_index(tax.id(level, truth[j][level])));
    }
    // Level-major ids are already sorted.
    std::vector<std::uint32_t> common;
    std::set_intersection(p_ids.begin(), p_ids.end(), t_ids.begin(), t_ids.end(), std::back_inserter(common));
    inter += common.size();
    predicted += p_ids.size();
    actual += t_ids.size();
  }
  const double hp = static_cast<double>(inter) / static_cast<double>(predicted);
  const double hr = static_cast<double>(inter) / static_cast<double>(actual);
  return hp + hr == 0.0 ? 0.0 : 2.0 * hp * hr / (hp + hr);
}

double consistency_rate(std::span<const LabelPath> pred, const Taxonomy& tax) {
  if (pred.empty()) throw std::invalid_argument("consistency_rate: empty input");
  std::size_t ok = 0;
  for (const auto& p : pred) {
    check_path(tax, p);
    ok += is_consistent(tax, p);
  }
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

double exact_match_rate(std::span<const LabelPath> pred, std::span<const LabelPath> truth) {
  check_aligned(pred.size(), truth.size(), "exact_match_rate");
  std::size_t ok = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) ok += pred[j] == truth[j];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

EqualizedOdds equalized_odds(std::span<const LabelPath> pred, std::span<const LabelPath> truth,
                             std::span<const std::uint32_t> groups, std::size_t level, const GroupVocab& vocab,
                             std::size_t n_classes) {
  check_aligned(pred.size(), truth.size(), "equalized_odds");
  if (groups.size() != pred.size()) throw std::invalid_argument("equalized_odds: group count differs");

  std::vector<std::uint32_t> present;
  for (std::uint32_t g = 0; g < vocab.size(); ++g) {
    if (vocab[g].is_sensitive && std::find(groups.begin(), groups.end(), g) != groups.end()) present.push_back(g);
  }
  EqualizedOdds out;
  if (present.size() < 2) return out;

  std::size_t classes = n_classes;
  for (const auto& p : truth) classes = std::max<std::size_t>(classes, p.at(level) + 1);
  for (const auto& p : pred) classes = std::max<std::size_t>(classes, p.at(level) + 1);

  double sum = 0.0;
  for (std::uint32_t c = 0; c < classes; ++c) {
    std::vector<double> tpr;
    std::vector<double> fpr;
    bool defined = true;
    for (auto g : present) {
      std::size_t pos = 0, neg = 0, tp = 0, fp = 0;
      for (std::size_t j = 0; j < pred.size(); ++j) {
        if (groups[j] != g) continue;
        const bool is_pos = truth[j][level] == c;
        const bool said_pos = pred[j][level] == c;
        pos += is_pos;
        neg += !is_pos;
        tp += is_pos && said_pos;
        fp += !is_pos && said_pos;
      }
      if (pos == 0 || neg == 0) {
        defined = false;
        break;
      }
      tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
      fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    }
    if (!defined) {
      ++out.classes_skipped;
      continue;
    }
    const auto [tlo, thi] = std::minmax_element(tpr.begin(), tpr.end());
    const auto [flo, fhi] = std::minmax_element(fpr.begin(), fpr.end());
    sum += std::max(*thi - *tlo, *fhi - *flo);
    ++out.classes_used;
  }
  if (out.classes_used > 0) out.value = sum / static_cast<double>(out.classes_used);
  return out;
}

MetricsReport report(std::span<const LabelPath> pred, std::span<const LabelPath> truth,
                     std::span<const std::uint32_t> groups, const Taxonomy& tax, const GroupVocab& vocab,
                     EoAggregation aggregation) {
  check_aligned(pred.size(), truth.size(), "report");
  if (groups.size() != pred.size()) throw std::invalid_argument("report: group count differs");
  const auto n = tax.n_levels();
  const auto m = pred.size();

  MetricsReport r;
  r.instances = m;
  r.hf1 = hierarchical_f1(pred, truth, tax);
  r.consistency = consistency_rate(pred, tax);
  r.exact_match = exact_match_rate(pred, truth);
  r.eo_aggregation = aggregation;

  std::vector<double> defined;
  for (std::size_t level = 0; level < n; ++level) {
    const auto eo = equalized_odds(pred, truth, groups, level, vocab, tax.level_size(level));
    r.eo_per_level.push_back(eo.value);
    r.eo_skipped_classes.push_back(eo.classes_skipped);
    if (eo.value) defined.push_back(*eo.value);
  }
  if (!defined.empty()) {
    if (aggregation == EoAggregation::Mean) {
      double s = 0.0;
      for (double v : defined) s += v;
      r.eo_avg = s / static_cast<double>(defined.size());
    } else {
      r.eo_avg = *std::max_element(defined.begin(), defined.end());
    }
  }

  std::vector<std::size_t> correct(n, 0);
  std::vector<std::size_t> group_count(vocab.size(), 0);
  std::vector<std::vector<std::size_t>> group_correct(vocab.size(), std::vector<std::size_t>(n, 0));
  for (std::size_t j = 0; j < m; ++j) {
    const auto g = groups[j];
    if (g >= vocab.size()) throw std::out_of_range("report: undeclared group index");
    ++group_count[g];
    for (std::size_t level = 0; level < n; ++level) {
      const bool ok = pred[j][level] == truth[j][level];
      correct[level] += ok;
      group_correct[g][level] += ok;
    }
  }
  for (std::size_t level = 0; level < n; ++level) {
    r.per_level_accuracy.push_back(static_cast<double>(correct[level]) / static_cast<double>(m));
  }
  for (std::uint32_t g = 0; g < vocab.size(); ++g) {
    if (group_count[g] == 0) continue;
    GroupAccuracy ga{vocab[g].name, group_count[g], {}};
    for (std::size_t level = 0; level < n; ++level) {
      ga.per_level_accuracy.push_back(static_cast<double>(group_correct[g][level]) /
                                      static_cast<double>(group_count[g]));
    }
    r.per_group.push_back(std::move(ga));
  }
  return r;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); }

std::string to_json(const MetricsReport& r) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json doc;
  doc["instances"] = r.instances;
  doc["hf1"] = r.hf1;
  doc["consistency"] = r.consistency;
  doc["exact_match"] = r.exact_match;
  doc["eo_per_level"] = ordered_json::array();
  for (const auto& v : r.eo_per_level) doc["eo_per_level"].push_back(opt(v));
  doc["eo_avg"] = opt(r.eo_avg);
  doc["eo_aggregation"] = std::string(eo_aggregation_name(r.eo_aggregation));
  doc["eo_skipped_classes"] = r.eo_skipped_classes;
  doc["per_level_accuracy"] = r.per_level_accuracy;
  doc["per_group"] = ordered_json::array();
  for (const auto& g : r.per_group) {
    ordered_json entry;
    entry["group"] = g.group;
    entry["count"] = g.count;
    entry["per_level_accuracy"] = g.per_level_accuracy;
    doc["per_group"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

std::string metrics_csv_header(std::size_t n_levels) {
  std::string s = "hf1,consistency,exact_match";
  for (std::size_t level = 0; level < n_levels; ++level) s += ",eo_l" + std::to_string(level + 1);
  return s + ",eo_avg";
}

std::string metrics_csv_row(const MetricsReport& r) {
  std::string s = format_number(r.hf1) + "," + format_number(r.consistency) + "," + format_number(r.exact_match);
  for (const auto& v : r.eo_per_level) s += "," + format_number(v);
  return s + "," + format_number(r.eo_avg);
}

}  // namespace dttc
