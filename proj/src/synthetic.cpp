#include "dttc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dttc/error.hpp"

namespace dttc {

void SyntheticSpec::validate() const {
  if (shape.empty()) throw std::invalid_argument("synthetic: shape must have at least one level");
  for (auto c : shape) {
    if (c == 0) throw std::invalid_argument("synthetic: shape entries must be positive");
  }
  if (total_samples == 0 && samples_per_leaf == 0) throw std::invalid_argument("synthetic: no samples requested");
  if (dim == 0) throw std::invalid_argument("synthetic: feature dimension must be positive");
  if (!(separation >= 0.0)) throw std::invalid_argument("synthetic: separation must be >= 0");
  if (!(level_decay > 0.0)) throw std::invalid_argument("synthetic: level decay must be > 0");
  if (!(bias >= 0.0 && bias <= 1.0)) throw std::invalid_argument("synthetic: bias strength must lie in [0, 1]");
  if (!(corruption_shift >= 0.0)) throw std::invalid_argument("synthetic: corruption shift must be >= 0");
  if (!(group_signal >= 0.0)) throw std::invalid_argument("synthetic: group signal must be >= 0");
  if (groups.empty()) throw std::invalid_argument("synthetic: at least one group is required");
  double total = 0.0;
  std::size_t neutral = 0;
  for (const auto& g : groups) {
    if (!(g.proportion > 0.0)) throw std::invalid_argument("synthetic: group proportions must be positive");
    total += g.proportion;
    if (!g.sensitive) ++neutral;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("synthetic: group proportions must sum to 1");
  if (neutral > 1) throw std::invalid_argument("synthetic: at most one neutral group");
}

GroupVocab SyntheticSpec::vocab() const {
  std::vector<std::string> sensitive;
  std::optional<std::string> neutral;
  for (const auto& g : groups) {
    if (g.sensitive) {
      sensitive.push_back(g.name);
    } else {
      neutral = g.name;
    }
  }
  return GroupVocab(std::move(sensitive), std::move(neutral));
}

Taxonomy make_synthetic_taxonomy(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw std::invalid_argument("synthetic taxonomy: empty shape");
  std::vector<std::vector<std::string>> names(shape.size());
  std::vector<std::vector<std::uint32_t>> parents(shape.size());
  for (std::size_t k = 0; k < shape[0]; ++k) names[0].push_back(std::string(1, static_cast<char>('A' + k % 26)) +
                                                                (k >= 26 ? std::to_string(k / 26) : ""));
  for (std::size_t level = 1; level < shape.size(); ++level) {
    for (std::size_t p = 0; p < names[level - 1].size(); ++p) {
      for (std::size_t c = 0; c < shape[level]; ++c) {
        names[level].push_back(names[level - 1][p] + "." + std::to_string(c + 1));
        parents[level].push_back(static_cast<std::uint32_t>(p));
      }
    }
  }
  return Taxonomy::from_levels(std::move(names), std::move(parents));
}

namespace {

std::vector<std::vector<double>> draw_means(const SyntheticSpec& spec, const Taxonomy& tax, std::mt19937_64& rng) {
  const auto n = tax.n_levels();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<std::vector<double>>> offsets(n);
  double scale = spec.separation;
  for (std::size_t level = 0; level < n; ++level) {
    for (std::size_t k = 0; k < tax.level_size(level); ++k) {
      std::vector<double> v(spec.dim);
      double norm = 0.0;
      while (norm == 0.0) {
        for (auto& x : v) x = normal(rng);
        norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      }
      for (auto& x : v) x *= scale / norm;
      offsets[level].push_back(std::move(v));
    }
    scale *= spec.level_decay;
  }
  const auto leaves = tax.level_size(n - 1);
  std::vector<std::vector<double>> means(leaves, std::vector<double>(spec.dim, 0.0));
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    const auto path = leaf_path(tax, static_cast<std::uint32_t>(leaf));
    for (std::size_t level = 0; level < n; ++level) {
      for (std::size_t k = 0; k < spec.dim; ++k) means[leaf][k] += offsets[level][path[level]][k];
    }
  }
  return means;
}

void check_fits(const SyntheticSpec& spec, const Taxonomy& tax) {
  spec.validate();
  if (tax.n_levels() < 2) throw std::invalid_argument("synthetic: taxonomy needs at least 2 levels");
  if (spec.dim < tax.n_levels()) {
    throw std::invalid_argument("synthetic: feature dimension " + std::to_string(spec.dim) +
                                " is too small to place distinct cluster means for " + std::to_string(tax.n_levels()) +
                                " levels");
  }
}

// Splits `total` into parts proportional to `weights` (largest remainder).
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> parts(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    parts[i] = static_cast<std::size_t>(std::floor(exact));
    used += parts[i];
    rem.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total; ++k, ++used) ++parts[rem[k % rem.size()].second];
  return parts;
}

}  // namespace

std::vector<std::vector<double>> synthetic_cluster_means(const SyntheticSpec& spec, const Taxonomy& tax) {
  check_fits(spec, tax);
  std::mt19937_64 rng(spec.seed);
  return draw_means(spec, tax, rng);
}

Dataset generate_synthetic(const SyntheticSpec& spec, const Taxonomy& tax) {
  check_fits(spec, tax);
  std::mt19937_64 rng(spec.seed);
  const auto means = draw_means(spec, tax, rng);
  const auto n = tax.n_levels();
  const auto leaves = tax.level_size(n - 1);
  const auto d = spec.dim;

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> signals;
  for (const auto& g : spec.groups) {
    std::vector<double> v(d, 0.0);
    if (g.sensitive && spec.group_signal > 0.0) {
      double norm = 0.0;
      while (norm == 0.0) {
        for (auto& x : v) x = normal(rng);
        norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      }
      for (auto& x : v) x *= spec.group_signal / norm;
    }
    signals.push_back(std::move(v));
  }

  std::vector<std::size_t> per_leaf(leaves, spec.samples_per_leaf);
  if (spec.total_samples > 0) per_leaf = apportion(spec.total_samples, std::vector<double>(leaves, 1.0));
  std::vector<double> proportions;
  for (const auto& g : spec.groups) proportions.push_back(g.proportion);

  const auto vocab = spec.vocab();
  std::vector<std::uint32_t> group_index;
  for (const auto& g : spec.groups) group_index.push_back(*vocab.find(g.name));

  const auto m = std::accumulate(per_leaf.begin(), per_leaf.end(), std::size_t{0});
  std::vector<float> values;
  values.reserve(m * d);
  std::vector<LabelPath> labels;
  std::vector<std::uint32_t> groups;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(d);
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    const auto path = leaf_path(tax, static_cast<std::uint32_t>(leaf));
    const auto siblings = tax.children(n - 2, path[n - 2]);
    const auto counts = apportion(per_leaf[leaf], proportions);
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
      for (std::size_t r = 0; r < counts[g]; ++r) {
        for (std::size_t k = 0; k < d; ++k) x[k] = means[leaf][k] + normal(rng) + signals[g][k];
        if (spec.groups[g].biased && siblings.size() > 1 && unit(rng) < spec.bias) {
          std::vector<std::uint32_t> others;
          std::copy_if(siblings.begin(), siblings.end(), std::back_inserter(others),
                       [&](std::uint32_t s) { return s != leaf; });
          std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
          const auto sib = others[pick(rng)];
          for (std::size_t k = 0; k < d; ++k) x[k] += spec.corruption_shift * (means[sib][k] - means[leaf][k]);
        }
        for (double v : x) values.push_back(static_cast<float>(v));
        labels.push_back(path);
        groups.push_back(group_index[g]);
      }
    }
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  Dataset ds;
  ds.vocab = vocab;
  ds.features = FeatureMatrix(m, d, std::move(values));
  ds.labels = std::move(labels);
  ds.groups = std::move(groups);
  ds.ids.resize(m);
  ds = subset(ds, order);
  const auto width = std::to_string(m).size();
  for (std::size_t j = 0; j < m; ++j) {
    auto id = std::to_string(j);
    ds.ids[j] = "s" + std::string(width - std::min(width, id.size()), '0') + id;
  }
  return ds;
}

}  // namespace dttc
