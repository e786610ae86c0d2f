#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "dttc/synthetic.hpp"
#include "support.hpp"

using namespace dttc;

namespace {

// Leaf accuracy per group of the classifier that picks the closest true
// cluster mean.
std::map<std::string, double> nearest_mean_accuracy(const SyntheticSpec& spec, const Taxonomy& tax,
                                                    const Dataset& ds) {
  const auto means = synthetic_cluster_means(spec, tax);
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t j = 0; j < ds.size(); ++j) {
    const auto x = ds.features.row(j);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t leaf = 0; leaf < means.size(); ++leaf) {
      double dist = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) dist += (x[k] - means[leaf][k]) * (x[k] - means[leaf][k]);
      if (dist < best_d) best_d = dist, best = leaf;
    }
    auto& [hits, total] = tally[ds.vocab[ds.groups[j]].name];
    hits += best == ds.labels[j].back();
    ++total;
  }
  std::map<std::string, double> acc;
  for (const auto& [g, t] : tally) acc[g] = static_cast<double>(t.first) / static_cast<double>(t.second);
  return acc;
}

}  // namespace

TEST_CASE("synthetic taxonomy names and shape") {
  const auto tax = make_synthetic_taxonomy({2, 2, 2});
  CHECK(tax.level_sizes() == std::vector<std::size_t>{2, 4, 8});
  CHECK(tax.name(2, 3) == "A.2.2");
  CHECK(tax.name(1, 2) == "B.1");
}

TEST_CASE("generated rows are consistent, balanced and seeded") {
  SyntheticSpec spec;
  spec.seed = 3;
  spec.bias = 0.3;
  const auto tax = make_synthetic_taxonomy(spec.shape);
  const auto a = generate_synthetic(spec, tax);
  a.validate(tax);
  CHECK(a.size() == 800);
  CHECK(a.dim() == 16);
  CHECK(a == generate_synthetic(spec, tax));
  spec.seed = 4;
  CHECK_FALSE(a == generate_synthetic(spec, tax));

  spec.total_samples = 2500;
  const auto b = generate_synthetic(spec, tax);
  CHECK(b.size() == 2500);
  std::map<std::uint32_t, std::size_t> per_leaf;
  for (const auto& p : b.labels) ++per_leaf[p.back()];
  for (const auto& [leaf, n] : per_leaf) CHECK((n == 312 || n == 313));
}

TEST_CASE("no bias: nearest-mean accuracy is the same for every group") {
  SyntheticSpec spec;
  spec.samples_per_leaf = 1500;
  spec.seed = 5;
  const auto tax = make_synthetic_taxonomy(spec.shape);
  const auto acc = nearest_mean_accuracy(spec, tax, generate_synthetic(spec, tax));
  double lo = 1.0, hi = 0.0;
  for (const auto& [g, a] : acc) lo = std::min(lo, a), hi = std::max(hi, a);
  CHECK(hi - lo < 0.02);
}

TEST_CASE("bias hurts only the biased group") {
  SyntheticSpec spec;
  spec.samples_per_leaf = 1500;
  spec.bias = 0.5;
  spec.seed = 6;
  const auto tax = make_synthetic_taxonomy(spec.shape);
  const auto acc = nearest_mean_accuracy(spec, tax, generate_synthetic(spec, tax));
  CHECK(acc.at("Female") < acc.at("Background"));
  CHECK(acc.at("Background") - acc.at("Female") > 0.3);
  CHECK(std::abs(acc.at("Male") - acc.at("Background")) < 0.03);
}

TEST_CASE("invalid recipes") {
  const auto tax = make_synthetic_taxonomy({2, 2});
  SyntheticSpec spec;
  spec.bias = 1.5;
  CHECK_THROWS_AS(generate_synthetic(spec, tax), std::invalid_argument);
  spec = {};
  spec.dim = 1;
  CHECK_THROWS_AS(generate_synthetic(spec, tax), std::invalid_argument);
  spec = {};
  spec.groups = {{"Male", 0.5, true, false}, {"Female", 0.2, true, true}};
  CHECK_THROWS_AS(generate_synthetic(spec, tax), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic(SyntheticSpec{}, make_synthetic_taxonomy({3})), std::invalid_argument);
}
