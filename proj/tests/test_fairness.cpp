#include <doctest.h>

#include <random>

#include "dttc/fairness.hpp"
#include "support.hpp"

using namespace dttc;
using dttc::testing::default_vocab;

namespace {

constexpr std::uint32_t kMale = 0, kFemale = 1, kBackground = 2;

}  // namespace

TEST_CASE("thirty women predicted hair care") {
  const auto vocab = default_vocab();
  REQUIRE(vocab[kFemale].name == "Female");
  REQUIRE(vocab[kBackground].name == "Background");
  std::vector<std::uint32_t> groups(30, kFemale);
  std::vector<LabelPath> pred(30, LabelPath{0, 0, 1});
  groups.push_back(kBackground);
  pred.push_back({0, 0, 1});

  const auto counts = group_class_counts(groups, pred, 1);
  CHECK(counts.at({kFemale, 0}) == 30);
  CHECK(counts.at({kBackground, 0}) == 1);

  const FairnessConfig cfg;
  const auto w = dynamic_weights(cfg, vocab, groups, pred, 1);
  CHECK(w[0] == 1.0 / (30.0 + 1e-8));
  CHECK(std::abs(w[0] - 0.033333) < 1e-6);
  CHECK(w[30] == 1.0);
}

TEST_CASE("edge batches") {
  const auto vocab = default_vocab();
  CHECK(group_class_counts({}, {}, 0).empty());
  const FairnessConfig cfg;
  const std::vector<std::uint32_t> one = {kMale};
  const std::vector<LabelPath> pred = {{1}};
  const auto w = dynamic_weights(cfg, vocab, one, pred, 0);
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(w[0] < 1.0);
}

TEST_CASE("external counts replace the batch's own") {
  const auto vocab = default_vocab();
  const FairnessConfig cfg;
  const std::vector<std::uint32_t> groups = {kMale, kFemale};
  const std::vector<LabelPath> pred = {{0}, {1}};
  GroupClassCounts counts = {{{kMale, 0}, 4}, {{kFemale, 1}, 10}};
  const auto w = dynamic_weights(cfg, vocab, groups, pred, 0, counts);
  CHECK(w[0] == 1.0 / (4.0 + 1e-8));
  CHECK(w[1] == 1.0 / (10.0 + 1e-8));
}

TEST_CASE("normalised weights average to one") {
  const auto vocab = default_vocab();
  FairnessConfig cfg;
  cfg.normalize_weights = true;
  const std::vector<std::uint32_t> groups = {kMale, kMale, kFemale, kBackground};
  const std::vector<LabelPath> pred = {{0}, {0}, {0}, {1}};
  const auto w = dynamic_weights(cfg, vocab, groups, pred, 0);
  CHECK((w[0] + w[1] + w[2] + w[3]) / 4.0 == doctest::Approx(1.0).epsilon(1e-14));
  // Raw weights 1/(2+eps) and 1/(1+eps); normalising keeps their ratio.
  CHECK(w[2] / w[0] == doctest::Approx((2.0 + 1e-8) / (1.0 + 1e-8)).epsilon(1e-14));
}

TEST_CASE("property: counts and weights match a double loop") {
  std::mt19937_64 rng(51);
  const auto vocab = default_vocab();
  const FairnessConfig cfg;
  std::uniform_int_distribution<std::uint32_t> g(0, 2), cls(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = trial % 40;
    std::vector<std::uint32_t> groups(m);
    std::vector<LabelPath> pred(m);
    for (std::size_t j = 0; j < m; ++j) {
      groups[j] = g(rng);
      pred[j] = {cls(rng), cls(rng)};
    }
    const std::size_t level = trial % 2;
    const auto counts = group_class_counts(groups, pred, level);
    const auto w = dynamic_weights(cfg, vocab, groups, pred, level);
    std::size_t total = 0;
    for (const auto& [key, n] : counts) total += n;
    REQUIRE(total == m);
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t same = 0;
      for (std::size_t k = 0; k < m; ++k) same += groups[k] == groups[j] && pred[k][level] == pred[j][level];
      REQUIRE(counts.at({groups[j], pred[j][level]}) == same);
      const double expected = groups[j] == kBackground ? 1.0 : 1.0 / (static_cast<double>(same) + cfg.epsilon);
      REQUIRE(w[j] == expected);
    }
  }
}

TEST_CASE("weighted loss") {
  const WeightTable ones = {{1, 1}, {1, 1}, {1, 1}};
  const std::vector<std::vector<double>> losses = {{0.5, 1.0}, {2.0, 0.25}, {1.0, 1.0}};
  const std::vector<double> unit = {1, 1, 1};
  CHECK(apply_weights(ones, losses, unit) == doctest::Approx((0.5 + 2.0 + 1.0 + 1.0 + 0.25 + 1.0) / 2.0));
  const std::vector<double> doubled = {2, 1, 1};
  CHECK(apply_weights(ones, losses, doubled) - apply_weights(ones, losses, unit) ==
        doctest::Approx((0.5 + 1.0) / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(apply_weights(ones, losses, std::vector<double>{1, 1}), std::invalid_argument);
}

TEST_CASE("property: weighted loss matches a triple loop") {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> unit(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 4, m = 1 + trial % 17;
    WeightTable w(n, std::vector<double>(m));
    std::vector<std::vector<double>> loss(n, std::vector<double>(m));
    std::vector<double> pi(n);
    for (auto& p : pi) p = unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) w[i][j] = unit(rng), loss[i][j] = unit(rng);
    }
    double expected = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double level = 0.0;
      for (std::size_t j = 0; j < m; ++j) level += w[i][j] * loss[i][j];
      expected += pi[i] * level;
    }
    expected /= static_cast<double>(m);
    REQUIRE(std::abs(apply_weights(w, loss, pi) - expected) <= 1e-12);
  }
}

TEST_CASE("neutral group cannot also be sensitive") {
  FairnessConfig cfg;
  cfg.neutral = "Male";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
