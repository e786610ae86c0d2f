#pragma once

// Central-difference check of loss_and_gradients against an independent
// re-implementation of the weighted multi-level loss.

#include <algorithm>
#include <cmath>
#include <random>

#include "dttc/fairness.hpp"
#include "dttc/trainer.hpp"
#include "support.hpp"

namespace dttc::testing {

// parents[j][level] = probabilities of level-1 that feed level's mask for row j.
using ParentTable = std::vector<std::vector<std::vector<double>>>;

// Loss with the reweighting table held fixed, written out level by level.
// When `frozen` is given, masks are built from it instead of from `p`, which
// is what a detached mask means.
inline double oracle_loss(const ModelParams& p, const Taxonomy& tax, const Dataset& ds,
                          const std::vector<std::size_t>& rows, const TrainConfig& cfg, const WeightTable& w,
                          const ParentTable* frozen = nullptr, ParentTable* record = nullptr) {
  const auto n = tax.n_levels();
  const auto pi = cfg.level_factors(n);
  double total = 0.0;
  if (record) record->assign(rows.size(), std::vector<std::vector<double>>(n));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto x = ds.features.row(rows[j]);
    std::vector<double> parent;
    for (std::size_t level = 0; level < n; ++level) {
      const auto& h = p.heads[level];
      const auto& upper = frozen ? (*frozen)[j][level] : parent;
      if (record) (*record)[j][level] = parent;
      std::vector<double> u(h.classes);
      for (std::size_t k = 0; k < h.classes; ++k) {
        double z = h.bias[k];
        for (std::size_t c = 0; c < h.dim; ++c) z += h.weights[k * h.dim + c] * x[c];
        const double mask = level > 0 ? upper[tax.parent_index(level, k)] : 1.0;
        u[k] = (uses_mask(p.variant) ? z * mask : z) / p.tau;
      }
      const double hi = *std::max_element(u.begin(), u.end());
      double s = 0.0;
      for (auto& v : u) s += (v = std::exp(v - hi));
      for (auto& v : u) v /= s;
      total += pi[level] * w[level][j] * -std::log(u[ds.labels[rows[j]][level]] + kLogFloor);
      parent = std::move(u);
    }
  }
  return total / static_cast<double>(rows.size());
}

struct GradCheck {
  double worst_relative = 0.0;
  double loss_gap = 0.0;  // |analytic loss - oracle loss|
  std::size_t coordinates = 0;
};

// Relative error uses max(|analytic|, |numeric|, floor) as the denominator so
// that coordinates whose true gradient is ~0 are judged on absolute error.
inline GradCheck check_gradients(const ModelParams& p, const Taxonomy& tax, const Dataset& ds,
                                 const std::vector<std::size_t>& rows, const TrainConfig& cfg, double h = 1e-4,
                                 double floor = 1e-6) {
  const auto transitions = transition_stack(tax);
  const auto lg = loss_and_gradients(p, transitions, ds, rows, cfg);

  std::vector<std::uint32_t> groups;
  for (auto r : rows) groups.push_back(ds.groups[r]);
  WeightTable w(tax.n_levels(), std::vector<double>(rows.size(), 1.0));
  if (uses_reweighting(p.variant)) {
    for (std::size_t level = 0; level < tax.n_levels(); ++level) {
      w[level] = dynamic_weights(cfg.fairness, ds.vocab, groups, lg.predicted, level);
    }
  }

  GradCheck out;
  ParentTable base_parents;
  out.loss_gap = std::abs(lg.loss - oracle_loss(p, tax, ds, rows, cfg, w, nullptr, &base_parents));
  const ParentTable* frozen =
      uses_mask(p.variant) && cfg.mask_gradient == MaskGradient::Detached ? &base_parents : nullptr;

  auto q = p;
  for (std::size_t level = 0; level < p.n_levels(); ++level) {
    for (auto* values : {&q.heads[level].weights, &q.heads[level].bias}) {
      const bool is_bias = values == &q.heads[level].bias;
      const auto& analytic = is_bias ? lg.grads[level].bias : lg.grads[level].weights;
      for (std::size_t k = 0; k < values->size(); ++k) {
        const double saved = (*values)[k];
        (*values)[k] = saved + h;
        const double up = oracle_loss(q, tax, ds, rows, cfg, w, frozen);
        (*values)[k] = saved - h;
        const double down = oracle_loss(q, tax, ds, rows, cfg, w, frozen);
        (*values)[k] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
        out.worst_relative = std::max(out.worst_relative, std::abs(analytic[k] - numeric) / denom);
        ++out.coordinates;
      }
    }
  }
  return out;
}

// Random taxonomy with three levels of at most `cap` classes each.
inline Taxonomy small_three_level_tree(std::mt19937_64& rng, std::size_t cap = 5) {
  while (true) {
    auto tax = random_tree(rng, 3, 2, 3);
    if (tax.level_size(1) <= cap && tax.level_size(2) <= cap) return tax;
  }
}

inline ModelParams random_params(std::mt19937_64& rng, const Taxonomy& tax, std::size_t d, Variant v, double tau) {
  auto p = ModelParams::zeros(tax, d, v, tau);
  std::normal_distribution<double> normal(0.0, 0.8);
  for (auto& head : p.heads) {
    for (auto& w : head.weights) w = normal(rng);
    for (auto& b : head.bias) b = normal(rng);
  }
  return p;
}

}  // namespace dttc::testing
