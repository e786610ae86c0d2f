#include "dttc/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "dttc/error.hpp"
#include "dttc/kernels.hpp"

namespace dttc {

std::string_view mask_gradient_name(MaskGradient mode) {
  return mode == MaskGradient::Detached ? "detached" : "full";
}

MaskGradient parse_mask_gradient(std::string_view text) {
  if (text == "detached") return MaskGradient::Detached;
  if (text == "full") return MaskGradient::Full;
  throw std::invalid_argument("unknown mask gradient mode '" + std::string(text) + "' (expected detached or full)");
}

void TrainConfig::validate(std::size_t n_levels) const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("train: momentum must lie in [0, 1)");
  if (batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("train: temperature must be positive");
  if (!pi.empty() && pi.size() != n_levels) {
    throw std::invalid_argument("train: " + std::to_string(pi.size()) + " importance factors for " +
                                std::to_string(n_levels) + " levels");
  }
  for (double p : pi) {
    if (!(p > 0.0)) throw std::invalid_argument("train: importance factors must be positive");
  }
  fairness.validate();
}

std::vector<double> TrainConfig::level_factors(std::size_t n_levels) const {
  return pi.empty() ? std::vector<double>(n_levels, 1.0) : pi;
}

double level_loss(std::span<const double> probs, std::uint32_t truth) {
  if (truth >= probs.size()) throw std::out_of_range("level_loss: true class index out of range");
  return -std::log(probs[truth] + kLogFloor);
}

LossAndGradients loss_and_gradients(const ModelParams& params, std::span<const TransitionMatrix> transitions,
                                    const Dataset& ds, std::span<const std::size_t> rows, const TrainConfig& cfg,
                                    const std::vector<GroupClassCounts>* counts) {
  if (rows.empty()) throw std::invalid_argument("batch: empty batch");
  const auto n = params.n_levels();
  const auto pi = cfg.level_factors(n);
  const bool masked = uses_mask(params.variant);
  const bool through_mask = masked && cfg.mask_gradient == MaskGradient::Full;
  const double tau = params.tau;

  std::vector<ForwardTrace> traces;
  traces.reserve(rows.size());
  LossAndGradients out;
  out.predicted.reserve(rows.size());
  std::vector<std::uint32_t> groups;
  for (auto r : rows) {
    traces.push_back(forward(params, transitions, ds.features.row(r)));
    LabelPath p;
    for (const auto& level : traces.back().levels) p.push_back(argmax(level.probs));
    out.predicted.push_back(std::move(p));
    groups.push_back(ds.groups[r]);
  }

  WeightTable weights;
  if (uses_reweighting(params.variant)) {
    for (std::size_t level = 0; level < n; ++level) {
      weights.push_back(counts ? dynamic_weights(cfg.fairness, ds.vocab, groups, out.predicted, level, (*counts)[level])
                               : dynamic_weights(cfg.fairness, ds.vocab, groups, out.predicted, level));
    }
  } else {
    weights.assign(n, std::vector<double>(rows.size(), 1.0));
  }

  out.grads.resize(n);
  for (std::size_t level = 0; level < n; ++level) {
    out.grads[level].weights.assign(params.heads[level].weights.size(), 0.0);
    out.grads[level].bias.assign(params.heads[level].classes, 0.0);
  }

  const double inv_m = 1.0 / static_cast<double>(rows.size());
  std::vector<std::vector<double>> dprob(n);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto& trace = traces[j];
    const auto& truth = ds.labels[rows[j]];
    const auto a = ds.features.row(rows[j]);
    for (std::size_t level = 0; level < n; ++level) dprob[level].assign(trace.levels[level].probs.size(), 0.0);

    for (std::size_t level = n; level-- > 0;) {
      const auto& t = trace.levels[level];
      const double coef = pi[level] * weights[level][j] * inv_m;
      const auto y = truth[level];
      out.loss += coef * level_loss(t.probs, y);
      auto& g = dprob[level];
      g[y] -= coef / (t.probs[y] + kLogFloor);

      // Softmax Jacobian: du_k = p_k (g_k - <g, p>) / tau.
      const double gp = std::inner_product(g.begin(), g.end(), t.probs.begin(), 0.0);
      auto& grad = out.grads[level];
      const auto dim = params.heads[level].dim;
      for (std::size_t k = 0; k < t.probs.size(); ++k) {
        const double du = t.probs[k] * (g[k] - gp) / tau;
        const bool scaled = masked && level > 0;
        const double dz = scaled ? du * t.mask[k] : du;
        if (through_mask && level > 0) {
          const auto& parent = transitions[level - 1];
          for (std::size_t r = 0; r < parent.rows(); ++r) {
            if (parent(r, k)) dprob[level - 1][r] += du * t.logits[k];
          }
        }
        grad.bias[k] += dz;
        kernels::axpy(dz, a, std::span<double>(grad.weights.data() + k * dim, dim));
      }
    }
  }
  return out;
}

double batch_loss(const ModelParams& params, const Taxonomy& tax, const Dataset& ds,
                  std::span<const std::size_t> rows, const TrainConfig& cfg) {
  params.check_compatible(tax, ds.dim());
  const auto transitions = transition_stack(tax);
  return loss_and_gradients(params, transitions, ds, rows, cfg).loss;
}

Gradients gradients(const ModelParams& params, const Taxonomy& tax, const Dataset& ds,
                    std::span<const std::size_t> rows, const TrainConfig& cfg) {
  params.check_compatible(tax, ds.dim());
  const auto transitions = transition_stack(tax);
  return loss_and_gradients(params, transitions, ds, rows, cfg).grads;
}

std::string to_jsonl(const TrainReport& report) {
  std::string out;
  for (const auto& e : report.epochs) {
    nlohmann::ordered_json rec;
    rec["epoch"] = e.epoch;
    rec["loss"] = e.mean_loss;
    rec["level_accuracy"] = e.level_accuracy;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

ModelParams init_params(const Taxonomy& tax, std::size_t dim, const TrainConfig& cfg) {
  if (dim == 0) throw ShapeError("train: feature dimension is zero");
  auto params = ModelParams::zeros(tax, dim, cfg.variant, cfg.tau);
  std::mt19937_64 rng(cfg.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (auto& head : params.heads) {
    for (auto& w : head.weights) w = uniform(rng);
  }
  return params;
}

FitResult fit(const Dataset& ds, const Taxonomy& tax, const TrainConfig& cfg) {
  const auto n = tax.n_levels();
  cfg.validate(n);
  ds.validate(tax);
  if (ds.size() == 0) throw DataError("train: empty dataset");

  auto params = init_params(tax, ds.dim(), cfg);
  const auto transitions = transition_stack(tax);
  // Shuffles draw from a stream separate from initialisation so that the
  // initial weights depend only on the seed and the shapes.
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<LevelGradient> velocity(n);
  for (std::size_t level = 0; level < n; ++level) {
    velocity[level].weights.assign(params.heads[level].weights.size(), 0.0);
    velocity[level].bias.assign(params.heads[level].classes, 0.0);
  }

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  FitResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<GroupClassCounts> global;
    if (cfg.epoch_counts && uses_reweighting(params.variant)) {
      const auto predicted = predict_paths(params, tax, ds.features);
      for (std::size_t level = 0; level < n; ++level) global.push_back(group_class_counts(ds.groups, predicted, level));
    }

    double loss_sum = 0.0;
    std::vector<std::size_t> correct(n, 0);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      auto lg = loss_and_gradients(params, transitions, ds, rows, cfg, global.empty() ? nullptr : &global);
      if (!std::isfinite(lg.loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch starting at row " +
                           std::to_string(start) + " (learning rate too high?)");
      }
      loss_sum += lg.loss * static_cast<double>(rows.size());
      for (std::size_t j = 0; j < rows.size(); ++j) {
        for (std::size_t level = 0; level < n; ++level) correct[level] += lg.predicted[j][level] == ds.labels[rows[j]][level];
      }
      for (std::size_t level = 0; level < n; ++level) {
        auto& head = params.heads[level];
        auto& vel = velocity[level];
        const auto& g = lg.grads[level];
        for (std::size_t k = 0; k < head.weights.size(); ++k) {
          vel.weights[k] = cfg.momentum * vel.weights[k] + g.weights[k];
          head.weights[k] -= cfg.learning_rate * vel.weights[k];
        }
        for (std::size_t k = 0; k < head.bias.size(); ++k) {
          vel.bias[k] = cfg.momentum * vel.bias[k] + g.bias[k];
          head.bias[k] -= cfg.learning_rate * vel.bias[k];
        }
      }
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.mean_loss = loss_sum / static_cast<double>(ds.size());
    for (std::size_t level = 0; level < n; ++level) {
      rec.level_accuracy.push_back(static_cast<double>(correct[level]) / static_cast<double>(ds.size()));
    }
    result.report.epochs.push_back(std::move(rec));
  }
  params.round_to_float();
  for (const auto& head : params.heads) {
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(head.weights.begin(), head.weights.end(), finite) ||
        !std::all_of(head.bias.begin(), head.bias.end(), finite)) {
      throw NumericError("train: parameters overflow the float range (learning rate too high?)");
    }
  }
  result.params = std::move(params);
  return result;
}

}  // namespace dttc
