#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dttc/dataset.hpp"
#include "dttc/fairness.hpp"
#include "dttc/taxonomy.hpp"
#include "dttc/ttc.hpp"

namespace dttc {

// How the gradient treats the parent-probability mask of masked variants.
enum class MaskGradient {
  Detached,  // mask is a constant of the forward pass
  Full,      // chain rule flows through the mask into upper-level heads
};

std::string_view mask_gradient_name(MaskGradient mode);
MaskGradient parse_mask_gradient(std::string_view text);

// Floor inside -log(p + floor).
inline constexpr double kLogFloor = 1e-12;

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::vector<double> pi;  // per-level importance; empty means all ones
  std::uint64_t seed = 0;
  MaskGradient mask_gradient = MaskGradient::Detached;
  Variant variant = Variant::Base;
  double tau = 1.0;
  FairnessConfig fairness;
  // Count (group, predicted class) cells over the whole training set at the
  // start of each epoch instead of per mini-batch.
  bool epoch_counts = false;

  void validate(std::size_t n_levels) const;
  std::vector<double> level_factors(std::size_t n_levels) const;
};

double level_loss(std::span<const double> probs, std::uint32_t truth);

struct LevelGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};
using Gradients = std::vector<LevelGradient>;

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
  std::vector<LabelPath> predicted;  // argmax paths of the batch, pre-update
};

// Loss and gradients of the batch rows `rows` of `ds`. The forward pass uses
// params.variant and params.tau; reweighted variants count cells from the
// batch's own argmax predictions unless `counts` (one map per level) is given.
LossAndGradients loss_and_gradients(const ModelParams& params, std::span<const TransitionMatrix> transitions,
                                    const Dataset& ds, std::span<const std::size_t> rows, const TrainConfig& cfg,
                                    const std::vector<GroupClassCounts>* counts = nullptr);

double batch_loss(const ModelParams& params, const Taxonomy& tax, const Dataset& ds,
                  std::span<const std::size_t> rows, const TrainConfig& cfg);
Gradients gradients(const ModelParams& params, const Taxonomy& tax, const Dataset& ds,
                    std::span<const std::size_t> rows, const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::vector<double> level_accuracy;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  bool operator==(const TrainReport&) const = default;
};

// One JSON object per epoch, newline-terminated.
std::string to_jsonl(const TrainReport& report);

// W ~ U(-1/sqrt(d), 1/sqrt(d)) from the seeded generator, b = 0.
ModelParams init_params(const Taxonomy& tax, std::size_t dim, const TrainConfig& cfg);

struct FitResult {
  ModelParams params;  // rounded to checkpoint (float) precision
  TrainReport report;
};

// Mini-batch SGD with momentum over seeded shuffles. Throws NumericError on a
// non-finite loss.
FitResult fit(const Dataset& ds, const Taxonomy& tax, const TrainConfig& cfg);

}  // namespace dttc
