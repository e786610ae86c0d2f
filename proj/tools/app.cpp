#include "app.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dttc/dataset.hpp"
#include "dttc/error.hpp"
#include "dttc/fairness.hpp"
#include "dttc/metrics.hpp"
#include "dttc/synthetic.hpp"
#include "dttc/taxonomy.hpp"
#include "dttc/trainer.hpp"
#include "dttc/ttc.hpp"

namespace fs = std::filesystem;

namespace dttc::cli {

namespace {

struct Options {
  std::string config;
  std::string taxonomy;
  bool allow_childless = false;
  std::string features, labels, groups;
  std::string test_features, test_labels, test_groups;
  std::string out = "out";
  std::string run_name;
  std::string checkpoint;
  std::string output;
  std::uint64_t seed = 0;

  std::string variant = "base";
  double tau = 1.0;
  std::vector<double> pi;
  double epsilon = 1e-8;
  double lr = 0.1;
  double momentum = 0.9;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::string mask_gradient = "detached";
  bool normalize_weights = false;
  bool epoch_counts = false;
  std::vector<std::string> sensitive = {"Male", "Female"};
  std::string neutral = "Background";
  std::string eo_aggregation = "mean";

  std::vector<std::size_t> shape = {2, 2, 2};
  std::size_t samples_per_leaf = 100;
  std::size_t total_samples = 0;
  std::size_t dim = 16;
  double separation = SyntheticSpec{}.separation;
  double level_decay = SyntheticSpec{}.level_decay;
  double bias = 0.0;
  double corruption_shift = SyntheticSpec{}.corruption_shift;
  double group_signal = SyntheticSpec{}.group_signal;
  std::vector<std::string> group_proportions = {"Male=0.3", "Female=0.3", "Background=0.4"};
  std::vector<std::string> biased_groups = {"Female"};
  double train_fraction = 0.8;
  bool no_stratify = false;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "Flat key = value config file (command-line flags take precedence)");
  sub->add_option("--taxonomy", o.taxonomy, "Taxonomy file (TSV edge list, or .json)");
  sub->add_flag("--allow-childless", o.allow_childless, "Pad childless classes with a synthetic 'other' child");
  sub->add_option("--out", o.out, "Output root directory");
  sub->add_option("--run-name", o.run_name, "Run directory name under --out");
  sub->add_option("--seed", o.seed, "Random seed");
}

void add_groups(CLI::App* sub, Options& o) {
  sub->add_option("--sensitive", o.sensitive, "Sensitive group names")->delimiter(',');
  sub->add_option("--neutral", o.neutral, "Neutral (background) group name");
}

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--features", o.features, "Feature file (binary DTTC or .csv)")->required();
  sub->add_option("--labels", o.labels, "Labels CSV: id,l1..ln")->required();
  sub->add_option("--groups", o.groups, "Groups CSV: id,group")->required();
  add_groups(sub, o);
}

void add_test_data(CLI::App* sub, Options& o) {
  sub->add_option("--test-features", o.test_features, "Evaluation features (defaults to the training data)");
  sub->add_option("--test-labels", o.test_labels, "Evaluation labels");
  sub->add_option("--test-groups", o.test_groups, "Evaluation groups");
}

void add_training(CLI::App* sub, Options& o) {
  sub->add_option("--variant", o.variant, "Model variant")
      ->check(CLI::IsMember({"base", "d", "h", "hd"}, CLI::ignore_case));
  sub->add_option("--tau", o.tau, "Softmax temperature");
  sub->add_option("--pi", o.pi, "Per-level loss importance factors")->delimiter(',');
  sub->add_option("--epsilon", o.epsilon, "Reweighting epsilon");
  sub->add_option("--lr", o.lr, "Learning rate");
  sub->add_option("--momentum", o.momentum, "SGD momentum");
  sub->add_option("--epochs", o.epochs, "Training epochs");
  sub->add_option("--batch-size", o.batch_size, "Mini-batch size");
  sub->add_option("--mask-gradient", o.mask_gradient, "Gradient through the parent mask")
      ->check(CLI::IsMember({"detached", "full"}));
  sub->add_flag("--normalize-weights", o.normalize_weights, "Rescale dynamic weights to batch mean 1");
  sub->add_flag("--epoch-counts", o.epoch_counts, "Count reweighting cells over the epoch, not the batch");
}

void add_eval(CLI::App* sub, Options& o) {
  sub->add_option("--eo-aggregation", o.eo_aggregation, "Aggregate per-level EO by mean or max")
      ->check(CLI::IsMember({"mean", "max"}));
}

void add_synthetic(CLI::App* sub, Options& o) {
  sub->add_option("--shape", o.shape, "Children per node per level (first entry: number of roots)")->delimiter(',');
  sub->add_option("--samples-per-leaf", o.samples_per_leaf, "Rows per leaf class");
  sub->add_option("--total-samples", o.total_samples, "Total rows, spread evenly over leaves (overrides per-leaf)");
  sub->add_option("--dim", o.dim, "Feature dimension");
  sub->add_option("--separation", o.separation, "Norm of first-level cluster offsets");
  sub->add_option("--level-decay", o.level_decay, "Offset norm multiplier per deeper level");
  sub->add_option("--bias", o.bias, "Probability a biased-group row is moved toward a sibling cluster");
  sub->add_option("--corruption-shift", o.corruption_shift, "Fraction of the way to the sibling mean");
  sub->add_option("--group-signal", o.group_signal, "Norm of a per-group feature offset for sensitive groups");
  sub->add_option("--group-proportions", o.group_proportions, "Name=proportion entries")->delimiter(',');
  sub->add_option("--biased-groups", o.biased_groups, "Groups subject to corruption")->delimiter(',');
  sub->add_option("--train-fraction", o.train_fraction, "Train share of the train/test split");
  sub->add_flag("--no-stratify", o.no_stratify, "Split without (leaf, group) stratification");
  sub->add_option("--neutral", o.neutral, "Neutral (background) group name");
}

std::string resolved_config(const CLI::App& sub) {
  std::string out;
  for (const auto* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& key = opt->get_lnames().front();
    if (key == "help" || key == "config") continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      value = opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
      if (value.size() >= 2 && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
      // CLI11 renders an empty vector default as "{}"; an empty value reads back as "unset".
      if (value == "{}") value.clear();
    }
    out += key + " = " + value + "\n";
  }
  return out;
}

Taxonomy taxonomy_from(const Options& o) {
  if (o.taxonomy.empty()) throw std::invalid_argument("--taxonomy is required");
  return load_taxonomy(o.taxonomy, {o.allow_childless});
}

FairnessConfig fairness_from(const Options& o) {
  FairnessConfig f;
  f.epsilon = o.epsilon;
  f.sensitive = o.sensitive;
  f.neutral = o.neutral;
  f.normalize_weights = o.normalize_weights;
  f.validate();
  return f;
}

TrainConfig train_config_from(const Options& o) {
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.momentum = o.momentum;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.pi = o.pi;
  cfg.seed = o.seed;
  cfg.mask_gradient = parse_mask_gradient(o.mask_gradient);
  cfg.variant = parse_variant(o.variant);
  cfg.tau = o.tau;
  cfg.fairness = fairness_from(o);
  cfg.epoch_counts = o.epoch_counts;
  return cfg;
}

fs::path run_dir(const Options& o, const std::string& fallback) {
  auto dir = fs::path(o.out) / (o.run_name.empty() ? fallback : o.run_name);
  fs::create_directories(dir);
  return dir;
}

Dataset train_data(const Options& o, const Taxonomy& tax, const GroupVocab& vocab) {
  return load_dataset(o.features, o.labels, o.groups, tax, vocab);
}

std::optional<Dataset> test_data(const Options& o, const Taxonomy& tax, const GroupVocab& vocab) {
  const int given = !o.test_features.empty() + !o.test_labels.empty() + !o.test_groups.empty();
  if (given == 0) return std::nullopt;
  if (given != 3) throw std::invalid_argument("--test-features, --test-labels and --test-groups go together");
  return load_dataset(o.test_features, o.test_labels, o.test_groups, tax, vocab);
}

MetricsReport evaluate(const ModelParams& params, const Taxonomy& tax, const Dataset& ds, const Options& o) {
  params.check_compatible(tax, ds.dim());
  const auto pred = predict_paths(params, tax, ds.features);
  return report(pred, ds.labels, ds.groups, tax, ds.vocab, parse_eo_aggregation(o.eo_aggregation));
}

void write_metrics(const fs::path& dir, const MetricsReport& r, std::size_t n_levels) {
  write_file(dir / "metrics.json", to_json(r));
  write_file(dir / "metrics.csv", metrics_csv_header(n_levels) + "\n" + metrics_csv_row(r) + "\n");
}

int cmd_generate(const Options& o, const CLI::App& sub) {
  SyntheticSpec spec;
  spec.shape = o.shape;
  spec.samples_per_leaf = o.samples_per_leaf;
  spec.total_samples = o.total_samples;
  spec.dim = o.dim;
  spec.separation = o.separation;
  spec.level_decay = o.level_decay;
  spec.bias = o.bias;
  spec.corruption_shift = o.corruption_shift;
  spec.group_signal = o.group_signal;
  spec.seed = o.seed;
  spec.groups.clear();
  for (const auto& entry : o.group_proportions) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--group-proportions entries look like Name=0.3");
    SyntheticGroup g;
    g.name = entry.substr(0, eq);
    g.proportion = std::stod(entry.substr(eq + 1));
    g.sensitive = g.name != o.neutral;
    g.biased = std::find(o.biased_groups.begin(), o.biased_groups.end(), g.name) != o.biased_groups.end();
    spec.groups.push_back(std::move(g));
  }

  const fs::path dir(o.out);
  fs::create_directories(dir);
  Taxonomy tax = o.taxonomy.empty() ? make_synthetic_taxonomy(o.shape) : taxonomy_from(o);
  if (o.taxonomy.empty()) write_file(dir / "taxonomy.tsv", serialize_taxonomy(tax));

  const auto ds = generate_synthetic(spec, tax);
  write_dataset(dir, ds, tax);
  const auto parts = split(ds, tax, o.train_fraction, o.seed, !o.no_stratify);
  write_dataset(dir / "train", parts.train, tax);
  write_dataset(dir / "test", parts.test, tax);
  write_file(dir / "config.resolved", resolved_config(sub));
  std::cerr << "generated " << ds.size() << " rows (" << parts.train.size() << " train / " << parts.test.size()
            << " test) in " << dir.string() << "\n";
  if (parts.fallback_rows) std::cerr << "warning: " << parts.fallback_rows << " rows split without stratification\n";
  return kOk;
}

int cmd_train(const Options& o, const CLI::App& sub) {
  const auto tax = taxonomy_from(o);
  const auto cfg = train_config_from(o);
  const auto ds = train_data(o, tax, cfg.fairness.vocab());
  const auto result = fit(ds, tax, cfg);
  const auto dir = run_dir(o, std::string(variant_name(cfg.variant)));
  save_checkpoint(dir / "checkpoint", result.params);
  write_file(dir / "report.jsonl", to_jsonl(result.report));
  write_file(dir / "config.resolved", resolved_config(sub));
  std::cerr << "trained " << variant_name(cfg.variant) << " for " << cfg.epochs << " epochs -> " << dir.string() << "\n";
  return kOk;
}

int cmd_eval(const Options& o, const CLI::App& sub) {
  const auto tax = taxonomy_from(o);
  const auto params = load_checkpoint(o.checkpoint);
  params.check_compatible(tax);
  const auto ds = train_data(o, tax, fairness_from(o).vocab());
  const auto r = evaluate(params, tax, ds, o);
  const auto dir = run_dir(o, "eval");
  write_metrics(dir, r, tax.n_levels());
  write_file(dir / "eval.config.resolved", resolved_config(sub));
  std::cout << metrics_csv_header(tax.n_levels()) << "\n" << metrics_csv_row(r) << "\n";
  return kOk;
}

int cmd_ablation(const Options& o, const CLI::App& sub) {
  const auto tax = taxonomy_from(o);
  auto cfg = train_config_from(o);
  const auto vocab = cfg.fairness.vocab();
  const auto ds = train_data(o, tax, vocab);
  const auto test = test_data(o, tax, vocab);
  const Dataset& eval_ds = test ? *test : ds;
  const auto dir = run_dir(o, "ablation");
  const auto n = tax.n_levels();

  std::vector<std::pair<Variant, MetricsReport>> rows;
  for (Variant v : {Variant::Base, Variant::D, Variant::H, Variant::HD}) {
    cfg.variant = v;
    const auto result = fit(ds, tax, cfg);
    const auto vdir = dir / std::string(variant_name(v));
    fs::create_directories(vdir);
    const auto bytes = encode_checkpoint(result.params);
    write_file(vdir / "checkpoint", bytes);
    write_file(vdir / "report.jsonl", to_jsonl(result.report));
    const auto r = evaluate(decode_checkpoint(bytes), tax, eval_ds, o);
    write_metrics(vdir, r, n);
    rows.emplace_back(v, r);
    std::cerr << "ablation: " << variant_name(v) << " done\n";
  }

  auto fields = [](const MetricsReport& r) {
    std::vector<std::optional<double>> f = {r.hf1, r.consistency, r.exact_match};
    f.insert(f.end(), r.eo_per_level.begin(), r.eo_per_level.end());
    f.push_back(r.eo_avg);
    return f;
  };
  std::string header = "variant," + metrics_csv_header(n);
  std::string delta_header;
  {
    std::istringstream names(metrics_csv_header(n));
    std::string name;
    while (std::getline(names, name, ',')) delta_header += ",delta_" + name;
  }
  std::string csv = header + delta_header + "\n";
  const auto base = fields(rows.front().second);
  for (const auto& [v, r] : rows) {
    csv += std::string(variant_name(v)) + "," + metrics_csv_row(r);
    const auto mine = fields(r);
    for (std::size_t k = 0; k < mine.size(); ++k) {
      const std::optional<double> d =
          mine[k] && base[k] ? std::optional<double>(*mine[k] - *base[k]) : std::nullopt;
      csv += "," + format_number(d);
    }
    csv += "\n";
  }
  write_file(dir / "ablation.csv", csv);
  write_file(dir / "config.resolved", resolved_config(sub));
  std::cout << csv;
  return kOk;
}

int cmd_predict(const Options& o, const CLI::App& sub) {
  const auto tax = taxonomy_from(o);
  const auto params = load_checkpoint(o.checkpoint);
  params.check_compatible(tax);
  const auto features = load_features(o.features);
  std::vector<std::string> ids;
  if (!o.labels.empty()) {
    ids = load_labels(o.labels, tax).ids;
    if (ids.size() != features.rows()) throw DataError("predict: --labels row count does not match --features");
  } else {
    for (std::size_t j = 0; j < features.rows(); ++j) ids.push_back(std::to_string(j));
  }
  const auto preds = predict(params, tax, features);
  const auto n = tax.n_levels();
  std::string csv = "id";
  for (std::size_t level = 0; level < n; ++level) csv += ",l" + std::to_string(level + 1);
  for (std::size_t level = 0; level < n; ++level) csv += ",p" + std::to_string(level + 1);
  csv += "\n";
  for (std::size_t j = 0; j < preds.size(); ++j) {
    csv += csv_escape(ids[j]);
    for (std::size_t level = 0; level < n; ++level) csv += "," + csv_escape(tax.name(level, preds[j].path[level]));
    for (std::size_t level = 0; level < n; ++level) csv += "," + format_number(preds[j].confidence[level]);
    csv += "\n";
  }
  const fs::path target = o.output.empty() ? run_dir(o, "predict") / "predictions.csv" : fs::path(o.output);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  write_file(target, csv);
  if (o.output.empty()) write_file(target.parent_path() / "config.resolved", resolved_config(sub));
  return kOk;
}

int cmd_inspect(const Options& o) {
  const auto tax = taxonomy_from(o);
  std::ostringstream out;
  out << "taxonomy: " << o.taxonomy << "\n";
  out << "levels: ";
  for (std::size_t level = 0; level < tax.n_levels(); ++level) out << (level ? "/" : "") << tax.level_size(level);
  out << "\nclasses: " << tax.total_classes() << "\n";
  for (std::size_t level = 0; level + 1 < tax.n_levels(); ++level) {
    const auto m = transition_matrix(tax, level);
    bool columns_ok = true;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      int sum = 0;
      for (std::size_t r = 0; r < m.rows(); ++r) sum += m(r, c);
      columns_ok = columns_ok && sum == 1;
    }
    out << "M[" << level + 1 << "," << level + 2 << "]: " << m.rows() << "x" << m.cols()
        << (columns_ok ? " (column sums ok)" : " (column sums BAD)") << "\n";
  }
  out << "validation: ok\n";
  std::cout << out.str();
  return kOk;
}

bool mentions(const std::vector<std::string>& args, const std::string& key) {
  const auto flag = "--" + key;
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Inserts config-file entries that the command line does not already set.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::vector<std::string> merged = {args.front()};
  for (const auto& [key, value] : parse_config_file(read_file(path))) {
    if (key == "config") throw std::invalid_argument("config file cannot include another config file");
    if (value.empty()) continue;
    if (!mentions(args, key)) merged.push_back("--" + key + "=" + value);
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

int run(const std::vector<std::string>& raw_args) {
  Options o;
  CLI::App app{"Taxonomy-masked, fairness-reweighted hierarchical classifiers", "dttc"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* generate = app.add_subcommand("generate", "Write a seeded synthetic dataset and train/test split");
  add_common(generate, o);
  add_synthetic(generate, o);

  auto* train = app.add_subcommand("train", "Train one variant and write a checkpoint");
  add_common(train, o);
  add_data(train, o);
  add_training(train, o);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  add_common(eval, o);
  add_data(eval, o);
  add_eval(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Write argmax label paths for a feature file");
  add_common(predict_cmd, o);
  predict_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--features", o.features, "Feature file")->required();
  predict_cmd->add_option("--labels", o.labels, "Optional labels CSV supplying row ids");
  predict_cmd->add_option("--output", o.output, "Predictions CSV path (default <out>/<run-name>/predictions.csv)");

  auto* ablation = app.add_subcommand("ablation", "Train and evaluate base, d, h and hd with a shared seed");
  add_common(ablation, o);
  add_data(ablation, o);
  add_test_data(ablation, o);
  add_training(ablation, o);
  add_eval(ablation, o);

  auto* inspect = app.add_subcommand("inspect", "Summarise and validate a taxonomy file");
  inspect->add_option("--taxonomy", o.taxonomy, "Taxonomy file")->required();
  inspect->add_flag("--allow-childless", o.allow_childless, "Pad childless classes");

  try {
    auto args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(o, *generate);
    if (train->parsed()) return cmd_train(o, *train);
    if (eval->parsed()) return cmd_eval(o, *eval);
    if (predict_cmd->parsed()) return cmd_predict(o, *predict_cmd);
    if (ablation->parsed()) return cmd_ablation(o, *ablation);
    if (inspect->parsed()) return cmd_inspect(o);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kData;
  } catch (const std::out_of_range& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace dttc::cli
