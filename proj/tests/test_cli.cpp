#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "app.hpp"
#include "dttc/dataset.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using dttc::cli::run;

namespace {

std::vector<std::string> data_args(const fs::path& dir, const std::string& part) {
  const auto d = dir / part;
  return {"--taxonomy", (dir / "taxonomy.tsv").string(), "--features", (d / "features.bin").string(),
          "--labels",   (d / "labels.csv").string(),     "--groups",   (d / "groups.csv").string()};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("config file syntax") {
  const auto entries = dttc::cli::parse_config_file("# comment\n\nlr = 0.5\n  epochs=3 \nneutral = \"Back ground\"\n");
  REQUIRE(entries.size() == 3);
  CHECK(entries[0] == std::pair<std::string, std::string>{"lr", "0.5"});
  CHECK(entries[1].second == "3");
  CHECK(entries[2].second == "Back ground");
  CHECK_THROWS_AS(dttc::cli::parse_config_file("novalue\n"), std::invalid_argument);
}

TEST_CASE("generate, train, eval and predict") {
  const auto dir = dttc::testing::scratch_dir("cli_flow");
  const auto data = dir / "data";
  REQUIRE(run({"generate", "--out", data.string(), "--shape", "2,2", "--samples-per-leaf", "25", "--dim", "6",
               "--seed", "3", "--bias", "0.3"}) == 0);
  CHECK(fs::exists(data / "taxonomy.tsv"));
  CHECK(fs::exists(data / "train" / "features.bin"));

  const auto runs = dir / "runs";
  REQUIRE(run(cat({"train", "--out", runs.string(), "--variant", "hd", "--epochs", "3", "--seed", "3"},
                  data_args(data, "train"))) == 0);
  const auto ckpt = runs / "hd" / "checkpoint";
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(runs / "hd" / "report.jsonl"));
  const auto resolved = dttc::read_file(runs / "hd" / "config.resolved");
  CHECK(resolved.find("variant = hd") != std::string::npos);
  CHECK(resolved.find("lr = 0.1") != std::string::npos);

  REQUIRE(run(cat({"eval", "--out", runs.string(), "--run-name", "hd_eval", "--checkpoint", ckpt.string()},
                  data_args(data, "test"))) == 0);
  const auto csv = dttc::read_file(runs / "hd_eval" / "metrics.csv");
  CHECK(csv.rfind("hf1,consistency,exact_match,eo_l1,eo_l2,eo_avg\n", 0) == 0);

  const auto out = dir / "pred.csv";
  REQUIRE(run({"predict", "--taxonomy", (data / "taxonomy.tsv").string(), "--checkpoint", ckpt.string(), "--features",
               (data / "test" / "features.bin").string(), "--labels", (data / "test" / "labels.csv").string(),
               "--output", out.string()}) == 0);
  const auto pred = dttc::read_file(out);
  CHECK(pred.rfind("id,l1,l2,p1,p2\n", 0) == 0);
  CHECK(std::count(pred.begin(), pred.end(), '\n') == 21);

  dttc::write_features(dir / "empty.bin", dttc::FeatureMatrix(0, 6));
  REQUIRE(run({"predict", "--taxonomy", (data / "taxonomy.tsv").string(), "--checkpoint", ckpt.string(), "--features",
               (dir / "empty.bin").string(), "--output", (dir / "empty.csv").string()}) == 0);
  CHECK(dttc::read_file(dir / "empty.csv") == "id,l1,l2,p1,p2\n");
}

TEST_CASE("config file values yield to command-line flags") {
  const auto dir = dttc::testing::scratch_dir("cli_config");
  const auto data = dir / "data";
  REQUIRE(run({"generate", "--out", data.string(), "--shape", "2,2", "--samples-per-leaf", "10", "--dim", "4"}) == 0);
  dttc::write_file(dir / "train.cfg", "epochs = 2\nvariant = h\nlr = 0.05\n");
  REQUIRE(run(cat({"train", "--config", (dir / "train.cfg").string(), "--out", (dir / "runs").string(), "--lr", "0.2"},
                  data_args(data, "train"))) == 0);
  const auto resolved = dttc::read_file(dir / "runs" / "h" / "config.resolved");
  CHECK(resolved.find("lr = 0.2") != std::string::npos);
  CHECK(resolved.find("epochs = 2") != std::string::npos);

  // A resolved config replays the run on its own.
  REQUIRE(run({"train", "--config", (dir / "runs" / "h" / "config.resolved").string(), "--run-name", "replay"}) == 0);
  CHECK(dttc::read_file(dir / "runs" / "replay" / "checkpoint") == dttc::read_file(dir / "runs" / "h" / "checkpoint"));

  dttc::write_file(dir / "bad.cfg", "epochs = 2\nlearning_rate = 0.1\n");
  CHECK(run(cat({"train", "--config", (dir / "bad.cfg").string(), "--out", (dir / "runs").string()},
                data_args(data, "train"))) == 2);
}

TEST_CASE("exit codes") {
  const auto dir = dttc::testing::scratch_dir("cli_codes");
  const auto data = dir / "data";
  REQUIRE(run({"generate", "--out", data.string(), "--shape", "2,2", "--samples-per-leaf", "10", "--dim", "4"}) == 0);

  CHECK(run({}) == 2);
  CHECK(run({"train", "--variant", "xyz"}) == 2);
  CHECK(run({"--help"}) == 0);
  CHECK(run(cat({"train", "--out", (dir / "runs").string(), "--epochs", "1", "--features", "missing.bin"},
                {"--taxonomy", (data / "taxonomy.tsv").string(), "--labels", "x.csv", "--groups", "y.csv"})) == 3);
  CHECK(run(cat({"train", "--out", (dir / "runs").string(), "--lr", "1e200"},
                data_args(data, "train"))) == 4);

  // A checkpoint trained on one taxonomy cannot be evaluated on another.
  REQUIRE(run(cat({"train", "--out", (dir / "runs").string(), "--epochs", "1"}, data_args(data, "train"))) == 0);
  dttc::write_file(dir / "other.tsv", "A\t-\nB\t-\nC\t-\nA.1\tA\nB.1\tB\nC.1\tC\n");
  CHECK(run({"eval", "--taxonomy", (dir / "other.tsv").string(), "--checkpoint",
             (dir / "runs" / "base" / "checkpoint").string(), "--features",
             (data / "test" / "features.bin").string(), "--labels", (data / "test" / "labels.csv").string(),
             "--groups", (data / "test" / "groups.csv").string(), "--out", (dir / "runs").string()}) == 3);
  CHECK(run({"inspect", "--taxonomy", (data / "taxonomy.tsv").string()}) == 0);
  dttc::write_file(dir / "broken.tsv", "A\t-\nB\tA\nC\tA\nB\tC\n");
  CHECK(run({"inspect", "--taxonomy", (dir / "broken.tsv").string()}) == 3);
}
