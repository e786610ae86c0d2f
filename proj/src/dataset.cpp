#include "dttc/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "dttc/error.hpp"

namespace dttc {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) throw ShapeError("feature matrix: value count does not match shape");
}

GroupVocab::GroupVocab(std::vector<std::string> sensitive, std::optional<std::string> neutral) {
  for (auto& name : sensitive) {
    if (find(name)) throw std::invalid_argument("group vocabulary: duplicate group '" + name + "'");
    tags_.push_back({std::move(name), true});
  }
  if (neutral) {
    if (find(*neutral)) {
      throw std::invalid_argument("group vocabulary: neutral group '" + *neutral + "' is also listed as sensitive");
    }
    neutral_ = static_cast<std::uint32_t>(tags_.size());
    tags_.push_back({std::move(*neutral), false});
  }
}

std::optional<std::uint32_t> GroupVocab::find(std::string_view name) const {
  for (std::size_t g = 0; g < tags_.size(); ++g) {
    if (tags_[g].name == name) return static_cast<std::uint32_t>(g);
  }
  return std::nullopt;
}

void Dataset::validate(const Taxonomy& tax) const {
  const auto m = labels.size();
  if (features.rows() != m || groups.size() != m || ids.size() != m) {
    throw DataError("dataset: row counts disagree (features " + std::to_string(features.rows()) + ", labels " +
                    std::to_string(m) + ", groups " + std::to_string(groups.size()) + ", ids " +
                    std::to_string(ids.size()) + ")");
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!is_consistent(tax, labels[j])) throw DataError("dataset: row '" + ids[j] + "' has an inconsistent label path");
    if (groups[j] >= vocab.size()) throw DataError("dataset: row '" + ids[j] + "' has an undeclared group");
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (float v : features.row(j)) {
      if (!std::isfinite(v)) throw DataError("dataset: row '" + ids[j] + "' has a non-finite feature value");
    }
  }
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.vocab = ds.vocab;
  std::vector<float> values;
  values.reserve(rows.size() * ds.dim());
  for (auto r : rows) {
    const auto row = ds.features.row(r);
    values.insert(values.end(), row.begin(), row.end());
    out.labels.push_back(ds.labels[r]);
    out.groups.push_back(ds.groups[r]);
    out.ids.push_back(ds.ids[r]);
  }
  out.features = FeatureMatrix(rows.size(), ds.dim(), std::move(values));
  return out;
}

namespace {

constexpr char kFeatureMagic[4] = {'D', 'T', 'T', 'C'};
constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::size_t kFeatureHeader = 4 + 4 + 8 + 8;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Calls fn(line_number, line) for every non-empty line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!trim(line).empty()) fn(line_no, line);
    pos = end + 1;
  }
}

std::string at(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

std::string encode_features(const FeatureMatrix& features) {
  std::string out;
  out.reserve(kFeatureHeader + features.values().size() * sizeof(float));
  out.append(kFeatureMagic, 4);
  put<std::uint32_t>(out, kFeatureVersion);
  put<std::uint64_t>(out, features.rows());
  put<std::uint64_t>(out, features.cols());
  out.append(reinterpret_cast<const char*>(features.values().data()), features.values().size() * sizeof(float));
  return out;
}

FeatureMatrix decode_features(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw DataError("features: magic mismatch (expected DTTC)");
  }
  if (bytes.size() < kFeatureHeader) throw DataError("features: truncated header");
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kFeatureVersion) throw DataError("features: unsupported version " + std::to_string(version));
  const auto m = get<std::uint64_t>(bytes, 8);
  const auto d = get<std::uint64_t>(bytes, 16);
  const auto payload = bytes.size() - kFeatureHeader;
  if (d != 0 && m > payload / sizeof(float) / d) {
    throw DataError("features: truncated payload (header declares " + std::to_string(m) + "x" + std::to_string(d) + ")");
  }
  const auto count = m * d;
  if (payload != count * sizeof(float)) {
    throw DataError("features: payload size " + std::to_string(payload) + " does not match " + std::to_string(m) +
                    "x" + std::to_string(d));
  }
  std::vector<float> values(count);
  std::memcpy(values.data(), bytes.data() + kFeatureHeader, count * sizeof(float));
  return FeatureMatrix(m, d, std::move(values));
}

FeatureMatrix parse_features_csv(std::string_view text) {
  std::vector<float> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    std::size_t width = 0;
    std::size_t pos = 0;
    while (true) {
      auto comma = line.find(',', pos);
      auto cell = trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      float v = 0.0f;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc{} || ptr != last) {
        throw DataError("features csv " + at(line_no) + "non-numeric cell '" + std::string(cell) + "'");
      }
      values.push_back(v);
      ++width;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (rows == 0) cols = width;
    if (width != cols) {
      throw DataError("features csv " + at(line_no) + "row has " + std::to_string(width) + " values, expected " +
                      std::to_string(cols));
    }
    ++rows;
  });
  return FeatureMatrix(rows, cols, std::move(values));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    if (path.extension() == ".csv") return parse_features_csv(bytes);
    return decode_features(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& features) {
  write_file(path, encode_features(features));
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  fields.push_back(was_quoted ? cur : std::string(trim(cur)));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos && trim(field) == field) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

LabelTable parse_labels(std::string_view text, const Taxonomy& tax) {
  LabelTable table;
  const auto n = tax.n_levels();
  bool first = true;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto fields = split_csv_line(line);
    const bool header = first && !fields.empty() && fields[0] == "id";
    first = false;
    if (header) return;
    if (fields.size() != n + 1) {
      throw DataError("labels " + at(line_no) + "expected " + std::to_string(n + 1) + " columns (id + " +
                      std::to_string(n) + " levels), got " + std::to_string(fields.size()));
    }
    LabelPath path(n);
    for (std::size_t level = 0; level < n; ++level) {
      const auto idx = tax.find(level, fields[level + 1]);
      if (!idx) {
        throw DataError("labels " + at(line_no) + "unknown class '" + fields[level + 1] + "' at level " +
                        std::to_string(level + 1));
      }
      path[level] = *idx;
      if (level > 0 && tax.parent_index(level, *idx) != path[level - 1]) {
        throw DataError("labels " + at(line_no) + "inconsistent path: '" + fields[level + 1] + "' is not a child of '" +
                        fields[level] + "'");
      }
    }
    table.ids.push_back(std::move(fields[0]));
    table.paths.push_back(std::move(path));
  });
  return table;
}

LabelTable load_labels(const std::filesystem::path& path, const Taxonomy& tax) {
  try {
    return parse_labels(read_file(path), tax);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_labels(const LabelTable& table, const Taxonomy& tax) {
  std::string out = "id";
  for (std::size_t level = 0; level < tax.n_levels(); ++level) out += ",l" + std::to_string(level + 1);
  out += '\n';
  for (std::size_t j = 0; j < table.paths.size(); ++j) {
    out += csv_escape(table.ids[j]);
    for (std::size_t level = 0; level < tax.n_levels(); ++level) {
      out += ',';
      out += csv_escape(tax.name(level, table.paths[j][level]));
    }
    out += '\n';
  }
  return out;
}

std::vector<std::uint32_t> parse_groups(std::string_view text, const GroupVocab& vocab,
                                        std::span<const std::string> ids) {
  std::unordered_map<std::string_view, std::size_t> row_of;
  for (std::size_t j = 0; j < ids.size(); ++j) row_of.emplace(ids[j], j);
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> groups(ids.size(), kUnset);
  bool first = true;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto fields = split_csv_line(line);
    const bool header = first && fields.size() == 2 && fields[0] == "id" && fields[1] == "group";
    first = false;
    if (header) return;
    if (fields.size() != 2) throw DataError("groups " + at(line_no) + "expected 2 columns (id, group)");
    const auto g = vocab.find(fields[1]);
    if (!g) throw DataError("groups " + at(line_no) + "unknown group '" + fields[1] + "'");
    const auto it = row_of.find(fields[0]);
    if (it == row_of.end()) throw DataError("groups " + at(line_no) + "id '" + fields[0] + "' has no features/labels");
    if (groups[it->second] != kUnset) throw DataError("groups " + at(line_no) + "duplicate id '" + fields[0] + "'");
    groups[it->second] = *g;
  });
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (groups[j] == kUnset) throw DataError("groups: missing id '" + ids[j] + "'");
  }
  return groups;
}

std::vector<std::uint32_t> load_groups(const std::filesystem::path& path, const GroupVocab& vocab,
                                       std::span<const std::string> ids) {
  try {
    return parse_groups(read_file(path), vocab, ids);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_groups(std::span<const std::string> ids, std::span<const std::uint32_t> groups,
                          const GroupVocab& vocab) {
  std::string out = "id,group\n";
  for (std::size_t j = 0; j < ids.size(); ++j) {
    out += csv_escape(ids[j]);
    out += ',';
    out += csv_escape(vocab[groups[j]].name);
    out += '\n';
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& features, const std::filesystem::path& labels,
                     const std::filesystem::path& groups, const Taxonomy& tax, const GroupVocab& vocab) {
  Dataset ds;
  ds.vocab = vocab;
  ds.features = load_features(features);
  auto table = load_labels(labels, tax);
  ds.ids = std::move(table.ids);
  ds.labels = std::move(table.paths);
  if (ds.features.rows() != ds.labels.size()) {
    throw DataError("dataset: " + features.string() + " has " + std::to_string(ds.features.rows()) + " rows but " +
                    labels.string() + " has " + std::to_string(ds.labels.size()));
  }
  ds.groups = load_groups(groups, vocab, ds.ids);
  ds.validate(tax);
  return ds;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds, const Taxonomy& tax) {
  std::filesystem::create_directories(dir);
  write_features(dir / "features.bin", ds.features);
  write_file(dir / "labels.csv", format_labels({ds.ids, ds.labels}, tax));
  write_file(dir / "groups.csv", format_groups(ds.ids, ds.groups, ds.vocab));
}

SplitResult split(const Dataset& ds, const Taxonomy& tax, double train_fraction, std::uint64_t seed, bool stratify) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie strictly between 0 and 1");
  }
  const auto m = ds.size();
  const auto leaf_level = tax.n_levels() - 1;
  std::mt19937_64 rng(seed);

  // Strata in first-appearance order; singletons are pooled into one stratum.
  std::vector<std::vector<std::size_t>> strata;
  std::size_t fallback = 0;
  if (stratify) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> index;
    for (std::size_t j = 0; j < m; ++j) {
      const auto key = std::make_pair(ds.labels[j][leaf_level], ds.groups[j]);
      auto [it, inserted] = index.emplace(key, strata.size());
      if (inserted) strata.emplace_back();
      strata[it->second].push_back(j);
    }
    std::vector<std::size_t> pooled;
    std::erase_if(strata, [&](const auto& s) {
      if (s.size() >= 2) return false;
      pooled.insert(pooled.end(), s.begin(), s.end());
      return true;
    });
    fallback = pooled.size();
    if (!pooled.empty()) strata.push_back(std::move(pooled));
  } else {
    strata.emplace_back(m);
    std::iota(strata[0].begin(), strata[0].end(), std::size_t{0});
  }

  // Largest-remainder allocation keeps each stratum within one row of its
  // exact share while the total matches round(fraction * m).
  const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m)));
  std::vector<std::size_t> take(strata.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const double exact = train_fraction * static_cast<double>(strata[s].size());
    take[s] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[s];
    remainders.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < target && k < remainders.size(); ++k, ++assigned) ++take[remainders[k].second];

  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto rows = strata[s];
    std::shuffle(rows.begin(), rows.end(), rng);
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take[s]));
    test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(take[s]), rows.end());
  }
  std::shuffle(train_rows.begin(), train_rows.end(), rng);
  std::shuffle(test_rows.begin(), test_rows.end(), rng);
  return {subset(ds, train_rows), subset(ds, test_rows), fallback};
}

}  // namespace dttc
