#include <cmath>
#include <cstring>

#include "dttc/error.hpp"
#include "dttc/ttc.hpp"

namespace dttc {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T take(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) throw DataError(std::string("checkpoint: truncated while reading ") + what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ModelParams& params) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(params.variant));
  put<double>(out, params.tau);
  for (const auto& head : params.heads) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(head.classes));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(head.dim));
    for (double w : head.weights) put<float>(out, static_cast<float>(w));
    for (double b : head.bias) put<float>(out, static_cast<float>(b));
  }
  return out;
}

ModelParams decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("checkpoint: magic mismatch (expected DTTM)");
  }
  Reader r(bytes.substr(4));
  const auto version = r.take<std::uint32_t>("version");
  if (version != kVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const auto variant = r.take<std::uint8_t>("variant");
  if (variant > 3) throw DataError("checkpoint: unknown variant byte " + std::to_string(variant));
  ModelParams p;
  p.variant = static_cast<Variant>(variant);
  p.tau = r.take<double>("temperature");
  if (!(p.tau > 0.0) || !std::isfinite(p.tau)) throw DataError("checkpoint: temperature must be positive");
  while (!r.done()) {
    const auto rows = r.take<std::uint32_t>("level rows");
    const auto cols = r.take<std::uint32_t>("level cols");
    if ((static_cast<std::uint64_t>(rows) * cols + rows) * sizeof(float) > r.remaining()) {
      throw DataError("checkpoint: truncated level " + std::to_string(p.heads.size() + 1));
    }
    LevelHead head(rows, cols);
    for (auto& w : head.weights) w = r.take<float>("weights");
    for (auto& b : head.bias) b = r.take<float>("bias");
    p.heads.push_back(std::move(head));
  }
  if (p.heads.empty()) throw DataError("checkpoint: no levels");
  for (const auto& h : p.heads) {
    if (h.dim != p.heads.front().dim) throw DataError("checkpoint: levels disagree on feature dimension");
  }
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  write_file(path, encode_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace dttc
