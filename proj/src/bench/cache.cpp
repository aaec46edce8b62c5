#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "gtex/bench.hpp"

namespace gtex {

// Layout (native little-endian):
//   "GTEXFEAT" u32 version, u32+bytes detector, u32+bytes descriptor,
//   u64 config hash, u64 count, features..., u64 FNV-1a of all prior bytes.
// Feature: f64 x, y, size, u8 has_angle, f64 angle, f64 response,
//   i32 octave, u8 kind, then 4 x u64 bits or u32 n + n x f32 values.

static_assert(std::endian::native == std::endian::little, "feature cache assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'T', 'E', 'X', 'F', 'E', 'A', 'T'};

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw CacheError(CacheError::Kind::kCorrupt, "feature cache truncated or corrupt");
  }
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_features(const std::filesystem::path& path, const FeatureFileHeader& header,
                   const std::vector<Feature>& features) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.put(header.version);
  w.put_string(header.detector);
  w.put_string(header.descriptor);
  w.put(header.config_hash);
  w.put(static_cast<std::uint64_t>(features.size()));
  for (const auto& f : features) {
    w.put(f.kp.x);
    w.put(f.kp.y);
    w.put(f.kp.size);
    w.put(static_cast<std::uint8_t>(f.kp.angle.has_value()));
    w.put(f.kp.angle.value_or(0.0));
    w.put(f.kp.response);
    w.put(static_cast<std::int32_t>(f.kp.octave));
    w.put(static_cast<std::uint8_t>(f.desc.kind));
    if (f.desc.kind == DescriptorKind::kBinary) {
      for (auto word : f.desc.bits) w.put(word);
    } else {
      w.put(static_cast<std::uint32_t>(f.desc.values.size()));
      for (float v : f.desc.values) w.put(v);
    }
  }
  const std::uint64_t checksum = fnv1a64(w.buffer());
  w.put(checksum);

  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError(CacheError::Kind::kIo, "cannot write feature cache " + tmp.string());
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw CacheError(CacheError::Kind::kIo, "failed writing feature cache " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CacheError(CacheError::Kind::kIo, "cannot move feature cache into place: " + ec.message());
}

std::vector<Feature> load_features(const std::filesystem::path& path, const FeatureFileHeader& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError(CacheError::Kind::kIo, "cannot open feature cache " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  constexpr std::size_t kMinSize = sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (buf.size() < kMinSize || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CacheError(CacheError::Kind::kCorrupt, "not a feature cache: " + path.string());
  }
  std::uint32_t version = 0;
  std::memcpy(&version, buf.data() + sizeof(kMagic), sizeof(version));
  if (version != expected.version) {
    throw CacheError(CacheError::Kind::kVersion, "feature cache version " + std::to_string(version) +
                                                      ", expected " + std::to_string(expected.version));
  }
  const std::size_t body = buf.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + body, sizeof(stored));
  if (fnv1a64(buf.data(), body) != stored) {
    throw CacheError(CacheError::Kind::kCorrupt, "feature cache checksum mismatch: " + path.string());
  }

  Reader r(buf, body);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.get<char>();
  r.get<std::uint32_t>();
  const std::string detector = r.get_string();
  const std::string descriptor = r.get_string();
  const auto hash = r.get<std::uint64_t>();
  if (detector != expected.detector || descriptor != expected.descriptor || hash != expected.config_hash) {
    throw CacheError(CacheError::Kind::kHashMismatch, "feature cache is stale (settings differ): " + path.string());
  }
  const auto count = r.get<std::uint64_t>();
  // Every feature needs at least 46 bytes; reject absurd counts up front.
  if (count > r.remaining() / 46) throw CacheError(CacheError::Kind::kCorrupt, "feature cache count is corrupt");
  std::vector<Feature> features;
  features.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Feature f;
    f.kp.x = r.get<double>();
    f.kp.y = r.get<double>();
    f.kp.size = r.get<double>();
    const auto has_angle = r.get<std::uint8_t>();
    const auto angle = r.get<double>();
    if (has_angle > 1) throw CacheError(CacheError::Kind::kCorrupt, "feature cache has a bad angle flag");
    if (has_angle) f.kp.angle = angle;
    f.kp.response = r.get<double>();
    f.kp.octave = r.get<std::int32_t>();
    const auto kind = r.get<std::uint8_t>();
    if (kind == static_cast<std::uint8_t>(DescriptorKind::kBinary)) {
      f.desc.kind = DescriptorKind::kBinary;
      for (auto& word : f.desc.bits) word = r.get<std::uint64_t>();
    } else if (kind == static_cast<std::uint8_t>(DescriptorKind::kReal)) {
      f.desc.kind = DescriptorKind::kReal;
      const auto n = r.get<std::uint32_t>();
      if (n > r.remaining() / sizeof(float)) throw CacheError(CacheError::Kind::kCorrupt, "feature cache is corrupt");
      f.desc.values.resize(n);
      for (auto& v : f.desc.values) v = r.get<float>();
    } else {
      throw CacheError(CacheError::Kind::kCorrupt, "feature cache has an unknown descriptor kind");
    }
    features.push_back(std::move(f));
  }
  if (r.remaining() != 0) throw CacheError(CacheError::Kind::kCorrupt, "feature cache has trailing bytes");
  return features;
}

}  // namespace gtex
