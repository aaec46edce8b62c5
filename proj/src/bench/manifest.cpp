#include <charconv>
#include <fstream>
#include <sstream>

#include "gtex/bench.hpp"

namespace gtex {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

double parse_field(const std::string& v, int lineno, const char* what) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw DataError("manifest line " + std::to_string(lineno) + ": bad " + what + " '" + v + "'");
  }
  return out;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

PairManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  PairManifest manifest;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (manifest.rows.empty() && line.rfind("ref", 0) == 0 && line.find('\t') != std::string::npos) {
      const auto first = line.substr(0, line.find('\t'));
      if (first == "ref" || first == "ref_path") continue;
    }
    const auto f = split_tabs(line);
    if (f.size() != 7) {
      throw DataError("manifest line " + std::to_string(lineno) + ": expected 7 tab-separated fields, got " +
                      std::to_string(f.size()));
    }
    PairRow row;
    row.ref_path = f[0];
    row.test_path = f[1];
    if (row.ref_path.is_relative() && !base_dir.empty()) row.ref_path = base_dir / row.ref_path;
    if (row.test_path.is_relative() && !base_dir.empty()) row.test_path = base_dir / row.test_path;
    const int na = (f[2] == "NA") + (f[3] == "NA") + (f[4] == "NA") + (f[5] == "NA");
    if (na == 4) {
      row.gt.reset();
    } else if (na == 0) {
      GroundTruth2D gt;
      gt.angle = parse_field(f[2], lineno, "angle");
      gt.tx = parse_field(f[3], lineno, "tx");
      gt.ty = parse_field(f[4], lineno, "ty");
      gt.scale = parse_field(f[5], lineno, "scale");
      if (!(gt.scale > 0.0)) throw DataError("manifest line " + std::to_string(lineno) + ": scale must be positive");
      row.gt = gt;
    } else {
      throw DataError("manifest line " + std::to_string(lineno) + ": ground truth must be all NA or all numeric");
    }
    row.tag = f[6];
    if (row.tag.empty()) throw DataError("manifest line " + std::to_string(lineno) + ": empty tag");
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

PairManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

void save_manifest(const PairManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << "ref\ttest\tangle\ttx\tty\tscale\ttag\n";
  for (const auto& r : manifest.rows) {
    out << r.ref_path.generic_string() << '\t' << r.test_path.generic_string() << '\t';
    if (r.gt) {
      out << format_number(r.gt->angle) << '\t' << format_number(r.gt->tx) << '\t' << format_number(r.gt->ty) << '\t'
          << format_number(r.gt->scale);
    } else {
      out << "NA\tNA\tNA\tNA";
    }
    out << '\t' << r.tag << '\n';
  }
  if (!out) throw DataError("failed writing manifest " + path.string());
}

}  // namespace gtex
