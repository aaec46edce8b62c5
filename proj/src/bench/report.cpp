#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gtex/bench.hpp"

namespace gtex {

std::optional<ReportFormat> report_format_from_string(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  return std::nullopt;
}

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[64];
  // Avoid printing "-0.00" for tiny negative rounding noise.
  const double x = (*v < 0.0 && *v > -0.005) ? 0.0 : *v;
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "experiment,detector,selector,descriptor,tag,budget,n_cases,below_n,repeatability,ambiguity,n_correct,"
        "precision,success_rate";
  if (report.with_timing) os << ",detect_time_s";
  os << '\n';
  for (const auto& r : report.rows) {
    os << r.experiment << ',' << r.detector << ',' << r.selector << ',' << r.descriptor << ',' << r.tag << ','
       << r.budget << ',' << r.n_cases << ',' << format_metric(r.below_n) << ',' << format_metric(r.repeatability)
       << ',' << format_metric(r.ambiguity) << ',' << format_metric(r.n_correct) << ',' << format_metric(r.precision)
       << ',' << format_metric(r.success_rate);
    if (report.with_timing) os << ',' << format_metric(r.detect_time);
    os << '\n';
  }
  return os.str();
}

namespace {

template <typename T>
std::vector<T> unique_in_order(const std::vector<ReportRow>& rows, T ReportRow::*field) {
  std::vector<T> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.*field) == out.end()) out.push_back(r.*field);
  }
  return out;
}

std::vector<ReportRow> rows_of(const EvalReport& report, const std::string& experiment) {
  std::vector<ReportRow> out;
  for (const auto& r : report.rows) {
    if (r.experiment == experiment) out.push_back(r);
  }
  return out;
}

const ReportRow* find_row(const std::vector<ReportRow>& rows, const std::string& det, const std::string& sel,
                          const std::string& desc, const std::string& tag, int budget) {
  for (const auto& r : rows) {
    if (r.detector == det && r.selector == sel && r.descriptor == desc && r.tag == tag && r.budget == budget) return &r;
  }
  return nullptr;
}

void detection_tables(std::ostringstream& os, const std::vector<ReportRow>& rows, bool timing) {
  for (const auto& tag : unique_in_order(rows, &ReportRow::tag)) {
    os << "### Keypoint detection: " << tag << "\n\n| Detector | Selector | < N KPs | Repeatability | Ambiguity |";
    if (timing) os << " Computation time (s) |";
    os << "\n|---|---|---|---|---|";
    if (timing) os << "---|";
    os << '\n';
    for (const auto& r : rows) {
      if (r.tag != tag) continue;
      os << "| " << r.detector << " | " << r.selector << " | " << format_metric(r.below_n) << " | "
         << format_metric(r.repeatability) << " | " << format_metric(r.ambiguity) << " |";
      if (timing) os << ' ' << format_metric(r.detect_time) << " |";
      os << '\n';
    }
    os << '\n';
  }
}

// One row per detector (and selector), one column per descriptor.
void grid_tables(std::ostringstream& os, const std::vector<ReportRow>& rows, const std::string& title,
                 const std::function<std::string(const ReportRow&)>& cell) {
  const auto descriptors = unique_in_order(rows, &ReportRow::descriptor);
  const auto detectors = unique_in_order(rows, &ReportRow::detector);
  const auto selectors = unique_in_order(rows, &ReportRow::selector);
  for (const auto& tag : unique_in_order(rows, &ReportRow::tag)) {
    for (int budget : unique_in_order(rows, &ReportRow::budget)) {
      os << "### " << title << ": " << tag;
      if (unique_in_order(rows, &ReportRow::budget).size() > 1) os << " (budget " << budget << ')';
      os << "\n\n| Detector |";
      for (const auto& d : descriptors) os << ' ' << d << " |";
      os << "\n|---|";
      for (std::size_t i = 0; i < descriptors.size(); ++i) os << "---|";
      os << '\n';
      for (const auto& det : detectors) {
        for (const auto& sel : selectors) {
          os << "| " << det;
          if (selectors.size() > 1) os << " (" << sel << ')';
          os << " |";
          for (const auto& desc : descriptors) {
            const ReportRow* r = find_row(rows, det, sel, desc, tag, budget);
            os << ' ' << (r ? cell(*r) : std::string("NA")) << " |";
          }
          os << '\n';
        }
      }
      os << '\n';
    }
  }
}

// Budgets down the rows, one column per pairing.
void budget_table(std::ostringstream& os, const std::vector<ReportRow>& rows) {
  for (const auto& tag : unique_in_order(rows, &ReportRow::tag)) {
    std::vector<std::string> pairings;
    for (const auto& r : rows) {
      const std::string p = r.detector + "/" + r.selector + "/" + r.descriptor;
      if (r.tag == tag && std::find(pairings.begin(), pairings.end(), p) == pairings.end()) pairings.push_back(p);
    }
    os << "### Success rate by reference features: " << tag << "\n\n| Reference features |";
    for (const auto& p : pairings) os << ' ' << p << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < pairings.size(); ++i) os << "---|";
    os << '\n';
    for (int budget : unique_in_order(rows, &ReportRow::budget)) {
      os << "| " << budget << " |";
      for (const auto& p : pairings) {
        std::string cell = "NA";
        for (const auto& r : rows) {
          if (r.tag == tag && r.budget == budget && r.detector + "/" + r.selector + "/" + r.descriptor == p) {
            cell = format_metric(r.success_rate);
          }
        }
        os << ' ' << cell << " |";
      }
      os << '\n';
    }
    os << '\n';
  }
}

}  // namespace

std::string report_markdown(const EvalReport& report) {
  std::ostringstream os;
  const auto detection = rows_of(report, "detection");
  const auto matching = rows_of(report, "matching");
  const auto pose = rows_of(report, "pose");
  const auto sweep = rows_of(report, "pose-budget");
  if (!detection.empty()) detection_tables(os, detection, report.with_timing);
  if (!matching.empty()) {
    grid_tables(os, matching, "Correct matches / precision",
                [](const ReportRow& r) { return format_metric(r.n_correct) + " / " + format_metric(r.precision); });
  }
  if (!pose.empty()) {
    grid_tables(os, pose, "Success rate", [](const ReportRow& r) { return format_metric(r.success_rate); });
  }
  if (!sweep.empty()) budget_table(os, sweep);
  return os.str();
}

void write_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = format == ReportFormat::kCsv ? report_csv(report) : report_markdown(report);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write report " + path.string());
  out << text;
  if (!out) throw DataError("failed writing report " + path.string());
}

}  // namespace gtex
