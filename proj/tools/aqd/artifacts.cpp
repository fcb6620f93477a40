#include "artifacts.hpp"

#include <fstream>
#include <sstream>

#include "aqd/errors.hpp"

namespace aqd::cli {

const fs::path& require_artifact(const fs::path& p, std::string_view producer) {
  if (!fs::exists(p)) {
    throw IoError(p.string(), "missing artifact; run `aqd " + std::string(producer) + "` first");
  }
  return p;
}

namespace {

// Line-oriented CSV reader with a fixed header.
class CsvReader {
 public:
  CsvReader(const fs::path& path, std::string_view header) : path_(path), in_(path) {
    if (!in_) throw IoError(path.string(), "cannot open");
    std::string line;
    if (!std::getline(in_, line)) throw FormatError(path.string() + ": empty file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw FormatError(path.string() + ": expected header '" + std::string(header) + "'", 1);
    line_ = 1;
  }

  bool next() {
    while (std::getline(in_, buf_)) {
      ++line_;
      if (!buf_.empty() && buf_.back() == '\r') buf_.pop_back();
      if (buf_.empty()) continue;
      fields_ = split_csv_line(buf_);
      return true;
    }
    return false;
  }

  std::size_t size() const { return fields_.size(); }
  void expect(std::size_t n) const {
    if (fields_.size() != n) fail("expected " + std::to_string(n) + " fields, got " + std::to_string(fields_.size()));
  }
  std::string text(std::size_t i) const { return std::string(fields_[i]); }
  double real(std::size_t i) const {
    auto v = parse_double(fields_[i]);
    if (!v) fail("field " + std::to_string(i + 1) + " is not a number");
    return *v;
  }
  int integer(std::size_t i) const {
    auto v = parse_int(fields_[i]);
    if (!v) fail("field " + std::to_string(i + 1) + " is not an integer");
    return static_cast<int>(*v);
  }
  [[noreturn]] void fail(const std::string& what) const { throw FormatError(path_.string() + ": " + what, line_); }

 private:
  fs::path path_;
  std::ifstream in_;
  std::string buf_;
  std::vector<std::string_view> fields_;
  std::size_t line_ = 0;
};

std::string hgf_header() {
  std::string h;
  for (auto n : kHgfNames) {
    h += ',';
    h += n;
  }
  return h;
}

constexpr std::string_view kPgtHeaderHead = "point_id,lat,lon,year,max_gwl_m,min_gwl_m,source";
constexpr std::string_view kDownscaleHeader = "point_id,lat,lon,serial_id,max_gwl_m,min_gwl_m";
constexpr std::string_view kRechargeHeader = "point_id,lat,lon,year,max_gwl_m,min_gwl_m,sy,recharge_cm";

}  // namespace

void write_pgt_csv(const pipeline::PseudoGroundTruth& pgt, const fs::path& path) {
  std::ostringstream out;
  out << kPgtHeaderHead << hgf_header() << '\n';
  for (const auto& p : pgt.points) {
    out << p.id << ',' << format_double(p.location.lat) << ',' << format_double(p.location.lon) << ',' << p.year << ','
        << format_double(p.max_gwl) << ',' << format_double(p.min_gwl) << ',' << pipeline::source_name(p.source);
    for (double v : p.hgf.values) out << ',' << format_double(v);
    out << '\n';
  }
  write_text_file(path, out.str());
}

pipeline::PseudoGroundTruth read_pgt_csv(const fs::path& path) {
  CsvReader csv(path, std::string(kPgtHeaderHead) + hgf_header());
  pipeline::PseudoGroundTruth out;
  while (csv.next()) {
    csv.expect(7 + kHgfCount);
    pipeline::PgtPoint p;
    p.id = csv.text(0);
    p.location = {csv.real(1), csv.real(2)};
    p.year = csv.integer(3);
    p.max_gwl = csv.real(4);
    p.min_gwl = csv.real(5);
    const auto src = csv.text(6);
    if (src == "in_situ") {
      p.source = pipeline::Source::in_situ;
      ++out.n_in_situ;
    } else if (src == "predicted") {
      p.source = pipeline::Source::predicted;
      ++out.n_predicted;
      if (p.min_gwl > p.max_gwl) ++out.predicted_violations;
    } else {
      csv.fail("unknown source '" + src + "'");
    }
    for (std::size_t k = 0; k < kHgfCount; ++k) p.hgf.values[k] = csv.real(7 + k);
    out.points.push_back(std::move(p));
  }
  if (out.n_predicted) {
    out.predicted_violation_rate = static_cast<double>(out.predicted_violations) / static_cast<double>(out.n_predicted);
  }
  return out;
}

void write_downscale_csv(std::span<const pipeline::DownscalePoint> points, const fs::path& path) {
  std::ostringstream out;
  out << kDownscaleHeader << '\n';
  for (const auto& p : points) {
    out << p.id << ',' << format_double(p.location.lat) << ',' << format_double(p.location.lon) << ',' << p.serial_id
        << ',' << format_double(p.max_gwl) << ',' << format_double(p.min_gwl) << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<pipeline::DownscalePoint> read_downscale_csv(const fs::path& path) {
  CsvReader csv(path, kDownscaleHeader);
  std::vector<pipeline::DownscalePoint> out;
  while (csv.next()) {
    csv.expect(6);
    out.push_back({csv.text(0), {csv.real(1), csv.real(2)}, csv.integer(3), csv.real(4), csv.real(5)});
  }
  return out;
}

void write_recharge_csv(std::span<const RechargeRow> rows, const fs::path& path) {
  std::ostringstream out;
  out << kRechargeHeader << '\n';
  for (const auto& r : rows) {
    out << r.id << ',' << format_double(r.location.lat) << ',' << format_double(r.location.lon) << ',' << r.year << ','
        << format_double(r.max_gwl) << ',' << format_double(r.min_gwl) << ',' << format_double(r.sy) << ','
        << format_double(r.recharge_cm) << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<RechargeRow> read_recharge_csv(const fs::path& path) {
  CsvReader csv(path, kRechargeHeader);
  std::vector<RechargeRow> out;
  while (csv.next()) {
    csv.expect(8);
    out.push_back({csv.text(0), {csv.real(1), csv.real(2)}, csv.integer(3), csv.real(4), csv.real(5), csv.real(6),
                   csv.real(7)});
  }
  return out;
}

std::map<std::string, HgfVector> hgf_by_id(const HgfTable& table) {
  std::map<std::string, HgfVector> out;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (!out.emplace(table.ids[i], table.hgf[i]).second) {
      throw DuplicateError("point id '" + table.ids[i] + "' appears twice in the HGF table");
    }
  }
  return out;
}

}  // namespace aqd::cli
