#pragma once

// On-disk stage artifacts under the manifest's work_dir.

#include <filesystem>
#include <string_view>
#include <vector>

#include "aqd/pipeline.hpp"

namespace aqd::cli {

namespace fs = std::filesystem;

struct WorkPaths {
  fs::path root;

  fs::path feature(std::string_view name) const { return root / "features" / (std::string(name) + ".asc"); }
  fs::path fishnet_hgf() const { return root / "features" / "fishnet_hgf.csv"; }
  fs::path station_hgf() const { return root / "features" / "station_hgf.csv"; }
  fs::path pseudo_gt() const { return root / "task1" / "pseudo_gt.csv"; }
  fs::path max_model() const { return root / "models" / "max_model.json"; }
  fs::path min_model() const { return root / "models" / "min_model.json"; }
  fs::path rep_hgf() const { return root / "task2" / "rep_hgf.csv"; }
  fs::path upsampler() const { return root / "models" / "upsampler.json"; }
  fs::path downscaled_csv(int year) const { return root / "downscaled" / ("gwl_" + std::to_string(year) + ".csv"); }
  fs::path downscaled_geojson(int year) const {
    return root / "downscaled" / ("gwl_" + std::to_string(year) + ".geojson");
  }
  fs::path recharge() const { return root / "recharge" / "recharge.csv"; }
  fs::path trends_csv() const { return root / "trends" / "trends.csv"; }
  fs::path trends_geojson() const { return root / "trends" / "trends.geojson"; }
  fs::path report(std::string_view name) const { return root / "reports" / (std::string(name) + ".json"); }
};

/// Throws IoError naming the artifact and the stage that produces it.
const fs::path& require_artifact(const fs::path& p, std::string_view producer);

void write_pgt_csv(const pipeline::PseudoGroundTruth& pgt, const fs::path& path);
/// Points only; the counters are rebuilt from the `source` column.
pipeline::PseudoGroundTruth read_pgt_csv(const fs::path& path);

void write_downscale_csv(std::span<const pipeline::DownscalePoint> points, const fs::path& path);
std::vector<pipeline::DownscalePoint> read_downscale_csv(const fs::path& path);

struct RechargeRow {
  std::string id;
  GeoPoint location;
  int year = 0;
  double max_gwl = 0.0;
  double min_gwl = 0.0;
  double sy = 0.0;
  double recharge_cm = 0.0;
};
void write_recharge_csv(std::span<const RechargeRow> rows, const fs::path& path);
std::vector<RechargeRow> read_recharge_csv(const fs::path& path);

/// Station id -> sampled HGFs, from a point table.
std::map<std::string, HgfVector> hgf_by_id(const HgfTable& table);

}  // namespace aqd::cli
