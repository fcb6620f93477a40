#pragma once

// Key/value pipeline manifest. One `key = value` per line, `#` starts a
// comment, relative paths resolve against the manifest's directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aqd/forest.hpp"
#include "aqd/geodata.hpp"
#include "aqd/pipeline.hpp"
#include "aqd/synthdata.hpp"
#include "aqd/terrain.hpp"

namespace aqd::cli {

class Manifest {
 public:
  /// Throws IoError / FormatError / ConfigError.
  static Manifest load(const std::filesystem::path& path);
  static Manifest parse(std::string_view text, const std::filesystem::path& base_dir);

  bool has(std::string_view key) const;
  std::string str(std::string_view key) const;
  std::optional<std::string> opt(std::string_view key) const;
  double real(std::string_view key, double fallback) const;
  long long integer(std::string_view key, long long fallback) const;
  bool flag(std::string_view key, bool fallback) const;
  std::filesystem::path path(std::string_view key) const;
  std::optional<std::filesystem::path> opt_path(std::string_view key) const;

  const std::filesystem::path& base_dir() const noexcept { return base_; }

  // Typed views.
  std::uint64_t seed() const;
  std::vector<int> years() const;
  std::filesystem::path work_dir() const;
  BoundingBox extent() const;
  double fishnet_cell_m() const;
  terrain::TerrainConfig terrain() const;
  forest::ForestParams forest_params(std::string_view prefix) const;
  pipeline::TrainOptions train_options() const;
  pipeline::UpsamplerOptions upsampler_options() const;
  pipeline::PgtOptions pgt_options() const;
  pipeline::RepStat rep_stat() const;
  synth::WorldConfig world_config() const;
  synth::BundlePaths bundle_paths() const;

 private:
  std::filesystem::path base_;
  std::map<std::string, std::string, std::less<>> kv_;
};

}  // namespace aqd::cli
