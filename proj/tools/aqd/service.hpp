#pragma once

// JSON prediction endpoint over the trained upsampler. Everything is loaded
// once at construction and read-only afterwards.

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "aqd/pipeline.hpp"
#include "aqd/terrain.hpp"
#include "manifest.hpp"

namespace httplib {
class Server;
}

namespace aqd::cli {

struct Prediction {
  double max_gwl_m = 0.0;
  double min_gwl_m = 0.0;
  double recharge_cm = 0.0;
};

struct HttpReply {
  int status = 200;
  std::string body;
};

class PredictionService {
 public:
  explicit PredictionService(const Manifest& m);

  /// Throws CoverageError / OutOfBoundsError for points or years it cannot serve.
  Prediction predict(const GeoPoint& p, int year) const;
  /// Full request handling: 200, 400 on malformed JSON, 422 on uncovered input.
  HttpReply handle_predict(std::string_view body) const;

  /// Registers GET /health and POST /predict.
  void mount(httplib::Server& server) const;

 private:
  pipeline::Upsampler model_;
  terrain::RasterSet rasters_;
  BoundingBox extent_;
  std::vector<int> serials_;
  std::vector<GeoPoint> centroids_;
  std::map<std::pair<int, int>, GldasCell> cells_;  // (serial, year)
  std::map<int, HgfVector> rep_;
  std::set<int> years_;
};

/// "host:port"; throws ConfigError.
std::pair<std::string, int> parse_bind(std::string_view bind);

/// Blocks serving until the process is stopped.
void cmd_serve(const Manifest& m, std::string_view bind);

}  // namespace aqd::cli
