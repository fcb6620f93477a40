#include "service.hpp"

#include <set>

#include "aqd/analysis.hpp"
#include "aqd/errors.hpp"
#include "artifacts.hpp"
#include "httplib.h"
#include "json.hpp"
#include "log.hpp"

namespace aqd::cli {

PredictionService::PredictionService(const Manifest& m) {
  const WorkPaths wp{m.work_dir()};
  model_ = pipeline::Upsampler::from_json(read_text_file(require_artifact(wp.upsampler(), "train-upsampler")));
  for (auto name : kHgfNames) {
    rasters_.emplace(std::string(name), read_ascii_grid(require_artifact(wp.feature(name), "features")));
  }
  extent_ = m.extent();
  const auto cells = read_gldas_csv(m.path("gldas"));
  for (const auto& [serial, c] : pipeline::cell_centroids(cells)) {
    serials_.push_back(serial);
    centroids_.push_back(c);
  }
  for (const auto& c : cells) {
    cells_.emplace(std::pair{c.serial_id, c.year}, c);
    years_.insert(c.year);
  }
  const auto rep = read_hgf_csv(require_artifact(wp.rep_hgf(), "train-upsampler"));
  for (std::size_t i = 0; i < rep.ids.size(); ++i) {
    auto s = parse_int(rep.ids[i]);
    if (!s) throw FormatError(wp.rep_hgf().string() + ": bad serial id '" + rep.ids[i] + "'");
    rep_.emplace(static_cast<int>(*s), rep.hgf[i]);
  }
}

Prediction PredictionService::predict(const GeoPoint& p, int year) const {
  if (!p.valid() || !extent_.contains(p)) throw CoverageError("point is outside the covered extent");
  if (!years_.count(year)) throw CoverageError("no GLDAS data for year " + std::to_string(year));
  const auto hgf = terrain::sample_hgf(rasters_, std::span(&p, 1)).front();
  const int serial = serials_[nearest_index(centroids_, p)];
  auto cell = cells_.find({serial, year});
  if (cell == cells_.end()) {
    throw CoverageError("cell " + std::to_string(serial) + " has no record for year " + std::to_string(year));
  }
  auto rep = rep_.find(serial);
  if (rep == rep_.end()) throw CoverageError("cell " + std::to_string(serial) + " has no representative HGF");
  const auto [mx, mn] = model_.predict(hgf, rep->second, cell->second.max_gws, cell->second.min_gws, year);
  return {mx, mn, analysis::recharge_cm(mx, mn, hgf[Hgf::sy])};
}

HttpReply PredictionService::handle_predict(std::string_view body) const {
  auto error = [](int status, const std::string& msg) {
    return HttpReply{status, nlohmann::json{{"error", msg}}.dump()};
  };
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    return error(400, "malformed JSON");
  }
  if (!req.is_object()) return error(400, "request must be a JSON object");
  for (const char* k : {"lat", "lon", "year"}) {
    if (!req.contains(k) || !req[k].is_number()) return error(400, std::string("field '") + k + "' must be a number");
  }
  if (!req["year"].is_number_integer()) return error(400, "field 'year' must be an integer");
  try {
    const auto r = predict({req["lat"].get<double>(), req["lon"].get<double>()}, req["year"].get<int>());
    nlohmann::ordered_json out;
    out["max_gwl_m"] = r.max_gwl_m;
    out["min_gwl_m"] = r.min_gwl_m;
    out["recharge_cm"] = r.recharge_cm;
    return {200, out.dump()};
  } catch (const InputError& e) {
    return error(422, e.what());
  }
}

void PredictionService::mount(httplib::Server& server) const {
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  server.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = handle_predict(req.body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
}

std::pair<std::string, int> parse_bind(std::string_view bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw ConfigError("bind must be host:port");
  auto port = parse_int(bind.substr(colon + 1));
  if (!port || *port < 0 || *port > 65535) throw ConfigError("bad port in bind '" + std::string(bind) + "'");
  return {std::string(bind.substr(0, colon)), static_cast<int>(*port)};
}

void cmd_serve(const Manifest& m, std::string_view bind) {
  const auto [host, port] = parse_bind(bind);
  const PredictionService service(m);
  httplib::Server server;
  service.mount(server);
  if (!server.bind_to_port(host, port)) throw IoError(std::string(bind), "cannot bind");
  summary("serve", {{"bind", std::string(bind)}, {"status", "listening"}});
  server.listen_after_bind();
}

}  // namespace aqd::cli
