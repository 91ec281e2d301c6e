#pragma once

#include <filesystem>
#include <optional>

#include "pedeval/cli/store.hpp"
#include "pedeval/geometry.hpp"

namespace httplib {
class Server;
}

namespace pedeval::cli {

inline constexpr int kSchemaVersion = 1;

struct ServerOptions {
  std::optional<std::filesystem::path> images;
  // Second annotation set for the overlay endpoint.
  std::optional<Dataset> fresh;
  double diff_iou = 0.5;
  AspectRatio aspect;
};

// Registers the review API on `server`. The store and options must outlive it.
//   GET  /api/frames
//   GET  /api/frames/<video>/<index>/image
//   GET  /api/frames/<video>/<index>/annotations
//   PUT  /api/frames/<video>/<index>/annotations   {"revision": n, "records": "..."}
//   POST /api/geometry/line-to-bbox                {"head": {x, y}, "feet": {x, y}}
//   GET  /api/diff/<video>/<index>
// JSON bodies carry "schema_version"; image responses carry it as the
// X-Schema-Version header.
void install_routes(httplib::Server& server, AnnotationStore& store, const ServerOptions& options);

}  // namespace pedeval::cli
