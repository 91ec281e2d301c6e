#include "pedeval/cli/server.hpp"

#include <httplib.h>
#include <json.hpp>

#include "pedeval/dataio.hpp"
#include "pedeval/image.hpp"
#include "pedeval/sanitizer.hpp"

namespace pedeval::cli {

using nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, ordered_json body) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc.update(body);
  res.status = status;
  res.set_content(doc.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view category, const std::string& detail) {
  send_json(res, status, {{"error", category}, {"detail", detail}});
}

std::optional<FrameId> frame_param(const httplib::Request& req) {
  return FrameId::parse(req.matches[1].str());
}

ordered_json box_json(const BBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

Point point_from(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("x") || !j.contains("y") || !j["x"].is_number() || !j["y"].is_number()) {
    throw Error(ErrorCategory::input, "point must be an object with numeric x and y");
  }
  return {j["x"].get<double>(), j["y"].get<double>()};
}

int status_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::conflict: return 409;
    case ErrorCategory::io: return 500;
    default: return 400;
  }
}

// Wraps a handler so toolkit errors become JSON error responses.
template <class F>
httplib::Server::Handler guarded(F handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.category()), to_string(e.category()), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "parse", e.what());
    }
  };
}

std::vector<Annotation> frame_annotations(const Dataset& ds, const FrameId& frame) {
  std::vector<Annotation> out;
  for (const auto& a : ds.annotations) {
    if (a.frame == frame) out.push_back(a);
  }
  return out;
}

}  // namespace

void install_routes(httplib::Server& server, AnnotationStore& store, const ServerOptions& options) {
  const std::optional<ImageDirectory> images =
      options.images ? std::optional<ImageDirectory>(ImageDirectory(*options.images)) : std::nullopt;

  server.Get("/api/frames", guarded([&store, images](const httplib::Request&, httplib::Response& res) {
    ordered_json list = ordered_json::array();
    for (const auto& id : store.frames()) {
      const auto state = store.get(id);
      list.push_back({{"id", id.str()},
                      {"revision", state->revision},
                      {"annotations", state->annotations.size()},
                      {"has_image", images && images->locate(id).has_value()}});
    }
    send_json(res, 200, {{"frames", list}});
  }));

  server.Get(R"(/api/frames/(.+)/image)", guarded([&store, images](const httplib::Request& req, httplib::Response& res) {
    const auto frame = frame_param(req);
    if (!frame || !store.get(*frame)) return send_error(res, 404, "input", "unknown frame " + req.matches[1].str());
    const auto path = images ? images->locate(*frame) : std::nullopt;
    if (!path) return send_error(res, 404, "io", "no image for frame " + frame->str());
    const bool png = path->extension() == ".png";
    res.set_header("X-Schema-Version", std::to_string(kSchemaVersion));
    res.set_content(read_file(*path), png ? "image/png" : "image/x-portable-graymap");
  }));

  server.Get(R"(/api/frames/(.+)/annotations)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    const auto frame = frame_param(req);
    const auto state = frame ? store.get(*frame) : std::nullopt;
    if (!state) return send_error(res, 404, "input", "unknown frame " + req.matches[1].str());
    send_json(res, 200,
              {{"frame", frame->str()}, {"revision", state->revision}, {"records", format_records(state->annotations)}});
  }));

  server.Put(R"(/api/frames/(.+)/annotations)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    const auto frame = frame_param(req);
    if (!frame || !store.get(*frame)) return send_error(res, 404, "input", "unknown frame " + req.matches[1].str());
    const auto body = nlohmann::json::parse(req.body);
    if (!body.is_object() || !body.contains("revision") || !body["revision"].is_number_unsigned()) {
      return send_error(res, 400, "input", "PUT requires an unsigned integer revision");
    }
    if (!body.contains("records") || !body["records"].is_string()) {
      return send_error(res, 400, "input", "PUT requires records as a string");
    }
    auto annotations = parse_records(body["records"].get<std::string>(), "request body");
    const auto result = store.put(*frame, body["revision"].get<std::uint64_t>(), std::move(annotations));
    if (result.status == PutStatus::conflict) {
      return send_json(res, 409, {{"error", "conflict"},
                                  {"detail", "stale revision for " + frame->str()},
                                  {"revision", result.revision}});
    }
    if (result.status == PutStatus::not_found) return send_error(res, 404, "input", "unknown frame " + frame->str());
    const auto state = store.get(*frame);
    send_json(res, 200,
              {{"frame", frame->str()},
               {"revision", state->revision},
               {"records", format_records(state->annotations)},
               {"warnings", result.warnings}});
  }));

  server.Post("/api/geometry/line-to-bbox", guarded([&options](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    if (!body.is_object() || !body.contains("head") || !body.contains("feet")) {
      return send_error(res, 400, "input", "body needs head and feet points");
    }
    AspectRatio aspect = options.aspect;
    if (body.contains("aspect")) aspect = AspectRatio(body["aspect"].get<double>());
    const BBox box = line_to_bbox({point_from(body["head"]), point_from(body["feet"])}, aspect);
    send_json(res, 200, {{"box", box_json(box)}});
  }));

  server.Get(R"(/api/diff/(.+))", guarded([&store, &options](const httplib::Request& req, httplib::Response& res) {
    const auto frame = frame_param(req);
    const auto state = frame ? store.get(*frame) : std::nullopt;
    if (!state) return send_error(res, 404, "input", "unknown frame " + req.matches[1].str());
    if (!options.fresh) return send_error(res, 404, "config", "server started without a second annotation set");
    const auto fresh = frame_annotations(*options.fresh, *frame);

    std::vector<std::size_t> a_index, b_index;
    std::vector<BBox> a_boxes, b_boxes;
    for (std::size_t i = 0; i < state->annotations.size(); ++i) {
      if (state->annotations[i].ignore) continue;
      a_index.push_back(i);
      a_boxes.push_back(state->annotations[i].box);
    }
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      if (fresh[i].ignore) continue;
      b_index.push_back(i);
      b_boxes.push_back(fresh[i].box);
    }
    const auto pairs = greedy_iou_pairs(a_boxes, b_boxes, options.diff_iou);
    std::vector<bool> a_hit(a_boxes.size()), b_hit(b_boxes.size());
    ordered_json matched = ordered_json::array();
    for (const auto& p : pairs) {
      a_hit[p.a] = b_hit[p.b] = true;
      matched.push_back({{"original", state->annotations[a_index[p.a]].id},
                         {"new", fresh[b_index[p.b]].id},
                         {"iou", p.iou}});
    }
    ordered_json original_only = ordered_json::array(), new_only = ordered_json::array();
    for (std::size_t i = 0; i < a_hit.size(); ++i) {
      if (!a_hit[i]) original_only.push_back(state->annotations[a_index[i]].id);
    }
    for (std::size_t i = 0; i < b_hit.size(); ++i) {
      if (!b_hit[i]) new_only.push_back(fresh[b_index[i]].id);
    }
    send_json(res, 200,
              {{"frame", frame->str()},
               {"original", format_records(state->annotations)},
               {"new", format_records(fresh)},
               {"matched", matched},
               {"original_only", original_only},
               {"new_only", new_only}});
  }));
}

}  // namespace pedeval::cli
