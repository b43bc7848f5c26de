#include "lyre/server.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "lyre/error.hpp"

namespace lyre {

namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

/// Invalid request input; becomes a 400.
class BadRequest : public Error {
 public:
  using Error::Error;
};

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), kJson);
}

json parse_body(const httplib::Request& req) {
  const json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw BadRequest("request body is not valid JSON");
  if (!body.is_object()) throw BadRequest("request body must be a JSON object");
  return body;
}

/// Unsigned integer field with a default; rejects other JSON types.
std::uint64_t optional_uint(const json& body, const char* key, std::uint64_t fallback) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  if (!it->is_number_unsigned()) throw BadRequest(std::string("\"") + key + "\" must be a non-negative integer");
  return it->get<std::uint64_t>();
}

std::string response_body(const GenerationResult& r) {
  json j = json::parse(result_to_json(r));
  j["result_id"] = r.score.id;
  return j.dump();
}

std::vector<Override> parse_overrides(const json& body) {
  auto it = body.find("overrides");
  if (it == body.end()) throw BadRequest("\"overrides\" is required");
  if (!it->is_array()) throw BadRequest("\"overrides\" must be an array");
  std::vector<Override> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& o = (*it)[i];
    const std::string label = "override " + std::to_string(i) + ": ";
    if (!o.is_object()) throw BadRequest(label + "must be an object");
    if (!o.contains("step") || !o["step"].is_number_unsigned())
      throw BadRequest(label + "\"step\" must be a non-negative integer");
    if (!o.contains("attribute") || !o["attribute"].is_string())
      throw BadRequest(label + "\"attribute\" must be pitch, duration or rest");
    if (!o.contains("value") || !o["value"].is_number()) throw BadRequest(label + "\"value\" must be a number");
    Override ov;
    ov.step = o["step"].get<std::size_t>();
    try {
      ov.attribute = parse_attribute(o["attribute"].get<std::string>());
    } catch (const ContractError& e) {
      throw BadRequest(label + e.what());
    }
    ov.value = o["value"].get<double>();
    out.push_back(ov);
  }
  return out;
}

/// Runs a handler, mapping library errors onto status codes.
template <class F>
void guarded(httplib::Response& res, F&& handler) {
  try {
    handler();
  } catch (const NotFoundError& e) {
    send_error(res, 404, e.what());
  } catch (const BadRequest& e) {
    send_error(res, 400, e.what());
  } catch (const TokenizationError& e) {
    send_error(res, 400, e.what());
  } catch (const ContractError& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

void install_routes(httplib::Server& server, RecommendService& service) {
  server.Post("/api/generate", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      auto lyrics = body.find("lyrics");
      if (lyrics == body.end() || !lyrics->is_string()) throw BadRequest("\"lyrics\" must be a string");
      const std::uint64_t seed = optional_uint(body, "seed", 0);
      const std::uint64_t k = optional_uint(body, "k", kDefaultCandidates);
      if (k == 0) throw BadRequest("\"k\" must be at least 1");
      const auto result = service.generate(lyrics->get<std::string>(), seed, k);
      res.set_content(response_body(*result), kJson);
    });
  });

  server.Post("/api/recompose", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      auto id = body.find("result_id");
      if (id == body.end() || !id->is_string()) throw BadRequest("\"result_id\" must be a string");
      const std::vector<Override> overrides = parse_overrides(body);
      const auto result = service.recompose(id->get<std::string>(), overrides);
      res.set_content(response_body(*result), kJson);
    });
  });

  server.Get(R"(/api/score/([^/]+)/midi)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto result = service.get(req.matches[1]);
      const std::vector<std::uint8_t> bytes = write_midi(result->score);
      res.set_content(std::string(bytes.begin(), bytes.end()), "audio/midi");
    });
  });

  server.Get(R"(/api/score/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { res.set_content(score_to_json(service.get(req.matches[1])->score), kJson); });
  });

  server.Get("/api/health", [&service](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}, {"model", service.model().fingerprint}}.dump(), kJson);
  });
}

void serve(RecommendService& service, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, service);
  if (!server.bind_to_port(host, port))
    throw ContractError("cannot bind " + host + ":" + std::to_string(port));
  server.listen_after_bind();
}

}  // namespace lyre
