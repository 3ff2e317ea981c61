#pragma once

// HTTP routes over a ScenarioStore:
//
//   POST   /scenarios                 create            201
//   GET    /scenarios                 list              200
//   GET    /scenarios/{id}            read              200
//   PUT    /scenarios/{id}            update (version)  200, 409 on stale version
//   DELETE /scenarios/{id}            delete            204
//   POST   /scenarios/{id}/project    run_projection    200
//   POST   /scenarios/{id}/simulate   run_simulation    200
//   GET    /scenarios/{id}/graph      ?view=refined|aggregate&format=json|dot
//
// Errors are {code, message, details[]} with 400/404/409/422/500.

#include <string>

// Eigen must come first: <resolv.h>, pulled in by httplib, defines a _res
// macro that breaks Eigen's product kernels.
#include "edusim/scenario.hpp"
#include "edusim/store.hpp"

#include <httplib.h>
#include <json.hpp>

namespace edusim {

namespace service_detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nullptr;
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ApiError(400, "bad-request", "request body is not valid JSON", {e.what()});
  }
}

// Runs a handler, mapping every failure onto the error body.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ApiError& e) {
      send_json(res, e.status, e.body());
    } catch (const Error& e) {
      send_json(res, 422, ApiError(422, e.code(), e.what()).body());
    } catch (const std::exception& e) {
      send_json(res, 500, ApiError(500, "internal", e.what()).body());
    }
  };
}

}  // namespace service_detail

inline void register_routes(httplib::Server& server, ScenarioStore& store) {
  using service_detail::guarded;
  using service_detail::parse_body;
  using service_detail::send_json;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"}});
  server.Options(R"(/scenarios.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Post("/scenarios", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 201, store.create(parse_body(req)));
              }));

  server.Get("/scenarios", guarded([&](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, {{"scenarios", store.list()}});
             }));

  server.Get(R"(/scenarios/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, store.get(req.matches[1]));
             }));

  server.Put(R"(/scenarios/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
               const auto body = parse_body(req);
               if (!body.is_object() || !body.contains("version") ||
                   !body["version"].is_number_integer())
                 throw ApiError(422, "missing-version",
                                "updates must carry the version they were based on");
               send_json(res, 200, store.update(req.matches[1], body, body["version"].get<std::int64_t>()));
             }));

  server.Delete(R"(/scenarios/([^/]+))",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                  store.remove(req.matches[1]);
                  res.status = 204;
                }));

  server.Post(R"(/scenarios/([^/]+)/project)",
              guarded([&](const httplib::Request& req, httplib::Response& res) {
                auto [scenario, model] = store.load(req.matches[1]);
                const auto body = parse_body(req);
                const auto overrides = body.is_object() && body.contains("overrides")
                                           ? body["overrides"]
                                           : nlohmann::json(nullptr);
                send_json(res, 200,
                          {{"scenario_id", scenario.id},
                           {"version", scenario.version},
                           {"result", run_projection(scenario, model, overrides)}});
              }));

  server.Post(R"(/scenarios/([^/]+)/simulate)",
              guarded([&](const httplib::Request& req, httplib::Response& res) {
                auto [scenario, model] = store.load(req.matches[1]);
                const auto cfg = simulation_config_from_json(parse_body(req), scenario);
                send_json(res, 200,
                          {{"scenario_id", scenario.id},
                           {"version", scenario.version},
                           {"result", run_simulation(scenario, model, cfg)}});
              }));

  server.Get(R"(/scenarios/([^/]+)/graph)",
             guarded([&](const httplib::Request& req, httplib::Response& res) {
               auto [scenario, model] = store.load(req.matches[1]);
               const std::string view = req.has_param("view") ? req.get_param_value("view") : "refined";
               const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
               if (view != "refined" && view != "aggregate")
                 throw ApiError(422, "invalid-view", "view must be refined or aggregate");
               if (format != "json" && format != "dot")
                 throw ApiError(422, "invalid-format", "format must be json or dot");
               const auto& g = *model.graph;
               if (format == "dot") {
                 res.status = 200;
                 res.set_content(view == "refined" ? graph_to_dot(g)
                                                   : graph_to_dot(aggregate_graph(g), g.program()),
                                 "text/vnd.graphviz");
                 return;
               }
               send_json(res, 200,
                         view == "refined" ? graph_to_json(g)
                                           : graph_to_json(aggregate_graph(g), g.program()));
             }));
}

}  // namespace edusim
