#include "dqa/http_api.hpp"

#include <climits>

#include "dqa/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dqa {

namespace {

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", kind}, {"message", message}}.dump(), "application/json");
}

int status_for(const Error& e) {
  if (dynamic_cast<const NotFound*>(&e)) return 404;
  if (dynamic_cast<const NotReady*>(&e)) return 409;
  if (dynamic_cast<const FileTooLarge*>(&e)) return 413;
  if (dynamic_cast<const EmptyBatch*>(&e) || dynamic_cast<const UnknownQuestionId*>(&e) ||
      dynamic_cast<const SchemaError*>(&e)) {
    return 400;
  }
  return 500;
}

// Runs a handler, mapping typed errors to their HTTP status.
template <typename F>
void guarded(httplib::Response& res, F&& handler) {
  try {
    handler();
  } catch (const Error& e) {
    send_error(res, status_for(e), e.kind(), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "InternalError", e.what());
  }
}

std::vector<int> parse_question_ids(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw SchemaError("question_ids: expected a JSON array of integers");
  }
  if (!j.is_array()) throw SchemaError("question_ids: expected a JSON array of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw SchemaError("question_ids: expected a JSON array of integers");
    const auto q = v.get<std::int64_t>();
    if (q < INT_MIN || q > INT_MAX) throw UnknownQuestionId("no question with qid " + v.dump());
    out.push_back(static_cast<int>(q));
  }
  return out;
}

}  // namespace

std::unique_ptr<httplib::Server> make_http_server(BatchService& service, std::size_t max_upload_bytes) {
  auto server = std::make_unique<httplib::Server>();
  server->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  // Per-file limits are enforced by the service; this bounds the whole request.
  server->set_payload_max_length(max_upload_bytes * 16 + (std::size_t{1} << 20));

  server->Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server->Post("/batches", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.is_multipart_form_data()) throw EmptyBatch("expected a multipart upload with field files[]");
      std::vector<UploadedFile> files;
      for (const char* field : {"files[]", "files"}) {
        for (const auto& f : req.get_file_values(field)) files.push_back({f.filename, f.content});
      }
      std::vector<int> qids;
      if (req.has_file("question_ids")) qids = parse_question_ids(req.get_file_value("question_ids").content);
      const std::string id = service.submit(std::move(files), std::move(qids));
      res.status = 201;
      res.set_header("Location", "/batches/" + id);
      res.set_content(nlohmann::json{{"batch_id", id}}.dump(), "application/json");
    });
  });

  server->Get(R"(/batches/([A-Za-z0-9_-]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { res.set_content(job_to_json(service.status(req.matches[1])), "application/json"); });
  });

  server->Get(R"(/batches/([A-Za-z0-9_-]+)/results)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const std::string id = req.matches[1];
                  res.set_header("Content-Disposition", "attachment; filename=\"" + id + ".tsv\"");
                  res.set_content(service.results(id), "text/tab-separated-values");
                });
              });

  server->Get("/questions", [&service](const httplib::Request&, httplib::Response& res) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& q : service.questions()) out.push_back({{"qid", q.qid}, {"text", q.text}});
    res.set_content(out.dump(), "application/json");
  });

  server->Get("/healthz", [&service](const httplib::Request&, httplib::Response& res) {
    if (service.ready()) {
      res.set_content(R"({"status":"ok"})", "application/json");
    } else {
      send_error(res, 503, "ScorerUnavailable", "no scorer loaded");
    }
  });

  return server;
}

}  // namespace dqa
