#pragma once

#include <memory>
#include <string>

#include "dqa/service.hpp"

namespace httplib {
class Server;
}

namespace dqa {

// Routes of the batch API, with `Access-Control-Allow-Origin: *` on every
// response. Errors are JSON {"error": kind, "message": text}.
//   POST /batches               multipart files[] (+ question_ids) -> 201 {batch_id}
//   GET  /batches/{id}          job snapshot | 404
//   GET  /batches/{id}/results  TSV | 409 NotReady | 404 | 500 JobFailed
//   GET  /questions             [{qid, text}]
//   GET  /healthz               200 when a scorer is loaded, else 503
std::unique_ptr<httplib::Server> make_http_server(BatchService& service, std::size_t max_upload_bytes);

}  // namespace dqa
