#include <atomic>
#include <chrono>
#include <map>
#include <set>
#include <thread>

#include "doctest.h"
#include "dqa/errors.hpp"
#include "dqa/http_api.hpp"
#include "dqa/pdf_extract.hpp"
#include "dqa/rng.hpp"
#include "dqa/service.hpp"
#include "httplib.h"
#include "json.hpp"
#include "support/report_fixtures.hpp"
#include "support/temp_dir.hpp"

using dqa::JobState;
using dqa::testing::TempDir;

namespace {

constexpr JobState kStates[] = {JobState::Queued,    JobState::Extracting, JobState::Parsing,
                                JobState::Inferring, JobState::Done,       JobState::Failed};

dqa::BatchService::Options manual() {
  dqa::BatchService::Options o;
  o.workers = 0;
  return o;
}

struct Harness {
  explicit Harness(dqa::BatchService::Options options = manual(),
                   std::shared_ptr<dqa::Scorer> scorer = std::make_shared<dqa::ConstantScorer>())
      : store(std::make_shared<dqa::LocalObjectStore>(dir.path())),
        service(std::make_unique<dqa::BatchService>(store, std::move(scorer), std::move(options))) {}

  std::vector<std::string> layout(const std::string& id) const { return store->list(id); }

  TempDir dir;
  std::shared_ptr<dqa::LocalObjectStore> store;
  std::unique_ptr<dqa::BatchService> service;
};

JobState wait_terminal(const dqa::BatchService& s, const std::string& id, std::chrono::seconds limit) {
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    const auto state = s.status(id).state;
    if (dqa::is_terminal(state)) return state;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return s.status(id).state;
}

std::size_t data_rows(const std::string& tsv) {
  return static_cast<std::size_t>(std::count(tsv.begin(), tsv.end(), '\n')) - 1;
}

}  // namespace

TEST_CASE("job state machine") {
  for (JobState from : kStates) {
    for (JobState to : kStates) {
      const bool expected = !dqa::is_terminal(from) &&
                            (to == JobState::Failed || static_cast<int>(to) == static_cast<int>(from) + 1);
      CHECK(dqa::can_transition(from, to) == expected);
    }
    CHECK(dqa::parse_job_state(dqa::job_state_name(from)) == from);
  }
  CHECK_THROWS_AS(dqa::parse_job_state("Running"), dqa::FormatError);
}

TEST_CASE("job JSON round-trip") {
  dqa::BatchJob job;
  job.batch_id = "abc";
  job.state = JobState::Parsing;
  job.question_ids = {1, 3};
  job.created_at = "2026-01-01T00:00:00.000Z";
  job.updated_at = "2026-01-01T00:00:01.000Z";
  job.docs = {{"000_a", "a.pdf", 10, dqa::DocState::Ok, 4, std::nullopt},
              {"001_b", "b.pdf", 3, dqa::DocState::Failed, 0, std::string("MalformedPdf: bad")}};
  CHECK(dqa::job_from_json(dqa::job_to_json(job)) == job);
  job.error = "x";
  CHECK(dqa::job_from_json(dqa::job_to_json(job)) == job);
  CHECK_THROWS_AS(dqa::job_from_json("{}"), dqa::FormatError);
  CHECK_THROWS_AS(dqa::job_from_json("not json"), dqa::FormatError);
}

TEST_CASE("results TSV format") {
  std::vector<dqa::ResultRow> rows{{"000_a", 3, 0, "Tab\there", 0.123456, false}, {"000_a", 3, 1, "ok", 1.0, true}};
  CHECK(dqa::results_tsv(rows) ==
        "doc_id\tqid\tsent_id\tscore\tis_answer\tsentence_text\n"
        "000_a\t3\t0\t0.1235\t0\tTab here\n"
        "000_a\t3\t1\t1.0000\t1\tok\n");
  CHECK(dqa::results_tsv({}) == "doc_id\tqid\tsent_id\tscore\tis_answer\tsentence_text\n");
}

TEST_CASE("score_sentences ordering and threshold") {
  std::vector<dqa::Sentence> sents{{1, "001_b", "b1", 0, 2}, {0, "000_a", "a0", 0, 2}, {0, "001_b", "b0", 0, 2}};
  const std::vector<int> qids{2, 5};
  dqa::ConstantScorer at_threshold(0.5, 0.5);
  auto rows = dqa::score_sentences(sents, qids, dqa::tcfd_questions(), at_threshold, 2);
  REQUIRE(rows.size() == 6);
  std::vector<std::tuple<std::string, int, std::size_t>> keys;
  for (const auto& r : rows) {
    keys.emplace_back(r.doc_id, r.qid, r.sent_id);
    CHECK(r.is_answer);
  }
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  dqa::ConstantScorer below(0.49, 0.5);
  for (const auto& r : dqa::score_sentences(sents, qids, dqa::tcfd_questions(), below)) CHECK(!r.is_answer);
  const std::vector<int> bad{99};
  CHECK_THROWS_AS(dqa::score_sentences(sents, bad, dqa::tcfd_questions(), below), dqa::UnknownQuestionId);
  dqa::ConstantScorer out_of_range(1.5, 0.5);
  CHECK_THROWS_AS(dqa::score_sentences(sents, qids, dqa::tcfd_questions(), out_of_range), dqa::ProtocolError);
}

TEST_CASE("ids") {
  CHECK(dqa::make_doc_id(0, "Annual Report 2020.pdf") == "000_Annual_Report_2020");
  CHECK(dqa::make_doc_id(12, "../../etc/passwd") == "012_passwd");
  CHECK(dqa::make_doc_id(3, ".hidden") == "003_hidden");
  CHECK(dqa::make_doc_id(4, "") == "004_doc");
  CHECK(dqa::make_doc_id(5, "r\xc3\xa9sum\xc3\xa9.txt") == "005_r__sum__");
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto id = dqa::random_batch_id();
    CHECK(id.size() == 24);
    CHECK(id.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_") ==
          std::string::npos);
    seen.insert(id);
  }
  CHECK(seen.size() == 1000);
}

TEST_CASE("service config") {
  dqa::ServiceConfig c;
  std::map<std::string, std::string> env{{"DQA_PORT", "9001"},          {"DQA_STORE_ROOT", "/tmp/s"},
                                         {"DQA_EMBEDDINGS", "e.bin"},    {"DQA_CLASSIFIER", "c.bin"},
                                         {"DQA_WORKERS", "3"},           {"DQA_MAX_UPLOAD", "1024"}};
  auto fake = [&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  dqa::apply_env_overrides(c, fake);
  CHECK(c.port == 9001);
  CHECK(c.store_root == "/tmp/s");
  CHECK(c.embeddings_path == "e.bin");
  CHECK(c.workers == 3);
  CHECK(c.max_upload_bytes == 1024);
  CHECK_NOTHROW(c.validate());
  env["DQA_WORKERS"] = "two";
  CHECK_THROWS_AS(dqa::apply_env_overrides(c, fake), dqa::ConfigError);
  dqa::ServiceConfig none;
  CHECK_THROWS_AS(none.validate(), dqa::ConfigError);
  none.embeddings_path = "/nonexistent/e.bin";
  none.classifier_path = "/nonexistent/c.bin";
  CHECK_THROWS_AS(dqa::make_scorer(none), dqa::ConfigError);
  none.scorer_cmd = "cat";
  CHECK(dqa::make_scorer(none) != nullptr);
}

TEST_CASE("local object store") {
  TempDir dir;
  dqa::LocalObjectStore store(dir.path());
  store.put("b1/raw/x", "abc");
  store.put("b1/job.json", "{}");
  store.put("b1/job.json", "{\"v\":2}");
  CHECK(store.get("b1/raw/x") == "abc");
  CHECK(store.get("b1/job.json") == "{\"v\":2}");
  CHECK(!store.get("b1/missing"));
  CHECK(store.exists("b1/"));
  CHECK(store.list("b1") == std::vector<std::string>{"job.json", "raw/"});
  CHECK(store.list("") == std::vector<std::string>{"b1/"});
  for (const char* bad : {"", "/abs", "a/../b", "a//b", "./a", "a\\b"}) {
    CHECK_THROWS_AS(store.put(bad, "x"), dqa::IoError);
  }
}

TEST_CASE("pipeline on a text file") {
  Harness h;
  const std::string text = "The board oversees climate risks.\n\nEmissions fell by ten percent in 2020.";
  const auto id = h.service->submit({{"r.txt", text}}, {3});
  CHECK(h.service->status(id).state == JobState::Queued);
  CHECK(h.service->status(id) == h.service->status(id));
  CHECK_THROWS_AS(h.service->results(id), dqa::NotReady);
  CHECK(h.service->run_pipeline(id) == JobState::Done);
  const auto tsv = h.service->results(id);
  CHECK(tsv ==
        "doc_id\tqid\tsent_id\tscore\tis_answer\tsentence_text\n"
        "000_r\t3\t0\t0.5000\t1\tThe board oversees climate risks.\n"
        "000_r\t3\t1\t0.5000\t1\tEmissions fell by ten percent in 2020.\n");
  CHECK(h.service->results(id) == tsv);
  CHECK(h.layout(id) == std::vector<std::string>{"job.json", "raw/", "results.tsv", "sentences.tsv", "text/"});
  const auto job = h.service->status(id);
  REQUIRE(job.docs.size() == 1);
  CHECK(job.docs[0].sentences == 2);
  CHECK(job.question_ids == std::vector<int>{3});
  CHECK(dqa::job_from_json(*h.store->get(id + "/job.json")) == job);
  // Terminal jobs are left alone.
  CHECK(h.service->run_pipeline(id) == JobState::Done);
  CHECK(h.service->results(id) == tsv);
}

TEST_CASE("submit validation") {
  auto options = manual();
  options.max_upload_bytes = 10;
  Harness h(options);
  CHECK_THROWS_AS(h.service->submit({}), dqa::EmptyBatch);
  CHECK_THROWS_AS(h.service->submit({{"big.txt", std::string(11, 'x')}}), dqa::FileTooLarge);
  CHECK_THROWS_AS(h.service->submit({{"a.txt", "x"}}, {99}), dqa::UnknownQuestionId);
  CHECK_THROWS_AS(h.service->submit({{"a.txt", "x"}}, {0}), dqa::UnknownQuestionId);
  CHECK_THROWS_AS(h.service->status("nope"), dqa::NotFound);
  CHECK_THROWS_AS(h.service->results("nope"), dqa::NotFound);
  CHECK_THROWS_AS(h.service->run_pipeline("nope"), dqa::NotFound);
  const auto id = h.service->submit({{"a.txt", "x"}}, {5, 2, 5});
  CHECK(h.service->status(id).question_ids == std::vector<int>{2, 5});
  const auto all = h.service->submit({{"a.txt", "x"}});
  CHECK(h.service->status(all).question_ids.size() == 14);
  CHECK(h.store->list("").size() == 2);
}

TEST_CASE("per-document failure tolerance") {
  Harness h;
  const auto good = dqa::testing::report_pdf(1);
  const auto corrupt = dqa::testing::corrupt_pdf();
  REQUIRE_THROWS_AS(dqa::extract_pdf_text(corrupt), dqa::MalformedPdf);

  const auto mixed = h.service->submit({{"good.pdf", good.bytes}, {"bad.pdf", corrupt}}, {1});
  CHECK(h.service->run_pipeline(mixed) == JobState::Done);
  const auto job = h.service->status(mixed);
  CHECK(job.docs[0].state == dqa::DocState::Ok);
  CHECK(job.docs[0].sentences == 9);
  CHECK(job.docs[1].state == dqa::DocState::Failed);
  CHECK(job.docs[1].error->rfind("MalformedPdf", 0) == 0);
  const auto tsv = h.service->results(mixed);
  CHECK(data_rows(tsv) == 9);
  CHECK(tsv.find("001_bad") == std::string::npos);

  const auto all_bad = h.service->submit({{"bad.pdf", corrupt}});
  CHECK(h.service->run_pipeline(all_bad) == JobState::Failed);
  CHECK(h.service->status(all_bad).error.has_value());
  CHECK_THROWS_AS(h.service->results(all_bad), dqa::JobFailed);
}

TEST_CASE("scorer failures fail the batch") {
  Harness h(manual(), nullptr);
  CHECK(!h.service->ready());
  const auto id = h.service->submit({{"a.txt", "The board oversees climate risks."}});
  CHECK(h.service->run_pipeline(id) == JobState::Failed);
  CHECK(h.service->status(id).error->find("ScorerUnavailable") != std::string::npos);
}

TEST_CASE("recovery resumes unfinished jobs") {
  TempDir dir;
  auto store = std::make_shared<dqa::LocalObjectStore>(dir.path());
  auto scorer = std::make_shared<dqa::ConstantScorer>(0.25, 0.5);
  std::string queued, inferring, expected;
  {
    dqa::BatchService s(store, scorer, manual());
    queued = s.submit({{"a.txt", "The board oversees climate risks."}}, {1});
    inferring = s.submit({{"b.txt", "Scenario analysis informs our strategy."}}, {2});
    REQUIRE(s.run_pipeline(inferring) == JobState::Done);
    expected = s.results(inferring);
    // Pretend the process died during inference.
    auto job = s.status(inferring);
    job.state = JobState::Inferring;
    store->put(inferring + "/job.json", dqa::job_to_json(job));
  }
  auto options = manual();
  options.workers = 1;
  dqa::BatchService s(store, scorer, options);
  CHECK(wait_terminal(s, queued, std::chrono::seconds(30)) == JobState::Done);
  CHECK(wait_terminal(s, inferring, std::chrono::seconds(30)) == JobState::Done);
  CHECK(s.results(inferring) == expected);
  CHECK(data_rows(s.results(queued)) == 1);
}

TEST_CASE("concurrent submit, poll and download keep transitions legal") {
  auto options = manual();
  options.workers = 2;
  Harness h(options);
  std::mutex mu;
  std::map<std::string, JobState> last;
  std::atomic<int> illegal{0};
  h.service->on_transition([&](const dqa::BatchJob& job) {
    std::lock_guard lock(mu);
    auto it = last.find(job.batch_id);
    // Per-document progress republishes the current state.
    if (it != last.end() && it->second != job.state && !dqa::can_transition(it->second, job.state)) ++illegal;
    if (job.state == JobState::Done && !h.store->exists(job.batch_id + "/results.tsv")) ++illegal;
    last[job.batch_id] = job.state;
  });
  const auto good = dqa::testing::report_pdf(2, 1).bytes;
  const auto bad = dqa::testing::corrupt_pdf();
  std::vector<std::string> ids;
  std::mutex ids_mu;
  std::atomic<int> violations{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      dqa::Rng rng(static_cast<std::uint64_t>(t) + 1);
      std::map<std::string, JobState> seen;
      for (int step = 0; step < 60; ++step) {
        const auto op = rng.below(3);
        if (op == 0) {
          std::vector<dqa::UploadedFile> files{{"g.pdf", good}};
          if (rng.below(3) == 0) files.push_back({"b.pdf", bad});
          if (rng.below(5) == 0) files = {{"b.pdf", bad}};
          auto id = h.service->submit(files, {1 + static_cast<int>(rng.below(14))});
          std::lock_guard lock(ids_mu);
          ids.push_back(id);
          continue;
        }
        std::string id;
        {
          std::lock_guard lock(ids_mu);
          if (ids.empty()) continue;
          id = ids[rng.below(ids.size())];
        }
        const auto state = h.service->status(id).state;
        auto it = seen.find(id);
        if (it != seen.end() && static_cast<int>(state) < static_cast<int>(it->second) &&
            state != JobState::Failed) {
          ++violations;
        }
        seen[id] = state;
        if (op == 2) {
          try {
            const auto tsv = h.service->results(id);
            if (state != JobState::Done && h.service->status(id).state != JobState::Done) ++violations;
            if (tsv.rfind("doc_id\t", 0) != 0) ++violations;
          } catch (const dqa::NotReady&) {
            if (state == JobState::Done) ++violations;
          } catch (const dqa::JobFailed&) {
          }
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& id : ids) CHECK(dqa::is_terminal(wait_terminal(*h.service, id, std::chrono::seconds(60))));
  CHECK(illegal == 0);
  CHECK(violations == 0);
}

TEST_CASE("HTTP API end to end") {
  auto options = manual();
  options.workers = 1;
  Harness h(options);
  auto server = dqa::make_http_server(*h.service, std::size_t{50} << 20);
  const int port = server->bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serve([&] { server->listen_after_bind(); });
  server->wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  auto questions = client.Get("/questions");
  REQUIRE(questions);
  CHECK(nlohmann::json::parse(questions->body).size() == 14);

  httplib::MultipartFormDataItems items;
  for (int c = 0; c < 3; ++c) {
    items.push_back({"files[]", dqa::testing::report_pdf(c).bytes, "report" + std::to_string(c) + ".pdf",
                     "application/pdf"});
  }
  items.push_back({"question_ids", "[1, 7]", "", "application/json"});
  const auto start = std::chrono::steady_clock::now();
  auto created = client.Post("/batches", items);
  REQUIRE(created);
  REQUIRE(created->status == 201);
  const std::string id = nlohmann::json::parse(created->body)["batch_id"];

  std::string state;
  while (std::chrono::steady_clock::now() - start < std::chrono::seconds(60)) {
    auto st = client.Get("/batches/" + id);
    REQUIRE(st);
    REQUIRE(st->status == 200);
    state = nlohmann::json::parse(st->body)["state"];
    if (state == "Done" || state == "Failed") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  CHECK(state == "Done");
  auto r1 = client.Get("/batches/" + id + "/results");
  auto r2 = client.Get("/batches/" + id + "/results");
  REQUIRE(r1);
  REQUIRE(r2);
  CHECK(r1->status == 200);
  CHECK(r1->get_header_value("Content-Type") == "text/tab-separated-values");
  CHECK(r1->body == r2->body);
  CHECK(data_rows(r1->body) == 3 * 9 * 2);

  CHECK(client.Get("/batches/unknown")->status == 404);
  CHECK(client.Get("/batches/unknown/results")->status == 404);
  httplib::MultipartFormDataItems bad_q{{"files[]", "x", "a.txt", "text/plain"}, {"question_ids", "[99]", "", ""}};
  auto rejected = client.Post("/batches", bad_q);
  CHECK(rejected->status == 400);
  CHECK(nlohmann::json::parse(rejected->body)["error"] == "UnknownQuestionId");
  httplib::MultipartFormDataItems none{{"question_ids", "[1]", "", ""}};
  CHECK(client.Post("/batches", none)->status == 400);

  httplib::MultipartFormDataItems corrupt{{"files[]", dqa::testing::corrupt_pdf(), "bad.pdf", "application/pdf"}};
  auto failed = client.Post("/batches", corrupt);
  REQUIRE(failed->status == 201);
  const std::string failed_id = nlohmann::json::parse(failed->body)["batch_id"];
  CHECK(wait_terminal(*h.service, failed_id, std::chrono::seconds(30)) == JobState::Failed);
  auto failed_results = client.Get("/batches/" + failed_id + "/results");
  CHECK(failed_results->status == 500);
  CHECK(nlohmann::json::parse(failed_results->body)["error"] == "JobFailed");

  server->stop();
  serve.join();
}

TEST_CASE("HTTP not-ready and unhealthy responses") {
  auto options = manual();
  options.max_upload_bytes = 1024;
  Harness h(options, nullptr);
  auto server = dqa::make_http_server(*h.service, 1024);
  const int port = server->bind_to_any_port("127.0.0.1");
  std::thread serve([&] { server->listen_after_bind(); });
  server->wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  CHECK(client.Get("/healthz")->status == 503);
  httplib::MultipartFormDataItems items{{"files[]", "The board oversees climate risks.", "a.txt", "text/plain"}};
  auto created = client.Post("/batches", items);
  REQUIRE(created->status == 201);
  const std::string id = nlohmann::json::parse(created->body)["batch_id"];
  CHECK(client.Get("/batches/" + id + "/results")->status == 409);
  httplib::MultipartFormDataItems big{{"files[]", std::string(2048, 'x'), "a.txt", "text/plain"}};
  CHECK(client.Post("/batches", big)->status == 413);
  auto preflight = client.Options("/batches");
  CHECK(preflight->status == 204);
  server->stop();
  serve.join();
}
