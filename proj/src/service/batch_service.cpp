#include <algorithm>
#include <chrono>
#include <ctime>
#include <set>
#include <sstream>

#include "dqa/errors.hpp"
#include "dqa/pdf_extract.hpp"
#include "dqa/service.hpp"

namespace dqa {

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind() + ": " + err->what();
  return e.what();
}

std::string key(const BatchJob& job, const std::string& rest) { return job.batch_id + "/" + rest; }

}  // namespace

BatchService::BatchService(std::shared_ptr<ObjectStore> store, std::shared_ptr<Scorer> scorer, Options options)
    : store_(std::move(store)), scorer_(std::move(scorer)), options_(std::move(options)) {
  if (!store_) throw ConfigError("BatchService needs an object store");
  if (options_.recover) recover_jobs();
  for (unsigned i = 0; i < options_.workers; ++i) {
    workers_.emplace_back([this](std::stop_token stop) { worker_loop(stop); });
  }
}

BatchService::~BatchService() {
  for (auto& w : workers_) w.request_stop();
  queue_cv_.notify_all();
  workers_.clear();
}

void BatchService::on_transition(std::function<void(const BatchJob&)> hook) {
  std::unique_lock lock(jobs_mutex_);
  hook_ = std::move(hook);
}

std::shared_ptr<const BatchJob> BatchService::snapshot(const std::string& batch_id) const {
  std::shared_lock lock(jobs_mutex_);
  auto it = jobs_.find(batch_id);
  if (it == jobs_.end()) throw NotFound("no batch '" + batch_id + "'");
  return it->second;
}

void BatchService::publish(BatchJob job) {
  job.updated_at = now_iso8601();
  // Persist first: a snapshot readers can see is always recoverable.
  store_->put(key(job, "job.json"), job_to_json(job));
  auto snap = std::make_shared<const BatchJob>(std::move(job));
  std::function<void(const BatchJob&)> hook;
  {
    std::unique_lock lock(jobs_mutex_);
    jobs_[snap->batch_id] = snap;
    hook = hook_;
  }
  if (hook) hook(*snap);
}

void BatchService::advance(BatchJob& job, JobState next) {
  if (!can_transition(job.state, next)) {
    throw IllegalTransition(std::string(job_state_name(job.state)) + " -> " + std::string(job_state_name(next)));
  }
  job.state = next;
  publish(job);
}

void BatchService::fail(BatchJob& job, const std::string& message) {
  job.error = message;
  advance(job, JobState::Failed);
}

std::string BatchService::submit(std::vector<UploadedFile> files, std::vector<int> question_ids) {
  if (files.empty()) throw EmptyBatch("a batch needs at least one file");
  for (const auto& f : files) {
    if (f.bytes.size() > options_.max_upload_bytes) {
      throw FileTooLarge("'" + f.filename + "' is " + std::to_string(f.bytes.size()) + " bytes; the limit is " +
                         std::to_string(options_.max_upload_bytes));
    }
  }
  std::set<int> known;
  for (const auto& q : options_.questions) known.insert(q.qid);
  std::set<int> qids(question_ids.begin(), question_ids.end());
  for (int q : qids) {
    if (!known.count(q)) throw UnknownQuestionId("no question with qid " + std::to_string(q));
  }
  if (qids.empty()) qids = known;

  BatchJob job;
  do {
    job.batch_id = random_batch_id();
  } while (store_->exists(job.batch_id + "/") || [&] {
    std::shared_lock lock(jobs_mutex_);
    return jobs_.count(job.batch_id) > 0;
  }());
  job.question_ids.assign(qids.begin(), qids.end());
  job.created_at = now_iso8601();
  for (std::size_t i = 0; i < files.size(); ++i) {
    DocStatus d;
    d.doc_id = make_doc_id(i, files[i].filename);
    d.filename = files[i].filename;
    d.bytes = files[i].bytes.size();
    store_->put(key(job, "raw/" + d.doc_id), files[i].bytes);
    job.docs.push_back(std::move(d));
  }
  publish(job);
  enqueue(job.batch_id);
  return job.batch_id;
}

BatchJob BatchService::status(const std::string& batch_id) const { return *snapshot(batch_id); }

std::string BatchService::results(const std::string& batch_id) const {
  const auto job = snapshot(batch_id);
  if (job->state == JobState::Failed) throw JobFailed(job->error.value_or("batch failed"));
  if (job->state != JobState::Done) {
    throw NotReady("batch '" + batch_id + "' is " + std::string(job_state_name(job->state)));
  }
  auto bytes = store_->get(key(*job, "results.tsv"));
  if (!bytes) throw IoError("results.tsv missing for finished batch '" + batch_id + "'");
  return std::move(*bytes);
}

void BatchService::run_extract(BatchJob& job) {
  std::size_t ok = 0;
  for (auto& d : job.docs) {
    d.state = DocState::Pending;
    d.error.reset();
    try {
      const auto raw = store_->get(key(job, "raw/" + d.doc_id));
      if (!raw) throw IoError("raw upload missing");
      RawDocument doc = normalize_document(extract_document(*raw));
      store_->put(key(job, "text/" + d.doc_id + ".txt"), doc.text);
      d.state = DocState::Ok;
      ++ok;
    } catch (const std::exception& e) {
      d.state = DocState::Failed;
      d.error = describe(e);
    }
    publish(job);
  }
  if (ok == 0) throw JobFailed("no document could be extracted");
}

void BatchService::run_segment(BatchJob& job) {
  std::vector<Sentence> all;
  std::size_t ok = 0;
  for (auto& d : job.docs) {
    if (d.state != DocState::Ok) continue;
    try {
      const auto text = store_->get(key(job, "text/" + d.doc_id + ".txt"));
      if (!text) throw IoError("extracted text missing");
      RawDocument doc;
      doc.doc_id = d.doc_id;
      doc.text = *text;
      auto seg = split_sentences(doc, options_.segmenter);
      d.sentences = seg.sentences.size();
      all.insert(all.end(), std::make_move_iterator(seg.sentences.begin()),
                 std::make_move_iterator(seg.sentences.end()));
      ++ok;
    } catch (const std::exception& e) {
      d.state = DocState::Failed;
      d.error = describe(e);
    }
  }
  if (ok == 0) throw JobFailed("no document could be segmented");
  std::ostringstream out;
  write_sentences_tsv(all, out);
  store_->put(key(job, "sentences.tsv"), out.str());
}

void BatchService::run_infer(BatchJob& job) {
  if (!scorer_) throw ScorerUnavailable("no scorer loaded");
  const auto tsv = store_->get(key(job, "sentences.tsv"));
  if (!tsv) throw IoError("sentences.tsv missing");
  std::istringstream in(*tsv);
  const auto sentences = read_sentences_tsv(in);
  std::vector<ResultRow> rows;
  {
    std::lock_guard lock(scorer_mutex_);
    rows = score_sentences(sentences, job.question_ids, options_.questions, *scorer_);
  }
  store_->put(key(job, "results.tsv"), results_tsv(rows));
}

JobState BatchService::run_pipeline(const std::string& batch_id) {
  BatchJob job = *snapshot(batch_id);
  try {
    // A recovered job resumes at the stage it was in; that stage reruns from its start.
    while (!is_terminal(job.state)) {
      switch (job.state) {
        case JobState::Queued: advance(job, JobState::Extracting); break;
        case JobState::Extracting:
          run_extract(job);
          advance(job, JobState::Parsing);
          break;
        case JobState::Parsing:
          run_segment(job);
          advance(job, JobState::Inferring);
          break;
        case JobState::Inferring:
          run_infer(job);
          advance(job, JobState::Done);
          break;
        default: break;
      }
    }
  } catch (const JobFailed& e) {
    fail(job, e.what());
  } catch (const std::exception& e) {
    fail(job, describe(e));
  }
  return job.state;
}

void BatchService::recover_jobs() {
  std::vector<BatchJob> pending;
  for (const auto& entry : store_->list("")) {
    if (entry.empty() || entry.back() != '/') continue;
    const std::string id = entry.substr(0, entry.size() - 1);
    const auto json = store_->get(id + "/job.json");
    if (!json) continue;
    BatchJob job = job_from_json(*json);
    if (job.batch_id != id) continue;
    if (!is_terminal(job.state)) pending.push_back(job);
    std::unique_lock lock(jobs_mutex_);
    jobs_[id] = std::make_shared<const BatchJob>(std::move(job));
  }
  std::sort(pending.begin(), pending.end(),
            [](const BatchJob& a, const BatchJob& b) { return a.created_at < b.created_at; });
  for (const auto& job : pending) enqueue(job.batch_id);
}

void BatchService::enqueue(const std::string& batch_id) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(batch_id);
  }
  queue_cv_.notify_one();
}

std::size_t BatchService::queued() const {
  std::lock_guard lock(queue_mutex_);
  return queue_.size();
}

void BatchService::worker_loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    std::string id;
    {
      std::unique_lock lock(queue_mutex_);
      if (!queue_cv_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
      id = std::move(queue_.front());
      queue_.pop_front();
    }
    try {
      run_pipeline(id);
    } catch (const std::exception&) {
      // run_pipeline records failures in the job; only NotFound reaches here.
    }
  }
}

}  // namespace dqa
