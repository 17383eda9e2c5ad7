#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dqa/dataset.hpp"
#include "dqa/object_store.hpp"
#include "dqa/scorer.hpp"
#include "dqa/segmenter.hpp"

namespace dqa {

enum class JobState { Queued, Extracting, Parsing, Inferring, Done, Failed };

std::string_view job_state_name(JobState state);
// Throws FormatError.
JobState parse_job_state(std::string_view name);
bool is_terminal(JobState state);
// Queued -> Extracting -> Parsing -> Inferring -> Done; Failed from any
// non-terminal state.
bool can_transition(JobState from, JobState to);

enum class DocState { Pending, Ok, Failed };

struct DocStatus {
  std::string doc_id;
  std::string filename;
  std::size_t bytes = 0;
  DocState state = DocState::Pending;
  std::size_t sentences = 0;
  std::optional<std::string> error;

  bool operator==(const DocStatus&) const = default;
};

struct BatchJob {
  std::string batch_id;
  JobState state = JobState::Queued;
  std::vector<DocStatus> docs;
  std::vector<int> question_ids;
  std::string created_at;  // ISO 8601 UTC
  std::string updated_at;
  std::optional<std::string> error;

  bool operator==(const BatchJob&) const = default;
};

// job.json representation, also the body of GET /batches/{id}.
std::string job_to_json(const BatchJob& job);
// Throws FormatError.
BatchJob job_from_json(std::string_view json);

struct ResultRow {
  std::string doc_id;
  int qid = 0;
  std::size_t sent_id = 0;
  std::string sentence_text;
  double score = 0;
  bool is_answer = false;
};

// Header `doc_id<TAB>qid<TAB>sent_id<TAB>score<TAB>is_answer<TAB>sentence_text`,
// score with 4 decimals, is_answer as 1/0.
std::string results_tsv(std::span<const ResultRow> rows);

// Rows for every (sentence, qid), ordered (doc_id, qid, sent_id), scored in
// chunks of `chunk` requests. is_answer = score >= scorer.threshold().
std::vector<ResultRow> score_sentences(std::span<const Sentence> sentences, std::span<const int> qids,
                                       std::span<const TcfdQuestion> questions, Scorer& scorer,
                                       std::size_t chunk = 4096);

// doc_id for the index-th upload: zero-padded index, '_', and the file stem
// reduced to [A-Za-z0-9._-].
std::string make_doc_id(std::size_t index, std::string_view filename);
// 24 characters of [A-Za-z0-9_-] from the OS entropy source.
std::string random_batch_id();

struct UploadedFile {
  std::string filename;
  std::string bytes;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path store_root = "dqa-store";
  std::filesystem::path embeddings_path;
  std::filesystem::path classifier_path;
  std::optional<std::string> scorer_cmd;  // shell command speaking the external scorer protocol
  unsigned workers = 2;
  std::size_t max_upload_bytes = std::size_t{50} << 20;
  SegmenterConfig segmenter;

  // Throws ConfigError.
  void validate() const;
};

// Applies DQA_PORT, DQA_HOST, DQA_STORE_ROOT, DQA_EMBEDDINGS, DQA_CLASSIFIER,
// DQA_SCORER_CMD, DQA_WORKERS and DQA_MAX_UPLOAD. `getenv` is injectable for
// tests. Throws ConfigError on unparsable values.
void apply_env_overrides(ServiceConfig& config,
                         const std::function<const char*(const char*)>& getenv = [](const char* name) {
                           return std::getenv(name);
                         });

// Scorer named by the config: the external command when set, otherwise the
// embedding and classifier files. Throws ConfigError when a model file is
// missing or the pair is incompatible.
std::unique_ptr<Scorer> make_scorer(const ServiceConfig& config);

// Batch lifecycle over an object store. Each batch lives under "<batch_id>/"
// as raw/, text/, sentences.tsv, results.tsv and job.json.
class BatchService {
 public:
  struct Options {
    unsigned workers = 2;  // 0: no background workers, drive with run_pipeline
    std::size_t max_upload_bytes = std::size_t{50} << 20;
    SegmenterConfig segmenter;
    std::vector<TcfdQuestion> questions = tcfd_questions();
    bool recover = true;  // reload job.json snapshots and requeue unfinished jobs
  };

  BatchService(std::shared_ptr<ObjectStore> store, std::shared_ptr<Scorer> scorer, Options options);
  ~BatchService();
  BatchService(const BatchService&) = delete;
  BatchService& operator=(const BatchService&) = delete;

  // Throws EmptyBatch, FileTooLarge, UnknownQuestionId. An empty qid list
  // means all questions.
  std::string submit(std::vector<UploadedFile> files, std::vector<int> question_ids = {});
  // Throws NotFound.
  BatchJob status(const std::string& batch_id) const;
  // Throws NotFound, NotReady, JobFailed.
  std::string results(const std::string& batch_id) const;

  // Runs the unfinished stages of one job on the calling thread and returns
  // the terminal state. Throws NotFound.
  JobState run_pipeline(const std::string& batch_id);

  const std::vector<TcfdQuestion>& questions() const { return options_.questions; }
  bool ready() const { return scorer_ != nullptr; }
  std::size_t queued() const;

  // Called after every state change, with the new snapshot (test hook).
  void on_transition(std::function<void(const BatchJob&)> hook);

 private:
  std::shared_ptr<const BatchJob> snapshot(const std::string& batch_id) const;
  void publish(BatchJob job);
  void advance(BatchJob& job, JobState next);
  void fail(BatchJob& job, const std::string& message);
  void run_extract(BatchJob& job);
  void run_segment(BatchJob& job);
  void run_infer(BatchJob& job);
  void recover_jobs();
  void enqueue(const std::string& batch_id);
  void worker_loop(std::stop_token stop);

  std::shared_ptr<ObjectStore> store_;
  std::shared_ptr<Scorer> scorer_;
  Options options_;

  mutable std::shared_mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<const BatchJob>> jobs_;
  std::function<void(const BatchJob&)> hook_;
  std::mutex scorer_mutex_;  // Scorer implementations are not required to be reentrant

  mutable std::mutex queue_mutex_;
  std::condition_variable_any queue_cv_;
  std::deque<std::string> queue_;
  std::vector<std::jthread> workers_;
};

}  // namespace dqa
