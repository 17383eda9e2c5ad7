#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <random>
#include <tuple>

#include "dqa/classifier.hpp"
#include "dqa/embeddings.hpp"
#include "dqa/errors.hpp"
#include "dqa/service.hpp"
#include "dqa/tsv.hpp"
#include "json.hpp"

namespace dqa {

namespace {

constexpr std::array<JobState, 6> kAllStates = {JobState::Queued,    JobState::Extracting, JobState::Parsing,
                                                JobState::Inferring, JobState::Done,       JobState::Failed};

std::string_view doc_state_name(DocState s) {
  switch (s) {
    case DocState::Pending: return "Pending";
    case DocState::Ok: return "Ok";
    case DocState::Failed: return "Failed";
  }
  return "Pending";
}

DocState parse_doc_state(std::string_view name) {
  for (DocState s : {DocState::Pending, DocState::Ok, DocState::Failed}) {
    if (doc_state_name(s) == name) return s;
  }
  throw FormatError("job.json: unknown document state '" + std::string(name) + "'");
}

}  // namespace

std::string_view job_state_name(JobState state) {
  switch (state) {
    case JobState::Queued: return "Queued";
    case JobState::Extracting: return "Extracting";
    case JobState::Parsing: return "Parsing";
    case JobState::Inferring: return "Inferring";
    case JobState::Done: return "Done";
    case JobState::Failed: return "Failed";
  }
  return "Failed";
}

JobState parse_job_state(std::string_view name) {
  for (JobState s : kAllStates) {
    if (job_state_name(s) == name) return s;
  }
  throw FormatError("unknown job state '" + std::string(name) + "'");
}

bool is_terminal(JobState state) { return state == JobState::Done || state == JobState::Failed; }

bool can_transition(JobState from, JobState to) {
  if (is_terminal(from)) return false;
  if (to == JobState::Failed) return true;
  return static_cast<int>(to) == static_cast<int>(from) + 1;
}

std::string job_to_json(const BatchJob& job) {
  nlohmann::ordered_json docs = nlohmann::ordered_json::array();
  for (const auto& d : job.docs) {
    docs.push_back({{"doc_id", d.doc_id},
                    {"filename", d.filename},
                    {"bytes", d.bytes},
                    {"state", doc_state_name(d.state)},
                    {"sentences", d.sentences},
                    {"error", d.error ? nlohmann::ordered_json(*d.error) : nlohmann::ordered_json()}});
  }
  nlohmann::ordered_json j = {{"batch_id", job.batch_id},
                              {"state", job_state_name(job.state)},
                              {"question_ids", job.question_ids},
                              {"docs", std::move(docs)},
                              {"created_at", job.created_at},
                              {"updated_at", job.updated_at},
                              {"error", job.error ? nlohmann::ordered_json(*job.error) : nlohmann::ordered_json()}};
  return j.dump(2) + "\n";
}

BatchJob job_from_json(std::string_view json) {
  try {
    const auto j = nlohmann::json::parse(json);
    BatchJob job;
    job.batch_id = j.at("batch_id").get<std::string>();
    job.state = parse_job_state(j.at("state").get<std::string>());
    job.question_ids = j.at("question_ids").get<std::vector<int>>();
    job.created_at = j.at("created_at").get<std::string>();
    job.updated_at = j.at("updated_at").get<std::string>();
    if (!j.at("error").is_null()) job.error = j.at("error").get<std::string>();
    for (const auto& d : j.at("docs")) {
      DocStatus s;
      s.doc_id = d.at("doc_id").get<std::string>();
      s.filename = d.at("filename").get<std::string>();
      s.bytes = d.at("bytes").get<std::size_t>();
      s.state = parse_doc_state(d.at("state").get<std::string>());
      s.sentences = d.at("sentences").get<std::size_t>();
      if (!d.at("error").is_null()) s.error = d.at("error").get<std::string>();
      job.docs.push_back(std::move(s));
    }
    return job;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("job.json: ") + e.what());
  }
}

std::string results_tsv(std::span<const ResultRow> rows) {
  std::string out = "doc_id\tqid\tsent_id\tscore\tis_answer\tsentence_text\n";
  char score[32];
  for (const auto& r : rows) {
    std::snprintf(score, sizeof score, "%.4f", r.score);
    out += tsv_field(r.doc_id);
    out += '\t';
    out += std::to_string(r.qid);
    out += '\t';
    out += std::to_string(r.sent_id);
    out += '\t';
    out += score;
    out += '\t';
    out += r.is_answer ? '1' : '0';
    out += '\t';
    out += tsv_field(r.sentence_text);
    out += '\n';
  }
  return out;
}

std::vector<ResultRow> score_sentences(std::span<const Sentence> sentences, std::span<const int> qids,
                                       std::span<const TcfdQuestion> questions, Scorer& scorer, std::size_t chunk) {
  std::map<int, const std::string*> text_of;
  for (const auto& q : questions) text_of[q.qid] = &q.text;

  std::vector<const Sentence*> order;
  for (const auto& s : sentences) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const Sentence* a, const Sentence* b) {
    return std::tie(a->doc_id, a->sent_id) < std::tie(b->doc_id, b->sent_id);
  });

  std::vector<ResultRow> rows;
  std::vector<ScoreRequest> requests;
  for (std::size_t begin = 0; begin < order.size();) {
    // One document at a time, so rows come out (doc_id, qid, sent_id).
    std::size_t end = begin;
    while (end < order.size() && order[end]->doc_id == order[begin]->doc_id) ++end;
    for (int qid : qids) {
      auto q = text_of.find(qid);
      if (q == text_of.end()) throw UnknownQuestionId("no question with qid " + std::to_string(qid));
      for (std::size_t i = begin; i < end; ++i) {
        const Sentence& s = *order[i];
        rows.push_back({s.doc_id, qid, s.sent_id, s.text, 0, false});
        requests.push_back({qid, *q->second, s.text});
      }
    }
    begin = end;
  }

  const double threshold = scorer.threshold();
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t begin = 0; begin < requests.size(); begin += chunk) {
    const std::size_t n = std::min(chunk, requests.size() - begin);
    const auto scores = scorer.score(std::span<const ScoreRequest>(requests).subspan(begin, n));
    if (scores.size() != n) throw ProtocolError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                                                std::to_string(n) + " requests");
    for (std::size_t i = 0; i < n; ++i) {
      const double s = scores[i];
      if (!(s >= 0 && s <= 1)) throw ProtocolError("score out of [0, 1]: " + std::to_string(s));
      rows[begin + i].score = s;
      rows[begin + i].is_answer = s >= threshold;
    }
  }
  return rows;
}

std::string make_doc_id(std::size_t index, std::string_view filename) {
  std::string_view base = filename;
  if (auto slash = base.find_last_of("/\\"); slash != std::string_view::npos) base.remove_prefix(slash + 1);
  if (auto dot = base.rfind('.'); dot != std::string_view::npos && dot > 0) base = base.substr(0, dot);
  std::string stem;
  for (char c : base) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '_' || c == '.';
    stem += keep ? c : '_';
  }
  while (!stem.empty() && stem.front() == '.') stem.erase(stem.begin());
  if (stem.size() > 64) stem.resize(64);
  if (stem.empty()) stem = "doc";
  char prefix[32];
  std::snprintf(prefix, sizeof prefix, "%03zu_", index);
  return prefix + stem;
}

std::string random_batch_id() {
  static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::random_device rd;
  std::string id;
  while (id.size() < 24) {
    std::uint32_t word = rd();
    // 64 symbols: 6 bits each, 5 symbols per 32-bit draw.
    for (int i = 0; i < 5 && id.size() < 24; ++i, word >>= 6) id += alphabet[word & 63];
  }
  return id;
}

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw ConfigError("service.port must be in [0, 65535]");
  if (workers == 0 || workers > 64) throw ConfigError("service.workers must be in [1, 64]");
  if (max_upload_bytes == 0) throw ConfigError("service.max_upload_bytes must be positive");
  if (store_root.empty()) throw ConfigError("service.store_root must be set");
  if (segmenter.min_len > segmenter.max_len) throw ConfigError("segmenter.min_len exceeds segmenter.max_len");
  if (!scorer_cmd && (embeddings_path.empty() || classifier_path.empty())) {
    throw ConfigError("service needs embeddings and classifier paths, or a scorer command");
  }
}

namespace {

template <typename T>
T parse_env_number(const char* name, const char* value) {
  T out{};
  const std::string_view v(value);
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(name) + ": not a valid number: '" + value + "'");
  }
  return out;
}

}  // namespace

void apply_env_overrides(ServiceConfig& config, const std::function<const char*(const char*)>& getenv) {
  if (const char* v = getenv("DQA_HOST")) config.host = v;
  if (const char* v = getenv("DQA_PORT")) config.port = parse_env_number<int>("DQA_PORT", v);
  if (const char* v = getenv("DQA_STORE_ROOT")) config.store_root = v;
  if (const char* v = getenv("DQA_EMBEDDINGS")) config.embeddings_path = v;
  if (const char* v = getenv("DQA_CLASSIFIER")) config.classifier_path = v;
  if (const char* v = getenv("DQA_SCORER_CMD")) config.scorer_cmd = v;
  if (const char* v = getenv("DQA_WORKERS")) config.workers = parse_env_number<unsigned>("DQA_WORKERS", v);
  if (const char* v = getenv("DQA_MAX_UPLOAD")) {
    config.max_upload_bytes = parse_env_number<std::size_t>("DQA_MAX_UPLOAD", v);
  }
}

namespace {

// Owns the model pair a ClassifierScorer refers to.
class LoadedClassifierScorer : public Scorer {
 public:
  LoadedClassifierScorer(EmbeddingModel model, PairClassifier clf)
      : model_(std::move(model)), clf_(std::move(clf)), inner_(clf_, model_) {}
  std::vector<double> score(std::span<const ScoreRequest> batch) override { return inner_.score(batch); }
  double threshold() const override { return inner_.threshold(); }

 private:
  EmbeddingModel model_;
  PairClassifier clf_;
  ClassifierScorer inner_;
};

}  // namespace

std::unique_ptr<Scorer> make_scorer(const ServiceConfig& config) {
  if (config.scorer_cmd) return std::make_unique<ExternalScorer>(ExternalScorerConfig::shell(*config.scorer_cmd));
  for (const auto& path : {config.embeddings_path, config.classifier_path}) {
    std::error_code ec;
    if (path.empty() || !std::filesystem::is_regular_file(path, ec)) {
      throw ConfigError("model file not found: '" + path.string() + "'");
    }
  }
  EmbeddingModel model;
  PairClassifier clf;
  try {
    model = load_model(config.embeddings_path);
    clf = load_classifier(config.classifier_path);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("cannot load model: " + e.kind() + ": " + e.what());
  }
  check_compatible(clf, model);
  return std::make_unique<LoadedClassifierScorer>(std::move(model), std::move(clf));
}

}  // namespace dqa
