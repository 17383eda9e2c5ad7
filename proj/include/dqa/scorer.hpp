#pragma once

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dqa/classifier.hpp"

namespace dqa {

struct ScoreRequest {
  int qid = 0;
  std::string question;
  std::string sentence;
};

// Source of answer scores for the inference pipeline.
class Scorer {
 public:
  virtual ~Scorer() = default;
  // One score in [0, 1] per request, in order.
  virtual std::vector<double> score(std::span<const ScoreRequest> batch) = 0;
  virtual double threshold() const = 0;
};

class ClassifierScorer : public Scorer {
 public:
  // Both references must outlive the scorer.
  ClassifierScorer(const PairClassifier& clf, const EmbeddingModel& model) : clf_(clf), model_(model) {}
  std::vector<double> score(std::span<const ScoreRequest> batch) override;
  double threshold() const override { return clf_.threshold; }

 private:
  const PairClassifier& clf_;
  const EmbeddingModel& model_;
};

class ConstantScorer : public Scorer {
 public:
  explicit ConstantScorer(double value = 0.5, double threshold = 0.5) : value_(value), threshold_(threshold) {}
  std::vector<double> score(std::span<const ScoreRequest> batch) override {
    return std::vector<double>(batch.size(), value_);
  }
  double threshold() const override { return threshold_; }

 private:
  double value_;
  double threshold_;
};

struct ExternalScorerConfig {
  std::vector<std::string> argv;  // argv[0] is looked up on PATH
  std::chrono::milliseconds timeout{60000};
  double threshold = 0.5;

  // argv for `/bin/sh -c command`.
  static ExternalScorerConfig shell(const std::string& command);
};

// Child process per batch. Request lines `qid<TAB>question<TAB>sentence` on
// stdin, one decimal score per line on stdout. Throws ScorerUnavailable
// (cannot start, exit status 127, timeout) and ProtocolError (line count,
// non-numeric or out-of-range score, non-zero exit).
std::vector<double> external_scorer_roundtrip(const ExternalScorerConfig& config, std::span<const ScoreRequest> batch);

class ExternalScorer : public Scorer {
 public:
  explicit ExternalScorer(ExternalScorerConfig config) : config_(std::move(config)) {}
  std::vector<double> score(std::span<const ScoreRequest> batch) override {
    return external_scorer_roundtrip(config_, batch);
  }
  double threshold() const override { return config_.threshold; }

 private:
  ExternalScorerConfig config_;
};

}  // namespace dqa
