#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "dqa/classifier.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "dqa/gradcheck.hpp"
#include "dqa/rng.hpp"
#include "dqa/scorer.hpp"
#include "support/separable_fixture.hpp"

namespace fs = std::filesystem;
using dqa::testing::separable_model;
using dqa::testing::separable_pairs;

namespace {

double f1_at(const std::vector<double>& scores, const std::vector<char>& labels, double t) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= t;
    tp += pred && labels[i];
    fp += pred && !labels[i];
    fn += !pred && labels[i];
  }
  return tp == 0 ? 0 : 2 * tp / (2 * tp + fp + fn);
}

dqa::ClassifierConfig seeded(std::uint64_t seed = 1) {
  dqa::ClassifierConfig c;
  c.seed = seed;
  return c;
}

struct ScriptDir {
  fs::path path = fs::temp_directory_path() / ("dqa_scorer_" + std::to_string(::getpid()));
  ScriptDir() { fs::create_directories(path); }
  ~ScriptDir() { fs::remove_all(path); }
  std::string script(const std::string& name, const std::string& body) {
    const fs::path p = path / name;
    dqa::write_file(p, "#!/bin/sh\n" + body + "\n");
    fs::permissions(p, fs::perms::owner_all);
    return p.string();
  }
};

std::vector<dqa::ScoreRequest> requests(std::size_t n) {
  std::vector<dqa::ScoreRequest> r;
  for (std::size_t i = 0; i < n; ++i) r.push_back({1, "Question?", "Sentence\twith tab " + std::to_string(i)});
  return r;
}

}  // namespace

TEST_CASE("featurize examples") {
  auto f = dqa::featurize_vectors(std::vector<double>{1, 0}, std::vector<double>{0, 1});
  CHECK(f == std::vector<double>{1, 0, 0, 1, 1, 1, 0, 0, 0});

  auto m = separable_model();
  auto same = dqa::featurize(m, "good1 good2", "good1 good2");
  REQUIRE(same.size() == 9);
  CHECK(same[4] == 0);
  CHECK(same[5] == 0);
  CHECK(same[8] == doctest::Approx(1.0));

  auto oov = dqa::featurize(m, "zzz", "qqq");
  CHECK(oov == std::vector<double>(9, 0.0));
}

TEST_CASE("weighted logistic gradient matches finite differences") {
  dqa::Rng rng(12);
  const std::size_t F = dqa::feature_dim_for(3);
  std::vector<std::vector<double>> xs;
  std::vector<char> y;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(F);
    for (double& v : x) v = rng.uniform(-1, 1);
    xs.push_back(x);
    y.push_back(rng.below(3) == 0);
  }
  for (int draw = 0; draw < 10; ++draw) {
    std::vector<double> w(F);
    for (double& v : w) v = rng.uniform(-1, 1);
    double b = rng.uniform(-1, 1);
    const double cw = rng.uniform(1, 10), l2 = rng.uniform(0, 0.5);
    std::vector<double> g(F), scratch(F);
    double gb = 0, sb = 0;
    dqa::classifier_objective(w, b, xs, y, cw, l2, g, gb);

    const double h = 1e-6;
    std::vector<double> num(F + 1);
    for (std::size_t j = 0; j <= F; ++j) {
      double& p = j < F ? w[j] : b;
      const double orig = p;
      p = orig + h;
      const double up = dqa::classifier_objective(w, b, xs, y, cw, l2, scratch, sb);
      p = orig - h;
      const double down = dqa::classifier_objective(w, b, xs, y, cw, l2, scratch, sb);
      p = orig;
      num[j] = (up - down) / (2 * h);
    }
    double diff = 0, na = 0, nn = 0;
    for (std::size_t j = 0; j <= F; ++j) {
      const double a = j < F ? g[j] : gb;
      diff += (a - num[j]) * (a - num[j]);
      na += a * a;
      nn += num[j] * num[j];
    }
    const double rel = std::sqrt(diff) / (std::sqrt(na) + std::sqrt(nn));
    INFO("relative error " << rel);
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("separable fixture: explicit separator, then training reaches F1 1.0") {
  auto m = separable_model();
  auto pairs = separable_pairs();

  // Oracle: weight only on the cosine feature separates the fixture.
  dqa::PairClassifier sep;
  sep.feature_dim = 9;
  sep.weights.assign(9, 0.0);
  sep.weights[8] = 10;
  std::vector<double> sep_scores;
  std::vector<char> labels;
  for (const auto& p : pairs) {
    sep_scores.push_back(dqa::predict_features(sep, dqa::featurize(m, p.question, p.sentence)));
    labels.push_back(p.positive);
  }
  REQUIRE(f1_at(sep_scores, labels, 0.5) == 1.0);

  auto clf = dqa::train_classifier(pairs, m, seeded());
  CHECK(clf.threshold == 0.5);
  CHECK(clf.class_weight_pos == doctest::Approx(50.0 / 10.0));
  std::vector<double> scores;
  for (const auto& p : pairs) scores.push_back(dqa::predict(clf, m, p.question, p.sentence));
  CHECK(f1_at(scores, labels, clf.threshold) == 1.0);
  // A positive fixture sentence scores above one half under both weight vectors.
  CHECK(dqa::predict(sep, m, "question", "good1 good3") > 0.5);
  CHECK(dqa::predict(clf, m, "question", "good1 good3") > 0.5);

  std::vector<dqa::TextPair> texts;
  for (const auto& p : pairs) texts.push_back({p.question, p.sentence});
  auto serial = dqa::score_batch(clf, m, texts, dqa::Exec::serial);
  CHECK(dqa::score_batch(clf, m, texts, dqa::Exec::parallel) == serial);
  CHECK(serial == scores);

  CHECK(dqa::serialize_classifier(dqa::train_classifier(pairs, m, seeded())) == dqa::serialize_classifier(clf));
  CHECK_NOTHROW(dqa::check_compatible(clf, m));
}

TEST_CASE("train_classifier errors") {
  auto m = separable_model();
  auto pairs = separable_pairs();
  std::vector<dqa::LabeledText> neg_only;
  for (const auto& p : pairs) {
    if (!p.positive) neg_only.push_back(p);
  }
  CHECK_THROWS_AS(dqa::train_classifier(neg_only, m, seeded()), dqa::SingleClassData);
  CHECK_THROWS_AS(dqa::train_classifier(pairs, m, dqa::ClassifierConfig{}), dqa::ConfigError);
  auto hot = seeded();
  hot.learning_rate = 1e308;
  CHECK_THROWS_AS(dqa::train_classifier(pairs, m, hot), dqa::NonFiniteLoss);
}

TEST_CASE("predict") {
  auto m = separable_model();
  dqa::PairClassifier zero;
  zero.feature_dim = 9;
  zero.weights.assign(9, 0.0);
  CHECK(dqa::predict(zero, m, "question", "bad1") == 0.5);
  CHECK(dqa::predict(zero, m, "anything", "") == 0.5);

  dqa::EmbeddingModel wide = m;
  wide.dim = 3;
  wide.input_vectors.resize(wide.vocab.size() * 3);
  CHECK_THROWS_AS(dqa::predict(zero, wide, "question", "good1"), dqa::DimensionMismatch);
  CHECK_THROWS_AS(dqa::predict_features(zero, std::vector<double>(5)), dqa::DimensionMismatch);
}

TEST_CASE("score is strictly monotone in the logit") {
  dqa::Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    dqa::PairClassifier clf;
    clf.feature_dim = 5;
    clf.weights.resize(5);
    std::vector<double> x(5);
    for (double& w : clf.weights) w = rng.uniform(-2, 2);
    for (double& v : x) v = rng.uniform(-2, 2);
    clf.bias = rng.uniform(-10, 10);
    const double s1 = dqa::predict_features(clf, x);
    clf.bias += rng.uniform(0.01, 5);
    CHECK(dqa::predict_features(clf, x) > s1);
  }
}

TEST_CASE("best_threshold examples") {
  CHECK(dqa::best_threshold(std::vector<double>{0.9, 0.1}, std::vector<char>{1, 0}) == doctest::Approx(0.5));
  const double t = dqa::best_threshold(std::vector<double>{0.4, 0.6}, std::vector<char>{1, 0});
  CHECK(t < 0.4);
  CHECK(f1_at({0.4, 0.6}, {1, 0}, t) == doctest::Approx(2.0 / 3));
  CHECK_THROWS_AS(dqa::best_threshold(std::vector<double>{0.3, 0.7}, std::vector<char>{0, 0}), dqa::NoPositives);
}

TEST_CASE("best_threshold agrees with a brute-force sweep") {
  dqa::Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<double> scores(n);
    std::vector<char> labels(n);
    // Coarse grid so ties are common.
    for (std::size_t i = 0; i < n; ++i) scores[i] = static_cast<double>(1 + rng.below(19)) / 20;
    for (std::size_t i = 0; i < n; ++i) labels[i] = rng.below(3) == 0;
    labels[rng.below(n)] = 1;

    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> candidates{sorted.front() / 2};
    for (std::size_t i = 1; i < sorted.size(); ++i) candidates.push_back((sorted[i - 1] + sorted[i]) / 2);
    candidates.push_back((sorted.back() + 1) / 2);
    double best_f1 = -1, best_t = 0;
    for (double c : candidates) {
      const double f = f1_at(scores, labels, c);
      if (f > best_f1 + 1e-15) {
        best_f1 = f;
        best_t = c;
      }
    }
    const double t = dqa::best_threshold(scores, labels);
    CHECK(t == doctest::Approx(best_t));
    CHECK(f1_at(scores, labels, t) == doctest::Approx(best_f1));
    CHECK(t >= sorted.front() / 2);
    CHECK(t <= (sorted.back() + 1) / 2);
    CHECK(t > 0);
    CHECK(t < 1);
  }
}

TEST_CASE("calibrate_threshold") {
  auto m = separable_model();
  auto clf = dqa::train_classifier(separable_pairs(), m, seeded());
  std::vector<dqa::TcfdQuestion> qs{{1, "question"}};
  std::vector<dqa::QAPair> dev{{1, "d", 0, "good1 good2", dqa::Label::positive, "c", {}},
                               {1, "d", 1, "bad1 bad2", dqa::Label::negative, "c", {}}};
  auto cal = dqa::calibrate_threshold(clf, dev, qs, m);
  const double sp = dqa::predict(clf, m, "question", "good1 good2");
  const double sn = dqa::predict(clf, m, "question", "bad1 bad2");
  CHECK(cal.threshold == doctest::Approx((sp + sn) / 2));
  dev[0].label = dqa::Label::negative;
  CHECK_THROWS_AS(dqa::calibrate_threshold(clf, dev, qs, m), dqa::NoPositives);
}

TEST_CASE("classifier file round-trip") {
  auto m = separable_model();
  auto clf = dqa::train_classifier(separable_pairs(), m, seeded(3));
  clf.threshold = 0.37;
  const auto path = fs::temp_directory_path() / ("dqa_clf_" + std::to_string(::getpid()) + ".pcls");
  dqa::save_classifier(clf, path);
  auto back = dqa::load_classifier(path);
  fs::remove(path);
  CHECK(back.weights == clf.weights);
  CHECK(back.bias == clf.bias);
  CHECK(back.threshold == clf.threshold);
  CHECK(back.class_weight_pos == clf.class_weight_pos);
  CHECK(back.embedding_fingerprint == clf.embedding_fingerprint);
  CHECK(back.config.seed == clf.config.seed);
  CHECK(dqa::serialize_classifier(back) == dqa::serialize_classifier(clf));
  const std::string bytes = dqa::serialize_classifier(clf);
  CHECK(bytes.substr(0, 5) == "PCLS1");
  CHECK_THROWS_AS(dqa::deserialize_classifier(bytes.substr(0, 40)), dqa::FormatError);
  CHECK_THROWS_AS(dqa::deserialize_classifier("SGNS1xxxx"), dqa::FormatError);

  auto other = m;
  other.input_vectors[0] += 1;
  CHECK_THROWS_AS(dqa::check_compatible(clf, other), dqa::ConfigError);
}

TEST_CASE("external scorer protocol") {
  ScriptDir dir;
  SUBCASE("echo stub") {
    auto echo = dqa::ExternalScorerConfig{{dir.script("echo.sh", "while IFS= read -r line; do echo 0.5; done")}};
    auto scores = dqa::external_scorer_roundtrip(echo, requests(3));
    CHECK(scores == std::vector<double>{0.5, 0.5, 0.5});
    dqa::ExternalScorer scorer(echo);
    CHECK(scorer.score(requests(2000)).size() == 2000);
  }
  SUBCASE("request lines are escaped and ordered") {
    auto cfg = dqa::ExternalScorerConfig{
        {dir.script("fields.sh", "while IFS= read -r line; do printf '%s\\n' \"$line\" | awk -F'\\t' '{print (NF==3 ? 1 : 0)}'; done")}};
    CHECK(dqa::external_scorer_roundtrip(cfg, requests(3)) == std::vector<double>{1, 1, 1});
  }
  SUBCASE("reads everything before answering") {
    auto cfg = dqa::ExternalScorerConfig::shell("cat > /dev/null; printf '0.1\\n0.2\\n0.3\\n'");
    CHECK(dqa::external_scorer_roundtrip(cfg, requests(3)) == std::vector<double>{0.1, 0.2, 0.3});
  }
  SUBCASE("count mismatch") {
    auto cfg = dqa::ExternalScorerConfig::shell("cat > /dev/null; printf '0.1\\n0.2\\n'");
    CHECK_THROWS_AS(dqa::external_scorer_roundtrip(cfg, requests(3)), dqa::ProtocolError);
  }
  SUBCASE("non-numeric and out of range") {
    CHECK_THROWS_AS(dqa::external_scorer_roundtrip(dqa::ExternalScorerConfig::shell("cat >/dev/null; echo abc"), requests(1)),
                    dqa::ProtocolError);
    CHECK_THROWS_AS(dqa::external_scorer_roundtrip(dqa::ExternalScorerConfig::shell("cat >/dev/null; echo 1.5"), requests(1)),
                    dqa::ProtocolError);
  }
  SUBCASE("scorer exits without reading") {
    CHECK_THROWS_AS(dqa::external_scorer_roundtrip(dqa::ExternalScorerConfig::shell("exit 0"), requests(5000)),
                    dqa::ProtocolError);
  }
  SUBCASE("absent scorer") {
    CHECK_THROWS_AS(dqa::external_scorer_roundtrip(dqa::ExternalScorerConfig{{"/nonexistent/scorer"}}, requests(1)),
                    dqa::ScorerUnavailable);
    CHECK_THROWS_AS(
        dqa::external_scorer_roundtrip(dqa::ExternalScorerConfig::shell("dqa_no_such_scorer_cmd"), requests(1)),
        dqa::ScorerUnavailable);
  }
  SUBCASE("timeout") {
    auto cfg = dqa::ExternalScorerConfig::shell("sleep 5");
    cfg.timeout = std::chrono::milliseconds(200);
    CHECK_THROWS_AS(dqa::external_scorer_roundtrip(cfg, requests(1)), dqa::ScorerUnavailable);
  }
  SUBCASE("constant scorer") {
    dqa::ConstantScorer c;
    CHECK(c.score(requests(4)) == std::vector<double>(4, 0.5));
  }
}

TEST_CASE("gradient self-checks over 100 draws") {
  const auto sgns = dqa::check_sgns_gradient(100, 7);
  CHECK(sgns.draws == 100);
  CHECK(sgns.max_rel_error < 1e-4);
  const auto logistic = dqa::check_classifier_gradient(100, 7);
  CHECK(logistic.max_rel_error < 1e-5);
  MESSAGE("SGNS " << sgns.max_rel_error << ", logistic " << logistic.max_rel_error);
}
