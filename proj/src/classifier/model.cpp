#include <algorithm>
#include <cmath>
#include <map>

#include "dqa/binary_io.hpp"
#include "dqa/classifier.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "dqa/rng.hpp"

namespace dqa {

void ClassifierConfig::validate() const {
  if (!seed) throw ConfigError("classifier config: seed is required");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("classifier config: learning_rate must be positive");
  if (epochs == 0) throw ConfigError("classifier config: epochs must be positive");
  if (!(l2 >= 0) || !std::isfinite(l2)) throw ConfigError("classifier config: l2 must be non-negative");
  if (class_weight_pos && (!(*class_weight_pos > 0) || !std::isfinite(*class_weight_pos))) {
    throw ConfigError("classifier config: class_weight_pos must be positive");
  }
}

std::vector<double> featurize_vectors(std::span<const double> q, std::span<const double> s) {
  if (q.size() != s.size()) throw DimensionMismatch("featurize: question and sentence vectors differ in length");
  const std::size_t d = q.size();
  std::vector<double> f(4 * d + 1);
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = q[i];
    f[d + i] = s[i];
    f[2 * d + i] = std::abs(q[i] - s[i]);
    f[3 * d + i] = q[i] * s[i];
  }
  f[4 * d] = cosine(q, s);
  return f;
}

std::vector<double> featurize(const EmbeddingModel& model, std::string_view question_text, std::string_view sentence_text) {
  return featurize_vectors(embed_sentence(model, question_text), embed_sentence(model, sentence_text));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Features of every pair; question vectors are cached by text.
std::vector<std::vector<double>> featurize_all(const EmbeddingModel& model, std::span<const TextPair> pairs, Exec exec) {
  std::map<std::string_view, std::vector<double>> questions;
  for (const auto& p : pairs) {
    if (!questions.count(p.question)) questions.emplace(p.question, embed_sentence(model, p.question));
  }
  std::vector<std::vector<double>> out(pairs.size());
  const auto n = static_cast<std::int64_t>(pairs.size());
  auto one = [&](std::int64_t i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = featurize_vectors(questions.at(p.question), embed_sentence(model, p.sentence));
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) one(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) one(i);
  }
  return out;
}

}  // namespace

double sample_loss_and_grad(std::span<const double> weights, double bias, std::span<const double> x, bool positive,
                            double sample_weight, std::span<double> g_w, double& g_b) {
  const double z = dot(weights, x) + bias;
  const double loss = sample_weight * (positive ? softplus(-z) : softplus(z));
  const double c = sample_weight * (sigmoid(z) - (positive ? 1.0 : 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) g_w[i] += c * x[i];
  g_b += c;
  return loss;
}

double classifier_objective(std::span<const double> weights, double bias, std::span<const std::vector<double>> xs,
                            std::span<const char> positive, double class_weight_pos, double l2, std::span<double> g_w,
                            double& g_b) {
  std::fill(g_w.begin(), g_w.end(), 0.0);
  g_b = 0;
  double loss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != weights.size()) throw DimensionMismatch("classifier objective: feature length mismatch");
    loss += sample_loss_and_grad(weights, bias, xs[i], positive[i] != 0, positive[i] ? class_weight_pos : 1.0, g_w, g_b);
  }
  for (std::size_t j = 0; j < weights.size(); ++j) {
    loss += 0.5 * l2 * weights[j] * weights[j];
    g_w[j] += l2 * weights[j];
  }
  return loss;
}

PairClassifier train_classifier(std::span<const LabeledText> train, const EmbeddingModel& model,
                                const ClassifierConfig& config, Exec exec) {
  config.validate();
  std::size_t n_pos = 0;
  for (const auto& t : train) n_pos += t.positive;
  const std::size_t n_neg = train.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw SingleClassData("training pairs need both labels (" + std::to_string(n_pos) + " positive, " +
                          std::to_string(n_neg) + " negative)");
  }

  std::vector<TextPair> texts;
  texts.reserve(train.size());
  for (const auto& t : train) texts.push_back({t.question, t.sentence});
  const auto xs = featurize_all(model, texts, exec);

  PairClassifier clf;
  clf.embedding_dim = model.dim;
  clf.embedding_fingerprint = model_fingerprint(model);
  clf.feature_dim = static_cast<std::uint32_t>(feature_dim_for(model.dim));
  clf.weights.assign(clf.feature_dim, 0.0);
  clf.class_weight_pos = config.class_weight_pos.value_or(static_cast<double>(n_neg) / static_cast<double>(n_pos));
  clf.config = config;
  clf.config.class_weight_pos = clf.class_weight_pos;

  const std::size_t N = train.size();
  const double l2_per_sample = config.l2 / static_cast<double>(N);
  const double total_steps = static_cast<double>(N) * config.epochs;
  std::vector<std::size_t> order(N);
  for (std::size_t i = 0; i < N; ++i) order[i] = i;
  std::vector<double> g_w(clf.feature_dim);
  Rng rng(*config.seed);
  std::uint64_t step = 0;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t i : order) {
      const double lr = config.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(step++) / total_steps);
      std::fill(g_w.begin(), g_w.end(), 0.0);
      double g_b = 0;
      const bool pos = train[i].positive;
      epoch_loss += sample_loss_and_grad(clf.weights, clf.bias, xs[i], pos, pos ? clf.class_weight_pos : 1.0, g_w, g_b);
      for (std::size_t j = 0; j < clf.feature_dim; ++j) clf.weights[j] -= lr * (g_w[j] + l2_per_sample * clf.weights[j]);
      clf.bias -= lr * g_b;
    }
    if (!std::isfinite(epoch_loss) || !std::isfinite(clf.bias) ||
        !std::all_of(clf.weights.begin(), clf.weights.end(), [](double w) { return std::isfinite(w); })) {
      throw NonFiniteLoss("classifier loss became non-finite in epoch " + std::to_string(epoch + 1));
    }
  }
  return clf;
}

PairClassifier train_classifier(std::span<const QAPair> train, std::span<const TcfdQuestion> questions,
                                const EmbeddingModel& model, const ClassifierConfig& config, Exec exec) {
  std::map<int, std::string> qtext;
  for (const auto& q : questions) qtext[q.qid] = q.text;
  std::vector<LabeledText> rows;
  rows.reserve(train.size());
  for (const auto& p : train) {
    auto it = qtext.find(p.qid);
    if (it == qtext.end()) throw UnknownQuestionId("no question text for qid " + std::to_string(p.qid));
    rows.push_back({it->second, p.sentence_text, p.label == Label::positive});
  }
  return train_classifier(rows, model, config, exec);
}

double predict_features(const PairClassifier& clf, std::span<const double> features) {
  if (features.size() != clf.weights.size()) {
    throw DimensionMismatch("classifier expects " + std::to_string(clf.weights.size()) + " features, got " +
                            std::to_string(features.size()));
  }
  return sigmoid(dot(clf.weights, features) + clf.bias);
}

double predict(const PairClassifier& clf, const EmbeddingModel& model, std::string_view question_text,
               std::string_view sentence_text) {
  if (feature_dim_for(model.dim) != clf.weights.size()) {
    throw DimensionMismatch("embedding dim " + std::to_string(model.dim) + " does not match classifier feature_dim " +
                            std::to_string(clf.weights.size()));
  }
  return predict_features(clf, featurize(model, question_text, sentence_text));
}

std::vector<double> score_batch(const PairClassifier& clf, const EmbeddingModel& model, std::span<const TextPair> pairs,
                                Exec exec) {
  if (feature_dim_for(model.dim) != clf.weights.size()) {
    throw DimensionMismatch("embedding dim " + std::to_string(model.dim) + " does not match classifier feature_dim " +
                            std::to_string(clf.weights.size()));
  }
  std::map<std::string_view, std::vector<double>> questions;
  for (const auto& p : pairs) {
    if (!questions.count(p.question)) questions.emplace(p.question, embed_sentence(model, p.question));
  }
  std::vector<double> out(pairs.size());
  const auto n = static_cast<std::int64_t>(pairs.size());
  auto one = [&](std::int64_t i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] =
        predict_features(clf, featurize_vectors(questions.at(p.question), embed_sentence(model, p.sentence)));
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) one(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) one(i);
  }
  return out;
}

double best_threshold(std::span<const double> scores, std::span<const char> positive) {
  if (scores.size() != positive.size()) throw LengthMismatch("best_threshold: scores and labels differ in length");
  std::size_t total_pos = 0;
  for (char p : positive) total_pos += p != 0;
  if (total_pos == 0) throw NoPositives("threshold calibration needs at least one positive dev pair");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Distinct values ascending with the positives/negatives at or above each.
  std::vector<double> values;
  std::vector<std::size_t> pos_at, neg_at;
  for (std::size_t i : order) {
    if (values.empty() || scores[i] != values.back()) {
      values.push_back(scores[i]);
      pos_at.push_back(0);
      neg_at.push_back(0);
    }
    (positive[i] ? pos_at.back() : neg_at.back())++;
  }
  const std::size_t m = values.size();
  std::vector<std::size_t> pos_ge(m + 1, 0), neg_ge(m + 1, 0);
  for (std::size_t k = m; k-- > 0;) {
    pos_ge[k] = pos_ge[k + 1] + pos_at[k];
    neg_ge[k] = neg_ge[k + 1] + neg_at[k];
  }
  double best_f1 = -1, best_t = 0.5;
  for (std::size_t k = 0; k <= m; ++k) {
    const double t = k == 0 ? values[0] / 2 : k == m ? (values[m - 1] + 1) / 2 : (values[k - 1] + values[k]) / 2;
    const double tp = static_cast<double>(pos_ge[k]);
    const double fp = static_cast<double>(neg_ge[k]);
    const double fn = static_cast<double>(total_pos) - tp;
    const double f1 = 2 * tp / (2 * tp + fp + fn);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return std::clamp(best_t, 1e-12, 1 - 1e-12);
}

PairClassifier calibrate_threshold(PairClassifier clf, std::span<const QAPair> dev,
                                   std::span<const TcfdQuestion> questions, const EmbeddingModel& model) {
  std::map<int, std::string_view> qtext;
  for (const auto& q : questions) qtext[q.qid] = q.text;
  std::vector<TextPair> texts;
  std::vector<char> labels;
  for (const auto& p : dev) {
    auto it = qtext.find(p.qid);
    if (it == qtext.end()) throw UnknownQuestionId("no question text for qid " + std::to_string(p.qid));
    texts.push_back({it->second, p.sentence_text});
    labels.push_back(p.label == Label::positive);
  }
  if (std::find(labels.begin(), labels.end(), 1) == labels.end()) {
    throw NoPositives("threshold calibration needs at least one positive dev pair");
  }
  const auto scores = score_batch(clf, model, texts);
  clf.threshold = best_threshold(scores, labels);
  return clf;
}

void check_compatible(const PairClassifier& clf, const EmbeddingModel& model) {
  if (clf.embedding_dim != model.dim || feature_dim_for(model.dim) != clf.weights.size()) {
    throw DimensionMismatch("classifier was trained on " + std::to_string(clf.embedding_dim) +
                            "-dim embeddings, model has dim " + std::to_string(model.dim));
  }
  if (clf.embedding_fingerprint != model_fingerprint(model)) {
    throw ConfigError("classifier was trained on a different embedding model (fingerprint mismatch)");
  }
}

namespace {

constexpr std::string_view kMagic = "PCLS1";

}  // namespace

std::string serialize_classifier(const PairClassifier& clf) {
  if (clf.weights.size() != clf.feature_dim) throw DimensionMismatch("PCLS1: weights do not match feature_dim");
  BinaryWriter w;
  w.bytes(kMagic);
  w.put<std::uint32_t>(clf.feature_dim);
  w.put<std::uint32_t>(clf.embedding_dim);
  w.put<std::uint64_t>(clf.embedding_fingerprint);
  for (double x : clf.weights) w.put<double>(x);
  w.put<double>(clf.bias);
  w.put<double>(clf.threshold);
  w.put<double>(clf.class_weight_pos);
  w.put<double>(clf.config.learning_rate);
  w.put<std::uint32_t>(clf.config.epochs);
  w.put<double>(clf.config.l2);
  w.put<std::uint8_t>(clf.config.class_weight_pos ? 1 : 0);
  w.put<double>(clf.config.class_weight_pos.value_or(0));
  w.put<std::uint8_t>(clf.config.seed ? 1 : 0);
  w.put<std::uint64_t>(clf.config.seed.value_or(0));
  return w.take();
}

PairClassifier deserialize_classifier(std::string_view bytes) {
  BinaryReader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) throw FormatError("not a PCLS1 classifier file");
  PairClassifier clf;
  clf.feature_dim = r.get<std::uint32_t>();
  clf.embedding_dim = r.get<std::uint32_t>();
  clf.embedding_fingerprint = r.get<std::uint64_t>();
  if (clf.feature_dim != feature_dim_for(clf.embedding_dim)) throw FormatError("PCLS1: feature_dim inconsistent with embedding dim");
  if (clf.feature_dim > r.remaining() / 8) throw FormatError("PCLS1: weights larger than file");
  clf.weights.resize(clf.feature_dim);
  for (double& x : clf.weights) x = r.get<double>();
  clf.bias = r.get<double>();
  clf.threshold = r.get<double>();
  clf.class_weight_pos = r.get<double>();
  clf.config.learning_rate = r.get<double>();
  clf.config.epochs = r.get<std::uint32_t>();
  clf.config.l2 = r.get<double>();
  const bool has_cw = r.get<std::uint8_t>() != 0;
  const double cw = r.get<double>();
  if (has_cw) clf.config.class_weight_pos = cw;
  const bool has_seed = r.get<std::uint8_t>() != 0;
  const auto seed = r.get<std::uint64_t>();
  if (has_seed) clf.config.seed = seed;
  if (!r.at_end()) throw FormatError("PCLS1: trailing bytes");
  if (!(clf.threshold > 0 && clf.threshold < 1)) throw FormatError("PCLS1: threshold outside (0, 1)");
  if (!std::isfinite(clf.bias) || !std::all_of(clf.weights.begin(), clf.weights.end(), [](double x) { return std::isfinite(x); })) {
    throw FormatError("PCLS1: non-finite weights");
  }
  return clf;
}

void save_classifier(const PairClassifier& clf, const std::filesystem::path& path) {
  write_file(path, serialize_classifier(clf));
}

PairClassifier load_classifier(const std::filesystem::path& path) { return deserialize_classifier(read_file(path)); }

}  // namespace dqa
