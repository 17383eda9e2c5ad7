#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dqa/dataset.hpp"
#include "dqa/embeddings.hpp"
#include "dqa/exec.hpp"

namespace dqa {

inline std::size_t feature_dim_for(std::uint32_t embedding_dim) { return 4 * std::size_t{embedding_dim} + 1; }

// [q, s, |q - s|, q * s, cosine(q, s)].
std::vector<double> featurize_vectors(std::span<const double> q, std::span<const double> s);
std::vector<double> featurize(const EmbeddingModel& model, std::string_view question_text, std::string_view sentence_text);

struct ClassifierConfig {
  double learning_rate = 0.1;  // linearly decayed over all steps
  std::uint32_t epochs = 20;
  double l2 = 1e-4;
  std::optional<double> class_weight_pos;  // default: #neg / #pos of the training pairs
  std::optional<std::uint64_t> seed;

  // Throws ConfigError.
  void validate() const;
};

struct PairClassifier {
  std::uint32_t feature_dim = 0;
  std::vector<double> weights;
  double bias = 0;
  double threshold = 0.5;
  double class_weight_pos = 1;
  ClassifierConfig config;
  std::uint32_t embedding_dim = 0;
  std::uint64_t embedding_fingerprint = 0;  // model_fingerprint of the training embeddings
};

double sigmoid(double x);

// Weighted logistic loss of one sample, w_i [-y log p - (1 - y) log(1 - p)],
// accumulating its gradient into g_w / g_b.
double sample_loss_and_grad(std::span<const double> weights, double bias, std::span<const double> x, bool positive,
                            double sample_weight, std::span<double> g_w, double& g_b);

// Sum of sample losses plus (l2 / 2) |w|^2, with the full gradient
// (overwritten).
double classifier_objective(std::span<const double> weights, double bias, std::span<const std::vector<double>> xs,
                            std::span<const char> positive, double class_weight_pos, double l2, std::span<double> g_w,
                            double& g_b);

struct LabeledText {
  std::string question;
  std::string sentence;
  bool positive = false;
};

// Seeded-shuffle SGD on the weighted objective. Throws SingleClassData,
// NonFiniteLoss, ConfigError.
PairClassifier train_classifier(std::span<const LabeledText> train, const EmbeddingModel& model,
                                const ClassifierConfig& config, Exec exec = Exec::parallel);
// Pairs carry qids; question texts come from `questions`.
PairClassifier train_classifier(std::span<const QAPair> train, std::span<const TcfdQuestion> questions,
                                const EmbeddingModel& model, const ClassifierConfig& config,
                                Exec exec = Exec::parallel);

// sigma(w.x + b). Throws DimensionMismatch.
double predict_features(const PairClassifier& clf, std::span<const double> features);
double predict(const PairClassifier& clf, const EmbeddingModel& model, std::string_view question_text,
               std::string_view sentence_text);
inline bool is_answer(const PairClassifier& clf, double score) { return score >= clf.threshold; }

struct TextPair {
  std::string_view question;
  std::string_view sentence;
};

// Batch scoring; question vectors are computed once per distinct text. Both
// policies return bit-identical scores.
std::vector<double> score_batch(const PairClassifier& clf, const EmbeddingModel& model, std::span<const TextPair> pairs,
                                Exec exec = Exec::parallel);

// F1-maximizing cut over {min/2, midpoints of consecutive distinct scores,
// (max+1)/2}; ties go to the lower threshold. Throws NoPositives.
double best_threshold(std::span<const double> scores, std::span<const char> positive);
PairClassifier calibrate_threshold(PairClassifier clf, std::span<const QAPair> dev,
                                   std::span<const TcfdQuestion> questions, const EmbeddingModel& model);

// Throws DimensionMismatch when dims differ, ConfigError when the fingerprint
// does not match.
void check_compatible(const PairClassifier& clf, const EmbeddingModel& model);

std::string serialize_classifier(const PairClassifier& clf);
// Throws FormatError.
PairClassifier deserialize_classifier(std::string_view bytes);
void save_classifier(const PairClassifier& clf, const std::filesystem::path& path);
PairClassifier load_classifier(const std::filesystem::path& path);

}  // namespace dqa
