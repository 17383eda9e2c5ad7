#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dqa/exec.hpp"

namespace dqa {

// Lowercases, then splits on anything that is not a letter or digit. A hyphen
// between two alphanumerics and a period between two digits stay inside the
// token: "Scope-3 fell 1.5%." -> {"scope-3", "fell", "1.5"}.
std::vector<std::string> tokenize(std::string_view text);

struct Vocab {
  std::vector<std::string> tokens;           // id -> token
  std::vector<std::uint64_t> counts;         // id -> corpus frequency
  std::unordered_map<std::string, std::uint32_t> token_to_id;
  std::uint64_t min_count = 1;
  std::uint64_t total_tokens = 0;            // all tokens seen, kept or not

  std::size_t size() const { return tokens.size(); }
  std::optional<std::uint32_t> id(std::string_view token) const;
};

// Ids by descending count, ties lexicographic. Throws EmptyVocab.
Vocab build_vocab(std::span<const std::string> tokens, std::uint64_t min_count);
Vocab build_vocab(std::span<const std::vector<std::string>> corpus, std::uint64_t min_count);

struct TrainConfig {
  std::uint32_t dim = 100;
  std::uint32_t window = 5;
  std::uint32_t negatives = 5;
  double learning_rate = 0.025;
  std::uint32_t epochs = 5;
  double subsample_t = 1e-4;
  std::uint64_t min_count = 5;
  std::optional<std::uint64_t> seed;
  // 1 selects the deterministic serial trainer; more selects lock-free
  // concurrent updates, which are not bit-reproducible.
  std::uint32_t threads = 1;

  // Throws ConfigError.
  void validate() const;
};

struct EmbeddingModel {
  std::uint32_t dim = 0;
  Vocab vocab;
  std::vector<float> input_vectors;   // V x dim, row-major; center vectors v_c
  std::vector<float> output_vectors;  // V x dim, row-major; context vectors u_o
  TrainConfig train_config;

  std::span<const float> input_row(std::uint32_t id) const { return {input_vectors.data() + std::size_t{id} * dim, dim}; }
  std::span<const float> output_row(std::uint32_t id) const { return {output_vectors.data() + std::size_t{id} * dim, dim}; }
};

struct TrainStats {
  std::vector<double> epoch_loss;  // mean pair loss per epoch
  std::uint64_t updates = 0;       // (center, context) pairs trained
};

// Loss for one (center, context) pair with k negatives,
//   L = -log s(u_o . v_c) - sum_n log s(-u_n . v_c),
// and its gradient. `negs` holds k rows of `dim` values back to back; the
// gradient spans mirror the parameter spans and are overwritten.
template <typename T>
T sgns_loss_and_grad(std::span<const T> v_c, std::span<const T> u_o, std::span<const T> negs, std::span<T> g_v_c,
                     std::span<T> g_u_o, std::span<T> g_negs);

// Sequences are token lists (see tokenize); build_vocab lowercases them.
// Throws ConfigError, EmptyVocab, NonFiniteLoss.
EmbeddingModel train_sgns(std::span<const std::vector<std::string>> corpus, const TrainConfig& config,
                          TrainStats* stats = nullptr);

// Mean of input vectors over in-vocab tokens of tokenize(text); zeros when none.
std::vector<double> embed_sentence(const EmbeddingModel& model, std::string_view text);

// 0 when either norm is 0. Throws DimensionMismatch.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const float> b);

// Top-k over input vectors, query excluded, ties by id. Throws OutOfVocab.
// Both policies return identical results.
std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingModel& model, std::string_view token,
                                                              std::size_t k, Exec exec = Exec::parallel);

// Hash of dim, vocabulary and input matrix; used to pair classifiers with the
// embeddings they were trained on.
std::uint64_t model_fingerprint(const EmbeddingModel& model);

std::string serialize_model(const EmbeddingModel& model);
// Throws FormatError.
EmbeddingModel deserialize_model(std::string_view bytes);
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);

}  // namespace dqa
