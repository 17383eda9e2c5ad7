#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dqa/classifier.hpp"
#include "dqa/dataset.hpp"
#include "dqa/embeddings.hpp"
#include "dqa/evaluator.hpp"
#include "dqa/scorer.hpp"
#include "dqa/segmenter.hpp"
#include "dqa/service.hpp"

namespace dqa {

// Every module's settings in one place. Config file layout:
//   {"seed": N, "segmenter": {...}, "embeddings": {...}, "classifier": {...},
//    "dataset": {"ratios": {...}, "neg_per_pos": {...}}, "service": {...}}
// Field names match the struct members; service paths are "embeddings",
// "classifier" and "store_root", resolved against the config file directory.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  SegmenterConfig segmenter;
  TrainConfig embeddings;
  ClassifierConfig classifier;
  DatasetConfig dataset;
  ServiceConfig service;

  // Validates every section except the service model paths, which are only
  // needed by serve. Throws ConfigError.
  void validate() const;
};

// Unknown keys and wrongly typed values are rejected. Throws ConfigError.
RunConfig parse_run_config(std::string_view json, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Library side of each subcommand; the CLI only parses flags and calls these.

// Raw extracted text (pdf-extract output, not normalized).
std::string extract_text(const std::filesystem::path& input);

// Normalized, segmented sentences of one text or PDF file; doc_id is the file stem.
std::vector<Sentence> segment_file(const std::filesystem::path& input, const SegmenterConfig& config);

// Embedding corpus: each sentence of each file is one token sequence. A ".tsv"
// is read as a sentence TSV; a directory contributes its regular files in
// name order.
std::vector<std::vector<std::string>> load_corpus(std::span<const std::filesystem::path> inputs,
                                                  const SegmenterConfig& config);

BuiltDataset build_dataset_from_labels(const std::filesystem::path& labels,
                                       const std::optional<std::filesystem::path>& questions,
                                       const DatasetConfig& config, const SegmenterConfig& segmenter);

std::vector<QAPair> pairs_of(std::span<const PairRow> rows);

// Trains on `train`, then calibrates the threshold on `dev` when it has positives.
PairClassifier train_pair_classifier(std::span<const QAPair> train, std::span<const QAPair> dev,
                                     std::span<const TcfdQuestion> questions, const EmbeddingModel& model,
                                     const ClassifierConfig& config);

std::vector<Prediction> predict_pairs(const PairClassifier& clf, const EmbeddingModel& model,
                                      std::span<const QAPair> pairs, std::span<const TcfdQuestion> questions);

// Result TSV (service format) over the given documents; doc_id as in the service.
std::string infer_documents(std::span<const std::filesystem::path> inputs, std::span<const int> qids,
                            Scorer& scorer, const SegmenterConfig& segmenter);

// Runs `disclosure-qa` with args (without argv[0]). Returns 0 on success, 1 on
// an operational failure, 2 on a usage or configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dqa
