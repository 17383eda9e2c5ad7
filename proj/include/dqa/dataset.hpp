#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dqa/document.hpp"
#include "dqa/exec.hpp"
#include "dqa/segmenter.hpp"

namespace dqa {

inline constexpr int kNumQuestions = 14;

struct TcfdQuestion {
  int qid = 0;
  std::string text;

  bool operator==(const TcfdQuestion&) const = default;
};

// The 14 TCFD questions, qid 1..14.
const std::vector<TcfdQuestion>& tcfd_questions();

// Questions file: JSON array of {qid, text}. Throws SchemaError.
std::vector<TcfdQuestion> parse_questions(std::string_view json);
std::vector<TcfdQuestion> load_questions(const std::filesystem::path& path);

struct LabeledDoc {
  RawDocument doc;
  std::vector<Sentence> sentences;               // sent_id == index
  std::set<std::pair<int, std::size_t>> answers;  // (qid, sent_id)
};

// Annotation file: JSON array of {doc_id, company, sector, year, text_file,
// answers: [{qid, sent_id}]}. text_file is relative to the annotation file; a
// ".tsv" is read as a sentence TSV, anything else is extracted and segmented
// with `segmenter`. Throws SchemaError, DanglingAnswer, IoError.
std::vector<LabeledDoc> parse_labels(std::string_view json, const std::filesystem::path& base_dir,
                                     const SegmenterConfig& segmenter = {});
std::vector<LabeledDoc> load_labels(const std::filesystem::path& path, const SegmenterConfig& segmenter = {});

enum class Label { negative, positive };

struct QAPair {
  int qid = 0;
  std::string doc_id;
  std::size_t sent_id = 0;
  std::string sentence_text;
  Label label = Label::negative;
  std::string company;
  Sector sector = Sector::Other;

  bool operator==(const QAPair&) const = default;
};

// Full cross product of sentences and questions, ordered (doc, qid, sent_id)
// with docs in input order. Both policies give identical output.
std::vector<QAPair> build_pairs(std::span<const LabeledDoc> docs, std::span<const TcfdQuestion> questions,
                                Exec exec = Exec::parallel);

enum class Split { train, dev, test };
inline constexpr Split kAllSplits[] = {Split::train, Split::dev, Split::test};
std::string_view split_name(Split split);
// Throws SchemaError.
Split parse_split(std::string_view name);

struct SplitRatios {
  double train = 0.6;
  double dev = 0.2;
  double test = 0.2;

  double operator[](Split s) const { return s == Split::train ? train : s == Split::dev ? dev : test; }
};

struct SplitDataset {
  std::vector<QAPair> train, dev, test;
  std::map<std::string, Split> manifest;  // company -> split
  std::uint64_t seed = 0;

  std::vector<QAPair>& operator[](Split s) { return s == Split::train ? train : s == Split::dev ? dev : test; }
  const std::vector<QAPair>& operator[](Split s) const {
    return s == Split::train ? train : s == Split::dev ? dev : test;
  }
};

// Seeded shuffle of companies, then greedy largest-company-first assignment to
// the split furthest below its pair-count target. Every split with a positive
// ratio receives at least one company. Throws TooFewCompanies, ConfigError.
SplitDataset split_by_company(std::span<const QAPair> pairs, const SplitRatios& ratios, std::uint64_t seed);

struct SubsampleResult {
  std::vector<QAPair> pairs;  // input order preserved
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double achieved_ratio = 0;  // negatives / positives; 0 without positives
};

// Keeps every positive and round(neg_per_pos * positives) negatives, sampled
// without replacement. The total is apportioned across qids in proportion to
// their positives; a qid short of negatives is topped up from the remaining
// pool. Throws ConfigError when neg_per_pos <= 0.
SubsampleResult subsample_negatives(std::span<const QAPair> pairs, double neg_per_pos, std::uint64_t seed);

struct NegativeRatios {
  double train = 10;
  double dev = 10;
  double test = 3;

  double operator[](Split s) const { return s == Split::train ? train : s == Split::dev ? dev : test; }
};

struct DatasetConfig {
  SplitRatios ratios;
  NegativeRatios neg_per_pos;
  std::uint64_t seed = 0;
};

struct SplitSummary {
  std::size_t companies = 0;
  std::size_t positives = 0;
  std::size_t negatives_available = 0;
  std::size_t negatives = 0;
  double achieved_ratio = 0;
};

struct BuiltDataset {
  SplitDataset splits;  // after negative subsampling
  std::map<Split, SplitSummary> summary;
  DatasetConfig config;
};

// split_by_company, then subsample_negatives per split.
BuiltDataset build_dataset(std::span<const QAPair> pairs, const DatasetConfig& config);

// Header `split qid doc_id sent_id label company sector sentence_text`
// (tab-separated); label is 1 or 0. Returns rows written.
std::size_t write_pairs_tsv(std::span<const QAPair> pairs, Split split, std::ostream& out);

struct PairRow {
  Split split = Split::train;
  QAPair pair;
};

// Throws SchemaError.
std::vector<PairRow> read_pairs_tsv(std::istream& in);
std::vector<PairRow> load_pairs_tsv(const std::filesystem::path& path);

std::string manifest_json(const BuiltDataset& built);

// Writes train.tsv, dev.tsv, test.tsv and manifest.json into `dir`.
void write_dataset(const BuiltDataset& built, const std::filesystem::path& dir);

}  // namespace dqa
