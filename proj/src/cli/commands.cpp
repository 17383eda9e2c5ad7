#include <algorithm>
#include <map>
#include <sstream>

#include "dqa/cli.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "dqa/pdf_extract.hpp"

namespace fs = std::filesystem;

namespace dqa {

namespace {

std::vector<fs::path> expand_inputs(std::span<const fs::path> inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    std::error_code ec;
    if (fs::is_directory(in, ec)) {
      std::vector<fs::path> children;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file()) children.push_back(e.path());
      }
      std::sort(children.begin(), children.end());
      files.insert(files.end(), children.begin(), children.end());
    } else {
      files.push_back(in);
    }
  }
  return files;
}

// The service segments stored text with no page metadata; doing the same here
// keeps CLI and service results identical.
std::vector<Sentence> segment_text(const std::string& doc_id, std::string text, const SegmenterConfig& config) {
  RawDocument doc;
  doc.doc_id = doc_id;
  doc.text = std::move(text);
  return split_sentences(doc, config).sentences;
}

}  // namespace

std::string extract_text(const fs::path& input) { return extract_document(read_file(input)).text; }

std::vector<Sentence> segment_file(const fs::path& input, const SegmenterConfig& config) {
  return segment_text(input.stem().string(), normalize_document(extract_document(read_file(input))).text, config);
}

std::vector<std::vector<std::string>> load_corpus(std::span<const fs::path> inputs, const SegmenterConfig& config) {
  std::vector<std::vector<std::string>> corpus;
  auto add = [&](std::string_view text) {
    auto tokens = tokenize(text);
    if (!tokens.empty()) corpus.push_back(std::move(tokens));
  };
  for (const auto& file : expand_inputs(inputs)) {
    if (file.extension() == ".tsv") {
      std::istringstream in(read_file(file));
      for (const auto& s : read_sentences_tsv(in)) add(s.text);
    } else {
      for (const auto& s : segment_file(file, config)) add(s.text);
    }
  }
  return corpus;
}

BuiltDataset build_dataset_from_labels(const fs::path& labels, const std::optional<fs::path>& questions,
                                       const DatasetConfig& config, const SegmenterConfig& segmenter) {
  const auto docs = load_labels(labels, segmenter);
  const auto qs = questions ? load_questions(*questions) : tcfd_questions();
  return build_dataset(build_pairs(docs, qs), config);
}

std::vector<QAPair> pairs_of(std::span<const PairRow> rows) {
  std::vector<QAPair> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.pair);
  return out;
}

PairClassifier train_pair_classifier(std::span<const QAPair> train, std::span<const QAPair> dev,
                                     std::span<const TcfdQuestion> questions, const EmbeddingModel& model,
                                     const ClassifierConfig& config) {
  PairClassifier clf = train_classifier(train, questions, model, config);
  const bool dev_has_positive =
      std::any_of(dev.begin(), dev.end(), [](const QAPair& p) { return p.label == Label::positive; });
  if (dev_has_positive) clf = calibrate_threshold(std::move(clf), dev, questions, model);
  return clf;
}

std::vector<Prediction> predict_pairs(const PairClassifier& clf, const EmbeddingModel& model,
                                      std::span<const QAPair> pairs, std::span<const TcfdQuestion> questions) {
  std::map<int, std::string_view> text_of;
  for (const auto& q : questions) text_of[q.qid] = q.text;
  std::vector<TextPair> batch;
  batch.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = text_of.find(p.qid);
    if (it == text_of.end()) throw UnknownQuestionId("no question with qid " + std::to_string(p.qid));
    batch.push_back({it->second, p.sentence_text});
  }
  const auto scores = score_batch(clf, model, batch);
  std::vector<Prediction> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back({pairs[i].qid, pairs[i].sector, pairs[i].label == Label::positive, is_answer(clf, scores[i])});
  }
  return out;
}

std::string infer_documents(std::span<const fs::path> inputs, std::span<const int> qids, Scorer& scorer,
                            const SegmenterConfig& segmenter) {
  std::vector<Sentence> all;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string doc_id = make_doc_id(i, inputs[i].filename().string());
    auto sents = segment_text(doc_id, normalize_document(extract_document(read_file(inputs[i]))).text, segmenter);
    all.insert(all.end(), std::make_move_iterator(sents.begin()), std::make_move_iterator(sents.end()));
  }
  return results_tsv(score_sentences(all, qids, tcfd_questions(), scorer));
}

}  // namespace dqa
