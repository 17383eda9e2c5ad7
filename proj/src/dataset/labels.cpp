#include <fstream>
#include <set>

#include "dqa/dataset.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "dqa/pdf_extract.hpp"
#include "json_util.hpp"

namespace dqa {

namespace {

std::vector<Sentence> read_tsv_sentences(const std::filesystem::path& path, const std::string& doc_id,
                                         const std::string& where) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Sentence> rows;
  try {
    rows = read_sentences_tsv(in);
  } catch (const FormatError& e) {
    throw SchemaError(where + ".text_file: " + e.what());
  }
  std::vector<Sentence> out;
  for (auto& s : rows) {
    if (s.doc_id != doc_id) continue;
    if (s.sent_id != out.size()) {
      throw SchemaError(where + ".text_file: sent_id " + std::to_string(s.sent_id) + " out of sequence for " + doc_id);
    }
    out.push_back(std::move(s));
  }
  if (out.empty() && !rows.empty()) throw SchemaError(where + ".text_file: no sentences for doc_id " + doc_id);
  return out;
}

LabeledDoc parse_doc(const nlohmann::json& d, const std::string& where, const std::filesystem::path& base_dir,
                     const SegmenterConfig& segmenter) {
  if (!d.is_object()) throw SchemaError(where + ": expected an object");
  LabeledDoc ld;
  const std::string doc_id = detail::get_string(d, "doc_id", where);
  if (doc_id.empty()) throw SchemaError(where + ".doc_id: must not be empty");
  DocMeta meta;
  meta.company = detail::get_string(d, "company", where);
  if (meta.company.empty()) throw SchemaError(where + ".company: must not be empty");
  const std::string sector = detail::get_string(d, "sector", where);
  auto parsed = parse_sector(sector);
  if (!parsed) throw SchemaError(where + ".sector: unknown sector '" + sector + "'");
  meta.sector = *parsed;
  if (auto it = d.find("year"); it != d.end() && !it->is_null()) meta.year = detail::get_int(d, "year", where);
  const std::filesystem::path text_file = base_dir / detail::get_string(d, "text_file", where);

  if (text_file.extension() == ".tsv") {
    ld.sentences = read_tsv_sentences(text_file, doc_id, where);
    ld.doc.doc_id = doc_id;
  } else {
    ld.doc = normalize_document(extract_document(read_file(text_file)));
    ld.doc.doc_id = doc_id;
    ld.sentences = split_sentences(ld.doc, segmenter).sentences;
  }
  ld.doc.source_name = text_file.filename().string();
  ld.doc.meta = std::move(meta);

  const auto& answers = detail::get_field(d, "answers", where);
  if (!answers.is_array()) throw SchemaError(where + ".answers: expected an array");
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const std::string aw = where + ".answers[" + std::to_string(i) + "]";
    const auto& a = answers[i];
    if (!a.is_object()) throw SchemaError(aw + ": expected an object");
    const int qid = detail::get_int(a, "qid", aw);
    if (qid < 1 || qid > kNumQuestions) {
      throw SchemaError(aw + ".qid: " + std::to_string(qid) + " is outside 1.." + std::to_string(kNumQuestions));
    }
    const int sent_id = detail::get_int(a, "sent_id", aw);
    if (sent_id < 0 || static_cast<std::size_t>(sent_id) >= ld.sentences.size()) {
      throw DanglingAnswer(aw + ": sent_id " + std::to_string(sent_id) + " but " + doc_id + " has " +
                           std::to_string(ld.sentences.size()) + " sentences");
    }
    ld.answers.emplace(qid, static_cast<std::size_t>(sent_id));
  }
  return ld;
}

}  // namespace

std::vector<LabeledDoc> parse_labels(std::string_view json, const std::filesystem::path& base_dir,
                                     const SegmenterConfig& segmenter) {
  const nlohmann::json j = detail::parse_json(json, "annotations");
  if (!j.is_array()) throw SchemaError("annotations: expected a JSON array of documents");
  std::vector<LabeledDoc> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    out.push_back(parse_doc(j[i], where, base_dir, segmenter));
    if (!ids.insert(out.back().doc.doc_id).second) {
      throw SchemaError(where + ".doc_id: duplicate doc_id " + out.back().doc.doc_id);
    }
  }
  return out;
}

std::vector<LabeledDoc> load_labels(const std::filesystem::path& path, const SegmenterConfig& segmenter) {
  return parse_labels(read_file(path), path.parent_path(), segmenter);
}

}  // namespace dqa
