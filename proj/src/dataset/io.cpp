#include <fstream>
#include <ostream>
#include <sstream>

#include "dqa/dataset.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "dqa/tsv.hpp"
#include "json.hpp"

namespace dqa {

namespace {

constexpr std::string_view kPairHeader = "split\tqid\tdoc_id\tsent_id\tlabel\tcompany\tsector\tsentence_text";

}  // namespace

std::size_t write_pairs_tsv(std::span<const QAPair> pairs, Split split, std::ostream& out) {
  out << kPairHeader << '\n';
  for (const auto& p : pairs) {
    out << split_name(split) << '\t' << p.qid << '\t' << tsv_field(p.doc_id) << '\t' << p.sent_id << '\t'
        << (p.label == Label::positive ? '1' : '0') << '\t' << tsv_field(p.company) << '\t'
        << sector_name(p.sector) << '\t' << tsv_field(p.sentence_text) << '\n';
  }
  out.flush();
  if (!out) throw IoError("failed to write pair TSV");
  return pairs.size();
}

std::vector<PairRow> read_pairs_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || (!line.empty() && line.back() == '\r' ? line.substr(0, line.size() - 1) : line) != kPairHeader) {
    throw SchemaError("pair TSV: missing or unexpected header");
  }
  std::vector<PairRow> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "pair TSV line " + std::to_string(line_no);
    auto f = split_tsv_line(line);
    if (f.size() != 8) throw SchemaError(where + ": expected 8 fields, got " + std::to_string(f.size()));
    PairRow row;
    row.split = parse_split(f[0]);
    QAPair& p = row.pair;
    try {
      std::size_t used = 0;
      p.qid = std::stoi(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("qid");
      p.sent_id = std::stoull(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("sent_id");
    } catch (const std::exception&) {
      throw SchemaError(where + ": qid and sent_id must be integers");
    }
    if (p.qid < 1 || p.qid > kNumQuestions) throw SchemaError(where + ": qid " + f[1] + " outside 1..14");
    p.doc_id = f[2];
    if (f[4] != "0" && f[4] != "1") throw SchemaError(where + ": label must be 0 or 1");
    p.label = f[4] == "1" ? Label::positive : Label::negative;
    p.company = f[5];
    auto sector = parse_sector(f[6]);
    if (!sector) throw SchemaError(where + ": unknown sector '" + f[6] + "'");
    p.sector = *sector;
    p.sentence_text = f[7];
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<PairRow> load_pairs_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_pairs_tsv(in);
}

std::string manifest_json(const BuiltDataset& built) {
  nlohmann::ordered_json j;
  j["seed"] = built.config.seed;
  j["ratios"] = {{"train", built.config.ratios.train}, {"dev", built.config.ratios.dev}, {"test", built.config.ratios.test}};
  j["neg_per_pos"] = {{"train", built.config.neg_per_pos.train},
                      {"dev", built.config.neg_per_pos.dev},
                      {"test", built.config.neg_per_pos.test}};
  nlohmann::ordered_json companies = nlohmann::ordered_json::object();
  for (const auto& [company, split] : built.splits.manifest) companies[company] = split_name(split);
  j["companies"] = companies;
  nlohmann::ordered_json splits = nlohmann::ordered_json::object();
  for (Split s : kAllSplits) {
    const SplitSummary& sum = built.summary.at(s);
    splits[std::string(split_name(s))] = {{"companies", sum.companies},
                                          {"positives", sum.positives},
                                          {"negatives_available", sum.negatives_available},
                                          {"negatives", sum.negatives},
                                          {"achieved_ratio", sum.achieved_ratio}};
  }
  j["splits"] = splits;
  return j.dump(2) + "\n";
}

void write_dataset(const BuiltDataset& built, const std::filesystem::path& dir) {
  for (Split s : kAllSplits) {
    std::ostringstream out;
    write_pairs_tsv(built.splits[s], s, out);
    write_file(dir / (std::string(split_name(s)) + ".tsv"), out.str());
  }
  write_file(dir / "manifest.json", manifest_json(built));
}

}  // namespace dqa
