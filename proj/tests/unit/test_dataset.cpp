#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dqa/dataset.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "dqa/rng.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("dqa_test_dataset_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

dqa::LabeledDoc make_doc(const std::string& id, const std::string& company, std::size_t n_sent,
                         std::set<std::pair<int, std::size_t>> answers, dqa::Sector sector = dqa::Sector::Energy) {
  dqa::LabeledDoc d;
  d.doc.doc_id = id;
  d.doc.meta.company = company;
  d.doc.meta.sector = sector;
  for (std::size_t i = 0; i < n_sent; ++i) {
    d.sentences.push_back({i, id, id + " sentence number " + std::to_string(i) + ".", 0, 0});
  }
  d.answers = std::move(answers);
  return d;
}

std::vector<dqa::LabeledDoc> random_corpus(dqa::Rng& rng, std::size_t n_companies) {
  std::vector<dqa::LabeledDoc> docs;
  for (std::size_t c = 0; c < n_companies; ++c) {
    const auto n_docs = 1 + rng.below(2);
    for (std::uint64_t k = 0; k < n_docs; ++k) {
      const auto n_sent = 1 + rng.below(8);
      std::set<std::pair<int, std::size_t>> answers;
      for (std::uint64_t a = 0, na = rng.below(6); a < na; ++a) {
        answers.emplace(1 + static_cast<int>(rng.below(14)), rng.below(n_sent));
      }
      docs.push_back(make_doc("c" + std::to_string(c) + "d" + std::to_string(k), "Company " + std::to_string(c),
                              n_sent, answers));
    }
  }
  return docs;
}

std::string sentence_tsv(const std::string& doc_id, std::size_t n) {
  std::vector<dqa::Sentence> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({i, doc_id, "Sentence " + std::to_string(i) + " of the report.", 0, 0});
  std::ostringstream out;
  dqa::write_sentences_tsv(s, out);
  return out.str();
}

std::vector<dqa::QAPair> pairs_for_companies(const std::vector<std::size_t>& sizes) {
  std::vector<dqa::QAPair> pairs;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      dqa::QAPair p;
      p.company = "co" + std::to_string(c);
      p.qid = 1;
      p.sent_id = i;
      pairs.push_back(p);
    }
  }
  return pairs;
}

}  // namespace

TEST_CASE("question list matches the shipped questions file") {
  const auto& q = dqa::tcfd_questions();
  REQUIRE(q.size() == 14);
  for (int i = 0; i < 14; ++i) CHECK(q[static_cast<std::size_t>(i)].qid == i + 1);
  CHECK(dqa::load_questions(fs::path(DQA_DATA_DIR) / "questions.json") == q);
  for (const auto& item : q) {
    CHECK(item.text.find("  ") == std::string::npos);
    CHECK(item.text.back() == '?');
  }
}

TEST_CASE("parse_questions rejects bad input") {
  CHECK_THROWS_AS(dqa::parse_questions(R"([{"qid": 15, "text": "x"}])"), dqa::SchemaError);
  CHECK_THROWS_AS(dqa::parse_questions(R"([{"qid": 1, "text": "x"}, {"qid": 1, "text": "y"}])"), dqa::SchemaError);
  CHECK_THROWS_AS(dqa::parse_questions(R"([{"qid": "1", "text": "x"}])"), dqa::SchemaError);
  CHECK_THROWS_AS(dqa::parse_questions("{"), dqa::SchemaError);
}

TEST_CASE("load_labels") {
  TempDir tmp;
  dqa::write_file(tmp.path / "doc1.tsv", sentence_tsv("doc1", 3));
  auto annotation = [&](const std::string& answers, const std::string& extra = "") {
    return R"([{"doc_id": "doc1", "company": "Acme", "sector": "Energy", "year": 2019, "text_file": "doc1.tsv", )" +
           extra + R"("answers": )" + answers + "}]";
  };

  SUBCASE("one answer") {
    dqa::write_file(tmp.path / "a.json", annotation(R"([{"qid": 1, "sent_id": 0}])"));
    auto docs = dqa::load_labels(tmp.path / "a.json");
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].sentences.size() == 3);
    CHECK(docs[0].answers == std::set<std::pair<int, std::size_t>>{{1, 0}});
    CHECK(docs[0].doc.meta.company == "Acme");
    CHECK(docs[0].doc.meta.sector == dqa::Sector::Energy);
    CHECK(docs[0].doc.meta.year == 2019);
  }
  SUBCASE("empty answers") {
    auto docs = dqa::parse_labels(annotation("[]"), tmp.path);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].answers.empty());
  }
  SUBCASE("qid 15") {
    CHECK_THROWS_AS(dqa::parse_labels(annotation(R"([{"qid": 15, "sent_id": 0}])"), tmp.path), dqa::SchemaError);
  }
  SUBCASE("dangling sent_id") {
    CHECK_THROWS_AS(dqa::parse_labels(annotation(R"([{"qid": 2, "sent_id": 3}])"), tmp.path), dqa::DanglingAnswer);
  }
  SUBCASE("schema errors name the field or line") {
    try {
      dqa::parse_labels(R"([{"doc_id": "doc1", "company": "Acme", "sector": "Energy", "text_file": "doc1.tsv"}])",
                        tmp.path);
      FAIL("expected SchemaError");
    } catch (const dqa::SchemaError& e) {
      CHECK(std::string(e.what()).find("annotations[0]: missing field 'answers'") != std::string::npos);
    }
    try {
      dqa::parse_labels("[\n{\"doc_id\": ,\n}]", tmp.path);
      FAIL("expected SchemaError");
    } catch (const dqa::SchemaError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    try {
      dqa::parse_labels(R"([{"doc_id": "doc1", "company": "Acme", "sector": "Nowhere", "text_file": "doc1.tsv",
                             "answers": []}])",
                        tmp.path);
      FAIL("expected SchemaError");
    } catch (const dqa::SchemaError& e) {
      CHECK(std::string(e.what()).find("annotations[0].sector") != std::string::npos);
    }
  }
  SUBCASE("plain text source is extracted and segmented") {
    dqa::write_file(tmp.path / "report.txt",
                    "Our board oversees climate-related risks. Emissions fell by 12% in 2020.\n\nPage 2");
    auto docs = dqa::parse_labels(
        R"([{"doc_id": "r", "company": "Acme", "sector": "Banks", "year": null, "text_file": "report.txt",
             "answers": [{"qid": 1, "sent_id": 0}]}])",
        tmp.path);
    REQUIRE(docs.size() == 1);
    REQUIRE(docs[0].sentences.size() == 2);
    CHECK(docs[0].sentences[0].text == "Our board oversees climate-related risks.");
    CHECK(docs[0].sentences[1].doc_id == "r");
    CHECK(!docs[0].doc.meta.year);
  }
  SUBCASE("missing text file") {
    CHECK_THROWS_AS(dqa::parse_labels(R"([{"doc_id": "x", "company": "A", "sector": "Energy", "text_file": "nope.txt",
                                          "answers": []}])",
                                      tmp.path),
                    dqa::IoError);
  }
}

TEST_CASE("build_pairs examples") {
  const auto& q = dqa::tcfd_questions();
  std::vector<dqa::LabeledDoc> one{make_doc("d", "A", 3, {{1, 0}})};
  auto pairs = dqa::build_pairs(one, q);
  REQUIRE(pairs.size() == 42);
  std::size_t pos = 0;
  for (const auto& p : pairs) pos += p.label == dqa::Label::positive;
  CHECK(pos == 1);
  CHECK(pairs.size() - pos == 41);
  CHECK(pairs[0].qid == 1);
  CHECK(pairs[0].sent_id == 0);
  CHECK(pairs[0].label == dqa::Label::positive);
  CHECK(pairs[3].qid == 2);

  std::vector<dqa::LabeledDoc> none{make_doc("d", "A", 4, {})};
  auto neg = dqa::build_pairs(none, q);
  CHECK(neg.size() == 56);
  for (const auto& p : neg) CHECK(p.label == dqa::Label::negative);

  std::set<std::pair<int, std::size_t>> all;
  for (int qid = 1; qid <= 14; ++qid) all.emplace(qid, 0);
  std::vector<dqa::LabeledDoc> full{make_doc("d", "A", 1, all)};
  auto pos_only = dqa::build_pairs(full, q);
  CHECK(pos_only.size() == 14);
  for (const auto& p : pos_only) CHECK(p.label == dqa::Label::positive);
}

TEST_CASE("build_pairs properties against brute-force enumeration") {
  dqa::Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto docs = random_corpus(rng, 2 + rng.below(5));
    auto pairs = dqa::build_pairs(docs, dqa::tcfd_questions());
    CHECK(dqa::build_pairs(docs, dqa::tcfd_questions(), dqa::Exec::serial) == pairs);

    std::vector<dqa::QAPair> expected;
    std::size_t total_sentences = 0;
    for (const auto& d : docs) {
      total_sentences += d.sentences.size();
      for (int qid = 1; qid <= 14; ++qid) {
        for (std::size_t s = 0; s < d.sentences.size(); ++s) {
          bool answered = false;
          for (const auto& a : d.answers) answered = answered || (a.first == qid && a.second == s);
          expected.push_back({qid, d.doc.doc_id, s, d.sentences[s].text,
                              answered ? dqa::Label::positive : dqa::Label::negative, d.doc.meta.company,
                              d.doc.meta.sector});
        }
      }
    }
    CHECK(pairs == expected);
    CHECK(pairs.size() == 14 * total_sentences);
  }
}

TEST_CASE("split_by_company examples") {
  auto three = pairs_for_companies({5, 9, 2});
  auto s = dqa::split_by_company(three, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1);
  std::set<dqa::Split> used;
  for (const auto& [company, split] : s.manifest) used.insert(split);
  CHECK(used.size() == 3);
  CHECK(s.train.size() + s.dev.size() + s.test.size() == three.size());

  auto again = dqa::split_by_company(three, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1);
  CHECK(again.manifest == s.manifest);

  CHECK_THROWS_AS(dqa::split_by_company(pairs_for_companies({3, 3}), {}, 1), dqa::TooFewCompanies);
  CHECK_THROWS_AS(dqa::split_by_company(three, {0.5, 0.5, 0.5}, 1), dqa::ConfigError);
}

TEST_CASE("split_by_company: 10 equal companies vs exhaustive search") {
  const std::vector<std::size_t> sizes(10, 7);
  const dqa::SplitRatios ratios{0.6, 0.2, 0.2};
  auto pairs = pairs_for_companies(sizes);
  // Exhaustive: best achievable max deviation (in companies) over all 3^10
  // assignments that leave no split empty.
  double best = 1e9;
  for (int code = 0; code < 59049; ++code) {
    int counts[3] = {0, 0, 0};
    for (int c = 0, x = code; c < 10; ++c, x /= 3) ++counts[x % 3];
    if (!counts[0] || !counts[1] || !counts[2]) continue;
    const double dev = std::max({std::abs(counts[0] - 6.0), std::abs(counts[1] - 2.0), std::abs(counts[2] - 2.0)});
    best = std::min(best, dev);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = dqa::split_by_company(pairs, ratios, seed);
    const double dev = std::max({std::abs(static_cast<double>(s.train.size()) / 7 - 6.0),
                                 std::abs(static_cast<double>(s.dev.size()) / 7 - 2.0),
                                 std::abs(static_cast<double>(s.test.size()) / 7 - 2.0)});
    CHECK(dev <= best + 1);
  }
}

TEST_CASE("split_by_company properties") {
  dqa::Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> sizes;
    for (std::uint64_t c = 0, n = 3 + rng.below(15); c < n; ++c) sizes.push_back(1 + rng.below(50));
    auto pairs = pairs_for_companies(sizes);
    const double a = rng.uniform(0.05, 0.9);
    const double b = rng.uniform(0.0, 1.0 - a);
    const dqa::SplitRatios ratios{a, b, 1.0 - a - b};
    const auto seed = rng.next_u64();
    auto s = dqa::split_by_company(pairs, ratios, seed);

    std::map<std::string, std::set<dqa::Split>> seen;
    for (dqa::Split sp : dqa::kAllSplits) {
      for (const auto& p : s[sp]) {
        seen[p.company].insert(sp);
        CHECK(s.manifest.at(p.company) == sp);
      }
    }
    for (const auto& [company, splits] : seen) CHECK(splits.size() == 1);
    CHECK(s.manifest.size() == sizes.size());
    for (dqa::Split sp : dqa::kAllSplits) {
      if (ratios[sp] > 0) CHECK(!s[sp].empty());
    }
    CHECK(dqa::split_by_company(pairs, ratios, seed).manifest == s.manifest);
  }
}

TEST_CASE("subsample_negatives examples") {
  auto make = [](std::size_t pos, std::size_t neg, int qids = 1) {
    std::vector<dqa::QAPair> v;
    for (std::size_t i = 0; i < pos; ++i) v.push_back({1 + static_cast<int>(i % qids), "d", i, "", dqa::Label::positive, "c", {}});
    for (std::size_t i = 0; i < neg; ++i) v.push_back({1 + static_cast<int>(i % qids), "d", pos + i, "", dqa::Label::negative, "c", {}});
    return v;
  };
  auto r = dqa::subsample_negatives(make(10, 1000), 10, 3);
  CHECK(r.positives == 10);
  CHECK(r.negatives == 100);
  CHECK(r.pairs.size() == 110);
  CHECK(r.achieved_ratio == 10.0);

  // Set sizes of the published splits: 1,500:15,000, 750:7,500 and 400:1,200.
  CHECK(dqa::subsample_negatives(make(1500, 40000, 14), 10, 1).negatives == 15000);
  CHECK(dqa::subsample_negatives(make(750, 20000, 14), 10, 1).negatives == 7500);
  auto test = dqa::subsample_negatives(make(400, 5000, 14), 3, 1);
  CHECK(test.negatives == 1200);
  CHECK(test.achieved_ratio == 3.0);

  auto short_pool = dqa::subsample_negatives(make(5, 2), 10, 1);
  CHECK(short_pool.negatives == 2);
  CHECK(short_pool.pairs.size() == 7);
  CHECK(short_pool.achieved_ratio == doctest::Approx(0.4));

  CHECK(dqa::subsample_negatives(make(0, 5), 10, 1).pairs.empty());
  CHECK_THROWS_AS(dqa::subsample_negatives(make(1, 1), 0, 1), dqa::ConfigError);
}

TEST_CASE("subsample_negatives properties") {
  dqa::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<dqa::QAPair> pairs;
    for (std::uint64_t i = 0, n = rng.below(400); i < n; ++i) {
      pairs.push_back({1 + static_cast<int>(rng.below(14)), "d", i, "", rng.below(8) == 0 ? dqa::Label::positive : dqa::Label::negative, "c", {}});
    }
    const double ratio = rng.uniform(0.5, 12);
    const auto seed = rng.next_u64();
    auto r = dqa::subsample_negatives(pairs, ratio, seed);
    std::size_t pos = 0, neg = 0;
    for (const auto& p : pairs) (p.label == dqa::Label::positive ? pos : neg)++;
    const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(pos)));
    CHECK(r.positives == pos);
    CHECK(r.negatives == std::min(target, neg));
    // Subsequence of the input, all positives retained.
    std::size_t j = 0, kept_pos = 0;
    for (const auto& p : r.pairs) {
      while (j < pairs.size() && !(pairs[j] == p)) ++j;
      CHECK(j < pairs.size());
      ++j;
      kept_pos += p.label == dqa::Label::positive;
    }
    CHECK(kept_pos == pos);
    CHECK(dqa::subsample_negatives(pairs, ratio, seed).pairs == r.pairs);
  }
}

TEST_CASE("subsample_negatives stratifies by question") {
  std::vector<dqa::QAPair> pairs;
  std::size_t id = 0;
  // qid 1: 10 positives, 500 negatives; qid 2: 2 positives, 5 negatives.
  for (int i = 0; i < 10; ++i) pairs.push_back({1, "d", id++, "", dqa::Label::positive, "c", {}});
  for (int i = 0; i < 500; ++i) pairs.push_back({1, "d", id++, "", dqa::Label::negative, "c", {}});
  for (int i = 0; i < 2; ++i) pairs.push_back({2, "d", id++, "", dqa::Label::positive, "c", {}});
  for (int i = 0; i < 5; ++i) pairs.push_back({2, "d", id++, "", dqa::Label::negative, "c", {}});
  auto r = dqa::subsample_negatives(pairs, 10, 4);
  std::map<int, std::size_t> neg;
  for (const auto& p : r.pairs) neg[p.qid] += p.label == dqa::Label::negative;
  CHECK(r.negatives == 120);
  CHECK(neg[2] == 5);    // quota 20, pool 5
  CHECK(neg[1] == 115);  // quota 100 plus the 15 shortfall
}

TEST_CASE("dataset build is byte-deterministic and round-trips") {
  dqa::Rng rng(30);
  auto docs = random_corpus(rng, 8);
  auto pairs = dqa::build_pairs(docs, dqa::tcfd_questions());
  dqa::DatasetConfig cfg;
  cfg.seed = 77;
  auto a = dqa::build_dataset(pairs, cfg);
  auto b = dqa::build_dataset(pairs, cfg);
  TempDir t1, t2;
  dqa::write_dataset(a, t1.path);
  dqa::write_dataset(b, t2.path);
  for (const char* f : {"train.tsv", "dev.tsv", "test.tsv", "manifest.json"}) {
    CHECK(dqa::read_file(t1.path / f) == dqa::read_file(t2.path / f));
  }
  auto rows = dqa::load_pairs_tsv(t1.path / "train.tsv");
  REQUIRE(rows.size() == a.splits.train.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].split == dqa::Split::train);
    CHECK(rows[i].pair == a.splits.train[i]);
  }
  const std::string manifest = dqa::read_file(t1.path / "manifest.json");
  CHECK(manifest.find("\"seed\": 77") != std::string::npos);
  CHECK(a.summary.at(dqa::Split::train).positives + a.summary.at(dqa::Split::dev).positives +
            a.summary.at(dqa::Split::test).positives ==
        [&] {
          std::size_t n = 0;
          for (const auto& p : pairs) n += p.label == dqa::Label::positive;
          return n;
        }());

  std::istringstream bad("split\tqid\n");
  CHECK_THROWS_AS(dqa::read_pairs_tsv(bad), dqa::SchemaError);
  std::istringstream bad_qid(
      "split\tqid\tdoc_id\tsent_id\tlabel\tcompany\tsector\tsentence_text\ntrain\t15\td\t0\t1\tc\tEnergy\tx\n");
  CHECK_THROWS_AS(dqa::read_pairs_tsv(bad_qid), dqa::SchemaError);
}
