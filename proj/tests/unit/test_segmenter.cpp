#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dqa/errors.hpp"
#include "dqa/rng.hpp"
#include "dqa/segmenter.hpp"

namespace {

dqa::RawDocument doc_of(std::string text) {
  dqa::RawDocument d;
  d.doc_id = "d0";
  d.text = std::move(text);
  if (!d.text.empty()) d.page_breaks = {0};
  return d;
}

std::vector<std::string> texts(const dqa::SegmentResult& r) {
  std::vector<std::string> out;
  for (const auto& s : r.sentences) out.push_back(s.text);
  return out;
}

dqa::SegmenterConfig loose() {
  dqa::SegmenterConfig c;
  c.min_len = 1;
  return c;
}

std::string random_text(dqa::Rng& rng) {
  static const std::vector<std::string> pieces = {
      "Risk", "costs", "rose", ".", "?", "!", " ", " ", "\n", "\n\n", "\t", "  ", "1.5", "Inc.", "J.",
      "-\n", "cli", "mate", "é", "e\xCC\x81", "\"", "(", ")", "U.S.", "No.", "42", "\r\n", "Z"};
  std::string s;
  const auto n = rng.below(40);
  for (std::uint64_t i = 0; i < n; ++i) s += pieces[rng.below(pieces.size())];
  return s;
}

}  // namespace

TEST_CASE("normalize_text examples") {
  CHECK(dqa::normalize_text("cli-\nmate risk") == "climate risk");
  CHECK(dqa::normalize_text("a  \t b") == "a b");
  CHECK(dqa::normalize_text("x\n\n\n\ny") == "x\n\ny");
  CHECK(dqa::normalize_text("") == "");
  CHECK(dqa::normalize_text("a \r\n b") == "a\nb");
  CHECK(dqa::normalize_text("caf\x65\xCC\x81") == "caf\xC3\xA9");
  // Upper-case continuation or a blank line is not a hyphenated word break.
  CHECK(dqa::normalize_text("CO2-\nNeutral") == "CO2-\nNeutral");
  CHECK(dqa::normalize_text("cli-\n\nmate") == "cli-\n\nmate");
}

TEST_CASE("normalize_text is idempotent") {
  dqa::Rng rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string x = random_text(rng);
    const std::string once = dqa::normalize_text(x);
    CHECK(dqa::normalize_text(once) == once);
  }
}

TEST_CASE("normalize_document keeps page breaks consistent") {
  dqa::RawDocument d;
  d.text = "Page  one.\n\n   \n\nPage\ttwo.";
  d.page_breaks = {0, 12, 17};
  auto n = dqa::normalize_document(d);
  CHECK(n.text == "Page one.\n\nPage two.");
  CHECK(n.page_breaks == std::vector<std::size_t>{0, 11});
}

TEST_CASE("split_sentences examples") {
  CHECK(texts(dqa::split_sentences(doc_of("Risks rose. Costs fell."), loose())) ==
        std::vector<std::string>{"Risks rose.", "Costs fell."});
  CHECK(dqa::split_sentences(doc_of("")).sentences.empty());
  CHECK(texts(dqa::split_sentences(doc_of("Revenue was $1.5 million in Q4."))) ==
        std::vector<std::string>{"Revenue was $1.5 million in Q4."});
}

// Expected splits produced by pysbd 0.3 (language "en", clean=False) on the
// identical strings.
TEST_CASE("split_sentences agrees with pysbd on reference strings") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"Apple Inc. reported growth. Costs fell.", {"Apple Inc. reported growth.", "Costs fell."}},
      {"J. Smith joined the board. He chairs it.", {"J. Smith joined the board.", "He chairs it."}},
      {"Emissions fell by 12% in 2020. The target is net zero by 2050.",
       {"Emissions fell by 12% in 2020.", "The target is net zero by 2050."}},
      {"Is climate risk material? Yes. We assess it annually!",
       {"Is climate risk material?", "Yes.", "We assess it annually!"}},
      {"See Fig. 3 for details. Scope 3 is excluded.", {"See Fig. 3 for details.", "Scope 3 is excluded."}},
      {"The U.S. market grew. Europe shrank.", {"The U.S. market grew.", "Europe shrank."}},
      {"Mr. Jones chairs the committee. Ms. Lee reports to him.",
       {"Mr. Jones chairs the committee.", "Ms. Lee reports to him."}},
      {"He said \"Costs rose.\" Then he left.", {"He said \"Costs rose.\"", "Then he left."}},
      {"Item No. 5 was approved. The board agreed.", {"Item No. 5 was approved.", "The board agreed."}},
  };
  for (const auto& [input, expected] : cases) {
    CAPTURE(input);
    CHECK(texts(dqa::split_sentences(doc_of(input), loose())) == expected);
  }
}

TEST_CASE("split_sentences rules") {
  auto split = [](const std::string& s) { return texts(dqa::split_sentences(doc_of(s), loose())); };
  // Configured abbreviation wins even before a digit.
  CHECK(split("We use approx. 40 suppliers. All are audited.") ==
        std::vector<std::string>{"We use approx. 40 suppliers.", "All are audited."});
  CHECK(split("heading without stop\n\nBody text here.") ==
        std::vector<std::string>{"heading without stop", "Body text here."});
  CHECK(split("Costs rose. then fell.") == std::vector<std::string>{"Costs rose. then fell."});
  CHECK(split("Wait... What happened?! Nothing.") ==
        std::vector<std::string>{"Wait...", "What happened?!", "Nothing."});
  CHECK(split("Costs rose (sharply). (Prices) fell.") ==
        std::vector<std::string>{"Costs rose (sharply).", "(Prices) fell."});
  CHECK(split("See www.example.com for more.") == std::vector<std::string>{"See www.example.com for more."});

  dqa::SegmenterConfig no_abbrev = loose();
  no_abbrev.abbreviations = {};
  CHECK(texts(dqa::split_sentences(doc_of("Apple Inc. Reported growth."), no_abbrev)) ==
        std::vector<std::string>{"Apple Inc.", "Reported growth."});
}

TEST_CASE("length filter drops and counts") {
  dqa::SegmenterConfig c;
  c.min_len = 10;
  c.max_len = 25;
  auto r = dqa::split_sentences(doc_of("Short. This one is kept fine. This sentence is far too long to keep."), c);
  CHECK(texts(r) == std::vector<std::string>{"This one is kept fine."});
  CHECK(r.dropped_short == 1);
  CHECK(r.dropped_long == 1);
  REQUIRE(r.sentences.size() == 1);
  CHECK(r.sentences[0].sent_id == 0);

  // Code points, not bytes: "éééééééééé" is 10 characters, 20 bytes.
  c.min_len = c.max_len = 10;
  CHECK(dqa::split_sentences(doc_of("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9"), c)
            .sentences.size() == 1);
}

TEST_CASE("span invariants hold on random normalized text") {
  dqa::Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    auto d = doc_of(dqa::normalize_text(random_text(rng)));
    dqa::SegmenterConfig c = loose();
    c.min_len = rng.below(4);
    auto r = dqa::split_sentences(d, c);
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < r.sentences.size(); ++i) {
      const auto& s = r.sentences[i];
      CHECK(s.sent_id == i);
      CHECK(s.doc_id == "d0");
      CHECK(s.start >= prev_end);
      CHECK(s.end > s.start);
      CHECK(s.text == d.text.substr(s.start, s.end - s.start));
      CHECK(s.text.front() != ' ');
      CHECK(s.text.back() != '\n');
      CHECK(dqa::count_code_points(s.text) >= c.min_len);
      prev_end = s.end;
    }
    // With no filtering, the spans plus whitespace gaps cover the text.
    if (c.min_len == 0) {
      std::string rest;
      std::size_t pos = 0;
      for (const auto& s : r.sentences) {
        rest += d.text.substr(pos, s.start - pos);
        pos = s.end;
      }
      rest += d.text.substr(pos);
      CHECK(rest.find_first_not_of(" \n") == std::string::npos);
    }
    CHECK(dqa::split_sentences(d, c).sentences == r.sentences);
  }
}

TEST_CASE("sentence TSV") {
  std::ostringstream empty;
  CHECK(dqa::write_sentences_tsv({}, empty) == 0);
  CHECK(empty.str() == "doc_id\tsent_id\tstart\tend\ttext\n");

  std::vector<dqa::Sentence> sents = {{0, "doc", "tab\there", 0, 8}, {1, "doc", "second", 9, 15}};
  std::ostringstream out;
  CHECK(dqa::write_sentences_tsv(sents, out) == 2);
  CHECK(out.str() == "doc_id\tsent_id\tstart\tend\ttext\ndoc\t0\t0\t8\ttab here\ndoc\t1\t9\t15\tsecond\n");

  std::istringstream in(out.str());
  auto back = dqa::read_sentences_tsv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].text == "tab here");
  CHECK(back[1] == sents[1]);

  std::istringstream bad("nope\n");
  CHECK_THROWS_AS(dqa::read_sentences_tsv(bad), dqa::FormatError);
  std::istringstream short_row("doc_id\tsent_id\tstart\tend\ttext\ndoc\t0\n");
  CHECK_THROWS_AS(dqa::read_sentences_tsv(short_row), dqa::FormatError);
}
