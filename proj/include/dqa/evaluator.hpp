#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dqa/document.hpp"

namespace dqa {

struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const Confusion&) const = default;
};

// Throws LengthMismatch.
Confusion confusion(std::span<const char> decisions, std::span<const char> labels);
Confusion confusion(const std::vector<bool>& decisions, const std::vector<bool>& labels);

struct Metrics {
  double precision = 0, recall = 0, f1 = 0;  // positive class; 0 on empty denominators
  std::uint64_t support_pos = 0, support_neg = 0;
  Confusion counts;
};

Metrics metrics(const Confusion& c);

struct Prediction {
  int qid = 0;
  Sector sector = Sector::Other;
  bool label = false;
  bool decision = false;
};

// A slice is N/A (nullopt) when it holds no positive labels.
using SliceMetrics = std::optional<Metrics>;

struct EvalReport {
  std::string split;
  Metrics overall;
  std::map<Sector, SliceMetrics> by_sector;  // every Sector
  std::map<int, SliceMetrics> by_question;   // qid 1..14
  // Unweighted means of the non-N/A slice F1s; nullopt when every slice is N/A.
  std::optional<double> sector_average;
  std::optional<double> question_average;
};

EvalReport report(std::span<const Prediction> predictions, std::string split);
// Mean of the present values; nullopt when none.
std::optional<double> mean_f1(const std::vector<SliceMetrics>& slices);

// test - val in percentage points; nullopt when either side is N/A.
struct DiffRow {
  std::string key;
  std::optional<double> val_f1, test_f1;  // fractions in [0, 1]
  std::optional<double> diff_points;
};

struct DiffSummary {
  DiffRow average;                          // difference of the two averages
  std::optional<double> mean_signed_diff;   // mean of per-slice diffs
  std::optional<double> mean_abs_diff;      // mean of |per-slice diffs|
};

struct DiffReport {
  DiffRow overall;
  std::vector<DiffRow> by_sector;
  std::vector<DiffRow> by_question;
  DiffSummary sectors, questions;
};

std::optional<double> diff_points(std::optional<double> val_f1, std::optional<double> test_f1);

// Throws KeyMismatch when the slice keys differ.
DiffReport val_test_diff(const EvalReport& val, const EvalReport& test);

// Percent with one decimal ("85.5"); "N/A" for nullopt.
std::string format_percent(std::optional<double> fraction);
// Signed points with one decimal ("-6.7"); "N/A" for nullopt.
std::string format_points(std::optional<double> points);

// {"reports": {split: {overall, by_sector, by_question, averages}}, "diffs": ...}
// with null for N/A.
std::string evaluation_json(std::span<const EvalReport> reports, const DiffReport* diffs);
std::string report_text(const EvalReport& r);
std::string diff_text(const DiffReport& d, const std::string& val_name = "Validation", const std::string& test_name = "Test");

}  // namespace dqa
