#include "dqa/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "dqa/errors.hpp"
#include "json.hpp"

namespace dqa {

namespace {

constexpr int kQuestions = 14;

}  // namespace

Confusion confusion(std::span<const char> decisions, std::span<const char> labels) {
  if (decisions.size() != labels.size()) {
    throw LengthMismatch("confusion: " + std::to_string(decisions.size()) + " decisions vs " +
                         std::to_string(labels.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool d = decisions[i] != 0, l = labels[i] != 0;
    (d ? (l ? c.tp : c.fp) : (l ? c.fn : c.tn))++;
  }
  return c;
}

Confusion confusion(const std::vector<bool>& decisions, const std::vector<bool>& labels) {
  std::vector<char> d(decisions.begin(), decisions.end()), l(labels.begin(), labels.end());
  return confusion(std::span<const char>(d), std::span<const char>(l));
}

Metrics metrics(const Confusion& c) {
  Metrics m;
  m.counts = c;
  m.support_pos = c.tp + c.fn;
  m.support_neg = c.fp + c.tn;
  m.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

std::optional<double> mean_f1(const std::vector<SliceMetrics>& slices) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& s : slices) {
    if (s) {
      sum += s->f1;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

EvalReport report(std::span<const Prediction> predictions, std::string split) {
  Confusion overall;
  std::map<Sector, Confusion> sectors;
  std::map<int, Confusion> questions;
  for (const auto& p : predictions) {
    Confusion one;
    (p.decision ? (p.label ? one.tp : one.fp) : (p.label ? one.fn : one.tn)) = 1;
    overall += one;
    sectors[p.sector] += one;
    questions[p.qid] += one;
  }
  EvalReport r;
  r.split = std::move(split);
  r.overall = metrics(overall);
  auto slice = [](const Confusion& c) -> SliceMetrics {
    if (c.tp + c.fn == 0) return std::nullopt;
    return metrics(c);
  };
  std::vector<SliceMetrics> s_list, q_list;
  for (Sector s : kAllSectors) {
    r.by_sector[s] = slice(sectors[s]);
    s_list.push_back(r.by_sector[s]);
  }
  for (int q = 1; q <= kQuestions; ++q) {
    r.by_question[q] = slice(questions[q]);
    q_list.push_back(r.by_question[q]);
  }
  r.sector_average = mean_f1(s_list);
  r.question_average = mean_f1(q_list);
  return r;
}

std::optional<double> diff_points(std::optional<double> val_f1, std::optional<double> test_f1) {
  if (!val_f1 || !test_f1) return std::nullopt;
  return 100.0 * (*test_f1 - *val_f1);
}

namespace {

std::optional<double> f1_of(const SliceMetrics& m) { return m ? std::optional<double>(m->f1) : std::nullopt; }

DiffRow make_row(std::string key, std::optional<double> val, std::optional<double> test) {
  return {std::move(key), val, test, diff_points(val, test)};
}

DiffSummary summarize(const std::vector<DiffRow>& rows, std::optional<double> val_avg, std::optional<double> test_avg) {
  DiffSummary s;
  s.average = make_row("Average", val_avg, test_avg);
  double sum = 0, abs_sum = 0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (!r.diff_points) continue;
    sum += *r.diff_points;
    abs_sum += std::abs(*r.diff_points);
    ++n;
  }
  if (n) {
    s.mean_signed_diff = sum / static_cast<double>(n);
    s.mean_abs_diff = abs_sum / static_cast<double>(n);
  }
  return s;
}

template <typename K>
std::set<K> keys(const std::map<K, SliceMetrics>& m) {
  std::set<K> out;
  for (const auto& kv : m) out.insert(kv.first);
  return out;
}

}  // namespace

DiffReport val_test_diff(const EvalReport& val, const EvalReport& test) {
  if (keys(val.by_sector) != keys(test.by_sector)) throw KeyMismatch("val/test reports have different sector slices");
  if (keys(val.by_question) != keys(test.by_question)) throw KeyMismatch("val/test reports have different question slices");
  DiffReport d;
  d.overall = make_row("Overall", val.overall.f1, test.overall.f1);
  for (const auto& [sector, vm] : val.by_sector) {
    d.by_sector.push_back(make_row(std::string(sector_name(sector)), f1_of(vm), f1_of(test.by_sector.at(sector))));
  }
  for (const auto& [qid, vm] : val.by_question) {
    d.by_question.push_back(make_row(std::to_string(qid), f1_of(vm), f1_of(test.by_question.at(qid))));
  }
  d.sectors = summarize(d.by_sector, val.sector_average, test.sector_average);
  d.questions = summarize(d.by_question, val.question_average, test.question_average);
  return d;
}

namespace {

std::string one_decimal(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", x);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

}  // namespace

std::string format_percent(std::optional<double> fraction) { return fraction ? one_decimal(100.0 * *fraction) : "N/A"; }
std::string format_points(std::optional<double> points) { return points ? one_decimal(*points) : "N/A"; }

namespace {

using Json = nlohmann::ordered_json;

Json opt(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

Json metrics_json(const Metrics& m) {
  return Json{{"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"support_pos", m.support_pos},
              {"support_neg", m.support_neg},
              {"confusion", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn}, {"tn", m.counts.tn}}}};
}

Json slice_json(const SliceMetrics& m) { return m ? metrics_json(*m) : Json(nullptr); }

Json row_json(const DiffRow& r) {
  return Json{{"key", r.key}, {"val_f1", opt(r.val_f1)}, {"test_f1", opt(r.test_f1)}, {"diff_points", opt(r.diff_points)}};
}

Json summary_json(const DiffSummary& s) {
  return Json{{"average", row_json(s.average)},
              {"mean_signed_diff", opt(s.mean_signed_diff)},
              {"mean_abs_diff", opt(s.mean_abs_diff)}};
}

}  // namespace

std::string evaluation_json(std::span<const EvalReport> reports, const DiffReport* diffs) {
  Json out;
  Json rs = Json::object();
  for (const auto& r : reports) {
    Json j;
    j["overall"] = metrics_json(r.overall);
    Json sectors = Json::object();
    for (const auto& [s, m] : r.by_sector) sectors[std::string(sector_name(s))] = slice_json(m);
    j["by_sector"] = sectors;
    Json questions = Json::object();
    for (const auto& [q, m] : r.by_question) questions[std::to_string(q)] = slice_json(m);
    j["by_question"] = questions;
    j["averages"] = {{"sector_f1", opt(r.sector_average)}, {"question_f1", opt(r.question_average)}};
    rs[r.split] = j;
  }
  out["reports"] = rs;
  if (diffs) {
    Json d;
    d["overall"] = row_json(diffs->overall);
    d["by_sector"] = Json::array();
    for (const auto& r : diffs->by_sector) d["by_sector"].push_back(row_json(r));
    d["by_question"] = Json::array();
    for (const auto& r : diffs->by_question) d["by_question"].push_back(row_json(r));
    d["sectors"] = summary_json(diffs->sectors);
    d["questions"] = summary_json(diffs->questions);
    out["diffs"] = d;
  } else {
    out["diffs"] = nullptr;
  }
  return out.dump(2) + "\n";
}

namespace {

// Left-aligned first column, right-aligned numbers.
class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  void rule() { rules_.insert(rows_.size()); }

  std::string str() const {
    std::vector<std::size_t> width(rows_[0].size(), 0);
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::size_t total = 0;
    for (auto w : width) total += w + 3;
    std::ostringstream out;
    for (std::size_t ri = 0; ri < rows_.size(); ++ri) {
      if (rules_.count(ri)) out << std::string(total - 3, '-') << '\n';
      const auto& r = rows_[ri];
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out << " | ";
        const std::string pad(width[i] - r[i].size(), ' ');
        out << (i == 0 ? r[i] + pad : pad + r[i]);
      }
      out << '\n';
      if (ri == 0) out << std::string(total - 3, '-') << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
  std::set<std::size_t> rules_;
};

std::string count(std::uint64_t n) { return std::to_string(n); }

void add_metric_row(Table& t, const std::string& name, const SliceMetrics& m) {
  if (!m) {
    t.add({name, "N/A", "N/A", "N/A", "0", "-"});
    return;
  }
  t.add({name, format_percent(m->precision), format_percent(m->recall), format_percent(m->f1), count(m->support_pos),
         count(m->support_neg)});
}

}  // namespace

std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "Split: " << r.split << "\n\n";
  Table overall({"", "Precision", "Recall", "F1", "Pos", "Neg"});
  add_metric_row(overall, "Overall", r.overall);
  out << overall.str() << '\n';

  Table sectors({"Sector", "Precision", "Recall", "F1", "Pos", "Neg"});
  for (const auto& [s, m] : r.by_sector) add_metric_row(sectors, std::string(sector_name(s)), m);
  sectors.rule();
  sectors.add({"Average across sectors", "", "", format_percent(r.sector_average), "", ""});
  out << sectors.str() << '\n';

  Table questions({"Question", "Precision", "Recall", "F1", "Pos", "Neg"});
  for (const auto& [q, m] : r.by_question) add_metric_row(questions, std::to_string(q), m);
  questions.rule();
  questions.add({"Average", "", "", format_percent(r.question_average), "", ""});
  out << questions.str();
  return out.str();
}

std::string diff_text(const DiffReport& d, const std::string& val_name, const std::string& test_name) {
  const std::string diff_header = val_name + " - " + test_name + " Difference";
  auto table = [&](const std::string& first, const std::vector<DiffRow>& rows, const DiffSummary& s,
                   const std::string& avg_label) {
    Table t({first, val_name + " F1", test_name + " F1", diff_header});
    for (const auto& r : rows) {
      if (!r.val_f1 && !r.test_f1) continue;
      t.add({r.key, format_percent(r.val_f1), format_percent(r.test_f1), format_points(r.diff_points)});
    }
    t.rule();
    t.add({avg_label, format_percent(s.average.val_f1), format_percent(s.average.test_f1),
           format_points(s.average.diff_points)});
    t.add({"Mean of per-row differences", "", "", format_points(s.mean_signed_diff)});
    t.add({"Mean absolute difference", "", "", format_points(s.mean_abs_diff)});
    return t.str();
  };
  std::ostringstream out;
  Table overall({"", val_name + " F1", test_name + " F1", diff_header});
  overall.add({"Overall", format_percent(d.overall.val_f1), format_percent(d.overall.test_f1),
               format_points(d.overall.diff_points)});
  out << overall.str() << '\n';
  out << table("Sector", d.by_sector, d.sectors, "Average across sectors") << '\n';
  out << table("Question", d.by_question, d.questions, "Average");
  return out.str();
}

}  // namespace dqa
