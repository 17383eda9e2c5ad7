#include <algorithm>
#include <cmath>
#include <numeric>

#include "dqa/dataset.hpp"
#include "dqa/errors.hpp"
#include "dqa/rng.hpp"

namespace dqa {

namespace {

std::vector<QAPair> doc_pairs(const LabeledDoc& d, const std::vector<int>& qids) {
  std::vector<QAPair> out;
  out.reserve(qids.size() * d.sentences.size());
  for (int qid : qids) {
    for (const auto& s : d.sentences) {
      QAPair p;
      p.qid = qid;
      p.doc_id = d.doc.doc_id;
      p.sent_id = s.sent_id;
      p.sentence_text = s.text;
      p.label = d.answers.count({qid, s.sent_id}) ? Label::positive : Label::negative;
      p.company = d.doc.meta.company;
      p.sector = d.doc.meta.sector;
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace

std::vector<QAPair> build_pairs(std::span<const LabeledDoc> docs, std::span<const TcfdQuestion> questions, Exec exec) {
  std::vector<int> qids;
  for (const auto& q : questions) qids.push_back(q.qid);
  std::sort(qids.begin(), qids.end());
  qids.erase(std::unique(qids.begin(), qids.end()), qids.end());

  std::vector<std::vector<QAPair>> per_doc(docs.size());
  const auto n = static_cast<std::int64_t>(docs.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) per_doc[static_cast<std::size_t>(i)] = doc_pairs(docs[static_cast<std::size_t>(i)], qids);
  } else {
    for (std::int64_t i = 0; i < n; ++i) per_doc[static_cast<std::size_t>(i)] = doc_pairs(docs[static_cast<std::size_t>(i)], qids);
  }
  std::size_t total = 0;
  for (const auto& v : per_doc) total += v.size();
  std::vector<QAPair> out;
  out.reserve(total);
  for (auto& v : per_doc) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  for (Split s : kAllSplits) {
    if (split_name(s) == name) return s;
  }
  throw SchemaError("unknown split '" + std::string(name) + "'");
}

SplitDataset split_by_company(std::span<const QAPair> pairs, const SplitRatios& ratios, std::uint64_t seed) {
  for (Split s : kAllSplits) {
    if (!(ratios[s] >= 0) || !std::isfinite(ratios[s])) throw ConfigError("split ratios must be non-negative");
  }
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  std::map<std::string, std::size_t> sizes;
  for (const auto& p : pairs) ++sizes[p.company];
  if (sizes.size() < 3) {
    throw TooFewCompanies("need at least 3 companies to split, got " + std::to_string(sizes.size()));
  }
  std::vector<std::pair<std::string, std::size_t>> companies(sizes.begin(), sizes.end());
  Rng rng(seed);
  rng.shuffle(companies);
  std::stable_sort(companies.begin(), companies.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  const double total = static_cast<double>(pairs.size());
  std::map<Split, double> assigned;
  std::map<Split, std::size_t> members;
  SplitDataset out;
  out.seed = seed;
  for (std::size_t i = 0; i < companies.size(); ++i) {
    const std::size_t remaining = companies.size() - i;
    std::vector<Split> open;
    for (Split s : kAllSplits) {
      if (ratios[s] > 0 && members[s] == 0) open.push_back(s);
    }
    std::vector<Split> candidates;
    if (remaining <= open.size()) {
      candidates = open;
    } else {
      for (Split s : kAllSplits) {
        if (ratios[s] > 0) candidates.push_back(s);
      }
    }
    Split best = candidates.front();
    double best_deficit = -INFINITY;
    for (Split s : candidates) {
      const double deficit = ratios[s] * total - assigned[s];
      if (deficit > best_deficit) {
        best = s;
        best_deficit = deficit;
      }
    }
    assigned[best] += static_cast<double>(companies[i].second);
    ++members[best];
    out.manifest[companies[i].first] = best;
  }
  for (const auto& p : pairs) out[out.manifest.at(p.company)].push_back(p);
  return out;
}

SubsampleResult subsample_negatives(std::span<const QAPair> pairs, double neg_per_pos, std::uint64_t seed) {
  if (!(neg_per_pos > 0) || !std::isfinite(neg_per_pos)) throw ConfigError("neg_per_pos must be positive");
  std::map<int, std::vector<std::size_t>> neg_by_qid;
  std::map<int, std::size_t> pos_by_qid;
  std::size_t positives = 0, negatives = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].label == Label::positive) {
      ++positives;
      ++pos_by_qid[pairs[i].qid];
    } else {
      ++negatives;
      neg_by_qid[pairs[i].qid].push_back(i);
    }
  }
  const auto target = static_cast<std::size_t>(std::llround(neg_per_pos * static_cast<double>(positives)));
  std::vector<char> keep(pairs.size(), 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) keep[i] = pairs[i].label == Label::positive;

  Rng rng(seed);
  std::size_t kept_neg = 0;
  if (target >= negatives) {
    for (std::size_t i = 0; i < pairs.size(); ++i) keep[i] = 1;
    kept_neg = negatives;
  } else if (target > 0) {
    // Largest-remainder apportionment of the target by positives per qid.
    std::vector<std::pair<int, std::size_t>> quota;
    std::vector<std::pair<double, int>> remainders;
    std::size_t given = 0;
    for (const auto& [qid, np] : pos_by_qid) {
      const double exact = static_cast<double>(target) * static_cast<double>(np) / static_cast<double>(positives);
      const auto whole = static_cast<std::size_t>(std::floor(exact));
      quota.emplace_back(qid, whole);
      remainders.emplace_back(exact - static_cast<double>(whole), qid);
      given += whole;
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::map<int, std::size_t> q(quota.begin(), quota.end());
    for (std::size_t r = 0; given < target && r < remainders.size(); ++r, ++given) ++q[remainders[r].second];

    std::vector<std::size_t> leftover;
    for (auto& [qid, pool] : neg_by_qid) {
      rng.shuffle(pool);
      const std::size_t take = std::min(q.count(qid) ? q[qid] : 0, pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (i < take) {
          keep[pool[i]] = 1;
        } else {
          leftover.push_back(pool[i]);
        }
      }
      kept_neg += take;
    }
    std::sort(leftover.begin(), leftover.end());
    rng.shuffle(leftover);
    for (std::size_t i = 0; kept_neg < target && i < leftover.size(); ++i, ++kept_neg) keep[leftover[i]] = 1;
  }

  SubsampleResult out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.pairs.push_back(pairs[i]);
  }
  out.positives = positives;
  out.negatives = kept_neg;
  out.achieved_ratio = positives ? static_cast<double>(kept_neg) / static_cast<double>(positives) : 0.0;
  return out;
}

namespace {

std::uint64_t split_seed(std::uint64_t seed, Split s) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(s) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

BuiltDataset build_dataset(std::span<const QAPair> pairs, const DatasetConfig& config) {
  BuiltDataset built;
  built.config = config;
  SplitDataset raw = split_by_company(pairs, config.ratios, config.seed);
  built.splits.manifest = raw.manifest;
  built.splits.seed = raw.seed;
  for (Split s : kAllSplits) {
    SplitSummary& sum = built.summary[s];
    for (const auto& [company, split] : raw.manifest) sum.companies += split == s;
    for (const auto& p : raw[s]) sum.negatives_available += p.label == Label::negative;
    auto sub = subsample_negatives(raw[s], config.neg_per_pos[s], split_seed(config.seed, s));
    sum.positives = sub.positives;
    sum.negatives = sub.negatives;
    sum.achieved_ratio = sub.achieved_ratio;
    built.splits[s] = std::move(sub.pairs);
  }
  return built;
}

}  // namespace dqa
