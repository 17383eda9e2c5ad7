#include <algorithm>
#include <cmath>

#include "dqa/embeddings.hpp"
#include "dqa/errors.hpp"

namespace dqa {

std::vector<double> embed_sentence(const EmbeddingModel& model, std::string_view text) {
  std::vector<double> out(model.dim, 0.0);
  std::size_t n = 0;
  for (const auto& tok : tokenize(text)) {
    auto id = model.vocab.id(tok);
    if (!id) continue;
    auto row = model.input_row(*id);
    for (std::uint32_t i = 0; i < model.dim; ++i) out[i] += row[i];
    ++n;
  }
  if (n > 1) {
    for (double& x : out) x /= static_cast<double>(n);
  }
  return out;
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0 || bb == 0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }
double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }

std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingModel& model, std::string_view token,
                                                              std::size_t k, Exec exec) {
  auto query = model.vocab.id(token);
  if (!query) throw OutOfVocab("token not in vocabulary: " + std::string(token));
  const auto V = static_cast<std::int64_t>(model.vocab.size());
  std::vector<double> sims(static_cast<std::size_t>(V));
  const auto q = model.input_row(*query);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < V; ++i) {
      sims[static_cast<std::size_t>(i)] = cosine(q, model.input_row(static_cast<std::uint32_t>(i)));
    }
  } else {
    for (std::int64_t i = 0; i < V; ++i) {
      sims[static_cast<std::size_t>(i)] = cosine(q, model.input_row(static_cast<std::uint32_t>(i)));
    }
  }
  std::vector<std::uint32_t> order;
  order.reserve(sims.size());
  for (std::uint32_t i = 0; i < sims.size(); ++i) {
    if (i != *query) order.push_back(i);
  }
  k = std::min(k, order.size());
  auto better = [&](std::uint32_t a, std::uint32_t b) { return sims[a] != sims[b] ? sims[a] > sims[b] : a < b; };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(model.vocab.tokens[order[i]], sims[order[i]]);
  return out;
}

}  // namespace dqa
