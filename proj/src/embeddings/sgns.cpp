#include <algorithm>
#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "../common/utf8.hpp"
#include "dqa/embeddings.hpp"
#include "dqa/errors.hpp"
#include "dqa/rng.hpp"

namespace dqa {

void TrainConfig::validate() const {
  if (!seed) throw ConfigError("train config: seed is required");
  if (dim == 0 || window == 0 || negatives == 0 || epochs == 0 || min_count == 0 || threads == 0) {
    throw ConfigError("train config: dim, window, negatives, epochs, min_count and threads must be positive");
  }
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("train config: learning_rate must be positive");
  if (!(subsample_t > 0) || !std::isfinite(subsample_t)) throw ConfigError("train config: subsample_t must be positive");
}

namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
T sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// -log s(x), without overflow for large |x|.
template <typename T>
T neg_log_sigmoid(T x) {
  if (x >= 0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

}  // namespace

template <typename T>
T sgns_loss_and_grad(std::span<const T> v_c, std::span<const T> u_o, std::span<const T> negs, std::span<T> g_v_c,
                     std::span<T> g_u_o, std::span<T> g_negs) {
  const std::size_t dim = v_c.size();
  if (u_o.size() != dim || g_v_c.size() != dim || g_u_o.size() != dim || negs.size() % dim != 0 ||
      g_negs.size() != negs.size()) {
    throw DimensionMismatch("sgns gradient: inconsistent parameter shapes");
  }
  std::fill(g_v_c.begin(), g_v_c.end(), T(0));

  const T s = dot(u_o.data(), v_c.data(), dim);
  T loss = neg_log_sigmoid(s);
  const T d_pos = sigmoid(s) - T(1);
  for (std::size_t i = 0; i < dim; ++i) {
    g_u_o[i] = d_pos * v_c[i];
    g_v_c[i] += d_pos * u_o[i];
  }
  for (std::size_t off = 0; off < negs.size(); off += dim) {
    const T* u_n = negs.data() + off;
    const T t = dot(u_n, v_c.data(), dim);
    loss += neg_log_sigmoid(-t);
    const T d_neg = sigmoid(t);
    for (std::size_t i = 0; i < dim; ++i) {
      g_negs[off + i] = d_neg * v_c[i];
      g_v_c[i] += d_neg * u_n[i];
    }
  }
  return loss;
}

template float sgns_loss_and_grad<float>(std::span<const float>, std::span<const float>, std::span<const float>,
                                         std::span<float>, std::span<float>, std::span<float>);
template double sgns_loss_and_grad<double>(std::span<const double>, std::span<const double>, std::span<const double>,
                                           std::span<double>, std::span<double>, std::span<double>);

namespace {

// Shared parameter rows. Accesses are relaxed atomics so concurrent workers
// race benignly (lost updates allowed); with one worker they are plain loads
// and stores.
class SharedRows {
 public:
  SharedRows(std::vector<float>& data, std::uint32_t dim) : data_(data.data()), dim_(dim) {}

  void load(std::uint32_t row, float* out) const {
    float* p = data_ + std::size_t{row} * dim_;
    for (std::uint32_t i = 0; i < dim_; ++i) out[i] = std::atomic_ref<float>(p[i]).load(std::memory_order_relaxed);
  }

  void step(std::uint32_t row, const float* grad, float lr) const {
    float* p = data_ + std::size_t{row} * dim_;
    for (std::uint32_t i = 0; i < dim_; ++i) {
      std::atomic_ref<float> x(p[i]);
      x.store(x.load(std::memory_order_relaxed) - lr * grad[i], std::memory_order_relaxed);
    }
  }

 private:
  float* data_;
  std::uint32_t dim_;
};

class NegativeSampler {
 public:
  explicit NegativeSampler(const std::vector<std::uint64_t>& counts) : cdf_(counts.size()) {
    double acc = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      acc += std::pow(static_cast<double>(counts[i]), 0.75);
      cdf_[i] = acc;
    }
    for (double& c : cdf_) c /= acc;
  }

  std::uint32_t draw(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::uint32_t>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

struct Shared {
  const TrainConfig& config;
  const std::vector<std::vector<std::uint32_t>>& corpus;
  const std::vector<double>& keep_prob;
  const NegativeSampler& sampler;
  SharedRows input;
  SharedRows output;
  std::uint64_t train_words;   // per epoch
  std::atomic<std::uint64_t> words_done{0};
};

struct WorkerResult {
  double loss = 0;
  std::uint64_t pairs = 0;
  bool non_finite = false;
};

constexpr std::uint64_t kLrUpdateEvery = 10000;

// Trains the sentences [begin, end) of one epoch.
WorkerResult train_range(Shared& sh, std::size_t begin, std::size_t end, Rng& rng) {
  const std::uint32_t dim = sh.config.dim;
  const double lr0 = sh.config.learning_rate;
  const double total = static_cast<double>(sh.train_words) * sh.config.epochs + 1;
  std::vector<float> v_c(dim), u_o(dim), negs, g_v_c(dim), g_u_o(dim), g_negs;
  std::vector<std::uint32_t> neg_ids;
  std::vector<std::uint32_t> sentence;
  WorkerResult res;

  std::uint64_t local_words = 0;
  float lr = static_cast<float>(lr0 * std::max(1e-4, 1.0 - static_cast<double>(sh.words_done.load()) / total));

  for (std::size_t si = begin; si < end; ++si) {
    const auto& raw = sh.corpus[si];
    sentence.clear();
    for (std::uint32_t w : raw) {
      if (sh.keep_prob[w] >= 1.0 || rng.uniform() < sh.keep_prob[w]) sentence.push_back(w);
    }
    local_words += raw.size();
    if (local_words >= kLrUpdateEvery) {
      const auto done = sh.words_done.fetch_add(local_words) + local_words;
      local_words = 0;
      lr = static_cast<float>(lr0 * std::max(1e-4, 1.0 - static_cast<double>(done) / total));
    }

    for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
      const std::uint32_t center = sentence[pos];
      const std::uint32_t reduce = static_cast<std::uint32_t>(rng.below(sh.config.window));
      const std::size_t span = sh.config.window - reduce;
      const std::size_t lo = pos >= span ? pos - span : 0;
      const std::size_t hi = std::min(sentence.size() - 1, pos + span);
      for (std::size_t cpos = lo; cpos <= hi; ++cpos) {
        if (cpos == pos) continue;
        const std::uint32_t context = sentence[cpos];
        neg_ids.clear();
        for (std::uint32_t n = 0; n < sh.config.negatives; ++n) {
          const std::uint32_t id = sh.sampler.draw(rng);
          if (id != context) neg_ids.push_back(id);
        }
        negs.resize(neg_ids.size() * dim);
        g_negs.resize(negs.size());
        sh.input.load(center, v_c.data());
        sh.output.load(context, u_o.data());
        for (std::size_t n = 0; n < neg_ids.size(); ++n) sh.output.load(neg_ids[n], negs.data() + n * dim);

        const float loss = sgns_loss_and_grad<float>(v_c, u_o, negs, g_v_c, g_u_o, g_negs);
        if (!std::isfinite(loss)) {
          res.non_finite = true;
          return res;
        }
        res.loss += loss;
        ++res.pairs;

        sh.input.step(center, g_v_c.data(), lr);
        sh.output.step(context, g_u_o.data(), lr);
        for (std::size_t n = 0; n < neg_ids.size(); ++n) sh.output.step(neg_ids[n], g_negs.data() + n * dim, lr);
      }
    }
  }
  sh.words_done.fetch_add(local_words);
  return res;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

EmbeddingModel train_sgns(std::span<const std::vector<std::string>> corpus, const TrainConfig& config,
                          TrainStats* stats) {
  config.validate();
  EmbeddingModel model;
  model.dim = config.dim;
  model.train_config = config;
  model.vocab = build_vocab(corpus, config.min_count);
  const Vocab& vocab = model.vocab;
  const std::size_t V = vocab.size();

  std::vector<std::vector<std::uint32_t>> ids;
  ids.reserve(corpus.size());
  std::uint64_t train_words = 0;
  for (const auto& seq : corpus) {
    std::vector<std::uint32_t> row;
    row.reserve(seq.size());
    for (const auto& t : seq) {
      if (auto id = vocab.id(utf8::lower(t))) row.push_back(*id);
    }
    train_words += row.size();
    ids.push_back(std::move(row));
  }

  std::vector<double> keep(V);
  for (std::size_t i = 0; i < V; ++i) {
    const double f = static_cast<double>(vocab.counts[i]) / static_cast<double>(train_words);
    keep[i] = (std::sqrt(f / config.subsample_t) + 1) * config.subsample_t / f;
  }

  Rng init(*config.seed);
  model.input_vectors.resize(V * config.dim);
  for (float& x : model.input_vectors) x = static_cast<float>((init.uniform() - 0.5) / config.dim);
  model.output_vectors.assign(V * config.dim, 0.0f);

  NegativeSampler sampler(vocab.counts);
  Shared sh{config,
            ids,
            keep,
            sampler,
            SharedRows(model.input_vectors, config.dim),
            SharedRows(model.output_vectors, config.dim),
            train_words};

  TrainStats local_stats;
  const std::size_t n_sent = ids.size();
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    WorkerResult total;
    if (config.threads == 1) {
      Rng rng(mix_seed(*config.seed, epoch));
      total = train_range(sh, 0, n_sent, rng);
    } else {
      const int threads = static_cast<int>(config.threads);
      std::vector<WorkerResult> parts(config.threads);
#pragma omp parallel for num_threads(threads) schedule(static, 1)
      for (int t = 0; t < threads; ++t) {
        Rng rng(mix_seed(*config.seed, std::uint64_t{epoch} * config.threads + static_cast<std::uint64_t>(t)));
        const std::size_t b = n_sent * static_cast<std::size_t>(t) / config.threads;
        const std::size_t e = n_sent * static_cast<std::size_t>(t + 1) / config.threads;
        parts[static_cast<std::size_t>(t)] = train_range(sh, b, e, rng);
      }
      for (const auto& p : parts) {
        total.loss += p.loss;
        total.pairs += p.pairs;
        total.non_finite = total.non_finite || p.non_finite;
      }
    }
    if (total.non_finite) {
      throw NonFiniteLoss("loss became non-finite in epoch " + std::to_string(epoch + 1) +
                          "; lower the learning rate");
    }
    local_stats.epoch_loss.push_back(total.pairs ? total.loss / static_cast<double>(total.pairs) : 0.0);
    local_stats.updates += total.pairs;
  }
  for (float x : model.input_vectors) {
    if (!std::isfinite(x)) throw NonFiniteLoss("input vectors diverged; lower the learning rate");
  }
  for (float x : model.output_vectors) {
    if (!std::isfinite(x)) throw NonFiniteLoss("output vectors diverged; lower the learning rate");
  }
  if (stats) *stats = std::move(local_stats);
  return model;
}

}  // namespace dqa
