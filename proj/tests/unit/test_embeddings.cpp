#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "dqa/embeddings.hpp"
#include "dqa/errors.hpp"
#include "dqa/rng.hpp"

namespace {

std::vector<std::vector<std::string>> alpha_beta_corpus() {
  return std::vector<std::vector<std::string>>(10000, {"alpha", "beta"});
}

// Subsampling is switched off for this fixture: with two equally frequent
// words the default t=1e-4 would keep about 1.4% of positions.
dqa::TrainConfig alpha_beta_config() {
  dqa::TrainConfig c;
  c.seed = 1;
  c.subsample_t = 1;
  return c;
}

dqa::TrainConfig seeded(std::uint64_t seed = 1) {
  dqa::TrainConfig c;
  c.seed = seed;
  return c;
}

// Central differences of the loss with respect to every parameter.
void numeric_grad(std::vector<double> v_c, std::vector<double> u_o, std::vector<double> negs, double h,
                  std::vector<double>& g_v, std::vector<double>& g_o, std::vector<double>& g_n) {
  std::vector<double> a(v_c.size()), b(u_o.size()), c(negs.size());
  auto loss = [&] { return dqa::sgns_loss_and_grad<double>(v_c, u_o, negs, a, b, c); };
  auto diff = [&](std::vector<double>& p, std::vector<double>& g) {
    g.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double x = p[i];
      p[i] = x + h;
      const double up = loss();
      p[i] = x - h;
      const double down = loss();
      p[i] = x;
      g[i] = (up - down) / (2 * h);
    }
  };
  diff(v_c, g_v);
  diff(u_o, g_o);
  diff(negs, g_n);
}

double rel_error(const std::vector<double>& a, const std::vector<double>& n) {
  double d = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nn);
  return denom == 0 ? 0 : std::sqrt(d) / denom;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(dqa::tokenize("Scope-3 fell 1.5%.") == std::vector<std::string>{"scope-3", "fell", "1.5"});
  CHECK(dqa::tokenize("The risk. Growth-") == std::vector<std::string>{"the", "risk", "growth"});
  CHECK(dqa::tokenize("CAFÉ 2.a") == std::vector<std::string>{"café", "2", "a"});
  CHECK(dqa::tokenize("").empty());
  CHECK(dqa::tokenize("-- . --").empty());
}

TEST_CASE("build_vocab examples") {
  auto v = dqa::build_vocab(std::vector<std::string>{"a", "a", "b"}, 2);
  CHECK(v.tokens == std::vector<std::string>{"a"});
  CHECK(v.total_tokens == 3);
  CHECK(v.counts == std::vector<std::uint64_t>{2});

  auto tie = dqa::build_vocab(std::vector<std::string>{"y", "x"}, 1);
  CHECK(*tie.id("x") == 0);
  CHECK(*tie.id("y") == 1);

  CHECK_THROWS_AS(dqa::build_vocab(std::vector<std::string>{}, 1), dqa::EmptyVocab);

  auto lowered = dqa::build_vocab(std::vector<std::string>{"Risk", "RISK", "risk", "b", "b"}, 1);
  CHECK(lowered.tokens == std::vector<std::string>{"risk", "b"});
  CHECK(!lowered.id("Risk"));
}

TEST_CASE("SGNS gradient matches central finite differences") {
  dqa::Rng rng(3);
  const std::size_t dim = 4;
  double worst = 0;
  for (int draw = 0; draw < 100; ++draw) {
    // A 3-word vocabulary: center, context and one word reused as negatives.
    const std::size_t k = 1 + rng.below(3);
    std::vector<double> vocab_in(3 * dim), vocab_out(3 * dim);
    for (double& x : vocab_in) x = rng.uniform(-1, 1);
    for (double& x : vocab_out) x = rng.uniform(-1, 1);
    std::vector<double> v_c(vocab_in.begin(), vocab_in.begin() + dim);
    std::vector<double> u_o(vocab_out.begin() + dim, vocab_out.begin() + 2 * dim);
    std::vector<double> negs;
    for (std::size_t n = 0; n < k; ++n) {
      const std::size_t w = n % 2 ? 0 : 2;
      negs.insert(negs.end(), vocab_out.begin() + w * dim, vocab_out.begin() + (w + 1) * dim);
    }
    std::vector<double> g_v(dim), g_o(dim), g_n(negs.size());
    dqa::sgns_loss_and_grad<double>(v_c, u_o, negs, g_v, g_o, g_n);
    std::vector<double> n_v, n_o, n_n;
    numeric_grad(v_c, u_o, negs, 1e-5, n_v, n_o, n_n);
    std::vector<double> a = g_v, n = n_v;
    a.insert(a.end(), g_o.begin(), g_o.end());
    a.insert(a.end(), g_n.begin(), g_n.end());
    n.insert(n.end(), n_o.begin(), n_o.end());
    n.insert(n.end(), n_n.begin(), n_n.end());
    worst = std::max(worst, rel_error(a, n));
  }
  INFO("max relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("SGNS loss is stable for large logits") {
  std::vector<double> v{50, 0}, u{50, 0}, negs{-50, 0}, g1(2), g2(2), g3(2);
  const double l = dqa::sgns_loss_and_grad<double>(v, u, negs, g1, g2, g3);
  CHECK(std::isfinite(l));
  CHECK(l < 1e-12);
  std::vector<double> bad_negs{1, 2, 3};
  std::vector<double> g_bad(3);
  CHECK_THROWS_AS(dqa::sgns_loss_and_grad<double>(v, u, bad_negs, g1, g2, g_bad), dqa::DimensionMismatch);
}

TEST_CASE("alpha/beta corpus: context vectors align and loss decreases") {
  dqa::TrainStats stats;
  auto model = dqa::train_sgns(alpha_beta_corpus(), alpha_beta_config(), &stats);
  const auto a = *model.vocab.id("alpha");
  const auto b = *model.vocab.id("beta");
  const double c = dqa::cosine(model.input_row(a), model.output_row(b));
  INFO("cosine(v_alpha, u_beta) = " << c);
  CHECK(c > 0.8);

  REQUIRE(stats.epoch_loss.size() == 5);
  int violations = 0;
  for (std::size_t e = 1; e < stats.epoch_loss.size(); ++e) violations += stats.epoch_loss[e] > stats.epoch_loss[e - 1];
  CHECK(violations <= 1);

  for (float x : model.input_vectors) CHECK_MESSAGE(std::isfinite(x), "non-finite input");

  auto nn = dqa::nearest_neighbors(model, "alpha", 1);
  REQUIRE(nn.size() == 1);
  CHECK(nn[0].first == "beta");
  CHECK(nn[0].second == dqa::cosine(model.input_row(a), model.input_row(b)));
}

TEST_CASE("single-threaded training is bit-reproducible") {
  std::vector<std::vector<std::string>> corpus;
  dqa::Rng rng(5);
  const std::vector<std::string> words = {"risk", "climate", "board", "emissions", "scope", "target", "water"};
  for (int s = 0; s < 300; ++s) {
    std::vector<std::string> sent;
    for (int w = 0; w < 12; ++w) sent.push_back(words[rng.below(words.size())]);
    corpus.push_back(sent);
  }
  auto cfg = seeded(9);
  cfg.dim = 16;
  cfg.min_count = 1;
  auto m1 = dqa::train_sgns(corpus, cfg);
  auto m2 = dqa::train_sgns(corpus, cfg);
  CHECK(m1.input_vectors == m2.input_vectors);
  CHECK(m1.output_vectors == m2.output_vectors);
  CHECK(dqa::serialize_model(m1) == dqa::serialize_model(m2));

  cfg.seed = 10;
  auto m3 = dqa::train_sgns(corpus, cfg);
  CHECK(m3.input_vectors != m1.input_vectors);

  // Concurrent mode only promises finite parameters of the right shape.
  cfg.threads = 3;
  auto par = dqa::train_sgns(corpus, cfg);
  CHECK(par.input_vectors.size() == m1.input_vectors.size());
  for (float x : par.input_vectors) CHECK(std::isfinite(x));
}

TEST_CASE("train_sgns errors") {
  dqa::TrainConfig no_seed;
  CHECK_THROWS_AS(dqa::train_sgns(alpha_beta_corpus(), no_seed), dqa::ConfigError);
  auto cfg = seeded();
  cfg.dim = 0;
  CHECK_THROWS_AS(dqa::train_sgns(alpha_beta_corpus(), cfg), dqa::ConfigError);
  std::vector<std::vector<std::string>> empty;
  CHECK_THROWS_AS(dqa::train_sgns(empty, seeded()), dqa::EmptyVocab);
  auto hot = seeded();
  hot.learning_rate = 1e300;
  hot.subsample_t = 1;
  CHECK_THROWS_AS(dqa::train_sgns(alpha_beta_corpus(), hot), dqa::NonFiniteLoss);
}

TEST_CASE("embed_sentence") {
  dqa::EmbeddingModel m;
  m.dim = 2;
  m.vocab = dqa::build_vocab(std::vector<std::string>{"a", "a", "b"}, 1);
  m.input_vectors = {1.0f, 2.0f, 3.0f, 5.0f};
  m.output_vectors.assign(4, 0.0f);
  CHECK(dqa::embed_sentence(m, "zzz qqq") == std::vector<double>{0, 0});
  CHECK(dqa::embed_sentence(m, "A") == std::vector<double>{1, 2});
  CHECK(dqa::embed_sentence(m, "a, B!") == std::vector<double>{2, 3.5});
}

TEST_CASE("cosine") {
  std::vector<double> v{0.3, -1.2, 4.0};
  CHECK(dqa::cosine(v, v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dqa::cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(dqa::cosine(std::vector<double>{0, 0}, std::vector<double>{1, 2}) == 0.0);
  CHECK_THROWS_AS(dqa::cosine(std::vector<double>{1}, std::vector<double>{1, 2}), dqa::DimensionMismatch);
}

TEST_CASE("nearest_neighbors") {
  dqa::EmbeddingModel m;
  m.dim = 2;
  m.vocab = dqa::build_vocab(std::vector<std::string>{"q", "q", "q", "a", "a", "b", "b", "c"}, 1);
  // ids: q=0, a=1, b=2, c=3; a and b tie with the query.
  m.input_vectors = {1, 0, 2, 0, 3, 0, 0, 1};
  m.output_vectors.assign(8, 0.0f);
  CHECK(dqa::nearest_neighbors(m, "q", 0).empty());
  auto nn = dqa::nearest_neighbors(m, "q", 10, dqa::Exec::serial);
  REQUIRE(nn.size() == 3);
  CHECK(nn[0].first == "a");
  CHECK(nn[1].first == "b");
  CHECK(nn[2] == std::pair<std::string, double>{"c", 0.0});
  CHECK(dqa::nearest_neighbors(m, "q", 10, dqa::Exec::parallel) == nn);
  CHECK_THROWS_AS(dqa::nearest_neighbors(m, "nope", 1), dqa::OutOfVocab);
}

TEST_CASE("model file round-trip") {
  std::vector<std::vector<std::string>> corpus(50, {"net", "zero", "by", "2050"});
  auto cfg = seeded(4);
  cfg.dim = 8;
  cfg.min_count = 1;
  auto m = dqa::train_sgns(corpus, cfg);
  const auto path = std::filesystem::temp_directory_path() / "dqa_test_model.sgns";
  dqa::save_model(m, path);
  auto back = dqa::load_model(path);
  std::filesystem::remove(path);
  CHECK(back.dim == m.dim);
  CHECK(back.vocab.tokens == m.vocab.tokens);
  CHECK(back.vocab.counts == m.vocab.counts);
  CHECK(back.vocab.total_tokens == m.vocab.total_tokens);
  CHECK(back.vocab.min_count == m.vocab.min_count);
  CHECK(back.input_vectors == m.input_vectors);
  CHECK(back.output_vectors == m.output_vectors);
  CHECK(back.train_config.seed == m.train_config.seed);
  CHECK(dqa::model_fingerprint(back) == dqa::model_fingerprint(m));

  const std::string bytes = dqa::serialize_model(m);
  CHECK(bytes.substr(0, 5) == "SGNS1");
  CHECK_THROWS_AS(dqa::deserialize_model("SGNS2"), dqa::FormatError);
  CHECK_THROWS_AS(dqa::deserialize_model(std::string_view(bytes).substr(0, bytes.size() / 2)), dqa::FormatError);
  CHECK_THROWS_AS(dqa::deserialize_model(bytes + "x"), dqa::FormatError);

  // The bare format (no config block) also loads.
  const std::size_t bare = 5 + 8 + [&] {
    std::size_t n = 0;
    for (const auto& t : m.vocab.tokens) n += 4 + t.size() + 8;
    return n;
  }() + 2 * m.input_vectors.size() * 4;
  auto plain = dqa::deserialize_model(std::string_view(bytes).substr(0, bare));
  CHECK(plain.input_vectors == m.input_vectors);
}
