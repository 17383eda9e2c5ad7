#include "dqa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dqa/classifier.hpp"
#include "dqa/embeddings.hpp"
#include "dqa/rng.hpp"

namespace dqa {

namespace {

double rel_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nn);
  return denom == 0 ? 0 : std::sqrt(diff) / denom;
}

// Central differences of f over every coordinate of `params`.
std::vector<double> numeric_grad(std::vector<double>& params, double h, const std::function<double()>& f) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + h;
    const double up = f();
    params[i] = orig - h;
    const double down = f();
    params[i] = orig;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace

GradCheckResult check_sgns_gradient(std::size_t draws, std::uint64_t seed) {
  constexpr std::size_t dim = 4;
  Rng rng(seed);
  GradCheckResult out{draws, 0};
  for (std::size_t draw = 0; draw < draws; ++draw) {
    const std::size_t k = 1 + rng.below(3);
    // Parameters laid out [v_c | u_o | negatives...]; negatives are copies of
    // one out-vector, so each copy gets its own gradient slot.
    std::vector<double> p((2 + k) * dim);
    for (double& x : p) x = rng.uniform(-1, 1);
    auto loss = [&] {
      std::vector<double> gv(dim), go(dim), gn(k * dim);
      const std::span<const double> all(p);
      return sgns_loss_and_grad<double>(all.subspan(0, dim), all.subspan(dim, dim), all.subspan(2 * dim), gv, go,
                                        gn);
    };
    std::vector<double> gv(dim), go(dim), gn(k * dim);
    const std::span<const double> all(p);
    sgns_loss_and_grad<double>(all.subspan(0, dim), all.subspan(dim, dim), all.subspan(2 * dim), gv, go, gn);
    std::vector<double> analytic = gv;
    analytic.insert(analytic.end(), go.begin(), go.end());
    analytic.insert(analytic.end(), gn.begin(), gn.end());
    out.max_rel_error = std::max(out.max_rel_error, rel_error(analytic, numeric_grad(p, 1e-5, loss)));
  }
  return out;
}

GradCheckResult check_classifier_gradient(std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t F = feature_dim_for(3);
  GradCheckResult out{draws, 0};
  for (std::size_t draw = 0; draw < draws; ++draw) {
    std::vector<std::vector<double>> xs(20, std::vector<double>(F));
    std::vector<char> y(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (double& v : xs[i]) v = rng.uniform(-1, 1);
      y[i] = rng.below(3) == 0;
    }
    // Parameters laid out [w | b].
    std::vector<double> p(F + 1);
    for (double& v : p) v = rng.uniform(-1, 1);
    const double cw = rng.uniform(1, 10), l2 = rng.uniform(0, 0.5);
    std::vector<double> scratch(F);
    auto objective = [&] {
      double gb = 0;
      return classifier_objective(std::span<const double>(p).first(F), p[F], xs, y, cw, l2, scratch, gb);
    };
    std::vector<double> g(F);
    double gb = 0;
    classifier_objective(std::span<const double>(p).first(F), p[F], xs, y, cw, l2, g, gb);
    g.push_back(gb);
    out.max_rel_error = std::max(out.max_rel_error, rel_error(g, numeric_grad(p, 1e-6, objective)));
  }
  return out;
}

}  // namespace dqa
