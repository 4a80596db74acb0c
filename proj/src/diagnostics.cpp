#include "swg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "swg/dist.hpp"
#include "swg/errors.hpp"
#include "swg/simulate.hpp"  // quantile_sorted

namespace swg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool constant_input(const ChainsMatrix& m) {
  double mn = m.chains[0][0], mx = mn;
  for (const auto& c : m.chains)
    for (double v : c) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  return !(mx > mn);
}

ChainsMatrix split_chains(const ChainsMatrix& m) {
  ChainsMatrix out;
  long half = m.n_draws() / 2;
  for (const auto& c : m.chains) {
    out.chains.emplace_back(c.begin(), c.begin() + half);
    out.chains.emplace_back(c.end() - half, c.end());  // middle draw dropped when odd
  }
  return out;
}

// pooled average ranks (ties averaged), then Blom inverse-normal scores
ChainsMatrix rank_normalize(const ChainsMatrix& m) {
  long N = m.n_total();
  std::vector<std::pair<double, long>> pool;
  pool.reserve(N);
  long flat = 0;
  for (const auto& c : m.chains)
    for (double v : c) pool.emplace_back(v, flat++);
  std::sort(pool.begin(), pool.end());
  std::vector<double> rank(N);
  long i = 0;
  while (i < N) {
    long j = i;
    while (j + 1 < N && pool[j + 1].first == pool[i].first) ++j;
    double avg = 0.5 * (i + j) + 1.0;
    for (long k = i; k <= j; ++k) rank[pool[k].second] = avg;
    i = j + 1;
  }
  ChainsMatrix out = m;
  flat = 0;
  for (auto& c : out.chains)
    for (double& v : c) v = norm_quantile((rank[flat++] - 0.375) / (N + 0.25));
  return out;
}

double split_rhat_value(const ChainsMatrix& m) {
  int M = m.n_chains();
  long n = m.n_draws();
  std::vector<double> mean(M), var(M);
  for (int j = 0; j < M; ++j) {
    const auto& c = m.chains[j];
    double mu = std::accumulate(c.begin(), c.end(), 0.0) / n;
    double s2 = 0;
    for (double v : c) s2 += (v - mu) * (v - mu);
    mean[j] = mu;
    var[j] = s2 / (n - 1);
  }
  double W = std::accumulate(var.begin(), var.end(), 0.0) / M;
  double grand = std::accumulate(mean.begin(), mean.end(), 0.0) / M;
  double B = 0;
  for (double mu : mean) B += (mu - grand) * (mu - grand);
  B *= static_cast<double>(n) / (M - 1);
  if (!(W > 0)) return 1.0;
  double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

std::vector<double> fold(const ChainsMatrix& m) {
  std::vector<double> pool;
  for (const auto& c : m.chains) pool.insert(pool.end(), c.begin(), c.end());
  std::sort(pool.begin(), pool.end());
  std::vector<double> out;
  out.push_back(quantile_sorted(pool, 0.5));
  return out;
}

// ESS of one (possibly transformed) chains matrix, Geyer initial monotone
// positive sequence truncation on pairwise autocorrelation sums.
double ess_value(const ChainsMatrix& m) {
  int M = m.n_chains();
  long n = m.n_draws();
  std::vector<double> mean(M);
  for (int j = 0; j < M; ++j)
    mean[j] = std::accumulate(m.chains[j].begin(), m.chains[j].end(), 0.0) / n;

  auto acov = [&](int j, long t) {
    const auto& c = m.chains[j];
    double mu = mean[j];
    double acc = 0;
    for (long i = 0; i + t < n; ++i) acc += (c[i] - mu) * (c[i + t] - mu);
    return acc / n;  // biased denominator
  };
  auto mean_acov = [&](long t) {
    double acc = 0;
    for (int j = 0; j < M; ++j) acc += acov(j, t);
    return acc / M;
  };

  double mean_var = mean_acov(0) * n / (n - 1.0);
  double var_plus = mean_var * (n - 1.0) / n;
  if (M > 1) {
    double grand = std::accumulate(mean.begin(), mean.end(), 0.0) / M;
    double vb = 0;
    for (double mu : mean) vb += (mu - grand) * (mu - grand);
    var_plus += vb / (M - 1);
  }
  if (!(var_plus > 0)) return kNaN;

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  rho[1] = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  double rho_even = rho[0], rho_odd = rho[1];
  long t = 0;
  while (t < n - 5 && !std::isnan(rho_even + rho_odd) && rho_even + rho_odd > 0) {
    t += 2;
    rho_even = 1.0 - (mean_var - mean_acov(t)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
    if (rho_even + rho_odd >= 0) {
      rho[t] = rho_even;
      rho[t + 1] = rho_odd;
    }
  }
  long max_t = t;
  // initial monotone sequence: pair sums non-increasing
  for (long k = 2; k <= max_t - 2; k += 2) {
    if (rho[k] + rho[k + 1] > rho[k - 2] + rho[k - 1]) {
      rho[k] = 0.5 * (rho[k - 2] + rho[k - 1]);
      rho[k + 1] = rho[k];
    }
  }
  double tau = -1.0;
  for (long k = 0; k < max_t; ++k) tau += 2.0 * rho[k];
  tau += rho[max_t];
  if (!(tau > 0)) return kNaN;
  return static_cast<double>(M) * n / tau;
}

}  // namespace

void ChainsMatrix::validate() const {
  if (n_chains() < 2) throw InputError("diagnostics need at least 2 chains");
  if (n_draws() < 4) throw InputError("diagnostics need at least 4 draws per chain");
  for (const auto& c : chains)
    if (static_cast<long>(c.size()) != n_draws())
      throw InputError("diagnostics need equally long chains");
}

DiagResult rhat(const ChainsMatrix& m) {
  m.validate();
  if (constant_input(m)) return {1.0, true};
  ChainsMatrix split = split_chains(m);
  double r_bulk = split_rhat_value(rank_normalize(split));
  double med = fold(m)[0];
  ChainsMatrix folded = split;
  for (auto& c : folded.chains)
    for (double& v : c) v = std::fabs(v - med);
  double r_tail = split_rhat_value(rank_normalize(folded));
  return {std::max(r_bulk, r_tail), false};
}

DiagResult ess(const ChainsMatrix& m, EssKind kind) {
  m.validate();
  if (constant_input(m)) return {kNaN, true};
  if (kind == EssKind::bulk) {
    double v = ess_value(rank_normalize(split_chains(m)));
    return {v, std::isnan(v)};
  }
  std::vector<double> pool;
  for (const auto& c : m.chains) pool.insert(pool.end(), c.begin(), c.end());
  std::sort(pool.begin(), pool.end());
  double best = std::numeric_limits<double>::infinity();
  bool degenerate = false;
  for (double q : {0.05, 0.95}) {
    double cut = quantile_sorted(pool, q);
    ChainsMatrix ind = m;
    for (auto& c : ind.chains)
      for (double& v : c) v = v <= cut ? 1.0 : 0.0;
    if (constant_input(ind)) {
      degenerate = true;
      continue;
    }
    double v = ess_value(split_chains(ind));
    if (std::isnan(v))
      degenerate = true;
    else
      best = std::min(best, v);
  }
  if (std::isinf(best)) return {kNaN, true};
  return {best, degenerate};
}

std::vector<double> summarize_percentiles(std::vector<double> values,
                                          const std::vector<double>& percentiles) {
  if (values.empty()) throw InputError("summarize_percentiles: empty input");
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(percentiles.size());
  for (double p : percentiles) out.push_back(quantile_sorted(values, p / 100.0));
  return out;
}

}  // namespace swg
