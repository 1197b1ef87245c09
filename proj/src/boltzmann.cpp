#include "tabom/boltzmann.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tabom {

void EntropyLandscape::validate() const {
  if (n < 1 || n > 20)
    throw std::invalid_argument("EntropyLandscape: n must be in [1,20], got " + std::to_string(n));
  if (static_cast<int>(H.size()) != n)
    throw std::invalid_argument("EntropyLandscape: H has " + std::to_string(H.size()) +
                                " entries for n=" + std::to_string(n));
  for (double h : H)
    if (!(h >= 0.0)) throw std::invalid_argument("EntropyLandscape: entropies must be >= 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("EntropyLandscape: beta must be >= 0");
}

namespace {

double subset_energy(const EntropyLandscape& land, int mask) {
  double s = 0.0;
  for (int r = 0; r < land.n; ++r)
    if (mask & (1 << r)) s += land.H[r];
  return -land.beta * s;  // S(U)
}

}  // namespace

StateDistribution boltzmann_exact(const EntropyLandscape& land) {
  land.validate();
  StateDistribution d;
  d.n = land.n;
  int m = 1 << land.n;
  std::vector<double> logw(m);
  double mx = -1e300;
  for (int u = 0; u < m; ++u) {
    logw[u] = subset_energy(land, u);
    mx = std::max(mx, logw[u]);
  }
  double acc = 0.0;
  for (int u = 0; u < m; ++u) acc += std::exp(logw[u] - mx);
  d.log_z = mx + std::log(acc);
  d.log_probs.resize(m);
  d.probs.resize(m);
  for (int u = 0; u < m; ++u) {
    d.log_probs[u] = logw[u] - d.log_z;
    d.probs[u] = std::exp(d.log_probs[u]);
  }
  return d;
}

double kl_exact(const StateDistribution& target, const EntropyLandscape& model) {
  if (model.n != target.n)
    throw std::invalid_argument("kl_exact: landscape n=" + std::to_string(model.n) +
                                " does not match distribution n=" + std::to_string(target.n));
  StateDistribution p = boltzmann_exact(model);
  double kl = 0.0;
  for (int u = 0; u < target.states(); ++u)
    kl += target.probs[u] * (target.log_probs[u] - p.log_probs[u]);
  return std::max(kl, 0.0);  // clamp the last ulp of rounding noise
}

RankingLemmaReport verify_ranking_lemma(const EntropyLandscape& land, int pairs,
                                        std::mt19937_64& rng) {
  land.validate();
  StateDistribution q = boltzmann_exact(land);
  RankingLemmaReport rep;
  int m = 1 << land.n;

  auto check_pair = [&](int a, int b) {
    ++rep.pairs_checked;
    bool by_q = q.probs[b] > q.probs[a];
    bool by_s = subset_energy(land, b) > subset_energy(land, a);
    if (by_q == by_s) ++rep.order_agreements;
  };

  if (pairs <= 0) {
    if (land.n > 10)
      throw std::invalid_argument("verify_ranking_lemma: exhaustive mode needs n <= 10");
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) check_pair(a, b);
  } else {
    std::uniform_int_distribution<int> pick(0, m - 1);
    for (int k = 0; k < pairs; ++k) check_pair(pick(rng), pick(rng));
  }

  // single-token reduction: shared base, one extra position each side
  std::uniform_int_distribution<int> pick(0, m - 1);
  std::uniform_int_distribution<int> pos(0, land.n - 1);
  int rounds = pairs <= 0 ? m : pairs;
  for (int k = 0; k < rounds; ++k) {
    int base = pick(rng);
    int r = pos(rng), s = pos(rng);
    if (r == s || (base & (1 << r)) || (base & (1 << s))) continue;
    if (land.H[r] == land.H[s] || land.beta == 0.0) continue;  // no strict claim
    ++rep.singletons_checked;
    int lo = land.H[r] < land.H[s] ? r : s;
    int hi = lo == r ? s : r;
    if (q.probs[base | (1 << lo)] > q.probs[base | (1 << hi)]) ++rep.singleton_agreements;
  }
  return rep;
}

double kl_divergence_uniform_gap(const EntropyLandscape& land) {
  StateDistribution q = boltzmann_exact(land);
  double gap = 0.0;
  double log_u = -land.n * std::log(2.0);
  for (int u = 0; u < q.states(); ++u) gap += q.probs[u] * (q.log_probs[u] - log_u);
  return std::max(gap, 0.0);
}

}  // namespace tabom
