#include "tabom/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace tabom {

double population_variance(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("population_variance: empty sample");
  // identical samples (e.g. every row exactly uniform) must give exactly 0,
  // not the ~1e-32 residue of mean round-off
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs[0]; })) return 0.0;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - m) * (x - m);
  return var / xs.size();
}

TdsReport tds(const DenoiserParams& params, const std::vector<CorpusPair>& prompts,
              const DecodeSchedule& schedule, int samples_per_prompt, unsigned long long seed,
              const std::string& task_id) {
  if (samples_per_prompt < 1)
    throw std::invalid_argument("tds: samples_per_prompt must be >= 1");
  if (prompts.empty()) throw std::invalid_argument("tds: no prompts");

  int base = params.vocab.base_size();
  int eos = params.vocab.eos_id;
  int mask = params.vocab.mask_id();

  std::map<int, std::pair<double, int>> acc;  // step -> (variance sum, contributors)
  std::mt19937_64 rng(seed);
  int count = 0;
  for (auto& pr : prompts) {
    for (int s = 0; s < samples_per_prompt; ++s) {
      auto observer = [&](int step, const MaskedState& state, const Array& rows) {
        // the effective region ends at the first EOS committed so far
        int n = static_cast<int>(state.tokens.size());
        int eff = n;
        for (int i = 0; i < n; ++i)
          if (state.tokens[i] == eos) {
            eff = i + 1;
            break;
          }
        std::vector<double> hs;
        for (int i = 0; i < eff; ++i)
          if (state.tokens[i] == mask)
            hs.push_back(token_entropy(std::span<const double>(&rows.data[i * base], base)));
        if (hs.size() < 2) return;  // nothing to spread over
        auto& slot = acc[step];
        slot.first += population_variance(hs);
        slot.second += 1;
      };
      decode(params, pr.prompt, schedule, rng, false, observer);
      ++count;
    }
  }

  TdsReport rep;
  rep.task_id = task_id;
  rep.version_tag = params.version_tag;
  rep.trajectory_count = count;
  double total = 0.0;
  // execution order: largest reverse timestep first
  for (auto it = acc.rbegin(); it != acc.rend(); ++it) {
    double v = it->second.first / it->second.second;
    rep.per_step.push_back({it->first, v});
    total += v;
  }
  rep.mean = rep.per_step.empty() ? 0.0 : total / rep.per_step.size();
  return rep;
}

MaskRatioCurve ce_vs_mask_ratio(const DenoiserParams& params, const std::vector<CorpusPair>& gt,
                                const std::vector<CorpusPair>& sd,
                                const std::vector<double>& ratios, int response_len,
                                unsigned long long seed) {
  if (gt.empty() || sd.empty()) throw std::invalid_argument("ce_vs_mask_ratio: empty corpus");
  if (gt.size() != sd.size())
    throw std::invalid_argument("ce_vs_mask_ratio: corpora differ in size");
  for (size_t i = 0; i < gt.size(); ++i)
    if (gt[i].prompt != sd[i].prompt)
      throw std::invalid_argument("ce_vs_mask_ratio: corpora must share prompts, item " +
                                  std::to_string(i));

  int base = params.vocab.base_size();
  int mask = params.vocab.mask_id();
  MaskRatioCurve curve;
  for (size_t ri = 0; ri < ratios.size(); ++ri) {
    double rho = ratios[ri];
    if (!(rho > 0.0 && rho < 1.0))
      throw std::invalid_argument("ce_vs_mask_ratio: ratios must lie in (0,1)");
    // same seed, hence the same masks, for both corpora at this ratio
    std::mt19937_64 rng(seed + ri);
    int k = std::max(1, static_cast<int>(std::lround(rho * response_len)));
    double sum_gt = 0.0, sum_sd = 0.0;
    int tokens = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
      std::vector<int> idx(response_len);
      for (int j = 0; j < response_len; ++j) idx[j] = j;
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(k);

      auto eval = [&](const CorpusPair& pr) {
        auto full = pad_answer(pr.answer, params.vocab.eos_id, response_len);
        auto xt = full;
        for (int j : idx) xt[j] = mask;
        Array rows = predict(params, pr.prompt, xt);
        double s = 0.0;
        for (int j : idx) s += -std::log(rows.data[j * base + full[j]]);
        return s;
      };
      sum_gt += eval(gt[i]);
      sum_sd += eval(sd[i]);
      tokens += k;
    }
    curve.ratios.push_back(rho);
    curve.ce_gt.push_back(sum_gt / tokens);
    curve.ce_sd.push_back(sum_sd / tokens);
  }
  return curve;
}

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("kendall_tau: need two equal-length lists of >= 2 scores");
  int n = static_cast<int>(a.size());
  int concordant = 0, discordant = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double x = a[i] - a[j], y = b[i] - b[j];
      if (x * y > 0) ++concordant;
      else if (x * y < 0) ++discordant;
    }
  return static_cast<double>(concordant - discordant) / (0.5 * n * (n - 1));
}

}  // namespace tabom
