#pragma once

#include <string>
#include <vector>

#include "tabom/store.hpp"

namespace tabom {

/// Step-resolved spread of predictive entropies along live decodes. Variance
/// is population variance (divide by the position count); a step's value is
/// the average over trajectories that had >= 2 eligible masked positions at
/// that step.
struct TdsReport {
  std::string task_id;
  std::string version_tag;
  int trajectory_count = 0;
  std::vector<std::pair<int, double>> per_step;  // (reverse timestep, score)
  double mean = 0.0;                             // over steps with contributors
};

/// Population variance: divide by the count, not count - 1.
double population_variance(const std::vector<double>& xs);

TdsReport tds(const DenoiserParams& params, const std::vector<CorpusPair>& prompts,
              const DecodeSchedule& schedule, int samples_per_prompt, unsigned long long seed,
              const std::string& task_id = "");

/// Mean per-token cross entropy as a function of the masked fraction, for a
/// ground-truth corpus and a self-distilled corpus over the same prompts.
struct MaskRatioCurve {
  std::vector<double> ratios;
  std::vector<double> ce_gt;
  std::vector<double> ce_sd;
};

MaskRatioCurve ce_vs_mask_ratio(const DenoiserParams& params, const std::vector<CorpusPair>& gt,
                                const std::vector<CorpusPair>& sd,
                                const std::vector<double>& ratios, int response_len,
                                unsigned long long seed);

/// Kendall rank correlation between two score lists of equal length (tau-a:
/// concordant minus discordant over all pairs; ties count as neither).
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tabom
