#pragma once

#include <random>
#include <vector>

namespace tabom {

/// Small-n landscape: per-position ideal entropies plus an inverse
/// temperature. Everything downstream enumerates all 2^n unmask sets, so n is
/// hard-capped at 20.
struct EntropyLandscape {
  int n = 0;
  std::vector<double> H;
  double beta = 1.0;

  void validate() const;  // n in [1,20], H.size()==n, H >= 0, beta >= 0
};

/// Exact distribution over all subsets of {0..n-1}. Subset masks index the
/// vectors (bit r set <=> position r unmasked).
struct StateDistribution {
  int n = 0;
  std::vector<double> probs;
  std::vector<double> log_probs;
  double log_z = 0.0;

  int states() const { return 1 << n; }
};

/// Enumerates exp(-beta * sum_{r in U} H_r) for every subset and normalizes.
/// Log-space with max subtraction, so large beta stays finite.
StateDistribution boltzmann_exact(const EntropyLandscape& land);

/// Exact D_KL(target || p) where p is the Boltzmann distribution of the model
/// landscape. Landscapes must share n.
double kl_exact(const StateDistribution& target, const EntropyLandscape& model);

struct RankingLemmaReport {
  int pairs_checked = 0;
  int order_agreements = 0;        // q*(U_b) > q*(U_a) <=> S(U_b) > S(U_a)
  int singletons_checked = 0;
  int singleton_agreements = 0;    // lower H  =>  higher q* on U_base + {r}
  bool all_agree() const {
    return order_agreements == pairs_checked && singleton_agreements == singletons_checked;
  }
};

/// Randomized check that the negative-energy score S(U) = -beta * sum H
/// orders subsets exactly like q* does, including the single-token
/// reduction on shared bases. Exhaustive over all subset pairs when
/// pairs <= 0 (n must then be <= 10).
RankingLemmaReport verify_ranking_lemma(const EntropyLandscape& land, int pairs,
                                        std::mt19937_64& rng);

/// D_KL(q* || uniform over subsets) -- the training/inference mismatch at
/// small n. Equals n*ln2 minus the entropy of q*.
double kl_divergence_uniform_gap(const EntropyLandscape& land);

}  // namespace tabom
