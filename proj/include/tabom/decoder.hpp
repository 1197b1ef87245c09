#pragma once

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "tabom/denoiser.hpp"

namespace tabom {

/// Partially decoded response. tokens[r] == mask_id exactly when r is masked.
struct MaskedState {
  std::vector<int> tokens;
  int timestep = 0;

  std::vector<int> masked_positions(int mask_id) const;
  std::vector<int> unmasked_positions(int mask_id) const;
};

struct DecodeSchedule {
  std::vector<int> per_step;  // b_t, front = first executed step (t = T)
  double temperature = 0.0;
  double top_p = 1.0;

  int total() const;
  static DecodeSchedule uniform(int n, int b, double temperature = 0.0, double top_p = 1.0);
};

struct DecodeEvent {
  int position;
  int token;
  int step;            // reverse timestep at decode (T..1)
  double entropy;      // H of the raw model row under the decode-time context
  int tie_rank;        // ordinal within the step, ascending entropy
};

struct Trajectory {
  std::vector<int> prompt;
  std::vector<DecodeEvent> events;  // decode order
  std::string generator_tag;
  bool valid = false;

  std::vector<int> final_tokens() const;  // reconstructs x0 from the events
  void check_invariants(int n, double max_entropy) const;  // throws on violation
};

struct DecodeResult {
  std::vector<int> tokens;  // x0
  Trajectory trajectory;
};

/// Bottom-b selection over per-masked-position entropies; ties broken by
/// lower position index. Returns positions ordered by ascending
/// (entropy, position) so the order doubles as the tie rank.
std::vector<int> select_unmask(const std::vector<int>& masked,
                               const std::vector<double>& entropies, int b);

/// Observer invoked once per executed step with the pre-commit state and the
/// full probability rows of that step's forward pass.
using StepObserver =
    std::function<void(int step, const MaskedState& state, const Array& rows)>;

DecodeResult decode(const DenoiserParams& params, const std::vector<int>& prompt,
                    const DecodeSchedule& schedule, std::mt19937_64& rng,
                    bool record = true, const StepObserver& observer = {});

/// Index of the first EOS plus one (positions strictly after the first EOS
/// are ignored downstream), or n when no EOS is present.
int effective_length(const std::vector<int>& x0, int eos_id);

/// Sample a token id from a probability row after temperature / top-p
/// transformation. temperature == 0 means argmax (ties to the lowest id).
int sample_row(std::span<const double> row, double temperature, double top_p,
               std::mt19937_64& rng);

}  // namespace tabom
