#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tabom/store.hpp"

namespace tabom {

enum class ContextMode { Exact, Shared };
enum class WindowScope { Local, Global };

struct TabomConfig {
  int window = 4;
  double margin = 0.2;   // gamma
  double lambda = 1.0;   // ranking weight; beta is absorbed into margin and lambda
  ContextMode context_mode = ContextMode::Exact;
  WindowScope window_scope = WindowScope::Local;

  void validate() const;  // window >= 2 whenever lambda > 0
};

/// A local trajectory slice: context U_t, the next W decoded positions
/// (delta, as indices into the record's event list) and every ordered pair
/// respecting decode order (earlier first).
struct WindowSegment {
  const TrajectoryRecord* record = nullptr;
  std::vector<int> context;                 // positions in U_t
  std::vector<int> delta;                   // event indices, decode order
  std::vector<std::pair<int, int>> pairs;   // indices into delta: (earlier, later)

  int width() const { return static_cast<int>(delta.size()); }
};

/// Picks a uniformly random boundary over the EOS-truncated event list such
/// that >= W events follow. Returns nullopt when the trajectory is too short
/// (the caller resamples another trajectory). With Global scope the window
/// extends to the trajectory end.
std::optional<WindowSegment> sample_window(const TrajectoryRecord& rec, int W, int eos_id,
                                           std::mt19937_64& rng,
                                           WindowScope scope = WindowScope::Local);

/// Score-level ranking hinge: mean over pairs of max(0, h[r] - h[s] + margin).
double hinge_rank_from_scores(const std::vector<double>& h,
                              const std::vector<std::pair<int, int>>& pairs, double margin);

struct LossNodes {
  int total = -1;
  int recon = -1;
  int rank = -1;      // -1 when no ranking term was built
  int pair_count = 0;
  int violated_pairs = 0;
};

/// Tape-level builders (used by finetune; gradients flow into bound params).
LossNodes build_tabom_loss(Tape& tape, const DenoiserParams& params, const BoundParams& bound,
                           const WindowSegment& segment, const TabomConfig& cfg);
LossNodes build_ranking_loss(Tape& tape, const DenoiserParams& params, const BoundParams& bound,
                             const WindowSegment& segment, const TabomConfig& cfg);
int build_nelbo_loss(Tape& tape, const DenoiserParams& params, const BoundParams& bound,
                     const std::vector<int>& prompt, const std::vector<int>& answer,
                     std::mt19937_64& rng);
int build_dinfer_loss(Tape& tape, const DenoiserParams& params, const BoundParams& bound,
                      const TrajectoryRecord& rec, std::mt19937_64& rng);
/// Compressed transition with explicit event boundaries 0 <= from < to <= E
/// over the EOS-truncated event list.
int build_dinfer_loss_at(Tape& tape, const DenoiserParams& params, const BoundParams& bound,
                         const TrajectoryRecord& rec, int from_boundary, int to_boundary);

/// Value-only conveniences.
double nelbo_loss(const DenoiserParams& params, const std::vector<int>& prompt,
                  const std::vector<int>& answer, std::mt19937_64& rng);
double ranking_loss(const DenoiserParams& params, const WindowSegment& segment,
                    const TabomConfig& cfg);
double tabom_loss(const DenoiserParams& params, const WindowSegment& segment,
                  const TabomConfig& cfg);
double dinfer_loss(const DenoiserParams& params, const TrajectoryRecord& rec,
                   std::mt19937_64& rng);

enum class Objective { SftGt, SftSd, TrajMask, Dinfer, Tabom };
Objective objective_from_string(const std::string& name);
std::string objective_name(Objective o);

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  int warmup_steps = 50;
  int epochs = 5;
  int batch_size = 8;
  unsigned long long seed = 0;
};

/// Training data: ground-truth pairs for SftGt, trajectories otherwise.
struct TrainCorpus {
  std::vector<CorpusPair> pairs;
  std::vector<TrajectoryRecord> trajectories;
  int response_len = 0;  // padding target for GT answers
};

struct StepTelemetry {
  int step = 0;
  std::string objective;
  double loss = 0.0;
  double recon = 0.0;
  double rank = 0.0;
  double violated_pair_fraction = 0.0;
};
using TelemetrySink = std::function<void(const StepTelemetry&)>;

/// AdamW with linear warmup and cosine decay. Throws on NaN loss, naming the
/// offending batch. Returns updated params with a derived version tag.
DenoiserParams finetune(const DenoiserParams& start, const TrainCorpus& corpus, Objective obj,
                        const TabomConfig& tcfg, const OptimizerConfig& ocfg,
                        const TelemetrySink& sink = {});

}  // namespace tabom
