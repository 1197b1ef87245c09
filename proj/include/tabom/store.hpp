#pragma once

#include <string>
#include <vector>

#include "tabom/decoder.hpp"
#include "tabom/tasks.hpp"

namespace tabom {

/// On-disk trajectory record: one JSON object per line. Entropies round-trip
/// bit-exactly (shortest round-trip decimal representation).
struct TrajectoryRecord {
  std::string task_id;
  std::vector<int> prompt;
  std::vector<int> answer;  // full decoded x0 (length N, EOS padding included)
  Trajectory trajectory;    // prompt/events/generator_tag/valid
};

struct DistillConfig {
  int max_new_tokens = 8;
  DecodeSchedule schedule;   // per_step rebuilt from max_new_tokens if empty
  bool keep_invalid = false;
  unsigned long long seed = 0;
};

struct DistillSummary {
  int generated = 0;
  int valid = 0;
  double yield_ratio() const { return generated ? static_cast<double>(valid) / generated : 0.0; }
};

/// Decodes one trajectory per prompt from the frozen base model, marks
/// validity with the task checker, and keeps valid ones (all, if
/// keep_invalid).
std::vector<TrajectoryRecord> distill(const DenoiserParams& base, const TaskSpec& task,
                                      const std::vector<CorpusPair>& prompts,
                                      const DistillConfig& cfg, DistillSummary* summary = nullptr);

void save_corpus(const std::vector<TrajectoryRecord>& corpus, const std::string& path);

/// Throws on parse failure or invariant violation, naming the line.
std::vector<TrajectoryRecord> load_corpus(const std::string& path, const Vocabulary& vocab);

}  // namespace tabom
