#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tabom/decoder.hpp"

namespace tabom {

/// One synthetic token-level task: a seeded prompt generator, a deterministic
/// ground-truth answer function and a checker. Answers never include the EOS
/// token; padding to the response length is done by the consumers.
struct TaskSpec {
  std::string id;
  std::function<std::vector<int>(std::mt19937_64&)> gen_prompt;
  std::function<std::vector<int>(const std::vector<int>&)> answer;
  std::function<bool(const std::vector<int>&, const std::vector<int>&)> check;
};

struct EvalResult {
  std::string task_id;
  double exact_match = 0.0;
  int samples = 0;
  std::string version_tag;
  std::string schedule_desc;
};

/// Shared token alphabet for all built-in tasks: task tags, digits, letters,
/// arithmetic glue and EOS.
Vocabulary task_vocabulary();

/// Built-in tasks: copy, reverse, sort, modsum.
TaskSpec get_task(const std::string& id, const Vocabulary& vocab);
std::vector<std::string> builtin_task_ids();

struct CorpusPair {
  std::vector<int> prompt;
  std::vector<int> answer;  // without EOS padding
};

/// Deterministic per seed; prompts unique while the task admits enough
/// distinct instances (throws naming the achievable max otherwise).
std::vector<CorpusPair> generate_corpus(const TaskSpec& spec, const Vocabulary& vocab, int n,
                                        unsigned long long seed);

EvalResult evaluate(const DenoiserParams& params, const TaskSpec& spec,
                    const DecodeSchedule& schedule, int n, unsigned long long seed);

/// Answer candidate extracted from a decoded sequence: tokens before the
/// first EOS.
std::vector<int> strip_eos(const std::vector<int>& x0, int eos_id);

/// Pad an answer with EOS tokens to length n.
std::vector<int> pad_answer(const std::vector<int>& answer, int eos_id, int n);

}  // namespace tabom
