#include "tabom/store.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace tabom {

std::vector<TrajectoryRecord> distill(const DenoiserParams& base, const TaskSpec& task,
                                      const std::vector<CorpusPair>& prompts,
                                      const DistillConfig& cfg, DistillSummary* summary) {
  if (cfg.max_new_tokens > base.config.max_response_len)
    throw std::invalid_argument("distill: max_new_tokens exceeds model response capacity");
  DecodeSchedule sched = cfg.schedule;
  if (sched.per_step.empty()) sched = DecodeSchedule::uniform(cfg.max_new_tokens, 1);

  std::mt19937_64 rng(cfg.seed);
  DistillSummary sum;
  std::vector<TrajectoryRecord> out;
  for (auto& pair : prompts) {
    auto res = decode(base, pair.prompt, sched, rng, true);
    ++sum.generated;
    bool valid = false;
    try {
      valid = task.check(pair.prompt, strip_eos(res.tokens, base.vocab.eos_id));
    } catch (...) {
      valid = false;  // malformed output marks the record invalid, never aborts
    }
    if (valid) ++sum.valid;
    res.trajectory.valid = valid;
    if (valid || cfg.keep_invalid)
      out.push_back({task.id, pair.prompt, res.tokens, std::move(res.trajectory)});
  }
  if (summary) *summary = sum;
  return out;
}

void save_corpus(const std::vector<TrajectoryRecord>& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_corpus: cannot open " + path);
  for (auto& rec : corpus) {
    nlohmann::json j;
    j["task"] = rec.task_id;
    j["prompt"] = rec.prompt;
    j["answer"] = rec.answer;
    j["generator"] = rec.trajectory.generator_tag;
    j["valid"] = rec.trajectory.valid;
    nlohmann::json evs = nlohmann::json::array();
    for (auto& e : rec.trajectory.events)
      evs.push_back({e.position, e.token, e.step, e.entropy, e.tie_rank});
    j["events"] = evs;
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("save_corpus: write failed for " + path);
}

std::vector<TrajectoryRecord> load_corpus(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_corpus: cannot open " + path);
  std::vector<TrajectoryRecord> out;
  std::string line;
  int lineno = 0;
  double max_h = std::log(static_cast<double>(vocab.base_size()));
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    TrajectoryRecord rec;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      rec.task_id = j.at("task").get<std::string>();
      rec.prompt = j.at("prompt").get<std::vector<int>>();
      rec.answer = j.at("answer").get<std::vector<int>>();
      rec.trajectory.prompt = rec.prompt;
      rec.trajectory.generator_tag = j.at("generator").get<std::string>();
      rec.trajectory.valid = j.at("valid").get<bool>();
      for (auto& e : j.at("events")) {
        if (!e.is_array() || e.size() != 5)
          throw std::runtime_error("field 'events': expected 5-tuples");
        rec.trajectory.events.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(),
                                         e[3].get<double>(), e[4].get<int>()});
      }
    } catch (const std::exception& ex) {
      throw std::runtime_error("load_corpus: " + path + ":" + std::to_string(lineno) + ": " +
                               ex.what());
    }
    try {
      rec.trajectory.check_invariants(static_cast<int>(rec.answer.size()), max_h);
      if (rec.trajectory.events.size() != rec.answer.size())
        throw std::invalid_argument("events do not cover every answer position");
      if (rec.trajectory.final_tokens() != rec.answer)
        throw std::invalid_argument("events disagree with the stored answer");
    } catch (const std::exception& ex) {
      throw std::runtime_error("load_corpus: " + path + ":" + std::to_string(lineno) +
                               ": invariant violation: " + ex.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace tabom
