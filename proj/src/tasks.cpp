#include "tabom/tasks.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace tabom {

Vocabulary task_vocabulary() {
  Vocabulary v;
  v.tokens = {"<copy>", "<rev>", "<sort>", "<mod>"};
  for (int d = 0; d <= 9; ++d) v.tokens.push_back(std::to_string(d));
  for (char c = 'a'; c <= 'h'; ++c) v.tokens.push_back(std::string(1, c));
  v.tokens.push_back("+");
  v.tokens.push_back("mod");
  v.tokens.push_back("<eos>");
  v.eos_id = v.id_of("<eos>");
  return v;
}

namespace {

constexpr int kMinLen = 3;
constexpr int kMaxLen = 6;

std::vector<int> random_span(std::mt19937_64& rng, int lo_id, int hi_id) {
  std::uniform_int_distribution<int> len(kMinLen, kMaxLen);
  std::uniform_int_distribution<int> tok(lo_id, hi_id);
  std::vector<int> out(len(rng));
  for (auto& t : out) t = tok(rng);
  return out;
}

}  // namespace

std::vector<std::string> builtin_task_ids() { return {"copy", "reverse", "sort", "modsum"}; }

TaskSpec get_task(const std::string& id, const Vocabulary& vocab) {
  const int d0 = vocab.id_of("0");
  const int a0 = vocab.id_of("a");
  const int h0 = vocab.id_of("h");
  const int plus = vocab.id_of("+");
  const int mod = vocab.id_of("mod");

  TaskSpec t;
  t.id = id;
  if (id == "copy") {
    int tag = vocab.id_of("<copy>");
    t.gen_prompt = [tag, a0, h0](std::mt19937_64& rng) {
      auto body = random_span(rng, a0, h0);
      body.insert(body.begin(), tag);
      return body;
    };
    t.answer = [](const std::vector<int>& p) {
      return std::vector<int>(p.begin() + 1, p.end());
    };
  } else if (id == "reverse") {
    int tag = vocab.id_of("<rev>");
    t.gen_prompt = [tag, a0, h0](std::mt19937_64& rng) {
      auto body = random_span(rng, a0, h0);
      body.insert(body.begin(), tag);
      return body;
    };
    t.answer = [](const std::vector<int>& p) {
      std::vector<int> a(p.begin() + 1, p.end());
      std::reverse(a.begin(), a.end());
      return a;
    };
  } else if (id == "sort") {
    int tag = vocab.id_of("<sort>");
    t.gen_prompt = [tag, d0](std::mt19937_64& rng) {
      auto body = random_span(rng, d0, d0 + 9);
      body.insert(body.begin(), tag);
      return body;
    };
    t.answer = [](const std::vector<int>& p) {
      std::vector<int> a(p.begin() + 1, p.end());
      std::sort(a.begin(), a.end());
      return a;
    };
  } else if (id == "modsum") {
    int tag = vocab.id_of("<mod>");
    t.gen_prompt = [tag, d0, plus, mod](std::mt19937_64& rng) {
      std::uniform_int_distribution<int> digit(0, 9);
      std::uniform_int_distribution<int> modulus(2, 9);
      return std::vector<int>{tag, d0 + digit(rng), plus, d0 + digit(rng), mod,
                              d0 + modulus(rng)};
    };
    t.answer = [d0](const std::vector<int>& p) {
      int x = p[1] - d0, y = p[3] - d0, m = p[5] - d0;
      return std::vector<int>{d0 + (x + y) % m};
    };
  } else {
    throw std::invalid_argument("get_task: unknown task '" + id + "'");
  }
  auto ans = t.answer;
  t.check = [ans](const std::vector<int>& prompt, const std::vector<int>& candidate) {
    return candidate == ans(prompt);
  };
  return t;
}

std::vector<CorpusPair> generate_corpus(const TaskSpec& spec, const Vocabulary& /*vocab*/, int n,
                                        unsigned long long seed) {
  if (n < 1) throw std::invalid_argument("generate_corpus: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<CorpusPair> out;
  std::set<std::vector<int>> seen;
  long long attempts = 0;
  long long max_attempts = 200LL * n + 10000;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > max_attempts)
      throw std::runtime_error("generate_corpus: task '" + spec.id + "' exhausted after " +
                               std::to_string(out.size()) + " unique prompts (requested " +
                               std::to_string(n) + ")");
    auto prompt = spec.gen_prompt(rng);
    if (!seen.insert(prompt).second) continue;
    out.push_back({prompt, spec.answer(prompt)});
  }
  return out;
}

std::vector<int> strip_eos(const std::vector<int>& x0, int eos_id) {
  std::vector<int> out;
  for (int t : x0) {
    if (t == eos_id) break;
    out.push_back(t);
  }
  return out;
}

std::vector<int> pad_answer(const std::vector<int>& answer, int eos_id, int n) {
  if (static_cast<int>(answer.size()) >= n && static_cast<int>(answer.size()) != n)
    throw std::invalid_argument("pad_answer: answer longer than response length");
  std::vector<int> out = answer;
  out.resize(n, eos_id);
  return out;
}

EvalResult evaluate(const DenoiserParams& params, const TaskSpec& spec,
                    const DecodeSchedule& schedule, int n, unsigned long long seed) {
  auto corpus = generate_corpus(spec, params.vocab, n, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  int matches = 0;
  for (auto& pair : corpus) {
    auto res = decode(params, pair.prompt, schedule, rng, false);
    auto candidate = strip_eos(res.tokens, params.vocab.eos_id);
    if (spec.check(pair.prompt, candidate)) ++matches;
  }
  EvalResult r;
  r.task_id = spec.id;
  r.exact_match = static_cast<double>(matches) / n;
  r.samples = n;
  r.version_tag = params.version_tag;
  r.schedule_desc = "b=" + std::to_string(schedule.per_step.empty() ? 0 : schedule.per_step[0]) +
                    ",T=" + std::to_string(schedule.temperature);
  return r;
}

}  // namespace tabom
