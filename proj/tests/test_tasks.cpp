#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "tabom/tasks.hpp"

using namespace tabom;

namespace {

std::vector<int> ids(const Vocabulary& v, const std::vector<std::string>& toks) {
  std::vector<int> out;
  for (auto& t : toks) out.push_back(v.id_of(t));
  return out;
}

}  // namespace

TEST_CASE("task definitions") {
  auto v = task_vocabulary();
  auto copy = get_task("copy", v);
  CHECK(copy.answer(ids(v, {"<copy>", "a", "b", "c"})) == ids(v, {"a", "b", "c"}));
  auto rev = get_task("reverse", v);
  CHECK(rev.answer(ids(v, {"<rev>", "a", "b", "c"})) == ids(v, {"c", "b", "a"}));
  auto sort = get_task("sort", v);
  CHECK(sort.answer(ids(v, {"<sort>", "3", "1", "2"})) == ids(v, {"1", "2", "3"}));
  auto modsum = get_task("modsum", v);
  // 5 + 9 mod 7 -> 0
  CHECK(modsum.answer(ids(v, {"<mod>", "5", "+", "9", "mod", "7"})) == ids(v, {"0"}));
  CHECK_THROWS_AS(get_task("nope", v), std::invalid_argument);
}

TEST_CASE("checker soundness over random prompts") {
  auto v = task_vocabulary();
  std::mt19937_64 rng(1);
  for (auto& id : builtin_task_ids()) {
    auto t = get_task(id, v);
    for (int i = 0; i < 200; ++i) {
      auto p = t.gen_prompt(rng);
      CHECK(t.check(p, t.answer(p)));
      auto wrong = t.answer(p);
      wrong.push_back(v.eos_id == wrong.back() ? 0 : wrong.back());
      CHECK_FALSE(t.check(p, wrong));
    }
  }
}

TEST_CASE("corpus determinism and uniqueness") {
  auto v = task_vocabulary();
  auto t = get_task("sort", v);
  auto a = generate_corpus(t, v, 50, 42);
  auto b = generate_corpus(t, v, 50, 42);
  REQUIRE(a.size() == 50);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].prompt == b[i].prompt);
    CHECK(a[i].answer == b[i].answer);
  }
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = i + 1; j < a.size(); ++j) CHECK(a[i].prompt != a[j].prompt);
}

TEST_CASE("corpus exhaustion names achievable max") {
  auto v = task_vocabulary();
  auto t = get_task("modsum", v);  // only 10*10*8 = 800 distinct instances
  CHECK_THROWS_AS(generate_corpus(t, v, 5000, 1), std::runtime_error);
}

TEST_CASE("strip/pad helpers") {
  auto v = task_vocabulary();
  int e = v.eos_id;
  CHECK(strip_eos({4, 5, e, 6}, e) == std::vector<int>{4, 5});
  CHECK(pad_answer({4, 5}, e, 5) == std::vector<int>{4, 5, e, e, e});
  CHECK_THROWS_AS(pad_answer({1, 2, 3}, e, 2), std::invalid_argument);
}

TEST_CASE("evaluate: untrained model near chance, determinism") {
  auto v = task_vocabulary();
  DenoiserConfig c;
  c.layers = 1;
  c.heads = 2;
  c.model_dim = 16;
  c.ffn_dim = 32;
  c.max_prompt_len = 8;
  c.max_response_len = 8;
  c.seed = 2;
  auto params = DenoiserParams::init(c, v, "eval-test");
  auto t = get_task("copy", v);
  auto sched = DecodeSchedule::uniform(8, 1);
  auto r1 = evaluate(params, t, sched, 20, 7);
  auto r2 = evaluate(params, t, sched, 20, 7);
  CHECK(r1.exact_match == r2.exact_match);
  CHECK(r1.exact_match < 0.2);  // chance level on copy is ~(1/8)^k
  CHECK(r1.samples == 20);
}
