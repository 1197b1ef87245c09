#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "tabom/store.hpp"

using namespace tabom;

namespace {

DenoiserParams toy_model(unsigned long long seed = 3) {
  DenoiserConfig c;
  c.layers = 1;
  c.heads = 2;
  c.model_dim = 16;
  c.ffn_dim = 32;
  c.max_prompt_len = 8;
  c.max_response_len = 8;
  c.seed = seed;
  return DenoiserParams::init(c, task_vocabulary(), "store-test");
}

const char* kTmp = "/tmp/tabom_test_corpus.jsonl";

}  // namespace

TEST_CASE("distill bookkeeping") {
  auto params = toy_model();
  auto task = get_task("copy", params.vocab);
  auto prompts = generate_corpus(task, params.vocab, 30, 9);

  DistillConfig cfg;
  cfg.max_new_tokens = 8;
  DistillSummary sum;
  auto recs = distill(params, task, prompts, cfg, &sum);
  CHECK(sum.generated == 30);
  CHECK(sum.valid == static_cast<int>(recs.size()));
  CHECK(sum.yield_ratio() >= 0.0);
  // untrained base: yield near 0
  CHECK(sum.yield_ratio() < 0.3);

  cfg.keep_invalid = true;
  auto all = distill(params, task, prompts, cfg, &sum);
  CHECK(all.size() == 30);  // record count equals prompt count exactly
}

TEST_CASE("corpus round-trip is exact") {
  auto params = toy_model(11);
  auto task = get_task("sort", params.vocab);
  auto prompts = generate_corpus(task, params.vocab, 10, 5);
  DistillConfig cfg;
  cfg.max_new_tokens = 8;
  cfg.keep_invalid = true;
  auto recs = distill(params, task, prompts, cfg);
  REQUIRE(!recs.empty());

  save_corpus(recs, kTmp);
  auto loaded = load_corpus(kTmp, params.vocab);
  REQUIRE(loaded.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(loaded[i].task_id == recs[i].task_id);
    CHECK(loaded[i].prompt == recs[i].prompt);
    CHECK(loaded[i].answer == recs[i].answer);
    CHECK(loaded[i].trajectory.valid == recs[i].trajectory.valid);
    REQUIRE(loaded[i].trajectory.events.size() == recs[i].trajectory.events.size());
    for (size_t k = 0; k < recs[i].trajectory.events.size(); ++k) {
      auto& a = loaded[i].trajectory.events[k];
      auto& b = recs[i].trajectory.events[k];
      CHECK(a.position == b.position);
      CHECK(a.token == b.token);
      CHECK(a.step == b.step);
      CHECK(a.entropy == b.entropy);  // bit-exact
      CHECK(a.tie_rank == b.tie_rank);
    }
  }
  std::remove(kTmp);
}

TEST_CASE("empty file loads as empty corpus") {
  { std::ofstream f(kTmp); }
  CHECK(load_corpus(kTmp, task_vocabulary()).empty());
  std::remove(kTmp);
}

TEST_CASE("truncated line reported with its number") {
  auto params = toy_model(12);
  auto task = get_task("copy", params.vocab);
  auto prompts = generate_corpus(task, params.vocab, 3, 2);
  DistillConfig cfg;
  cfg.max_new_tokens = 8;
  cfg.keep_invalid = true;
  auto recs = distill(params, task, prompts, cfg);
  save_corpus(recs, kTmp);
  // chop the final line in half
  std::ifstream in(kTmp);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::ofstream(kTmp) << all.substr(0, all.size() - 40);
  try {
    load_corpus(kTmp, params.vocab);
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find(":3:") != std::string::npos);
  }
  std::remove(kTmp);
}

TEST_CASE("invariant violations rejected at load") {
  std::ofstream out(kTmp);
  // two events claiming the same position
  out << R"({"task":"copy","prompt":[0],"answer":[4,5],"generator":"g","valid":true,)"
      << R"("events":[[0,4,2,0.1,0],[0,5,1,0.2,0]]})" << "\n";
  out.close();
  CHECK_THROWS_AS(load_corpus(kTmp, task_vocabulary()), std::runtime_error);
  std::remove(kTmp);
}
