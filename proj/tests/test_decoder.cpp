#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "tabom/decoder.hpp"

using namespace tabom;

namespace {

Vocabulary tiny_vocab() {
  Vocabulary v;
  v.tokens = {"a", "b", "c", "<eos>"};
  v.eos_id = 3;
  return v;
}

DenoiserParams tiny_model(unsigned long long seed = 5) {
  DenoiserConfig c;
  c.layers = 1;
  c.heads = 2;
  c.model_dim = 16;
  c.ffn_dim = 32;
  c.max_prompt_len = 4;
  c.max_response_len = 8;
  c.seed = seed;
  return DenoiserParams::init(c, tiny_vocab(), "dec-test");
}

// Exhaustive minimum of sum-of-entropies over all size-b subsets.
double best_subset_sum(const std::vector<double>& e, int b) {
  int m = static_cast<int>(e.size());
  double best = 1e300;
  for (int mask = 0; mask < (1 << m); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != b) continue;
    double s = 0.0;
    for (int i = 0; i < m; ++i)
      if (mask & (1 << i)) s += e[i];
    best = std::min(best, s);
  }
  return best;
}

}  // namespace

TEST_CASE("select_unmask basics") {
  CHECK(select_unmask({1, 2, 3}, {0.1, 0.9, 0.3}, 2) == std::vector<int>{1, 3});
  // all equal: two lowest indices, in index order
  CHECK(select_unmask({4, 7, 2}, {0.5, 0.5, 0.5}, 2) == std::vector<int>{2, 4});
  CHECK_THROWS_AS(select_unmask({1, 2}, {0.1, 0.2}, 3), std::invalid_argument);
}

TEST_CASE("select_unmask equals exhaustive subset minimization") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<int> msize(2, 10);
  for (int trial = 0; trial < 300; ++trial) {
    int m = msize(rng);
    std::uniform_int_distribution<int> bdist(1, std::min(4, m));
    int b = bdist(rng);
    std::vector<int> masked(m);
    std::vector<double> e(m);
    for (int i = 0; i < m; ++i) {
      masked[i] = i * 2 + 1;
      e[i] = u(rng);
    }
    auto sel = select_unmask(masked, e, b);
    double got = 0.0;
    for (int pos : sel)
      for (int i = 0; i < m; ++i)
        if (masked[i] == pos) got += e[i];
    CHECK(got == doctest::Approx(best_subset_sum(e, b)).epsilon(1e-12));
  }
}

TEST_CASE("decode schedule structure: one token per step") {
  auto params = tiny_model();
  std::mt19937_64 rng(1);
  auto res = decode(params, {0, 1}, DecodeSchedule::uniform(8, 1), rng);
  REQUIRE(res.trajectory.events.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(res.trajectory.events[i].step == 8 - i);
    CHECK(res.trajectory.events[i].tie_rank == 0);
  }
  res.trajectory.check_invariants(8, std::log(4.0));
  CHECK(res.trajectory.final_tokens() == res.tokens);
}

TEST_CASE("decode schedule structure: two tokens per step") {
  auto params = tiny_model();
  std::mt19937_64 rng(1);
  auto res = decode(params, {0, 1}, DecodeSchedule::uniform(8, 2), rng);
  REQUIRE(res.trajectory.events.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(res.trajectory.events[i].step == 4 - i / 2);
    CHECK(res.trajectory.events[i].tie_rank == i % 2);
  }
  res.trajectory.check_invariants(8, std::log(4.0));
}

TEST_CASE("decode determinism at temperature 0") {
  auto params = tiny_model();
  std::mt19937_64 rng1(9), rng2(10);  // rng must not matter at temperature 0
  auto a = decode(params, {2, 0, 1}, DecodeSchedule::uniform(6, 1), rng1);
  auto b = decode(params, {2, 0, 1}, DecodeSchedule::uniform(6, 1), rng2);
  CHECK(a.tokens == b.tokens);
  REQUIRE(a.trajectory.events.size() == b.trajectory.events.size());
  for (size_t i = 0; i < a.trajectory.events.size(); ++i) {
    CHECK(a.trajectory.events[i].position == b.trajectory.events[i].position);
    CHECK(a.trajectory.events[i].token == b.trajectory.events[i].token);
    CHECK(a.trajectory.events[i].entropy == b.trajectory.events[i].entropy);
  }
}

TEST_CASE("monotone unmasking and easy-to-hard trace") {
  auto params = tiny_model(17);
  int vbase = params.vocab.base_size();
  int mask = params.vocab.mask_id();

  std::vector<int> unmasked_counts;
  std::vector<std::pair<int, std::vector<double>>> step_entropies;  // (step, masked entropies)
  StepObserver obs = [&](int step, const MaskedState& st, const Array& rows) {
    unmasked_counts.push_back(static_cast<int>(st.unmasked_positions(mask).size()));
    std::vector<double> es;
    for (int pos : st.masked_positions(mask))
      es.push_back(token_entropy(std::span<const double>(&rows.data[pos * vbase], vbase)));
    step_entropies.push_back({step, es});
  };
  std::mt19937_64 rng(4);
  auto res = decode(params, {1, 2}, DecodeSchedule::uniform(8, 2), rng, true, obs);

  // U strictly grows each executed step
  for (size_t i = 1; i < unmasked_counts.size(); ++i)
    CHECK(unmasked_counts[i] > unmasked_counts[i - 1]);
  CHECK(res.tokens.size() == 8);
  CHECK(std::count(res.tokens.begin(), res.tokens.end(), mask) == 0);

  // within one step, decoded entropies are <= every entropy left masked
  for (auto& [step, es] : step_entropies) {
    std::vector<double> decoded;
    for (auto& e : res.trajectory.events)
      if (e.step == step) decoded.push_back(e.entropy);
    std::vector<double> sorted = es;
    std::sort(sorted.begin(), sorted.end());
    double left_min = sorted.size() > decoded.size() ? sorted[decoded.size()] : 1e300;
    for (double d : decoded) CHECK(d <= left_min + 1e-12);
  }
}

TEST_CASE("effective_length") {
  // EOS at (1-indexed) position 5 of 8
  CHECK(effective_length({0, 1, 2, 0, 3, 1, 1, 2}, 3) == 5);
  CHECK(effective_length({0, 1, 2, 0, 1, 1, 1, 2}, 3) == 8);  // absent
  CHECK(effective_length({3, 1, 2}, 3) == 1);                 // boundary
}

TEST_CASE("sample_row behaviour") {
  std::mt19937_64 rng(2);
  std::vector<double> row = {0.1, 0.6, 0.2, 0.1};
  CHECK(sample_row(row, 0.0, 1.0, rng) == 1);
  // top-p = 0.5 keeps only the head of the distribution
  for (int i = 0; i < 50; ++i) CHECK(sample_row(row, 1.0, 0.5, rng) == 1);
  // high temperature still returns a valid id
  for (int i = 0; i < 50; ++i) {
    int t = sample_row(row, 5.0, 1.0, rng);
    CHECK(t >= 0);
    CHECK(t < 4);
  }
}
