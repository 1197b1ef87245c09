// Acceptance gate: one pass/fail line per criterion. Criteria 1-5 are exact
// oracle / analytic checks, 6-9 run the desk-scale training study three
// seeds deep, 10 replays the pipeline twice and byte-compares the CSVs.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tabom/boltzmann.hpp"
#include "tabom/pipeline.hpp"

using namespace tabom;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  std::vector<std::string> notes;
};

std::vector<Criterion> results;

template <typename F>
void run_criterion(int id, const std::string& title, F body) {
  Criterion c;
  c.id = id;
  c.title = title;
  auto t0 = std::chrono::steady_clock::now();
  try {
    c.pass = body(c.notes);
  } catch (const std::exception& e) {
    c.pass = false;
    c.notes.push_back(std::string("exception: ") + e.what());
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%2d] %s  %s  (%.1f s)\n", c.id, c.pass ? "PASS" : "FAIL", c.title.c_str(),
              c.seconds);
  for (auto& n : c.notes) std::printf("       %s\n", n.c_str());
  std::fflush(stdout);
  results.push_back(std::move(c));
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: exact subset-distribution oracle

bool crit_oracle(std::vector<std::string>& notes) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> pick_n(1, 10);
  std::uniform_real_distribution<double> pick_h(0.0, 2.0);
  std::uniform_real_distribution<double> pick_beta(0.0, 3.0);
  double worst_norm = 0.0, worst_self_kl = 0.0, min_cross_kl = 1e300;
  for (int trial = 0; trial < 100; ++trial) {
    EntropyLandscape land;
    land.n = pick_n(rng);
    land.beta = pick_beta(rng);
    for (int i = 0; i < land.n; ++i) land.H.push_back(pick_h(rng));
    land.validate();

    auto dist = boltzmann_exact(land);
    double mass = 0.0;
    for (double p : dist.probs) mass += p;
    worst_norm = std::max(worst_norm, std::fabs(mass - 1.0));

    worst_self_kl = std::max(worst_self_kl, std::fabs(kl_exact(dist, land)));

    EntropyLandscape other = land;
    for (auto& h : other.H) h = pick_h(rng);
    other.beta = pick_beta(rng);
    min_cross_kl = std::min(min_cross_kl, kl_exact(dist, other));

    auto rep = verify_ranking_lemma(land, 0, rng);
    if (!rep.all_agree()) {
      notes.push_back(fmt("ranking lemma disagreed on trial beta=%g n=%g", land.beta,
                          static_cast<double>(land.n)));
      return false;
    }
  }
  notes.push_back(fmt("worst |sum p - 1| = %.3g (tol 1e-9)", worst_norm));
  notes.push_back(fmt("worst |KL(p,p)| = %.3g (tol 1e-12), min cross KL = %.3g",
                      worst_self_kl, min_cross_kl));
  notes.push_back("ranking lemma: 100% order agreement, exhaustive, 100 landscapes");
  return worst_norm <= 1e-9 && worst_self_kl <= 1e-12 && min_cross_kl >= -1e-15;
}

// ---------------------------------------------------------------------------
// criterion 2: greedy unmask selection == exhaustive subset minimization

bool crit_select(std::vector<std::string>& notes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 1 + static_cast<int>(rng() % 10);
    int b = 1 + static_cast<int>(rng() % static_cast<unsigned>(std::min(4, n)));
    std::vector<int> masked;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      pos += 1 + static_cast<int>(rng() % 3);
      masked.push_back(pos);
    }
    bool quantize = trial % 3 == 0;  // force entropy ties
    std::vector<double> ent(n);
    for (auto& e : ent) {
      e = unif(rng);
      if (quantize) e = std::round(e * 4.0) * 0.25;  // exactly representable
    }

    auto got = select_unmask(masked, ent, b);
    std::sort(got.begin(), got.end());

    // exhaustive: lexicographically-first subset among minimal sums
    std::vector<int> idx(b), best;
    double best_sum = 1e300;
    std::vector<int> comb(b);
    std::function<void(int, int)> rec = [&](int start, int k) {
      if (k == b) {
        double s = 0.0;
        for (int i : comb) s += ent[i];
        if (s < best_sum - 1e-12) {
          best_sum = s;
          best.clear();
          for (int i : comb) best.push_back(masked[i]);
        }
        return;
      }
      for (int i = start; i <= n - (b - k); ++i) {
        comb[k] = i;
        rec(i + 1, k + 1);
      }
    };
    rec(0, 0);

    double got_sum = 0.0;
    for (int p : got)
      for (int i = 0; i < n; ++i)
        if (masked[i] == p) got_sum += ent[i];
    if (got_sum > best_sum + 1e-12) {
      notes.push_back(fmt("trial %g: selected sum %.12g > exhaustive min %.12g",
                          static_cast<double>(trial), got_sum, best_sum));
      return false;
    }
    if (std::fabs(got_sum - best_sum) <= 1e-12 && got != best && quantize) {
      // exact tie: must match the lexicographically-first minimal subset
      notes.push_back(fmt("trial %g: tie broken away from lowest positions",
                          static_cast<double>(trial)));
      return false;
    }
  }
  notes.push_back("1000 instances, |masked| <= 10, b <= 4, incl. quantized tie cases");

  // monotone unmasking on decoded trajectories
  auto vocab = task_vocabulary();
  DenoiserConfig mc;
  mc.layers = 1;
  mc.heads = 2;
  mc.model_dim = 16;
  mc.ffn_dim = 32;
  mc.max_prompt_len = 4;
  mc.max_response_len = 8;
  mc.seed = 5;
  auto params = DenoiserParams::init(mc, vocab, "mono");
  std::uniform_int_distribution<int> tok(0, vocab.base_size() - 1);
  for (int d = 0; d < 50; ++d) {
    std::vector<int> prompt(4);
    for (auto& p : prompt) p = tok(rng);
    int b = 1 + d % 4;
    auto sched = DecodeSchedule::uniform(8, b, 0.7);
    std::vector<std::set<int>> masked_sets;
    auto obs = [&](int, const MaskedState& st, const Array&) {
      std::set<int> m;
      for (int p : st.masked_positions(vocab.mask_id())) m.insert(p);
      masked_sets.push_back(std::move(m));
    };
    auto res = decode(params, prompt, sched, rng, true, obs);
    for (size_t s = 1; s < masked_sets.size(); ++s) {
      for (int p : masked_sets[s])
        if (!masked_sets[s - 1].count(p)) {
          notes.push_back("a position was re-masked mid-decode");
          return false;
        }
      if (masked_sets[s].size() + b != masked_sets[s - 1].size()) {
        notes.push_back("step did not commit exactly b positions");
        return false;
      }
    }
    std::set<int> seen;
    for (auto& e : res.trajectory.events) {
      if (seen.count(e.position)) {
        notes.push_back("duplicate position in trajectory events");
        return false;
      }
      seen.insert(e.position);
    }
  }
  notes.push_back("monotone unmasking held on 50 decoded trajectories, b in 1..4");
  return true;
}

// ---------------------------------------------------------------------------
// shared helpers for criteria 3 and 5

TrajectoryRecord synth_record(const Vocabulary& vocab, int prompt_len, int resp_len,
                              std::mt19937_64& rng) {
  TrajectoryRecord rec;
  rec.task_id = "synthetic";
  std::uniform_int_distribution<int> tok(1, vocab.base_size() - 1);  // skip EOS
  for (int i = 0; i < prompt_len; ++i) rec.prompt.push_back(tok(rng));
  rec.answer.resize(resp_len);
  for (auto& a : rec.answer) a = tok(rng);
  std::vector<int> perm(resp_len);
  for (int i = 0; i < resp_len; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  rec.trajectory.prompt = rec.prompt;
  for (int i = 0; i < resp_len; ++i) {
    DecodeEvent e;
    e.position = perm[i];
    e.token = rec.answer[perm[i]];
    e.step = resp_len - i;
    e.entropy = 0.5;
    e.tie_rank = 0;
    rec.trajectory.events.push_back(e);
  }
  rec.trajectory.valid = true;
  return rec;
}

// entropy of each window position under the window-start context
std::vector<double> window_entropies(const DenoiserParams& p, const WindowSegment& seg) {
  const auto& rec = *seg.record;
  std::vector<int> resp(p.config.max_response_len, p.vocab.mask_id());
  for (int c : seg.context)
    for (auto& e : rec.trajectory.events)
      if (e.position == c) resp[c] = e.token;
  auto rows = predict(p, rec.prompt, resp);
  int V = p.vocab.base_size();
  std::vector<double> h;
  for (int di : seg.delta) {
    int pos = rec.trajectory.events[di].position;
    h.push_back(token_entropy(std::span<const double>(rows.data.data() + pos * V, V)));
  }
  return h;
}

// ---------------------------------------------------------------------------
// criterion 3: analytic gradient vs Richardson-extrapolated central FD

bool crit_gradient(std::vector<std::string>& notes) {
  auto vocab = task_vocabulary();
  DenoiserConfig mc;
  mc.layers = 2;
  mc.heads = 2;
  mc.model_dim = 16;
  mc.ffn_dim = 32;
  mc.max_prompt_len = 4;
  mc.max_response_len = 8;
  mc.seed = 9;
  auto params = DenoiserParams::init(mc, vocab, "grad");
  std::mt19937_64 rng(7);

  double worst = 0.0;
  int checked = 0, with_active = 0, with_inactive = 0;
  for (int segi = 0; segi < 20; ++segi) {
    auto rec = synth_record(vocab, 4, 8, rng);
    TabomConfig tc;
    tc.window = 4;
    tc.lambda = 1.3;
    tc.context_mode = segi % 2 ? ContextMode::Exact : ContextMode::Shared;
    auto seg = sample_window(rec, 4, vocab.eos_id, rng);
    if (!seg) {
      --segi;
      continue;
    }
    // place the margin so roughly half the pairs are active and every hinge
    // argument stays clear of the kink (the subgradient there is one-sided)
    auto h = window_entropies(params, *seg);
    std::vector<double> args;
    for (auto& [r, s] : seg->pairs) args.push_back(h[r] - h[s]);
    std::sort(args.begin(), args.end());
    double gamma =
        -(args[args.size() / 2 - (args.size() % 2 ? 0 : 1)] + args[args.size() / 2]) / 2.0;
    if (gamma <= 1e-3) gamma = 0.05;
    tc.margin = gamma;
    bool clear = true;
    for (double a : args)
      if (std::fabs(a + gamma) < 5e-3) clear = false;
    if (!clear) {
      --segi;
      continue;
    }

    Tape tape;
    auto bound = bind_params(tape, params);
    auto nodes = build_tabom_loss(tape, params, bound, *seg, tc);
    tape.backward(nodes.total);
    if (nodes.violated_pairs > 0) ++with_active;
    if (nodes.violated_pairs < nodes.pair_count) ++with_inactive;

    for (const char* name : {"tok_emb", "l0.attn.wq", "l1.ffn.w1", "out.w"}) {
      const auto& g = tape.grad(bound.id(name)).data;
      int best = 0;
      for (size_t i = 0; i < g.size(); ++i)
        if (std::fabs(g[i]) > std::fabs(g[best])) best = static_cast<int>(i);
      if (std::fabs(g[best]) < 1e-6) continue;

      auto& theta = params.tensors[name].data[best];
      double orig = theta;
      auto central = [&](double hh) {
        theta = orig + hh;
        double fp = tabom_loss(params, *seg, tc);
        theta = orig - hh;
        double fm = tabom_loss(params, *seg, tc);
        theta = orig;
        return (fp - fm) / (2 * hh);
      };
      double fd = (4.0 * central(1e-4) - central(2e-4)) / 3.0;
      double rel = std::fabs(g[best] - fd) / std::max(std::fabs(fd), 1e-10);
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  notes.push_back(fmt("worst relative error %.3g over %g coordinates (tol 1e-5)", worst,
                      static_cast<double>(checked)));
  notes.push_back(fmt("segments with active hinge pairs: %g/20, with inactive: %g/20",
                      static_cast<double>(with_active), static_cast<double>(with_inactive)));
  return worst < 1e-5 && checked >= 40 && with_active > 0 && with_inactive > 0;
}

// ---------------------------------------------------------------------------
// criterion 4: ranking-term semantics at the score level

bool crit_rank_semantics(std::vector<std::string>& notes) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 3.0);
  double gamma = 0.2;

  // per-pair coefficient: lambda * mean-over-pairs == 2 lambda / (W(W-1)) * sum
  for (int W : {2, 4, 8, 32}) {
    std::vector<double> h(W);
    for (auto& x : h) x = unif(rng);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < W; ++i)
      for (int j = i + 1; j < W; ++j) pairs.emplace_back(i, j);
    double lambda = 1.7;
    double weighted = lambda * hinge_rank_from_scores(h, pairs, gamma);
    double manual = 0.0;
    for (auto& [r, s] : pairs) manual += std::max(0.0, h[r] - h[s] + gamma);
    manual *= 2.0 * lambda / (static_cast<double>(W) * (W - 1));
    if (std::fabs(weighted - manual) > 1e-12) {
      notes.push_back(fmt("coefficient identity broke at W=%g: %.17g vs %.17g",
                          static_cast<double>(W), weighted, manual));
      return false;
    }
  }
  notes.push_back("per-pair coefficient 2*lambda/(W(W-1)) exact for W in {2,4,8,32}");

  // zero loss <=> every pair satisfies the margin
  std::vector<std::pair<int, int>> pairs4 = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  std::vector<double> inc = {0.1, 0.4, 0.7, 1.0};  // gaps 0.3 > gamma
  if (hinge_rank_from_scores(inc, pairs4, gamma) != 0.0) {
    notes.push_back("margin-satisfied ordering did not give exactly zero loss");
    return false;
  }
  std::vector<double> viol = {0.1, 0.4, 0.35, 1.0};  // pair (1,2) violates
  if (hinge_rank_from_scores(viol, pairs4, gamma) <= 0.0) {
    notes.push_back("margin violation did not give positive loss");
    return false;
  }
  for (int t = 0; t < 200; ++t) {
    std::vector<double> h(4);
    for (auto& x : h) x = unif(rng);
    bool satisfied = true;
    for (auto& [r, s] : pairs4)
      if (h[r] > h[s] - gamma) satisfied = false;
    bool zero = hinge_rank_from_scores(h, pairs4, gamma) == 0.0;
    if (zero != satisfied) {
      notes.push_back("zero-loss <=> margin-ordering equivalence broke on a random probe");
      return false;
    }
  }
  notes.push_back("zero-loss <=> margin ordering on constructed + 200 random probes");

  // beta absorption: scaling entropies and margin by c scales the loss by c
  double worst = 0.0;
  for (double c : {0.5, 2.0, 10.0}) {
    for (int t = 0; t < 50; ++t) {
      std::vector<double> h(6);
      for (auto& x : h) x = unif(rng);
      std::vector<std::pair<int, int>> pairs;
      for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) pairs.emplace_back(i, j);
      std::vector<double> hc = h;
      for (auto& x : hc) x *= c;
      double lhs = hinge_rank_from_scores(hc, pairs, c * gamma);
      double rhs = c * hinge_rank_from_scores(h, pairs, gamma);
      worst = std::max(worst, std::fabs(lhs - rhs));
    }
  }
  notes.push_back(fmt("beta absorption worst |loss(c*h, c*gamma) - c*loss| = %.3g (tol 1e-9)",
                      worst));
  return worst <= 1e-9;
}

// ---------------------------------------------------------------------------
// criterion 5: ranking-only training recovers the trajectory order

struct Adam {
  double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  int t = 0;
  std::map<std::string, std::vector<double>> m, v;
  void step(DenoiserParams& p, Tape& tape, const BoundParams& bound) {
    ++t;
    for (auto& [name, arr] : p.tensors) {
      auto& g = tape.grad(bound.id(name)).data;
      auto& mm = m[name];
      auto& vv = v[name];
      if (mm.empty()) {
        mm.assign(g.size(), 0.0);
        vv.assign(g.size(), 0.0);
      }
      for (size_t i = 0; i < g.size(); ++i) {
        mm[i] = b1 * mm[i] + (1 - b1) * g[i];
        vv[i] = b2 * vv[i] + (1 - b2) * g[i] * g[i];
        arr.data[i] -= lr * (mm[i] / (1 - std::pow(b1, t))) /
                       (std::sqrt(vv[i] / (1 - std::pow(b2, t))) + eps);
      }
    }
  }
};

bool crit_surrogate(std::vector<std::string>& notes) {
  auto vocab = task_vocabulary();
  bool all_ok = true;
  for (unsigned long long seed : {2ULL, 4ULL, 5ULL}) {
    DenoiserConfig mc;
    mc.layers = 2;
    mc.heads = 2;
    mc.model_dim = 16;
    mc.ffn_dim = 32;
    mc.max_prompt_len = 4;
    mc.max_response_len = 16;
    mc.seed = seed;
    auto params = DenoiserParams::init(mc, vocab, "rank");
    std::mt19937_64 rng(100 + seed);
    auto rec = synth_record(vocab, 4, 16, rng);
    TabomConfig tc;
    tc.window = 16;
    tc.margin = 0.1;
    tc.lambda = 1.0;
    tc.context_mode = ContextMode::Shared;
    auto seg = sample_window(rec, 16, vocab.eos_id, rng);
    if (!seg) {
      notes.push_back(fmt("seed %g: window sampling failed", static_cast<double>(seed)));
      all_ok = false;
      continue;
    }
    // tau between window order index and model entropy; +1 means the earliest
    // decoded position has the lowest entropy, i.e. the target ordering
    auto tau_now = [&]() {
      auto h = window_entropies(params, *seg);
      std::vector<double> order(h.size());
      for (size_t k = 0; k < h.size(); ++k) order[k] = static_cast<double>(k);
      return kendall_tau(order, h);
    };
    double tau0 = tau_now();
    Adam opt;
    int reached = -1;
    double tau = tau0;
    for (int s = 1; s <= 500; ++s) {
      Tape tape;
      auto bound = bind_params(tape, params);
      auto nodes = build_ranking_loss(tape, params, bound, *seg, tc);
      tape.backward(nodes.total);
      opt.step(params, tape, bound);
      if (s % 5 == 0) {
        tau = tau_now();
        if (tau >= 0.9) {
          reached = s;
          break;
        }
      }
    }
    bool ok = tau0 <= 0.2 && reached > 0;
    notes.push_back(fmt("seed %g: tau %.3f -> %.3f", static_cast<double>(seed), tau0, tau) +
                    (reached > 0 ? fmt(" (step %g)", static_cast<double>(reached)) : " (not reached)"));
    all_ok = all_ok && ok;
  }
  return all_ok;
}

// ---------------------------------------------------------------------------
// criteria 6-9: three-seed training study

struct SeedOutcome {
  std::map<std::string, std::map<std::string, double>> em;  // arm -> task -> EM
  double tds_sft_sd = 0.0, tds_tabom = 0.0;
  bool curve_ok = false;
};

const std::vector<std::string> kInDomain = {"reverse", "sort"};
const std::vector<std::string> kOod = {"copy", "modsum"};

double mean_over(const std::map<std::string, double>& em, const std::vector<std::string>& ids) {
  double s = 0.0;
  for (auto& id : ids) s += em.at(id);
  return s / ids.size();
}

SeedOutcome run_seed(unsigned long long seed) {
  SeedOutcome out;
  auto vocab = task_vocabulary();
  DenoiserConfig mc;
  mc.layers = 2;
  mc.heads = 2;
  mc.model_dim = 32;
  mc.ffn_dim = 64;
  mc.max_prompt_len = 8;
  mc.max_response_len = 8;
  mc.seed = seed;

  auto eval_em = [&](const DenoiserParams& p, const std::string& task) {
    return evaluate(p, get_task(task, p.vocab), DecodeSchedule::uniform(8, 8), 200, 500 + seed)
        .exact_match;
  };
  auto eval_all = [&](const DenoiserParams& p, const std::string& arm) {
    for (auto& t : kInDomain) out.em[arm][t] = eval_em(p, t);
    for (auto& t : kOod) out.em[arm][t] = eval_em(p, t);
  };

  // pretrain on a mixture dominated by the soon-to-be OOD tasks
  TrainCorpus pre;
  pre.response_len = 8;
  unsigned long long cs = seed * 1000;
  for (auto& [t, n] : std::vector<std::pair<std::string, int>>{
           {"copy", 250}, {"modsum", 250}, {"reverse", 150}, {"sort", 150}}) {
    auto pairs = generate_corpus(get_task(t, vocab), vocab, n, cs++);
    pre.pairs.insert(pre.pairs.end(), pairs.begin(), pairs.end());
  }
  OptimizerConfig po;
  po.lr = 3e-3;
  po.epochs = 25;
  po.batch_size = 8;
  po.warmup_steps = 20;
  po.seed = seed;
  auto base = finetune(DenoiserParams::init(mc, vocab, "base"), pre, Objective::SftGt, {}, po);
  eval_all(base, "no-sft");

  // self-distilled corpus on the in-domain tasks
  TrainCorpus sd;
  sd.response_len = 8;
  for (size_t i = 0; i < kInDomain.size(); ++i) {
    auto task = get_task(kInDomain[i], vocab);
    auto prompts = generate_corpus(task, vocab, 1500, 2000 + seed * 10 + i);
    DistillConfig dc;
    dc.max_new_tokens = 8;
    dc.schedule = DecodeSchedule::uniform(8, 1, 0.5);
    dc.seed = 3000 + seed * 10 + i;
    auto recs = distill(base, task, prompts, dc);
    sd.trajectories.insert(sd.trajectories.end(), recs.begin(), recs.end());
  }

  // ground-truth corpus for the SFT-GT arm
  TrainCorpus gt;
  gt.response_len = 8;
  for (size_t i = 0; i < kInDomain.size(); ++i) {
    auto pairs = generate_corpus(get_task(kInDomain[i], vocab), vocab, 1500, 4000 + seed * 10 + i);
    gt.pairs.insert(gt.pairs.end(), pairs.begin(), pairs.end());
  }

  OptimizerConfig fo;
  fo.lr = 1e-3;
  fo.epochs = 15;
  fo.batch_size = 8;
  fo.warmup_steps = 20;
  fo.seed = seed + 7;
  TabomConfig tc;
  tc.window = 4;
  tc.margin = 0.2;
  tc.lambda = 2.0;
  tc.context_mode = ContextMode::Shared;
  TabomConfig tg = tc;
  tg.window_scope = WindowScope::Global;

  eval_all(finetune(base, gt, Objective::SftGt, tc, fo), "sft-gt");
  auto sft_sd = finetune(base, sd, Objective::SftSd, tc, fo);
  eval_all(sft_sd, "sft-sd");
  auto tabom_local = finetune(base, sd, Objective::Tabom, tc, fo);
  eval_all(tabom_local, "tabom");
  eval_all(finetune(base, sd, Objective::Tabom, tg, fo), "tabom-global");

  // entropy-spread diagnostic on shared prompts
  std::vector<CorpusPair> tprompts;
  for (size_t i = 0; i < kInDomain.size(); ++i) {
    auto pairs = generate_corpus(get_task(kInDomain[i], vocab), vocab, 30, 6000 + seed * 10 + i);
    tprompts.insert(tprompts.end(), pairs.begin(), pairs.end());
  }
  auto sched = DecodeSchedule::uniform(8, 1);
  out.tds_sft_sd = tds(sft_sd, tprompts, sched, 1, 7000 + seed).mean;
  out.tds_tabom = tds(tabom_local, tprompts, sched, 1, 7000 + seed).mean;

  // cross entropy vs mask ratio, ground truth vs self-distilled, same prompts
  std::vector<CorpusPair> g, s;
  for (size_t i = 0; i < kInDomain.size(); ++i) {
    auto task = get_task(kInDomain[i], vocab);
    auto pairs = generate_corpus(task, vocab, 40, 8000 + seed * 10 + i);
    DistillConfig dc;
    dc.max_new_tokens = 8;
    dc.schedule = sched;
    dc.keep_invalid = true;
    dc.seed = 9000 + seed * 10 + i;
    auto recs = distill(base, task, pairs, dc);
    for (size_t k = 0; k < pairs.size(); ++k) {
      g.push_back(pairs[k]);
      s.push_back({recs[k].prompt, recs[k].answer});
    }
  }
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
  auto curve = ce_vs_mask_ratio(base, g, s, grid, 8, 100 + seed);
  out.curve_ok = true;
  for (size_t i = 0; i < grid.size(); ++i)
    if (curve.ce_sd[i] > curve.ce_gt[i]) out.curve_ok = false;
  return out;
}

// ---------------------------------------------------------------------------
// criteria 9 (ablate arms) and 10 (replay) drive the pipeline end to end

std::string small_config(const std::string& out_dir) {
  std::ostringstream c;
  c << "model.layers = 1\nmodel.heads = 2\nmodel.dim = 16\nmodel.ffn = 32\n"
    << "model.max_prompt = 8\nmodel.max_response = 8\nmodel.seed = 3\n"
    << "tasks.in_domain = copy\ntasks.ood = modsum\n"
    << "pretrain.mix = copy=40, modsum=40\npretrain.epochs = 2\npretrain.lr = 3e-3\n"
    << "pretrain.warmup = 5\n"
    << "distill.prompts = 20\ndistill.keep_invalid = true\n"
    << "finetune.objective = tabom\nfinetune.epochs = 1\n"
    << "tabom.window = 4\ntabom.lambda = 2\ntabom.context = shared\n"
    << "eval.n = 20\neval.per_step = 8\n"
    << "curve.ratios = 0.2, 0.5, 0.8\n"
    << "out.dir = " << out_dir << "\n";
  return c.str();
}

void run_pipeline_into(const std::string& dir) {
  fs::create_directories(dir);
  std::string cfg_path = dir + "/exp.cfg";
  {
    std::ofstream out(cfg_path);
    out << small_config(dir);
  }
  Pipeline pipe(ExperimentConfig::load(cfg_path));
  pipe.pretrain();
  pipe.distill();
  pipe.finetune();
  pipe.eval();
  pipe.tds_run();
  pipe.ce_curve();
  pipe.ablate();
}

bool crit_replay(std::vector<std::string>& notes) {
  std::string root = (fs::temp_directory_path() / "acceptance_replay").string();
  fs::remove_all(root);
  run_pipeline_into(root + "/a");
  run_pipeline_into(root + "/b");

  int compared = 0;
  for (auto& entry : fs::directory_iterator(root + "/a")) {
    if (entry.path().extension() != ".csv") continue;
    std::string name = entry.path().filename().string();
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(root + "/b/" + name, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (!fb || sa.str() != sb.str()) {
      notes.push_back(name + " differs between the two runs");
      return false;
    }
    ++compared;
  }
  notes.push_back(fmt("%g CSV files byte-identical across two full pipeline runs",
                      static_cast<double>(compared)));
  return compared >= 7;
}

}  // namespace

int main() {
  run_criterion(1, "exact oracle: normalization, KL, ranking lemma", crit_oracle);
  run_criterion(2, "unmask selection == exhaustive subset minimization; monotone decode",
                crit_select);
  run_criterion(3, "analytic gradient matches central finite differences", crit_gradient);
  run_criterion(4, "ranking-term coefficient, zero-loss and scaling identities",
                crit_rank_semantics);
  run_criterion(5, "ranking-only training recovers the trajectory order", crit_surrogate);

  // shared three-seed study for criteria 6-9
  std::vector<SeedOutcome> seeds;
  auto t0 = std::chrono::steady_clock::now();
  for (unsigned long long s : {1ULL, 2ULL, 3ULL}) seeds.push_back(run_seed(s));
  double study_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("     (three-seed training study: %.0f s)\n", study_s);

  run_criterion(6, "self-distilled CE <= ground-truth CE at every mask ratio",
                [&](std::vector<std::string>& notes) {
                  bool ok = true;
                  for (size_t i = 0; i < seeds.size(); ++i) {
                    notes.push_back(fmt("seed %g: ce_sd <= ce_gt at all 9 ratios: ",
                                        static_cast<double>(i + 1)) +
                                    (seeds[i].curve_ok ? "yes" : "NO"));
                    ok = ok && seeds[i].curve_ok;
                  }
                  return ok;
                });

  run_criterion(7, "post-training study: forgetting, retention, in-domain ordering",
                [&](std::vector<std::string>& notes) {
                  double base_in = 0, base_ood_task[2] = {0, 0};
                  double gt_in = 0, gt_ood = 0, base_ood = 0, sd_ood = 0;
                  double sd_in = 0, tb_in = 0;
                  for (auto& s : seeds) {
                    base_in += mean_over(s.em.at("no-sft"), kInDomain) / 3;
                    base_ood += mean_over(s.em.at("no-sft"), kOod) / 3;
                    gt_in += mean_over(s.em.at("sft-gt"), kInDomain) / 3;
                    gt_ood += mean_over(s.em.at("sft-gt"), kOod) / 3;
                    sd_in += mean_over(s.em.at("sft-sd"), kInDomain) / 3;
                    sd_ood += mean_over(s.em.at("sft-sd"), kOod) / 3;
                    tb_in += mean_over(s.em.at("tabom"), kInDomain) / 3;
                    for (int k = 0; k < 2; ++k)
                      base_ood_task[k] += (s.em.at("no-sft").at(kOod[k]) -
                                           s.em.at("sft-gt").at(kOod[k])) / 3;
                  }
                  bool a = gt_in > base_in && (base_ood_task[0] > 0 || base_ood_task[1] > 0);
                  bool b = (base_ood - sd_ood) < (base_ood - gt_ood);
                  bool c = tb_in > sd_in;
                  notes.push_back(fmt("(a) gt-sft in-domain %.3f vs no-sft %.3f; ood drop "
                                      "copy %.3f",
                                      gt_in, base_in, base_ood_task[0]) +
                                  fmt(", modsum %.3f", base_ood_task[1]));
                  if (!a)
                    notes.push_back("(a) NOT ELICITED: gt-sft failed to improve in-domain "
                                    "while degrading an ood task at this scale");
                  notes.push_back(fmt("(b) ood degradation: sft-sd %.3f < sft-gt %.3f: ",
                                      base_ood - sd_ood, base_ood - gt_ood) +
                                  (b ? "yes" : "NO"));
                  notes.push_back(fmt("(c) in-domain: ranking objective %.4f > sft-sd %.4f: ",
                                      tb_in, sd_in) +
                                  (c ? "yes" : "NO"));
                  return a && b && c;
                });

  run_criterion(8, "entropy-spread diagnostic separates the two post-trained models",
                [&](std::vector<std::string>& notes) {
                  bool ok = true;
                  for (size_t i = 0; i < seeds.size(); ++i) {
                    bool win = seeds[i].tds_tabom > seeds[i].tds_sft_sd;
                    notes.push_back(fmt("seed %g: %.4f vs %.4f ", static_cast<double>(i + 1),
                                        seeds[i].tds_tabom, seeds[i].tds_sft_sd) +
                                    (win ? "(win)" : "(LOSS)"));
                    ok = ok && win;
                  }
                  auto vocab = task_vocabulary();
                  DenoiserConfig mc;
                  mc.layers = 1;
                  mc.heads = 2;
                  mc.model_dim = 16;
                  mc.ffn_dim = 32;
                  mc.max_prompt_len = 8;
                  mc.max_response_len = 8;
                  auto zero = DenoiserParams::zeros(mc, vocab, "zero");
                  auto pairs = generate_corpus(get_task("copy", vocab), vocab, 10, 1);
                  double z = tds(zero, pairs, DecodeSchedule::uniform(8, 1), 1, 1).mean;
                  notes.push_back(fmt("zero-weight model: %.17g (must be exactly 0)", z));
                  return ok && z == 0.0;
                });

  // the pipeline replay (criterion 10) runs here so criterion 9 can inspect
  // the ablate grid it leaves behind; its verdict is printed in order below
  std::vector<std::string> replay_notes;
  bool replay_pass = false;
  auto t1 = std::chrono::steady_clock::now();
  try {
    replay_pass = crit_replay(replay_notes);
  } catch (const std::exception& e) {
    replay_notes.push_back(std::string("exception: ") + e.what());
  }
  replay_notes.push_back(fmt("replay took %.1f s", std::chrono::duration<double>(
                                                       std::chrono::steady_clock::now() - t1)
                                                       .count()));

  run_criterion(9, "local window >= global window in-domain; ablate emits four arms",
                [&](std::vector<std::string>& notes) {
                  int wins = 0;
                  for (size_t i = 0; i < seeds.size(); ++i) {
                    double loc = mean_over(seeds[i].em.at("tabom"), kInDomain);
                    double glo = mean_over(seeds[i].em.at("tabom-global"), kInDomain);
                    if (loc >= glo) ++wins;
                    notes.push_back(fmt("seed %g: local %.3f vs global %.3f",
                                        static_cast<double>(i + 1), loc, glo));
                  }
                  notes.push_back(fmt("local >= global on %g/3 seeds (need >= 2)",
                                      static_cast<double>(wins)));
                  // four arms from one config (pipeline run shared with criterion 10)
                  std::string csv =
                      (fs::temp_directory_path() / "acceptance_replay/a/ablate.csv").string();
                  std::set<std::string> arms;
                  std::ifstream in(csv);
                  std::string line;
                  std::getline(in, line);  // header
                  while (std::getline(in, line)) arms.insert(line.substr(0, line.find(',')));
                  bool four = arms == std::set<std::string>{"local+rank", "local-rank",
                                                            "global+rank", "global-rank"};
                  notes.push_back(fmt("ablate arms found: %g ", static_cast<double>(arms.size())) +
                                  (four ? "(all four)" : "(wrong set)"));
                  return wins >= 2 && four;
                });

  run_criterion(10, "identical config + seeds give byte-identical CSVs",
                [&](std::vector<std::string>& notes) {
                  notes = replay_notes;
                  return replay_pass;
                });

  int failed = 0;
  for (auto& c : results)
    if (!c.pass) ++failed;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed,
              results.size());
  return failed;
}
