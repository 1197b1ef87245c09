#include "tabom/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tabom {

void TabomConfig::validate() const {
  if (margin <= 0.0) throw std::invalid_argument("TabomConfig: margin must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("TabomConfig: lambda must be >= 0");
  if (lambda > 0.0 && window < 2)
    throw std::invalid_argument("TabomConfig: window must be >= 2 when lambda > 0");
}

namespace {

// Indices (into the full event list) of events within the pre-EOS region,
// in decode order.
std::vector<int> eligible_events(const TrajectoryRecord& rec, int eos_id) {
  int eff = effective_length(rec.answer, eos_id);
  std::vector<int> out;
  for (size_t i = 0; i < rec.trajectory.events.size(); ++i)
    if (rec.trajectory.events[i].position < eff) out.push_back(static_cast<int>(i));
  return out;
}

// Response token vector with the given positions visible, the rest masked.
std::vector<int> context_tokens(const TrajectoryRecord& rec, const std::vector<int>& visible,
                                int mask_id) {
  std::vector<int> x(rec.answer.size(), mask_id);
  for (int pos : visible) x[pos] = rec.answer[pos];
  return x;
}

// Entropy node [k] for the listed response positions, from one forward pass.
int entropy_rows(Tape& tp, int logits, const std::vector<int>& positions) {
  int sel = tp.gather(logits, positions);
  int p = tp.softmax_rows(sel);
  return tp.neg(tp.row_sum(tp.mul(p, tp.log(p))));
}

int scalar_sum(Tape& tp, const std::vector<int>& terms) {
  int acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = tp.add(acc, terms[i]);
  return acc;
}

}  // namespace

std::optional<WindowSegment> sample_window(const TrajectoryRecord& rec, int W, int eos_id,
                                           std::mt19937_64& rng, WindowScope scope) {
  auto eligible = eligible_events(rec, eos_id);
  int e = static_cast<int>(eligible.size());
  int min_width = scope == WindowScope::Local ? W : 2;
  if (e < min_width) return std::nullopt;

  int max_boundary = scope == WindowScope::Local ? e - W : e - 2;
  std::uniform_int_distribution<int> bdist(0, max_boundary);
  int boundary = bdist(rng);

  WindowSegment seg;
  seg.record = &rec;
  int first_global = eligible[boundary];
  for (int i = 0; i < first_global; ++i)
    seg.context.push_back(rec.trajectory.events[i].position);
  int width = scope == WindowScope::Local ? W : e - boundary;
  for (int i = 0; i < width; ++i) seg.delta.push_back(eligible[boundary + i]);
  for (int i = 0; i < width; ++i)
    for (int j = i + 1; j < width; ++j) seg.pairs.push_back({i, j});
  return seg;
}

double hinge_rank_from_scores(const std::vector<double>& h,
                              const std::vector<std::pair<int, int>>& pairs, double margin) {
  if (pairs.empty()) throw std::invalid_argument("hinge_rank_from_scores: empty pair set");
  double s = 0.0;
  for (auto& [r, v] : pairs) s += std::max(0.0, h[r] - h[v] + margin);
  return s / static_cast<double>(pairs.size());
}

LossNodes build_ranking_loss(Tape& tp, const DenoiserParams& params, const BoundParams& bp,
                             const WindowSegment& seg, const TabomConfig& cfg) {
  cfg.validate();
  if (seg.width() < 2) throw std::invalid_argument("ranking_loss: window must hold >= 2 tokens");
  const TrajectoryRecord& rec = *seg.record;
  const auto& events = rec.trajectory.events;
  int mask = params.vocab.mask_id();

  // h node ([1]) per delta element
  std::vector<int> h_elem(seg.delta.size(), -1);
  if (cfg.context_mode == ContextMode::Shared) {
    auto xt = context_tokens(rec, seg.context, mask);
    int logits = denoiser_logits(tp, params, bp, rec.prompt, xt);
    std::vector<int> positions;
    for (int ei : seg.delta) positions.push_back(events[ei].position);
    int h = entropy_rows(tp, logits, positions);
    for (size_t k = 0; k < seg.delta.size(); ++k)
      h_elem[k] = tp.gather(h, {static_cast<int>(k)});
  } else {
    // exact per-definition contexts: one forward per distinct step in the window
    std::vector<int> steps;
    for (int ei : seg.delta) steps.push_back(events[ei].step);
    std::vector<int> distinct = steps;
    std::sort(distinct.begin(), distinct.end(), std::greater<int>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (int s : distinct) {
      std::vector<int> visible;
      for (auto& e : events)
        if (e.step > s) visible.push_back(e.position);
      auto xt = context_tokens(rec, visible, mask);
      int logits = denoiser_logits(tp, params, bp, rec.prompt, xt);
      std::vector<int> positions;
      std::vector<size_t> which;
      for (size_t k = 0; k < seg.delta.size(); ++k)
        if (steps[k] == s) {
          positions.push_back(events[seg.delta[k]].position);
          which.push_back(k);
        }
      int h = entropy_rows(tp, logits, positions);
      for (size_t i = 0; i < which.size(); ++i)
        h_elem[which[i]] = tp.gather(h, {static_cast<int>(i)});
    }
  }

  std::vector<int> terms;
  int violated = 0;
  for (auto& [r, s] : seg.pairs) {
    int t = tp.max_const(tp.shift(tp.sub(h_elem[r], h_elem[s]), cfg.margin), 0.0);
    if (tp.value(t).data[0] > 0.0) ++violated;
    terms.push_back(t);
  }
  LossNodes out;
  out.rank = tp.scale(scalar_sum(tp, terms), 1.0 / static_cast<double>(terms.size()));
  out.total = out.rank;
  out.pair_count = static_cast<int>(terms.size());
  out.violated_pairs = violated;
  return out;
}

LossNodes build_tabom_loss(Tape& tp, const DenoiserParams& params, const BoundParams& bp,
                           const WindowSegment& seg, const TabomConfig& cfg) {
  cfg.validate();
  const TrajectoryRecord& rec = *seg.record;
  const auto& events = rec.trajectory.events;
  int mask = params.vocab.mask_id();

  auto xt = context_tokens(rec, seg.context, mask);
  int logits = denoiser_logits(tp, params, bp, rec.prompt, xt);
  std::vector<int> positions;
  std::vector<int> targets;
  for (int ei : seg.delta) {
    positions.push_back(events[ei].position);
    targets.push_back(rec.answer[events[ei].position]);
  }
  LossNodes out;
  out.recon = tp.mean(tp.cross_entropy_rows(tp.gather(logits, positions), targets));
  if (cfg.lambda > 0.0) {
    LossNodes rank = build_ranking_loss(tp, params, bp, seg, cfg);
    out.rank = rank.rank;
    out.pair_count = rank.pair_count;
    out.violated_pairs = rank.violated_pairs;
    out.total = tp.add(out.recon, tp.scale(out.rank, cfg.lambda));
  } else {
    out.total = out.recon;
  }
  return out;
}

int build_nelbo_loss(Tape& tp, const DenoiserParams& params, const BoundParams& bp,
                     const std::vector<int>& prompt, const std::vector<int>& answer,
                     std::mt19937_64& rng) {
  if (answer.empty()) throw std::invalid_argument("nelbo_loss: empty answer");
  int n = static_cast<int>(answer.size());
  int mask = params.vocab.mask_id();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> masked;
  do {
    masked.clear();
    double u = unif(rng);
    for (int i = 0; i < n; ++i)
      if (unif(rng) < u) masked.push_back(i);
  } while (masked.empty());

  std::vector<int> xt = answer;
  std::vector<int> targets;
  for (int i : masked) {
    xt[i] = mask;
    targets.push_back(answer[i]);
  }
  int logits = denoiser_logits(tp, params, bp, prompt, xt);
  return tp.mean(tp.cross_entropy_rows(tp.gather(logits, masked), targets));
}

int build_dinfer_loss(Tape& tp, const DenoiserParams& params, const BoundParams& bp,
                      const TrajectoryRecord& rec, std::mt19937_64& rng) {
  auto eligible = eligible_events(rec, params.vocab.eos_id);
  int e = static_cast<int>(eligible.size());
  if (e < 2) throw std::invalid_argument("dinfer_loss: trajectory effective length < 2");
  // two distinct event boundaries in 0..e, ordered
  std::uniform_int_distribution<int> bdist(0, e);
  int i = 0, j = 0;
  while (i == j) {
    i = bdist(rng);
    j = bdist(rng);
  }
  if (i > j) std::swap(i, j);
  return build_dinfer_loss_at(tp, params, bp, rec, i, j);
}

int build_dinfer_loss_at(Tape& tp, const DenoiserParams& params, const BoundParams& bp,
                         const TrajectoryRecord& rec, int i, int j) {
  auto eligible = eligible_events(rec, params.vocab.eos_id);
  int e = static_cast<int>(eligible.size());
  if (!(0 <= i && i < j && j <= e))
    throw std::invalid_argument("dinfer_loss: boundaries must satisfy 0 <= from < to <= E");

  const auto& events = rec.trajectory.events;
  int mask = params.vocab.mask_id();
  std::vector<int> visible;
  for (int k = 0; k < eligible[i]; ++k) visible.push_back(events[k].position);
  auto xt = context_tokens(rec, visible, mask);
  int logits = denoiser_logits(tp, params, bp, rec.prompt, xt);
  std::vector<int> positions;
  std::vector<int> targets;
  for (int k = i; k < j; ++k) {
    positions.push_back(events[eligible[k]].position);
    targets.push_back(rec.answer[events[eligible[k]].position]);
  }
  return tp.mean(tp.cross_entropy_rows(tp.gather(logits, positions), targets));
}

double nelbo_loss(const DenoiserParams& params, const std::vector<int>& prompt,
                  const std::vector<int>& answer, std::mt19937_64& rng) {
  Tape tp;
  BoundParams bp = bind_params(tp, params);
  return tp.value(build_nelbo_loss(tp, params, bp, prompt, answer, rng)).data[0];
}

double ranking_loss(const DenoiserParams& params, const WindowSegment& segment,
                    const TabomConfig& cfg) {
  Tape tp;
  BoundParams bp = bind_params(tp, params);
  return tp.value(build_ranking_loss(tp, params, bp, segment, cfg).rank).data[0];
}

double tabom_loss(const DenoiserParams& params, const WindowSegment& segment,
                  const TabomConfig& cfg) {
  Tape tp;
  BoundParams bp = bind_params(tp, params);
  return tp.value(build_tabom_loss(tp, params, bp, segment, cfg).total).data[0];
}

double dinfer_loss(const DenoiserParams& params, const TrajectoryRecord& rec,
                   std::mt19937_64& rng) {
  Tape tp;
  BoundParams bp = bind_params(tp, params);
  return tp.value(build_dinfer_loss(tp, params, bp, rec, rng)).data[0];
}

Objective objective_from_string(const std::string& name) {
  if (name == "sft-gt") return Objective::SftGt;
  if (name == "sft-sd") return Objective::SftSd;
  if (name == "traj-mask") return Objective::TrajMask;
  if (name == "dinfer") return Objective::Dinfer;
  if (name == "tabom") return Objective::Tabom;
  throw std::invalid_argument("unknown objective '" + name + "'");
}

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::SftGt: return "sft-gt";
    case Objective::SftSd: return "sft-sd";
    case Objective::TrajMask: return "traj-mask";
    case Objective::Dinfer: return "dinfer";
    case Objective::Tabom: return "tabom";
  }
  return "?";
}

namespace {

struct AdamW {
  const OptimizerConfig& cfg;
  int total_steps;
  int step = 0;
  std::map<std::string, Array> m, v;

  explicit AdamW(const OptimizerConfig& c, int total, const DenoiserParams& p)
      : cfg(c), total_steps(total) {
    for (auto& [name, a] : p.tensors) {
      m.emplace(name, Array(a.shape));
      v.emplace(name, Array(a.shape));
    }
  }

  double lr_at(int s) const {
    double peak = cfg.lr;
    if (cfg.warmup_steps > 0 && s < cfg.warmup_steps)
      return peak * static_cast<double>(s + 1) / cfg.warmup_steps;
    int decay_total = std::max(1, total_steps - cfg.warmup_steps);
    int decay_step = std::min(decay_total, std::max(0, s - cfg.warmup_steps));
    return 0.5 * peak * (1.0 + std::cos(M_PI * decay_step / decay_total));
  }

  void update(DenoiserParams& p, const std::map<std::string, Array>& grads) {
    ++step;
    double lr = lr_at(step - 1);
    double bc1 = 1.0 - std::pow(cfg.beta1, step);
    double bc2 = 1.0 - std::pow(cfg.beta2, step);
    for (auto& [name, g] : grads) {
      Array& mm = m.at(name);
      Array& vv = v.at(name);
      Array& w = p.tensors.at(name);
      for (int i = 0; i < g.size(); ++i) {
        mm.data[i] = cfg.beta1 * mm.data[i] + (1.0 - cfg.beta1) * g.data[i];
        vv.data[i] = cfg.beta2 * vv.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
        double mhat = mm.data[i] / bc1;
        double vhat = vv.data[i] / bc2;
        w.data[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * w.data[i]);
      }
    }
  }
};

}  // namespace

DenoiserParams finetune(const DenoiserParams& start, const TrainCorpus& corpus, Objective obj,
                        const TabomConfig& tcfg, const OptimizerConfig& ocfg,
                        const TelemetrySink& sink) {
  bool uses_pairs = obj == Objective::SftGt;
  size_t n_items = uses_pairs ? corpus.pairs.size() : corpus.trajectories.size();
  if (n_items == 0)
    throw std::invalid_argument("finetune: corpus has no items for objective " +
                                objective_name(obj));
  int response_len = corpus.response_len > 0 ? corpus.response_len
                                             : start.config.max_response_len;

  DenoiserParams params = start;
  params.version_tag = start.version_tag + "|" + objective_name(obj) + "-s" +
                       std::to_string(ocfg.seed);

  int steps_per_epoch =
      static_cast<int>((n_items + ocfg.batch_size - 1) / ocfg.batch_size);
  int total_steps = steps_per_epoch * ocfg.epochs;
  AdamW opt(ocfg, total_steps, params);
  std::mt19937_64 rng(ocfg.seed);

  std::vector<size_t> order(n_items);
  std::iota(order.begin(), order.end(), 0);

  int global_step = 0;
  for (int epoch = 0; epoch < ocfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t off = 0; off < n_items; off += ocfg.batch_size) {
      size_t end = std::min(n_items, off + ocfg.batch_size);
      std::map<std::string, Array> grads;
      for (auto& [name, a] : params.tensors) grads.emplace(name, Array(a.shape));

      double loss_sum = 0.0, recon_sum = 0.0, rank_sum = 0.0;
      int pair_total = 0, pair_violated = 0, contributed = 0;

      for (size_t bi = off; bi < end; ++bi) {
        size_t item = order[bi];
        Tape tp;
        BoundParams bp = bind_params(tp, params);
        int loss_node = -1;
        LossNodes parts;
        switch (obj) {
          case Objective::SftGt: {
            auto& pr = corpus.pairs[item];
            loss_node = build_nelbo_loss(tp, params, bp, pr.prompt,
                                         pad_answer(pr.answer, params.vocab.eos_id, response_len),
                                         rng);
            break;
          }
          case Objective::SftSd: {
            auto& rec = corpus.trajectories[item];
            loss_node = build_nelbo_loss(tp, params, bp, rec.prompt, rec.answer, rng);
            break;
          }
          case Objective::Dinfer: {
            auto& rec = corpus.trajectories[item];
            if (static_cast<int>(eligible_events(rec, params.vocab.eos_id).size()) < 2) break;
            loss_node = build_dinfer_loss(tp, params, bp, rec, rng);
            break;
          }
          case Objective::TrajMask:
          case Objective::Tabom: {
            TabomConfig cfg = tcfg;
            if (obj == Objective::TrajMask) cfg.lambda = 0.0;
            auto& rec = corpus.trajectories[item];
            auto seg = sample_window(rec, cfg.window, params.vocab.eos_id, rng,
                                     cfg.window_scope);
            if (!seg) break;  // too short: skipped, not padded
            parts = build_tabom_loss(tp, params, bp, *seg, cfg);
            loss_node = parts.total;
            break;
          }
        }
        if (loss_node < 0) continue;
        double loss = tp.value(loss_node).data[0];
        if (std::isnan(loss))
          throw std::runtime_error("finetune: NaN loss at step " + std::to_string(global_step) +
                                   " item " + std::to_string(item) + " (" + objective_name(obj) +
                                   ")");
        tp.backward(loss_node);
        for (auto& [name, id] : bp.ids) {
          const Array& g = tp.grad(id);
          Array& acc = grads.at(name);
          for (int i = 0; i < g.size(); ++i) acc.data[i] += g.data[i];
        }
        loss_sum += loss;
        if (parts.recon >= 0) recon_sum += tp.value(parts.recon).data[0];
        else recon_sum += loss;
        if (parts.rank >= 0) rank_sum += tp.value(parts.rank).data[0];
        pair_total += parts.pair_count;
        pair_violated += parts.violated_pairs;
        ++contributed;
      }
      ++global_step;
      if (contributed == 0) continue;
      for (auto& [name, acc] : grads)
        for (auto& g : acc.data) g /= contributed;
      opt.update(params, grads);
      if (sink) {
        StepTelemetry t;
        t.step = global_step;
        t.objective = objective_name(obj);
        t.loss = loss_sum / contributed;
        t.recon = recon_sum / contributed;
        t.rank = rank_sum / contributed;
        t.violated_pair_fraction =
            pair_total ? static_cast<double>(pair_violated) / pair_total : 0.0;
        sink(t);
      }
    }
  }
  return params;
}

}  // namespace tabom
