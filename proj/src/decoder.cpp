#include "tabom/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tabom {

std::vector<int> MaskedState::masked_positions(int mask_id) const {
  std::vector<int> out;
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == mask_id) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> MaskedState::unmasked_positions(int mask_id) const {
  std::vector<int> out;
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] != mask_id) out.push_back(static_cast<int>(i));
  return out;
}

int DecodeSchedule::total() const {
  return std::accumulate(per_step.begin(), per_step.end(), 0);
}

DecodeSchedule DecodeSchedule::uniform(int n, int b, double temperature, double top_p) {
  if (n <= 0 || b <= 0) throw std::invalid_argument("DecodeSchedule: n and b must be positive");
  DecodeSchedule s;
  s.temperature = temperature;
  s.top_p = top_p;
  int left = n;
  while (left > 0) {
    int take = std::min(b, left);
    s.per_step.push_back(take);
    left -= take;
  }
  return s;
}

std::vector<int> Trajectory::final_tokens() const {
  int n = 0;
  for (auto& e : events) n = std::max(n, e.position + 1);
  std::vector<int> x(n, -1);
  for (auto& e : events) x[e.position] = e.token;
  return x;
}

void Trajectory::check_invariants(int n, double max_entropy) const {
  if (static_cast<int>(events.size()) > n)
    throw std::invalid_argument("Trajectory: more events than positions");
  std::vector<char> seen(n, 0);
  int prev_step = -1;
  int prev_rank = -1;
  for (auto& e : events) {
    if (e.position < 0 || e.position >= n)
      throw std::invalid_argument("Trajectory: event position out of range");
    if (seen[e.position]) throw std::invalid_argument("Trajectory: position decoded twice");
    seen[e.position] = 1;
    if (e.entropy < -1e-12 || e.entropy > max_entropy + 1e-9)
      throw std::invalid_argument("Trajectory: entropy-at-decode out of [0, ln|X|]");
    if (prev_step != -1) {
      if (e.step > prev_step) throw std::invalid_argument("Trajectory: step indices increase");
      if (e.step == prev_step && e.tie_rank != prev_rank + 1)
        throw std::invalid_argument("Trajectory: tie ranks not consecutive within a step");
    }
    if (e.step != prev_step && e.tie_rank != 0)
      throw std::invalid_argument("Trajectory: first event of a step must have tie rank 0");
    prev_step = e.step;
    prev_rank = e.tie_rank;
  }
}

std::vector<int> select_unmask(const std::vector<int>& masked,
                               const std::vector<double>& entropies, int b) {
  if (masked.size() != entropies.size())
    throw std::invalid_argument("select_unmask: index/entropy length mismatch");
  if (b > static_cast<int>(masked.size()))
    throw std::invalid_argument("select_unmask: b = " + std::to_string(b) + " exceeds |masked| = " +
                                std::to_string(masked.size()));
  std::vector<int> order(masked.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (entropies[i] != entropies[j]) return entropies[i] < entropies[j];
    return masked[i] < masked[j];
  });
  std::vector<int> out(b);
  for (int i = 0; i < b; ++i) out[i] = masked[order[i]];
  return out;
}

int sample_row(std::span<const double> row, double temperature, double top_p,
               std::mt19937_64& rng) {
  int v = static_cast<int>(row.size());
  if (temperature == 0.0) {
    int best = 0;
    for (int j = 1; j < v; ++j)
      if (row[j] > row[best]) best = j;
    return best;
  }
  // temperature on probabilities: p^(1/T), renormalized (log-space for safety)
  std::vector<double> logp(v);
  double mx = -1e300;
  for (int j = 0; j < v; ++j) {
    logp[j] = (row[j] > 0.0 ? std::log(row[j]) : -1e300) / temperature;
    mx = std::max(mx, logp[j]);
  }
  std::vector<double> w(v);
  double z = 0.0;
  for (int j = 0; j < v; ++j) {
    w[j] = std::exp(logp[j] - mx);
    z += w[j];
  }
  for (auto& x : w) x /= z;

  std::vector<int> order(v);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (w[i] != w[j]) return w[i] > w[j];
    return i < j;
  });
  // minimal prefix with cumulative mass >= top_p
  double cum = 0.0;
  int keep = 0;
  while (keep < v) {
    cum += w[order[keep]];
    ++keep;
    if (cum >= top_p) break;
  }
  std::uniform_real_distribution<double> unif(0.0, cum);
  double u = unif(rng);
  double acc = 0.0;
  for (int i = 0; i < keep; ++i) {
    acc += w[order[i]];
    if (u <= acc) return order[i];
  }
  return order[keep - 1];
}

DecodeResult decode(const DenoiserParams& params, const std::vector<int>& prompt,
                    const DecodeSchedule& schedule, std::mt19937_64& rng, bool record,
                    const StepObserver& observer) {
  int n = schedule.total();
  if (n > params.config.max_response_len)
    throw std::invalid_argument("decode: schedule length " + std::to_string(n) +
                                " exceeds max response length");
  int mask = params.vocab.mask_id();
  int vbase = params.vocab.base_size();
  int steps = static_cast<int>(schedule.per_step.size());

  MaskedState state;
  state.tokens.assign(n, mask);
  state.timestep = steps;

  DecodeResult result;
  result.trajectory.prompt = prompt;
  result.trajectory.generator_tag = params.version_tag;

  for (int si = 0; si < steps; ++si) {
    int t = steps - si;  // reverse timestep T..1
    Array rows = predict(params, prompt, state.tokens);
    if (observer) observer(t, state, rows);

    std::vector<int> masked = state.masked_positions(mask);
    std::vector<double> entropies(masked.size());
    for (size_t i = 0; i < masked.size(); ++i)
      entropies[i] = token_entropy(
          std::span<const double>(&rows.data[masked[i] * vbase], vbase));

    int b = schedule.per_step[si];
    std::vector<int> chosen = select_unmask(masked, entropies, b);
    for (int rank = 0; rank < b; ++rank) {
      int pos = chosen[rank];
      std::span<const double> row(&rows.data[pos * vbase], vbase);
      int tok = sample_row(row, schedule.temperature, schedule.top_p, rng);
      state.tokens[pos] = tok;
      if (record) {
        double h = 0.0;
        for (size_t i = 0; i < masked.size(); ++i)
          if (masked[i] == pos) h = entropies[i];
        result.trajectory.events.push_back({pos, tok, t, h, rank});
      }
    }
    state.timestep = t - 1;
  }
  result.tokens = state.tokens;
  return result;
}

int effective_length(const std::vector<int>& x0, int eos_id) {
  for (size_t i = 0; i < x0.size(); ++i)
    if (x0[i] == eos_id) return static_cast<int>(i) + 1;
  return static_cast<int>(x0.size());
}

}  // namespace tabom
