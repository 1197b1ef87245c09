#pragma once

#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tabom/tensor.hpp"

namespace tabom {

/// Extended token alphabet. Base tokens occupy ids [0, base_size); the
/// absorbing mask token gets the one id past them and is never emitted
/// as model output.
struct Vocabulary {
  std::vector<std::string> tokens;  // base tokens only
  int eos_id = 0;

  int base_size() const { return static_cast<int>(tokens.size()); }
  int mask_id() const { return base_size(); }
  int size() const { return base_size() + 1; }
  int id_of(const std::string& tok) const;  // throws on unknown token
};

struct DenoiserConfig {
  int layers = 2;
  int heads = 4;
  int model_dim = 128;
  int ffn_dim = 256;
  int max_prompt_len = 16;
  int max_response_len = 16;
  unsigned long long seed = 1;

  void validate() const;  // model_dim % heads == 0, positive sizes
};

/// Named parameter tensors plus the checkpoint identity they carry.
struct DenoiserParams {
  DenoiserConfig config;
  Vocabulary vocab;
  std::string version_tag;
  std::map<std::string, Array> tensors;

  static DenoiserParams init(const DenoiserConfig& cfg, const Vocabulary& vocab,
                             const std::string& tag);
  // All-zero weights: every output row is exactly uniform over base tokens.
  static DenoiserParams zeros(const DenoiserConfig& cfg, const Vocabulary& vocab,
                              const std::string& tag);

  int param_count() const;
};

/// Parameter leaves registered on a tape for one forward/backward pass.
struct BoundParams {
  std::map<std::string, int> ids;
  int id(const std::string& name) const;
};

BoundParams bind_params(Tape& tape, const DenoiserParams& params);

/// Bidirectional transformer forward over [prompt ; response]. Response
/// tokens may include the mask id; prompt tokens must be base tokens.
/// Returns the node id of the [response_len, base_size] logits block.
int denoiser_logits(Tape& tape, const DenoiserParams& params, const BoundParams& bound,
                    std::span<const int> prompt, std::span<const int> response);

/// Probability rows over base tokens for every response position.
Array predict(const DenoiserParams& params, std::span<const int> prompt,
              std::span<const int> response);

/// Shannon entropy in nats of a probability row; rejects rows whose mass
/// deviates from 1 by more than 1e-6.
double token_entropy(std::span<const double> row);

void save_checkpoint(const DenoiserParams& params, const std::string& path);
DenoiserParams load_checkpoint(const std::string& path);

}  // namespace tabom
