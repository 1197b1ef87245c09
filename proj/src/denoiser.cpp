#include "tabom/denoiser.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace tabom {

int Vocabulary::id_of(const std::string& tok) const {
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == tok) return static_cast<int>(i);
  throw std::invalid_argument("Vocabulary: unknown token '" + tok + "'");
}

void DenoiserConfig::validate() const {
  if (layers <= 0 || heads <= 0 || model_dim <= 0 || ffn_dim <= 0 || max_prompt_len <= 0 ||
      max_response_len <= 0)
    throw std::invalid_argument("DenoiserConfig: all sizes must be positive");
  if (model_dim % heads != 0)
    throw std::invalid_argument("DenoiserConfig: model_dim " + std::to_string(model_dim) +
                                " not divisible by heads " + std::to_string(heads));
}

namespace {

std::vector<std::pair<std::string, Shape>> param_layout(const DenoiserConfig& c, int vocab_ext,
                                                        int vocab_base) {
  int s_max = c.max_prompt_len + c.max_response_len;
  std::vector<std::pair<std::string, Shape>> layout = {
      {"tok_emb", {vocab_ext, c.model_dim}},
      {"pos_emb", {s_max, c.model_dim}},
  };
  for (int l = 0; l < c.layers; ++l) {
    std::string p = "l" + std::to_string(l) + ".";
    layout.push_back({p + "ln1.g", {c.model_dim}});
    layout.push_back({p + "ln1.b", {c.model_dim}});
    layout.push_back({p + "attn.wq", {c.model_dim, c.model_dim}});
    layout.push_back({p + "attn.wk", {c.model_dim, c.model_dim}});
    layout.push_back({p + "attn.wv", {c.model_dim, c.model_dim}});
    layout.push_back({p + "attn.wo", {c.model_dim, c.model_dim}});
    layout.push_back({p + "ln2.g", {c.model_dim}});
    layout.push_back({p + "ln2.b", {c.model_dim}});
    layout.push_back({p + "ffn.w1", {c.model_dim, c.ffn_dim}});
    layout.push_back({p + "ffn.b1", {c.ffn_dim}});
    layout.push_back({p + "ffn.w2", {c.ffn_dim, c.model_dim}});
    layout.push_back({p + "ffn.b2", {c.model_dim}});
  }
  layout.push_back({"lnf.g", {c.model_dim}});
  layout.push_back({"lnf.b", {c.model_dim}});
  layout.push_back({"out.w", {c.model_dim, vocab_base}});
  layout.push_back({"out.b", {vocab_base}});
  return layout;
}

bool is_gain(const std::string& name) {
  return name.size() >= 2 && name.substr(name.size() - 2) == ".g";
}
bool is_bias(const std::string& name) {
  auto tail = name.substr(name.find_last_of('.') + 1);
  return tail == "b" || tail == "b1" || tail == "b2";
}

}  // namespace

DenoiserParams DenoiserParams::init(const DenoiserConfig& cfg, const Vocabulary& vocab,
                                    const std::string& tag) {
  cfg.validate();
  DenoiserParams p;
  p.config = cfg;
  p.vocab = vocab;
  p.version_tag = tag;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& [name, shape] : param_layout(cfg, vocab.size(), vocab.base_size())) {
    Array a(shape);
    if (is_gain(name)) {
      std::fill(a.data.begin(), a.data.end(), 1.0);
    } else if (!is_bias(name)) {
      // embeddings small, projections scaled by fan-in so attention logits
      // start O(1) instead of vanishing
      double std_dev = name == "tok_emb" || name == "pos_emb"
                           ? 0.02
                           : 1.0 / std::sqrt(static_cast<double>(shape[0]));
      for (auto& v : a.data) v = std_dev * nd(rng);
    }
    p.tensors.emplace(name, std::move(a));
  }
  return p;
}

DenoiserParams DenoiserParams::zeros(const DenoiserConfig& cfg, const Vocabulary& vocab,
                                     const std::string& tag) {
  cfg.validate();
  DenoiserParams p;
  p.config = cfg;
  p.vocab = vocab;
  p.version_tag = tag;
  for (auto& [name, shape] : param_layout(cfg, vocab.size(), vocab.base_size()))
    p.tensors.emplace(name, Array(shape));
  return p;
}

int DenoiserParams::param_count() const {
  int n = 0;
  for (auto& [_, a] : tensors) n += a.size();
  return n;
}

int BoundParams::id(const std::string& name) const {
  auto it = ids.find(name);
  if (it == ids.end()) throw std::invalid_argument("BoundParams: no tensor named '" + name + "'");
  return it->second;
}

BoundParams bind_params(Tape& tape, const DenoiserParams& params) {
  BoundParams b;
  for (auto& [name, a] : params.tensors) b.ids[name] = tape.leaf(a);
  return b;
}

int denoiser_logits(Tape& tp, const DenoiserParams& params, const BoundParams& bp,
                    std::span<const int> prompt, std::span<const int> response) {
  const DenoiserConfig& c = params.config;
  if (static_cast<int>(prompt.size()) > c.max_prompt_len)
    throw std::invalid_argument("denoiser: prompt length " + std::to_string(prompt.size()) +
                                " exceeds max " + std::to_string(c.max_prompt_len));
  if (static_cast<int>(response.size()) > c.max_response_len)
    throw std::invalid_argument("denoiser: response length " + std::to_string(response.size()) +
                                " exceeds max " + std::to_string(c.max_response_len));
  int lp = static_cast<int>(prompt.size());
  int n = static_cast<int>(response.size());
  int s = lp + n;
  std::vector<int> ids(prompt.begin(), prompt.end());
  ids.insert(ids.end(), response.begin(), response.end());
  for (int i = 0; i < lp; ++i)
    if (ids[i] < 0 || ids[i] >= params.vocab.base_size())
      throw std::invalid_argument("denoiser: prompt token out of base vocabulary");
  for (int i = lp; i < s; ++i)
    if (ids[i] < 0 || ids[i] >= params.vocab.size())
      throw std::invalid_argument("denoiser: response token out of extended vocabulary");

  // response slots use a fixed position base so slot r looks the same to the
  // model no matter how long the prompt is
  std::vector<int> pos(s);
  for (int i = 0; i < lp; ++i) pos[i] = i;
  for (int i = 0; i < n; ++i) pos[lp + i] = c.max_prompt_len + i;
  int h = tp.add(tp.gather(bp.id("tok_emb"), ids), tp.gather(bp.id("pos_emb"), pos));

  int dh = c.model_dim / c.heads;
  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = 0; l < c.layers; ++l) {
    std::string p = "l" + std::to_string(l) + ".";
    int x1 = tp.layer_norm(h, bp.id(p + "ln1.g"), bp.id(p + "ln1.b"));
    int q = tp.matmul(x1, bp.id(p + "attn.wq"));
    int k = tp.matmul(x1, bp.id(p + "attn.wk"));
    int v = tp.matmul(x1, bp.id(p + "attn.wv"));
    std::vector<int> heads_out;
    for (int hd = 0; hd < c.heads; ++hd) {
      int qh = tp.slice_cols(q, hd * dh, dh);
      int kh = tp.slice_cols(k, hd * dh, dh);
      int vh = tp.slice_cols(v, hd * dh, dh);
      int att = tp.softmax_rows(tp.scale(tp.matmul(qh, tp.transpose(kh)), inv_sqrt_dh));
      heads_out.push_back(tp.matmul(att, vh));
    }
    int o = tp.matmul(tp.concat_cols(heads_out), bp.id(p + "attn.wo"));
    h = tp.add(h, o);
    int x2 = tp.layer_norm(h, bp.id(p + "ln2.g"), bp.id(p + "ln2.b"));
    int ffn = tp.add(tp.matmul(tp.gelu(tp.add(tp.matmul(x2, bp.id(p + "ffn.w1")),
                                              bp.id(p + "ffn.b1"))),
                               bp.id(p + "ffn.w2")),
                     bp.id(p + "ffn.b2"));
    h = tp.add(h, ffn);
  }
  int hf = tp.layer_norm(h, bp.id("lnf.g"), bp.id("lnf.b"));
  int logits = tp.add(tp.matmul(hf, bp.id("out.w")), bp.id("out.b"));
  std::vector<int> resp_rows(n);
  for (int i = 0; i < n; ++i) resp_rows[i] = lp + i;
  return tp.gather(logits, resp_rows);
}

Array predict(const DenoiserParams& params, std::span<const int> prompt,
              std::span<const int> response) {
  Tape tp;
  BoundParams bp = bind_params(tp, params);
  int logits = denoiser_logits(tp, params, bp, prompt, response);
  return tp.value(tp.softmax_rows(logits));
}

double token_entropy(std::span<const double> row) {
  double mass = 0.0;
  for (double p : row) {
    if (p < 0.0) throw std::invalid_argument("token_entropy: negative probability");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::invalid_argument("token_entropy: row mass " + std::to_string(mass) +
                                " deviates from 1 beyond 1e-6");
  double h = 0.0;
  for (double p : row)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

void save_checkpoint(const DenoiserParams& params, const std::string& path) {
  nlohmann::json hdr;
  hdr["format"] = "tabom-checkpoint-v1";
  hdr["version_tag"] = params.version_tag;
  hdr["config"] = {{"layers", params.config.layers},
                   {"heads", params.config.heads},
                   {"model_dim", params.config.model_dim},
                   {"ffn_dim", params.config.ffn_dim},
                   {"max_prompt_len", params.config.max_prompt_len},
                   {"max_response_len", params.config.max_response_len},
                   {"seed", params.config.seed}};
  hdr["vocab"] = {{"tokens", params.vocab.tokens}, {"eos_id", params.vocab.eos_id}};
  nlohmann::json entries = nlohmann::json::array();
  for (auto& [name, a] : params.tensors)
    entries.push_back({{"name", name}, {"shape", a.shape}});
  hdr["tensors"] = entries;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  std::string hs = hdr.dump();
  std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (auto& [name, a] : params.tensors)
    out.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

DenoiserParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("load_checkpoint: truncated header in " + path);
  nlohmann::json hdr = nlohmann::json::parse(hs);
  if (hdr.value("format", "") != "tabom-checkpoint-v1")
    throw std::runtime_error("load_checkpoint: unrecognized format in " + path);

  DenoiserParams p;
  p.version_tag = hdr["version_tag"].get<std::string>();
  auto& jc = hdr["config"];
  p.config.layers = jc["layers"].get<int>();
  p.config.heads = jc["heads"].get<int>();
  p.config.model_dim = jc["model_dim"].get<int>();
  p.config.ffn_dim = jc["ffn_dim"].get<int>();
  p.config.max_prompt_len = jc["max_prompt_len"].get<int>();
  p.config.max_response_len = jc["max_response_len"].get<int>();
  p.config.seed = jc["seed"].get<unsigned long long>();
  p.vocab.tokens = hdr["vocab"]["tokens"].get<std::vector<std::string>>();
  p.vocab.eos_id = hdr["vocab"]["eos_id"].get<int>();
  for (auto& e : hdr["tensors"]) {
    Shape shape = e["shape"].get<Shape>();
    Array a(shape);
    in.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_checkpoint: truncated tensor data in " + path);
    p.tensors.emplace(e["name"].get<std::string>(), std::move(a));
  }
  return p;
}

}  // namespace tabom
