#include "tabom/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tabom {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

OptimizerConfig read_opt(const Config& c, const std::string& section) {
  OptimizerConfig o;
  o.lr = c.real(section + ".lr", o.lr);
  o.weight_decay = c.real(section + ".weight_decay", o.weight_decay);
  o.warmup_steps = static_cast<int>(c.integer(section + ".warmup", o.warmup_steps));
  o.epochs = static_cast<int>(c.integer(section + ".epochs", o.epochs));
  o.batch_size = static_cast<int>(c.integer(section + ".batch", o.batch_size));
  o.seed = static_cast<unsigned long long>(c.integer(section + ".seed", 0));
  return o;
}

std::string file_contents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path,
                                        const std::vector<std::string>& overrides) {
  Config c = Config::parse_file(path);
  for (auto& o : overrides) c.apply_override(o);
  return from(std::move(c));
}

ExperimentConfig ExperimentConfig::from(Config c) {
  ExperimentConfig e;
  e.model.layers = static_cast<int>(c.integer("model.layers", 2));
  e.model.heads = static_cast<int>(c.integer("model.heads", 2));
  e.model.model_dim = static_cast<int>(c.integer("model.dim", 32));
  e.model.ffn_dim = static_cast<int>(c.integer("model.ffn", 64));
  e.model.max_prompt_len = static_cast<int>(c.integer("model.max_prompt", 8));
  e.model.max_response_len = static_cast<int>(c.integer("model.max_response", 8));
  e.model.seed = static_cast<unsigned long long>(c.integer("model.seed", 1));

  e.in_domain = c.list("tasks.in_domain");
  e.ood = c.list("tasks.ood");

  for (auto& item : c.list("pretrain.mix")) {
    size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: pretrain.mix entries must be task=count, got '" +
                                  item + "'");
    e.pretrain_mix[item.substr(0, eq)] = std::stoi(item.substr(eq + 1));
  }
  e.pretrain_opt = read_opt(c, "pretrain");
  e.pretrain_corpus_seed = static_cast<unsigned long long>(c.integer("pretrain.corpus_seed", 11));

  e.distill_prompts = static_cast<int>(c.integer("distill.prompts", 200));
  e.distill_per_step = static_cast<int>(c.integer("distill.per_step", 1));
  e.distill_temperature = c.real("distill.temperature", 0.0);
  e.distill_max_new = static_cast<int>(c.integer("distill.max_new", e.model.max_response_len));
  e.distill_keep_invalid = c.boolean("distill.keep_invalid", false);
  e.distill_seed = static_cast<unsigned long long>(c.integer("distill.seed", 21));

  e.objective = objective_from_string(c.str("finetune.objective", "tabom"));
  e.finetune_opt = read_opt(c, "finetune");
  e.finetune_gt_prompts = static_cast<int>(c.integer("finetune.gt_prompts", 200));
  e.finetune_corpus_seed =
      static_cast<unsigned long long>(c.integer("finetune.corpus_seed", 41));

  e.tabom.window = static_cast<int>(c.integer("tabom.window", 4));
  e.tabom.margin = c.real("tabom.margin", 0.2);
  e.tabom.lambda = c.real("tabom.lambda", 1.0);
  std::string ctx = c.str("tabom.context", "exact");
  if (ctx == "exact") e.tabom.context_mode = ContextMode::Exact;
  else if (ctx == "shared") e.tabom.context_mode = ContextMode::Shared;
  else throw std::invalid_argument("config: tabom.context must be exact|shared, got '" + ctx + "'");
  std::string scope = c.str("tabom.scope", "local");
  if (scope == "local") e.tabom.window_scope = WindowScope::Local;
  else if (scope == "global") e.tabom.window_scope = WindowScope::Global;
  else throw std::invalid_argument("config: tabom.scope must be local|global, got '" + scope + "'");

  e.eval_n = static_cast<int>(c.integer("eval.n", 100));
  e.eval_per_step = static_cast<int>(c.integer("eval.per_step", 1));
  e.eval_seed = static_cast<unsigned long long>(c.integer("eval.seed", 51));

  e.tds_samples = static_cast<int>(c.integer("tds.samples", 1));
  e.tds_seed = static_cast<unsigned long long>(c.integer("tds.seed", 61));

  if (c.has("curve.ratios")) {
    for (auto& r : c.list("curve.ratios")) e.curve_ratios.push_back(std::stod(r));
  } else {
    for (int i = 1; i <= 9; ++i) e.curve_ratios.push_back(i / 10.0);
  }
  e.curve_seed = static_cast<unsigned long long>(c.integer("curve.seed", 71));

  if (c.has("ablate.windows"))
    for (auto& w : c.list("ablate.windows")) e.ablate_windows.push_back(std::stoi(w));

  e.out_dir = c.str("out.dir");
  if (const char* env = std::getenv("TABOM_OUT_DIR")) e.out_dir = env;

  e.raw = std::move(c);
  e.validate();
  return e;
}

void ExperimentConfig::validate() const {
  model.validate();
  tabom.validate();
  if (in_domain.empty()) throw std::invalid_argument("config: tasks.in_domain is empty");
  auto known = builtin_task_ids();
  auto check_task = [&](const std::string& id) {
    if (std::find(known.begin(), known.end(), id) == known.end())
      throw std::invalid_argument("config: unknown task id '" + id + "'");
  };
  for (auto& t : in_domain) check_task(t);
  for (auto& t : ood) check_task(t);
  for (auto& [t, n] : pretrain_mix) {
    check_task(t);
    if (n <= 0) throw std::invalid_argument("config: pretrain.mix count for " + t + " must be > 0");
  }
  if (distill_max_new > model.max_response_len)
    throw std::invalid_argument("config: distill.max_new exceeds model.max_response");
  if (out_dir.empty()) throw std::invalid_argument("config: out.dir is empty");
}

Pipeline::Pipeline(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  std::filesystem::create_directories(cfg_.out_dir);
}

std::string Pipeline::path(const std::string& file) const { return cfg_.out_dir + "/" + file; }

std::string Pipeline::finetuned_name() const {
  return "ft_" + objective_name(cfg_.objective) + ".ckpt";
}

void Pipeline::record_artifact(const std::string& file) {
  nlohmann::json m;
  std::string mpath = path("manifest.json");
  if (std::filesystem::exists(mpath)) m = nlohmann::json::parse(file_contents(mpath));
  m["config_hash"] = hex64(fnv1a64(cfg_.raw.canonical()));
  m["artifacts"][file] = hex64(fnv1a64(file_contents(path(file))));
  std::ofstream out(mpath);
  out << m.dump(2) << "\n";
}

DenoiserParams Pipeline::load_model(const std::string& file, const std::string& producer) const {
  std::string p = path(file);
  if (!std::filesystem::exists(p))
    throw std::runtime_error("missing " + p + "; run `" + producer + "` first");
  return load_checkpoint(p);
}

void Pipeline::pretrain() {
  auto vocab = task_vocabulary();
  auto params = DenoiserParams::init(cfg_.model, vocab, "base");

  TrainCorpus corpus;
  corpus.response_len = cfg_.model.max_response_len;
  unsigned long long salt = 0;
  for (auto& [task_id, n] : cfg_.pretrain_mix) {
    auto task = get_task(task_id, vocab);
    auto pairs = generate_corpus(task, vocab, n, cfg_.pretrain_corpus_seed + salt++);
    corpus.pairs.insert(corpus.pairs.end(), pairs.begin(), pairs.end());
  }

  std::ofstream log(path("pretrain_log.csv"));
  log << "step,loss\n";
  auto trained = tabom::finetune(params, corpus, Objective::SftGt, cfg_.tabom, cfg_.pretrain_opt,
                          [&](const StepTelemetry& t) {
                            log << t.step << "," << fmt(t.loss) << "\n";
                          });
  log.close();
  trained.version_tag = "base-s" + std::to_string(cfg_.pretrain_opt.seed);
  save_checkpoint(trained, path("base.ckpt"));
  record_artifact("pretrain_log.csv");
  record_artifact("base.ckpt");
}

void Pipeline::distill() {
  auto base = load_model("base.ckpt", "pretrain");
  std::ofstream log(path("distill.csv"));
  log << "task,generated,valid,yield\n";
  unsigned long long salt = 0;
  for (auto& task_id : cfg_.in_domain) {
    auto task = get_task(task_id, base.vocab);
    auto prompts = generate_corpus(task, base.vocab, cfg_.distill_prompts,
                                   cfg_.distill_seed + salt);
    DistillConfig dc;
    dc.max_new_tokens = cfg_.distill_max_new;
    dc.schedule = DecodeSchedule::uniform(cfg_.distill_max_new, cfg_.distill_per_step,
                                          cfg_.distill_temperature);
    dc.keep_invalid = cfg_.distill_keep_invalid;
    dc.seed = cfg_.distill_seed + salt;
    DistillSummary sum;
    auto recs = tabom::distill(base, task, prompts, dc, &sum);
    save_corpus(recs, path("sd_" + task_id + ".jsonl"));
    record_artifact("sd_" + task_id + ".jsonl");
    log << task_id << "," << sum.generated << "," << sum.valid << "," << fmt(sum.yield_ratio())
        << "\n";
    ++salt;
  }
  log.close();
  record_artifact("distill.csv");
}

std::vector<TrajectoryRecord> Pipeline::load_sd_corpus() const {
  std::vector<TrajectoryRecord> all;
  auto vocab = task_vocabulary();
  for (auto& task_id : cfg_.in_domain) {
    std::string p = path("sd_" + task_id + ".jsonl");
    if (!std::filesystem::exists(p))
      throw std::runtime_error("missing " + p + "; run `distill` first");
    auto recs = load_corpus(p, vocab);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  return all;
}

void Pipeline::finetune() {
  auto base = load_model("base.ckpt", "pretrain");

  TrainCorpus corpus;
  corpus.response_len = cfg_.model.max_response_len;
  if (cfg_.objective == Objective::SftGt) {
    unsigned long long salt = 0;
    for (auto& task_id : cfg_.in_domain) {
      auto task = get_task(task_id, base.vocab);
      auto pairs = generate_corpus(task, base.vocab, cfg_.finetune_gt_prompts,
                                   cfg_.finetune_corpus_seed + salt++);
      corpus.pairs.insert(corpus.pairs.end(), pairs.begin(), pairs.end());
    }
  } else {
    corpus.trajectories = load_sd_corpus();
  }

  std::string label = objective_name(cfg_.objective);
  std::ofstream log(path("finetune_" + label + "_log.csv"));
  log << "step,loss,recon,rank,violated_pair_fraction\n";
  auto trained = tabom::finetune(base, corpus, cfg_.objective, cfg_.tabom, cfg_.finetune_opt,
                                 [&](const StepTelemetry& t) {
                                   log << t.step << "," << fmt(t.loss) << "," << fmt(t.recon)
                                       << "," << fmt(t.rank) << ","
                                       << fmt(t.violated_pair_fraction) << "\n";
                                 });
  log.close();
  save_checkpoint(trained, path(finetuned_name()));
  record_artifact("finetune_" + label + "_log.csv");
  record_artifact(finetuned_name());
}

void Pipeline::eval(const std::string& checkpoint, const std::string& label) {
  std::string ckpt = checkpoint.empty() ? finetuned_name() : checkpoint;
  std::string lab = label.empty()
                        ? (checkpoint.empty() ? objective_name(cfg_.objective) : "base")
                        : label;
  auto params = load_model(ckpt, checkpoint.empty() ? "finetune" : "pretrain");
  auto sched = DecodeSchedule::uniform(cfg_.model.max_response_len, cfg_.eval_per_step);

  std::string file = "eval_" + lab + ".csv";
  std::ofstream out(path(file));
  out << "task,domain,exact_match,samples,version\n";
  auto run_split = [&](const std::vector<std::string>& ids, const char* domain) {
    for (auto& task_id : ids) {
      auto task = get_task(task_id, params.vocab);
      auto r = evaluate(params, task, sched, cfg_.eval_n, cfg_.eval_seed);
      out << task_id << "," << domain << "," << fmt(r.exact_match) << "," << r.samples << ","
          << params.version_tag << "\n";
    }
  };
  run_split(cfg_.in_domain, "in");
  run_split(cfg_.ood, "ood");
  out.close();
  record_artifact(file);
}

void Pipeline::tds_run(const std::string& checkpoint, const std::string& label) {
  std::string ckpt = checkpoint.empty() ? finetuned_name() : checkpoint;
  std::string lab = label.empty()
                        ? (checkpoint.empty() ? objective_name(cfg_.objective) : "base")
                        : label;
  auto params = load_model(ckpt, checkpoint.empty() ? "finetune" : "pretrain");

  std::vector<CorpusPair> prompts;
  unsigned long long salt = 0;
  for (auto& task_id : cfg_.in_domain) {
    auto task = get_task(task_id, params.vocab);
    auto pairs = generate_corpus(task, params.vocab, std::max(1, cfg_.eval_n / 2),
                                 cfg_.tds_seed + salt++);
    prompts.insert(prompts.end(), pairs.begin(), pairs.end());
  }
  auto sched = DecodeSchedule::uniform(cfg_.model.max_response_len, cfg_.eval_per_step);
  auto rep = tds(params, prompts, sched, cfg_.tds_samples, cfg_.tds_seed,
                 cfg_.in_domain.front());

  std::string file = "tds_" + lab + ".csv";
  std::ofstream out(path(file));
  out << "# population variance per step, averaged over contributing trajectories\n";
  out << "step,tds\n";
  std::vector<double> xs, ys;
  for (auto& [t, v] : rep.per_step) {
    out << t << "," << fmt(v) << "\n";
    xs.push_back(t);
    ys.push_back(v);
  }
  out << "mean," << fmt(rep.mean) << "\n";
  out.close();
  record_artifact(file);

  write_svg_line_chart(path("tds_" + lab + ".svg"), "entropy spread per step (" + lab + ")", xs,
                       {{"tds", ys}});
  record_artifact("tds_" + lab + ".svg");
}

void Pipeline::ce_curve() {
  auto base = load_model("base.ckpt", "pretrain");
  std::vector<CorpusPair> gt, sd;
  unsigned long long salt = 0;
  for (auto& task_id : cfg_.in_domain) {
    auto task = get_task(task_id, base.vocab);
    auto pairs = generate_corpus(task, base.vocab, std::max(1, cfg_.distill_prompts / 4),
                                 cfg_.curve_seed + salt);
    DistillConfig dc;
    dc.max_new_tokens = cfg_.distill_max_new;
    dc.schedule = DecodeSchedule::uniform(cfg_.distill_max_new, cfg_.distill_per_step,
                                          cfg_.distill_temperature);
    dc.keep_invalid = true;  // curves compare data distributions, not quality
    dc.seed = cfg_.curve_seed + salt;
    auto recs = tabom::distill(base, task, pairs, dc);
    for (size_t i = 0; i < pairs.size(); ++i) {
      gt.push_back(pairs[i]);
      sd.push_back({recs[i].prompt, recs[i].answer});
    }
    ++salt;
  }
  auto curve = ce_vs_mask_ratio(base, gt, sd, cfg_.curve_ratios, cfg_.model.max_response_len,
                                cfg_.curve_seed);

  std::ofstream out(path("ce_curve.csv"));
  out << "ratio,ce_gt,ce_sd\n";
  for (size_t i = 0; i < curve.ratios.size(); ++i)
    out << fmt(curve.ratios[i]) << "," << fmt(curve.ce_gt[i]) << "," << fmt(curve.ce_sd[i])
        << "\n";
  out.close();
  record_artifact("ce_curve.csv");

  write_svg_line_chart(path("ce_curve.svg"), "cross entropy vs mask ratio", curve.ratios,
                       {{"gt", curve.ce_gt}, {"sd", curve.ce_sd}});
  record_artifact("ce_curve.svg");
}

void Pipeline::ablate() {
  auto base = load_model("base.ckpt", "pretrain");
  auto sd = load_sd_corpus();
  TrainCorpus corpus;
  corpus.response_len = cfg_.model.max_response_len;
  corpus.trajectories = std::move(sd);
  auto sched = DecodeSchedule::uniform(cfg_.model.max_response_len, cfg_.eval_per_step);

  std::ofstream out(path("ablate.csv"));
  out << "arm,scope,lambda,window,task,domain,exact_match\n";
  auto run_arm = [&](const std::string& arm, TabomConfig tc) {
    auto trained = tabom::finetune(base, corpus, Objective::Tabom, tc, cfg_.finetune_opt);
    auto emit = [&](const std::vector<std::string>& ids, const char* domain) {
      for (auto& task_id : ids) {
        auto task = get_task(task_id, trained.vocab);
        auto r = evaluate(trained, task, sched, cfg_.eval_n, cfg_.eval_seed);
        out << arm << "," << (tc.window_scope == WindowScope::Local ? "local" : "global") << ","
            << fmt(tc.lambda) << "," << tc.window << "," << task_id << "," << domain << ","
            << fmt(r.exact_match) << "\n";
      }
    };
    emit(cfg_.in_domain, "in");
    emit(cfg_.ood, "ood");
  };

  // the four-arm grid: {local, global} x {ranking on, off}
  for (auto scope : {WindowScope::Local, WindowScope::Global})
    for (bool rank : {true, false}) {
      TabomConfig tc = cfg_.tabom;
      tc.window_scope = scope;
      if (!rank) tc.lambda = 0.0;
      std::string arm = std::string(scope == WindowScope::Local ? "local" : "global") +
                        (rank ? "+rank" : "-rank");
      run_arm(arm, tc);
    }
  // optional window-width sweep on the local+rank arm
  for (int w : cfg_.ablate_windows) {
    TabomConfig tc = cfg_.tabom;
    tc.window_scope = WindowScope::Local;
    tc.window = w;
    run_arm("W=" + std::to_string(w), tc);
  }
  out.close();
  record_artifact("ablate.csv");
}

void Pipeline::report() {
  std::string base_csv = path("eval_base.csv");
  if (!std::filesystem::exists(base_csv))
    throw std::runtime_error("missing " + base_csv + "; run `eval` on base.ckpt first");

  struct Row {
    std::string domain;
    double em;
  };
  auto read_eval = [](const std::string& p) {
    std::map<std::string, Row> rows;  // task -> row
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string task, domain, em;
      std::getline(ls, task, ',');
      std::getline(ls, domain, ',');
      std::getline(ls, em, ',');
      rows[task] = {domain, std::stod(em)};
    }
    return rows;
  };
  auto base_rows = read_eval(base_csv);

  std::vector<std::string> labels;
  for (auto o : {Objective::SftGt, Objective::SftSd, Objective::TrajMask, Objective::Dinfer,
                 Objective::Tabom})
    if (std::filesystem::exists(path("eval_" + objective_name(o) + ".csv")))
      labels.push_back(objective_name(o));

  std::vector<std::string> tasks;
  for (auto& t : cfg_.in_domain) tasks.push_back(t);
  for (auto& t : cfg_.ood) tasks.push_back(t);

  auto avg = [&](const std::map<std::string, Row>& rows, const std::string& domain) {
    double s = 0.0;
    int n = 0;
    for (auto& [task, r] : rows)
      if (r.domain == domain) {
        s += r.em;
        ++n;
      }
    return n ? s / n : 0.0;
  };
  auto signed_delta = [](double v, double b) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f (%+.3f)", v, v - b);
    return std::string(buf);
  };

  std::ofstream md(path("report.md"));
  md << "# Experiment report\n\n";
  md << "Exact-match per task; deltas are against the no-finetune baseline.\n\n";
  md << "| model |";
  for (auto& t : tasks) md << " " << t << " |";
  md << " in-domain avg | ood avg |\n";
  md << "|---|";
  for (size_t i = 0; i < tasks.size() + 2; ++i) md << "---|";
  md << "\n";

  md << "| no-sft |";
  for (auto& t : tasks) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %.3f |", base_rows.at(t).em);
    md << buf;
  }
  {
    char buf[64];
    std::snprintf(buf, sizeof(buf), " %.3f | %.3f |\n", avg(base_rows, "in"),
                  avg(base_rows, "ood"));
    md << buf;
  }
  for (auto& lab : labels) {
    auto rows = read_eval(path("eval_" + lab + ".csv"));
    md << "| " << lab << " |";
    for (auto& t : tasks) md << " " << signed_delta(rows.at(t).em, base_rows.at(t).em) << " |";
    md << " " << signed_delta(avg(rows, "in"), avg(base_rows, "in")) << " | "
       << signed_delta(avg(rows, "ood"), avg(base_rows, "ood")) << " |\n";
  }
  md.close();
  record_artifact("report.md");
}

void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::vector<double>& x,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  if (x.empty() || series.empty())
    throw std::invalid_argument("write_svg_line_chart: nothing to draw");
  const int W = 640, H = 400, ML = 60, MR = 20, MT = 40, MB = 40;
  double xmin = x[0], xmax = x[0], ymin = 1e300, ymax = -1e300;
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (auto& [_, ys] : series)
    for (double v : ys) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double v) { return ML + (v - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double v) { return H - MB - (v - ymin) / (ymax - ymin) * (H - MT - MB); };

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
      << H - MB << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << ML << "\" y=\"" << H - MB + 16 << "\" font-size=\"11\">" << fmt(xmin)
      << "</text>\n";
  out << "<text x=\"" << W - MR - 30 << "\" y=\"" << H - MB + 16 << "\" font-size=\"11\">"
      << fmt(xmax) << "</text>\n";
  out << "<text x=\"4\" y=\"" << H - MB << "\" font-size=\"11\">" << fmt(ymin) << "</text>\n";
  out << "<text x=\"4\" y=\"" << MT + 10 << "\" font-size=\"11\">" << fmt(ymax) << "</text>\n";
  int si = 0;
  for (auto& [name, ys] : series) {
    if (ys.size() != x.size())
      throw std::invalid_argument("write_svg_line_chart: series '" + name + "' length mismatch");
    const char* col = colors[si % 4];
    out << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < x.size(); ++i) out << fmt(px(x[i])) << "," << fmt(py(ys[i])) << " ";
    out << "\"/>\n";
    out << "<text x=\"" << W - MR - 80 << "\" y=\"" << MT + 14 * (si + 1) << "\" fill=\"" << col
        << "\" font-size=\"12\">" << name << "</text>\n";
    ++si;
  }
  out << "</svg>\n";
}

}  // namespace tabom
