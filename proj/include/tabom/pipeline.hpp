#pragma once

#include <map>
#include <string>
#include <vector>

#include "tabom/config.hpp"
#include "tabom/diagnostics.hpp"
#include "tabom/objectives.hpp"

namespace tabom {

/// Typed view of the experiment config file. All knobs come from one file
/// plus --set overrides; TABOM_OUT_DIR overrides the output directory.
struct ExperimentConfig {
  Config raw;

  DenoiserConfig model;
  std::vector<std::string> in_domain;
  std::vector<std::string> ood;

  std::map<std::string, int> pretrain_mix;  // task id -> GT pair count
  OptimizerConfig pretrain_opt;
  unsigned long long pretrain_corpus_seed = 0;

  int distill_prompts = 200;  // per in-domain task
  int distill_per_step = 1;
  double distill_temperature = 0.0;
  int distill_max_new = 8;
  bool distill_keep_invalid = false;
  unsigned long long distill_seed = 0;

  Objective objective = Objective::Tabom;
  TabomConfig tabom;
  OptimizerConfig finetune_opt;
  int finetune_gt_prompts = 200;  // per task, sft-gt only
  unsigned long long finetune_corpus_seed = 0;

  int eval_n = 100;
  int eval_per_step = 1;
  unsigned long long eval_seed = 0;

  int tds_samples = 1;
  unsigned long long tds_seed = 0;

  std::vector<double> curve_ratios;
  unsigned long long curve_seed = 0;

  std::vector<int> ablate_windows;  // optional extra W sweep

  std::string out_dir;

  static ExperimentConfig load(const std::string& path,
                               const std::vector<std::string>& overrides = {});
  static ExperimentConfig from(Config c);
  void validate() const;
};

/// One experiment directory: every subcommand reads its inputs from and
/// writes its artifacts into cfg.out_dir, updating manifest.json with a
/// config hash and per-file content hashes.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg);

  void pretrain();
  void distill();
  void finetune();
  /// Evaluates a checkpoint over the full task split. Empty name means the
  /// finetuned checkpoint of the configured objective.
  void eval(const std::string& checkpoint = "", const std::string& label = "");
  void tds_run(const std::string& checkpoint = "", const std::string& label = "");
  void ce_curve();
  void ablate();
  void report();

  std::string path(const std::string& file) const;
  const ExperimentConfig& config() const { return cfg_; }

 private:
  DenoiserParams load_model(const std::string& file, const std::string& producer) const;
  std::vector<TrajectoryRecord> load_sd_corpus() const;
  void record_artifact(const std::string& file);
  std::string finetuned_name() const;

  ExperimentConfig cfg_;
};

/// Minimal static line chart; one polyline per named series.
void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::vector<double>& x,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series);

}  // namespace tabom
