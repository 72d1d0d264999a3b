// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/lab.hpp"

#include <bit>
#include <cmath>

#include <spdlog/spdlog.h>

#include "erosion/errors.hpp"
#include "erosion/parallel.hpp"

namespace erosion {

namespace {

std::uint64_t alpha_key(double alpha) {
  return static_cast<std::uint64_t>(std::llround(alpha * 1e6));
}

SystemResult evaluate_system(const ExperimentConfig& config, const World& world,
                             const std::string& name, const std::string& stage1_hash,
                             const PolicyParams& params, std::uint64_t rep_seed) {
  SystemResult r;
  r.system = name;
  r.stage1_hash = stage1_hash;
  r.params_hash = params_hash(params);
  r.metrics = evaluate_policy(world, params, config.judge, evaluation_seed(rep_seed),
                              config.evaluation);
  return r;
}

}  // namespace

CorpusCounts corpus_counts(double alpha, std::size_t n_real, std::size_t n_synthetic_pure) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must be in [0,1]");
  if (alpha == 1.0) return {0, n_synthetic_pure};
  const double n = static_cast<double>(n_real) * alpha / (1.0 - alpha);
  return {n_real, static_cast<std::size_t>(std::llround(n))};
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate) {
  return derive_seed(master, "replicate", replicate);
}

World replicate_world(const ExperimentConfig& config, std::uint64_t rep_seed) {
  WorldConfig wc = config.world;
  wc.master_seed = derive_seed(rep_seed, "world");
  return build_world(wc);
}

std::uint64_t evaluation_seed(std::uint64_t rep_seed) {
  return derive_seed(rep_seed, "eval");
}

Corpus stage1_corpus(const ExperimentConfig& config, const World& world, double alpha,
                     std::uint64_t rep_seed) {
  const CorpusCounts counts = corpus_counts(alpha, config.n_real, config.n_synthetic_pure);
  return build_mixed_corpus(world, counts.n_real, counts.n_synthetic,
                            derive_seed(rep_seed, "corpus", alpha_key(alpha)));
}

Stage1 train_stage1(const ExperimentConfig& config, const World& world, double alpha,
                    std::uint64_t rep_seed) {
  Corpus corpus = stage1_corpus(config, world, alpha, rep_seed);
  PolicyParams params = init_policy(world.vocab());
  SftReport sft = train_sft(params, world.prompts(), corpus.items(), config.train.sft,
                            derive_seed(rep_seed, "sft", alpha_key(alpha)));
  return Stage1{std::move(corpus), freeze_reference(params), std::move(sft)};
}

std::vector<Utterance> rejection_sample(const World& world, const PolicyParams& params,
                                        const JudgeConfig& judge,
                                        const RejectionSamplingConfig& config,
                                        std::uint64_t seed) {
  config.validate();
  const auto prompts = world.prompts();
  std::vector<Utterance> out(prompts.size());
  GenerationConfig gen;
  gen.temperature = config.temperature;
  gen.nucleus_p = config.nucleus_p;
  parallel_for(prompts.size(), [&](std::size_t p) {
    const Prompt& prompt = prompts[p];
    bool have = false;
    JudgeVerdict best;
    for (std::size_t i = 0; i < config.candidates; ++i) {
      Rng rng = Rng::stream(seed, "rs", prompt.id, i);
      Utterance u = sample_sequence(params, prompt, gen, rng);
      Rng judge_rng = Rng::stream(seed, "rs.judge", prompt.id, i);
      const JudgeVerdict v = judge_candidate(world, prompt, u.tokens, judge, judge_rng);
      bool better = !have;
      if (have && v.accepted != best.accepted) {
        better = v.accepted;
      } else if (have) {
        const int failures = std::popcount(v.failure_reasons);
        const int best_failures = std::popcount(best.failure_reasons);
        better = failures < best_failures || (failures == best_failures && v.wer < best.wer);
      }
      if (better) {
        have = true;
        best = v;
        out[p] = std::move(u);
      }
    }
  });
  return out;
}

MethodRun run_method(const ExperimentConfig& config, Method method, const World& world,
                     const Stage1& stage1, std::uint64_t rep_seed) {
  const std::string& s1 = stage1.policy.hash();
  const std::string name = to_string(method);
  MethodRun run{{}, stage1.policy.params(), std::nullopt, std::nullopt};
  switch (method) {
    case Method::kSft:
      break;
    case Method::kDgsa:
    case Method::kStandardDpo: {
      std::vector<Utterance> reals;
      for (const Utterance& u : stage1.corpus.items()) {
        if (u.source == Source::kReal) reals.push_back(u);
      }
      DgsaConfig dc = config.dgsa;
      dc.alpha = stage1.corpus.alpha();
      if (method == Method::kStandardDpo) dc.forced_weights = WeightPair{0.0, 1.0};
      DgsaResult r = align_dgsa(world, stage1.policy, reals, dc, config.train.preference,
                                derive_seed(rep_seed, "dgsa"));
      run.params = std::move(r.params);
      run.dgsa = std::move(r.log);
      break;
    }
    case Method::kRejectionSampling: {
      const std::uint64_t eval = evaluation_seed(rep_seed);
      const auto selected = rejection_sample(world, run.params, config.judge, config.rejection,
                                             derive_seed(rep_seed, "rs"));
      run.result.system = name;
      run.result.stage1_hash = s1;
      run.result.params_hash = params_hash(run.params);
      run.result.metrics =
          corpus_metrics(world, selected, config.judge, derive_seed(eval, "eval.judge"));
      return run;
    }
    case Method::kSelfTraining:
    case Method::kTdsc: {
      const TdscConfig tc = method == Method::kTdsc
                                ? config.tdsc_config()
                                : self_training_preset(config.tdsc_config());
      run.tdsc = run_tdsc(run.params, world, tc, config.train, derive_seed(rep_seed, "tdsc"));
      break;
    }
  }
  run.result = evaluate_system(config, world, name, s1, run.params, rep_seed);
  if (run.dgsa) run.result.weights = run.dgsa->weights;
  return run;
}

const ScalingRow& ScalingReport::row(std::size_t alpha_index, std::size_t replicate) const {
  return rows.at(alpha_index * replicates + replicate);
}

std::vector<MetricsRecord> ScalingReport::mean_by_alpha() const {
  std::vector<MetricsRecord> out(alpha_grid.size());
  for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
    MetricsRecord& m = out[a];
    for (std::size_t r = 0; r < replicates; ++r) {
      const MetricsRecord& x = row(a, r).metrics;
      m.wer += x.wer;
      m.h_p += x.h_p;
      m.repetition += x.repetition;
      m.pass_rate += x.pass_rate;
      m.sample_count += x.sample_count;
    }
    const double n = static_cast<double>(replicates);
    m.wer /= n;
    m.h_p /= n;
    m.repetition /= n;
    m.pass_rate /= n;
  }
  return out;
}

double ScalingReport::peak_alpha() const {
  const auto mean = mean_by_alpha();
  std::size_t best = 0;
  for (std::size_t a = 1; a < mean.size(); ++a) {
    if (mean[a].h_p > mean[best].h_p) best = a;
  }
  return alpha_grid.at(best);
}

ScalingReport run_scaling_sweep(const ExperimentConfig& config) {
  config.validate();
  ScalingReport report;
  report.alpha_grid = config.alpha_grid;
  report.replicates = config.replicates;
  const std::size_t cells = config.alpha_grid.size() * config.replicates;
  report.rows.resize(cells);
  parallel_for(cells, [&](std::size_t cell) {
    const std::size_t a = cell / config.replicates;
    const std::size_t r = cell % config.replicates;
    const double alpha = config.alpha_grid[a];
    const std::uint64_t seed = replicate_seed(config.seed, r);
    const World world = replicate_world(config, seed);
    const Stage1 stage1 = train_stage1(config, world, alpha, seed);
    ScalingRow& row = report.rows[cell];
    row.alpha = alpha;
    row.replicate = r;
    row.seed = seed;
    row.counts = {stage1.corpus.real_count(), stage1.corpus.synthetic_count()};
    row.params_hash = stage1.policy.hash();
    row.metrics = evaluate_policy(world, stage1.policy.params(), config.judge,
                                  evaluation_seed(seed), config.evaluation);
    spdlog::info("scaling alpha={} replicate={} wer={:.4f} h_p={:.4f}", alpha, r,
                 row.metrics.wer, row.metrics.h_p);
  });
  return report;
}

const SystemResult& ComparisonReport::find(std::size_t replicate,
                                           const std::string& system) const {
  for (const ComparisonRow& row : rows) {
    if (row.replicate == replicate && row.system.system == system) return row.system;
  }
  throw DomainError("no row for system " + system + " in replicate " +
                    std::to_string(replicate));
}

std::vector<RoundRow> round_rows(const std::string& system, std::size_t replicate,
                                 const TdscRun& run) {
  std::vector<RoundRow> out;
  for (const TdscIterationLog& log : run.rounds()) {
    RoundRow row;
    row.system = system;
    row.replicate = replicate;
    row.k = log.k;
    row.t_high = log.t_high;
    row.pool = log.pool;
    row.accepted = log.accepted;
    row.rejected = log.rejected;
    row.pairs = log.pairs;
    out.push_back(row);
  }
  return out;
}

std::vector<LoserAudit> audit_losers(const World& world, const JudgeConfig& judge,
                                     const std::string& system, std::size_t replicate,
                                     const TdscRun& run) {
  std::vector<LoserAudit> out;
  for (const TdscIterationLog& log : run.rounds()) {
    for (const PreferenceTriplet& t : log.mined) {
      const Prompt& prompt = world.prompt(t.prompt_id);
      const auto& tokens = t.dispreferred.tokens;
      const double rep = repetition_rate(tokens, judge.repetition_window);
      const JudgeVerdict v = apply_criteria(0.0, rep, tokens.size(), prompt.length(), judge);
      LoserAudit a;
      a.system = system;
      a.replicate = replicate;
      a.k = log.k;
      a.prompt_id = t.prompt_id;
      a.length_ratio = v.length_ratio;
      a.repetition = rep;
      a.length_ok = v.length_ok();
      a.repetition_ok = v.repetition_ok();
      out.push_back(a);
    }
  }
  return out;
}

ComparisonReport run_alignment_comparison(const ExperimentConfig& config) {
  config.validate();
  if (config.alpha >= 1.0) {
    throw PreconditionError(
        "the alignment comparison needs real data (alpha < 1); use the TDSC "
        "comparison for a purely synthetic start");
  }
  const Method methods[] = {Method::kSft, Method::kStandardDpo, Method::kRejectionSampling,
                            Method::kDgsa};
  constexpr std::size_t kMethods = std::size(methods);
  ComparisonReport report;
  report.kind = "alignment";
  report.alpha = config.alpha;
  report.replicates = config.replicates;
  std::vector<ComparisonRow> rows(config.replicates * kMethods);
  parallel_for(config.replicates, [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(config.seed, r);
    const World world = replicate_world(config, seed);
    const Stage1 stage1 = train_stage1(config, world, config.alpha, seed);
    for (std::size_t m = 0; m < kMethods; ++m) {
      MethodRun run = run_method(config, methods[m], world, stage1, seed);
      rows[r * kMethods + m] = ComparisonRow{r, seed, std::move(run.result)};
      spdlog::info("alignment replicate={} system={} wer={:.4f} h_p={:.4f}", r,
                   to_string(methods[m]), rows[r * kMethods + m].system.metrics.wer,
                   rows[r * kMethods + m].system.metrics.h_p);
    }
  });
  report.rows = std::move(rows);
  return report;
}

ComparisonReport run_tdsc_comparison(const ExperimentConfig& config) {
  config.validate();
  const Method methods[] = {Method::kSft, Method::kSelfTraining, Method::kRejectionSampling,
                            Method::kTdsc};
  constexpr std::size_t kMethods = std::size(methods);
  ComparisonReport report;
  report.kind = "tdsc";
  report.alpha = 1.0;
  report.replicates = config.replicates;
  std::vector<ComparisonRow> rows(config.replicates * kMethods);
  std::vector<std::vector<RoundRow>> rounds(config.replicates);
  std::vector<std::vector<LoserAudit>> losers(config.replicates);
  parallel_for(config.replicates, [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(config.seed, r);
    const World world = replicate_world(config, seed);
    const Stage1 stage1 = train_stage1(config, world, 1.0, seed);
    for (std::size_t m = 0; m < kMethods; ++m) {
      MethodRun run = run_method(config, methods[m], world, stage1, seed);
      const std::string name = to_string(methods[m]);
      if (run.tdsc) {
        auto rr = round_rows(name, r, *run.tdsc);
        rounds[r].insert(rounds[r].end(), rr.begin(), rr.end());
        auto la = audit_losers(world, config.judge, name, r, *run.tdsc);
        losers[r].insert(losers[r].end(), la.begin(), la.end());
      }
      rows[r * kMethods + m] = ComparisonRow{r, seed, std::move(run.result)};
      spdlog::info("tdsc replicate={} system={} wer={:.4f} h_p={:.4f}", r, name,
                   rows[r * kMethods + m].system.metrics.wer,
                   rows[r * kMethods + m].system.metrics.h_p);
    }
  });
  report.rows = std::move(rows);
  for (std::size_t r = 0; r < config.replicates; ++r) {
    report.rounds.insert(report.rounds.end(), rounds[r].begin(), rounds[r].end());
    report.losers.insert(report.losers.end(), losers[r].begin(), losers[r].end());
  }
  return report;
}

}  // namespace erosion
