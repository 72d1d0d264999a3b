// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/tdsc.hpp"

#include <algorithm>
#include <numeric>

#include "erosion/errors.hpp"
#include "erosion/parallel.hpp"

namespace erosion {

void TemperatureSchedule::validate() const {
  if (!(t_low > 0.0)) throw ConfigError("schedule.t_low", "must be > 0");
  if (!(t_mid > 0.0)) throw ConfigError("schedule.t_mid", "must be > 0");
  if (!(t_high_initial > 0.0)) {
    throw ConfigError("schedule.t_high_initial", "must be > 0");
  }
  if (!(curriculum_rate >= 0.0)) {
    throw ConfigError("schedule.curriculum_rate", "must be >= 0");
  }
  if (candidates_per_temperature < 1) {
    throw ConfigError("schedule.candidates_per_temperature", "must be >= 1");
  }
  if (single_temperature && !(*single_temperature > 0.0)) {
    throw ConfigError("schedule.single_temperature", "must be > 0");
  }
}

std::vector<double> temperature_set_for_iteration(const TemperatureSchedule& schedule,
                                                  std::size_t k) {
  if (schedule.single_temperature) {
    const double t = *schedule.single_temperature;
    return {t, t, t};
  }
  return {schedule.t_low, schedule.t_mid,
          schedule.t_high_initial + schedule.curriculum_rate * static_cast<double>(k)};
}

std::vector<Candidate> generate_candidates(const PolicyParams& params,
                                           const Prompt& prompt,
                                           const TemperatureSchedule& schedule,
                                           std::size_t k, double nucleus_p,
                                           std::uint64_t seed) {
  const auto temps = temperature_set_for_iteration(schedule, k);
  std::vector<Candidate> out;
  out.reserve(temps.size() * schedule.candidates_per_temperature);
  GenerationConfig gen;
  gen.nucleus_p = nucleus_p;
  for (double t : temps) {
    gen.temperature = t;
    for (std::size_t j = 0; j < schedule.candidates_per_temperature; ++j) {
      Candidate c;
      c.index = out.size();
      c.temperature = t;
      Rng rng = Rng::stream(seed, "tdsc.cand", prompt.id, k, c.index);
      c.utterance = sample_sequence(params, prompt, gen, rng);
      out.push_back(std::move(c));
    }
  }
  return out;
}

CandidatePartition partition_candidates(std::span<const JudgeVerdict> verdicts) {
  CandidatePartition p;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    (verdicts[i].accepted ? p.accepted : p.rejected).push_back(i);
  }
  return p;
}

std::optional<PreferenceTriplet> mine_preference_pair(std::span<const Candidate> candidates,
                                                      const JudgeConfig& judge) {
  const Candidate* winner = nullptr;
  const Candidate* loser = nullptr;
  for (const Candidate& c : candidates) {
    const JudgeVerdict& v = c.verdict;
    if (v.accepted) {
      if (!winner || v.wer < winner->verdict.wer ||
          (v.wer == winner->verdict.wer &&
           (c.temperature < winner->temperature ||
            (c.temperature == winner->temperature && c.index < winner->index)))) {
        winner = &c;
      }
    }
    if (v.length_ok() && v.repetition_ok() && v.wer >= judge.tau_wer) {
      if (!loser || v.wer > loser->verdict.wer) loser = &c;
    }
  }
  if (!winner || !loser) return std::nullopt;
  PreferenceTriplet t;
  t.prompt_id = winner->utterance.prompt_id;
  t.preferred = ScoredSequence::from(winner->utterance);
  t.dispreferred = ScoredSequence::from(loser->utterance);
  t.tag = ObjectiveTag::kTdsc;
  return t;
}

std::vector<PreferenceTriplet> mine_preference_pairs(
    std::span<const std::vector<Candidate>> per_prompt, const JudgeConfig& judge) {
  std::vector<PreferenceTriplet> out;
  for (const auto& cands : per_prompt) {
    if (auto t = mine_preference_pair(cands, judge)) out.push_back(std::move(*t));
  }
  return out;
}

void TdscConfig::validate() const {
  schedule.validate();
  judge.validate();
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) {
    throw ConfigError("tdsc.nucleus_p", "must be in (0,1]");
  }
  if (sft_epochs < 1) throw ConfigError("tdsc.sft_epochs", "must be >= 1");
  if (!(sft_learning_rate > 0.0)) {
    throw ConfigError("tdsc.sft_learning_rate", "must be > 0");
  }
  if (iterations < 1) throw ConfigError("tdsc.iterations", "must be >= 1");
}

TdscConfig self_training_preset(TdscConfig base) {
  base.schedule.single_temperature = 1.0;
  base.disable_dpo = true;
  return base;
}

std::vector<std::vector<Candidate>> judge_round(const PolicyParams& params,
                                                const World& world,
                                                std::span<const std::uint32_t> prompt_ids,
                                                const TdscConfig& config, std::size_t k,
                                                std::uint64_t seed) {
  std::vector<std::vector<Candidate>> per_prompt(prompt_ids.size());
  parallel_for(prompt_ids.size(), [&](std::size_t i) {
    const Prompt& prompt = world.prompt(prompt_ids[i]);
    auto cands = generate_candidates(params, prompt, config.schedule, k,
                                     config.nucleus_p, seed);
    for (Candidate& c : cands) {
      Rng rng = Rng::stream(seed, "tdsc.judge", prompt.id, k, c.index);
      c.verdict = judge_candidate(world, prompt, c.utterance.tokens, config.judge, rng);
    }
    per_prompt[i] = std::move(cands);
  });
  return per_prompt;
}

MetricsRecord pool_metrics(const World& world,
                           std::span<const std::vector<Candidate>> per_prompt,
                           const JudgeConfig& judge) {
  MetricsRecord m;
  std::size_t edits = 0, ref_len = 0, accepted = 0;
  double rep_sum = 0.0;
  TokenHistogram hist;
  for (const auto& cands : per_prompt) {
    for (const Candidate& c : cands) {
      const Prompt& prompt = world.prompt(c.utterance.prompt_id);
      edits += edit_distance(prompt.canonical,
                             decode_tokens(world.vocab(), c.utterance.tokens));
      ref_len += prompt.length();
      rep_sum += repetition_rate(c.utterance.tokens, judge.repetition_window);
      hist.add(c.utterance.tokens);
      if (c.verdict.accepted) ++accepted;
      ++m.sample_count;
    }
  }
  if (m.sample_count == 0) return m;
  const double n = static_cast<double>(m.sample_count);
  m.wer = static_cast<double>(edits) / static_cast<double>(ref_len);
  m.h_p = hist.total > 0 ? histogram_entropy_bits(hist) : 0.0;
  m.repetition = rep_sum / n;
  m.pass_rate = static_cast<double>(accepted) / n;
  return m;
}

namespace {

// Fills everything in `log` that depends only on the judged pool.
std::vector<Utterance> summarize_round(const World& world,
                                       std::span<const std::vector<Candidate>> per_prompt,
                                       const TdscConfig& config, TdscIterationLog& log) {
  log.pool = pool_metrics(world, per_prompt, config.judge);
  std::vector<Utterance> accepted;
  for (const auto& cands : per_prompt) {
    for (const Candidate& c : cands) {
      ++log.candidates;
      if (c.verdict.accepted) accepted.push_back(c.utterance);
    }
  }
  log.accepted = accepted.size();
  log.rejected = log.candidates - log.accepted;
  log.pass_rate = log.pool.pass_rate;
  if (!config.disable_dpo) {
    log.mined = mine_preference_pairs(per_prompt, config.judge);
    log.pairs = log.mined.size();
    log.prompts_without_pair = per_prompt.size() - log.pairs;
  }
  return accepted;
}

}  // namespace

TdscIterationLog tdsc_iteration(PolicyParams& params, const World& world,
                                std::span<const std::uint32_t> prompt_ids,
                                const TdscConfig& config, const TrainConfig& train,
                                std::size_t k, std::uint64_t seed) {
  config.validate();
  TdscIterationLog log;
  log.k = k;
  log.t_high = temperature_set_for_iteration(config.schedule, k).back();
  log.before = evaluate_policy(world, params, config.judge, seed, config.evaluation);

  const FrozenPolicy reference = freeze_reference(params);
  const auto per_prompt = judge_round(reference.params(), world, prompt_ids, config, k, seed);
  const std::vector<Utterance> accepted = summarize_round(world, per_prompt, config, log);

  if (accepted.empty()) {
    log.aborted = true;
    log.after = log.before;
    return log;
  }

  SftConfig sft = train.sft;
  sft.adam.learning_rate = config.sft_learning_rate;
  sft.steps = steps_for_epochs(accepted.size(), config.sft_epochs, sft.batch_size);
  log.sft_steps =
      train_sft(params, world.prompts(), accepted, sft, derive_seed(seed, "tdsc.sft", k)).steps;

  if (!config.disable_dpo && !log.mined.empty()) {
    log.dpo_losses = train_preference(
        params, train.preference, [&](const PolicyParams& p, std::size_t) {
          return dpo_loss_and_grad(p, reference.params(), world.prompts(), log.mined,
                                   train.preference.beta);
        });
  }
  log.after = evaluate_policy(world, params, config.judge, seed, config.evaluation);
  return log;
}

TdscIterationLog tdsc_probe(const PolicyParams& params, const World& world,
                            std::span<const std::uint32_t> prompt_ids,
                            const TdscConfig& config, std::size_t k, std::uint64_t seed) {
  config.validate();
  TdscIterationLog log;
  log.k = k;
  log.t_high = temperature_set_for_iteration(config.schedule, k).back();
  log.before = evaluate_policy(world, params, config.judge, seed, config.evaluation);
  log.after = log.before;
  summarize_round(world, judge_round(params, world, prompt_ids, config, k, seed), config, log);
  return log;
}

std::vector<MetricsRecord> TdscRun::pool_series() const {
  std::vector<MetricsRecord> out;
  for (const auto& log : iterations) out.push_back(log.pool);
  out.push_back(probe.pool);
  return out;
}

std::vector<TdscIterationLog> TdscRun::rounds() const {
  std::vector<TdscIterationLog> out = iterations;
  out.push_back(probe);
  return out;
}

TdscRun run_tdsc(PolicyParams& params, const World& world, const TdscConfig& config,
                 const TrainConfig& train, std::uint64_t seed) {
  config.validate();
  std::vector<std::uint32_t> ids;
  for (const Prompt& p : world.prompts()) ids.push_back(p.id);
  TdscRun run;
  for (std::size_t k = 0; k < config.iterations; ++k) {
    run.iterations.push_back(tdsc_iteration(params, world, ids, config, train, k, seed));
  }
  run.probe = tdsc_probe(params, world, ids, config, config.iterations, seed);
  return run;
}

}  // namespace erosion
