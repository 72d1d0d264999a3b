// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// erosionlab command-line interface.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "erosion/checkpoint.hpp"
#include "erosion/config.hpp"
#include "erosion/errors.hpp"
#include "erosion/io.hpp"
#include "erosion/lab.hpp"
#include "erosion/parallel.hpp"
#include "erosion/report.hpp"

namespace fs = std::filesystem;
using namespace erosion;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kPrecondition = 3, kIo = 4 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "erosionlab-out";
  std::size_t threads = 0;
  std::vector<std::string> overrides;
};

struct SingleRun {
  std::optional<double> alpha;
  std::string checkpoint;
  std::string method;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("erosionlab");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("EROSIONLAB_LOG")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig config;
  if (!g.config_path.empty()) config = parse_config(read_file(g.config_path));
  for (const std::string& o : g.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(o, "override must be key=value");
    set_config_value(config, o.substr(0, eq), o.substr(eq + 1));
  }
  if (g.seed) config.seed = *g.seed;
  config.validate();
  return config;
}

// Runs `body` with a manifest that records status and wall-clock time.
template <class Body>
void with_manifest(const Globals& g, const ExperimentConfig& config, const std::string& command,
                   Body body) {
  RunManifest manifest;
  manifest.command = command;
  manifest.config = config;
  const auto start = std::chrono::steady_clock::now();
  ensure_directory(g.out);
  try {
    body(manifest);
    manifest.status = "complete";
  } catch (...) {
    manifest.status = "failed";
    manifest.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.write(g.out);
    throw;
  }
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.write(g.out);
}

void print_metrics(const std::string& label, const MetricsRecord& m) {
  std::cout << fmt::format("{}: wer={:.4f} h_p_bits={:.4f} repetition={:.4f} pass_rate={:.4f}\n",
                           label, m.wer, m.h_p, m.repetition, m.pass_rate);
}

nlohmann::ordered_json result_json(const SystemResult& r) {
  nlohmann::ordered_json j;
  j["system"] = r.system;
  j["stage1_hash"] = r.stage1_hash;
  j["params_hash"] = r.params_hash;
  j["lambda_s"] = r.weights.lambda_s;
  j["lambda_e"] = r.weights.lambda_e;
  j["metrics"] = metrics_json(r.metrics);
  return j;
}

nlohmann::json checkpoint_metadata(const ExperimentConfig& config, const std::string& command,
                                   double alpha, const std::string& stage1_hash) {
  return {{"config_hash", config_hash(config)},
          {"command", command},
          {"seed", config.seed},
          {"alpha", alpha},
          {"stage1_hash", stage1_hash},
          {"version", kVersion}};
}

// Stage-1 of replicate 0: trained, or loaded from a checkpoint with the
// matching corpus rebuilt.
Stage1 stage1_for(const ExperimentConfig& config, const World& world, double alpha,
                  std::uint64_t seed, const std::string& checkpoint) {
  if (checkpoint.empty()) return train_stage1(config, world, alpha, seed);
  PolicyParams params = load_checkpoint(checkpoint);
  if (!(params.vocab() == world.vocab())) {
    throw PreconditionError("checkpoint vocabulary does not match the configured world");
  }
  return Stage1{stage1_corpus(config, world, alpha, seed), freeze_reference(params), {}};
}

void cmd_world_gen(const Globals& g) {
  const ExperimentConfig config = resolve_config(g);
  with_manifest(g, config, "world gen", [&](RunManifest& manifest) {
    const World world = replicate_world(config, replicate_seed(config.seed, 0));
    write_file_atomic(fs::path(g.out) / "world.json", world_to_json(world).dump(2) + "\n");
    manifest.add_stage("world", {{"prompts", world.prompts().size()},
                                 {"covered_prompts", world.covered_prompt_ids().size()},
                                 {"vocab_size", world.vocab().size()}});
    std::cout << fmt::format("wrote {} ({} prompts, {} covered)\n",
                             (fs::path(g.out) / "world.json").string(), world.prompts().size(),
                             world.covered_prompt_ids().size());
  });
}

void cmd_train_sft(const Globals& g, const SingleRun& s) {
  ExperimentConfig config = resolve_config(g);
  if (s.alpha) config.alpha = *s.alpha;
  config.validate();
  with_manifest(g, config, "train sft", [&](RunManifest& manifest) {
    const std::uint64_t seed = replicate_seed(config.seed, 0);
    const World world = replicate_world(config, seed);
    const Stage1 stage1 = train_stage1(config, world, config.alpha, seed);
    const MethodRun run = run_method(config, Method::kSft, world, stage1, seed);
    const fs::path path = fs::path(g.out) / "sft.erlb";
    save_checkpoint(stage1.policy.params(), path,
                    checkpoint_metadata(config, "train sft", config.alpha, stage1.policy.hash()));
    auto details = result_json(run.result);
    details["alpha"] = config.alpha;
    details["n_real"] = stage1.corpus.real_count();
    details["n_synthetic"] = stage1.corpus.synthetic_count();
    details["epoch_losses"] = stage1.sft.epoch_losses;
    details["checkpoint"] = path.string();
    manifest.add_stage("sft", details);
    print_metrics("sft", run.result.metrics);
    std::cout << "checkpoint: " << path.string() << "\n";
  });
}

void cmd_align(const Globals& g, const SingleRun& s, Method method) {
  ExperimentConfig config = resolve_config(g);
  double alpha = method == Method::kTdsc ? 1.0 : config.alpha;
  if (s.alpha) alpha = *s.alpha;
  const std::string command = std::string("align ") + to_string(method);
  with_manifest(g, config, command, [&](RunManifest& manifest) {
    const std::uint64_t seed = replicate_seed(config.seed, 0);
    const World world = replicate_world(config, seed);
    const Stage1 stage1 = stage1_for(config, world, alpha, seed, s.checkpoint);
    const MethodRun run = run_method(config, method, world, stage1, seed);
    const fs::path path = fs::path(g.out) / fmt::format("{}.erlb", to_string(method));
    save_checkpoint(run.params, path,
                    checkpoint_metadata(config, command, alpha, stage1.policy.hash()));
    auto details = result_json(run.result);
    details["alpha"] = alpha;
    details["checkpoint"] = path.string();
    if (run.dgsa) {
      details["stability_pairs"] = run.dgsa->stability_pairs;
      details["expressivity_pairs"] = run.dgsa->expressivity_pairs;
      details["skipped"] = run.dgsa->skipped;
      details["dpo_losses"] = run.dgsa->dpo_losses;
      details["reference_hash_after"] = run.dgsa->reference_hash_after;
    }
    manifest.add_stage(to_string(method), details);
    if (run.tdsc) {
      const auto rounds = round_rows(to_string(method), 0, *run.tdsc);
      write_file_atomic(fs::path(g.out) / fmt::format("{}_r0.csv", to_string(method)),
                        rounds_csv(rounds));
      ComparisonReport r;
      r.rounds = rounds;
      manifest.add_stages(r);
    }
    print_metrics(to_string(method), run.result.metrics);
    std::cout << "checkpoint: " << path.string() << "\n";
  });
}

void cmd_eval(const Globals& g, const SingleRun& s) {
  ExperimentConfig config = resolve_config(g);
  if (s.alpha) config.alpha = *s.alpha;
  if (!s.method.empty()) config.method = parse_method(s.method);
  config.validate();
  with_manifest(g, config, "eval", [&](RunManifest& manifest) {
    const std::uint64_t seed = replicate_seed(config.seed, 0);
    const World world = replicate_world(config, seed);
    SystemResult result;
    if (!s.checkpoint.empty()) {
      const PolicyParams params = load_checkpoint(s.checkpoint);
      if (!(params.vocab() == world.vocab())) {
        throw PreconditionError("checkpoint vocabulary does not match the configured world");
      }
      result.system = "checkpoint";
      result.params_hash = params_hash(params);
      result.metrics = evaluate_policy(world, params, config.judge, evaluation_seed(seed),
                                       config.evaluation);
    } else {
      const Stage1 stage1 = train_stage1(config, world, config.alpha, seed);
      result = run_method(config, config.method, world, stage1, seed).result;
    }
    manifest.add_stage("eval", result_json(result));
    write_file_atomic(fs::path(g.out) / "eval.json", result_json(result).dump(2) + "\n");
    print_metrics(result.system, result.metrics);
  });
}

void cmd_sweep_scaling(const Globals& g) {
  const ExperimentConfig config = resolve_config(g);
  with_manifest(g, config, "sweep scaling", [&](RunManifest& manifest) {
    const ScalingReport report = run_scaling_sweep(config);
    write_scaling_report(report, g.out);
    manifest.add_stages(report);
    std::cout << write_summary(g.out);
  });
}

void cmd_compare(const Globals& g, bool alignment) {
  const ExperimentConfig config = resolve_config(g);
  with_manifest(g, config, alignment ? "compare alignment" : "compare tdsc",
                [&](RunManifest& manifest) {
                  const ComparisonReport report = alignment ? run_alignment_comparison(config)
                                                            : run_tdsc_comparison(config);
                  write_comparison_report(report, g.out);
                  manifest.add_stages(report);
                  std::cout << write_summary(g.out);
                });
}

void cmd_report(const Globals& g) {
  if (!fs::is_directory(g.out)) throw IoError("no such directory: " + g.out);
  std::cout << write_summary(g.out);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Synthetic-data erosion laboratory"};
  app.require_subcommand(1);
  Globals g;
  SingleRun single;
  app.add_option("--config", g.config_path, "Config file of key = value lines");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");

  auto add_alpha = [&](CLI::App* c) {
    c->add_option("--alpha", single.alpha, "Synthetic ratio of the Stage-1 corpus");
  };
  auto add_checkpoint = [&](CLI::App* c) {
    c->add_option("--checkpoint", single.checkpoint, "Stage-1 checkpoint to start from");
  };

  auto* world = app.add_subcommand("world", "World commands")->require_subcommand(1);
  auto* world_gen = world->add_subcommand("gen", "Build the world and write world.json");

  auto* train = app.add_subcommand("train", "Training commands")->require_subcommand(1);
  auto* train_sft_cmd = train->add_subcommand("sft", "Supervised fine-tuning on a mixed corpus");
  add_alpha(train_sft_cmd);

  auto* align = app.add_subcommand("align", "Alignment commands")->require_subcommand(1);
  auto* align_dgsa = align->add_subcommand("dgsa", "Disentanglement-guided self-alignment");
  add_alpha(align_dgsa);
  add_checkpoint(align_dgsa);
  auto* align_tdsc = align->add_subcommand("tdsc", "Temperature-driven self-critique");
  add_alpha(align_tdsc);
  add_checkpoint(align_tdsc);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or a method");
  add_alpha(eval);
  add_checkpoint(eval);
  eval->add_option("--method", single.method,
                   "sft, dgsa, standard_dpo, rejection_sampling, self_training or tdsc");

  auto* sweep = app.add_subcommand("sweep", "Sweeps")->require_subcommand(1);
  auto* sweep_scaling = sweep->add_subcommand("scaling", "Synthetic-ratio sweep");

  auto* compare = app.add_subcommand("compare", "Comparisons")->require_subcommand(1);
  auto* compare_alignment = compare->add_subcommand("alignment", "SFT, Standard DPO, RS, DGSA");
  auto* compare_tdsc = compare->add_subcommand("tdsc", "SFT, Self-Training, RS, TDSC");

  auto* report = app.add_subcommand("report", "Rebuild summary.txt from the CSVs in --out");

  for (auto* c : {world, train, align, sweep, compare}) c->fallthrough();
  for (auto* c : {world_gen, train_sft_cmd, align_dgsa, align_tdsc, eval, sweep_scaling,
                  compare_alignment, compare_tdsc, report}) {
    c->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    set_worker_threads(g.threads == 0 ? std::thread::hardware_concurrency() : g.threads);
    if (*world_gen) cmd_world_gen(g);
    else if (*train_sft_cmd) cmd_train_sft(g, single);
    else if (*align_dgsa) cmd_align(g, single, Method::kDgsa);
    else if (*align_tdsc) cmd_align(g, single, Method::kTdsc);
    else if (*eval) cmd_eval(g, single);
    else if (*sweep_scaling) cmd_sweep_scaling(g);
    else if (*compare_alignment) cmd_compare(g, true);
    else if (*compare_tdsc) cmd_compare(g, false);
    else if (*report) cmd_report(g);
    return kOk;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const PreconditionError& e) {
    spdlog::error("precondition failed: {}", e.what());
    return kPrecondition;
  } catch (const DomainError& e) {
    spdlog::error("precondition failed: {}", e.what());
    return kPrecondition;
  } catch (const IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIo;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}
