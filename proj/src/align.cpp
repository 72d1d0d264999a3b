// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/align.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "erosion/errors.hpp"
#include "erosion/hash.hpp"

namespace erosion {

namespace {

const Prompt& lookup(std::span<const Prompt> prompts, std::uint32_t id) {
  if (id >= prompts.size() || prompts[id].id != id) {
    throw DomainError("prompt id " + std::to_string(id) + " not in prompt table");
  }
  return prompts[id];
}

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logprob(const PolicyParams& params, std::span<const Prompt> prompts,
               const ScoredSequence& s) {
  return sequence_logprob(params, lookup(prompts, s.prompt_id), s.tokens,
                          s.terminated, s.style_prefix);
}

}  // namespace

void accumulate_logprob_grad(const PolicyParams& params, const Prompt& prompt,
                             std::span<const Token> tokens, bool terminated,
                             double scale, GradientTable& grad) {
  if (grad.size() != params.parameter_count()) {
    throw DomainError("gradient table shape mismatch");
  }
  const Token eos = params.vocab().eos();
  const std::size_t n_out = params.outcomes();
  std::uint32_t prev = params.bos();
  auto step = [&](std::size_t t, Token target) {
    const auto ctx = context_at(params, prompt, t, prev);
    const std::size_t off = params.row_offset(ctx);
    const Distribution p = softmax(params.row(ctx));
    // d log softmax(z)[target] / dz = onehot(target) - p
    for (std::size_t j = 0; j < n_out; ++j) grad[off + j] -= scale * p[j];
    grad[off + target] += scale;
  };
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= eos) throw DomainError("token out of range in sequence");
    step(t, tokens[t]);
    prev = tokens[t];
  }
  if (terminated) step(tokens.size(), eos);
}

LossAndGrad mle_loss_and_grad(const PolicyParams& params,
                              std::span<const Prompt> prompts,
                              std::span<const Utterance> batch) {
  if (batch.empty()) throw DomainError("MLE over an empty batch");
  LossAndGrad out;
  out.grad.assign(params.parameter_count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Utterance& u : batch) {
    const Prompt& prompt = lookup(prompts, u.prompt_id);
    out.loss -= inv_n * sequence_logprob(params, prompt, u.tokens, u.terminated);
    // Loss is the negative log-likelihood.
    accumulate_logprob_grad(params, prompt, u.tokens, u.terminated, -inv_n, out.grad);
  }
  return out;
}

const char* to_string(ObjectiveTag tag) noexcept {
  switch (tag) {
    case ObjectiveTag::kStability:
      return "stability";
    case ObjectiveTag::kExpressivity:
      return "expressivity";
    case ObjectiveTag::kTdsc:
      return "tdsc";
  }
  return "unknown";
}

ScoredSequence ScoredSequence::from(const Utterance& u, TokenSequence prefix) {
  ScoredSequence s;
  s.prompt_id = u.prompt_id;
  s.speaker_tag = u.speaker_tag;
  s.tokens = u.tokens;
  s.terminated = u.terminated;
  s.style_prefix = std::move(prefix);
  s.source = u.source;
  return s;
}

std::string params_hash(const PolicyParams& params) {
  static_assert(std::endian::native == std::endian::little,
                "hash input assumes a little-endian host");
  const std::uint32_t dims[2] = {params.vocab().base_count(),
                                 params.vocab().variant_count()};
  std::vector<std::byte> bytes(sizeof(dims) + params.logits().size_bytes());
  std::memcpy(bytes.data(), dims, sizeof(dims));
  std::memcpy(bytes.data() + sizeof(dims), params.logits().data(),
              params.logits().size_bytes());
  return sha256_hex(bytes);
}

FrozenPolicy::FrozenPolicy(PolicyParams params)
    : params_(std::make_shared<const PolicyParams>(std::move(params))),
      hash_(params_hash(*params_)) {}

FrozenPolicy freeze_reference(const PolicyParams& params) {
  return FrozenPolicy(params);
}

double dpo_margin(const PolicyParams& params, const PolicyParams& reference,
                  std::span<const Prompt> prompts, const PreferenceTriplet& t) {
  return (logprob(params, prompts, t.preferred) -
          logprob(reference, prompts, t.preferred)) -
         (logprob(params, prompts, t.dispreferred) -
          logprob(reference, prompts, t.dispreferred));
}

LossAndGrad dpo_loss_and_grad(const PolicyParams& params,
                              const PolicyParams& reference,
                              std::span<const Prompt> prompts,
                              std::span<const PreferenceTriplet> triplets,
                              double beta, double weight) {
  if (triplets.empty()) throw DomainError("DPO over an empty triplet set");
  if (!(beta > 0.0)) throw DomainError("DPO beta must be > 0");
  LossAndGrad out;
  out.grad.assign(params.parameter_count(), 0.0);
  const double scale = weight / static_cast<double>(triplets.size());
  for (const auto& t : triplets) {
    const double margin = dpo_margin(params, reference, prompts, t);
    out.loss -= scale * log_sigmoid(beta * margin);
    // d/dtheta -log sigmoid(beta m) = -beta sigmoid(-beta m) dm/dtheta
    const double c = scale * beta * sigmoid(-beta * margin);
    const auto& pos = t.preferred;
    const auto& neg = t.dispreferred;
    accumulate_logprob_grad(params, lookup(prompts, pos.prompt_id), pos.tokens,
                            pos.terminated, -c, out.grad);
    accumulate_logprob_grad(params, lookup(prompts, neg.prompt_id), neg.tokens,
                            neg.terminated, c, out.grad);
  }
  return out;
}

OptimizerState make_optimizer(const PolicyParams& params, const AdamConfig& config) {
  OptimizerState s;
  s.config = config;
  s.first_moment.assign(params.parameter_count(), 0.0);
  s.second_moment.assign(params.parameter_count(), 0.0);
  return s;
}

void optimizer_step(OptimizerState& state, PolicyParams& params,
                    std::span<const double> gradient) {
  auto theta = params.logits();
  if (gradient.size() != theta.size() || state.first_moment.size() != theta.size() ||
      state.second_moment.size() != theta.size()) {
    throw DomainError("optimizer shape mismatch");
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    const double g = gradient[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    if (m == 0.0 && c.weight_decay == 0.0) continue;
    const double update = (m / bc1) / (std::sqrt(v / bc2) + c.epsilon);
    theta[i] -= c.learning_rate * (update + c.weight_decay * theta[i]);
  }
}

std::size_t steps_for_epochs(std::size_t n, std::size_t epochs,
                             std::size_t batch_size) {
  if (batch_size == 0) return 0;
  return epochs * ((n + batch_size - 1) / batch_size);
}

SftReport train_sft(PolicyParams& params, std::span<const Prompt> prompts,
                    std::span<const Utterance> data, const SftConfig& config,
                    std::uint64_t seed) {
  if (data.empty()) throw DomainError("SFT over an empty corpus");
  if (config.batch_size == 0) throw ConfigError("sft.batch_size", "must be >= 1");
  SftReport report;
  OptimizerState opt = make_optimizer(params, config.adam);
  std::vector<std::size_t> order(data.size());
  std::vector<Utterance> batch;
  for (std::size_t epoch = 0; opt.step < config.steps; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::stream(seed, "sft.epoch", epoch);
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size() && opt.step < config.steps;
         start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      LossAndGrad lg = mle_loss_and_grad(params, prompts, batch);
      epoch_loss += lg.loss * static_cast<double>(end - start);
      seen += end - start;
      optimizer_step(opt, params, lg.grad);
    }
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
  }
  report.steps = opt.step;
  return report;
}

std::vector<double> train_preference(
    PolicyParams& params, const PreferenceConfig& config,
    const std::function<LossAndGrad(const PolicyParams&, std::size_t)>& objective) {
  OptimizerState opt = make_optimizer(params, config.adam);
  std::vector<double> losses;
  losses.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    LossAndGrad lg = objective(params, epoch);
    losses.push_back(lg.loss);
    optimizer_step(opt, params, lg.grad);
  }
  return losses;
}

}  // namespace erosion
