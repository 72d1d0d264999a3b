// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <type_traits>

#include <fmt/format.h>

#include "erosion/errors.hpp"
#include "erosion/hash.hpp"
#include "erosion/io.hpp"

namespace erosion {

namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::kSft, "sft"},
    {Method::kDgsa, "dgsa"},
    {Method::kStandardDpo, "standard_dpo"},
    {Method::kRejectionSampling, "rejection_sampling"},
    {Method::kSelfTraining, "self_training"},
    {Method::kTdsc, "tdsc"},
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  throw ConfigError(std::string(key),
                    fmt::format("expected {}, got '{}'", expected, value));
}

template <class T>
T parse_number(std::string_view key, std::string_view text, std::string_view expected) {
  T out{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) bad_value(key, text, expected);
  return out;
}

template <class T>
T parse_value(std::string_view key, std::string_view text);

template <>
double parse_value<double>(std::string_view key, std::string_view text) {
  return parse_number<double>(key, text, "a number");
}

template <>
std::uint32_t parse_value<std::uint32_t>(std::string_view key, std::string_view text) {
  return parse_number<std::uint32_t>(key, text, "a non-negative integer");
}

template <>
std::uint64_t parse_value<std::uint64_t>(std::string_view key, std::string_view text) {
  return parse_number<std::uint64_t>(key, text, "a non-negative integer");
}

template <>
bool parse_value<bool>(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  bad_value(key, text, "a boolean");
}

template <>
std::optional<double> parse_value<std::optional<double>>(std::string_view key,
                                                         std::string_view text) {
  if (text.empty() || text == "none") return std::nullopt;
  return parse_value<double>(key, text);
}

template <>
std::vector<double> parse_value<std::vector<double>>(std::string_view key,
                                                     std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_value<double>(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) bad_value(key, text, "a comma-separated list of numbers");
  return out;
}

template <>
Method parse_value<Method>(std::string_view, std::string_view text) {
  return parse_method(text);
}

std::string format_value(double v) { return fmt::format("{}", v); }
std::string format_value(std::uint32_t v) { return fmt::format("{}", v); }
std::string format_value(std::uint64_t v) { return fmt::format("{}", v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(Method m) { return to_string(m); }
std::string format_value(const std::optional<double>& v) {
  return v ? format_value(*v) : "none";
}
std::string format_value(const std::vector<double>& v) {
  return fmt::format("{}", fmt::join(v, ", "));
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class Access>
Field make_field(std::string key, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<ExperimentConfig&>()))>;
  return Field{key,
               [access, key](ExperimentConfig& c, std::string_view v) {
                 access(c) = parse_value<T>(key, v);
               },
               [access](const ExperimentConfig& c) {
                 return format_value(access(const_cast<ExperimentConfig&>(c)));
               }};
}

#define EROSION_FIELD(key, member) \
  make_field(key, [](ExperimentConfig& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      EROSION_FIELD("seed", seed),
      EROSION_FIELD("replicates", replicates),
      EROSION_FIELD("method", method),
      EROSION_FIELD("alpha", alpha),
      EROSION_FIELD("alpha_grid", alpha_grid),
      EROSION_FIELD("n_real", n_real),
      EROSION_FIELD("n_synthetic_pure", n_synthetic_pure),
      EROSION_FIELD("world.base_symbol_count", world.base_symbol_count),
      EROSION_FIELD("world.variant_count", world.variant_count),
      EROSION_FIELD("world.prompt_count", world.prompt_count),
      EROSION_FIELD("world.min_length", world.min_length),
      EROSION_FIELD("world.max_length", world.max_length),
      EROSION_FIELD("world.real_prompt_coverage", world.real_prompt_coverage),
      EROSION_FIELD("world.variant_concentration", world.variant_concentration),
      EROSION_FIELD("world.neutral_variant_weight", world.neutral_variant_weight),
      EROSION_FIELD("world.base_repeat_prob", world.base_repeat_prob),
      EROSION_FIELD("world.synthetic_variant_noise", world.synthetic_variant_noise),
      EROSION_FIELD("world.real_base_noise", world.real_base_noise),
      EROSION_FIELD("world.speaker_count", world.speaker_count),
      EROSION_FIELD("eval.temperature", evaluation.temperature),
      EROSION_FIELD("eval.nucleus_p", evaluation.nucleus_p),
      EROSION_FIELD("eval.max_length_factor", evaluation.max_length_factor),
      EROSION_FIELD("sft.steps", train.sft.steps),
      EROSION_FIELD("sft.batch_size", train.sft.batch_size),
      EROSION_FIELD("sft.learning_rate", train.sft.adam.learning_rate),
      EROSION_FIELD("preference.beta", train.preference.beta),
      EROSION_FIELD("preference.epochs", train.preference.epochs),
      EROSION_FIELD("preference.learning_rate", train.preference.adam.learning_rate),
      EROSION_FIELD("judge.tau_wer", judge.tau_wer),
      EROSION_FIELD("judge.tau_repetition", judge.tau_repetition),
      EROSION_FIELD("judge.gamma_min", judge.gamma_min),
      EROSION_FIELD("judge.gamma_max", judge.gamma_max),
      EROSION_FIELD("judge.asr_noise", judge.asr_noise),
      EROSION_FIELD("judge.repetition_window", judge.repetition_window),
      EROSION_FIELD("dgsa.alpha_star", dgsa.alpha_star),
      EROSION_FIELD("dgsa.style_prefix_length", dgsa.style_prefix_length),
      EROSION_FIELD("dgsa.pairs_per_prompt", dgsa.pairs_per_prompt),
      EROSION_FIELD("dgsa.temperature", dgsa.temperature),
      EROSION_FIELD("dgsa.nucleus_p", dgsa.nucleus_p),
      EROSION_FIELD("dgsa.disable_expressivity", dgsa.disable_expressivity),
      EROSION_FIELD("dgsa.disable_stability", dgsa.disable_stability),
      EROSION_FIELD("dgsa.random_pairing", dgsa.random_pairing),
      EROSION_FIELD("dgsa.fixed_weights", dgsa.fixed_weights),
      EROSION_FIELD("schedule.t_low", tdsc.schedule.t_low),
      EROSION_FIELD("schedule.t_mid", tdsc.schedule.t_mid),
      EROSION_FIELD("schedule.t_high_initial", tdsc.schedule.t_high_initial),
      EROSION_FIELD("schedule.curriculum_rate", tdsc.schedule.curriculum_rate),
      EROSION_FIELD("schedule.candidates_per_temperature",
                    tdsc.schedule.candidates_per_temperature),
      EROSION_FIELD("schedule.single_temperature", tdsc.schedule.single_temperature),
      EROSION_FIELD("tdsc.nucleus_p", tdsc.nucleus_p),
      EROSION_FIELD("tdsc.sft_epochs", tdsc.sft_epochs),
      EROSION_FIELD("tdsc.sft_learning_rate", tdsc.sft_learning_rate),
      EROSION_FIELD("tdsc.disable_dpo", tdsc.disable_dpo),
      EROSION_FIELD("tdsc.iterations", tdsc.iterations),
      EROSION_FIELD("rejection.candidates", rejection.candidates),
      EROSION_FIELD("rejection.temperature", rejection.temperature),
      EROSION_FIELD("rejection.nucleus_p", rejection.nucleus_p),
  };
  return table;
}

#undef EROSION_FIELD

const Field& find_field(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError(std::string(key), "unknown key");
}

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

const char* to_string(Method method) noexcept {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (name == n) return m;
  }
  throw ConfigError("method", fmt::format("unknown method '{}'", name));
}

void RejectionSamplingConfig::validate() const {
  if (candidates < 1) throw ConfigError("rejection.candidates", "must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("rejection.temperature", "must be > 0");
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) {
    throw ConfigError("rejection.nucleus_p", "must be in (0,1]");
  }
}

void ExperimentConfig::validate() const {
  world.validate();
  if (alpha_grid.empty()) throw ConfigError("alpha_grid", "must not be empty");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!in_unit_interval(alpha_grid[i])) {
      throw ConfigError("alpha_grid", "values must lie in [0,1]");
    }
    if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1])) {
      throw ConfigError("alpha_grid", "values must be strictly ascending");
    }
  }
  if (!in_unit_interval(alpha)) throw ConfigError("alpha", "must be in [0,1]");
  if (n_real < 1) throw ConfigError("n_real", "must be >= 1");
  if (n_synthetic_pure < 1) throw ConfigError("n_synthetic_pure", "must be >= 1");
  if (!(evaluation.temperature > 0.0)) {
    throw ConfigError("eval.temperature", "must be > 0");
  }
  if (!(evaluation.nucleus_p > 0.0 && evaluation.nucleus_p <= 1.0)) {
    throw ConfigError("eval.nucleus_p", "must be in (0,1]");
  }
  if (!(evaluation.max_length_factor > 0.0)) {
    throw ConfigError("eval.max_length_factor", "must be > 0");
  }
  if (train.sft.steps < 1) throw ConfigError("sft.steps", "must be >= 1");
  if (train.sft.batch_size < 1) throw ConfigError("sft.batch_size", "must be >= 1");
  if (!(train.sft.adam.learning_rate > 0.0)) {
    throw ConfigError("sft.learning_rate", "must be > 0");
  }
  if (!(train.preference.beta > 0.0)) throw ConfigError("preference.beta", "must be > 0");
  if (train.preference.epochs < 1) {
    throw ConfigError("preference.epochs", "must be >= 1");
  }
  if (!(train.preference.adam.learning_rate > 0.0)) {
    throw ConfigError("preference.learning_rate", "must be > 0");
  }
  judge.validate();
  dgsa.validate();
  tdsc_config().validate();
  rejection.validate();
  if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
}

TdscConfig ExperimentConfig::tdsc_config() const {
  TdscConfig out = tdsc;
  out.judge = judge;
  out.evaluation = evaluation;
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& config, std::string_view key,
                      std::string_view value) {
  find_field(key).set(config, trim(value));
}

std::string get_config_value(const ExperimentConfig& config, std::string_view key) {
  return find_field(key).get(config);
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::string section;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    set_config_value(base, key, line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig config = parse_config(read_file(path));
  config.validate();
  return config;
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(config));
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  return sha256_hex(serialize_config(config));
}

}  // namespace erosion
