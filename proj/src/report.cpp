// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <regex>

#include <fmt/format.h>

#include "erosion/errors.hpp"
#include "erosion/io.hpp"

namespace erosion {

namespace fs = std::filesystem;

namespace {

constexpr const char* kScalingHeader = "alpha,replicate,seed,wer,h_p_bits,repetition,pass_rate";
constexpr const char* kScalingMeanHeader = "alpha,wer,h_p_bits,repetition,pass_rate";
constexpr const char* kComparisonHeader =
    "replicate,seed,system,stage1_hash,params_hash,lambda_s,lambda_e,wer,h_p_bits,"
    "repetition,pass_rate";
constexpr const char* kRoundsHeader =
    "k,t_high,pass_rate,wer,h_p_bits,repetition,accepted,rejected,pairs";
constexpr const char* kLosersHeader =
    "system,replicate,k,prompt_id,length_ratio,repetition,length_ok,repetition_ok";

std::string comparison_file(std::string_view kind) {
  return kind == "alignment" ? "alignment.csv" : "tdsc_comparison.csv";
}

std::string metric_fields(const MetricsRecord& m) {
  return fmt::format("{},{},{},{}", m.wer, m.h_p, m.repetition, m.pass_rate);
}

// Rows of a CSV document after checking its header.
std::vector<std::vector<std::string>> read_csv(std::string_view text, std::string_view header,
                                               std::size_t columns) {
  std::vector<std::vector<std::string>> rows;
  bool first = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (first) {
      if (line != header) throw IoError(fmt::format("unexpected CSV header '{}'", line));
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != columns) {
      throw IoError(fmt::format("CSV row has {} cells, expected {}", cells.size(), columns));
    }
    rows.push_back(std::move(cells));
  }
  if (first) throw IoError("empty CSV document");
  return rows;
}

template <class T>
T cell(const std::string& text) {
  T out{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw IoError(fmt::format("malformed CSV value '{}'", text));
  }
  return out;
}

bool bool_cell(const std::string& text) {
  if (text == "1") return true;
  if (text == "0") return false;
  throw IoError(fmt::format("malformed CSV flag '{}'", text));
}

MetricsRecord metric_cells(const std::vector<std::string>& row, std::size_t offset) {
  MetricsRecord m;
  m.wer = cell<double>(row[offset]);
  m.h_p = cell<double>(row[offset + 1]);
  m.repetition = cell<double>(row[offset + 2]);
  m.pass_rate = cell<double>(row[offset + 3]);
  return m;
}

TrendCheck make_check(std::string name, std::string description, std::vector<bool> votes,
                      std::string detail) {
  TrendCheck c;
  c.name = std::move(name);
  c.description = std::move(description);
  c.passed = majority(votes);
  c.per_replicate = std::move(votes);
  c.detail = std::move(detail);
  return c;
}

std::size_t count_true(const std::vector<bool>& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), true));
}

bool strictly_between(double x, double a, double b) {
  return std::min(a, b) < x && x < std::max(a, b);
}

// Round rows of `system` in `replicate`, ordered by k.
std::vector<RoundRow> series(const ComparisonReport& report, const std::string& system,
                             std::size_t replicate) {
  std::vector<RoundRow> out;
  for (const RoundRow& r : report.rounds) {
    if (r.system == system && r.replicate == replicate) out.push_back(r);
  }
  std::sort(out.begin(), out.end(),
            [](const RoundRow& a, const RoundRow& b) { return a.k < b.k; });
  return out;
}

std::string render_check(const TrendCheck& c) {
  return fmt::format("{}  {:<40} {}/{} replicates  {}\n", c.passed ? "PASS" : "FAIL", c.name,
                     count_true(c.per_replicate), c.per_replicate.size(), c.detail);
}

std::string render_checks(const std::vector<TrendCheck>& checks) {
  std::string out;
  for (const TrendCheck& c : checks) {
    out += render_check(c);
    out += fmt::format("      {}\n", c.description);
  }
  return out;
}

std::string metrics_table_row(std::string_view label, const MetricsRecord& m) {
  return fmt::format("  {:<20} {:>8.4f} {:>10.4f} {:>11.4f} {:>10.4f}\n", label, m.wer, m.h_p,
                     m.repetition, m.pass_rate);
}

std::string metrics_table_header(std::string_view label) {
  return fmt::format("  {:<20} {:>8} {:>10} {:>11} {:>10}\n", label, "wer", "h_p_bits",
                     "repetition", "pass_rate");
}

std::string render_comparison(const ComparisonReport& report) {
  std::string out = metrics_table_header("system (mean)");
  std::vector<std::string> order;
  for (const ComparisonRow& row : report.rows) {
    if (std::find(order.begin(), order.end(), row.system.system) == order.end()) {
      order.push_back(row.system.system);
    }
  }
  for (const std::string& name : order) {
    MetricsRecord mean;
    std::size_t n = 0;
    for (const ComparisonRow& row : report.rows) {
      if (row.system.system != name) continue;
      mean.wer += row.system.metrics.wer;
      mean.h_p += row.system.metrics.h_p;
      mean.repetition += row.system.metrics.repetition;
      mean.pass_rate += row.system.metrics.pass_rate;
      ++n;
    }
    const double d = static_cast<double>(n);
    mean.wer /= d;
    mean.h_p /= d;
    mean.repetition /= d;
    mean.pass_rate /= d;
    out += metrics_table_row(name, mean);
  }
  return out;
}

}  // namespace

bool majority(const std::vector<bool>& votes) {
  return 2 * count_true(votes) > votes.size();
}

std::vector<TrendCheck> scaling_checks(const ScalingReport& report) {
  std::vector<TrendCheck> out;
  const std::size_t g = report.alpha_grid.size();
  const std::size_t reps = report.replicates;
  if (g < 2 || reps == 0) return out;
  const auto mean = report.mean_by_alpha();
  const double lo = report.alpha_grid.front(), hi = report.alpha_grid.back();

  std::vector<bool> votes;
  for (std::size_t r = 0; r < reps; ++r) {
    votes.push_back(report.row(g - 1, r).metrics.wer < report.row(0, r).metrics.wer);
  }
  out.push_back(make_check(
      "scaling.synthetic_stability",
      fmt::format("WER at alpha={} is below WER at alpha={}", hi, lo), votes,
      fmt::format("mean WER {:.4f} at alpha={} vs {:.4f} at alpha={}", mean[g - 1].wer, hi,
                  mean[0].wer, lo)));
  if (g < 3) return out;

  votes.clear();
  for (std::size_t r = 0; r < reps; ++r) {
    double peak = -1.0;
    for (std::size_t a = 1; a + 1 < g; ++a) peak = std::max(peak, report.row(a, r).metrics.h_p);
    votes.push_back(peak > report.row(0, r).metrics.h_p &&
                    peak > report.row(g - 1, r).metrics.h_p);
  }
  out.push_back(make_check(
      "scaling.interior_entropy_peak",
      "the largest H_p over interior grid points exceeds H_p at both ends of the grid", votes,
      fmt::format("mean H_p {:.4f} at alpha={}, {:.4f} at alpha={}, peak at alpha={}",
                  mean[0].h_p, lo, mean[g - 1].h_p, hi, report.peak_alpha())));

  std::size_t mid = 1;
  for (std::size_t a = 1; a + 1 < g; ++a) {
    if (std::abs(report.alpha_grid[a] - 0.5) < std::abs(report.alpha_grid[mid] - 0.5)) mid = a;
  }
  const double am = report.alpha_grid[mid];
  votes.clear();
  for (std::size_t r = 0; r < reps; ++r) {
    const MetricsRecord& end = report.row(g - 1, r).metrics;
    const MetricsRecord& m = report.row(mid, r).metrics;
    votes.push_back(end.h_p < m.h_p && end.repetition > m.repetition);
  }
  out.push_back(make_check(
      "scaling.erosion_tail",
      fmt::format("from alpha={} to alpha={}, H_p falls and repetition rises", am, hi), votes,
      fmt::format("mean H_p {:.4f} -> {:.4f}, repetition {:.4f} -> {:.4f}", mean[mid].h_p,
                  mean[g - 1].h_p, mean[mid].repetition, mean[g - 1].repetition)));
  return out;
}

std::vector<TrendCheck> alignment_checks(const ComparisonReport& report) {
  std::vector<TrendCheck> out;
  const std::size_t reps = report.replicates;
  std::vector<bool> parity, diversity, standard, rs;
  double ratio = 0.0, dh = 0.0, drep = 0.0, gap = 0.0;
  std::size_t rs_between = 0;
  bool rs_unchanged = true;
  for (std::size_t r = 0; r < reps; ++r) {
    const SystemResult& sft = report.find(r, "sft");
    const SystemResult& sdpo = report.find(r, "standard_dpo");
    const SystemResult& rej = report.find(r, "rejection_sampling");
    const SystemResult& dgsa = report.find(r, "dgsa");
    parity.push_back(dgsa.metrics.wer <= 1.05 * sft.metrics.wer);
    diversity.push_back(dgsa.metrics.h_p > sft.metrics.h_p &&
                        dgsa.metrics.repetition < sft.metrics.repetition);
    standard.push_back(sdpo.metrics.wer > dgsa.metrics.wer);
    const bool unchanged =
        rej.params_hash == rej.stage1_hash && rej.params_hash == sft.params_hash;
    const std::size_t between =
        static_cast<std::size_t>(
            strictly_between(rej.metrics.wer, sft.metrics.wer, dgsa.metrics.wer)) +
        static_cast<std::size_t>(
            strictly_between(rej.metrics.h_p, sft.metrics.h_p, dgsa.metrics.h_p));
    rs.push_back(unchanged && between <= 1);
    rs_unchanged = rs_unchanged && unchanged;
    rs_between = std::max(rs_between, between);
    ratio += dgsa.metrics.wer / sft.metrics.wer;
    dh += dgsa.metrics.h_p - sft.metrics.h_p;
    drep += dgsa.metrics.repetition - sft.metrics.repetition;
    gap += sdpo.metrics.wer - dgsa.metrics.wer;
  }
  const double n = static_cast<double>(reps);
  out.push_back(make_check("alignment.dgsa_wer_parity", "DGSA WER <= 1.05 x SFT WER", parity,
                           fmt::format("mean DGSA/SFT WER ratio {:.4f}", ratio / n)));
  out.push_back(make_check(
      "alignment.dgsa_diversity", "DGSA raises H_p and lowers repetition relative to SFT",
      diversity,
      fmt::format("mean H_p change {:+.4f} bits, repetition change {:+.4f}", dh / n, drep / n)));
  out.push_back(make_check("alignment.standard_dpo_wer", "Standard DPO WER exceeds DGSA WER",
                           standard,
                           fmt::format("mean Standard DPO - DGSA WER {:+.4f}", gap / n)));
  out.push_back(make_check(
      "alignment.rejection_sampling_marginal",
      "Rejection Sampling keeps the SFT parameters and lies strictly between SFT and DGSA "
      "on at most one of WER and H_p",
      rs,
      fmt::format("parameters unchanged: {}; most axes between: {}", rs_unchanged ? "yes" : "no",
                  rs_between)));
  return out;
}

std::vector<TrendCheck> tdsc_checks(const ComparisonReport& report) {
  std::vector<TrendCheck> out;
  const std::size_t reps = report.replicates;
  std::vector<bool> wer, pass, entropy, ordering, audit;
  double w0 = 0.0, w1 = 0.0, p0 = 0.0, p1 = 0.0, h2 = 0.0, h1 = 0.0, st = 0.0, td = 0.0;
  std::size_t last_k = 0;
  bool have_series = true;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto s = series(report, "tdsc", r);
    if (s.size() < 3) {
      have_series = false;
    } else {
      const RoundRow& first = s.front();
      const RoundRow& last = s.back();
      last_k = last.k;
      wer.push_back(last.pool.wer <= 0.9 * first.pool.wer);
      pass.push_back(last.pool.pass_rate > first.pool.pass_rate);
      entropy.push_back(last.pool.h_p >= s[2].pool.h_p);
      w0 += first.pool.wer;
      w1 += last.pool.wer;
      p0 += first.pool.pass_rate;
      p1 += last.pool.pass_rate;
      h2 += s[2].pool.h_p;
      h1 += last.pool.h_p;
    }
    const SystemResult& sft = report.find(r, "sft");
    const SystemResult& self = report.find(r, "self_training");
    const SystemResult& tdsc = report.find(r, "tdsc");
    ordering.push_back(sft.metrics.wer - self.metrics.wer < sft.metrics.wer - tdsc.metrics.wer);
    st += sft.metrics.wer - self.metrics.wer;
    td += sft.metrics.wer - tdsc.metrics.wer;
    bool clean = true;
    for (const LoserAudit& a : report.losers) {
      if (a.replicate == r && !(a.length_ok && a.repetition_ok)) clean = false;
    }
    audit.push_back(clean);
  }
  const double n = static_cast<double>(reps);
  if (have_series) {
    out.push_back(make_check(
        "tdsc.wer_reduction", fmt::format("candidate WER at round {} <= 0.9 x round 0", last_k),
        wer, fmt::format("mean pool WER {:.4f} -> {:.4f}", w0 / n, w1 / n)));
    out.push_back(make_check(
        "tdsc.pass_rate_rise", fmt::format("pass rate at round {} exceeds round 0", last_k),
        pass, fmt::format("mean pass rate {:.4f} -> {:.4f}", p0 / n, p1 / n)));
    out.push_back(make_check(
        "tdsc.entropy_recovery", fmt::format("candidate H_p at round {} >= round 2", last_k),
        entropy, fmt::format("mean pool H_p {:.4f} at round 2, {:.4f} at round {}", h2 / n,
                             h1 / n, last_k)));
  }
  out.push_back(make_check(
      "tdsc.beats_self_training", "Self-Training improves WER over SFT less than TDSC does",
      ordering,
      fmt::format("mean WER gain: Self-Training {:+.4f}, TDSC {:+.4f}", st / n, td / n)));
  std::size_t failing = 0;
  for (const LoserAudit& a : report.losers) failing += !(a.length_ok && a.repetition_ok);
  TrendCheck c = make_check(
      "audit.mined_losers_filtered",
      "every mined loser passes the length and repetition filters", audit,
      fmt::format("{} losers audited, {} failing", report.losers.size(), failing));
  c.passed = failing == 0;
  out.push_back(std::move(c));
  return out;
}

std::string scaling_csv(const ScalingReport& report) {
  std::string out = std::string(kScalingHeader) + "\n";
  for (const ScalingRow& row : report.rows) {
    out += fmt::format("{},{},{},{}\n", row.alpha, row.replicate, row.seed,
                       metric_fields(row.metrics));
  }
  return out;
}

std::string scaling_mean_csv(const ScalingReport& report) {
  std::string out = std::string(kScalingMeanHeader) + "\n";
  const auto mean = report.mean_by_alpha();
  for (std::size_t a = 0; a < mean.size(); ++a) {
    out += fmt::format("{},{}\n", report.alpha_grid[a], metric_fields(mean[a]));
  }
  return out;
}

std::string comparison_csv(const ComparisonReport& report) {
  std::string out = std::string(kComparisonHeader) + "\n";
  for (const ComparisonRow& row : report.rows) {
    const SystemResult& s = row.system;
    out += fmt::format("{},{},{},{},{},{},{},{}\n", row.replicate, row.seed, s.system,
                       s.stage1_hash, s.params_hash, s.weights.lambda_s, s.weights.lambda_e,
                       metric_fields(s.metrics));
  }
  return out;
}

std::string rounds_csv(const std::vector<RoundRow>& rounds) {
  std::string out = std::string(kRoundsHeader) + "\n";
  for (const RoundRow& r : rounds) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.k, r.t_high, r.pool.pass_rate,
                       r.pool.wer, r.pool.h_p, r.pool.repetition, r.accepted, r.rejected,
                       r.pairs);
  }
  return out;
}

std::string losers_csv(const std::vector<LoserAudit>& losers) {
  std::string out = std::string(kLosersHeader) + "\n";
  for (const LoserAudit& a : losers) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", a.system, a.replicate, a.k, a.prompt_id,
                       a.length_ratio, a.repetition, a.length_ok ? 1 : 0,
                       a.repetition_ok ? 1 : 0);
  }
  return out;
}

ScalingReport parse_scaling_csv(std::string_view text) {
  ScalingReport report;
  std::map<std::pair<double, std::size_t>, ScalingRow> cells;
  for (const auto& row : read_csv(text, kScalingHeader, 7)) {
    ScalingRow s;
    s.alpha = cell<double>(row[0]);
    s.replicate = cell<std::size_t>(row[1]);
    s.seed = cell<std::uint64_t>(row[2]);
    s.metrics = metric_cells(row, 3);
    report.replicates = std::max(report.replicates, s.replicate + 1);
    if (std::find(report.alpha_grid.begin(), report.alpha_grid.end(), s.alpha) ==
        report.alpha_grid.end()) {
      report.alpha_grid.push_back(s.alpha);
    }
    cells[{s.alpha, s.replicate}] = s;
  }
  std::sort(report.alpha_grid.begin(), report.alpha_grid.end());
  if (cells.size() != report.alpha_grid.size() * report.replicates) {
    throw IoError("scaling CSV does not cover every (alpha, replicate) cell");
  }
  for (double a : report.alpha_grid) {
    for (std::size_t r = 0; r < report.replicates; ++r) {
      const auto it = cells.find({a, r});
      if (it == cells.end()) throw IoError("scaling CSV is missing a cell");
      report.rows.push_back(it->second);
    }
  }
  return report;
}

ComparisonReport parse_comparison_csv(std::string_view kind, std::string_view text) {
  ComparisonReport report;
  report.kind = std::string(kind);
  report.alpha = kind == "tdsc" ? 1.0 : 0.0;
  for (const auto& row : read_csv(text, kComparisonHeader, 11)) {
    ComparisonRow c;
    c.replicate = cell<std::size_t>(row[0]);
    c.seed = cell<std::uint64_t>(row[1]);
    c.system.system = row[2];
    c.system.stage1_hash = row[3];
    c.system.params_hash = row[4];
    c.system.weights.lambda_s = cell<double>(row[5]);
    c.system.weights.lambda_e = cell<double>(row[6]);
    c.system.metrics = metric_cells(row, 7);
    report.replicates = std::max(report.replicates, c.replicate + 1);
    report.rows.push_back(std::move(c));
  }
  return report;
}

std::vector<RoundRow> parse_rounds_csv(std::string_view system, std::size_t replicate,
                                       std::string_view text) {
  std::vector<RoundRow> out;
  for (const auto& row : read_csv(text, kRoundsHeader, 9)) {
    RoundRow r;
    r.system = std::string(system);
    r.replicate = replicate;
    r.k = cell<std::size_t>(row[0]);
    r.t_high = cell<double>(row[1]);
    r.pool.pass_rate = cell<double>(row[2]);
    r.pool.wer = cell<double>(row[3]);
    r.pool.h_p = cell<double>(row[4]);
    r.pool.repetition = cell<double>(row[5]);
    r.accepted = cell<std::size_t>(row[6]);
    r.rejected = cell<std::size_t>(row[7]);
    r.pairs = cell<std::size_t>(row[8]);
    out.push_back(r);
  }
  return out;
}

std::vector<LoserAudit> parse_losers_csv(std::string_view text) {
  std::vector<LoserAudit> out;
  for (const auto& row : read_csv(text, kLosersHeader, 8)) {
    LoserAudit a;
    a.system = row[0];
    a.replicate = cell<std::size_t>(row[1]);
    a.k = cell<std::size_t>(row[2]);
    a.prompt_id = cell<std::uint32_t>(row[3]);
    a.length_ratio = cell<double>(row[4]);
    a.repetition = cell<double>(row[5]);
    a.length_ok = bool_cell(row[6]);
    a.repetition_ok = bool_cell(row[7]);
    out.push_back(a);
  }
  return out;
}

void write_scaling_report(const ScalingReport& report, const fs::path& dir) {
  ensure_directory(dir);
  write_file_atomic(dir / "scaling.csv", scaling_csv(report));
  write_file_atomic(dir / "scaling_mean.csv", scaling_mean_csv(report));
}

void write_comparison_report(const ComparisonReport& report, const fs::path& dir) {
  ensure_directory(dir);
  write_file_atomic(dir / comparison_file(report.kind), comparison_csv(report));
  if (report.kind != "tdsc") return;
  std::map<std::pair<std::string, std::size_t>, std::vector<RoundRow>> groups;
  for (const RoundRow& r : report.rounds) groups[{r.system, r.replicate}].push_back(r);
  for (const auto& [key, rows] : groups) {
    write_file_atomic(dir / fmt::format("{}_r{}.csv", key.first, key.second), rounds_csv(rows));
  }
  write_file_atomic(dir / "mined_losers.csv", losers_csv(report.losers));
}

DirectoryReports load_reports(const fs::path& dir) {
  DirectoryReports out;
  if (fs::exists(dir / "scaling.csv")) {
    out.scaling = parse_scaling_csv(read_file(dir / "scaling.csv"));
  }
  if (fs::exists(dir / "alignment.csv")) {
    out.alignment = parse_comparison_csv("alignment", read_file(dir / "alignment.csv"));
  }
  if (fs::exists(dir / "tdsc_comparison.csv")) {
    ComparisonReport report =
        parse_comparison_csv("tdsc", read_file(dir / "tdsc_comparison.csv"));
    const std::regex pattern(R"(^(tdsc|self_training)_r(\d+)\.csv$)");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      const std::string name = file.filename().string();
      std::smatch m;
      if (!std::regex_match(name, m, pattern)) continue;
      auto rows = parse_rounds_csv(m[1].str(), cell<std::size_t>(m[2].str()), read_file(file));
      report.rounds.insert(report.rounds.end(), rows.begin(), rows.end());
    }
    if (fs::exists(dir / "mined_losers.csv")) {
      report.losers = parse_losers_csv(read_file(dir / "mined_losers.csv"));
    }
    out.tdsc = std::move(report);
  }
  return out;
}

std::string render_summary(const DirectoryReports& reports) {
  std::string out = fmt::format("ErosionLab report (version {})\n", kVersion);
  if (!reports.scaling && !reports.alignment && !reports.tdsc) {
    out += "\nno report files found\n";
    return out;
  }
  if (reports.scaling) {
    const ScalingReport& s = *reports.scaling;
    out += fmt::format("\n== synthetic-ratio sweep ({} replicates)\n", s.replicates);
    out += metrics_table_header("alpha (mean)");
    const auto mean = s.mean_by_alpha();
    for (std::size_t a = 0; a < mean.size(); ++a) {
      out += metrics_table_row(fmt::format("{}", s.alpha_grid[a]), mean[a]);
    }
    out += fmt::format("  peak mean H_p at alpha = {}\n\n", s.peak_alpha());
    out += render_checks(scaling_checks(s));
  }
  if (reports.alignment) {
    out += fmt::format("\n== alignment comparison ({} replicates)\n",
                       reports.alignment->replicates);
    out += render_comparison(*reports.alignment) + "\n";
    out += render_checks(alignment_checks(*reports.alignment));
  }
  if (reports.tdsc) {
    const ComparisonReport& t = *reports.tdsc;
    out += fmt::format("\n== self-critique comparison ({} replicates)\n", t.replicates);
    out += render_comparison(t);
    for (const std::string system : {"tdsc", "self_training"}) {
      for (std::size_t r = 0; r < t.replicates; ++r) {
        const auto s = series(t, system, r);
        if (s.empty()) continue;
        out += fmt::format("\n  {} replicate {} rounds\n", system, r);
        out += fmt::format("  {:>3} {:>7} {:>8} {:>10} {:>10} {:>9} {:>9} {:>6}\n", "k",
                           "t_high", "wer", "h_p_bits", "pass_rate", "accepted", "rejected",
                           "pairs");
        for (const RoundRow& row : s) {
          out += fmt::format("  {:>3} {:>7.2f} {:>8.4f} {:>10.4f} {:>10.4f} {:>9} {:>9} {:>6}\n",
                             row.k, row.t_high, row.pool.wer, row.pool.h_p,
                             row.pool.pass_rate, row.accepted, row.rejected, row.pairs);
        }
      }
    }
    out += "\n";
    out += render_checks(tdsc_checks(t));
  }
  return out;
}

std::string write_summary(const fs::path& dir) {
  const std::string text = render_summary(load_reports(dir));
  write_file_atomic(dir / "summary.txt", text);
  return text;
}

nlohmann::ordered_json metrics_json(const MetricsRecord& m) {
  nlohmann::ordered_json j;
  j["wer"] = m.wer;
  j["h_p_bits"] = m.h_p;
  j["repetition"] = m.repetition;
  j["pass_rate"] = m.pass_rate;
  j["sample_count"] = m.sample_count;
  return j;
}

void RunManifest::add_stage(const std::string& name, nlohmann::ordered_json details) {
  nlohmann::ordered_json stage;
  stage["stage"] = name;
  for (auto& [key, value] : details.items()) stage[key] = value;
  stages.push_back(std::move(stage));
}

void RunManifest::add_stages(const ScalingReport& report) {
  for (const ScalingRow& row : report.rows) {
    nlohmann::ordered_json d;
    d["alpha"] = row.alpha;
    d["replicate"] = row.replicate;
    d["seed"] = row.seed;
    d["n_real"] = row.counts.n_real;
    d["n_synthetic"] = row.counts.n_synthetic;
    d["params_hash"] = row.params_hash;
    d["metrics"] = metrics_json(row.metrics);
    add_stage("sft", std::move(d));
  }
}

void RunManifest::add_stages(const ComparisonReport& report) {
  for (const ComparisonRow& row : report.rows) {
    nlohmann::ordered_json d;
    d["replicate"] = row.replicate;
    d["seed"] = row.seed;
    d["stage1_hash"] = row.system.stage1_hash;
    d["params_hash"] = row.system.params_hash;
    d["lambda_s"] = row.system.weights.lambda_s;
    d["lambda_e"] = row.system.weights.lambda_e;
    d["metrics"] = metrics_json(row.system.metrics);
    add_stage(row.system.system, std::move(d));
  }
  for (const RoundRow& r : report.rounds) {
    nlohmann::ordered_json d;
    d["replicate"] = r.replicate;
    d["k"] = r.k;
    d["t_high"] = r.t_high;
    d["accepted"] = r.accepted;
    d["rejected"] = r.rejected;
    d["pairs"] = r.pairs;
    d["pool"] = metrics_json(r.pool);
    add_stage(r.system + ".round", std::move(d));
  }
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["software"] = "erosionlab";
  j["version"] = kVersion;
  j["command"] = command;
  j["config_hash"] = config_hash(config);
  nlohmann::ordered_json snapshot;
  for (const std::string& key : config_keys()) snapshot[key] = get_config_value(config, key);
  j["config"] = std::move(snapshot);
  j["stages"] = stages;
  j["status"] = status;
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

void RunManifest::write(const fs::path& dir) const {
  ensure_directory(dir);
  write_file_atomic(dir / "manifest.json", to_json().dump(2) + "\n");
}

}  // namespace erosion
