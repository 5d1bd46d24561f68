#pragma once

#include "coremix/errors.hpp"
#include "coremix/manifest.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coremix {

using Seconds = std::chrono::duration<double>;

struct OverheadInput {
  Seconds t_aug{0}; // training time with augmented data
  Seconds t_van{0}; // baseline training time
};

/// Relative training-time increase in percent: (t_aug - t_van) / t_van * 100. Negative when augmentation is faster.
inline double augmentation_overhead(const OverheadInput &in) {
  if (!(in.t_van.count() > 0.0))
    throw ValidationError("t_van must be > 0");
  return (in.t_aug.count() - in.t_van.count()) / in.t_van.count() * 100.0;
}

/// Parses "2h", "90m", "1h30m", "45s", "1500ms" or a bare number of seconds.
inline Seconds parse_duration(std::string_view text) {
  if (text.empty())
    throw ParseError("empty duration");
  double total = 0.0;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.'))
      ++j;
    if (j == i)
      throw ParseError("bad duration '" + std::string(text) + "'");
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data() + i, text.data() + j, value);
    if (ec != std::errc{} || end != text.data() + j)
      throw ParseError("bad duration '" + std::string(text) + "'");
    std::size_t k = j;
    while (k < text.size() && std::isalpha(static_cast<unsigned char>(text[k])))
      ++k;
    const auto unit = text.substr(j, k - j);
    if (unit.empty() || unit == "s")
      total += value;
    else if (unit == "ms")
      total += value / 1000.0;
    else if (unit == "m" || unit == "min")
      total += value * 60.0;
    else if (unit == "h")
      total += value * 3600.0;
    else
      throw ParseError("unknown duration unit '" + std::string(unit) + "'");
    if (unit.empty() && k != text.size())
      throw ParseError("bad duration '" + std::string(text) + "'");
    i = k;
  }
  return Seconds(total);
}

struct PhaseTimings {
  double scan = 0, thresholds = 0, generation = 0, mixing = 0, io = 0; // seconds
};

struct ThresholdInfo {
  std::uint64_t pairs_used = 0;
  std::uint64_t pairs_total = 0;
  std::uint64_t seed = 0;
  bool exhaustive = false;
};

struct ClassSummary {
  std::string class_name;
  std::optional<std::size_t> n_k;
  std::optional<double> tau;
  std::size_t records = 0;
  std::size_t generated = 0; // generation attempts
  std::size_t accepted = 0;
  std::size_t discarded = 0;
  std::size_t failures = 0; // samples whose retries ran out
  std::optional<double> discard_rate; // discarded / (accepted + discarded); absent with no attempts
  std::optional<ThresholdInfo> threshold;
};

struct RunReport {
  std::vector<ClassSummary> classes;
  ClassSummary totals{"total"};
  PhaseTimings timings;
  std::optional<double> augmentation_overhead;
  bool complete = true;
};

namespace detail {
inline void finish(ClassSummary &s) {
  s.generated = s.accepted + s.discarded;
  if (s.generated > 0)
    s.discard_rate = static_cast<double>(s.discarded) / static_cast<double>(s.generated);
  else
    s.discard_rate.reset();
}
} // namespace detail

/// Aggregates manifest records per class. `class_sizes` (class -> n_k) adds classes that
/// produced no records and fills in n_k; its order (sorted by name) is the report order.
inline RunReport summarize_run(const std::vector<AugmentationRecord> &records, const PhaseTimings &timings = {},
                               const std::map<std::string, std::size_t> &class_sizes = {}) {
  std::map<std::string, ClassSummary> by_class;
  for (const auto &[name, n] : class_sizes)
    by_class[name] = ClassSummary{name, n};
  for (const auto &r : records) {
    validate(r);
    auto &s = by_class[r.class_name];
    s.class_name = r.class_name;
    s.tau = r.tau;
    ++s.records;
    if (r.accepted) {
      ++s.accepted;
      s.discarded += r.attempts - 1;
    } else {
      ++s.failures;
      s.discarded += r.attempts;
    }
  }
  RunReport report;
  report.timings = timings;
  std::size_t total_n = 0;
  bool all_n_known = !by_class.empty();
  for (auto &[name, s] : by_class) {
    detail::finish(s);
    report.totals.records += s.records;
    report.totals.accepted += s.accepted;
    report.totals.discarded += s.discarded;
    report.totals.failures += s.failures;
    if (s.n_k)
      total_n += *s.n_k;
    else
      all_n_known = false;
    report.classes.push_back(s);
  }
  if (all_n_known)
    report.totals.n_k = total_n;
  detail::finish(report.totals);
  return report;
}

namespace detail {
template <class T> nlohmann::ordered_json opt_json(const std::optional<T> &v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const ClassSummary &s) {
  nlohmann::ordered_json j = {{"class_name", s.class_name}, {"n_k", opt_json(s.n_k)},
                              {"tau", opt_json(s.tau)},     {"records", s.records},
                              {"generated", s.generated},   {"accepted", s.accepted},
                              {"discarded", s.discarded},   {"failures", s.failures},
                              {"discard_rate", opt_json(s.discard_rate)}};
  if (s.threshold)
    j["threshold"] = {{"pairs_used", s.threshold->pairs_used},
                      {"pairs_total", s.threshold->pairs_total},
                      {"seed", s.threshold->seed},
                      {"exhaustive", s.threshold->exhaustive}};
  return j;
}
} // namespace detail

inline nlohmann::ordered_json to_json(const RunReport &r) {
  nlohmann::ordered_json j;
  j["complete"] = r.complete;
  j["classes"] = nlohmann::ordered_json::array();
  for (const auto &c : r.classes)
    j["classes"].push_back(detail::to_json(c));
  j["totals"] = detail::to_json(r.totals);
  j["timings_seconds"] = {{"scan", r.timings.scan},
                          {"thresholds", r.timings.thresholds},
                          {"generation", r.timings.generation},
                          {"mixing", r.timings.mixing},
                          {"io", r.timings.io}};
  j["augmentation_overhead_percent"] = detail::opt_json(r.augmentation_overhead);
  return j;
}

} // namespace coremix
