#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ccoach/telemetry.hpp"

namespace ccoach {

struct WeekUsage {
  std::int64_t compile_help = 0;
  std::int64_t runtime_help = 0;
  std::int64_t total = 0;         // compile_help + runtime_help
  std::int64_t unique_users = 0;  // distinct users with a help event this week
  std::int64_t all_events = 0;    // every logged event, help or not

  bool operator==(const WeekUsage&) const = default;
};

struct OverallUsage {
  std::int64_t total_help = 0;
  std::int64_t compile_help = 0;
  std::int64_t runtime_help = 0;
  std::int64_t unique_users = 0;
  double mean_weekly_unique_users = 0.0;
  double median_per_user = 0.0;
  double mean_per_user = 0.0;
  double night_fraction = 0.0;  // help events in [18:00, 08:00) local time
};

struct UsageSummary {
  std::map<int, WeekUsage> per_week;  // week 1 starts at term_start
  OverallUsage overall;
};

struct StatsOptions {
  std::int64_t term_start = 0;  // UTC seconds
  std::string timezone;         // empty: process local time
};

/// Local hour of day [0, 24) of `timestamp` in `timezone` (a TZ name).
int local_hour(std::int64_t timestamp, std::string_view timezone);

/// Weekly and overall help usage. Independent of event order. Events before
/// term_start are ignored.
UsageSummary aggregate_stats(const std::vector<UsageEvent>& events, const StatsOptions& options);

std::string format_summary_table(const UsageSummary& summary);
/// Columns: week,unique_users,compile_time,run_time,total.
std::string format_weekly_csv(const UsageSummary& summary);

/// Parses YYYY-MM-DD as midnight UTC. Throws UsageError.
std::int64_t parse_date_utc(std::string_view date);

}  // namespace ccoach
