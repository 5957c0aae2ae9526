#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "ccoach/errors.hpp"
#include "ccoach/stats.hpp"
#include "fixtures.hpp"

using namespace ccoach;

namespace {

UsageEvent help(std::int64_t ts, EventKind kind, std::string user) {
  UsageEvent e;
  e.timestamp = ts;
  e.kind = kind;
  e.user_hash = std::move(user);
  e.week = iso_week_label(ts);
  return e;
}

constexpr std::int64_t kStart = 1707696000;  // Monday 2024-02-12 UTC
constexpr std::int64_t kWeek = 604800;

}  // namespace

TEST(Stats, WeekBucketsFromTermStart) {
  std::vector<UsageEvent> events = {
      help(kStart - 1, EventKind::HelpCompile, "a"),  // before term: ignored
      help(kStart, EventKind::HelpCompile, "a"),
      help(kStart + kWeek - 1, EventKind::HelpRuntime, "b"),
      help(kStart + 2 * kWeek, EventKind::HelpCompile, "a"),
      help(kStart + 2 * kWeek + 5, EventKind::CompileError, "c"),
  };
  UsageSummary s = aggregate_stats(events, {kStart, "UTC"});
  ASSERT_EQ(s.per_week.size(), 3u);
  EXPECT_EQ(s.per_week[1].compile_help, 1);
  EXPECT_EQ(s.per_week[1].runtime_help, 1);
  EXPECT_EQ(s.per_week[1].unique_users, 2);
  EXPECT_EQ(s.per_week[2], WeekUsage{});  // empty week still present
  EXPECT_EQ(s.per_week[3].total, 1);
  EXPECT_EQ(s.per_week[3].all_events, 2);
  EXPECT_EQ(s.overall.total_help, 3);
  EXPECT_EQ(s.overall.unique_users, 2);
  EXPECT_DOUBLE_EQ(s.overall.mean_per_user, 1.5);
  EXPECT_DOUBLE_EQ(s.overall.median_per_user, 1.5);
}

TEST(Stats, OrderIndependent) {
  auto series = fixtures::usage_series();
  series.compile = {30, 20, 10};
  series.runtime = {5, 6, 7};
  series.users = {3, 4, 5};
  auto events = fixtures::usage_events(series);
  UsageSummary a = aggregate_stats(events, {series.term_start, "UTC"});
  std::mt19937_64 rng(2);
  std::shuffle(events.begin(), events.end(), rng);
  UsageSummary b = aggregate_stats(events, {series.term_start, "UTC"});
  EXPECT_EQ(a.per_week, b.per_week);
  EXPECT_EQ(a.overall.total_help, b.overall.total_help);
}

TEST(Stats, NightWindowInConfiguredZone) {
  // 07:59 and 18:00 are night, 08:00 and 17:59 are day.
  std::int64_t day = kStart + 86400;
  std::vector<UsageEvent> events = {
      help(day + 7 * 3600 + 59 * 60, EventKind::HelpCompile, "a"),
      help(day + 18 * 3600, EventKind::HelpCompile, "a"),
      help(day + 8 * 3600, EventKind::HelpCompile, "a"),
      help(day + 17 * 3600 + 59 * 60, EventKind::HelpCompile, "a"),
  };
  EXPECT_DOUBLE_EQ(aggregate_stats(events, {kStart, "UTC"}).overall.night_fraction, 0.5);
  // Ten hours east the same instants are 17:59, 04:00, 18:00 and 03:59 local.
  EXPECT_DOUBLE_EQ(aggregate_stats(events, {kStart, "Etc/GMT-10"}).overall.night_fraction, 0.75);
  std::vector<UsageEvent> day_only = {help(day + 12 * 3600, EventKind::HelpRuntime, "a")};
  EXPECT_DOUBLE_EQ(aggregate_stats(day_only, {kStart, "UTC"}).overall.night_fraction, 0.0);
  EXPECT_DOUBLE_EQ(aggregate_stats(day_only, {kStart, "Etc/GMT-10"}).overall.night_fraction, 1.0);
}

TEST(Stats, LocalHour) {
  EXPECT_EQ(local_hour(kStart + 3600 * 5, "UTC"), 5);
  EXPECT_EQ(local_hour(kStart + 3600 * 5, "Etc/GMT-10"), 15);
}

TEST(Stats, CsvColumns) {
  std::vector<UsageEvent> events = {help(kStart, EventKind::HelpCompile, "a"),
                                    help(kStart + kWeek, EventKind::HelpRuntime, "b")};
  EXPECT_EQ(format_weekly_csv(aggregate_stats(events, {kStart, "UTC"})),
            "week,unique_users,compile_time,run_time,total\n1,1,1,0,1\n2,1,0,1,1\n");
}

TEST(Stats, SummaryTableMentionsTotals) {
  std::vector<UsageEvent> events = {help(kStart, EventKind::HelpCompile, "a")};
  std::string table = format_summary_table(aggregate_stats(events, {kStart, "UTC"}));
  EXPECT_NE(table.find("help requests:        1 (compile-time 1, run-time 0)"), std::string::npos) << table;
}

TEST(Stats, ParseDate) {
  EXPECT_EQ(parse_date_utc("2024-02-12"), kStart);
  EXPECT_THROW(parse_date_utc("12/02/2024"), UsageError);
  EXPECT_THROW(parse_date_utc("2024-13-01"), UsageError);
  EXPECT_THROW(parse_date_utc("2024-02-12x"), UsageError);
}

TEST(Stats, EmptyLog) {
  UsageSummary s = aggregate_stats({}, {kStart, "UTC"});
  EXPECT_TRUE(s.per_week.empty());
  EXPECT_EQ(s.overall.total_help, 0);
  EXPECT_DOUBLE_EQ(s.overall.night_fraction, 0.0);
}
