#include "ccoach/stats.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ccoach/errors.hpp"

namespace ccoach {

namespace {

constexpr std::int64_t kWeekSeconds = 7 * 24 * 3600;

/// Switches the process time zone for its lifetime.
class ScopedTimezone {
 public:
  explicit ScopedTimezone(std::string_view tz) : active_(!tz.empty()) {
    if (!active_) return;
    if (const char* old = std::getenv("TZ")) previous_ = old;
    ::setenv("TZ", std::string(tz).c_str(), 1);
    ::tzset();
  }
  ~ScopedTimezone() {
    if (!active_) return;
    if (previous_) {
      ::setenv("TZ", previous_->c_str(), 1);
    } else {
      ::unsetenv("TZ");
    }
    ::tzset();
  }
  ScopedTimezone(const ScopedTimezone&) = delete;
  ScopedTimezone& operator=(const ScopedTimezone&) = delete;

 private:
  bool active_;
  std::optional<std::string> previous_;
};

int hour_now_zone(std::int64_t timestamp) {
  std::time_t t = static_cast<std::time_t>(timestamp);
  std::tm tm{};
  localtime_r(&t, &tm);
  return tm.tm_hour;
}

bool is_help(EventKind kind) {
  return kind == EventKind::HelpCompile || kind == EventKind::HelpRuntime;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

}  // namespace

int local_hour(std::int64_t timestamp, std::string_view timezone) {
  ScopedTimezone zone(timezone);
  return hour_now_zone(timestamp);
}

UsageSummary aggregate_stats(const std::vector<UsageEvent>& events, const StatsOptions& options) {
  ScopedTimezone zone(options.timezone);
  UsageSummary summary;
  std::map<int, std::set<std::string>> week_users;
  std::unordered_map<std::string, std::int64_t> per_user;
  std::int64_t night = 0;
  int last_week = 0;

  for (const auto& e : events) {
    if (e.timestamp < options.term_start) continue;
    int week = static_cast<int>((e.timestamp - options.term_start) / kWeekSeconds) + 1;
    last_week = std::max(last_week, week);
    WeekUsage& w = summary.per_week[week];
    ++w.all_events;
    if (!is_help(e.kind)) continue;
    if (e.kind == EventKind::HelpCompile) {
      ++w.compile_help;
    } else {
      ++w.runtime_help;
    }
    ++w.total;
    week_users[week].insert(e.user_hash);
    ++per_user[e.user_hash];
    int hour = hour_now_zone(e.timestamp);
    if (hour >= 18 || hour < 8) ++night;
  }
  for (int week = 1; week <= last_week; ++week) summary.per_week[week];

  OverallUsage& o = summary.overall;
  std::int64_t weekly_unique_sum = 0;
  for (auto& [week, w] : summary.per_week) {
    w.unique_users = static_cast<std::int64_t>(week_users[week].size());
    weekly_unique_sum += w.unique_users;
    o.compile_help += w.compile_help;
    o.runtime_help += w.runtime_help;
  }
  o.total_help = o.compile_help + o.runtime_help;
  o.unique_users = static_cast<std::int64_t>(per_user.size());
  if (!summary.per_week.empty()) {
    o.mean_weekly_unique_users = static_cast<double>(weekly_unique_sum) / static_cast<double>(summary.per_week.size());
  }
  if (!per_user.empty()) {
    std::vector<std::int64_t> counts;
    counts.reserve(per_user.size());
    for (const auto& [user, count] : per_user) counts.push_back(count);
    std::sort(counts.begin(), counts.end());
    std::size_t n = counts.size();
    o.median_per_user = n % 2 ? static_cast<double>(counts[n / 2])
                              : (static_cast<double>(counts[n / 2 - 1]) + static_cast<double>(counts[n / 2])) / 2.0;
    o.mean_per_user = static_cast<double>(o.total_help) / static_cast<double>(n);
  }
  if (o.total_help > 0) o.night_fraction = static_cast<double>(night) / static_cast<double>(o.total_help);
  return summary;
}

std::string format_summary_table(const UsageSummary& summary) {
  std::ostringstream out;
  char row[128];
  std::snprintf(row, sizeof row, "%6s %14s %14s %10s %10s\n", "week", "unique_users", "compile_time", "run_time",
                "total");
  out << row;
  for (const auto& [week, w] : summary.per_week) {
    std::snprintf(row, sizeof row, "%6d %14lld %14lld %10lld %10lld\n", week, static_cast<long long>(w.unique_users),
                  static_cast<long long>(w.compile_help), static_cast<long long>(w.runtime_help),
                  static_cast<long long>(w.total));
    out << row;
  }
  const OverallUsage& o = summary.overall;
  out << "\n";
  out << "help requests:        " << o.total_help << " (compile-time " << o.compile_help << ", run-time "
      << o.runtime_help << ")\n";
  out << "unique users:         " << o.unique_users << " (mean per week " << fixed(o.mean_weekly_unique_users, 1)
      << ")\n";
  out << "requests per user:    mean " << fixed(o.mean_per_user, 2) << ", median " << fixed(o.median_per_user, 1)
      << "\n";
  out << "18:00-08:00 share:    " << fixed(o.night_fraction * 100.0, 1) << "%\n";
  return out.str();
}

std::string format_weekly_csv(const UsageSummary& summary) {
  std::string out = "week,unique_users,compile_time,run_time,total\n";
  for (const auto& [week, w] : summary.per_week) {
    out += std::to_string(week) + "," + std::to_string(w.unique_users) + "," + std::to_string(w.compile_help) + "," +
           std::to_string(w.runtime_help) + "," + std::to_string(w.total) + "\n";
  }
  return out;
}

std::int64_t parse_date_utc(std::string_view date) {
  int y = 0;
  int m = 0;
  int d = 0;
  char tail = 0;
  std::string text(date);
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) != 3 || m < 1 || m > 12 ||
      d < 1 || d > 31) {
    throw UsageError("expected a date as YYYY-MM-DD, got '" + text + "'");
  }
  std::tm tm{};
  tm.tm_year = y - 1900;
  tm.tm_mon = m - 1;
  tm.tm_mday = d;
  std::time_t t = ::timegm(&tm);
  if (tm.tm_mday != d) throw UsageError("no such date '" + text + "'");
  return static_cast<std::int64_t>(t);
}

}  // namespace ccoach
