#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <set>

#include "ccoach/errors.hpp"
#include "ccoach/telemetry.hpp"
#include "fixtures.hpp"

using namespace ccoach;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

UsageEvent event(std::int64_t ts, EventKind kind = EventKind::HelpCompile) {
  UsageEvent e;
  e.timestamp = ts;
  e.kind = kind;
  e.user_hash = "0123456789abcdef";
  e.source_bytes = 321;
  e.week = iso_week_label(ts);
  return e;
}

bool contains_word(const std::string& text, const std::string& word) {
  std::string escaped = std::regex_replace(word, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)");
  std::regex re("(^|[^A-Za-z0-9])" + escaped + "($|[^A-Za-z0-9])", std::regex::icase);
  return std::regex_search(text, re);
}

}  // namespace

TEST(EventFormat, RoundTrip) {
  UsageEvent e = event(1700000000, EventKind::RuntimeError);
  std::string line = format_event(e);
  EXPECT_EQ(line, "1\t1700000000\truntime-error\t0123456789abcdef\t321\t2023-W46\n");
  EXPECT_EQ(parse_event(line), e);
}

TEST(EventFormat, AllKindsRoundTrip) {
  for (auto kind : {EventKind::CompileOk, EventKind::CompileError, EventKind::RuntimeError, EventKind::HelpCompile,
                    EventKind::HelpRuntime, EventKind::HelpRefused, EventKind::ToolError}) {
    EXPECT_EQ(event_kind_from_string(to_string(kind)), kind);
    EXPECT_EQ(parse_event(format_event(event(5, kind)))->kind, kind);
  }
}

TEST(EventFormat, RejectsDamagedLines) {
  EXPECT_FALSE(parse_event(""));
  EXPECT_FALSE(parse_event("2\t1\thelp-compile\t0123456789abcdef\t1\t2024-W01"));
  EXPECT_FALSE(parse_event("1\tx\thelp-compile\t0123456789abcdef\t1\t2024-W01"));
  EXPECT_FALSE(parse_event("1\t1\tnonsense\t0123456789abcdef\t1\t2024-W01"));
  EXPECT_FALSE(parse_event("1\t1\thelp-compile\tnothex\t1\t2024-W01"));
  EXPECT_FALSE(parse_event("1\t1\thelp-compile\t0123456789abcdef\t1"));
  EXPECT_FALSE(parse_event("1\t1\thelp-compile\t0123456789abcdef\t1\t2024-W01\textra"));
}

TEST(EventFormat, IsoWeeks) {
  EXPECT_EQ(iso_week_label(1735516800), "2025-W01");  // 2024-12-30
  EXPECT_EQ(iso_week_label(1609632000), "2020-W53");  // 2021-01-03
  EXPECT_EQ(iso_week_label(1707696000), "2024-W07");  // 2024-02-12
}

TEST(UserHash, KeyedAndStable) {
  std::string a = hash_user("salt", "z1234567");
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a, hash_user("salt", "z1234567"));
  EXPECT_NE(a, hash_user("pepper", "z1234567"));
  EXPECT_NE(a, hash_user("salt", "z7654321"));
  EXPECT_TRUE(std::regex_match(a, std::regex("[0-9a-f]{16}")));
}

TEST(EventLog, AppendAndReadByDay) {
  TempDir dir;
  EventLog log(dir / "logs");
  log.append(event(1707696000));          // 2024-02-12
  log.append(event(1707696000 + 86400));  // 2024-02-13
  log.append(event(1707696000 + 86401, EventKind::HelpRuntime));
  EXPECT_TRUE(fs::exists(dir / "logs" / "usage-2024-02-12.log"));
  EXPECT_EQ(log.read_all().size(), 3u);
  EXPECT_EQ(log.read_all("2024-02-13").size(), 2u);
  EXPECT_EQ(log.read_all("", "2024-02-12").size(), 1u);
  EXPECT_EQ(log.read_all("2024-03-01").size(), 0u);
}

TEST(EventLog, DamagedLinesAreSkipped) {
  TempDir dir;
  EventLog log(dir.path());
  log.append(event(1707696000));
  std::ofstream(dir / "usage-2024-02-12.log", std::ios::app) << "garbage line\n1\t2\tpartial";
  EXPECT_EQ(log.read_all().size(), 1u);
}

TEST(EventLog, QuietAppendReportsFailure) {
  TempDir dir;
  fixtures::write_file(dir / "file", "x");
  EventLog log(dir / "file" / "logs");
  std::vector<std::string> warnings;
  log.append_quietly(event(1), [&](const std::string& w) { warnings.push_back(w); });
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_THROW(log.append(event(1)), IoError);
}

TEST(EventLog, TwoProcessesHundredEventsEach) {
  TempDir dir;
  std::vector<pid_t> children;
  for (int p = 0; p < 2; ++p) {
    pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
      EventLog log(dir.path());
      for (int i = 0; i < 100; ++i) {
        UsageEvent e = event(1707696000 + i);
        e.source_bytes = p * 1000 + i;
        log.append(e);
      }
      ::_exit(0);
    }
    children.push_back(pid);
  }
  for (pid_t pid : children) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    ASSERT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0);
  }
  std::string raw = fixtures::read_file(dir / "usage-2024-02-12.log");
  EXPECT_EQ(std::count(raw.begin(), raw.end(), '\n'), 200);
  auto events = EventLog(dir.path()).read_all();
  ASSERT_EQ(events.size(), 200u);
  std::set<std::int64_t> seen;
  for (const auto& e : events) seen.insert(e.source_bytes);
  EXPECT_EQ(seen.size(), 200u);
}

TEST(Anonymizer, CommentsOnly) {
  AnonymizeOptions o;
  o.known_identifiers = {"Priya Raman", "praman"};
  std::string src =
      "// Author: Priya Raman z1234567\n"
      "int main(void) { char *s = \"z1234567 praman@x.edu\"; /* praman@student.example.edu */ return 0; }\n";
  AnonymizedSource out = anonymize(src, "z1234567_lab1.c", o);
  EXPECT_EQ(out.text,
            "// Author: [redacted] [redacted]\n"
            "int main(void) { char *s = \"z1234567 praman@x.edu\"; /* [redacted] */ return 0; }\n");
  EXPECT_EQ(out.file_name, "[redacted]_lab1.c");
}

TEST(Anonymizer, LabelNamesWithoutKnownList) {
  AnonymizeOptions o;
  EXPECT_EQ(scrub_text(" Written by Ada Lovelace, 2024", o, true), " Written by [redacted], 2024");
  EXPECT_EQ(scrub_text(" name: Grace Hopper\n next line", o, true), " name: [redacted]\n next line");
  EXPECT_EQ(scrub_text(" Author: Grace Hopper", o, false), " Author: Grace Hopper");
}

TEST(Anonymizer, StudentIdPatternIsConfigurable) {
  AnonymizeOptions o;
  o.student_id_pattern = "s[0-9]{6}";
  EXPECT_EQ(scrub_text("id s123456 and z1234567", o, false), "id [redacted] and z1234567");
}

TEST(Anonymizer, PlantedCorpus) {
  auto corpus = fixtures::planted_corpus(50, 99);
  for (const auto& f : corpus.files) {
    AnonymizedSource out = anonymize(f.text, f.file_name, corpus.options);
    for (const auto& id : f.planted) {
      EXPECT_FALSE(contains_word(out.text, id)) << id << " survived in\n" << out.text;
      EXPECT_FALSE(contains_word(out.file_name, id)) << id << " survived in " << out.file_name;
    }
    EXPECT_EQ(fixtures::code_skeleton(out.text), fixtures::code_skeleton(f.text)) << f.text;
    // Applying it again changes nothing.
    AnonymizedSource again = anonymize(out.text, out.file_name, corpus.options);
    EXPECT_EQ(again.text, out.text);
    EXPECT_EQ(again.file_name, out.file_name);
  }
}

TEST(CommentOracle, SplitsCodeAndComments) {
  std::string src = "a / b; // c \\\n d\n\"/*x*/\" '/' /* e */ f";
  EXPECT_EQ(fixtures::code_skeleton(src), "a / b; //\n\"/*x*/\" '/' /**/ f");
  EXPECT_EQ(fixtures::comment_text(src), " c \\\n d e ");
}

TEST(HelpRecord, WrittenAsJson) {
  TempDir dir;
  HelpRecord r;
  r.timestamp = 1707696000;
  r.user_hash = "0123456789abcdef";
  r.phase = "runtime";
  r.file_name = "lab.c";
  r.source = "int main(void) {}\n";
  r.error_line = 3;
  r.compiler_message = "Runtime error: x";
  r.response = "Think about \xe2\x80\x94 it.";
  write_help_record(dir.path(), r);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir / "help")) files.push_back(e.path());
  ASSERT_EQ(files.size(), 1u);
  auto j = nlohmann::json::parse(fixtures::read_file(files[0]));
  EXPECT_EQ(j["user"], r.user_hash);
  EXPECT_EQ(j["error_line"], 3);
  EXPECT_EQ(j["response"], r.response);
}
