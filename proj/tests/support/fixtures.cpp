#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ccoach/explain.hpp"

namespace fixtures {

using namespace ccoach;

fs::path source_dir() { return CCOACH_TEST_SOURCE_DIR; }
fs::path ccoach_binary() { return CCOACH_BINARY; }

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "ccoach-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = fs::canonical(tmpl);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& file, std::string_view text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("cannot write " + file.string());
}

std::string_view uninit_array_program() {
  return "int main(void) {\n"
         "    int numbers[10];\n"
         "    for (int i = 1; i < 10; i++) {\n"
         "        numbers[i] = i;\n"
         "    }\n"
         "    printf(\"%d\\n\", numbers[0]);\n"
         "}\n";
}

ErrorContext uninit_array_context() {
  ErrorContext ctx;
  ctx.phase = Phase::RunTime;
  ctx.timestamp = 1700000000;
  ctx.sources = {{"program.c", std::string(uninit_array_program())}};
  RuntimeReport report;
  report.cause = SanitizerCause{SanitizerKind::UseOfUninitialized, ""};
  report.error_file = "program.c";
  report.error_line = 6;
  report.function_name = "main";
  report.raw_report =
      "==4242== Conditional jump or move depends on uninitialised value(s)\n"
      "==4242==    at 0x48D1AD6: __vfprintf_internal (vfprintf-internal.c:1516)\n"
      "==4242==    by 0x48BB79E: printf (printf.c:33)\n"
      "==4242==    by 0x109190: main (program.c:6)\n";
  ctx.runtime_report = report;
  ctx.error_file = "program.c";
  ctx.error_line = 6;
  LocalsSnapshot locals;
  locals.frames.push_back({"main",
                           {{"numbers", "{<uninitialized value>,1,2,3,4,5,6,7,8,9}", true},
                            {"numbers[0]", "<uninitialized value>", true}}});
  ctx.locals = locals;
  ctx.binary_hash = "5f1d0c3a9e8b7d6c";
  const ExplainRule* rule = match_rules(ctx, default_rules().rules);
  if (!rule) throw std::logic_error("no rule matches the uninitialized-array context");
  ctx.enhanced_message = render_enhanced_message(*rule, ctx);
  return ctx;
}

fs::path uninit_array_golden_file() { return source_dir() / "golden" / "uninit_array_prompt.txt"; }

double oracle_cohen(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> labels;
  for (const auto* v : {&a, &b}) {
    for (const auto& x : *v) {
      if (std::find(labels.begin(), labels.end(), x) == labels.end()) labels.push_back(x);
    }
  }
  const std::size_t k = labels.size();
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  auto idx = [&](const std::string& s) {
    return static_cast<std::size_t>(std::find(labels.begin(), labels.end(), s) - labels.begin());
  };
  for (std::size_t i = 0; i < a.size(); ++i) m[idx(a[i])][idx(b[i])] += 1.0;
  const double n = static_cast<double>(a.size());
  double po = 0.0, pe = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    po += m[i][i] / n;
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row += m[i][j];
      col += m[j][i];
    }
    pe += (row / n) * (col / n);
  }
  if (pe >= 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

double oracle_lights_kappa(const std::vector<RubricRecord>& records, Category category) {
  std::map<std::string, std::map<std::string, std::string>> by_reviewer;
  for (const auto& r : records) by_reviewer[r.reviewer_id][r.pair_id] = label_of(r, category);
  std::vector<std::string> reviewers;
  for (const auto& [id, _] : by_reviewer) reviewers.push_back(id);
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < reviewers.size(); ++i) {
    for (std::size_t j = i + 1; j < reviewers.size(); ++j) {
      std::vector<std::string> a, b;
      for (const auto& [item, label] : by_reviewer[reviewers[i]]) {
        auto other = by_reviewer[reviewers[j]].find(item);
        if (other == by_reviewer[reviewers[j]].end()) continue;
        a.push_back(label);
        b.push_back(other->second);
      }
      if (a.empty()) continue;
      sum += oracle_cohen(a, b);
      ++pairs;
    }
  }
  if (pairs == 0) throw std::runtime_error("oracle: no overlap");
  return sum / pairs;
}

std::vector<RubricRecord> random_review_set(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> reviewers_dist(2, 5);
  std::uniform_int_distribution<int> items_dist(3, 12);
  std::bernoulli_distribution rates(0.7);
  std::bernoulli_distribution skew(0.5);
  const int reviewers = reviewers_dist(rng);
  const int items = items_dist(rng);
  // Per-set bias so that some sets are lopsided and some balanced.
  std::uniform_real_distribution<double> bias_dist(0.05, 0.95);
  const double bias = bias_dist(rng);
  std::vector<RubricRecord> out;
  for (int item = 0; item < items; ++item) {
    std::vector<int> raters;
    for (int r = 0; r < reviewers; ++r) {
      if (rates(rng)) raters.push_back(r);
    }
    // Every item gets at least two raters so some pair always overlaps.
    while (raters.size() < 2) {
      int r = std::uniform_int_distribution<int>(0, reviewers - 1)(rng);
      if (std::find(raters.begin(), raters.end(), r) == raters.end()) raters.push_back(r);
    }
    for (int r : raters) {
      std::bernoulli_distribution yes(bias);
      RubricRecord rec;
      rec.pair_id = "p" + std::to_string(item);
      rec.reviewer_id = "r" + std::to_string(r);
      rec.phase = skew(rng) ? Phase::CompileTime : Phase::RunTime;
      rec.conceptual_accuracy = yes(rng);
      rec.no_inaccuracy = yes(rng);
      rec.correctness = yes(rng);
      rec.relevance = yes(rng);
      rec.completeness = yes(rng);
      rec.code_solution_present = yes(rng);
      rec.response_type = yes(rng) ? ResponseType::Tutor : ResponseType::Peer;
      out.push_back(rec);
    }
  }
  return out;
}

std::vector<RubricRecord> rubric_reference_records() {
  // Two reviewers rate the same 100 compile-time and 100 run-time pairs.
  std::vector<RubricRecord> out;
  for (int reviewer = 0; reviewer < 2; ++reviewer) {
    for (int i = 0; i < 100; ++i) {
      for (Phase phase : {Phase::CompileTime, Phase::RunTime}) {
        RubricRecord r;
        r.pair_id = (phase == Phase::CompileTime ? "ct" : "rt") + std::to_string(i);
        r.reviewer_id = reviewer == 0 ? "alice" : "bob";
        r.phase = phase;
        // Reviewers disagree on a couple of items so kappa is not trivially 1.
        int yes_items = phase == Phase::CompileTime ? 90 : 75;
        int shift = reviewer == 0 ? 0 : 2;
        r.conceptual_accuracy = ((i + shift) % 100) < yes_items;
        r.no_inaccuracy = i % 3 != 0;
        r.correctness = i % 4 != 0;
        r.relevance = true;
        r.completeness = i % 5 != 0;
        r.code_solution_present = i % 10 == 0;
        r.response_type = i % 2 ? ResponseType::Tutor : ResponseType::Peer;
        out.push_back(r);
      }
    }
  }
  return out;
}

WeeklySeries usage_series() {
  WeeklySeries s;
  s.term_start = 1707696000;  // 2024-02-12 00:00 UTC, a Monday
  const std::vector<std::int64_t> totals = {1032, 2500, 4000, 5200, 6100, 6700, 7000, 7200, 7300, 7387, 9700};
  // Compile/run split per week, scaled so the overall split is 49,866 / 14,253.
  const std::int64_t grand = 64119;
  const std::int64_t compile_total = 49866;
  std::int64_t assigned = 0;
  std::int64_t running = 0;
  for (std::size_t w = 0; w < totals.size(); ++w) {
    running += totals[w];
    std::int64_t target = (running * compile_total + grand / 2) / grand;
    if (w + 1 == totals.size()) target = compile_total;
    s.compile.push_back(target - assigned);
    s.runtime.push_back(totals[w] - (target - assigned));
    assigned = target;
    s.users.push_back(40 + static_cast<std::int64_t>(w) * 10);
  }
  return s;
}

std::vector<UsageEvent> usage_events(const WeeklySeries& s) {
  std::vector<UsageEvent> out;
  constexpr std::int64_t kWeek = 7 * 24 * 3600;
  for (std::size_t w = 0; w < s.compile.size(); ++w) {
    const std::int64_t n = s.total(w);
    for (std::int64_t i = 0; i < n; ++i) {
      UsageEvent e;
      e.timestamp = s.term_start + static_cast<std::int64_t>(w) * kWeek + i * (kWeek - 1) / n;
      e.kind = i < s.compile[w] ? EventKind::HelpCompile : EventKind::HelpRuntime;
      char hash[17];
      std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(i % s.users[w]));
      e.user_hash = hash;
      e.source_bytes = 100 + i % 900;
      e.week = iso_week_label(e.timestamp);
      out.push_back(std::move(e));
    }
    // Non-help traffic must not count toward help totals.
    UsageEvent compile_ok;
    compile_ok.timestamp = s.term_start + static_cast<std::int64_t>(w) * kWeek + 60;
    compile_ok.kind = EventKind::CompileOk;
    compile_ok.user_hash = "ffffffffffffffff";
    compile_ok.week = iso_week_label(compile_ok.timestamp);
    out.push_back(compile_ok);
  }
  return out;
}

std::vector<UsageEvent> night_day_events(std::int64_t term_start, int per_half) {
  std::vector<UsageEvent> out;
  for (int i = 0; i < per_half; ++i) {
    for (int hour : {22, 12}) {
      UsageEvent e;
      e.timestamp = term_start + static_cast<std::int64_t>(i % 70) * 86400 + hour * 3600;
      e.kind = i % 3 ? EventKind::HelpCompile : EventKind::HelpRuntime;
      e.user_hash = "00000000000000" + std::string(i % 2 ? "0a" : "0b");
      e.week = iso_week_label(e.timestamp);
      out.push_back(e);
    }
  }
  return out;
}

namespace {

const std::vector<std::pair<std::string, std::string>> kNames = {
    {"Priya", "Raman"},   {"Tomasz", "Kowalczyk"}, {"Mei", "Lindqvist"}, {"Oluwaseun", "Adeyemi"},
    {"Hamish", "Fairweather"}, {"Ximena", "Quispe"}, {"Dmitri", "Volkonsky"}, {"Aroha", "Tipene"},
    {"Siddharth", "Bhattacharya"}, {"Ines", "Carvalho"},
};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

PlantedCorpus planted_corpus(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PlantedCorpus corpus;
  for (const auto& [first, last] : kNames) {
    corpus.options.known_identifiers.push_back(first + " " + last);
    corpus.options.known_identifiers.push_back(first);
    corpus.options.known_identifiers.push_back(last);
    corpus.options.known_identifiers.push_back(lower(first.substr(0, 1) + last));
  }
  std::uniform_int_distribution<int> digits(0, 9999999);
  std::uniform_int_distribution<std::size_t> pick(0, kNames.size() - 1);
  std::uniform_int_distribution<int> variant(0, 3);

  for (std::size_t n = 0; n < count; ++n) {
    const auto& [first, last] = kNames[pick(rng)];
    const auto& [first2, last2] = kNames[pick(rng)];
    char id_buf[16];
    std::snprintf(id_buf, sizeof id_buf, "z%07d", digits(rng));
    char id2_buf[16];
    std::snprintf(id2_buf, sizeof id2_buf, "z%07d", digits(rng));
    const std::string id = id_buf;
    const std::string id2 = id2_buf;
    const std::string email = lower(first) + "." + lower(last) + "@student.example.edu";
    const std::string login = lower(first.substr(0, 1) + last);

    PlantedFile f;
    f.planted = {first, last, first2, last2, id, id2, email, login};
    f.file_name = (variant(rng) % 2 ? id : login) + "_lab" + std::to_string(n % 10) + ".c";

    std::ostringstream src;
    switch (variant(rng)) {
      case 0:
        src << "// Author: " << first << " " << last << " (" << id << ")\n"
            << "// Email: " << email << "\n";
        break;
      case 1:
        src << "/*\n * Name: " << first << " " << last << "\n * zID: " << id << "\n * Contact " << email
            << "\n */\n";
        break;
      case 2:
        src << "/* Written by " << first << " " << last << ", " << id << " */\n";
        break;
      default:
        src << "//   author -  " << first << " " << last << "\n// " << login << " / " << id << " / " << email
            << "\n";
        break;
    }
    src << "#include <stdio.h>\n"
           "#include <string.h>\n\n"
           "#define LIMIT 10 // upper bound, agreed with "
        << first2 << "\n\n"
           "int ratio(int a, int b) {\n"
           "    return a / b; /* plain division, not a comment: a / b */\n"
           "}\n\n"
           "int main(void) {\n"
           "    const char *url = \"http://example.com/a//b\"; // two slashes in a string\n"
           "    const char *fake = \"/* not a comment */\";\n"
           "    char quote = '\"';\n"
           "    char slash = '/';\n"
           "    int count = 0; /* helped by "
        << first2 << " " << last2 << " (" << id2 << ") */\n"
           "    // tested on the lab machines by "
        << login
        << " \\\n"
           "       and this line continues the comment "
        << id
        << "\n"
           "    for (int i = 0; i < LIMIT; i++) {\n"
           "        count += ratio(i * 2, 1);\n"
           "    }\n"
           "    printf(\"%s %s %c %c %d\\n\", url, fake, quote, slash, count);\n"
           "    return strlen(url) > 3 ? 0 : 1; /* last comment mentions "
        << email << " */\n"
           "}\n";
    f.text = src.str();
    corpus.files.push_back(std::move(f));
  }
  return corpus;
}

namespace {

enum class Lex { Code, Line, Block, Str, Chr };

// Walks `source`, calling keep(c, in_comment) for every byte.
template <typename F>
void lex(std::string_view s, F&& emit) {
  Lex st = Lex::Code;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    char nx = i + 1 < s.size() ? s[i + 1] : '\0';
    switch (st) {
      case Lex::Code:
        if (c == '/' && nx == '/') {
          emit("//", false);
          ++i;
          st = Lex::Line;
        } else if (c == '/' && nx == '*') {
          emit("/*", false);
          ++i;
          st = Lex::Block;
        } else {
          emit(std::string(1, c), false);
          if (c == '"') st = Lex::Str;
          if (c == '\'') st = Lex::Chr;
        }
        break;
      case Lex::Line:
        if (c == '\\' && nx == '\n') {
          emit(std::string("\\\n"), true);
          ++i;
        } else if (c == '\n') {
          emit("\n", false);
          st = Lex::Code;
        } else {
          emit(std::string(1, c), true);
        }
        break;
      case Lex::Block:
        if (c == '*' && nx == '/') {
          emit("*/", false);
          ++i;
          st = Lex::Code;
        } else {
          emit(std::string(1, c), true);
        }
        break;
      case Lex::Str:
      case Lex::Chr:
        emit(std::string(1, c), false);
        if (c == '\\' && i + 1 < s.size()) {
          emit(std::string(1, nx), false);
          ++i;
        } else if ((st == Lex::Str && c == '"') || (st == Lex::Chr && c == '\'') || c == '\n') {
          st = Lex::Code;
        }
        break;
    }
  }
}

}  // namespace

std::string code_skeleton(std::string_view source) {
  std::string out;
  lex(source, [&](const std::string& piece, bool in_comment) {
    if (!in_comment) out += piece;
  });
  return out;
}

std::string comment_text(std::string_view source) {
  std::string out;
  lex(source, [&](const std::string& piece, bool in_comment) {
    if (in_comment) out += piece;
  });
  return out;
}

std::vector<CorpusCase> load_manifest() {
  std::istringstream in(read_file(source_dir() / "corpus" / "manifest.tsv"));
  std::vector<CorpusCase> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    CorpusCase c;
    std::string line_no;
    std::getline(fields, c.file, '\t');
    std::getline(fields, c.phase, '\t');
    std::getline(fields, line_no, '\t');
    std::getline(fields, c.rule, '\t');
    std::getline(fields, c.tier, '\t');
    c.line = std::stoi(line_no);
    out.push_back(c);
  }
  return out;
}

fs::path write_config(const fs::path& dir, const std::vector<std::string>& extra_lines) {
  std::string text;
  text += "log_directory = " + (dir / "logs").string() + "\n";
  text += "state_directory = " + (dir / "state").string() + "\n";
  text += "api_base_url = mock:" + (dir / "mock").string() + "\n";
  text += "telemetry_salt = test-salt\n";
  for (const auto& l : extra_lines) text += l + "\n";
  fs::path file = dir / "ccoach.conf";
  write_file(file, text);
  return file;
}

ProcessResult run_tool(const std::vector<std::string>& args, const fs::path& config_file, const fs::path& cwd,
                       std::optional<int> stdin_fd) {
  ProcessOptions opts;
  opts.argv.push_back(ccoach_binary().string());
  opts.argv.insert(opts.argv.end(), args.begin(), args.end());
  opts.env_overrides["CCOACH_CONFIG"] = config_file.string();
  opts.env_overrides["HOME"] = cwd.string();
  opts.working_directory = cwd;
  opts.stdin_mode = StdinMode::Null;
  opts.stdin_fd = stdin_fd;
  opts.timeout = std::chrono::seconds(120);
  return run_process(opts);
}

Detection detect_corpus_case(const CorpusCase& c, const fs::path& workdir) {
  Detection d;
  fs::create_directories(workdir);
  fs::copy_file(source_dir() / "corpus" / c.file, workdir / c.file, fs::copy_options::overwrite_existing);
  std::vector<std::string> extra;
  if (c.tier == "valgrind") extra.push_back("uninit_tier = valgrind");
  fs::path config = write_config(workdir, extra);

  ProcessResult build = run_tool({c.file, "-o", "prog"}, config, workdir);
  d.transcript = "$ ccoach " + c.file + " -o prog  [status " + std::to_string(build.shell_status()) + "]\n" +
                 build.out + build.err;
  if (fs::exists(workdir / "prog")) {
    ProcessOptions opts;
    opts.argv = {(workdir / "prog").string()};
    opts.env_overrides["CCOACH_CONFIG"] = config.string();
    opts.env_overrides["HOME"] = workdir.string();
    opts.working_directory = workdir;
    opts.stdin_mode = StdinMode::Null;
    opts.timeout = std::chrono::seconds(120);
    ProcessResult run = run_process(opts);
    d.transcript += "$ ./prog  [status " + std::to_string(run.shell_status()) + "]\n" + run.out + run.err;
  }

  ContextStore store(workspace_store_dir(workdir));
  std::optional<ErrorContext> ctx = store.load();
  if (!ctx) return d;
  d.found = true;
  d.phase = ctx->phase == Phase::CompileTime ? "compile" : "runtime";
  d.file = ctx->error_file;
  d.line = ctx->error_line.value_or(0);
  if (const ExplainRule* rule = match_rules(*ctx, default_rules().rules)) d.rule = rule->id;
  return d;
}

}  // namespace fixtures
