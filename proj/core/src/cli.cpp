#include "ccoach/cli.hpp"

#include <fcntl.h>
#include <pwd.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "ccoach/code_filter.hpp"
#include "ccoach/compile.hpp"
#include "ccoach/errors.hpp"
#include "ccoach/eval.hpp"
#include "ccoach/explain.hpp"
#include "ccoach/guardrails.hpp"
#include "ccoach/stats.hpp"
#include "ccoach/supervisor.hpp"
#include "ccoach/telemetry.hpp"

namespace ccoach {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string require_value(const std::vector<std::string>& argv, std::size_t& i) {
  if (i + 1 >= argv.size()) throw UsageError(argv[i] + " needs a value");
  return argv[++i];
}

int parse_int(const std::string& flag, const std::string& text) {
  try {
    std::size_t used = 0;
    int value = std::stoi(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw UsageError(flag + " expects an integer, got '" + text + "'");
}

std::uint64_t parse_u64(const std::string& flag, const std::string& text) {
  try {
    std::size_t used = 0;
    auto value = std::stoull(text, &used);
    if (used == text.size() && !text.starts_with("-")) return value;
  } catch (const std::exception&) {
  }
  throw UsageError(flag + " expects a non-negative integer, got '" + text + "'");
}

double parse_double(const std::string& flag, const std::string& text) {
  try {
    std::size_t used = 0;
    double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw UsageError(flag + " expects a number, got '" + text + "'");
}

bool is_compiler_flag_with_value(std::string_view arg) {
  return arg == "-I" || arg == "-L" || arg == "-D" || arg == "-U" || arg == "-l" || arg == "-include" ||
         arg == "-isystem" || arg == "-x";
}

CompileMode parse_compile(const std::vector<std::string>& argv) {
  CompileMode mode;
  for (std::size_t i = 1; i < argv.size(); ++i) {
    const std::string& arg = argv[i];
    if (arg == "--") {
      mode.passthrough.insert(mode.passthrough.end(), argv.begin() + static_cast<std::ptrdiff_t>(i) + 1, argv.end());
      break;
    }
    if (arg == "-o") {
      mode.output = require_value(argv, i);
    } else if (arg.starts_with("-o") && arg.size() > 2) {
      mode.output = arg.substr(2);
    } else if (arg.starts_with("--")) {
      throw UsageError("unknown option '" + arg + "' (see ccoach --usage)");
    } else if (arg.starts_with("-") && arg.size() > 1) {
      mode.passthrough.push_back(arg);
      if (is_compiler_flag_with_value(arg)) mode.passthrough.push_back(require_value(argv, i));
    } else if (fs::path(arg).extension() == ".c") {
      mode.sources.emplace_back(arg);
    } else {
      throw UsageError("'" + arg + "' is not a C source file (expected a .c file)");
    }
  }
  if (mode.sources.empty()) throw UsageError("no C source files given (see ccoach --usage)");
  return mode;
}

void log_event(const ToolConfig& config, Environment& env, EventKind kind, std::int64_t source_bytes);

std::string resolve_salt(const ToolConfig& config) {
  if (!config.telemetry_salt.empty()) return config.telemetry_salt;
  fs::path salt_file = config.log_directory / ".salt";
  std::ifstream in(salt_file);
  std::string salt;
  if (in && std::getline(in, salt) && !salt.empty()) return salt;
  std::error_code ec;
  fs::create_directories(config.log_directory, ec);
  std::random_device rd;
  std::ostringstream fresh;
  for (int i = 0; i < 4; ++i) fresh << std::hex << rd();
  int fd = ::open(salt_file.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0600);
  if (fd >= 0) {
    std::string line = fresh.str() + "\n";
    [[maybe_unused]] auto n = ::write(fd, line.data(), line.size());
    ::close(fd);
    return fresh.str();
  }
  std::ifstream again(salt_file);
  if (again && std::getline(again, salt) && !salt.empty()) return salt;
  return fresh.str();
}

void log_event(const ToolConfig& config, Environment& env, EventKind kind, std::int64_t source_bytes) {
  if (config.log_directory.empty()) return;
  try {
    UsageEvent event;
    event.timestamp = env.clock();
    event.kind = kind;
    event.user_hash = hash_user(resolve_salt(config), env.user_name);
    event.source_bytes = source_bytes;
    event.week = iso_week_label(event.timestamp);
    EventLog(config.log_directory).append_quietly(event, [&](const std::string& w) {
      *env.err << kProgramName << ": warning: " << w << "\n";
    });
  } catch (const std::exception& e) {
    *env.err << kProgramName << ": warning: usage log: " << e.what() << "\n";
  }
}

std::int64_t total_bytes(const std::vector<SourceFile>& sources) {
  std::int64_t n = 0;
  for (const auto& s : sources) n += static_cast<std::int64_t>(s.text.size());
  return n;
}

RuleTable load_rules(const ToolConfig& config) {
  if (config.rules_file.empty()) return default_rules();
  return parse_rules(read_text(config.rules_file));
}

void attach_enhanced_message(ErrorContext& ctx, const ToolConfig& config, Environment& env) {
  RuleTable rules = load_rules(config);
  if (const ExplainRule* rule = match_rules(ctx, rules.rules)) {
    try {
      ctx.enhanced_message = render_enhanced_message(*rule, ctx);
    } catch (const TemplateError& e) {
      *env.err << kProgramName << ": warning: " << e.what() << "\n";
    }
  }
}

void save_quietly(const ErrorContext& ctx, const fs::path& dir, const ToolConfig& config, Environment& env) {
  try {
    save_context(ctx, dir, config.state_directory);
  } catch (const std::exception& e) {
    *env.err << kProgramName << ": warning: could not save error details for --help: " << e.what() << "\n";
  }
}

int run_compile(const CompileMode& mode, const ToolConfig& config, Environment& env) {
  CompileOutcome outcome = invoke_compiler(mode.sources, mode.output, mode.passthrough, config);
  *env.out << outcome.compiler_stdout;
  env.out->flush();
  *env.err << outcome.compiler_stderr;

  std::vector<SourceFile> sources;
  for (const auto& path : mode.sources) sources.push_back({path.string(), read_text(path)});

  if (outcome.exit_status == 0 && outcome.output_binary && produces_executable(mode.passthrough)) {
    try {
      instrument_build(*outcome.output_binary, mode.sources, env.self_executable);
    } catch (const Error& e) {
      *env.err << kProgramName << ": warning: run-time checking unavailable: " << e.what() << "\n";
    }
  }

  auto primary = select_primary_diagnostic(outcome.diagnostics);
  if (primary) {
    ErrorContext ctx;
    ctx.phase = Phase::CompileTime;
    ctx.timestamp = env.clock();
    ctx.sources = sources;
    ctx.diagnostics = outcome.diagnostics;
    ctx.primary_diagnostic = primary;
    std::vector<std::string> names;
    for (const auto& s : sources) names.push_back(s.path);
    ctx.error_file = match_source(primary->file, names).value_or(primary->file);
    const SourceFile* source = ctx.find_source(ctx.error_file);
    ctx.error_line = source ? effective_error_line(*primary, source->text) : primary->line;
    attach_enhanced_message(ctx, config, env);
    if (ctx.enhanced_message) *env.err << "\n" << *ctx.enhanced_message;
    *env.err << "\n" << kHelpHint << "\n";
    fs::path out_dir = fs::absolute(mode.output).parent_path();
    save_quietly(ctx, out_dir, config, env);
  }
  env.err->flush();
  log_event(config, env, outcome.exit_status == 0 ? EventKind::CompileOk : EventKind::CompileError,
            total_bytes(sources));
  return outcome.exit_status;
}

void write_help_log(const ErrorContext& ctx, const std::string& response, const ToolConfig& config,
                    Environment& env) {
  if (config.log_directory.empty()) return;
  try {
    AnonymizeOptions options;
    options.student_id_pattern = config.student_id_pattern;
    options.known_identifiers = env.known_identifiers;
    const SourceFile* source = ctx.find_source(ctx.error_file);
    if (!source) source = &ctx.sources.front();
    AnonymizedSource clean = anonymize(source->text, fs::path(source->path).filename().string(), options);
    HelpRecord record;
    record.timestamp = env.clock();
    record.user_hash = hash_user(resolve_salt(config), env.user_name);
    record.phase = ctx.phase == Phase::CompileTime ? "compile" : "runtime";
    record.file_name = clean.file_name;
    record.source = clean.text;
    record.error_line = ctx.error_line;
    std::string message = ctx.enhanced_message.value_or(
        ctx.primary_diagnostic ? ctx.primary_diagnostic->raw_text
                               : (ctx.runtime_report ? ctx.runtime_report->raw_report : std::string()));
    record.compiler_message = scrub_text(message, options, false);
    record.response = response;
    write_help_record(config.log_directory, record);
  } catch (const std::exception& e) {
    *env.err << kProgramName << ": warning: help log: " << e.what() << "\n";
  }
}

int run_help(const ToolConfig& config, Environment& env) {
  auto warn = [&](const std::string& w) { *env.err << kProgramName << ": warning: " << w << "\n"; };
  auto ctx = load_last_context(env.cwd, config.state_directory, env.clock,
                               static_cast<std::int64_t>(config.context_expiry_hours) * 3600, warn);
  if (!ctx) throw NoPriorError();

  fs::path state_file = config.state_directory.empty() ? fs::path() : config.state_directory / "guardrail";
  GuardrailState state = state_file.empty() ? GuardrailState{} : load_guardrail_state(state_file);
  GuardrailDecision decision = check_guardrails(state, env.clock(), config);
  if (const auto* refuse = std::get_if<Refuse>(&decision)) {
    *env.err << refuse->text << "\n";
    log_event(config, env, EventKind::HelpRefused, total_bytes(ctx->sources));
    return 1;
  }
  if (!state_file.empty()) {
    try {
      save_guardrail_state(state, state_file);
    } catch (const Error& e) {
      warn(e.what());
    }
  }
  if (const auto* w = std::get_if<ProceedWithWarning>(&decision)) *env.err << w->text << "\n\n";

  PromptBundle bundle = build_prompt(*ctx, config.token_budget);
  StreamOptions options;
  options.sleep = env.sleep;
  if (!config.api_base_url.starts_with("mock:")) {
    options.api_key = env.get_env ? env.get_env(config.api_key_env_var) : std::string();
    if (options.api_key.empty()) {
      throw AuthError("no API key: set the " + config.api_key_env_var + " environment variable");
    }
  }
  auto transport = env.make_transport ? env.make_transport(config) : make_transport(config, env.cancelled);

  CodeBlockFilter filter;
  ChunkSink sink = [&](std::string_view chunk) {
    if (chunk == kDisclaimer) {
      *env.out << chunk;
    } else if (config.strip_code_blocks) {
      *env.out << filter.feed(chunk);
    } else {
      *env.out << chunk;
    }
    env.out->flush();
  };
  std::string response;
  try {
    response = stream_completion(bundle, config, sink, *transport, options);
  } catch (const StreamInterrupted&) {
    if (config.strip_code_blocks) *env.out << filter.finish();
    *env.out << "\n";
    env.out->flush();
    throw;
  }
  if (config.strip_code_blocks) *env.out << filter.finish();
  if (!response.empty() && response.back() != '\n') *env.out << "\n";
  env.out->flush();

  log_event(config, env, ctx->phase == Phase::CompileTime ? EventKind::HelpCompile : EventKind::HelpRuntime,
            total_bytes(ctx->sources));
  write_help_log(*ctx, config.strip_code_blocks ? strip_code_blocks(response) : response, config, env);
  return 0;
}

int run_supervise(const SuperviseMode& mode, const ToolConfig& config, Environment& env) {
  SuperviseRequest request{mode.real_binary, mode.snapshot, mode.args};
  SuperviseHooks hooks;
  hooks.forward_stderr = [&](std::string_view text) {
    *env.err << text;
    env.err->flush();
  };
  SuperviseResult result = supervise_run(request, config, hooks, env.clock);
  if (result.report) {
    if (result.context) {
      attach_enhanced_message(*result.context, config, env);
      if (result.context->enhanced_message) {
        *env.err << "\n" << *result.context->enhanced_message;
      } else if (!config.show_sanitizer_report) {
        *env.err << result.report->raw_report;
      }
      *env.err << "\n" << kHelpHint << "\n";
      save_quietly(*result.context, fs::absolute(mode.real_binary).parent_path(), config, env);
      log_event(config, env, EventKind::RuntimeError, total_bytes(result.context->sources));
    } else if (!config.show_sanitizer_report) {
      *env.err << result.report->raw_report;
    }
    env.err->flush();
  }
  env.child_signal = result.term_signal;
  return result.exit_status;
}

int run_stats(const StatsMode& mode, const ToolConfig& config, Environment& env) {
  if (mode.from) parse_date_utc(*mode.from);
  if (mode.to) parse_date_utc(*mode.to);
  auto events = EventLog(config.log_directory).read_all(mode.from.value_or(""), mode.to.value_or(""));
  StatsOptions options;
  options.timezone = config.timezone;
  if (mode.term_start) {
    options.term_start = parse_date_utc(*mode.term_start);
  } else if (mode.from) {
    options.term_start = parse_date_utc(*mode.from);
  } else if (!events.empty()) {
    options.term_start = events.front().timestamp - events.front().timestamp % 86400;
  }
  UsageSummary summary = aggregate_stats(events, options);
  *env.out << (mode.csv ? format_weekly_csv(summary) : format_summary_table(summary));
  return 0;
}

int run_eval(const EvalMode& mode, Environment& env) {
  auto records = parse_rubric_csv(read_text(mode.input));
  *env.out << frequency_table(records) << "\n" << format_reliability(build_reliability_report(records));
  return 0;
}

int run_assign(const AssignMode& mode, Environment& env) {
  std::vector<std::string> pairs;
  std::istringstream in(read_text(mode.pairs));
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line.front() != '#') pairs.push_back(line);
  }
  if (mode.reviewers < 1) throw UsageError("--reviewers must be at least 1");
  std::vector<std::string> reviewers;
  for (int r = 1; r <= mode.reviewers; ++r) reviewers.push_back("R" + std::to_string(r));
  *env.out << format_assignment_csv(assign_reviews(pairs, reviewers, mode.per_reviewer, mode.overlap, mode.seed));
  return 0;
}

}  // namespace

InvocationMode parse_args(const std::vector<std::string>& argv) {
  if (argv.size() < 2) throw UsageError("nothing to do (see ccoach --usage)");
  const std::string& first = argv[1];
  auto no_more = [&](std::size_t from) {
    if (argv.size() > from) throw UsageError(first + " takes no further arguments");
  };
  if (first == "--help") {
    no_more(2);
    return HelpMode{};
  }
  if (first == "--usage") {
    no_more(2);
    return UsageMode{};
  }
  if (first == "--version") {
    no_more(2);
    return VersionMode{};
  }
  if (first == "--stats") {
    StatsMode mode;
    for (std::size_t i = 2; i < argv.size(); ++i) {
      if (argv[i] == "--from") {
        mode.from = require_value(argv, i);
      } else if (argv[i] == "--to") {
        mode.to = require_value(argv, i);
      } else if (argv[i] == "--term-start") {
        mode.term_start = require_value(argv, i);
      } else if (argv[i] == "--csv") {
        mode.csv = true;
      } else {
        throw UsageError("unknown --stats option '" + argv[i] + "'");
      }
    }
    return mode;
  }
  if (first == "--eval") {
    EvalMode mode;
    for (std::size_t i = 2; i < argv.size(); ++i) {
      if (argv[i] == "--seed") {
        mode.seed = parse_u64("--seed", require_value(argv, i));
      } else if (!argv[i].starts_with("--") && mode.input.empty()) {
        mode.input = argv[i];
      } else {
        throw UsageError("unexpected --eval argument '" + argv[i] + "'");
      }
    }
    if (mode.input.empty()) throw UsageError("--eval needs a CSV file");
    return mode;
  }
  if (first == "--assign") {
    AssignMode mode;
    for (std::size_t i = 2; i < argv.size(); ++i) {
      const std::string& a = argv[i];
      if (a == "--reviewers") {
        mode.reviewers = parse_int(a, require_value(argv, i));
      } else if (a == "--per") {
        mode.per_reviewer = parse_int(a, require_value(argv, i));
      } else if (a == "--overlap") {
        mode.overlap = parse_double(a, require_value(argv, i));
      } else if (a == "--seed") {
        mode.seed = parse_u64(a, require_value(argv, i));
      } else if (!a.starts_with("--") && mode.pairs.empty()) {
        mode.pairs = a;
      } else {
        throw UsageError("unexpected --assign argument '" + a + "'");
      }
    }
    if (mode.pairs.empty()) throw UsageError("--assign needs a file of pair ids");
    return mode;
  }
  if (first == "--supervise") {
    SuperviseMode mode;
    std::size_t i = 2;
    for (; i < argv.size(); ++i) {
      if (argv[i] == "--real") {
        mode.real_binary = require_value(argv, i);
      } else if (argv[i] == "--snapshot") {
        mode.snapshot = require_value(argv, i);
      } else if (argv[i] == "--") {
        ++i;
        break;
      } else {
        throw UsageError("unexpected --supervise argument '" + argv[i] + "'");
      }
    }
    mode.args.assign(argv.begin() + static_cast<std::ptrdiff_t>(std::min(i, argv.size())), argv.end());
    if (mode.real_binary.empty()) throw UsageError("--supervise needs --real");
    return mode;
  }
  return parse_compile(argv);
}

std::string usage_text() {
  return R"(usage:
  ccoach <file.c>... [-o output] [compiler flags] [-- compiler flags]
                       compile with extra checks; explains errors
  ccoach --help        AI explanation of the most recent error
  ccoach --stats [--from YYYY-MM-DD] [--to YYYY-MM-DD] [--term-start YYYY-MM-DD] [--csv]
                       usage summary from the telemetry log
  ccoach --eval <records.csv> [--seed N]
                       rubric frequency table and Light's kappa
  ccoach --assign <pairs.txt> [--reviewers N] [--per N] [--overlap F] [--seed N]
                       reviewer assignment CSV
  ccoach --usage       this text
  ccoach --version

configuration: $CCOACH_CONFIG or ~/.ccoach.conf (key = value lines)
)";
}

Environment Environment::system(std::ostream& out, std::ostream& err) {
  Environment env;
  env.out = &out;
  env.err = &err;
  std::error_code ec;
  env.cwd = fs::current_path(ec);
  env.self_executable = fs::read_symlink("/proc/self/exe", ec);
  if (const char* user = std::getenv("USER"); user && *user) env.user_name = user;
  if (passwd* pw = ::getpwuid(::getuid())) {
    if (env.user_name.empty() && pw->pw_name) env.user_name = pw->pw_name;
    if (pw->pw_name) env.known_identifiers.emplace_back(pw->pw_name);
    if (pw->pw_gecos && *pw->pw_gecos) {
      std::string full(pw->pw_gecos);
      full = full.substr(0, full.find(','));
      if (!full.empty()) env.known_identifiers.push_back(full);
      std::istringstream words(full);
      std::string word;
      while (words >> word) {
        if (word.size() > 2) env.known_identifiers.push_back(word);
      }
    }
  }
  if (!env.user_name.empty()) env.known_identifiers.push_back(env.user_name);
  env.get_env = [](const std::string& name) {
    const char* value = std::getenv(name.c_str());
    return value ? std::string(value) : std::string();
  };
  return env;
}

int run(const InvocationMode& mode, const ToolConfig& config, Environment& env) {
  validate(config);
  bool logs_events = std::holds_alternative<CompileMode>(mode) || std::holds_alternative<HelpMode>(mode) ||
                     std::holds_alternative<SuperviseMode>(mode);
  try {
    return std::visit(
        [&](const auto& m) -> int {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, CompileMode>) {
            return run_compile(m, config, env);
          } else if constexpr (std::is_same_v<T, HelpMode>) {
            return run_help(config, env);
          } else if constexpr (std::is_same_v<T, SuperviseMode>) {
            return run_supervise(m, config, env);
          } else if constexpr (std::is_same_v<T, StatsMode>) {
            return run_stats(m, config, env);
          } else if constexpr (std::is_same_v<T, EvalMode>) {
            return run_eval(m, env);
          } else if constexpr (std::is_same_v<T, AssignMode>) {
            return run_assign(m, env);
          } else if constexpr (std::is_same_v<T, VersionMode>) {
            *env.out << kProgramName << " " << kVersion << "\n";
            return 0;
          } else {
            *env.out << usage_text();
            return 0;
          }
        },
        mode);
  } catch (const Error&) {
    if (logs_events) log_event(config, env, EventKind::ToolError, 0);
    throw;
  }
}

}  // namespace ccoach
