#include <atomic>
#include <csignal>
#include <iostream>

#include "ccoach/cli.hpp"
#include "ccoach/errors.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) {
  g_interrupted = true;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);

  ccoach::InvocationMode mode;
  try {
    mode = ccoach::parse_args(args);
  } catch (const ccoach::UsageError& e) {
    std::cerr << "ccoach: " << e.what() << "\n";
    return 2;
  }

  ccoach::ToolConfig config;
  try {
    config = ccoach::load_config();
  } catch (const ccoach::Error& e) {
    std::cerr << "ccoach: configuration: " << e.what() << "\n";
    return 2;
  }

  struct sigaction action {};
  action.sa_handler = on_interrupt;
  sigemptyset(&action.sa_mask);
  sigaction(SIGINT, &action, nullptr);
  sigaction(SIGQUIT, &action, nullptr);
  std::signal(SIGPIPE, SIG_IGN);

  auto env = ccoach::Environment::system(std::cout, std::cerr);
  env.cancelled = &g_interrupted;
  int status = 0;
  try {
    status = ccoach::run(mode, config, env);
  } catch (const ccoach::StreamInterrupted& e) {
    std::cerr << "ccoach: " << e.what() << "\n";
    return 1;
  } catch (const ccoach::UsageError& e) {
    std::cerr << "ccoach: " << e.what() << "\n";
    return 2;
  } catch (const ccoach::Error& e) {
    std::cerr << "ccoach: " << e.what() << "\n";
    return 1;
  }
  std::cout.flush();
  std::cerr.flush();
  if (env.child_signal) {
    std::signal(env.child_signal, SIG_DFL);
    std::signal(SIGPIPE, SIG_DFL);
    std::raise(env.child_signal);
  }
  return status;
}
