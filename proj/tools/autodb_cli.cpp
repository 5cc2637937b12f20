#include <CLI11.hpp>
#include <json.hpp>

#include <unistd.h>

#include <fstream>
#include <iostream>
#include <optional>

#include "autodb/client/client.hpp"
#include "autodb/error.hpp"

using namespace autodb::client;

namespace {

int repl(const std::string& host, std::uint16_t port) {
  const bool interactive = ::isatty(STDIN_FILENO);
  std::optional<ClientSession> session;
  std::string line;
  while (true) {
    if (interactive) std::cout << "autodb> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (line == "\\q") break;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      if (!session || !session->is_open()) session = ClientSession::connect(host, port);
      std::cout << render_response(session->execute(line));
    } catch (const autodb::DbError& e) {
      std::cout << "connection error: " << e.what() << "\n";
      session.reset();
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autodb client"};
  std::string host = "127.0.0.1";
  std::uint16_t port = 5433;
  std::string script;
  bool keep_going = false;
  bool loadgen = false;
  bool json = false;
  LoadScenario scenario;
  app.add_option("--host", host, "server address");
  app.add_option("-p,--port", port, "server port");
  app.add_option("--script", script, "file of newline-separated statements")->check(CLI::ExistingFile);
  app.add_flag("--keep-going", keep_going, "continue a script after an error");
  app.add_flag("--loadgen", loadgen, "run the course-selection load generator");
  app.add_option("--capacity", scenario.capacity, "course capacity")->check(CLI::NonNegativeNumber);
  app.add_option("--clients", scenario.clients, "concurrent sessions")->check(CLI::PositiveNumber);
  app.add_option("--seed", scenario.seed, "seed for client order and jitter");
  app.add_option("--course", scenario.course_id, "course id to use");
  app.add_flag("--json", json, "print the load report as JSON");
  CLI11_PARSE(app, argc, argv);

  try {
    if (loadgen) {
      LoadReport r = run_loadgen(host, port, scenario);
      if (json) {
        nlohmann::json j = {{"attempts", r.attempts},
                            {"successes", r.successes},
                            {"constraint_rejections", r.constraint_rejections},
                            {"errors", r.errors},
                            {"elapsed_seconds", r.elapsed.count()},
                            {"throughput", r.throughput},
                            {"final_capacity", r.final_capacity},
                            {"enrollment_count", r.enrollment_count}};
        std::cout << j.dump() << "\n";
      } else {
        std::cout << format_report(r) << "\n";
      }
      return r.errors == 0 ? 0 : 1;
    }
    if (!script.empty()) {
      std::ifstream in(script);
      auto session = ClientSession::connect(host, port);
      ScriptResult r = run_script(session, in, std::cout, keep_going);
      if (r.stopped_at_line) std::cerr << "stopped at line " << *r.stopped_at_line << "\n";
      return r.failed == 0 ? 0 : 1;
    }
  } catch (const autodb::DbError& e) {
    std::cerr << "autodb: " << e.what() << "\n";
    return 1;
  }
  return repl(host, port);
}
