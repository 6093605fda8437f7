// pomdp_dm: interactive REPL, simulation runner, DWT tool and HTTP service.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "pomdp_dm/engine.hpp"
#include "pomdp_dm/service.hpp"
#include "pomdp_dm/sim.hpp"
#include "pomdp_dm/trend.hpp"

#ifndef POMDP_DM_ASSETS_DIR
#define POMDP_DM_ASSETS_DIR "assets"
#endif

namespace fs = std::filesystem;
using namespace pdm;

namespace {

std::vector<double> read_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string field = line.substr(0, line.find(','));
    if (field.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stod(field, &used));
    } catch (const std::logic_error&) {
      if (values.empty() && line_no == 1) continue;  // header
      throw ModelError(path + ":" + std::to_string(line_no) + ": not a number");
    }
  }
  return values;
}

int cmd_dwt(const std::string& input) {
  const auto signal = read_column(input);
  const auto r = analyze_trend(signal);
  nlohmann::ordered_json j;
  j["ncp"] = r.ncp;
  j["ncp_ratio"] = r.ncp_ratio;
  const auto level = classify_level(r.ncp_ratio);
  j["level"] = to_string(level);
  j["mode"] = to_string(select_mode(level));
  j["original_len"] = r.dwt.original_len;
  j["padded_len"] = r.dwt.padded_len;
  auto& levels = j["levels"] = nlohmann::ordered_json::array();
  for (const auto& l : r.dwt.levels) levels.push_back({{"approx", l.approx}, {"detail", l.detail}});
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_repl(const std::string& ontology, const std::string& model, const std::string& lexicon,
             const std::string& engine, std::uint64_t seed, const std::string& log_path, bool quiet) {
  auto assets = EngineAssets::load(ontology, model, lexicon);
  Session session(assets, EngineConfig::load(engine), seed);
  std::ofstream log;
  ReplOptions opt;
  opt.diagnostics = !quiet;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw ModelError("cannot write " + log_path);
    opt.log = &log;
  }
  return run_repl(std::cin, std::cout, session, opt);
}

struct SimulateArgs {
  std::string assets;
  std::string profiles;
  int episodes = 200;
  std::uint64_t seed = 42;
  std::string out = "sim_out";
  bool traces = false;
  bool improvement = false;
  int train_episodes = 2000;
  int eval_episodes = 200;
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p);
  if (!f) throw ModelError("cannot write " + p.string());
  f << content;
}

int cmd_simulate(const SimulateArgs& a) {
  auto assets = EngineAssets::load_dir(a.assets);
  const auto profiles = load_profiles(a.profiles.empty() ? a.assets + "/profiles.json" : a.profiles);
  fs::create_directories(a.out);
  SimConfig cfg;
  cfg.collect_traces = a.traces;
  const auto report = run_experiment(assets, profiles, a.episodes, a.seed, cfg);
  std::ostringstream csv;
  write_metrics_csv(csv, report);
  write_file(fs::path(a.out) / "metrics.csv", csv.str());
  write_file(fs::path(a.out) / "metrics.json", to_json(report).dump(2) + "\n");
  std::cout << csv.str();
  if (a.traces) {
    std::ostringstream t;
    write_traces_csv(t, report.traces);
    write_file(fs::path(a.out) / "traces.csv", t.str());
  }
  if (a.improvement) {
    ImprovementConfig ic;
    ic.seed = a.seed;
    ic.training.episodes = a.train_episodes;
    ic.eval_episodes = a.eval_episodes;
    const auto rows = policy_improvement_report(
        assets, profiles, handcrafted_qtable(StateSpace(assets->ontology.size()), 1.0), ic);
    std::ostringstream imp;
    write_improvement_csv(imp, rows);
    write_file(fs::path(a.out) / "improvement.csv", imp.str());
    std::cout << imp.str();
  }
  return 0;
}

int cmd_serve(const std::string& host, int port, const std::string& assets_dir, const std::string& ui_dir) {
  if (const char* env = std::getenv("POMDP_DM_PORT")) {
    try {
      port = std::stoi(env);
    } catch (const std::logic_error&) {
      throw ModelError(std::string("POMDP_DM_PORT is not a port number: ") + env);
    }
  }
  auto assets = EngineAssets::load_dir(assets_dir);
  const std::string engine_path = assets_dir + "/engine.json";
  EngineConfig config = fs::exists(engine_path) ? EngineConfig::load(engine_path) : EngineConfig{};
  SessionStore store(assets, config);
  httplib::Server server;
  register_routes(server, store, ui_dir);
  std::cerr << "listening on " << host << ':' << port << '\n';
  if (!server.listen(host, port)) throw ModelError("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"POMDP dialogue manager"};
  app.require_subcommand(1);
  const std::string assets = POMDP_DM_ASSETS_DIR;

  auto* repl = app.add_subcommand("repl", "chat on stdin/stdout");
  std::string ontology = assets + "/ontology.json", model = assets + "/model.json",
              lexicon = assets + "/lexicon.tsv", engine = assets + "/engine.json", log_path;
  std::uint64_t repl_seed = 0;
  bool quiet = false;
  repl->add_option("--ontology", ontology)->check(CLI::ExistingFile);
  repl->add_option("--model", model)->check(CLI::ExistingFile);
  repl->add_option("--lexicon", lexicon)->check(CLI::ExistingFile);
  repl->add_option("--engine", engine, "engine config JSON")->check(CLI::ExistingFile);
  repl->add_option("--seed", repl_seed);
  repl->add_option("--log", log_path, "write one AgentTurn JSON per line");
  repl->add_flag("--quiet", quiet, "omit per-turn diagnostics");

  auto* sim = app.add_subcommand("simulate", "run simulated users and write metrics");
  SimulateArgs sa;
  sa.assets = assets;
  sim->add_option("--assets", sa.assets)->check(CLI::ExistingDirectory);
  sim->add_option("--profiles", sa.profiles)->check(CLI::ExistingFile);
  sim->add_option("--episodes", sa.episodes)->check(CLI::PositiveNumber);
  sim->add_option("--seed", sa.seed);
  sim->add_option("--out", sa.out);
  sim->add_flag("--traces", sa.traces, "write per-turn reward and Q-value traces");
  sim->add_flag("--improvement", sa.improvement, "train per profile and compare policies");
  sim->add_option("--train-episodes", sa.train_episodes)->check(CLI::PositiveNumber);
  sim->add_option("--eval-episodes", sa.eval_episodes)->check(CLI::PositiveNumber);

  auto* dwt = app.add_subcommand("dwt", "Haar trend analysis of a CSV column");
  std::string input;
  dwt->add_option("--input", input)->required()->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "HTTP session API");
  int port = 8080;
  std::string host = "0.0.0.0", serve_assets = assets, ui_dir = assets + "/../ui";
  serve->add_option("--port", port, "overridden by POMDP_DM_PORT")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host);
  serve->add_option("--assets", serve_assets)->check(CLI::ExistingDirectory);
  serve->add_option("--ui", ui_dir, "static files served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*repl) return cmd_repl(ontology, model, lexicon, engine, repl_seed, log_path, quiet);
    if (*sim) return cmd_simulate(sa);
    if (*dwt) return cmd_dwt(input);
    if (*serve) return cmd_serve(host, port, serve_assets, ui_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
