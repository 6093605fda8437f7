#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "pomdp_dm/service.hpp"
#include "replay.hpp"

using namespace pdm;
using nlohmann::json;
using testsupport::shipped_assets;
using testsupport::shipped_config;

namespace {

class Server : public ::testing::Test {
 protected:
  void SetUp() override {
    register_routes(server_, store_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  std::string create(std::uint64_t seed) {
    auto res = client().Post("/api/session", json{{"seed", seed}}.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    return json::parse(res->body).at("session_id").get<std::string>();
  }

  httplib::Result say(const std::string& id, const std::string& text) {
    return client().Post("/api/session/" + id + "/message", json{{"text", text}}.dump(), "application/json");
  }

  SessionStore store_{shipped_assets(), shipped_config()};
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

struct Proc {
  int code;
  std::string out;
};

Proc run(const std::string& cmd) {
  Proc p{-1, {}};
  FILE* f = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!f) return p;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, f)) > 0) p.out.append(buf, n);
  const int status = pclose(f);
  p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return p;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pomdp_dm_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

const std::string kCli = POMDP_DM_CLI;

}  // namespace

TEST_F(Server, Health) {
  auto res = client().Get("/api/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body), (json{{"status", "ok"}}));
}

TEST_F(Server, SessionLifecycle) {
  auto res = client().Post("/api/session", json{{"seed", 1}}.dump(), "application/json");
  ASSERT_TRUE(res);
  const auto created = json::parse(res->body);
  EXPECT_EQ(created.at("greeting"), Session(shipped_assets(), shipped_config(), 1).opening());
  const std::string id = created.at("session_id");

  auto msg = say(id, "Yes, please.");
  ASSERT_TRUE(msg);
  EXPECT_EQ(msg->status, 200);
  const auto body = json::parse(msg->body);
  EXPECT_EQ(body.at("turn"), 1);
  EXPECT_EQ(body.at("session_id"), id);
  EXPECT_FALSE(body.at("ended").get<bool>());

  auto tr = client().Get("/api/session/" + id + "/transcript");
  ASSERT_TRUE(tr);
  EXPECT_EQ(json::parse(tr->body).size(), 1u);

  EXPECT_EQ(say(id, "quit")->status, 200);
  EXPECT_EQ(say(id, "yes")->status, 409);

  EXPECT_EQ(client().Delete("/api/session/" + id)->status, 200);
  EXPECT_EQ(client().Delete("/api/session/" + id)->status, 404);
  EXPECT_EQ(say(id, "yes")->status, 404);
}

TEST_F(Server, BadRequests) {
  const std::string id = create(2);
  EXPECT_EQ(client().Post("/api/session/" + id + "/message", "not json", "application/json")->status, 400);
  EXPECT_EQ(client().Post("/api/session/" + id + "/message", R"({"txt": "x"})", "application/json")->status, 400);
  EXPECT_EQ(say(id, "   ")->status, 400);
  EXPECT_EQ(client().Post("/api/session", R"({"seed": -3})", "application/json")->status, 400);
  EXPECT_EQ(client().Get("/api/session/nope/transcript")->status, 404);
}

TEST_F(Server, HttpMatchesReplByteForByte) {
  const auto lines = testsupport::book_portal_transcript();
  const std::string id = create(77);
  std::string http_log;
  for (const auto& l : lines) ASSERT_EQ(say(id, l)->status, 200);
  for (const auto& t : nlohmann::ordered_json::parse(client().Get("/api/session/" + id + "/transcript")->body))
    http_log += t.dump() + "\n";

  Session s(shipped_assets(), shipped_config(), 77);
  std::istringstream in([&] {
    std::string all;
    for (const auto& l : lines) all += l + "\n";
    return all;
  }());
  std::ostringstream out, log;
  ReplOptions opt;
  opt.log = &log;
  run_repl(in, out, s, opt);
  EXPECT_EQ(http_log, log.str());
}

TEST_F(Server, ConcurrentSessionsAreIndependent) {
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(create(100));
  std::vector<std::thread> workers;
  std::vector<std::string> logs(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    workers.emplace_back([&, i] {
      for (const auto& l : testsupport::book_portal_transcript()) logs[i] += say(ids[i], l)->body;
    });
  for (auto& w : workers) w.join();
  for (std::size_t i = 1; i < logs.size(); ++i) {
    auto a = logs[0], b = logs[i];
    // bodies differ only by session id
    for (std::size_t p; (p = a.find(ids[0])) != std::string::npos;) a.replace(p, ids[0].size(), "ID");
    for (std::size_t p; (p = b.find(ids[i])) != std::string::npos;) b.replace(p, ids[i].size(), "ID");
    EXPECT_EQ(a, b);
  }
}

TEST(SessionStore, EvictsIdleSessions) {
  SessionStore store(shipped_assets(), shipped_config(), std::chrono::seconds(60));
  const auto a = store.create(1), b = store.create(2);
  EXPECT_NE(a.id, b.id);
  const auto now = SessionStore::Clock::now();
  store.touch(a.id, now - std::chrono::seconds(120));
  EXPECT_EQ(store.evict_idle(now), 1u);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_FALSE(store.with(a.id, [](Session&) {}));
  EXPECT_TRUE(store.with(b.id, [](Session&) {}));
}

TEST(SessionStore, UnseededSessionsDiffer) {
  SessionStore store(shipped_assets(), shipped_config());
  EXPECT_NE(store.create().seed, store.create().seed);
}

TEST(Repl, PrintsOpeningRepliesAndStopsAtExit) {
  Session s(shipped_assets(), shipped_config(), 1);
  std::istringstream in("\nyes\nquit\nyes\n");
  std::ostringstream out;
  EXPECT_EQ(run_repl(in, out, s, {false, nullptr}), 0);
  std::istringstream lines(out.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(line.rfind("agent> ", 0), 0u);
    ++n;
  }
  EXPECT_EQ(n, 3);
  EXPECT_EQ(s.turn(), 2);
}

TEST(Cli, DwtOnConstantColumn) {
  const auto dir = temp_dir("dwt");
  std::ofstream(dir / "c.csv") << "value\n2\n2\n2\n2\n2\n";
  const auto p = run(kCli + " dwt --input " + (dir / "c.csv").string());
  ASSERT_EQ(p.code, 0);
  const auto j = json::parse(p.out);
  EXPECT_EQ(j.at("ncp"), 0);
  EXPECT_EQ(j.at("original_len"), 5);
  EXPECT_EQ(j.at("padded_len"), 8);
}

TEST(Cli, SimulateIsReproducible) {
  const auto a = temp_dir("sim_a"), b = temp_dir("sim_b");
  const std::string args = " simulate --episodes 10 --seed 42 --traces --out ";
  ASSERT_EQ(run(kCli + args + a.string()).code, 0);
  ASSERT_EQ(run(kCli + args + b.string()).code, 0);
  for (const char* f : {"metrics.csv", "metrics.json", "traces.csv"}) {
    std::stringstream x, y;
    x << std::ifstream(a / f).rdbuf();
    y << std::ifstream(b / f).rdbuf();
    EXPECT_FALSE(x.str().empty()) << f;
    EXPECT_EQ(x.str(), y.str()) << f;
  }
}

TEST(Cli, ReplQuitsAndLogs) {
  const auto dir = temp_dir("repl");
  const auto p = run("printf 'yes\\nQuit\\n' | " + kCli + " repl --seed 3 --quiet --log " + (dir / "log.jsonl").string());
  EXPECT_EQ(p.code, 0);
  EXPECT_NE(p.out.find("Thank you and see you soon."), std::string::npos);
  std::ifstream log(dir / "log.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(log, line)) {
    EXPECT_NO_THROW(json::parse(line));
    ++n;
  }
  EXPECT_EQ(n, 2);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run(kCli).code, 2);
  EXPECT_EQ(run(kCli + " simulate --episodes -1").code, 2);
  EXPECT_EQ(run(kCli + " dwt --input /nonexistent.csv").code, 2);
  EXPECT_EQ(run(kCli + " --help").code, 0);
}
