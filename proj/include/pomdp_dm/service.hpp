#pragma once

// Session store, HTTP routes and the line-oriented REPL. Both transports
// serialize AgentTurn through the same to_json.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "pomdp_dm/engine.hpp"
#include "pomdp_dm/errors.hpp"
#include "pomdp_dm/rng.hpp"

namespace pdm {

inline nlohmann::ordered_json api_message(const std::string& session_id, const Session& s, const AgentTurn& t) {
  auto j = to_json(t);
  j["session_id"] = session_id;
  j["turn"] = s.turn();
  j["goal_reached"] = s.goal_reached();
  j["ended"] = s.ended();
  return j;
}

inline nlohmann::ordered_json transcript_json(const Session& s) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& t : s.transcript()) out.push_back(to_json(t));
  return out;
}

class SessionStore {
 public:
  using Clock = std::chrono::steady_clock;

  SessionStore(std::shared_ptr<const EngineAssets> assets, EngineConfig config,
               std::chrono::seconds idle_timeout = std::chrono::minutes(30))
      : assets_(std::move(assets)), config_(std::move(config)), idle_timeout_(idle_timeout) {
    std::random_device rd;
    id_seed_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }

  struct Created {
    std::string id;
    std::string greeting;
    std::uint64_t seed;
  };

  // Without a seed, sessions get distinct seeds derived from a counter.
  Created create(std::optional<std::uint64_t> seed = std::nullopt) {
    std::lock_guard lock(mu_);
    sweep(Clock::now());
    const std::uint64_t n = counter_++;
    const std::uint64_t s = seed ? *seed : derive_seed(id_seed_, n);
    auto entry = std::make_shared<Entry>(assets_, config_, s);
    std::ostringstream id;
    id << std::hex << derive_seed(id_seed_ ^ 0x5e55'10ddULL, n);
    entry->last_used = Clock::now();
    entries_[id.str()] = entry;
    return {id.str(), entry->session.opening(), s};
  }

  // Runs fn on the session under its lock; steps on one session are served in
  // arrival order. Returns false for an unknown id.
  template <typename Fn>
  bool with(const std::string& id, Fn&& fn) {
    std::shared_ptr<Entry> e;
    {
      std::lock_guard lock(mu_);
      sweep(Clock::now());
      auto it = entries_.find(id);
      if (it == entries_.end()) return false;
      e = it->second;
      e->last_used = Clock::now();
    }
    std::unique_lock lock(e->mu);
    const std::uint64_t ticket = e->next_ticket++;
    e->cv.wait(lock, [&] { return e->serving == ticket; });
    struct Release {
      Entry& e;
      ~Release() {
        ++e.serving;
        e.cv.notify_all();
      }
    } release{*e};
    fn(e->session);
    return true;
  }

  bool remove(const std::string& id) {
    std::lock_guard lock(mu_);
    return entries_.erase(id) != 0;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  // Drops sessions idle for longer than the timeout; returns how many.
  std::size_t evict_idle(Clock::time_point now) {
    std::lock_guard lock(mu_);
    return sweep(now);
  }

  void touch(const std::string& id, Clock::time_point when) {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(id); it != entries_.end()) it->second->last_used = when;
  }

 private:
  struct Entry {
    Entry(std::shared_ptr<const EngineAssets> a, const EngineConfig& c, std::uint64_t seed)
        : session(std::move(a), c, seed) {}
    Session session;
    std::mutex mu;
    std::condition_variable cv;
    std::uint64_t next_ticket = 0;
    std::uint64_t serving = 0;
    Clock::time_point last_used;
  };

  std::size_t sweep(Clock::time_point now) {
    std::size_t n = 0;
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (now - it->second->last_used > idle_timeout_) {
        it = entries_.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

  std::shared_ptr<const EngineAssets> assets_;
  EngineConfig config_;
  std::chrono::seconds idle_timeout_;
  std::uint64_t id_seed_ = 0;
  std::uint64_t counter_ = 0;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& msg) {
  send_json(res, status, {{"error", msg}});
}

}  // namespace detail

// Registers the session API on `server`. A `ui_dir` that exists is served at "/".
inline void register_routes(httplib::Server& server, SessionStore& store, const std::string& ui_dir = {}) {
  using detail::send_error;
  using detail::send_json;

  server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  server.Post("/api/session", [&store](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::uint64_t> seed;
    if (!req.body.empty()) {
      const auto body = nlohmann::json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "body must be a JSON object");
      if (body.contains("seed")) {
        if (!body["seed"].is_number_unsigned()) return send_error(res, 400, "seed must be a non-negative integer");
        seed = body["seed"].get<std::uint64_t>();
      }
    }
    try {
      const auto c = store.create(seed);
      send_json(res, 200, {{"session_id", c.id}, {"greeting", c.greeting}, {"seed", c.seed}});
    } catch (const Error& e) {
      send_error(res, 500, e.what());
    }
  });

  server.Post(R"(/api/session/([^/]+)/message)", [&store](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string())
      return send_error(res, 400, "body must be {\"text\": string}");
    const std::string text = body["text"].get<std::string>();
    const bool found = store.with(id, [&](Session& s) {
      try {
        const AgentTurn t = s.step(text);
        send_json(res, 200, api_message(id, s, t));
      } catch (const SessionEnded& e) {
        send_error(res, 409, e.what());
      } catch (const EmptyInput& e) {
        send_error(res, 400, e.what());
      } catch (const Error& e) {
        send_error(res, 500, e.what());
      }
    });
    if (!found) send_error(res, 404, "unknown session");
  });

  server.Get(R"(/api/session/([^/]+)/transcript)", [&store](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!store.with(id, [&](Session& s) { send_json(res, 200, transcript_json(s)); }))
      send_error(res, 404, "unknown session");
  });

  server.Delete(R"(/api/session/([^/]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    if (store.remove(req.matches[1])) {
      send_json(res, 200, {{"deleted", true}});
    } else {
      send_error(res, 404, "unknown session");
    }
  });

  if (!ui_dir.empty() && std::filesystem::is_directory(ui_dir)) server.set_mount_point("/", ui_dir);
}

struct ReplOptions {
  bool diagnostics = true;
  std::ostream* log = nullptr;  // one AgentTurn JSON object per line
};

// Reads one utterance per line until "exit"/"quit" or end of input. Blank
// lines are skipped.
inline int run_repl(std::istream& in, std::ostream& out, Session& session, const ReplOptions& opt = {}) {
  out << "agent> " << session.opening() << '\n';
  std::string line;
  while (!session.ended() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const AgentTurn t = session.step(line);
    out << "agent> " << t.reply << '\n';
    if (opt.diagnostics) {
      std::ostringstream d;
      d << "  [turn " << session.turn() << "] action=" << t.action << " emotion=" << t.emotion
        << " level=" << t.level << " mode=" << t.mode << " reward=" << t.reward
        << " compound=" << t.sentiment.compound << " belief=" << t.belief_top_state << ':'
        << t.belief_top_probability << " ncp=" << t.ncp << (t.accepted ? "" : " (rolled back)");
      out << d.str() << '\n';
    }
    if (opt.log) *opt.log << to_json(t).dump() << '\n';
  }
  return 0;
}

}  // namespace pdm
