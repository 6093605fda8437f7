#pragma once

// Simulated users at four knowledge levels, episode runner, experiment
// metrics, Q-table training and policy comparison.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pomdp_dm/engine.hpp"
#include "pomdp_dm/errors.hpp"
#include "pomdp_dm/level_mode.hpp"
#include "pomdp_dm/ontology.hpp"
#include "pomdp_dm/q_policy.hpp"
#include "pomdp_dm/rng.hpp"

namespace pdm {

// "{name}" is replaced by the display name of the feature under discussion.
struct UtteranceTemplates {
  std::string affirm = "Yes, please add {name}.";
  std::string deny = "Thanks, good to know, but I do not need {name}.";
  std::string info = "Could you please explain {name}? Thanks.";
  std::vector<std::string> offscript{"What?", "Hmm."};
  std::string review = "Everything looks good, I do not need any changes.";
  std::string brief_affirm = "Yes, please.";
  std::string brief_deny = "Thanks, I do not need it.";
  std::string negative_affirm = "Add {name} then. This is boring.";
  std::string negative_deny = "That sounds bad, no {name} for me.";
  std::string negative_info = "This is frustrating. What does {name} do?";
  std::string negative_offscript = "Ugh, this is confusing.";
  std::string negative_review = "This is boring. No changes.";
};

struct UserProfile {
  std::string name;
  KnowledgeLevel level_target = KnowledgeLevel::Expert;
  double p_request_info = 0.0;
  double p_offscript = 0.0;
  double p_negative_sentiment = 0.0;
  UtteranceTemplates templates;

  void validate() const {
    for (double p : {p_request_info, p_offscript, p_negative_sentiment})
      if (!(p >= 0.0 && p <= 1.0)) throw ModelError("profile " + name + ": probabilities must lie in [0, 1]");
    if (p_request_info + p_offscript > 1.0)
      throw ModelError("profile " + name + ": p_request_info + p_offscript exceeds 1");
    if (templates.offscript.empty()) throw ModelError("profile " + name + ": no off-script templates");
  }
};

inline std::vector<UserProfile> default_profiles() {
  return {
      {"Expert", KnowledgeLevel::Expert, 0.0, 0.0, 0.0, {}},
      {"Professional", KnowledgeLevel::Professional, 0.10, 0.05, 0.05, {}},
      {"Amateur", KnowledgeLevel::Amateur, 0.25, 0.10, 0.10, {}},
      {"Novice", KnowledgeLevel::Novice, 0.35, 0.20, 0.15, {}},
  };
}

// Noise probabilities must not decrease from Expert to Novice.
inline void check_profile_order(const std::vector<UserProfile>& profiles) {
  for (std::size_t i = 1; i < profiles.size(); ++i) {
    const auto& a = profiles[i - 1];
    const auto& b = profiles[i];
    if (a.level_target > b.level_target) continue;
    if (a.p_request_info > b.p_request_info || a.p_offscript > b.p_offscript ||
        a.p_negative_sentiment > b.p_negative_sentiment)
      throw ModelError("profile " + b.name + " is less noisy than " + a.name);
  }
}

inline std::vector<UserProfile> profiles_from_json(const nlohmann::json& doc) {
  std::vector<UserProfile> out;
  try {
    for (const auto& j : doc.at("profiles")) {
      UserProfile p;
      p.name = j.at("name").get<std::string>();
      std::string level = j.value("level", p.name);
      std::transform(level.begin(), level.end(), level.begin(), [](unsigned char c) { return std::tolower(c); });
      p.level_target = parse_level(level);
      p.p_request_info = j.at("p_request_info").get<double>();
      p.p_offscript = j.at("p_offscript").get<double>();
      p.p_negative_sentiment = j.at("p_negative_sentiment").get<double>();
      if (j.contains("templates")) {
        const auto& t = j.at("templates");
        auto& d = p.templates;
        d.affirm = t.value("affirm", d.affirm);
        d.deny = t.value("deny", d.deny);
        d.info = t.value("info", d.info);
        d.offscript = t.value("offscript", d.offscript);
        d.review = t.value("review", d.review);
        d.brief_affirm = t.value("brief_affirm", d.brief_affirm);
        d.brief_deny = t.value("brief_deny", d.brief_deny);
        d.negative_affirm = t.value("negative_affirm", d.negative_affirm);
        d.negative_deny = t.value("negative_deny", d.negative_deny);
        d.negative_info = t.value("negative_info", d.negative_info);
        d.negative_offscript = t.value("negative_offscript", d.negative_offscript);
        d.negative_review = t.value("negative_review", d.negative_review);
      }
      p.validate();
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("profiles: ") + e.what());
  }
  if (out.empty()) throw ModelError("profiles: no profile defined");
  check_profile_order(out);
  return out;
}

inline std::vector<UserProfile> load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open profiles file " + path);
  try {
    return profiles_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(path + ": " + e.what());
  }
}

// What the simulated user is being asked.
struct PromptContext {
  Cursor::Kind kind = Cursor::Kind::Node;
  std::string node_id;
  std::string node_name;
};

inline PromptContext prompt_context(const Ontology& o, const Customization& c) {
  PromptContext ctx;
  ctx.kind = c.cursor.kind;
  if (c.cursor.kind == Cursor::Kind::Node) {
    ctx.node_id = o.node(c.cursor.node).id;
    ctx.node_name = o.node(c.cursor.node).name;
  }
  return ctx;
}

// The set of optional features the user wants; never holds two conflicting nodes.
struct Agenda {
  std::set<std::string> wanted;
  bool wants(const std::string& id) const { return wanted.count(id) != 0; }
};

inline Agenda sample_agenda(const Ontology& o, Rng& rng, double p_want = 0.5) {
  Agenda a;
  for (std::size_t n : o.preorder()) {
    const auto& node = o.node(n);
    if (node.kind == NodeKind::Required) continue;
    const bool want = rng.bernoulli(p_want);
    const bool blocked = std::any_of(o.conflicts(n).begin(), o.conflicts(n).end(),
                                     [&](std::size_t c) { return a.wants(o.node(c).id); });
    if (want && !blocked) a.wanted.insert(node.id);
  }
  return a;
}

enum class UtteranceKind { Answer, RequestInfo, Offscript };

struct SimUtterance {
  std::string text;
  UtteranceKind kind = UtteranceKind::Answer;
  bool negative = false;
};

inline std::string fill(const std::string& tmpl, const std::string& name) {
  std::string out = tmpl;
  const std::string key = "{name}";
  for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + name.size()))
    out.replace(pos, key.size(), name);
  return out;
}

inline SimUtterance render(const UserProfile& p, const PromptContext& ctx, const Agenda& agenda, UtteranceKind kind,
                           bool negative, Rng& rng) {
  const auto& t = p.templates;
  SimUtterance u{{}, kind, negative};
  switch (kind) {
    case UtteranceKind::Offscript:
      u.text = negative ? t.negative_offscript : t.offscript[rng.index(t.offscript.size())];
      break;
    case UtteranceKind::RequestInfo:
      u.text = fill(negative ? t.negative_info : t.info, ctx.kind == Cursor::Kind::Node ? ctx.node_name : "that");
      break;
    case UtteranceKind::Answer:
      if (ctx.kind != Cursor::Kind::Node) {
        u.text = negative ? t.negative_review : t.review;
      } else if (agenda.wants(ctx.node_id)) {
        u.text = fill(negative ? t.negative_affirm : t.affirm, ctx.node_name);
      } else {
        u.text = fill(negative ? t.negative_deny : t.deny, ctx.node_name);
      }
      break;
  }
  return u;
}

// One fresh user turn: off-script with p_offscript, else an information
// request with p_request_info, else the agenda answer. Negative phrasing is an
// independent draw.
inline SimUtterance simulate_turn(const UserProfile& p, const PromptContext& ctx, const Agenda& agenda, Rng& rng) {
  const double u = rng.uniform();
  UtteranceKind kind = UtteranceKind::Answer;
  if (u < p.p_offscript) {
    kind = UtteranceKind::Offscript;
  } else if (u < p.p_offscript + p.p_request_info) {
    kind = UtteranceKind::RequestInfo;
  }
  const bool negative = rng.bernoulli(p.p_negative_sentiment);
  return render(p, ctx, agenda, kind, negative, rng);
}

inline bool addresses(UtteranceKind kind, DialogueAct act) {
  switch (kind) {
    case UtteranceKind::Answer: return act == DialogueAct::AdvancePrompt;
    case UtteranceKind::RequestInfo: return act == DialogueAct::GiveInfo;
    case UtteranceKind::Offscript: return act == DialogueAct::Clarify || act == DialogueAct::Confirm;
  }
  return false;
}

// A user with a pending need: an unanswered request is repeated with
// negative phrasing. The first confirmation of an answer gets a brief
// re-answer, later ones on the same prompt annoy the user.
class SimulatedUser {
 public:
  SimulatedUser(const UserProfile& profile, Agenda agenda, Rng rng)
      : profile_(&profile), agenda_(std::move(agenda)), rng_(std::move(rng)) {}

  const Agenda& agenda() const { return agenda_; }

  SimUtterance respond(const PromptContext& ctx, std::optional<DialogueAct> last_act) {
    SimUtterance u;
    if (!last_ctx_ || last_ctx_->kind != ctx.kind || last_ctx_->node_id != ctx.node_id) confirmed_ = false;
    last_ctx_ = ctx;
    if (last_ && last_act && !addresses(last_->kind, *last_act)) {
      if (last_->kind == UtteranceKind::Answer && *last_act == DialogueAct::Confirm && !confirmed_) {
        confirmed_ = true;
        u = {{}, UtteranceKind::Answer, false};
        const bool yes = ctx.kind == Cursor::Kind::Node && agenda_.wants(ctx.node_id);
        u.text = yes ? profile_->templates.brief_affirm : profile_->templates.brief_deny;
      } else {
        u = render(*profile_, ctx, agenda_, last_->kind, true, rng_);
      }
    } else {
      u = simulate_turn(*profile_, ctx, agenda_, rng_);
    }
    last_ = u;
    return u;
  }

 private:
  const UserProfile* profile_;
  Agenda agenda_;
  Rng rng_;
  std::optional<SimUtterance> last_;
  std::optional<PromptContext> last_ctx_;
  bool confirmed_ = false;
};

struct SimConfig {
  int turn_cap = 40;
  // Exploration while simulating; decays per episode.
  QConfig q{0.001, 0.9, 0.05, 0.995, 0.01, 0};
  bool learn = true;
  std::string warm_start = "handcrafted";
  bool collect_traces = false;
};

struct TraceRow {
  std::string profile;
  int episode = 0;
  int turn = 0;
  std::string action;
  double reward = 0.0;
  double q_value = 0.0;
  std::string emotion;
};

struct EpisodeRecord {
  int episode = 0;
  bool success = false;
  int length = 0;
  double episode_return = 0.0;
  int neutral_positive_turns = 0;
  int turns = 0;
};

struct ExperimentMetrics {
  std::string profile;
  double accuracy_pct = 0.0;
  double avg_dialogue_length = 0.0;
  double neutral_positive_pct = 0.0;
  double mean_return = 0.0;
  std::vector<EpisodeRecord> episodes;
};

struct ExperimentReport {
  std::vector<ExperimentMetrics> profiles;
  ExperimentMetrics average;
  std::vector<TraceRow> traces;
};

inline bool agenda_respected(const Ontology& o, const Customization& c, const Agenda& a) {
  for (std::size_t n = 0; n < o.size(); ++n) {
    const auto& node = o.node(n);
    if (node.kind == NodeKind::Required || c.decisions[n] == Decision::Undecided) continue;
    if ((c.decisions[n] == Decision::Accepted) != a.wants(node.id)) return false;
  }
  return true;
}

// Runs one episode to the goal or the turn cap.
inline EpisodeRecord run_episode(Session& session, SimulatedUser& user, int turn_cap,
                                 std::vector<TraceRow>* traces = nullptr, const std::string& profile = {},
                                 int episode = 0) {
  const auto& onto = session.assets().ontology;
  EpisodeRecord rec;
  rec.episode = episode;
  std::vector<double> rewards;
  std::optional<DialogueAct> last_act;
  while (!session.goal_reached() && rec.turns < turn_cap) {
    const auto utterance = user.respond(prompt_context(onto, session.customization()), last_act);
    const AgentTurn t = session.step(utterance.text);
    ++rec.turns;
    rewards.push_back(t.reward);
    last_act = session.last_action();
    if (is_neutral_or_positive(session.last_emotion())) ++rec.neutral_positive_turns;
    if (traces)
      traces->push_back({profile, episode, session.turn(), t.action, t.reward, session.last_q_value(), t.emotion});
  }
  rec.success = session.goal_reached() && agenda_respected(onto, session.customization(), user.agenda());
  rec.length = rec.success ? rec.turns : turn_cap;
  rec.episode_return = episode_return(rewards, session.config().q.gamma);
  return rec;
}

inline ExperimentMetrics summarize(const std::string& profile, std::vector<EpisodeRecord> episodes) {
  ExperimentMetrics m;
  m.profile = profile;
  double ok = 0, len = 0, np = 0, turns = 0, ret = 0;
  for (const auto& e : episodes) {
    ok += e.success ? 1 : 0;
    len += e.length;
    np += e.neutral_positive_turns;
    turns += e.turns;
    ret += e.episode_return;
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, episodes.size()));
  m.accuracy_pct = 100.0 * ok / n;
  m.avg_dialogue_length = len / n;
  m.neutral_positive_pct = turns > 0 ? 100.0 * np / turns : 0.0;
  m.mean_return = ret / n;
  m.episodes = std::move(episodes);
  return m;
}

inline EngineConfig sim_engine_config(const SimConfig& cfg) {
  EngineConfig ec;
  ec.q = cfg.q;
  ec.learn = cfg.learn;
  ec.warm_start = cfg.warm_start;
  return ec;
}

// Stream ids for per-episode seeds.
inline std::uint64_t episode_seed(std::uint64_t master, std::size_t profile, int episode, std::uint64_t role) {
  return derive_seed(derive_seed(derive_seed(master, profile), static_cast<std::uint64_t>(episode)), role);
}

// Runs `episodes` episodes for one profile; the Q-table carries over between
// episodes and exploration decays per episode.
inline ExperimentMetrics run_profile(const std::shared_ptr<const EngineAssets>& assets, const UserProfile& profile,
                                     std::size_t profile_index, int episodes, std::uint64_t seed,
                                     const SimConfig& cfg, std::optional<QTable>& qtable,
                                     std::vector<TraceRow>* traces = nullptr) {
  if (episodes < 1) throw OutOfRange("episodes must be at least 1");
  profile.validate();
  const EngineConfig ec = sim_engine_config(cfg);
  std::vector<EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(episodes));
  for (int ep = 0; ep < episodes; ++ep) {
    Rng agenda_rng(episode_seed(seed, profile_index, ep, 1));
    SimulatedUser user(profile, sample_agenda(assets->ontology, agenda_rng),
                       Rng(episode_seed(seed, profile_index, ep, 2)));
    Session session(assets, ec, episode_seed(seed, profile_index, ep, 3), std::move(qtable));
    session.set_epsilon(cfg.q.epsilon_after(ep));
    records.push_back(run_episode(session, user, cfg.turn_cap, traces, profile.name, ep));
    qtable = session.release_qtable();
  }
  return summarize(profile.name, std::move(records));
}

inline ExperimentReport run_experiment(const std::shared_ptr<const EngineAssets>& assets,
                                       const std::vector<UserProfile>& profiles, int episodes_per_profile,
                                       std::uint64_t seed, const SimConfig& cfg = {}) {
  ExperimentReport report;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    std::optional<QTable> q;
    report.profiles.push_back(run_profile(assets, profiles[i], i, episodes_per_profile, seed, cfg, q,
                                          cfg.collect_traces ? &report.traces : nullptr));
  }
  auto& avg = report.average;
  avg.profile = "Average";
  for (const auto& m : report.profiles) {
    avg.accuracy_pct += m.accuracy_pct;
    avg.avg_dialogue_length += m.avg_dialogue_length;
    avg.neutral_positive_pct += m.neutral_positive_pct;
    avg.mean_return += m.mean_return;
  }
  if (!report.profiles.empty()) {
    const double n = static_cast<double>(report.profiles.size());
    avg.accuracy_pct /= n;
    avg.avg_dialogue_length /= n;
    avg.neutral_positive_pct /= n;
    avg.mean_return /= n;
  }
  return report;
}

// Learns a Q-table from scratch against one profile.
struct TrainingConfig {
  int episodes = 2000;
  int turn_cap = 40;
  QConfig q{0.1, 0.9, 1.0, 0.995, 0.01, 0};
};

inline QTable train_policy(const std::shared_ptr<const EngineAssets>& assets, const UserProfile& profile,
                           std::size_t profile_index, std::uint64_t seed, const TrainingConfig& tc = {}) {
  SimConfig cfg;
  cfg.turn_cap = tc.turn_cap;
  cfg.q = tc.q;
  cfg.learn = true;
  cfg.warm_start = "zero";
  std::optional<QTable> q;
  run_profile(assets, profile, profile_index, tc.episodes, seed, cfg, q);
  return std::move(*q);
}

struct PolicyEvaluation {
  double mean_return = 0.0;
  double avg_dialogue_length = 0.0;
  double accuracy_pct = 0.0;
};

// Frozen evaluation: epsilon 1 is the uniform-random baseline, epsilon 0 greedy.
inline PolicyEvaluation evaluate_policy(const std::shared_ptr<const EngineAssets>& assets, const UserProfile& profile,
                                        std::size_t profile_index, const QTable& q, double epsilon, int episodes,
                                        std::uint64_t seed, int turn_cap = 40) {
  SimConfig cfg;
  cfg.turn_cap = turn_cap;
  cfg.q.epsilon0 = epsilon;
  cfg.q.epsilon_min = epsilon;
  cfg.q.epsilon_decay = 1.0;
  cfg.learn = false;
  std::optional<QTable> table = q;
  const auto m = run_profile(assets, profile, profile_index, episodes, seed, cfg, table);
  return {m.mean_return, m.avg_dialogue_length, m.accuracy_pct};
}

struct ImprovementRow {
  std::string profile;
  PolicyEvaluation random;
  PolicyEvaluation before;
  PolicyEvaluation after;
  bool improved = false;  // after >= before on return
  bool beats_random = false;
};

struct ImprovementConfig {
  TrainingConfig training;
  int eval_episodes = 200;
  std::uint64_t seed = 0;
};

// Compares a uniform-random baseline, the `before` table and a table trained
// per profile. Rows follow the profile order, then Average.
inline std::vector<ImprovementRow> policy_improvement_report(const std::shared_ptr<const EngineAssets>& assets,
                                                             const std::vector<UserProfile>& profiles,
                                                             const QTable& before, const ImprovementConfig& ic) {
  std::vector<ImprovementRow> rows;
  ImprovementRow avg;
  avg.profile = "Average";
  const std::uint64_t eval_seed = derive_seed(ic.seed, 0xE7A1);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const QTable after = train_policy(assets, profiles[i], i, ic.seed, ic.training);
    ImprovementRow r;
    r.profile = profiles[i].name;
    const int cap = ic.training.turn_cap;
    r.random = evaluate_policy(assets, profiles[i], i, before, 1.0, ic.eval_episodes, eval_seed, cap);
    r.before = evaluate_policy(assets, profiles[i], i, before, 0.0, ic.eval_episodes, eval_seed, cap);
    r.after = evaluate_policy(assets, profiles[i], i, after, 0.0, ic.eval_episodes, eval_seed, cap);
    r.improved = r.after.mean_return >= r.before.mean_return;
    r.beats_random = r.after.mean_return > r.random.mean_return;
    for (auto [dst, src] : {std::pair{&avg.random, &r.random}, {&avg.before, &r.before}, {&avg.after, &r.after}}) {
      dst->mean_return += src->mean_return / static_cast<double>(profiles.size());
      dst->avg_dialogue_length += src->avg_dialogue_length / static_cast<double>(profiles.size());
      dst->accuracy_pct += src->accuracy_pct / static_cast<double>(profiles.size());
    }
    rows.push_back(r);
  }
  avg.improved = avg.after.mean_return >= avg.before.mean_return;
  avg.beats_random = avg.after.mean_return > avg.random.mean_return;
  rows.push_back(avg);
  return rows;
}

// ---------------------------------------------------------------------------
// Output

inline void write_metrics_csv(std::ostream& out, const ExperimentReport& r) {
  out << "profile,accuracy_pct,avg_dialogue_length,neutral_positive_pct,mean_return\n";
  out << std::setprecision(10);
  auto row = [&](const ExperimentMetrics& m) {
    out << m.profile << ',' << m.accuracy_pct << ',' << m.avg_dialogue_length << ',' << m.neutral_positive_pct << ','
        << m.mean_return << '\n';
  };
  for (const auto& m : r.profiles) row(m);
  row(r.average);
}

inline nlohmann::ordered_json to_json(const ExperimentMetrics& m, bool with_episodes) {
  nlohmann::ordered_json j;
  j["profile"] = m.profile;
  j["accuracy_pct"] = m.accuracy_pct;
  j["avg_dialogue_length"] = m.avg_dialogue_length;
  j["neutral_positive_pct"] = m.neutral_positive_pct;
  j["mean_return"] = m.mean_return;
  if (with_episodes) {
    auto& eps = j["episodes"] = nlohmann::ordered_json::array();
    for (const auto& e : m.episodes)
      eps.push_back({{"episode", e.episode},
                     {"success", e.success},
                     {"length", e.length},
                     {"return", e.episode_return},
                     {"neutral_positive_turns", e.neutral_positive_turns},
                     {"turns", e.turns}});
  }
  return j;
}

inline nlohmann::ordered_json to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  auto& ps = j["profiles"] = nlohmann::ordered_json::array();
  for (const auto& m : r.profiles) ps.push_back(to_json(m, true));
  j["average"] = to_json(r.average, false);
  return j;
}

inline void write_traces_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "profile,episode,turn,action,reward,q_value,emotion\n";
  out << std::setprecision(10);
  for (const auto& t : rows)
    out << t.profile << ',' << t.episode << ',' << t.turn << ',' << t.action << ',' << t.reward << ',' << t.q_value
        << ',' << t.emotion << '\n';
}

inline void write_improvement_csv(std::ostream& out, const std::vector<ImprovementRow>& rows) {
  out << "profile,random_return,handcrafted_return,learned_return,random_length,handcrafted_length,learned_length,"
         "improved\n";
  out << std::setprecision(10);
  for (const auto& r : rows)
    out << r.profile << ',' << r.random.mean_return << ',' << r.before.mean_return << ',' << r.after.mean_return << ','
        << r.random.avg_dialogue_length << ',' << r.before.avg_dialogue_length << ','
        << r.after.avg_dialogue_length << ',' << (r.improved ? "true" : "false") << '\n';
}

}  // namespace pdm
