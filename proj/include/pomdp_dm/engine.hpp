#pragma once

// Per-session dialogue manager. Each user turn runs:
//   exit check -> sentiment and reward -> observation -> belief update with
//   validation/rollback -> history -> trend -> level/mode -> action choice ->
//   Q update -> fuzzy emotion -> ontology cursor advance.

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pomdp_dm/belief_history.hpp"
#include "pomdp_dm/errors.hpp"
#include "pomdp_dm/fuzzy_emotion.hpp"
#include "pomdp_dm/level_mode.hpp"
#include "pomdp_dm/ontology.hpp"
#include "pomdp_dm/pomdp.hpp"
#include "pomdp_dm/q_policy.hpp"
#include "pomdp_dm/rng.hpp"
#include "pomdp_dm/sentiment.hpp"
#include "pomdp_dm/trend.hpp"

namespace pdm {

enum class DialogueAct { AdvancePrompt = 0, GiveInfo = 1, Confirm = 2, Clarify = 3 };
inline constexpr std::size_t kNumActs = 4;

inline std::string to_string(DialogueAct a) {
  switch (a) {
    case DialogueAct::AdvancePrompt: return "advance_prompt";
    case DialogueAct::GiveInfo: return "give_info";
    case DialogueAct::Confirm: return "confirm";
    case DialogueAct::Clarify: return "clarify";
  }
  return "?";
}

// Hidden user intention about the feature under discussion.
enum class Intention { WantsFeature = 0, RejectsFeature = 1, NeedsInfo = 2, Confused = 3 };
inline constexpr std::size_t kNumIntentions = 4;

inline std::string to_string(Intention i) {
  switch (i) {
    case Intention::WantsFeature: return "WantsFeature";
    case Intention::RejectsFeature: return "RejectsFeature";
    case Intention::NeedsInfo: return "NeedsInfo";
    case Intention::Confused: return "Confused";
  }
  return "?";
}

struct DiscreteState {
  std::size_t slot = 0;  // ontology node, then review, then done
  KnowledgeLevel level = KnowledgeLevel::Amateur;
  SentimentClass sentiment = SentimentClass::Neutral;
  Intention intention = Intention::WantsFeature;

  friend bool operator==(const DiscreteState&, const DiscreteState&) = default;
};

// Mixed-radix encoding of DiscreteState.
class StateSpace {
 public:
  explicit StateSpace(std::size_t ontology_nodes) : slots_(ontology_nodes + 2) {}

  std::size_t slots() const { return slots_; }
  std::size_t size() const { return slots_ * 4 * 3 * kNumIntentions; }

  std::size_t slot_of(const Cursor& c) const {
    switch (c.kind) {
      case Cursor::Kind::Node: return c.node;
      case Cursor::Kind::Review: return slots_ - 2;
      case Cursor::Kind::Done: return slots_ - 1;
    }
    return slots_ - 1;
  }

  std::size_t encode(const DiscreteState& s) const {
    if (s.slot >= slots_) throw OutOfRange("state slot out of range");
    return ((s.slot * 4 + static_cast<std::size_t>(s.level)) * 3 + static_cast<std::size_t>(s.sentiment)) *
               kNumIntentions +
           static_cast<std::size_t>(s.intention);
  }

  DiscreteState decode(std::size_t id) const {
    if (id >= size()) throw OutOfRange("state id out of range");
    DiscreteState s;
    s.intention = static_cast<Intention>(id % kNumIntentions);
    id /= kNumIntentions;
    s.sentiment = static_cast<SentimentClass>(id % 3);
    id /= 3;
    s.level = static_cast<KnowledgeLevel>(id % 4);
    s.slot = id / 4;
    return s;
  }

 private:
  std::size_t slots_;
};

// Hand-crafted policy: answer the most likely intention.
inline DialogueAct handcrafted_act(Intention i) {
  switch (i) {
    case Intention::WantsFeature:
    case Intention::RejectsFeature: return DialogueAct::AdvancePrompt;
    case Intention::NeedsInfo: return DialogueAct::GiveInfo;
    case Intention::Confused: return DialogueAct::Clarify;
  }
  return DialogueAct::Clarify;
}

inline QTable handcrafted_qtable(const StateSpace& space, double value) {
  QTable q(space.size(), kNumActs);
  for (std::size_t s = 0; s < space.size(); ++s)
    q.at(s, ActionId(static_cast<std::size_t>(handcrafted_act(space.decode(s).intention)))) = value;
  return q;
}

struct EngineConfig {
  // Live sessions exploit; exploration is configured for simulated training.
  QConfig q{0.001, 0.9, 0.0, 0.995, 0.0, 0};
  RewardConstants reward;
  std::string warm_start = "handcrafted";  // "handcrafted" | "zero"
  double warm_start_value = 1.0;
  bool learn = true;
  FammTable famm;

  static EngineConfig from_json(const nlohmann::json& j) {
    EngineConfig c;
    try {
      if (j.contains("q")) {
        const auto& q = j.at("q");
        c.q.alpha = q.value("alpha", c.q.alpha);
        c.q.gamma = q.value("gamma", c.q.gamma);
        c.q.epsilon0 = q.value("epsilon0", c.q.epsilon0);
        c.q.epsilon_decay = q.value("epsilon_decay", c.q.epsilon_decay);
        c.q.epsilon_min = q.value("epsilon_min", c.q.epsilon_min);
        c.q.rng_seed = q.value("rng_seed", c.q.rng_seed);
      }
      if (j.contains("reward")) {
        const auto& r = j.at("reward");
        c.reward.positive = r.value("positive", c.reward.positive);
        c.reward.neutral = r.value("neutral", c.reward.neutral);
        c.reward.negative = r.value("negative", c.reward.negative);
        c.reward.step_penalty = r.value("step_penalty", c.reward.step_penalty);
        c.reward.goal_bonus = r.value("goal_bonus", c.reward.goal_bonus);
      }
      c.warm_start = j.value("warm_start", c.warm_start);
      c.warm_start_value = j.value("warm_start_value", c.warm_start_value);
      c.learn = j.value("learn", c.learn);
    } catch (const nlohmann::json::exception& e) {
      throw ModelError(std::string("engine config: ") + e.what());
    }
    if (c.warm_start != "handcrafted" && c.warm_start != "zero")
      throw ModelError("engine config: warm_start must be 'handcrafted' or 'zero'");
    c.q.validate();
    return c;
  }

  static EngineConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open engine config " + path);
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ModelError(path + ": " + e.what());
    }
  }
};

// Ontology, dialogue POMDP and lexicon shared read-only by every session.
struct EngineAssets {
  Ontology ontology;
  PomdpModel model;
  Lexicon lexicon;

  EngineAssets(Ontology o, PomdpModel m, Lexicon l) : ontology(std::move(o)), model(std::move(m)), lexicon(std::move(l)) {
    // The engine indexes the model by enum value, so the labels must line up.
    auto expect = [](const std::vector<std::string>& got, const std::vector<std::string>& want, const char* what) {
      if (got != want) throw ModelError(std::string("dialogue model ") + what + " must be exactly the engine's set");
    };
    std::vector<std::string> states, actions, observations;
    for (std::size_t i = 0; i < kNumIntentions; ++i) states.push_back(to_string(static_cast<Intention>(i)));
    for (std::size_t i = 0; i < kNumActs; ++i) actions.push_back(to_string(static_cast<DialogueAct>(i)));
    for (std::size_t i = 0; i < kNumObservations; ++i)
      observations.push_back(to_string(static_cast<DialogueObservation>(i)));
    expect(model.states(), states, "states");
    expect(model.actions(), actions, "actions");
    expect(model.observations(), observations, "observations");
  }

  static std::shared_ptr<const EngineAssets> load(const std::string& ontology_path, const std::string& model_path,
                                                  const std::string& lexicon_path) {
    return std::make_shared<const EngineAssets>(load_ontology(ontology_path), load_model(model_path),
                                                Lexicon::load(lexicon_path));
  }

  // Conventional layout: ontology.json, model.json, lexicon.tsv.
  static std::shared_ptr<const EngineAssets> load_dir(const std::string& dir) {
    return load(dir + "/ontology.json", dir + "/model.json", dir + "/lexicon.tsv");
  }
};

struct AgentTurn {
  std::string reply;
  std::string action;
  std::string emotion;
  double crisp_x = 0.0;
  std::string level;
  std::string mode;
  double reward = 0.0;
  SentimentScore sentiment;
  std::string belief_top_state;
  double belief_top_probability = 0.0;
  int ncp = 0;
  bool accepted = true;

  friend bool operator==(const AgentTurn&, const AgentTurn&) = default;
};

inline bool operator==(const SentimentScore& a, const SentimentScore& b) {
  return a.compound == b.compound && a.neg == b.neg && a.neu == b.neu && a.pos == b.pos;
}

inline nlohmann::ordered_json to_json(const AgentTurn& t) {
  nlohmann::ordered_json j;
  j["reply"] = t.reply;
  j["action"] = t.action;
  j["emotion"] = t.emotion;
  j["crisp_x"] = t.crisp_x;
  j["level"] = t.level;
  j["mode"] = t.mode;
  j["reward"] = t.reward;
  j["sentiment"] = {{"compound", t.sentiment.compound}, {"neg", t.sentiment.neg}, {"neu", t.sentiment.neu},
                    {"pos", t.sentiment.pos}};
  j["belief_top"] = {{"state", t.belief_top_state}, {"probability", t.belief_top_probability}};
  j["ncp"] = t.ncp;
  j["accepted"] = t.accepted;
  return j;
}

// Rejects any candidate that left the probability simplex.
inline ValidationRule simplex_rule() {
  return {"belief stays on the probability simplex", [](const Belief&, const Belief& b, ObservationId) {
            double total = 0.0;
            for (double p : b.probs()) {
              if (!(p >= 0.0)) return false;
              total += p;
            }
            return std::abs(total - 1.0) <= kSimplexTolerance;
          }};
}

class Session {
 public:
  // Without an explicit table the session warm-starts per config.
  Session(std::shared_ptr<const EngineAssets> assets, EngineConfig config, std::uint64_t seed,
          std::optional<QTable> qtable = std::nullopt)
      : assets_(std::move(assets)),
        config_(std::move(config)),
        space_(assets_->ontology.size()),
        rng_(seed),
        history_(Belief::point_mass(kNumIntentions, StateId(static_cast<std::size_t>(Intention::WantsFeature)))),
        rules_{simplex_rule()} {
    config_.q.validate();
    if (qtable) {
      if (qtable->num_states() != space_.size() || qtable->num_actions() != kNumActs)
        throw ModelError("Q-table dimensions do not match the ontology");
      q_ = std::move(*qtable);
    } else if (config_.warm_start == "handcrafted") {
      q_ = handcrafted_qtable(space_, config_.warm_start_value);
    } else {
      q_ = QTable(space_.size(), kNumActs);
    }
    epsilon_ = config_.q.epsilon0;
    belief_ = history_.current();
    opening_ = start_customization(assets_->ontology, custom_).text;
    goal_reached_ = custom_.cursor.kind == Cursor::Kind::Done;
  }

  const std::string& opening() const { return opening_; }
  bool ended() const { return ended_; }
  bool goal_reached() const { return goal_reached_; }
  int turn() const { return turn_; }
  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  const Belief& belief() const { return belief_; }
  const BeliefHistory& history() const { return history_; }
  const QTable& qtable() const { return q_; }
  QTable release_qtable() { return std::move(q_); }
  const Customization& customization() const { return custom_; }
  const std::vector<AgentTurn>& transcript() const { return transcript_; }
  const StateSpace& state_space() const { return space_; }
  const EngineAssets& assets() const { return *assets_; }
  const EngineConfig& config() const { return config_; }
  DialogueObservation last_observation() const { return last_observation_; }
  DialogueAct last_action() const { return last_action_; }
  Emotion last_emotion() const { return last_emotion_; }
  // Q(s, a) for the pair chosen on the latest turn, after learning.
  double last_q_value() const { return last_q_value_; }
  void set_rules(std::vector<ValidationRule> rules) { rules_ = std::move(rules); }

  AgentTurn step(std::string_view utterance) {
    if (ended_) throw SessionEnded("the session has ended");
    const auto& onto = assets_->ontology;
    const auto& model = assets_->model;

    // (1) exit check
    const auto tokens = tokenize(utterance);
    const bool is_exit = tokens.size() == 1 && (tokens[0] == "exit" || tokens[0] == "quit");

    // (2) sentiment
    const SentimentScore score = score_utterance(utterance, assets_->lexicon);
    const SentimentClass sentiment = classify(score);
    ++turn_;

    // (3) observation
    const auto dist = interpret(utterance);
    const DialogueObservation obs = is_exit ? DialogueObservation::Exit : most_likely(dist);
    const ObservationId obs_id(static_cast<std::size_t>(obs));
    last_observation_ = obs;

    // (4)-(5) belief update, validation and history
    std::optional<Belief> candidate;
    try {
      candidate = update_belief(model, belief_, prev_act_id(), obs_id);
    } catch (const DegenerateObservation&) {
      candidate.reset();
    }
    const auto outcome = history_.validate_or_rollback(rules_, candidate, obs_id);
    history_.append(outcome.effective, prev_act_id(), obs_id, outcome.accepted);
    belief_ = outcome.effective;

    // (6)-(7) trend, level and mode
    TrendResult trend;
    bool have_signal = false;
    if (history_.size() >= 2) {
      trend = analyze_trend(history_.scalarized());
      have_signal = max_crossings(trend.dwt) > 0;
    }
    const KnowledgeLevel level = have_signal ? classify_level(trend.ncp_ratio) : KnowledgeLevel::Amateur;
    const ControlMode mode = select_mode(level);

    const Intention intention = static_cast<Intention>(belief_.top().value);
    const DiscreteState state{space_.slot_of(custom_.cursor), level, sentiment, intention};
    const std::size_t s = space_.encode(state);

    // (10) emotion
    const double x = defuzzify(fuzzify(score.compound, trend.ncp_ratio), config_.famm);
    const Emotion emotion = crisp_emotion(x);
    last_emotion_ = emotion;

    AgentTurn out;
    out.emotion = to_string(emotion);
    out.crisp_x = x;
    out.level = to_string(level);
    out.mode = to_string(mode);
    out.sentiment = score;
    out.belief_top_state = to_string(intention);
    out.belief_top_probability = belief_.max_prob();
    out.ncp = trend.ncp;
    out.accepted = outcome.accepted;

    const bool was_done = goal_reached_;
    if (is_exit) {
      ended_ = true;
      const RewardSignal r = to_reward(sentiment, false, config_.reward);
      if (config_.learn && !was_done && prev_state_) update_q_terminal(q_, *prev_state_, prev_act_, r.value, config_.q);
      out.reply = onto.texts().farewell;
      last_action_ = DialogueAct::Confirm;
      out.action = to_string(last_action_);
      out.reward = r.value;
      last_q_value_ = prev_state_ ? q_.at(*prev_state_, prev_act_) : 0.0;
      transcript_.push_back(out);
      return out;
    }

    // (8) action
    const ActionId act_id = choose_action(q_, s, epsilon_, rng_);
    const auto act = static_cast<DialogueAct>(act_id.value);
    last_action_ = act;

    // (11) dialogue effect of the action; determines whether the goal is reached
    out.reply = apply(act, obs);
    const bool completes = !was_done && goal_reached_;

    // (9) learning: the reward grades the previous action; a goal-reaching
    // action also receives the terminal reward.
    const RewardSignal r = to_reward(sentiment, completes, config_.reward);
    if (config_.learn && !was_done) {
      if (prev_state_)
        update_q(q_, *prev_state_, prev_act_, to_reward(sentiment, false, config_.reward).value, s, config_.q);
      if (completes) update_q_terminal(q_, s, act_id, r.value, config_.q);
    }
    out.action = to_string(act);
    out.reward = r.value;
    last_q_value_ = q_.at(s, act_id);

    prev_state_ = s;
    prev_act_ = act_id;
    transcript_.push_back(out);
    return out;
  }

 private:
  ActionId prev_act_id() const { return prev_state_ ? prev_act_ : ActionId(static_cast<std::size_t>(DialogueAct::AdvancePrompt)); }

  std::string apply(DialogueAct act, DialogueObservation obs) {
    const auto& onto = assets_->ontology;
    if (custom_.cursor.kind == Cursor::Kind::Done) return onto.texts().completion;
    switch (act) {
      case DialogueAct::AdvancePrompt:
        if (obs == DialogueObservation::Affirm || obs == DialogueObservation::Deny) {
          const Prompt p = decide(onto, custom_, obs == DialogueObservation::Affirm);
          if (p.cursor.kind == Cursor::Kind::Done) goal_reached_ = true;
          return p.text;
        }
        return current_question(onto, custom_);
      case DialogueAct::GiveInfo: return current_info(onto, custom_);
      case DialogueAct::Confirm: return onto.texts().confirm_prefix + " " + current_question(onto, custom_);
      case DialogueAct::Clarify: return onto.texts().clarify;
    }
    return {};
  }

  std::shared_ptr<const EngineAssets> assets_;
  EngineConfig config_;
  StateSpace space_;
  Rng rng_;
  QTable q_;
  double epsilon_ = 0.0;
  Belief belief_;
  BeliefHistory history_;
  std::vector<ValidationRule> rules_;
  Customization custom_;
  std::string opening_;
  std::vector<AgentTurn> transcript_;
  int turn_ = 0;
  bool ended_ = false;
  bool goal_reached_ = false;
  std::optional<std::size_t> prev_state_;
  ActionId prev_act_;
  DialogueObservation last_observation_ = DialogueObservation::Unknown;
  DialogueAct last_action_ = DialogueAct::AdvancePrompt;
  Emotion last_emotion_ = Emotion::Neutral;
  double last_q_value_ = 0.0;
};

}  // namespace pdm
