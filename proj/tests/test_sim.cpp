#include <gtest/gtest.h>

#include <sstream>

#include "pomdp_dm/sim.hpp"
#include "replay.hpp"

using namespace pdm;
using testsupport::shipped_assets;

namespace {

const UserProfile& profile(const std::string& name) {
  static const auto all = default_profiles();
  for (const auto& p : all)
    if (p.name == name) return p;
  throw std::runtime_error("no profile " + name);
}

PromptContext node_ctx() { return {Cursor::Kind::Node, "sort-books", "sorting"}; }

std::shared_ptr<const EngineAssets> small_assets() {
  const auto& base = *shipped_assets();
  return std::make_shared<const EngineAssets>(parse_ontology(R"({"nodes": [
      {"id": "r", "kind": "required", "children": ["a", "b", "c", "d"]},
      {"id": "a", "name": "alpha"}, {"id": "b", "name": "beta"},
      {"id": "c", "name": "gamma"}, {"id": "d", "name": "delta"}]})"),
                                              base.model, base.lexicon);
}

}  // namespace

TEST(Profiles, ShippedFileMatchesDefaults) {
  const auto loaded = load_profiles(testsupport::assets_dir() + "/profiles.json");
  const auto defaults = default_profiles();
  ASSERT_EQ(loaded.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(loaded[i].name, defaults[i].name);
    EXPECT_EQ(loaded[i].level_target, defaults[i].level_target);
    EXPECT_EQ(loaded[i].p_request_info, defaults[i].p_request_info);
    EXPECT_EQ(loaded[i].p_offscript, defaults[i].p_offscript);
    EXPECT_EQ(loaded[i].p_negative_sentiment, defaults[i].p_negative_sentiment);
  }
  EXPECT_NO_THROW(check_profile_order(defaults));
  auto noisy = defaults;
  noisy[1].p_offscript = 0.5;  // Professional noisier than Amateur
  EXPECT_THROW(check_profile_order(noisy), ModelError);
}

TEST(Profiles, RejectsInvalidProbabilities) {
  UserProfile p = profile("Novice");
  p.p_offscript = 0.7;
  p.p_request_info = 0.5;
  EXPECT_THROW(p.validate(), ModelError);
  p = profile("Novice");
  p.p_negative_sentiment = -0.1;
  EXPECT_THROW(p.validate(), ModelError);
}

TEST(SimulateTurn, NoviceFrequenciesNearConfigured) {
  const auto& p = profile("Novice");
  Rng rng(42);
  Agenda agenda;
  int info = 0, off = 0, neg = 0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    const auto u = simulate_turn(p, node_ctx(), agenda, rng);
    info += u.kind == UtteranceKind::RequestInfo;
    off += u.kind == UtteranceKind::Offscript;
    neg += u.negative;
  }
  EXPECT_NEAR(info / double(n), p.p_request_info, 0.07);
  EXPECT_NEAR(off / double(n), p.p_offscript, 0.07);
  EXPECT_NEAR(neg / double(n), p.p_negative_sentiment, 0.07);
}

TEST(SimulateTurn, ExpertIsAlwaysOnScript) {
  Rng rng(1);
  Agenda agenda{{"sort-books"}};
  for (int i = 0; i < 1000; ++i) {
    const auto u = simulate_turn(profile("Expert"), node_ctx(), agenda, rng);
    EXPECT_EQ(u.kind, UtteranceKind::Answer);
    EXPECT_FALSE(u.negative);
    EXPECT_EQ(u.text, "Yes, please add sorting.");
  }
}

TEST(SimulateTurn, AlwaysOffscript) {
  UserProfile p = profile("Expert");
  p.p_offscript = 1.0;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(simulate_turn(p, node_ctx(), {}, rng).kind, UtteranceKind::Offscript);
}

TEST(SimulatedUser, TemplatesAreReadAsIntended) {
  // Every template must produce the observation and sentiment it stands for.
  const auto& lex = shipped_assets()->lexicon;
  const UtteranceTemplates t;
  auto obs = [](const std::string& s) { return most_likely(interpret(s)); };
  auto cls = [&](const std::string& s) { return classify(score_utterance(s, lex)); };
  for (const auto& name : {std::string("sorting"), std::string("keyword search")}) {
    EXPECT_EQ(obs(fill(t.affirm, name)), DialogueObservation::Affirm);
    EXPECT_EQ(obs(fill(t.negative_affirm, name)), DialogueObservation::Affirm);
    EXPECT_EQ(obs(fill(t.deny, name)), DialogueObservation::Deny);
    EXPECT_EQ(obs(fill(t.negative_deny, name)), DialogueObservation::Deny);
    EXPECT_EQ(obs(fill(t.info, name)), DialogueObservation::RequestInfo);
    EXPECT_EQ(obs(fill(t.negative_info, name)), DialogueObservation::RequestInfo);
    EXPECT_EQ(cls(fill(t.negative_affirm, name)), SentimentClass::Negative);
    EXPECT_EQ(cls(fill(t.negative_deny, name)), SentimentClass::Negative);
    EXPECT_EQ(cls(fill(t.negative_info, name)), SentimentClass::Negative);
    EXPECT_NE(cls(fill(t.affirm, name)), SentimentClass::Negative);
    EXPECT_NE(cls(fill(t.deny, name)), SentimentClass::Negative);
    EXPECT_NE(cls(fill(t.info, name)), SentimentClass::Negative);
  }
  EXPECT_EQ(obs(t.brief_affirm), DialogueObservation::Affirm);
  EXPECT_EQ(obs(t.brief_deny), DialogueObservation::Deny);
  for (const auto& s : t.offscript) EXPECT_EQ(obs(s), DialogueObservation::Unknown);
  EXPECT_EQ(obs(t.negative_offscript), DialogueObservation::Unknown);
  EXPECT_EQ(cls(t.negative_offscript), SentimentClass::Negative);
  EXPECT_EQ(cls(t.negative_review), SentimentClass::Negative);
}

TEST(SimulatedUser, UnaddressedNeedIsRepeatedNegatively) {
  UserProfile p = profile("Expert");
  p.p_request_info = 1.0;
  SimulatedUser user(p, {}, Rng(1));
  const auto first = user.respond(node_ctx(), std::nullopt);
  EXPECT_EQ(first.kind, UtteranceKind::RequestInfo);
  const auto second = user.respond(node_ctx(), DialogueAct::Clarify);
  EXPECT_EQ(second.kind, UtteranceKind::RequestInfo);
  EXPECT_TRUE(second.negative);
  const auto third = user.respond(node_ctx(), DialogueAct::GiveInfo);
  EXPECT_FALSE(third.negative);
}

TEST(SimulatedUser, FirstConfirmGetsBriefAnswerThenAnnoyance) {
  SimulatedUser user(profile("Expert"), {{"sort-books"}}, Rng(1));
  user.respond(node_ctx(), std::nullopt);
  const auto brief = user.respond(node_ctx(), DialogueAct::Confirm);
  EXPECT_EQ(brief.text, "Yes, please.");
  EXPECT_FALSE(brief.negative);
  const auto annoyed = user.respond(node_ctx(), DialogueAct::Confirm);
  EXPECT_TRUE(annoyed.negative);
}

TEST(Agenda, NeverWantsConflictingPair) {
  const auto& o = shipped_assets()->ontology;
  Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    const auto a = sample_agenda(o, rng, 0.9);
    EXPECT_FALSE(a.wants("broad-match") && a.wants("exact-match"));
    for (const auto& id : a.wanted) EXPECT_NE(o.node(o.index_of(id)).kind, NodeKind::Required);
  }
}

TEST(Episode, ExpertOnSmallOntologyAnswersOncePerFeaturePlusReview) {
  const auto assets = small_assets();
  SimConfig cfg;
  cfg.q.epsilon0 = 0.0;
  cfg.q.epsilon_min = 0.0;
  const auto report = run_experiment(assets, {profile("Expert")}, 20, 7, cfg);
  for (const auto& e : report.profiles[0].episodes) {
    EXPECT_TRUE(e.success);
    EXPECT_EQ(e.length, static_cast<int>(assets->ontology.decidable_count()) + 1);
  }
}

TEST(Experiment, DeterministicAndOrdered) {
  const auto a = run_experiment(shipped_assets(), default_profiles(), 20, 42);
  const auto b = run_experiment(shipped_assets(), default_profiles(), 20, 42);
  ASSERT_EQ(a.profiles.size(), 4u);
  std::ostringstream ca, cb;
  write_metrics_csv(ca, a);
  write_metrics_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.profiles[0].profile, "Expert");
  EXPECT_EQ(a.profiles[3].profile, "Novice");
  EXPECT_EQ(a.average.profile, "Average");
  double acc = 0;
  for (const auto& m : a.profiles) acc += m.accuracy_pct / 4;
  EXPECT_DOUBLE_EQ(a.average.accuracy_pct, acc);
  const auto c = run_experiment(shipped_assets(), default_profiles(), 20, 43);
  EXPECT_NE(to_json(a).dump(), to_json(c).dump());
}

TEST(Experiment, MetricsWithinBounds) {
  SimConfig cfg;
  cfg.collect_traces = true;
  const auto r = run_experiment(shipped_assets(), default_profiles(), 30, 5, cfg);
  for (const auto& m : r.profiles) {
    EXPECT_GE(m.accuracy_pct, 0.0);
    EXPECT_LE(m.accuracy_pct, 100.0);
    EXPECT_GE(m.neutral_positive_pct, 0.0);
    EXPECT_LE(m.neutral_positive_pct, 100.0);
    EXPECT_LE(m.avg_dialogue_length, cfg.turn_cap);
    for (const auto& e : m.episodes) {
      EXPECT_LE(e.turns, cfg.turn_cap);
      EXPECT_LE(e.neutral_positive_turns, e.turns);
    }
  }
  std::size_t turns = 0;
  for (const auto& m : r.profiles)
    for (const auto& e : m.episodes) turns += static_cast<std::size_t>(e.turns);
  EXPECT_EQ(r.traces.size(), turns);
}

TEST(Improvement, IdenticalPoliciesShowNoDifference) {
  const auto assets = shipped_assets();
  const auto q = handcrafted_qtable(StateSpace(assets->ontology.size()), 1.0);
  const auto& p = profile("Amateur");
  const auto a = evaluate_policy(assets, p, 2, q, 0.0, 30, 9);
  const auto b = evaluate_policy(assets, p, 2, q, 0.0, 30, 9);
  EXPECT_EQ(a.mean_return, b.mean_return);
  EXPECT_EQ(a.avg_dialogue_length, b.avg_dialogue_length);
}

TEST(Improvement, ReportRowsFollowProfileOrder) {
  const auto assets = small_assets();
  ImprovementConfig ic;
  ic.training.episodes = 50;
  ic.eval_episodes = 10;
  ic.seed = 3;
  const auto rows =
      policy_improvement_report(assets, default_profiles(), handcrafted_qtable(StateSpace(assets->ontology.size()), 1.0), ic);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].profile, "Expert");
  EXPECT_EQ(rows[4].profile, "Average");
  std::ostringstream out;
  write_improvement_csv(out, rows);
  const std::string csv = out.str();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}
