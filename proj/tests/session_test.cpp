#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "moodswipe/classifier.hpp"
#include "moodswipe/session.hpp"
#include "support/label_scripts.hpp"
#include "support/trigger_reference.hpp"

using namespace moodswipe;

namespace {

SessionEvent key(TimestampMs t) { return SessionEvent::key_press(t, "a", "a"); }
SessionEvent space(TimestampMs t) { return SessionEvent::spacebar(t, "a "); }

constexpr EmotionOrder kOrder = {Emotion::Joy,          Emotion::Sadness, Emotion::Anger,
                                 Emotion::Fear,         Emotion::Anticipation,
                                 Emotion::Tired,        Emotion::Neutral};

}  // namespace

TEST(TriggerTest, SpacebarFiresAfterThrottle) {
  SessionState s;
  s.set_timing_state(std::nullopt, 0, false);
  const auto trig = s.on_input(space(1000));
  ASSERT_TRUE(trig);
  EXPECT_EQ(trig->kind, EventKind::ClassifyTrigger);
  EXPECT_EQ(trig->reason, TriggerReason::Spacebar);
  EXPECT_EQ(trig->t, 1000);
  EXPECT_EQ(trig->text, "a ");
  EXPECT_EQ(s.last_trigger_t(), 1000);
}

TEST(TriggerTest, SecondSpacebarWithinThrottleSuppressed) {
  SessionState s;
  EXPECT_TRUE(s.on_input(space(1000)));
  EXPECT_FALSE(s.on_input(space(1300)));
  EXPECT_TRUE(s.on_input(space(1400)));
}

TEST(TriggerTest, KeyPressThenPause) {
  SessionState s;
  EXPECT_FALSE(s.on_input(key(0)));
  EXPECT_EQ(s.pause_deadline(), 500);
  EXPECT_FALSE(s.check_pause(499));
  const auto trig = s.check_pause(500);
  ASSERT_TRUE(trig);
  EXPECT_EQ(trig->reason, TriggerReason::Pause);
  EXPECT_FALSE(s.check_pause(1000));  // once per idle period
  EXPECT_FALSE(s.pause_deadline());
}

TEST(TriggerTest, PauseAtExactThresholds) {
  SessionState s;
  s.set_timing_state(0, 0, true);
  EXPECT_TRUE(s.check_pause(500));
}

TEST(TriggerTest, NoPauseWithoutNewInputSinceTrigger) {
  SessionState s;
  EXPECT_TRUE(s.on_input(space(0)));
  EXPECT_FALSE(s.check_pause(500));
  EXPECT_FALSE(s.check_pause(5000));
}

TEST(TriggerTest, PauseWaitsForThrottle) {
  SessionState s;
  s.set_timing_state(0, 200, true);
  EXPECT_EQ(s.pause_deadline(), 600);
  EXPECT_FALSE(s.check_pause(500));
  EXPECT_FALSE(s.check_pause(599));
  const auto trig = s.check_pause(600);
  ASSERT_TRUE(trig);
  EXPECT_EQ(trig->t, 600);
}

TEST(TriggerTest, SuppressedSpacebarLeavesInputPending) {
  SessionState s;
  EXPECT_TRUE(s.on_input(space(0)));
  EXPECT_FALSE(s.on_input(space(100)));
  EXPECT_TRUE(s.input_pending());
  EXPECT_EQ(s.pause_deadline(), 600);
}

TEST(TriggerTest, OutOfOrderInputIsProtocolError) {
  SessionState s;
  s.on_input(key(100));
  EXPECT_THROW(s.on_input(key(99)), ProtocolError);
  EXPECT_NO_THROW(s.on_input(key(100)));
}

TEST(TriggerTest, TimingValidation) {
  EXPECT_THROW(SessionState(TimingConfig{0, 500, 3000, false}), ValidationError);
  EXPECT_THROW(SessionState(TimingConfig{600, 500, 3000, false}), ValidationError);
  EXPECT_THROW(SessionState(TimingConfig{400, 500, -1, false}), ValidationError);
  EXPECT_NO_THROW(SessionState(TimingConfig{500, 500, 1, false}));
}

TEST(TriggerTest, MatchesReferenceOnRandomTimelines) {
  std::mt19937_64 rng(400500);
  for (int i = 0; i < 300; ++i) {
    const auto keys = oracle::random_timeline(rng);
    ASSERT_EQ(oracle::drive_state_machine(keys), oracle::reference_triggers(keys)) << i;
  }
}

TEST(TriggerTest, ThrottleAndOnePausePerIdleGap) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 300; ++i) {
    const auto keys = oracle::random_timeline(rng);
    const auto bad = oracle::timing_violation(keys, oracle::drive_state_machine(keys));
    EXPECT_FALSE(bad) << *bad;
  }
}

TEST(TriggerTest, PolledSchedulerFiresWithinOnePeriod) {
  SessionState s;
  s.on_input(key(0));
  s.on_input(key(130));
  std::optional<SessionEvent> fired;
  for (TimestampMs now = 200; !fired; now += 100) fired = s.check_pause(now);
  EXPECT_EQ(fired->t, 700);
}

TEST(SwipeTest, ClampedPositions) {
  SessionState s;
  EXPECT_FALSE(s.on_swipe(SwipeDirection::Right, 0));  // no payload yet
  EXPECT_EQ(s.swipe_position(), 0u);
  s.set_payload(kOrder, 10);
  EXPECT_TRUE(s.on_swipe(SwipeDirection::Right, 20));
  EXPECT_EQ(s.swipe_position(), 1u);
  EXPECT_EQ(s.dwell_start_t(), 20);
  s.on_swipe(SwipeDirection::Left, 30);
  s.on_swipe(SwipeDirection::Left, 40);
  EXPECT_EQ(s.swipe_position(), 0u);
  EXPECT_EQ(s.dwell_start_t(), 40);
  for (int i = 0; i < 10; ++i) s.on_swipe(SwipeDirection::Right, 50 + i);
  EXPECT_EQ(s.swipe_position(), 6u);
}

TEST(SwipeTest, WrapWhenConfigured) {
  SessionState s(TimingConfig{400, 500, 3000, true});
  s.set_payload(kOrder, 0);
  s.on_swipe(SwipeDirection::Left, 1);
  EXPECT_EQ(s.swipe_position(), 6u);
  s.on_swipe(SwipeDirection::Right, 2);
  EXPECT_EQ(s.swipe_position(), 0u);
}

TEST(SwipeTest, NewPayloadResetsPosition) {
  SessionState s;
  s.set_payload(kOrder, 0);
  s.on_swipe(SwipeDirection::Right, 10);
  s.set_payload(kOrder, 20);
  EXPECT_EQ(s.swipe_position(), 0u);
  EXPECT_EQ(s.dwell_start_t(), 20);
}

TEST(DeriveLabelsTest, ScriptedSessions) {
  for (const auto& script : oracle::label_scripts()) {
    EXPECT_EQ(derive_labels(script.events, script.session_id), script.expected)
        << script.session_id;
  }
}

TEST(DeriveLabelsTest, AtMostOneRecordAndSelectPrecedence) {
  for (const auto& script : oracle::label_scripts()) {
    const auto out = derive_labels(script.events, script.session_id);
    ASSERT_LE(out.size(), 1u);
    const bool has_select = std::any_of(script.events.begin(), script.events.end(),
                                        [](auto& e) { return e.kind == EventKind::Select; });
    if (!out.empty()) {
      EXPECT_GE(out[0].labeled_at, out[0].typed_at);
      EXPECT_FALSE(out[0].typed_text.empty());
      if (has_select) EXPECT_EQ(out[0].provenance, Provenance::Select);
    }
  }
}

TEST(DeriveLabelsTest, DwellThresholdIsConfigurable) {
  const auto script = oracle::label_scripts()[7];  // dwell of 2999ms
  EXPECT_TRUE(derive_labels(script.events, "x").empty());
  EXPECT_EQ(derive_labels(script.events, "x", TimingConfig{400, 500, 2000, false}).size(), 1u);
}

TEST(DeriveLabelsTest, IncompleteAndMalformedLogs) {
  EXPECT_THROW(derive_labels({}, "x"), IncompleteSession);
  auto events = oracle::label_scripts()[0].events;
  events.pop_back();
  EXPECT_THROW(derive_labels(events, "x"), IncompleteSession);

  auto twice = oracle::label_scripts()[0].events;
  twice.insert(twice.end() - 1, SessionEvent::simple(EventKind::Send, twice.back().t - 1));
  EXPECT_THROW(derive_labels(twice, "x"), ProtocolError);

  auto backwards = oracle::label_scripts()[0].events;
  backwards.back().t = 0;
  EXPECT_THROW(derive_labels(backwards, "x"), ProtocolError);
}

TEST(EventLogTest, JsonRoundTripAndReplay) {
  for (const auto& script : oracle::label_scripts()) {
    std::stringstream buf;
    write_event_log(buf, script.events);
    const auto back = read_event_log(buf);
    ASSERT_EQ(back, script.events);
    EXPECT_EQ(derive_labels(back, script.session_id), derive_labels(script.events, script.session_id));
  }
}

TEST(EventLogTest, JsonShape) {
  const auto e = SessionEvent::trigger(5, TriggerReason::Pause, "hi", kOrder);
  EXPECT_EQ(event_to_json(e),
            R"({"kind":"ClassifyTrigger","t":5,"text":"hi","reason":"pause","order":)"
            R"(["Joy","Sadness","Anger","Fear","Anticipation","Tired","Neutral"]})");
  EXPECT_EQ(event_to_json(SessionEvent::key_press(1, "x", "x")),
            R"({"kind":"KeyPress","t":1,"text":"x","key":"x"})");
}

TEST(EventLogTest, RejectsMalformedEvents) {
  EXPECT_THROW(event_from_json("not json"), ValidationError);
  EXPECT_THROW(event_from_json(R"({"t":1})"), ValidationError);
  EXPECT_THROW(event_from_json(R"({"kind":"Jump","t":1})"), ValidationError);
  EXPECT_THROW(event_from_json(R"({"kind":"Send","t":"1"})"), ValidationError);
  EXPECT_THROW(event_from_json(R"({"kind":"ClassifyTrigger","t":1,"reason":"idle"})"),
               ValidationError);
  EXPECT_THROW(event_from_json(R"({"kind":"ClassifyTrigger","t":1,"order":["Joy"]})"),
               ValidationError);
  EXPECT_THROW(
      event_from_json(R"({"kind":"ClassifyTrigger","t":1,"order":)"
                      R"(["Joy","Joy","Anger","Fear","Anticipation","Tired","Neutral"]})"),
      ValidationError);
  EXPECT_EQ(event_from_json(R"({"kind":"Send","t":7})").t, 7);
}

TEST(LabelExportTest, LinesReadBackAsTrainingData) {
  std::string lines;
  std::vector<LabelRecord> records;
  for (const auto& script : oracle::label_scripts()) {
    for (const auto& r : derive_labels(script.events, script.session_id)) {
      records.push_back(r);
      lines += label_line(r) + "\n";
    }
  }
  records.push_back({"tab\there\nnewline", Emotion::Fear, Provenance::Select, 1, 2, "z"});
  lines += label_line(records.back()) + "\n";

  std::istringstream in(lines);
  const auto corpus = read_labeled_corpus(in);
  EXPECT_EQ(corpus.malformed_lines, 0u);
  ASSERT_EQ(corpus.examples.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(corpus.examples[i].label, records[i].emotion);
  }
  EXPECT_EQ(corpus.examples.back().text, "tab here newline");
}

TEST(LabelExportTest, MetaRoundTrip) {
  const LabelRecord r{"why don't you come?", Emotion::Anger, Provenance::Swipe, 10, 4000, "s9"};
  EXPECT_EQ(label_from_meta_json(label_meta_json(r)), r);
  EXPECT_THROW(label_from_meta_json(R"({"session_id":"x"})"), ValidationError);
}
