#pragma once

// Scripted composing sessions with hand-written expected labels.

#include <string>
#include <vector>

#include "moodswipe/session.hpp"

namespace moodswipe::oracle {

struct LabelScript {
  std::string session_id;
  std::vector<SessionEvent> events;
  std::vector<LabelRecord> expected;
};

namespace detail {

using E = Emotion;
inline constexpr EmotionOrder kOrderA = {E::Joy, E::Sadness, E::Anger, E::Fear,
                                         E::Anticipation, E::Tired, E::Neutral};
inline constexpr EmotionOrder kOrderB = {E::Sadness, E::Anger, E::Joy, E::Tired,
                                         E::Fear, E::Neutral, E::Anticipation};

class Builder {
 public:
  explicit Builder(std::string id) : id_(std::move(id)) {}

  Builder& type(TimestampMs t, const std::string& s) {
    for (char c : s) {
      text_ += c;
      events_.push_back(c == ' ' ? SessionEvent::spacebar(t, text_)
                                 : SessionEvent::key_press(t, std::string(1, c), text_));
      t += 50;
    }
    return *this;
  }
  Builder& trigger(TimestampMs t, std::optional<EmotionOrder> order,
                   TriggerReason reason = TriggerReason::Pause) {
    events_.push_back(SessionEvent::trigger(t, reason, text_, order));
    return *this;
  }
  Builder& right(TimestampMs t) { return add(EventKind::SwipeRight, t); }
  Builder& left(TimestampMs t) { return add(EventKind::SwipeLeft, t); }
  Builder& select(TimestampMs t, const std::string& replacement) {
    text_ = replacement;
    return add(EventKind::Select, t);
  }
  Builder& send(TimestampMs t) { return add(EventKind::Send, t); }

  LabelScript expect(std::vector<LabelRecord> records) {
    for (auto& r : records) r.session_id = id_;
    return {id_, std::move(events_), std::move(records)};
  }

 private:
  Builder& add(EventKind kind, TimestampMs t) {
    events_.push_back(SessionEvent::simple(kind, t, text_));
    return *this;
  }

  std::string id_;
  std::string text_;
  std::vector<SessionEvent> events_;
};

inline LabelRecord rec(std::string text, Emotion e, Provenance p, TimestampMs typed,
                       TimestampMs labeled) {
  return {std::move(text), e, p, typed, labeled, {}};
}

}  // namespace detail

inline std::vector<LabelScript> label_scripts() {
  using namespace detail;
  using P = Provenance;
  std::vector<LabelScript> s;

  // select the top suggestion
  s.push_back(Builder("s01").type(0, "i am fine").trigger(900, kOrderA).select(1500, "Great!")
                  .send(2000).expect({rec("i am fine", E::Joy, P::Select, 900, 1500)}));
  // swipe to Sadness, select
  s.push_back(Builder("s02").type(0, "i am fine").trigger(900, kOrderA).right(1200)
                  .select(1600, "Sigh").send(1700)
                  .expect({rec("i am fine", E::Sadness, P::Select, 900, 1600)}));
  // swipe to Joy, dwell 4s, send without select
  s.push_back(Builder("s03").type(0, "see you").trigger(800, kOrderB).right(1000).right(1200)
                  .send(5200).expect({rec("see you", E::Joy, P::Swipe, 800, 5200)}));
  // type and send only
  s.push_back(Builder("s04").type(0, "ok").trigger(700, kOrderA).send(900).expect({}));
  // browse without stopping
  s.push_back(Builder("s05").type(0, "hmm").trigger(700, kOrderA).right(800).right(900)
                  .right(1000).send(2000).expect({}));
  // browse and come back to the top
  s.push_back(Builder("s06").type(0, "hmm").trigger(700, kOrderA).right(800).left(900)
                  .send(6000).expect({}));
  // dwell exactly at the threshold
  s.push_back(Builder("s07").type(0, "late again").trigger(900, kOrderA).right(1000)
                  .send(4000).expect({rec("late again", E::Sadness, P::Swipe, 900, 4000)}));
  // one millisecond short
  s.push_back(Builder("s08").type(0, "late again").trigger(900, kOrderA).right(1000)
                  .send(3999).expect({}));
  // Select wins over a later dwelling swipe
  s.push_back(Builder("s09").type(0, "why").trigger(600, kOrderA).right(700)
                  .select(800, "Because").right(900).send(9000)
                  .expect({rec("why", E::Sadness, P::Select, 600, 800)}));
  // the last Select counts
  s.push_back(Builder("s10").type(0, "why").trigger(600, kOrderA).select(700, "a").right(800)
                  .right(850).select(900, "b").send(1000)
                  .expect({rec("why", E::Anger, P::Select, 600, 900)}));
  // swipes before any payload are ignored
  s.push_back(Builder("s11").right(0).right(10).type(100, "yo").trigger(700, kOrderA)
                  .send(5000).expect({}));
  // a new payload resets the position
  s.push_back(Builder("s12").type(0, "hi").trigger(600, kOrderA).right(700).right(800)
                  .type(900, " you").trigger(1600, kOrderB).send(6000).expect({}));
  // label uses the latest payload
  s.push_back(Builder("s13").type(0, "hi").trigger(600, kOrderA).right(700)
                  .type(900, " you").trigger(1600, kOrderB).right(1700).send(5200)
                  .expect({rec("hi you", E::Anger, P::Swipe, 1600, 5200)}));
  // Select without a payload
  s.push_back(Builder("s14").type(0, "abc").select(300, "x").send(400).expect({}));
  // payload for blank text gives no usable label
  s.push_back(Builder("s15").type(0, "  ").trigger(600, kOrderA).select(700, "x").send(800)
                  .expect({}));
  // clamp at the last slot
  {
    Builder b("s16");
    b.type(0, "tired").trigger(800, kOrderA);
    for (int i = 0; i < 8; ++i) b.right(900 + i * 10);
    s.push_back(b.send(3970).expect({rec("tired", E::Neutral, P::Swipe, 800, 3970)}));
  }
  // clamp at the first slot
  s.push_back(Builder("s17").type(0, "wow").trigger(700, kOrderB).left(800).left(810)
                  .right(820).send(3820).expect({rec("wow", E::Anger, P::Swipe, 700, 3820)}));
  // a trigger that got no classification keeps the previous payload
  s.push_back(Builder("s18").type(0, "hey").trigger(700, kOrderA).type(800, " there")
                  .trigger(1600, std::nullopt).right(1700).select(1800, "x").send(1900)
                  .expect({rec("hey", E::Sadness, P::Select, 700, 1800)}));
  // spacebar-fired trigger, select in the middle of the bar
  s.push_back(Builder("s19").type(0, "not ").trigger(150, kOrderB, TriggerReason::Spacebar)
                  .type(200, "now!").trigger(1000, kOrderB).right(1100).right(1200).right(1300)
                  .select(1400, "fine").send(1500)
                  .expect({rec("not now!", E::Tired, P::Select, 1000, 1400)}));
  // select the last slot
  {
    Builder b("s20");
    b.type(0, "meh").trigger(700, kOrderB);
    for (int i = 0; i < 6; ++i) b.right(800 + i * 10);
    s.push_back(b.select(900, "z").send(950)
                    .expect({rec("meh", E::Anticipation, P::Select, 700, 900)}));
  }
  return s;
}

}  // namespace moodswipe::oracle
