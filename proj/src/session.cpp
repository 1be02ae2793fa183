#include "moodswipe/session.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "moodswipe/text.hpp"

namespace moodswipe {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "KeyPress", "Spacebar", "SwipeLeft", "SwipeRight", "Select", "Send", "ClassifyTrigger"};

}  // namespace

std::string_view to_string(EventKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

std::string_view to_string(TriggerReason reason) {
  return reason == TriggerReason::Spacebar ? "spacebar" : "pause";
}

EventKind parse_event_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<EventKind>(i);
  }
  throw ValidationError("unknown event kind: " + std::string(s));
}

TriggerReason parse_trigger_reason(std::string_view s) {
  if (s == "spacebar") return TriggerReason::Spacebar;
  if (s == "pause") return TriggerReason::Pause;
  throw ValidationError("unknown trigger reason: " + std::string(s));
}

std::string_view to_string(Provenance p) { return p == Provenance::Select ? "Select" : "Swipe"; }

Provenance parse_provenance(std::string_view s) {
  if (s == "Select") return Provenance::Select;
  if (s == "Swipe") return Provenance::Swipe;
  throw ValidationError("unknown provenance: " + std::string(s));
}

SessionEvent SessionEvent::key_press(TimestampMs t, std::string key, std::string text) {
  SessionEvent e = simple(EventKind::KeyPress, t, std::move(text));
  e.key = std::move(key);
  return e;
}

SessionEvent SessionEvent::spacebar(TimestampMs t, std::string text) {
  return simple(EventKind::Spacebar, t, std::move(text));
}

SessionEvent SessionEvent::trigger(TimestampMs t, TriggerReason reason, std::string text,
                                   std::optional<EmotionOrder> order) {
  SessionEvent e = simple(EventKind::ClassifyTrigger, t, std::move(text));
  e.reason = reason;
  e.order = order;
  return e;
}

SessionEvent SessionEvent::simple(EventKind kind, TimestampMs t, std::string text) {
  SessionEvent e;
  e.kind = kind;
  e.t = t;
  e.text = std::move(text);
  return e;
}

void TimingConfig::validate() const {
  if (throttle_ms <= 0 || pause_ms <= 0 || dwell_ms <= 0) {
    throw ValidationError("trigger timings must be positive");
  }
  if (throttle_ms > pause_ms) throw ValidationError("throttle_ms must not exceed pause_ms");
}

SessionState::SessionState(TimingConfig timing) : timing_(timing) { timing_.validate(); }

void SessionState::advance(TimestampMs t) {
  if (last_event_t_ && t < *last_event_t_) {
    throw ProtocolError("event at t=" + std::to_string(t) + " precedes t=" +
                        std::to_string(*last_event_t_));
  }
  last_event_t_ = t;
}

bool SessionState::throttle_allows(TimestampMs t) const {
  return !last_trigger_t_ || t - *last_trigger_t_ >= timing_.throttle_ms;
}

SessionEvent SessionState::fire(TimestampMs t, TriggerReason reason) {
  last_trigger_t_ = t;
  pending_ = false;
  return SessionEvent::trigger(t, reason, current_text_);
}

std::optional<SessionEvent> SessionState::on_input(const SessionEvent& event) {
  if (!event.is_input()) throw std::invalid_argument("on_input takes KeyPress or Spacebar");
  advance(event.t);
  current_text_ = event.text;
  last_input_t_ = event.t;
  pending_ = true;
  if (event.kind == EventKind::Spacebar && throttle_allows(event.t)) {
    return fire(event.t, TriggerReason::Spacebar);
  }
  return std::nullopt;
}

std::optional<TimestampMs> SessionState::pause_deadline() const {
  if (!pending_ || !last_input_t_) return std::nullopt;
  TimestampMs at = *last_input_t_ + timing_.pause_ms;
  if (last_trigger_t_) at = std::max(at, *last_trigger_t_ + timing_.throttle_ms);
  return at;
}

std::optional<SessionEvent> SessionState::check_pause(TimestampMs now) {
  if (last_event_t_ && now < *last_event_t_) return std::nullopt;
  const auto deadline = pause_deadline();
  if (!deadline || now < *deadline) return std::nullopt;
  last_event_t_ = now;
  return fire(now, TriggerReason::Pause);
}

void SessionState::set_payload(const EmotionOrder& order, TimestampMs now) {
  payload_ = order;
  position_ = 0;
  dwell_start_t_ = now;
}

bool SessionState::on_swipe(SwipeDirection direction, TimestampMs now) {
  advance(now);
  if (!payload_) return false;
  constexpr std::size_t last = kNumEmotions - 1;
  if (direction == SwipeDirection::Right) {
    position_ = position_ < last ? position_ + 1 : (timing_.wrap_swipe ? 0 : last);
  } else {
    position_ = position_ > 0 ? position_ - 1 : (timing_.wrap_swipe ? last : 0);
  }
  dwell_start_t_ = now;
  return true;
}

void SessionState::replay(const SessionEvent& event) {
  switch (event.kind) {
    case EventKind::KeyPress:
    case EventKind::Spacebar:
      advance(event.t);
      current_text_ = event.text;
      last_input_t_ = event.t;
      pending_ = true;
      break;
    case EventKind::ClassifyTrigger:
      advance(event.t);
      last_trigger_t_ = event.t;
      pending_ = false;
      if (event.order) set_payload(*event.order, event.t);
      break;
    case EventKind::SwipeLeft:
      on_swipe(SwipeDirection::Left, event.t);
      break;
    case EventKind::SwipeRight:
      on_swipe(SwipeDirection::Right, event.t);
      break;
    case EventKind::Select:
    case EventKind::Send:
      advance(event.t);
      current_text_ = event.text;
      break;
  }
}

void SessionState::set_timing_state(std::optional<TimestampMs> last_input,
                                    std::optional<TimestampMs> last_trigger, bool pending) {
  last_input_t_ = last_input;
  last_trigger_t_ = last_trigger;
  pending_ = pending;
  last_event_t_ = std::max(last_input.value_or(0), last_trigger.value_or(0));
}

std::vector<LabelRecord> derive_labels(const std::vector<SessionEvent>& log,
                                       const std::string& session_id,
                                       const TimingConfig& timing) {
  if (log.empty() || log.back().kind != EventKind::Send) {
    throw IncompleteSession("session " + session_id + " does not end in Send");
  }
  SessionState state(timing);
  std::string payload_text;  // typed text the shown payload was computed for
  TimestampMs payload_t = 0;
  std::optional<LabelRecord> selected;

  for (std::size_t i = 0; i < log.size(); ++i) {
    const SessionEvent& e = log[i];
    if (e.kind == EventKind::Send && i + 1 != log.size()) {
      throw ProtocolError("session " + session_id + " has events after Send");
    }
    state.replay(e);
    if (e.kind == EventKind::ClassifyTrigger && e.order) {
      payload_text = e.text;
      payload_t = e.t;
    }
    if (e.kind == EventKind::Select && state.payload()) {
      selected = LabelRecord{payload_text, (*state.payload())[state.swipe_position()],
                             Provenance::Select, payload_t, e.t, session_id};
    }
  }

  std::vector<LabelRecord> out;
  const TimestampMs send_t = log.back().t;
  std::optional<LabelRecord> record = selected;
  if (!selected && state.payload() && state.swipe_position() != 0 &&
      send_t - state.dwell_start_t() >= timing.dwell_ms) {
    record = LabelRecord{payload_text, (*state.payload())[state.swipe_position()],
                         Provenance::Swipe, payload_t, send_t, session_id};
  }
  if (record && !tokenize(record->typed_text).empty()) out.push_back(std::move(*record));
  return out;
}

std::string event_to_json(const SessionEvent& event) {
  ordered_json j;
  j["kind"] = to_string(event.kind);
  j["t"] = event.t;
  j["text"] = event.text;
  if (event.kind == EventKind::KeyPress) j["key"] = event.key;
  if (event.kind == EventKind::ClassifyTrigger) {
    j["reason"] = to_string(event.reason);
    if (event.order) {
      auto& order = j["order"] = ordered_json::array();
      for (Emotion e : *event.order) order.push_back(to_string(e));
    }
  }
  return j.dump();
}

namespace {

EmotionOrder parse_order(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.size() != kNumEmotions) {
    throw ValidationError("order must list all 7 emotions");
  }
  EmotionOrder order{};
  std::array<bool, kNumEmotions> seen{};
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    const auto e = arr[i].is_string() ? parse_emotion(arr[i].get<std::string>()) : std::nullopt;
    if (!e || seen[code(*e)]) throw ValidationError("order is not a permutation of emotions");
    seen[code(*e)] = true;
    order[i] = *e;
  }
  return order;
}

}  // namespace

SessionEvent event_from_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("event is not a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ValidationError("event needs a kind");
  if (!j.contains("t") || !j["t"].is_number_integer()) {
    throw ValidationError("event needs an integer t");
  }
  SessionEvent e;
  e.kind = parse_event_kind(j["kind"].get<std::string>());
  e.t = j["t"].get<TimestampMs>();
  if (j.contains("text")) {
    if (!j["text"].is_string()) throw ValidationError("text must be a string");
    e.text = j["text"].get<std::string>();
  }
  if (e.kind == EventKind::KeyPress && j.contains("key")) {
    if (!j["key"].is_string()) throw ValidationError("key must be a string");
    e.key = j["key"].get<std::string>();
  }
  if (e.kind == EventKind::ClassifyTrigger) {
    if (j.contains("reason")) {
      if (!j["reason"].is_string()) throw ValidationError("reason must be a string");
      e.reason = parse_trigger_reason(j["reason"].get<std::string>());
    }
    if (j.contains("order") && !j["order"].is_null()) e.order = parse_order(j["order"]);
  }
  return e;
}

void write_event_log(std::ostream& out, const std::vector<SessionEvent>& events) {
  for (const auto& e : events) out << event_to_json(e) << '\n';
}

std::vector<SessionEvent> read_event_log(std::istream& in) {
  std::vector<SessionEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    events.push_back(event_from_json(line));
  }
  return events;
}

std::string label_line(const LabelRecord& record) {
  return std::string(to_string(record.emotion)) + '\t' + sanitize_field(record.typed_text);
}

std::string label_meta_json(const LabelRecord& record) {
  ordered_json j;
  j["session_id"] = record.session_id;
  j["emotion"] = to_string(record.emotion);
  j["provenance"] = to_string(record.provenance);
  j["typed_at"] = record.typed_at;
  j["labeled_at"] = record.labeled_at;
  j["typed_text"] = record.typed_text;
  return j.dump();
}

LabelRecord label_from_meta_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("label meta is not an object");
  try {
    LabelRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    const auto e = parse_emotion(j.at("emotion").get<std::string>());
    if (!e) throw ValidationError("bad emotion in label meta");
    r.emotion = *e;
    r.provenance = parse_provenance(j.at("provenance").get<std::string>());
    r.typed_at = j.at("typed_at").get<TimestampMs>();
    r.labeled_at = j.at("labeled_at").get<TimestampMs>();
    r.typed_text = j.at("typed_text").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("label meta: ") + ex.what());
  }
}

}  // namespace moodswipe
