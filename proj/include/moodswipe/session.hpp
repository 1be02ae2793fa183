#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "moodswipe/emotion.hpp"
#include "moodswipe/retrieval.hpp"

namespace moodswipe {

enum class EventKind : std::uint8_t {
  KeyPress,
  Spacebar,
  SwipeLeft,
  SwipeRight,
  Select,
  Send,
  ClassifyTrigger,
};

enum class TriggerReason : std::uint8_t { Spacebar, Pause };

std::string_view to_string(EventKind kind);
std::string_view to_string(TriggerReason reason);
EventKind parse_event_kind(std::string_view s);
TriggerReason parse_trigger_reason(std::string_view s);

struct SessionEvent {
  EventKind kind = EventKind::KeyPress;
  TimestampMs t = 0;
  std::string text;  // composer contents after the event
  std::string key;   // KeyPress only; one UTF-8 character
  TriggerReason reason = TriggerReason::Spacebar;  // ClassifyTrigger only
  // ClassifyTrigger only: swipe order of the payload shown after the trigger.
  std::optional<EmotionOrder> order;

  static SessionEvent key_press(TimestampMs t, std::string key, std::string text);
  static SessionEvent spacebar(TimestampMs t, std::string text);
  static SessionEvent trigger(TimestampMs t, TriggerReason reason, std::string text,
                              std::optional<EmotionOrder> order = std::nullopt);
  static SessionEvent simple(EventKind kind, TimestampMs t, std::string text = {});

  bool is_input() const { return kind == EventKind::KeyPress || kind == EventKind::Spacebar; }
  bool operator==(const SessionEvent&) const = default;
};

/// Timestamp went backwards within a session.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// derive_labels was handed a log that does not end in Send.
class IncompleteSession : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimingConfig {
  TimestampMs throttle_ms = 400;
  TimestampMs pause_ms = 500;
  TimestampMs dwell_ms = 3000;
  bool wrap_swipe = false;

  void validate() const;  // positive timings, throttle <= pause
};

enum class SwipeDirection : std::uint8_t { Left, Right };

/// Per-session composing state: trigger timing plus swipe tracking.
/// Pause detection is pulled: the owner calls check_pause from a timer,
/// or at pause_deadline() under a simulated clock.
class SessionState {
 public:
  explicit SessionState(TimingConfig timing = {});

  /// KeyPress or Spacebar. Returns the trigger a Spacebar fires, if any.
  std::optional<SessionEvent> on_input(const SessionEvent& event);

  /// Fires at most one pause trigger per idle period.
  std::optional<SessionEvent> check_pause(TimestampMs now);

  /// Earliest time check_pause would fire, given no further input.
  std::optional<TimestampMs> pause_deadline() const;

  /// A trigger's payload arrived: show it from position 0.
  void set_payload(const EmotionOrder& order, TimestampMs now);

  /// Returns false when there is no payload to swipe through.
  bool on_swipe(SwipeDirection direction, TimestampMs now);

  /// Feeds any logged event. ClassifyTrigger events record the trigger and,
  /// when they carry an order, install it as the payload.
  void replay(const SessionEvent& event);

  const std::string& current_text() const { return current_text_; }
  std::optional<TimestampMs> last_input_t() const { return last_input_t_; }
  std::optional<TimestampMs> last_trigger_t() const { return last_trigger_t_; }
  bool input_pending() const { return pending_; }
  const std::optional<EmotionOrder>& payload() const { return payload_; }
  std::size_t swipe_position() const { return position_; }
  TimestampMs dwell_start_t() const { return dwell_start_t_; }
  const TimingConfig& timing() const { return timing_; }

  /// Overrides the timing state directly; for restoring and for tests.
  void set_timing_state(std::optional<TimestampMs> last_input,
                        std::optional<TimestampMs> last_trigger, bool pending);

 private:
  void advance(TimestampMs t);
  bool throttle_allows(TimestampMs t) const;
  SessionEvent fire(TimestampMs t, TriggerReason reason);

  TimingConfig timing_;
  std::string current_text_;
  std::optional<TimestampMs> last_event_t_;
  std::optional<TimestampMs> last_input_t_;
  std::optional<TimestampMs> last_trigger_t_;
  bool pending_ = false;  // input arrived that no trigger has covered yet
  std::optional<EmotionOrder> payload_;
  std::size_t position_ = 0;
  TimestampMs dwell_start_t_ = 0;
};

enum class Provenance : std::uint8_t { Select, Swipe };
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

struct LabelRecord {
  std::string typed_text;
  Emotion emotion = Emotion::Neutral;
  Provenance provenance = Provenance::Select;
  TimestampMs typed_at = 0;
  TimestampMs labeled_at = 0;
  std::string session_id;

  bool operator==(const LabelRecord&) const = default;
};

/// Labels from one composition. The log must be time-ordered and end in
/// its only Send. Yields at most one record; Select wins over Swipe.
std::vector<LabelRecord> derive_labels(const std::vector<SessionEvent>& log,
                                       const std::string& session_id,
                                       const TimingConfig& timing = {});

// JSON-lines persistence. One event object per line.
std::string event_to_json(const SessionEvent& event);
SessionEvent event_from_json(std::string_view line);
void write_event_log(std::ostream& out, const std::vector<SessionEvent>& events);
std::vector<SessionEvent> read_event_log(std::istream& in);

// Label export: `label<TAB>text` lines for the classifier, plus one JSON
// object per record in a sidecar.
std::string label_line(const LabelRecord& record);
std::string label_meta_json(const LabelRecord& record);
LabelRecord label_from_meta_json(std::string_view line);

}  // namespace moodswipe
