#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moodswipe/cnn.hpp"
#include "moodswipe/emotion.hpp"
#include "moodswipe/retrieval.hpp"

namespace moodswipe {

struct Suggestion {
  std::string text;  // response text of the source turn
  Emotion emotion = Emotion::Neutral;
  TurnId source_turn = 0;
  double score = 0;

  std::string source_turn_id() const { return turn_label(source_turn); }
};

struct SwipeEntry {
  Emotion emotion = Emotion::Neutral;
  std::optional<Suggestion> suggestion;  // empty slot when nothing matches
};

struct SwipePayload {
  EmotionPrediction prediction;
  std::vector<SwipeEntry> entries;  // all 7 emotions in rank_emotions order

  EmotionOrder order() const;
};

/// Retrieval-based suggestions over an immutable turn store and index.
/// Both must outlive the Suggester.
class Suggester {
 public:
  Suggester(const TurnStore& store, const Bm25Index& index) : store_(store), index_(index) {}

  /// Response of the best-matching received message, emotion ignored.
  /// nullopt when no turn shares a term. Throws EmptyQuery for token-less
  /// input.
  std::optional<Suggestion> suggest_baseline(std::string_view received_text) const;

  /// Same retrieval restricted to turns whose response carries `emotion`.
  std::optional<Suggestion> suggest_with_emotion(std::string_view received_text,
                                                 Emotion emotion) const;

  /// One slot per emotion, ordered by the typed-text prediction. A
  /// token-less received text gives all-empty slots.
  SwipePayload build_swipe_payload(std::string_view received_text,
                                   const EmotionPrediction& typed_prediction) const;

  SwipePayload build_swipe_payload(std::string_view received_text,
                                   std::string_view typed_text,
                                   const EmotionClassifier& classifier) const {
    return build_swipe_payload(received_text, classifier.predict(typed_text));
  }

 private:
  std::optional<Suggestion> best(const std::vector<std::string>& query,
                                 std::optional<Emotion> filter) const;

  const TurnStore& store_;
  const Bm25Index& index_;
};

}  // namespace moodswipe
