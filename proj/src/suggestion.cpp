#include "moodswipe/suggestion.hpp"

#include "moodswipe/text.hpp"

namespace moodswipe {

EmotionOrder SwipePayload::order() const {
  EmotionOrder out{};
  for (std::size_t i = 0; i < out.size() && i < entries.size(); ++i) {
    out[i] = entries[i].emotion;
  }
  return out;
}

std::optional<Suggestion> Suggester::best(const std::vector<std::string>& query,
                                          std::optional<Emotion> filter) const {
  const auto hits = index_.search(query, 1, filter);
  if (hits.empty()) return std::nullopt;
  const Turn& turn = store_.turn(hits.front().turn);
  return Suggestion{turn.response.text, turn.response_emotion, turn.id, hits.front().score};
}

std::optional<Suggestion> Suggester::suggest_baseline(std::string_view received_text) const {
  return best(tokenize(received_text), std::nullopt);
}

std::optional<Suggestion> Suggester::suggest_with_emotion(std::string_view received_text,
                                                          Emotion emotion) const {
  return best(tokenize(received_text), emotion);
}

SwipePayload Suggester::build_swipe_payload(std::string_view received_text,
                                            const EmotionPrediction& typed_prediction) const {
  SwipePayload payload{typed_prediction, {}};
  const auto tokens = tokenize(received_text);
  for (Emotion e : rank_emotions(typed_prediction)) {
    payload.entries.push_back({e, tokens.empty() ? std::nullopt : best(tokens, e)});
  }
  return payload;
}

}  // namespace moodswipe
