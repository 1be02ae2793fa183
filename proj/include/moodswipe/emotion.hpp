#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace moodswipe {

/// The closed 7-class emotion taxonomy. Integer codes are stable and define
/// the canonical order used for tie-breaking.
enum class Emotion : std::uint8_t {
  Anger = 0,
  Joy = 1,
  Sadness = 2,
  Fear = 3,
  Anticipation = 4,
  Tired = 5,
  Neutral = 6,
};

inline constexpr std::size_t kNumEmotions = 7;

inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::Anger,        Emotion::Joy,   Emotion::Sadness, Emotion::Fear,
    Emotion::Anticipation, Emotion::Tired, Emotion::Neutral,
};

using EmotionOrder = std::array<Emotion, kNumEmotions>;

constexpr std::size_t code(Emotion e) { return static_cast<std::size_t>(e); }

/// Inverse of code(). Throws std::out_of_range for codes >= 7.
Emotion emotion_from_code(std::size_t code);

std::string_view to_string(Emotion e);

/// Case-insensitive name lookup ("anger", "Joy", ...). Digits 0-6 are
/// accepted as codes.
std::optional<Emotion> parse_emotion(std::string_view name);

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  /// "#RRGGBB", upper case.
  std::string hex() const;
  /// Accepts "#RRGGBB" or "RRGGBB"; throws ValidationError otherwise.
  static Rgb from_hex(std::string_view text);

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Total, injective emotion -> color map.
class ColorMap {
 public:
  ColorMap();  // default palette

  /// Throws ValidationError unless all 7 colors differ.
  explicit ColorMap(const std::array<Rgb, kNumEmotions>& colors);

  const Rgb& color_of(Emotion e) const { return colors_[code(e)]; }

  /// Replaces one color. The map must stay injective; a duplicate color
  /// throws ValidationError and leaves the map unchanged.
  void set(Emotion e, const Rgb& color);

  friend bool operator==(const ColorMap&, const ColorMap&) = default;

 private:
  std::array<Rgb, kNumEmotions> colors_;
};

/// Color from the default palette.
Rgb color_of(Emotion e);

/// Probability distribution over the 7 emotions. Always normalized: every
/// constructor validates or normalizes.
class EmotionPrediction {
 public:
  static constexpr double kSumTolerance = 1e-6;

  /// Uniform 1/7.
  EmotionPrediction();

  /// Validates range [0,1] and sum 1 +- 1e-6; throws ValidationError.
  static EmotionPrediction from_probabilities(
      const std::array<double, kNumEmotions>& probs);

  /// Numerically stable softmax of raw scores.
  static EmotionPrediction from_logits(
      const std::array<double, kNumEmotions>& logits);

  static EmotionPrediction one_hot(Emotion e);

  double operator[](Emotion e) const { return probs_[code(e)]; }
  const std::array<double, kNumEmotions>& probabilities() const {
    return probs_;
  }
  Emotion top() const;

 private:
  explicit EmotionPrediction(const std::array<double, kNumEmotions>& p)
      : probs_(p) {}

  std::array<double, kNumEmotions> probs_;
};

/// Checks the EmotionPrediction invariants on a raw array.
void validate_distribution(const std::array<double, kNumEmotions>& probs);

/// All 7 emotions by probability descending; equal probabilities keep
/// canonical code order.
EmotionOrder rank_emotions(const EmotionPrediction& pred);

/// Same as above for a raw array; validates first.
EmotionOrder rank_emotions(const std::array<double, kNumEmotions>& probs);

}  // namespace moodswipe
