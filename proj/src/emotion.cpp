#include "moodswipe/emotion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace moodswipe {

namespace {

constexpr std::array<std::string_view, kNumEmotions> kNames = {
    "Anger", "Joy", "Sadness", "Fear", "Anticipation", "Tired", "Neutral",
};

// Anger, Sadness and Fear are anchored to red, blue and green.
constexpr std::array<Rgb, kNumEmotions> kDefaultPalette = {{
    {0xFF, 0x00, 0x00},  // Anger
    {0xFF, 0xD4, 0x00},  // Joy
    {0x1E, 0x4F, 0xD8},  // Sadness
    {0x2E, 0xA0, 0x43},  // Fear
    {0xFF, 0x8C, 0x00},  // Anticipation
    {0x8B, 0x5A, 0x2B},  // Tired
    {0x9E, 0x9E, 0x9E},  // Neutral
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Emotion emotion_from_code(std::size_t c) {
  if (c >= kNumEmotions) throw std::out_of_range("emotion code out of range");
  return static_cast<Emotion>(c);
}

std::string_view to_string(Emotion e) { return kNames[code(e)]; }

std::optional<Emotion> parse_emotion(std::string_view name) {
  if (name.size() == 1 && name[0] >= '0' && name[0] <= '6') {
    return static_cast<Emotion>(name[0] - '0');
  }
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    if (iequals(name, kNames[i])) return static_cast<Emotion>(i);
  }
  return std::nullopt;
}

std::string Rgb::hex() const {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02X%02X%02X", r, g, b);
  return buf;
}

Rgb Rgb::from_hex(std::string_view text) {
  if (!text.empty() && text.front() == '#') text.remove_prefix(1);
  if (text.size() != 6) {
    throw ValidationError("color must be #RRGGBB: " + std::string(text));
  }
  std::array<std::uint8_t, 3> channels{};
  for (std::size_t i = 0; i < 3; ++i) {
    const int hi = hex_digit(text[2 * i]);
    const int lo = hex_digit(text[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw ValidationError("bad hex digit in color: " + std::string(text));
    }
    channels[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return {channels[0], channels[1], channels[2]};
}

ColorMap::ColorMap() : colors_(kDefaultPalette) {}

ColorMap::ColorMap(const std::array<Rgb, kNumEmotions>& colors) : colors_(colors) {
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    for (std::size_t j = i + 1; j < kNumEmotions; ++j) {
      if (colors_[i] == colors_[j]) {
        throw ValidationError(std::string(kNames[i]) + " and " + std::string(kNames[j]) +
                              " share color " + colors_[i].hex());
      }
    }
  }
}

void ColorMap::set(Emotion e, const Rgb& color) {
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    if (i != code(e) && colors_[i] == color) {
      throw ValidationError("color " + color.hex() + " already used by " +
                            std::string(kNames[i]));
    }
  }
  colors_[code(e)] = color;
}

Rgb color_of(Emotion e) { return kDefaultPalette[code(e)]; }

void validate_distribution(const std::array<double, kNumEmotions>& probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("probability outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > EmotionPrediction::kSumTolerance) {
    throw ValidationError("probabilities sum to " + std::to_string(sum));
  }
}

EmotionPrediction::EmotionPrediction() {
  probs_.fill(1.0 / static_cast<double>(kNumEmotions));
}

EmotionPrediction EmotionPrediction::from_probabilities(
    const std::array<double, kNumEmotions>& probs) {
  validate_distribution(probs);
  return EmotionPrediction(probs);
}

EmotionPrediction EmotionPrediction::from_logits(
    const std::array<double, kNumEmotions>& logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  std::array<double, kNumEmotions> p{};
  double z = 0.0;
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    p[i] = std::exp(logits[i] - max);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return EmotionPrediction(p);
}

EmotionPrediction EmotionPrediction::one_hot(Emotion e) {
  std::array<double, kNumEmotions> p{};
  p[code(e)] = 1.0;
  return EmotionPrediction(p);
}

Emotion EmotionPrediction::top() const { return rank_emotions(*this).front(); }

EmotionOrder rank_emotions(const EmotionPrediction& pred) {
  EmotionOrder order = kAllEmotions;
  const auto& p = pred.probabilities();
  std::stable_sort(order.begin(), order.end(), [&](Emotion a, Emotion b) {
    return p[code(a)] > p[code(b)];
  });
  return order;
}

EmotionOrder rank_emotions(const std::array<double, kNumEmotions>& probs) {
  return rank_emotions(EmotionPrediction::from_probabilities(probs));
}

}  // namespace moodswipe
