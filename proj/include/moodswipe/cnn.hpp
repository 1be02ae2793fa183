#pragma once

// Convolutional sentence classifier: embedding lookup, 1-D convolutions of
// widths 1..5 with 25 filters each, ReLU, max-over-time pooling, dropout on
// the pooled 125-vector, affine output layer and softmax over 7 emotions.
//
// Everything numeric is templated on the scalar type so the same code runs
// in double for gradient checking and in float when memory matters.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "moodswipe/emotion.hpp"
#include "moodswipe/text.hpp"

namespace moodswipe {

inline constexpr std::size_t kNumWidths = 5;
inline constexpr std::size_t kFiltersPerWidth = 25;
inline constexpr std::size_t kPooledSize = kNumWidths * kFiltersPerWidth;

struct CnnShape {
  std::size_t embedding_dim = 64;
  std::size_t max_length = 40;
  std::size_t vocab_size = 2;

  friend bool operator==(const CnnShape&, const CnnShape&) = default;
};

template <typename Scalar>
struct CnnParameters {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // One column per token id. Column PAD stays zero and is never updated.
  Matrix embedding;
  // filters[w - 1] is kFiltersPerWidth x (w * embedding_dim); a row is a
  // flattened w x d window, token-major.
  std::array<Matrix, kNumWidths> filters;
  std::array<Vector, kNumWidths> filter_bias;
  Matrix output_weight;  // 7 x 125
  Vector output_bias;    // 7

  static CnnParameters zeros(const CnnShape& shape) {
    CnnParameters p;
    const auto d = static_cast<Eigen::Index>(shape.embedding_dim);
    p.embedding = Matrix::Zero(d, static_cast<Eigen::Index>(shape.vocab_size));
    for (std::size_t w = 1; w <= kNumWidths; ++w) {
      p.filters[w - 1] =
          Matrix::Zero(kFiltersPerWidth, static_cast<Eigen::Index>(w) * d);
      p.filter_bias[w - 1] = Vector::Zero(kFiltersPerWidth);
    }
    p.output_weight = Matrix::Zero(kNumEmotions, kPooledSize);
    p.output_bias = Vector::Zero(kNumEmotions);
    return p;
  }

  /// Visits every tensor in a fixed order. The visitor receives a mutable
  /// (or const) dense block.
  template <typename F>
  void for_each_tensor(F&& f) {
    f(embedding);
    for (auto& m : filters) f(m);
    for (auto& v : filter_bias) f(v);
    f(output_weight);
    f(output_bias);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(embedding);
    for (const auto& m : filters) f(m);
    for (const auto& v : filter_bias) f(v);
    f(output_weight);
    f(output_bias);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  void set_zero() {
    for_each_tensor([](auto& t) { t.setZero(); });
  }

  friend bool operator==(const CnnParameters& a, const CnnParameters& b) {
    bool same = a.embedding.rows() == b.embedding.rows() &&
                a.embedding.cols() == b.embedding.cols() &&
                a.embedding == b.embedding && a.output_weight == b.output_weight &&
                a.output_bias == b.output_bias;
    for (std::size_t i = 0; same && i < kNumWidths; ++i) {
      same = a.filters[i] == b.filters[i] && a.filter_bias[i] == b.filter_bias[i];
    }
    return same;
  }
};

/// Intermediate values of one forward pass, kept for backprop.
template <typename Scalar>
struct CnnActivations {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<TokenId> ids;
  Matrix sequence;                   // d x L embedded tokens
  Vector pooled;                     // 125, after ReLU and max pooling
  std::array<std::size_t, kPooledSize> argmax{};
  Vector dropout_scale;              // 125; ones when dropout is off
  Vector probabilities;              // 7
};

template <typename Scalar>
class TextCnn {
 public:
  using Params = CnnParameters<Scalar>;
  using Activations = CnnActivations<Scalar>;
  using Matrix = typename Params::Matrix;
  using Vector = typename Params::Vector;

  TextCnn() = default;

  /// Zero parameters; vocabulary size fixes the embedding width.
  TextCnn(Vocabulary vocab, std::size_t embedding_dim, std::size_t max_length)
      : vocab_(std::move(vocab)) {
    if (embedding_dim == 0) throw std::invalid_argument("embedding_dim must be positive");
    if (max_length < kNumWidths) {
      throw std::invalid_argument("max_length must be at least the widest filter");
    }
    shape_ = {embedding_dim, max_length, vocab_.size()};
    params_ = Params::zeros(shape_);
  }

  TextCnn(Vocabulary vocab, const CnnShape& shape, Params params)
      : vocab_(std::move(vocab)), shape_(shape), params_(std::move(params)) {
    if (shape_.vocab_size != vocab_.size() ||
        static_cast<std::size_t>(params_.embedding.cols()) != vocab_.size() ||
        static_cast<std::size_t>(params_.embedding.rows()) != shape_.embedding_dim) {
      throw std::invalid_argument("parameter shapes do not match vocabulary");
    }
  }

  /// Glorot-uniform filters and output layer, uniform(-0.25, 0.25)
  /// embeddings, zero biases.
  template <typename Rng>
  void initialize(Rng& rng) {
    const auto d = static_cast<Scalar>(shape_.embedding_dim);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto fill = [&](Matrix& m, double limit) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          m(i, j) = static_cast<Scalar>(limit * unit(rng));
        }
      }
    };
    fill(params_.embedding, 0.25);
    params_.embedding.col(Vocabulary::kPad).setZero();
    for (std::size_t w = 1; w <= kNumWidths; ++w) {
      const double fan_in = static_cast<double>(w) * static_cast<double>(d);
      fill(params_.filters[w - 1],
           std::sqrt(6.0 / (fan_in + static_cast<double>(kFiltersPerWidth))));
      params_.filter_bias[w - 1].setZero();
    }
    fill(params_.output_weight,
         std::sqrt(6.0 / static_cast<double>(kPooledSize + kNumEmotions)));
    params_.output_bias.setZero();
  }

  const Vocabulary& vocabulary() const { return vocab_; }
  const CnnShape& shape() const { return shape_; }
  const Params& parameters() const { return params_; }
  Params& parameters() { return params_; }

  std::vector<TokenId> encode(std::string_view text) const {
    return vocab_.encode(text, shape_.max_length);
  }

  /// Forward pass over exactly max_length ids. With `keep_prob` < 1 and an
  /// rng, applies inverted dropout to the pooled vector.
  template <typename Rng = std::mt19937_64>
  void forward(const std::vector<TokenId>& ids, Activations& act,
               double keep_prob = 1.0, Rng* rng = nullptr) const {
    const auto d = static_cast<Eigen::Index>(shape_.embedding_dim);
    const auto len = static_cast<Eigen::Index>(shape_.max_length);
    if (ids.size() != shape_.max_length) {
      throw std::invalid_argument("token sequence must be padded to max_length");
    }
    act.ids = ids;
    act.sequence.resize(d, len);
    for (Eigen::Index t = 0; t < len; ++t) {
      act.sequence.col(t) = params_.embedding.col(ids[static_cast<std::size_t>(t)]);
    }

    act.pooled.resize(kPooledSize);
    for (std::size_t w = 1; w <= kNumWidths; ++w) {
      const Eigen::Index positions = len - static_cast<Eigen::Index>(w) + 1;
      // Window p is the contiguous span of columns p..p+w-1.
      Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> windows(
          act.sequence.data(), static_cast<Eigen::Index>(w) * d, positions,
          Eigen::OuterStride<>(d));
      const Matrix conv =
          (params_.filters[w - 1] * windows).colwise() + params_.filter_bias[w - 1];
      for (std::size_t f = 0; f < kFiltersPerWidth; ++f) {
        Eigen::Index best = 0;
        const Scalar peak = conv.row(static_cast<Eigen::Index>(f)).maxCoeff(&best);
        const std::size_t k = (w - 1) * kFiltersPerWidth + f;
        act.pooled[static_cast<Eigen::Index>(k)] = peak > Scalar(0) ? peak : Scalar(0);
        act.argmax[k] = static_cast<std::size_t>(best);
      }
    }

    act.dropout_scale = Vector::Ones(kPooledSize);
    if (keep_prob < 1.0 && rng != nullptr) {
      std::bernoulli_distribution keep(keep_prob);
      const auto inv = static_cast<Scalar>(1.0 / keep_prob);
      for (Eigen::Index k = 0; k < act.dropout_scale.size(); ++k) {
        act.dropout_scale[k] = keep(*rng) ? inv : Scalar(0);
      }
    }

    const Vector logits =
        params_.output_weight * act.pooled.cwiseProduct(act.dropout_scale) +
        params_.output_bias;
    act.probabilities = softmax(logits);
  }

  /// Adds scale * d(-log p[label]) / d(params) into `grads`, using the
  /// activations of the forward pass that produced `act`.
  void backward(const Activations& act, Emotion label, Scalar scale,
                Params& grads) const {
    const auto d = static_cast<Eigen::Index>(shape_.embedding_dim);
    Vector dlogits = act.probabilities;
    dlogits[static_cast<Eigen::Index>(code(label))] -= Scalar(1);
    dlogits *= scale;

    const Vector dropped = act.pooled.cwiseProduct(act.dropout_scale);
    grads.output_weight.noalias() += dlogits * dropped.transpose();
    grads.output_bias += dlogits;

    const Vector dpooled =
        (params_.output_weight.transpose() * dlogits).cwiseProduct(act.dropout_scale);

    for (std::size_t w = 1; w <= kNumWidths; ++w) {
      const auto wd = static_cast<Eigen::Index>(w) * d;
      for (std::size_t f = 0; f < kFiltersPerWidth; ++f) {
        const std::size_t k = (w - 1) * kFiltersPerWidth + f;
        const auto ki = static_cast<Eigen::Index>(k);
        if (act.pooled[ki] <= Scalar(0)) continue;  // ReLU gate
        const Scalar g = dpooled[ki];
        const std::size_t pos = act.argmax[k];
        Eigen::Map<const Vector> window(
            act.sequence.data() + static_cast<Eigen::Index>(pos) * d, wd);
        const auto fi = static_cast<Eigen::Index>(f);
        grads.filters[w - 1].row(fi) += g * window.transpose();
        grads.filter_bias[w - 1][fi] += g;
        for (std::size_t j = 0; j < w; ++j) {
          const TokenId id = act.ids[pos + j];
          if (id == Vocabulary::kPad) continue;
          grads.embedding.col(id) +=
              g * params_.filters[w - 1]
                      .row(fi)
                      .segment(static_cast<Eigen::Index>(j) * d, d)
                      .transpose();
        }
      }
    }
  }

  /// Mean cross-entropy over the examples, dropout off.
  Scalar loss(const std::vector<std::vector<TokenId>>& inputs,
              const std::vector<Emotion>& labels) const {
    Activations act;
    Scalar total = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      forward(inputs[i], act);
      total -= std::log(act.probabilities[static_cast<Eigen::Index>(code(labels[i]))]);
    }
    return total / static_cast<Scalar>(inputs.size());
  }

  /// Gradient of loss() with dropout off.
  Params gradient(const std::vector<std::vector<TokenId>>& inputs,
                  const std::vector<Emotion>& labels) const {
    Params grads = Params::zeros(shape_);
    Activations act;
    const Scalar scale = Scalar(1) / static_cast<Scalar>(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      forward(inputs[i], act);
      backward(act, labels[i], scale, grads);
    }
    return grads;
  }

  EmotionPrediction predict_ids(const std::vector<TokenId>& ids) const {
    Activations act;
    forward(ids, act);
    std::array<double, kNumEmotions> p{};
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
      p[i] = static_cast<double>(act.probabilities[static_cast<Eigen::Index>(i)]);
    }
    // Renormalize in double so float models still satisfy the sum check.
    double sum = 0;
    for (double v : p) sum += v;
    for (double& v : p) v /= sum;
    return EmotionPrediction::from_probabilities(p);
  }

  /// Empty or all-unknown text classifies as the all-PAD sequence.
  EmotionPrediction predict(std::string_view text) const {
    return predict_ids(encode(text));
  }

 private:
  static Vector softmax(const Vector& logits) {
    Vector e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
  }

  Vocabulary vocab_;
  CnnShape shape_;
  Params params_;
};

using EmotionClassifier = TextCnn<double>;

}  // namespace moodswipe
