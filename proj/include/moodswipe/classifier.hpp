#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "moodswipe/cnn.hpp"
#include "moodswipe/emotion.hpp"

namespace moodswipe {

struct LabeledExample {
  std::string text;
  Emotion label = Emotion::Neutral;
};

struct LabeledCorpus {
  std::vector<LabeledExample> examples;
  std::size_t malformed_lines = 0;
  std::size_t empty_texts = 0;  // excluded: no tokens
};

/// Reads `label<TAB>text` lines. Lines with an unknown label or missing
/// text are counted and skipped; texts that tokenize to nothing are
/// excluded.
LabeledCorpus read_labeled_corpus(std::istream& in);
LabeledCorpus read_labeled_corpus(const std::filesystem::path& path);

void write_labeled_corpus(std::ostream& out,
                          const std::vector<LabeledExample>& examples);

struct SplitRatios {
  double train = 0.7;
  double valid = 0.1;
  double test = 0.2;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> valid;
  std::vector<LabeledExample> test;
};

/// Deterministic stratified partition. Validation and test sizes are
/// n * ratio rounded half up; train takes the remainder. Each class is
/// shuffled and spread evenly over the concatenated order, so every
/// contiguous slice keeps the class proportions to within one example.
DatasetSplit split_dataset(const std::vector<LabeledExample>& examples,
                           const SplitRatios& ratios, std::uint64_t seed);

struct TrainConfig {
  std::size_t embedding_dim = 64;
  std::size_t max_length = 40;
  double learning_rate = 1e-3;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 20170801;
  double keep_prob = 0.5;
  /// Reject training sets that miss one of the 7 classes.
  bool require_all_classes = true;

  // Adam.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0;
  double train_accuracy = 0;
  // Training-set values when there is no validation set.
  double valid_accuracy = 0;
  double valid_loss = 0;
};

struct TrainResult {
  EmotionClassifier model;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EpochCallback =
    std::function<void(const EpochStats&, const EmotionClassifier&)>;

/// Mini-batch Adam on mean cross-entropy. The vocabulary comes from the
/// training examples only. Returns the parameters of the epoch with the
/// best validation accuracy; equal accuracies go to the lower validation
/// loss.
///
/// Throws TrainingError when a class has no training example or when the
/// loss becomes non-finite.
TrainResult train(const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& valid_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Builds the vocabulary used by train().
Vocabulary build_vocabulary(const std::vector<LabeledExample>& examples);

struct ClassAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

struct ClassificationReport {
  // Only classes present in the evaluated set.
  std::map<Emotion, ClassAccuracy> per_class;
  ClassAccuracy overall;
};

using EmotionPredictor = std::function<Emotion(const std::string&)>;

/// Top-1 accuracy per class. Throws std::invalid_argument on an empty set.
ClassificationReport evaluate(const EmotionPredictor& predictor,
                              const std::vector<LabeledExample>& test_set);
ClassificationReport evaluate(const EmotionClassifier& model,
                              const std::vector<LabeledExample>& test_set);

std::string format_report(const ClassificationReport& report);

// Model files: header {magic, version, scalar bytes, d, L, |V|}, the
// vocabulary, then every parameter tensor as little-endian doubles.
inline constexpr std::uint32_t kModelFormatVersion = 1;

class ModelFormatError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, VersionMismatch, Corrupt, Io };
  ModelFormatError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

void save_model(const EmotionClassifier& model, std::ostream& out);
void save_model(const EmotionClassifier& model, const std::filesystem::path& path);
EmotionClassifier load_model(std::istream& in);
EmotionClassifier load_model(const std::filesystem::path& path);

}  // namespace moodswipe
