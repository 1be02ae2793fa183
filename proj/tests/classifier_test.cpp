#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "moodswipe/classifier.hpp"

using namespace moodswipe;

namespace {

std::vector<LabeledExample> toy70() {
  return read_labeled_corpus(std::filesystem::path(MOODSWIPE_DATA_DIR) / "fixtures" /
                             "toy70.tsv")
      .examples;
}

std::vector<LabeledExample> synthetic_examples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> cls(0, kNumEmotions - 1);
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"example " + std::to_string(i), emotion_from_code(cls(rng))});
  }
  return out;
}

EmotionClassifier random_model(std::size_t d, std::size_t len, std::uint64_t seed,
                               const std::vector<std::string>& words) {
  Vocabulary vocab;
  for (const auto& w : words) vocab.add(w);
  EmotionClassifier model(std::move(vocab), d, len);
  std::mt19937_64 rng(seed);
  model.initialize(rng);
  // Non-zero biases so the gradient check exercises them away from zero.
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& b : model.parameters().filter_bias) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = n(rng);
  }
  for (Eigen::Index i = 0; i < model.parameters().output_bias.size(); ++i) {
    model.parameters().output_bias[i] = n(rng);
  }
  return model;
}

}  // namespace

TEST(LabeledCorpusTest, ParsesAndCountsBadLines) {
  std::istringstream in(
      "Joy\thello there\n"
      "anger\tgo away\r\n"
      "\n"
      "Happy\tnot a label\n"
      "no tab here\n"
      "Fear\t   \n");
  const auto corpus = read_labeled_corpus(in);
  ASSERT_EQ(corpus.examples.size(), 2u);
  EXPECT_EQ(corpus.examples[0].label, Emotion::Joy);
  EXPECT_EQ(corpus.examples[1].text, "go away");
  EXPECT_EQ(corpus.malformed_lines, 2u);
  EXPECT_EQ(corpus.empty_texts, 1u);
}

TEST(LabeledCorpusTest, ToyFixtureHasTenPerClass) {
  const auto examples = toy70();
  ASSERT_EQ(examples.size(), 70u);
  std::map<Emotion, int> counts;
  for (const auto& ex : examples) ++counts[ex.label];
  for (auto e : kAllEmotions) EXPECT_EQ(counts[e], 10);
}

TEST(SplitTest, TenExamplesSplitSevenOneTwo) {
  const auto split = split_dataset(synthetic_examples(10, 1), {}, 42);
  EXPECT_EQ(split.train.size(), 7u);
  EXPECT_EQ(split.valid.size(), 1u);
  EXPECT_EQ(split.test.size(), 2u);
}

TEST(SplitTest, FullLabeledSetSizes) {
  const auto split = split_dataset(synthetic_examples(8818, 3), {}, 42);
  EXPECT_EQ(split.train.size(), 6172u);
  EXPECT_EQ(split.valid.size(), 882u);
  EXPECT_EQ(split.test.size(), 1764u);
}

TEST(SplitTest, DeterministicForSeed) {
  const auto examples = synthetic_examples(200, 5);
  const auto a = split_dataset(examples, {}, 9);
  const auto b = split_dataset(examples, {}, 9);
  auto texts = [](const std::vector<LabeledExample>& v) {
    std::vector<std::string> t;
    for (const auto& e : v) t.push_back(e.text);
    return t;
  };
  EXPECT_EQ(texts(a.train), texts(b.train));
  EXPECT_EQ(texts(a.valid), texts(b.valid));
  EXPECT_EQ(texts(a.test), texts(b.test));
  const auto c = split_dataset(examples, {}, 10);
  EXPECT_NE(texts(a.test), texts(c.test));
}

TEST(SplitTest, PartitionIsDisjointCoverAndStratified) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 7 + seed * 37;
    const auto examples = synthetic_examples(n, seed);
    const auto split = split_dataset(examples, {}, seed);
    std::multiset<std::string> all;
    for (const auto* part : {&split.train, &split.valid, &split.test}) {
      for (const auto& e : *part) all.insert(e.text);
    }
    std::multiset<std::string> expected;
    for (const auto& e : examples) expected.insert(e.text);
    EXPECT_EQ(all, expected);  // disjoint and covering (texts are unique)

    std::array<int, kNumEmotions> total{}, in_test{};
    for (const auto& e : examples) ++total[code(e.label)];
    for (const auto& e : split.test) ++in_test[code(e.label)];
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
      EXPECT_LE(std::abs(in_test[c] - 0.2 * total[c]), 1.5) << "seed " << seed;
    }
  }
}

TEST(SplitTest, Errors) {
  EXPECT_THROW(split_dataset(synthetic_examples(6, 1), {}, 1), std::invalid_argument);
  EXPECT_THROW(split_dataset(synthetic_examples(20, 1), {0.5, 0.1, 0.1}, 1),
               std::invalid_argument);
}

TEST(ForwardTest, ProbabilitiesAreNormalized) {
  const auto model = random_model(16, 10, 11, {"a", "b", "c"});
  for (const char* text : {"", "a", "a b c a b c a b c a b c a b", "zzz ???"}) {
    const auto p = model.predict(text);
    double sum = 0;
    for (double v : p.probabilities()) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-6) << text;
  }
}

TEST(ForwardTest, ZeroOutputLayerGivesUniform) {
  auto model = random_model(8, 6, 3, {"x", "y"});
  model.parameters().output_weight.setZero();
  model.parameters().output_bias.setZero();
  for (double v : model.predict("x y x").probabilities()) EXPECT_NEAR(v, 1.0 / 7.0, 1e-15);
}

TEST(ForwardTest, PoolingInvariantToTrailingPad) {
  // Same parameters, longer padded length: once every filter width has an
  // all-PAD window, extra padding cannot change any max.
  const auto short_model = random_model(8, 12, 21, {"p", "q", "r", "s"});
  const EmotionClassifier long_model(short_model.vocabulary(),
                                     {8, 20, short_model.vocabulary().size()},
                                     short_model.parameters());
  EmotionClassifier::Activations a, b;
  for (const char* text : {"", "p", "p q r", "s r q p s r q"}) {
    short_model.forward(short_model.encode(text), a);
    long_model.forward(long_model.encode(text), b);
    EXPECT_EQ(a.pooled, b.pooled) << text;
    EXPECT_EQ(a.probabilities, b.probabilities) << text;
  }
}

TEST(GradientTest, MatchesCentralFiniteDifferences) {
  // Independent oracle: perturb each parameter by +-eps and difference the
  // mean cross-entropy; compare to the backprop gradient.
  auto model = random_model(8, 6, 2024, {"why", "don't", "you", "come", "?", "fine"});
  const std::vector<std::vector<TokenId>> inputs = {
      model.encode("why don't you come ?"),
      model.encode("fine"),
      model.encode("you you come fine why don't"),
  };
  const std::vector<Emotion> labels = {Emotion::Anger, Emotion::Joy, Emotion::Fear};

  const auto analytic = model.gradient(inputs, labels);
  const double eps = 1e-4;
  double worst = 0.0;

  // Flatten both parameter sets in the same visiting order. The first d
  // entries are the PAD embedding column, which is frozen at zero.
  std::vector<double*> params;
  std::vector<double> grads;
  model.parameters().for_each_tensor([&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) params.push_back(t.data() + i);
  });
  analytic.for_each_tensor([&](const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) grads.push_back(t.data()[i]);
  });
  const auto pad_entries = static_cast<std::ptrdiff_t>(model.shape().embedding_dim);
  params.erase(params.begin(), params.begin() + pad_entries);
  grads.erase(grads.begin(), grads.begin() + pad_entries);
  ASSERT_EQ(grads.size(), params.size());
  std::size_t checked = 0;

  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = *params[k];
    *params[k] = saved + eps;
    const double up = model.loss(inputs, labels);
    *params[k] = saved - eps;
    const double down = model.loss(inputs, labels);
    *params[k] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(grads[k]), 1e-6});
    const double rel = std::abs(numeric - grads[k]) / denom;
    worst = std::max(worst, rel);
    ++checked;
    EXPECT_LT(rel, 1e-4) << "parameter " << k << " analytic " << grads[k]
                         << " numeric " << numeric;
  }
  EXPECT_EQ(checked, model.parameters().parameter_count() - 8);
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(TrainTest, OverfitsSingleExample) {
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.require_all_classes = false;
  const std::vector<LabeledExample> one = {{"why don't you come?", Emotion::Anger}};
  const auto result = train(one, {}, cfg);
  EXPECT_GE(result.model.predict("why don't you come?")[Emotion::Anger], 0.99);
}

TEST(TrainTest, MissingClassIsAnError) {
  auto examples = toy70();
  std::erase_if(examples, [](const auto& e) { return e.label == Emotion::Tired; });
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(examples, {}, cfg), TrainingError);
}

TEST(TrainTest, ZeroLearningRateLeavesParametersUnchanged) {
  const auto examples = toy70();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 0.0;
  const auto result = train(examples, {}, cfg);

  std::mt19937_64 rng(cfg.seed);
  EmotionClassifier fresh(build_vocabulary(examples), cfg.embedding_dim, cfg.max_length);
  fresh.initialize(rng);
  EXPECT_TRUE(result.model.parameters() == fresh.parameters());
}

TEST(TrainTest, DeterministicTrajectories) {
  const auto examples = toy70();
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.embedding_dim = 16;
  auto run = [&] {
    std::vector<EmotionClassifier::Params> snapshots;
    std::vector<double> losses;
    train(examples, {}, cfg, [&](const EpochStats& s, const EmotionClassifier& m) {
      snapshots.push_back(m.parameters());
      losses.push_back(s.mean_loss);
    });
    return std::make_pair(snapshots, losses);
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.first.size(), 4u);
  for (std::size_t i = 0; i < a.first.size(); ++i) {
    EXPECT_TRUE(a.first[i] == b.first[i]) << "epoch " << i + 1;
    EXPECT_EQ(a.second[i], b.second[i]);
  }
}

TEST(TrainTest, NonFiniteLossAborts) {
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 1e300;
  try {
    train(toy70(), {}, cfg);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite loss"), std::string::npos);
  }
}

TEST(TrainTest, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.max_length = 4;
  EXPECT_THROW(train(toy70(), {}, cfg), std::invalid_argument);
  cfg = {};
  cfg.keep_prob = 0;
  EXPECT_THROW(train(toy70(), {}, cfg), std::invalid_argument);
}

TEST(EvaluateTest, PerfectAndConstantPredictors) {
  const auto examples = toy70();
  std::map<std::string, Emotion> truth;
  for (const auto& e : examples) truth[e.text] = e.label;

  const auto perfect = evaluate([&](const std::string& t) { return truth.at(t); }, examples);
  ASSERT_EQ(perfect.per_class.size(), kNumEmotions);
  for (const auto& [e, acc] : perfect.per_class) EXPECT_EQ(acc.accuracy(), 1.0);

  const auto joy = evaluate([](const std::string&) { return Emotion::Joy; }, examples);
  for (const auto& [e, acc] : joy.per_class) {
    EXPECT_EQ(acc.accuracy(), e == Emotion::Joy ? 1.0 : 0.0);
  }
}

TEST(EvaluateTest, AbsentClassesOmittedAndMeanMatchesOverall) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::vector<LabeledExample> subset;
  for (int i = 0; i < 101; ++i) {
    subset.push_back({std::to_string(i), emotion_from_code(pick(rng))});
  }
  const auto report = evaluate(
      [&](const std::string& t) { return emotion_from_code(std::stoul(t) % 3); }, subset);
  EXPECT_EQ(report.per_class.count(Emotion::Tired), 0u);
  double weighted = 0;
  for (const auto& [e, acc] : report.per_class) {
    EXPECT_GE(acc.accuracy(), 0.0);
    EXPECT_LE(acc.accuracy(), 1.0);
    weighted += acc.accuracy() * acc.total;
  }
  EXPECT_NEAR(weighted / subset.size(), report.overall.accuracy(), 1e-12);
  EXPECT_THROW(evaluate([](const std::string&) { return Emotion::Joy; }, {}),
               std::invalid_argument);
}

TEST(ModelIoTest, RoundTripIsExact) {
  const auto model = random_model(12, 9, 77, {"alpha", "beta", "gamma", "delta"});
  std::stringstream buf;
  save_model(model, buf);
  const auto loaded = load_model(buf);
  EXPECT_EQ(loaded.shape(), model.shape());
  EXPECT_TRUE(loaded.parameters() == model.parameters());

  std::mt19937_64 rng(5);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "omega", "!"};
  std::uniform_int_distribution<std::size_t> w(0, words.size() - 1), len(0, 12);
  for (int i = 0; i < 100; ++i) {
    std::string text;
    for (std::size_t k = len(rng); k > 0; --k) text += words[w(rng)] + " ";
    EXPECT_EQ(model.predict(text).probabilities(), loaded.predict(text).probabilities());
  }
}

TEST(ModelIoTest, RejectsDamagedFiles) {
  const auto model = random_model(4, 5, 1, {"a"});
  std::stringstream buf;
  save_model(model, buf);
  const std::string bytes = buf.str();

  auto kind_of = [](const std::string& data) {
    std::istringstream in(data);
    try {
      load_model(in);
    } catch (const ModelFormatError& e) {
      return e.kind();
    }
    return ModelFormatError::Kind::Io;  // sentinel: no error
  };

  EXPECT_EQ(kind_of(bytes.substr(0, bytes.size() - 3)), ModelFormatError::Kind::Corrupt);
  EXPECT_EQ(kind_of(bytes.substr(0, 20)), ModelFormatError::Kind::Corrupt);
  EXPECT_EQ(kind_of(bytes + "x"), ModelFormatError::Kind::Corrupt);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of(bad_magic), ModelFormatError::Kind::BadMagic);

  std::string bad_version = bytes;
  bad_version[8] = 9;
  EXPECT_EQ(kind_of(bad_version), ModelFormatError::Kind::VersionMismatch);
}
