#include "moodswipe/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace moodswipe {

LabeledCorpus read_labeled_corpus(std::istream& in) {
  LabeledCorpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      ++corpus.malformed_lines;
      continue;
    }
    const auto label = parse_emotion(std::string_view(line).substr(0, tab));
    if (!label) {
      ++corpus.malformed_lines;
      continue;
    }
    std::string text = line.substr(tab + 1);
    if (tokenize(text).empty()) {
      ++corpus.empty_texts;
      continue;
    }
    corpus.examples.push_back({std::move(text), *label});
  }
  return corpus;
}

LabeledCorpus read_labeled_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_labeled_corpus(in);
}

void write_labeled_corpus(std::ostream& out,
                          const std::vector<LabeledExample>& examples) {
  for (const auto& ex : examples) {
    out << to_string(ex.label) << '\t' << sanitize_field(ex.text) << '\n';
  }
}

DatasetSplit split_dataset(const std::vector<LabeledExample>& examples,
                           const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  }
  if (examples.size() < kNumEmotions) {
    throw std::invalid_argument("fewer examples than classes");
  }

  std::mt19937_64 rng(seed);
  std::array<std::vector<std::size_t>, kNumEmotions> by_class;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_class[code(examples[i].label)].push_back(i);
  }

  struct Keyed {
    double key;
    std::size_t cls;
    std::size_t index;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(examples.size());
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    auto& members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<double>(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      keyed.push_back({(static_cast<double>(i) + 0.5) / n, c, members[i]});
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.cls < b.cls;
  });

  const auto n = static_cast<double>(examples.size());
  const auto n_valid = static_cast<std::size_t>(std::floor(n * ratios.valid + 0.5));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 0.5));

  DatasetSplit split;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    const auto& ex = examples[keyed[i].index];
    if (i < n_valid) {
      split.valid.push_back(ex);
    } else if (i < n_valid + n_test) {
      split.test.push_back(ex);
    } else {
      split.train.push_back(ex);
    }
  }
  return split;
}

void TrainConfig::validate() const {
  if (embedding_dim == 0) throw std::invalid_argument("embedding_dim must be positive");
  if (max_length < kNumWidths) {
    throw std::invalid_argument("max_length must be >= 5");
  }
  if (!(learning_rate >= 0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(keep_prob > 0 && keep_prob <= 1)) {
    throw std::invalid_argument("keep_prob must be in (0, 1]");
  }
}

Vocabulary build_vocabulary(const std::vector<LabeledExample>& examples) {
  Vocabulary vocab;
  for (const auto& ex : examples) {
    for (const auto& tok : tokenize(ex.text)) vocab.add(tok);
  }
  return vocab;
}

namespace {

using Params = EmotionClassifier::Params;

class Adam {
 public:
  Adam(const CnnShape& shape, const TrainConfig& cfg)
      : m_(Params::zeros(shape)), v_(Params::zeros(shape)), cfg_(cfg) {}

  void step(Params& params, const Params& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double lr = cfg_.learning_rate;
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double eps = cfg_.epsilon;

    std::vector<Eigen::Ref<Eigen::MatrixXd>> p, g, m, v;
    auto collect = [](std::vector<Eigen::Ref<Eigen::MatrixXd>>& out) {
      return [&out](auto& t) {
        out.emplace_back(Eigen::Map<Eigen::MatrixXd>(t.data(), t.rows(), t.cols()));
      };
    };
    params.for_each_tensor(collect(p));
    const_cast<Params&>(grads).for_each_tensor(collect(g));
    m_.for_each_tensor(collect(m));
    v_.for_each_tensor(collect(v));

    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i].cwiseAbs2();
      p[i].array() -=
          lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  Params m_;
  Params v_;
  TrainConfig cfg_;
  std::size_t t_ = 0;
};

struct Score {
  double accuracy = 0;
  double loss = 0;
};

Score score(const EmotionClassifier& model,
            const std::vector<std::vector<TokenId>>& inputs,
            const std::vector<Emotion>& labels) {
  Score s;
  if (inputs.empty()) return s;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto pred = model.predict_ids(inputs[i]);
    if (pred.top() == labels[i]) ++correct;
    s.loss -= std::log(std::max(pred[labels[i]], 1e-300));
  }
  const auto n = static_cast<double>(inputs.size());
  s.accuracy = static_cast<double>(correct) / n;
  s.loss /= n;
  return s;
}

}  // namespace

TrainResult train(const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& valid_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw TrainingError("empty training set");
  std::array<std::size_t, kNumEmotions> class_counts{};
  for (const auto& ex : train_set) ++class_counts[code(ex.label)];
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    if (config.require_all_classes && class_counts[c] == 0) {
      throw TrainingError("no training example for class " +
                          std::string(to_string(emotion_from_code(c))));
    }
  }

  std::mt19937_64 rng(config.seed);
  EmotionClassifier model(build_vocabulary(train_set), config.embedding_dim,
                          config.max_length);
  model.initialize(rng);

  auto encode_all = [&](const std::vector<LabeledExample>& set,
                        std::vector<std::vector<TokenId>>& inputs,
                        std::vector<Emotion>& labels) {
    for (const auto& ex : set) {
      inputs.push_back(model.encode(ex.text));
      labels.push_back(ex.label);
    }
  };
  std::vector<std::vector<TokenId>> train_inputs, valid_inputs;
  std::vector<Emotion> train_labels, valid_labels;
  encode_all(train_set, train_inputs, train_labels);
  encode_all(valid_set, valid_inputs, valid_labels);

  Adam adam(model.shape(), config);
  Params grads = Params::zeros(model.shape());
  EmotionClassifier::Activations act;
  std::vector<std::size_t> order(train_inputs.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  Params best = model.parameters();
  Score best_score{-1.0, 0.0};

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      grads.set_zero();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        model.forward(train_inputs[i], act, config.keep_prob, &rng);
        batch_loss -= std::log(
            act.probabilities[static_cast<Eigen::Index>(code(train_labels[i]))]);
        model.backward(act, train_labels[i], scale, grads);
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch starting at "
            << start << " (loss " << batch_loss << ", lr "
            << config.learning_rate << ")";
        throw TrainingError(msg.str());
      }
      epoch_loss += batch_loss;
      adam.step(model.parameters(), grads);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = epoch_loss / static_cast<double>(train_inputs.size());
    const Score on_train = score(model, train_inputs, train_labels);
    const Score on_valid =
        valid_inputs.empty() ? on_train : score(model, valid_inputs, valid_labels);
    stats.train_accuracy = on_train.accuracy;
    stats.valid_accuracy = on_valid.accuracy;
    stats.valid_loss = on_valid.loss;
    result.history.push_back(stats);
    if (on_valid.accuracy > best_score.accuracy ||
        (on_valid.accuracy == best_score.accuracy && on_valid.loss < best_score.loss)) {
      best_score = on_valid;
      best = model.parameters();
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(stats, model);
  }

  model.parameters() = std::move(best);
  result.model = std::move(model);
  return result;
}

ClassificationReport evaluate(const EmotionPredictor& predictor,
                              const std::vector<LabeledExample>& test_set) {
  if (test_set.empty()) throw std::invalid_argument("empty test set");
  ClassificationReport report;
  for (const auto& ex : test_set) {
    auto& cls = report.per_class[ex.label];
    ++cls.total;
    ++report.overall.total;
    if (predictor(ex.text) == ex.label) {
      ++cls.correct;
      ++report.overall.correct;
    }
  }
  return report;
}

ClassificationReport evaluate(const EmotionClassifier& model,
                              const std::vector<LabeledExample>& test_set) {
  return evaluate([&](const std::string& text) { return model.predict(text).top(); },
                  test_set);
}

std::string format_report(const ClassificationReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(14) << "emotion" << std::right << std::setw(8)
      << "correct" << std::setw(8) << "total" << std::setw(10) << "accuracy\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& [emotion, acc] : report.per_class) {
    out << std::left << std::setw(14) << to_string(emotion) << std::right
        << std::setw(8) << acc.correct << std::setw(8) << acc.total
        << std::setw(10) << acc.accuracy() << '\n';
  }
  out << std::left << std::setw(14) << "overall" << std::right << std::setw(8)
      << report.overall.correct << std::setw(8) << report.overall.total
      << std::setw(10) << report.overall.accuracy() << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Model files

namespace {

constexpr char kMagic[8] = {'M', 'S', 'W', 'P', 'C', 'N', 'N', '\0'};

template <typename T>
void write_pod(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ModelFormatError(ModelFormatError::Kind::Corrupt,
                           "model file truncated");
  }
  return value;
}

constexpr std::uint32_t kMaxDim = 1u << 16;
constexpr std::uint32_t kMaxVocab = 1u << 24;
constexpr std::uint32_t kMaxTokenBytes = 1u << 16;

}  // namespace

void save_model(const EmotionClassifier& model, std::ostream& out) {
  const auto& shape = model.shape();
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kModelFormatVersion);
  write_pod<std::uint32_t>(out, sizeof(double));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(shape.embedding_dim));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(shape.max_length));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(shape.vocab_size));
  const auto& vocab = model.vocabulary();
  for (TokenId id = 0; id < vocab.size(); ++id) {
    const auto& tok = vocab.token(id);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tok.size()));
    out.write(tok.data(), static_cast<std::streamsize>(tok.size()));
  }
  model.parameters().for_each_tensor([&](const auto& t) {
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  });
  if (!out) {
    throw ModelFormatError(ModelFormatError::Kind::Io, "failed writing model");
  }
}

void save_model(const EmotionClassifier& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ModelFormatError(ModelFormatError::Kind::Io,
                           "cannot open " + path.string() + " for writing");
  }
  save_model(model, out);
}

EmotionClassifier load_model(std::istream& in) {
  char magic[sizeof(kMagic)] = {};
  if (!in.read(magic, sizeof(magic))) {
    throw ModelFormatError(ModelFormatError::Kind::Corrupt, "model file truncated");
  }
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw ModelFormatError(ModelFormatError::Kind::BadMagic,
                           "not a model file (bad magic)");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw ModelFormatError(ModelFormatError::Kind::VersionMismatch,
                           "model format version " + std::to_string(version) +
                               ", expected " + std::to_string(kModelFormatVersion));
  }
  const auto scalar_bytes = read_pod<std::uint32_t>(in);
  const auto dim = read_pod<std::uint32_t>(in);
  const auto len = read_pod<std::uint32_t>(in);
  const auto vocab_size = read_pod<std::uint32_t>(in);
  if (scalar_bytes != sizeof(double) || dim == 0 || dim > kMaxDim ||
      len < kNumWidths || len > kMaxDim || vocab_size < 2 || vocab_size > kMaxVocab) {
    throw ModelFormatError(ModelFormatError::Kind::Corrupt, "implausible model header");
  }

  Vocabulary vocab;
  std::string tok;
  for (std::uint32_t id = 0; id < vocab_size; ++id) {
    const auto n = read_pod<std::uint32_t>(in);
    if (n > kMaxTokenBytes) {
      throw ModelFormatError(ModelFormatError::Kind::Corrupt, "token too long");
    }
    tok.resize(n);
    if (!in.read(tok.data(), n)) {
      throw ModelFormatError(ModelFormatError::Kind::Corrupt, "model file truncated");
    }
    if (id >= 2 && vocab.add(tok) != id) {
      throw ModelFormatError(ModelFormatError::Kind::Corrupt, "duplicate token");
    }
  }

  const CnnShape shape{dim, len, vocab_size};
  auto params = EmotionClassifier::Params::zeros(shape);
  params.for_each_tensor([&](auto& t) {
    const auto bytes = static_cast<std::streamsize>(t.size() * sizeof(double));
    if (!in.read(reinterpret_cast<char*>(t.data()), bytes)) {
      throw ModelFormatError(ModelFormatError::Kind::Corrupt, "model file truncated");
    }
  });
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ModelFormatError(ModelFormatError::Kind::Corrupt,
                           "trailing bytes after parameters");
  }
  return EmotionClassifier(std::move(vocab), shape, std::move(params));
}

EmotionClassifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelFormatError(ModelFormatError::Kind::Io, "cannot open " + path.string());
  }
  return load_model(in);
}

}  // namespace moodswipe
