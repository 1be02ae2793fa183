#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "moodswipe/emotion.hpp"

namespace moodswipe {

using TimestampMs = std::int64_t;

struct Message {
  std::string id;  // "<dialog_id>#<ordinal>"
  std::string dialog_id;
  std::string sender_id;
  std::string text;
  TimestampMs timestamp = 0;
  std::optional<Emotion> gold_emotion;
  Emotion emotion = Emotion::Neutral;  // gold when present, else annotated
};

using TurnId = std::uint32_t;

/// "t<id>"
std::string turn_label(TurnId id);

struct Turn {
  TurnId id = 0;
  Message received;
  Message response;
  Emotion received_emotion = Emotion::Neutral;
  Emotion response_emotion = Emotion::Neutral;
};

/// Messages grouped by dialog plus the derived turns. Immutable after
/// ingestion.
class TurnStore {
 public:
  const std::vector<Message>& messages() const { return messages_; }
  const std::vector<Turn>& turns() const { return turns_; }
  const Turn& turn(TurnId id) const { return turns_.at(id); }

  /// Message indices of one dialog in timestamp order.
  const std::vector<std::size_t>& dialog(const std::string& dialog_id) const;
  const std::vector<std::string>& dialog_ids() const { return dialog_order_; }

  /// Adds a message at the end of its dialog and emits the turn it forms
  /// with the most recent earlier message from another sender, if any.
  /// Timestamps within a dialog must not decrease.
  void append(Message message);

 private:
  std::vector<Message> messages_;
  std::vector<Turn> turns_;
  std::unordered_map<std::string, std::vector<std::size_t>> dialogs_;
  std::vector<std::string> dialog_order_;
};

/// Assigns an emotion to message text. Gold labels in the corpus override
/// whatever this returns.
using Annotator = std::function<Emotion(std::string_view)>;

struct IngestStats {
  std::size_t lines = 0;
  std::size_t messages = 0;
  std::size_t malformed = 0;
  std::size_t turns = 0;
  std::size_t gold_labels = 0;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Abort threshold for malformed lines.
inline constexpr double kMaxMalformedFraction = 0.10;

/// Reads `dialog_id<TAB>sender_id<TAB>timestamp_ms<TAB>text[<TAB>gold]`.
/// Malformed lines (wrong field count, bad timestamp, unknown gold label,
/// empty ids, timestamp going backwards within a dialog) are skipped and
/// counted. More than 10% malformed lines throws CorpusError.
TurnStore ingest_corpus(std::istream& in, const Annotator& annotate,
                        IngestStats* stats = nullptr);
TurnStore ingest_corpus(const std::filesystem::path& path, const Annotator& annotate,
                        IngestStats* stats = nullptr);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  TurnId turn = 0;
  std::uint32_t tf = 0;
};

struct ScoredTurn {
  TurnId turn = 0;
  double score = 0;
};

class EmptyQuery : public std::invalid_argument {
 public:
  EmptyQuery() : std::invalid_argument("query has no tokens") {}
};

/// Inverted index over the received message of every turn.
class Bm25Index {
 public:
  /// Throws std::invalid_argument on an empty turn list.
  Bm25Index(const std::vector<Turn>& turns, Bm25Params params = {});

  std::size_t size() const { return doc_lengths_.size(); }
  double average_length() const { return avgdl_; }
  const Bm25Params& params() const { return params_; }
  std::uint32_t doc_length(TurnId id) const { return doc_lengths_.at(id); }
  Emotion response_emotion(TurnId id) const { return response_emotions_.at(id); }

  /// Postings sorted by turn id; empty for unknown terms.
  const std::vector<Posting>& postings(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const {
    return postings(term).size();
  }

  /// ln((N - df + 0.5) / (df + 0.5) + 1)
  double idf(std::string_view term) const;

  /// Sum over distinct query terms present in the document; 0 when none.
  double score(const std::vector<std::string>& query, TurnId id) const;

  /// Turns whose received message shares at least one query token,
  /// optionally restricted to one response emotion, by score descending
  /// then turn id ascending. Throws EmptyQuery when the text has no tokens.
  std::vector<ScoredTurn> search(std::string_view query, std::size_t top_k,
                                 std::optional<Emotion> filter = std::nullopt) const;
  std::vector<ScoredTurn> search(const std::vector<std::string>& query_tokens,
                                 std::size_t top_k,
                                 std::optional<Emotion> filter = std::nullopt) const;

 private:
  double term_weight(double idf, std::uint32_t tf, std::uint32_t dl) const;

  Bm25Params params_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<Emotion> response_emotions_;
  double avgdl_ = 0;
};

/// Distinct tokens in first-occurrence order.
std::vector<std::string> distinct_terms(const std::vector<std::string>& tokens);

}  // namespace moodswipe
