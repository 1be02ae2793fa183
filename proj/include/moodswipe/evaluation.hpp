#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "moodswipe/emotion.hpp"
#include "moodswipe/retrieval.hpp"

namespace moodswipe {

enum class Aspect : std::uint8_t { Clarity, Comfort, Responsiveness };
inline constexpr std::array<Aspect, 3> kAllAspects = {Aspect::Clarity, Aspect::Comfort,
                                                      Aspect::Responsiveness};
std::string_view to_string(Aspect a);  // lowercase
std::optional<Aspect> parse_aspect(std::string_view s);

/// The two suggestion settings compared against the user's own response.
enum class Setting : std::uint8_t { Baseline, WithEmotion };
std::string_view to_string(Setting s);  // "Baseline", "+Emotion"

inline constexpr std::size_t kContextSize = 10;
inline constexpr std::size_t kWorkersPerItem = 5;

struct EvalItem {
  std::string item_id;           // id of the response message
  std::vector<Message> context;  // preceding messages, oldest first
  Message response;              // what the user actually sent
  Emotion gold_emotion = Emotion::Neutral;
  std::optional<std::string> baseline_suggestion;
  std::optional<std::string> emotion_suggestion;
};

/// Messages whose immediate predecessor in the dialog comes from another
/// sender, whose label is not Neutral, and that contain a word token.
std::vector<EvalItem> select_eval_messages(const TurnStore& store,
                                           std::size_t context_size = kContextSize);

/// Fills both suggestions from the item's received message (the last context
/// message). The turn that produced the item itself is never suggested.
void attach_suggestions(std::vector<EvalItem>& items, const TurnStore& store,
                        const Bm25Index& index);

/// One JSON object per item, for the ranking task.
void write_eval_items(std::ostream& out, const std::vector<EvalItem>& items);

/// item_id -> gold emotion, read back from write_eval_items output.
std::map<std::string, Emotion> read_item_labels(std::istream& in);

/// One worker's ranks for one item and aspect. Each field is 1, 2 or 3.
struct RankTriple {
  int input = 0;
  int baseline = 0;
  int emotion = 0;

  bool is_permutation() const;
};

struct RankRecord {
  std::string item_id;
  std::string worker_id;
  Aspect aspect = Aspect::Clarity;
  RankTriple ranks;
};

/// `item_id<TAB>worker_id<TAB>aspect<TAB>rank_input<TAB>rank_baseline<TAB>rank_emotion`
std::vector<RankRecord> read_rank_records(std::istream& in);
void write_rank_records(std::ostream& out, const std::vector<RankRecord>& records);

/// Exact per-candidate rank sums over the workers of one item and aspect.
struct AverageRanks {
  long input_sum = 0;
  long baseline_sum = 0;
  long emotion_sum = 0;
  long workers = 0;

  double input() const { return static_cast<double>(input_sum) / workers; }
  double baseline() const { return static_cast<double>(baseline_sum) / workers; }
  double emotion() const { return static_cast<double>(emotion_sum) / workers; }
  long suggestion_sum(Setting s) const {
    return s == Setting::Baseline ? baseline_sum : emotion_sum;
  }
  /// Strictly better average rank than the user's response.
  bool good(Setting s) const { return suggestion_sum(s) < input_sum; }
};

/// Throws ValidationError if any triple is not a permutation of {1,2,3}
/// or the list is empty.
AverageRanks aggregate_ranks(const std::vector<RankTriple>& ranks);

struct RatedItem {
  std::string item_id;
  Emotion gold_emotion = Emotion::Neutral;
  std::array<AverageRanks, 3> by_aspect;  // indexed by Aspect
};

/// Groups rank records per item. Every item must have exactly
/// `workers` distinct workers for each of the three aspects, and every item
/// must appear in `labels`.
std::vector<RatedItem> rate_items(const std::vector<RankRecord>& records,
                                  const std::map<std::string, Emotion>& labels,
                                  std::size_t workers = kWorkersPerItem);

struct Rate {
  std::size_t good = 0;
  std::size_t total = 0;

  double percent() const { return 100.0 * static_cast<double>(good) / static_cast<double>(total); }
};

/// Throws std::invalid_argument on an empty item list.
Rate good_suggestion_rate(const std::vector<RatedItem>& items, Setting setting, Aspect aspect);

/// Comfort rates per gold emotion; emotions without items are absent.
std::map<Emotion, Rate> per_emotion_rates(const std::vector<RatedItem>& items, Setting setting,
                                          Aspect aspect = Aspect::Comfort);

/// Plain numbers as printed.
struct ReportTable {
  std::size_t items = 0;
  std::array<std::array<double, 3>, 3> average_rank{};  // [input|baseline|emotion][aspect]
  std::array<std::array<double, 3>, 2> rate{};          // [setting][aspect], percent
  std::array<std::map<Emotion, double>, 2> comfort_by_emotion;  // [setting], percent
};

ReportTable build_report(const std::vector<RatedItem>& items);

/// Ranks to three decimals, rates to two, emotions without items as "-".
std::string format_report_text(const ReportTable& table);
std::string format_report_json(const ReportTable& table);

/// Simulated crowd workers. Each worker orders the three candidates by
/// strength plus Gumbel noise, so stronger candidates tend to rank higher.
struct SyntheticWorkers {
  std::size_t workers = kWorkersPerItem;
  double input_strength = 1.0;
  double baseline_strength = 0.0;
  double emotion_strength = 0.1;
  std::uint64_t seed = 1;

  std::vector<RankRecord> generate(const std::vector<std::string>& item_ids) const;
};

}  // namespace moodswipe
