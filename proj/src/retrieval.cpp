#include "moodswipe/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_set>

#include "moodswipe/text.hpp"

namespace moodswipe {

std::string turn_label(TurnId id) { return "t" + std::to_string(id); }

const std::vector<std::size_t>& TurnStore::dialog(const std::string& dialog_id) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = dialogs_.find(dialog_id);
  return it == dialogs_.end() ? kEmpty : it->second;
}

void TurnStore::append(Message message) {
  auto [it, fresh] = dialogs_.try_emplace(message.dialog_id);
  auto& members = it->second;
  if (fresh) dialog_order_.push_back(message.dialog_id);
  if (!members.empty() && messages_[members.back()].timestamp > message.timestamp) {
    throw std::invalid_argument("timestamp decreases within dialog " + message.dialog_id);
  }
  message.id = message.dialog_id + "#" + std::to_string(members.size());

  std::optional<std::size_t> partner;
  for (auto m = members.rbegin(); m != members.rend(); ++m) {
    if (messages_[*m].sender_id != message.sender_id) {
      partner = *m;
      break;
    }
  }

  members.push_back(messages_.size());
  messages_.push_back(std::move(message));
  if (partner) {
    Turn turn;
    turn.id = static_cast<TurnId>(turns_.size());
    turn.received = messages_[*partner];
    turn.response = messages_.back();
    turn.received_emotion = turn.received.emotion;
    turn.response_emotion = turn.response.emotion;
    turns_.push_back(std::move(turn));
  }
}

namespace {

std::optional<TimestampMs> parse_timestamp(std::string_view s) {
  TimestampMs value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return value;
}

}  // namespace

TurnStore ingest_corpus(std::istream& in, const Annotator& annotate, IngestStats* stats) {
  IngestStats local;
  TurnStore store;
  std::unordered_map<std::string, TimestampMs> last_seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++local.lines;

    const auto fields = split_tabs(line);
    std::optional<TimestampMs> ts;
    std::optional<Emotion> gold;
    bool ok = (fields.size() == 4 || fields.size() == 5) && !fields[0].empty() &&
              !fields[1].empty();
    if (ok) {
      ts = parse_timestamp(fields[2]);
      ok = ts.has_value();
    }
    if (ok && fields.size() == 5 && !fields[4].empty()) {
      gold = parse_emotion(fields[4]);
      ok = gold.has_value();
    }
    if (ok) {
      auto prev = last_seen.find(std::string(fields[0]));
      ok = prev == last_seen.end() || prev->second <= *ts;
    }
    if (!ok) {
      ++local.malformed;
      continue;
    }

    Message msg;
    msg.dialog_id = std::string(fields[0]);
    msg.sender_id = std::string(fields[1]);
    msg.timestamp = *ts;
    msg.text = std::string(fields[3]);
    msg.gold_emotion = gold;
    if (gold) {
      msg.emotion = *gold;
      ++local.gold_labels;
    } else if (annotate) {
      msg.emotion = annotate(msg.text);
    }
    last_seen[msg.dialog_id] = msg.timestamp;
    store.append(std::move(msg));
    ++local.messages;
  }
  local.turns = store.turns().size();
  if (stats) *stats = local;

  if (local.lines > 0 && static_cast<double>(local.malformed) >
                             kMaxMalformedFraction * static_cast<double>(local.lines)) {
    throw CorpusError(std::to_string(local.malformed) + " of " +
                      std::to_string(local.lines) +
                      " corpus lines are malformed (limit 10%)");
  }
  return store;
}

TurnStore ingest_corpus(const std::filesystem::path& path, const Annotator& annotate,
                        IngestStats* stats) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus " + path.string());
  return ingest_corpus(in, annotate, stats);
}

std::vector<std::string> distinct_terms(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  std::unordered_set<std::string_view> seen;
  for (const auto& t : tokens) {
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

Bm25Index::Bm25Index(const std::vector<Turn>& turns, Bm25Params params)
    : params_(params) {
  if (turns.empty()) throw std::invalid_argument("cannot index an empty turn store");
  doc_lengths_.resize(turns.size());
  response_emotions_.resize(turns.size());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const Turn& turn = turns[i];
    if (turn.id != i) throw std::invalid_argument("turn ids must be dense and ordered");
    const auto tokens = tokenize(turn.received.text);
    std::unordered_map<std::string, std::uint32_t> tf;
    for (const auto& tok : tokens) ++tf[tok];
    for (auto& [term, count] : tf) postings_[term].push_back({turn.id, count});
    doc_lengths_[i] = static_cast<std::uint32_t>(tokens.size());
    response_emotions_[i] = turn.response_emotion;
    total += tokens.size();
  }
  avgdl_ = static_cast<double>(total) / static_cast<double>(turns.size());
}

const std::vector<Posting>& Bm25Index::postings(std::string_view term) const {
  static const std::vector<Posting> kNone;
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? kNone : it->second;
}

double Bm25Index::idf(std::string_view term) const {
  const auto n = static_cast<double>(size());
  const auto df = static_cast<double>(document_frequency(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Index::term_weight(double idf, std::uint32_t tf, std::uint32_t dl) const {
  const double f = tf;
  const double norm = params_.k1 * (1.0 - params_.b + params_.b * dl / avgdl_);
  return idf * f * (params_.k1 + 1.0) / (f + norm);
}

double Bm25Index::score(const std::vector<std::string>& query, TurnId id) const {
  const std::uint32_t dl = doc_length(id);
  double total = 0.0;
  for (const auto& term : distinct_terms(query)) {
    const auto& plist = postings(term);
    auto it = std::lower_bound(plist.begin(), plist.end(), id,
                               [](const Posting& p, TurnId t) { return p.turn < t; });
    if (it == plist.end() || it->turn != id) continue;
    total += term_weight(idf(term), it->tf, dl);
  }
  return total;
}

std::vector<ScoredTurn> Bm25Index::search(std::string_view query, std::size_t top_k,
                                          std::optional<Emotion> filter) const {
  return search(tokenize(query), top_k, filter);
}

std::vector<ScoredTurn> Bm25Index::search(const std::vector<std::string>& query_tokens,
                                          std::size_t top_k,
                                          std::optional<Emotion> filter) const {
  if (query_tokens.empty()) throw EmptyQuery();
  if (top_k == 0) throw std::invalid_argument("top_k must be at least 1");

  // Accumulate in the same term order as score() so both agree bitwise.
  std::unordered_map<TurnId, double> acc;
  for (const auto& term : distinct_terms(query_tokens)) {
    const auto& plist = postings(term);
    if (plist.empty()) continue;
    const double w = idf(term);
    for (const auto& p : plist) {
      if (filter && response_emotions_[p.turn] != *filter) continue;
      acc[p.turn] += term_weight(w, p.tf, doc_lengths_[p.turn]);
    }
  }

  std::vector<ScoredTurn> hits;
  hits.reserve(acc.size());
  for (const auto& [turn, s] : acc) hits.push_back({turn, s});
  auto better = [](const ScoredTurn& a, const ScoredTurn& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.turn < b.turn;
  };
  if (hits.size() > top_k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(top_k),
                      hits.end(), better);
    hits.resize(top_k);
  } else {
    std::sort(hits.begin(), hits.end(), better);
  }
  return hits;
}

}  // namespace moodswipe
