#include "moodswipe/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "moodswipe/text.hpp"

namespace moodswipe {

namespace {

constexpr std::array<std::string_view, 3> kAspectNames = {"clarity", "comfort", "responsiveness"};

std::size_t idx(Aspect a) { return static_cast<std::size_t>(a); }

}  // namespace

std::string_view to_string(Aspect a) { return kAspectNames.at(idx(a)); }

std::optional<Aspect> parse_aspect(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Aspect a : kAllAspects) {
    if (to_string(a) == lower) return a;
  }
  return std::nullopt;
}

std::string_view to_string(Setting s) { return s == Setting::Baseline ? "Baseline" : "+Emotion"; }

std::vector<EvalItem> select_eval_messages(const TurnStore& store, std::size_t context_size) {
  std::vector<EvalItem> items;
  const auto& messages = store.messages();
  for (const auto& dialog_id : store.dialog_ids()) {
    const auto& order = store.dialog(dialog_id);
    for (std::size_t i = 1; i < order.size(); ++i) {
      const Message& prev = messages[order[i - 1]];
      const Message& m = messages[order[i]];
      if (prev.sender_id == m.sender_id) continue;
      if (m.emotion == Emotion::Neutral) continue;
      if (!has_word_token(m.text)) continue;
      EvalItem item;
      item.item_id = m.id;
      item.response = m;
      item.gold_emotion = m.emotion;
      for (std::size_t j = i > context_size ? i - context_size : 0; j < i; ++j) {
        item.context.push_back(messages[order[j]]);
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

void attach_suggestions(std::vector<EvalItem>& items, const TurnStore& store,
                        const Bm25Index& index) {
  auto pick = [&](const EvalItem& item, const std::vector<std::string>& tokens,
                  std::optional<Emotion> filter) -> std::optional<std::string> {
    // At most one turn has this item as its response, so two hits suffice.
    for (const auto& hit : index.search(tokens, 2, filter)) {
      const Turn& turn = store.turn(hit.turn);
      if (turn.response.id != item.response.id) return turn.response.text;
    }
    return std::nullopt;
  };
  for (auto& item : items) {
    item.baseline_suggestion.reset();
    item.emotion_suggestion.reset();
    if (item.context.empty()) continue;
    const auto tokens = tokenize(item.context.back().text);
    if (tokens.empty()) continue;
    item.baseline_suggestion = pick(item, tokens, std::nullopt);
    item.emotion_suggestion = pick(item, tokens, item.gold_emotion);
  }
}

void write_eval_items(std::ostream& out, const std::vector<EvalItem>& items) {
  for (const auto& item : items) {
    nlohmann::ordered_json j;
    j["item_id"] = item.item_id;
    j["gold_emotion"] = to_string(item.gold_emotion);
    auto& ctx = j["context"] = nlohmann::ordered_json::array();
    for (const auto& m : item.context) ctx.push_back({{"sender", m.sender_id}, {"text", m.text}});
    j["response"] = item.response.text;
    j["baseline"] = item.baseline_suggestion ? nlohmann::ordered_json(*item.baseline_suggestion)
                                             : nlohmann::ordered_json(nullptr);
    j["emotion"] = item.emotion_suggestion ? nlohmann::ordered_json(*item.emotion_suggestion)
                                           : nlohmann::ordered_json(nullptr);
    out << j.dump() << '\n';
  }
}

std::map<std::string, Emotion> read_item_labels(std::istream& in) {
  std::map<std::string, Emotion> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    const auto where = "item file line " + std::to_string(line_no);
    if (j.is_discarded() || !j.is_object() || !j.contains("item_id") ||
        !j["item_id"].is_string() || !j.contains("gold_emotion") ||
        !j["gold_emotion"].is_string()) {
      throw ValidationError(where + ": expected item_id and gold_emotion");
    }
    const auto e = parse_emotion(j["gold_emotion"].get<std::string>());
    if (!e) throw ValidationError(where + ": unknown emotion");
    if (!labels.emplace(j["item_id"].get<std::string>(), *e).second) {
      throw ValidationError(where + ": duplicate item");
    }
  }
  return labels;
}

bool RankTriple::is_permutation() const {
  std::array<int, 3> r = {input, baseline, emotion};
  std::sort(r.begin(), r.end());
  return r == std::array<int, 3>{1, 2, 3};
}

std::vector<RankRecord> read_rank_records(std::istream& in) {
  std::vector<RankRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "rank file line " + std::to_string(line_no) + ": ";
    const auto f = split_tabs(line);
    if (f.size() != 6) throw ValidationError(where + "expected 6 fields");
    if (f[0].empty() || f[1].empty()) throw ValidationError(where + "empty id");
    const auto aspect = parse_aspect(f[2]);
    if (!aspect) throw ValidationError(where + "unknown aspect");
    std::array<int, 3> r{};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto s = f[3 + k];
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), r[k]);
      if (ec != std::errc() || p != s.data() + s.size()) {
        throw ValidationError(where + "bad rank");
      }
    }
    RankRecord rec{std::string(f[0]), std::string(f[1]), *aspect, {r[0], r[1], r[2]}};
    if (!rec.ranks.is_permutation()) {
      throw ValidationError(where + "ranks are not a permutation of 1,2,3");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_rank_records(std::ostream& out, const std::vector<RankRecord>& records) {
  for (const auto& r : records) {
    out << r.item_id << '\t' << r.worker_id << '\t' << to_string(r.aspect) << '\t'
        << r.ranks.input << '\t' << r.ranks.baseline << '\t' << r.ranks.emotion << '\n';
  }
}

AverageRanks aggregate_ranks(const std::vector<RankTriple>& ranks) {
  if (ranks.empty()) throw ValidationError("no ranks to aggregate");
  AverageRanks avg;
  for (const auto& r : ranks) {
    if (!r.is_permutation()) throw ValidationError("ranks are not a permutation of 1,2,3");
    avg.input_sum += r.input;
    avg.baseline_sum += r.baseline;
    avg.emotion_sum += r.emotion;
    ++avg.workers;
  }
  return avg;
}

std::vector<RatedItem> rate_items(const std::vector<RankRecord>& records,
                                  const std::map<std::string, Emotion>& labels,
                                  std::size_t workers) {
  struct Pending {
    std::array<std::vector<RankTriple>, 3> ranks;
    std::array<std::set<std::string>, 3> seen;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> by_item;
  for (const auto& r : records) {
    auto [it, fresh] = by_item.try_emplace(r.item_id);
    if (fresh) order.push_back(r.item_id);
    if (!it->second.seen[idx(r.aspect)].insert(r.worker_id).second) {
      throw ValidationError("worker " + r.worker_id + " ranked item " + r.item_id + " (" +
                            std::string(to_string(r.aspect)) + ") twice");
    }
    it->second.ranks[idx(r.aspect)].push_back(r.ranks);
  }
  std::vector<RatedItem> items;
  for (const auto& id : order) {
    const auto label = labels.find(id);
    if (label == labels.end()) throw ValidationError("item " + id + " has no gold emotion");
    RatedItem item{id, label->second, {}};
    for (Aspect a : kAllAspects) {
      const auto& ranks = by_item[id].ranks[idx(a)];
      if (ranks.size() != workers) {
        throw ValidationError("item " + id + " has " + std::to_string(ranks.size()) + " " +
                              std::string(to_string(a)) + " rankings, expected " +
                              std::to_string(workers));
      }
      item.by_aspect[idx(a)] = aggregate_ranks(ranks);
    }
    items.push_back(std::move(item));
  }
  return items;
}

Rate good_suggestion_rate(const std::vector<RatedItem>& items, Setting setting, Aspect aspect) {
  if (items.empty()) throw std::invalid_argument("good suggestion rate of an empty item set");
  Rate rate;
  for (const auto& item : items) {
    rate.good += item.by_aspect[idx(aspect)].good(setting);
    ++rate.total;
  }
  return rate;
}

std::map<Emotion, Rate> per_emotion_rates(const std::vector<RatedItem>& items, Setting setting,
                                          Aspect aspect) {
  std::map<Emotion, Rate> out;
  for (const auto& item : items) {
    auto& rate = out[item.gold_emotion];
    rate.good += item.by_aspect[idx(aspect)].good(setting);
    ++rate.total;
  }
  return out;
}

ReportTable build_report(const std::vector<RatedItem>& items) {
  if (items.empty()) throw std::invalid_argument("report over an empty item set");
  ReportTable t;
  t.items = items.size();
  for (Aspect a : kAllAspects) {
    AverageRanks total;
    for (const auto& item : items) {
      const auto& r = item.by_aspect[idx(a)];
      total.input_sum += r.input_sum;
      total.baseline_sum += r.baseline_sum;
      total.emotion_sum += r.emotion_sum;
      total.workers += r.workers;
    }
    t.average_rank[0][idx(a)] = total.input();
    t.average_rank[1][idx(a)] = total.baseline();
    t.average_rank[2][idx(a)] = total.emotion();
  }
  for (Setting s : {Setting::Baseline, Setting::WithEmotion}) {
    const auto si = static_cast<std::size_t>(s);
    for (Aspect a : kAllAspects) t.rate[si][idx(a)] = good_suggestion_rate(items, s, a).percent();
    for (const auto& [e, rate] : per_emotion_rates(items, s)) {
      t.comfort_by_emotion[si][e] = rate.percent();
    }
  }
  return t;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string row(std::string_view label, const std::vector<std::string>& cells) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%-10.*s", static_cast<int>(label.size()), label.data());
  std::string out = buf;
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "  %14s", c.c_str());
    out += buf;
  }
  return out + '\n';
}

constexpr std::array<std::array<Emotion, 3>, 2> kEmotionRows = {{
    {Emotion::Anger, Emotion::Anticipation, Emotion::Fear},
    {Emotion::Joy, Emotion::Sadness, Emotion::Tired},
}};

}  // namespace

std::string format_report_text(const ReportTable& t) {
  std::string out;
  out += "Items: " + std::to_string(t.items) + "\n\n";
  out += row("Setting", {"Clarity", "Comfort", "Responsiveness"});
  out += "Average rank\n";
  const std::array<std::string_view, 3> candidates = {"Input", "Baseline", "+Emotion"};
  for (std::size_t c = 0; c < 3; ++c) {
    out += row(candidates[c], {fixed(t.average_rank[c][0], 3), fixed(t.average_rank[c][1], 3),
                               fixed(t.average_rank[c][2], 3)});
  }
  out += "Good Suggestion Rate (%)\n";
  for (std::size_t s = 0; s < 2; ++s) {
    out += row(to_string(static_cast<Setting>(s)),
               {fixed(t.rate[s][0], 2), fixed(t.rate[s][1], 2), fixed(t.rate[s][2], 2)});
  }
  out += "\nGood Suggestion Rate (%), comfort, by emotion\n";
  for (const auto& emotions : kEmotionRows) {
    std::vector<std::string> header;
    for (Emotion e : emotions) header.emplace_back(to_string(e));
    out += row("Setting", header);
    for (std::size_t s = 0; s < 2; ++s) {
      std::vector<std::string> cells;
      for (Emotion e : emotions) {
        const auto it = t.comfort_by_emotion[s].find(e);
        cells.push_back(it == t.comfort_by_emotion[s].end() ? "-" : fixed(it->second, 2));
      }
      out += row(to_string(static_cast<Setting>(s)), cells);
    }
  }
  return out;
}

std::string format_report_json(const ReportTable& t) {
  nlohmann::ordered_json j;
  j["items"] = t.items;
  const std::array<const char*, 3> candidates = {"input", "baseline", "emotion"};
  for (Aspect a : kAllAspects) {
    auto& ranks = j["average_rank"][std::string(to_string(a))];
    for (std::size_t c = 0; c < 3; ++c) ranks[candidates[c]] = t.average_rank[c][idx(a)];
  }
  for (std::size_t s = 0; s < 2; ++s) {
    auto& rates = j["good_suggestion_rate"][candidates[s + 1]];
    for (Aspect a : kAllAspects) rates[std::string(to_string(a))] = t.rate[s][idx(a)];
  }
  for (std::size_t s = 0; s < 2; ++s) {
    auto& by = j["comfort_by_emotion"][candidates[s + 1]];
    by = nlohmann::ordered_json::object();
    for (Emotion e : kAllEmotions) {
      const auto it = t.comfort_by_emotion[s].find(e);
      if (it != t.comfort_by_emotion[s].end()) by[std::string(to_string(e))] = it->second;
    }
  }
  return j.dump(2);
}

std::vector<RankRecord> SyntheticWorkers::generate(const std::vector<std::string>& item_ids) const {
  std::mt19937_64 rng(seed);
  std::extreme_value_distribution<double> gumbel(0.0, 1.0);
  const std::array<double, 3> strength = {input_strength, baseline_strength, emotion_strength};
  std::vector<RankRecord> out;
  for (const auto& id : item_ids) {
    for (Aspect a : kAllAspects) {
      for (std::size_t w = 1; w <= workers; ++w) {
        std::array<double, 3> utility{};
        for (std::size_t c = 0; c < 3; ++c) utility[c] = strength[c] + gumbel(rng);
        std::array<int, 3> rank{};
        for (std::size_t c = 0; c < 3; ++c) {
          rank[c] = 1;
          for (std::size_t o = 0; o < 3; ++o) {
            if (utility[o] > utility[c] || (utility[o] == utility[c] && o < c)) ++rank[c];
          }
        }
        out.push_back({id, "w" + std::to_string(w), a, {rank[0], rank[1], rank[2]}});
      }
    }
  }
  return out;
}

}  // namespace moodswipe
