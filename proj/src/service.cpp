#include "moodswipe/service.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace moodswipe {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw ValidationError(key + ": not an integer: " + value);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ValidationError(key + ": not a number: " + value);
  return out;
}

Response json_response(int status, const ordered_json& j) { return {status, j.dump(), "application/json"}; }

Response error(int status, std::string message) {
  ordered_json j;
  j["error"] = std::move(message);
  return json_response(status, j);
}

ordered_json probabilities_json(const EmotionPrediction& pred) {
  ordered_json j = ordered_json::object();
  for (Emotion e : kAllEmotions) j[std::string(to_string(e))] = pred[e];
  return j;
}

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  }) && id != "." && id != "..";
}

}  // namespace

void ServiceConfig::validate() const {
  timing.validate();
  if (!(bm25.k1 > 0)) throw ValidationError("bm25.k1 must be positive");
  if (!(bm25.b >= 0 && bm25.b <= 1)) throw ValidationError("bm25.b must lie in [0,1]");
  if (host.empty()) throw ValidationError("host must not be empty");
  if (port < 0 || port > 65535) throw ValidationError("port out of range");
}

ServiceConfig ServiceConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
  ServiceConfig cfg;
  std::array<Rgb, kNumEmotions> colors{};
  for (Emotion e : kAllEmotions) colors[code(e)] = cfg.colors.color_of(e);
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(std::string_view(text).substr(0, eq));
    const auto value = trim(std::string_view(text).substr(eq + 1));
    if (key == "corpus") {
      cfg.corpus_path = resolve(value);
    } else if (key == "model") {
      cfg.model_path = resolve(value);
    } else if (key == "log_dir") {
      cfg.log_dir = resolve(value);
    } else if (key == "bm25.k1") {
      cfg.bm25.k1 = parse_double(key, value);
    } else if (key == "bm25.b") {
      cfg.bm25.b = parse_double(key, value);
    } else if (key == "throttle_ms") {
      cfg.timing.throttle_ms = parse_int<TimestampMs>(key, value);
    } else if (key == "pause_ms") {
      cfg.timing.pause_ms = parse_int<TimestampMs>(key, value);
    } else if (key == "dwell_ms") {
      cfg.timing.dwell_ms = parse_int<TimestampMs>(key, value);
    } else if (key == "wrap_swipe") {
      if (value != "true" && value != "false") throw ValidationError("wrap_swipe: true or false");
      cfg.timing.wrap_swipe = value == "true";
    } else if (key == "host") {
      cfg.host = value;
    } else if (key == "port") {
      cfg.port = parse_int<int>(key, value);
    } else if (key.rfind("color.", 0) == 0) {
      const auto e = parse_emotion(std::string_view(key).substr(6));
      if (!e) throw ValidationError("unknown emotion in " + key);
      colors[code(*e)] = Rgb::from_hex(value);
    } else {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key " + key);
    }
  }
  cfg.colors = ColorMap(colors);
  cfg.validate();
  return cfg;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  return parse(in, path.parent_path());
}

LabelStore::LabelStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  {
    std::ifstream in(meta_path());
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      records_.push_back(label_from_meta_json(line));
    }
  }
  corpus_.open(corpus_path(), std::ios::app | std::ios::binary);
  meta_.open(meta_path(), std::ios::app | std::ios::binary);
  if (!corpus_ || !meta_) throw std::runtime_error("cannot open label files in " + dir_.string());
}

void LabelStore::append(const std::vector<LabelRecord>& records) {
  if (records.empty()) return;
  std::lock_guard lock(mu_);
  for (const auto& r : records) {
    corpus_ << label_line(r) << '\n';
    meta_ << label_meta_json(r) << '\n';
    records_.push_back(r);
  }
  corpus_.flush();
  meta_.flush();
}

std::vector<LabelRecord> LabelStore::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t LabelStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

Service::Service(ServiceConfig config)
    : config_((config.validate(), std::move(config))), labels_(config_.log_dir) {
  std::filesystem::create_directories(config_.log_dir / "sessions");
}

Service::Snapshot Service::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

void Service::set_model(EmotionClassifier model) {
  auto next = std::make_shared<const EmotionClassifier>(std::move(model));
  std::lock_guard lock(snapshot_mu_);
  snapshot_.model = std::move(next);
}

void Service::load_model(const std::filesystem::path& path) { set_model(moodswipe::load_model(path)); }

void Service::set_corpus(TurnStore store) {
  // Built outside the lock; readers keep using the old pair until the swap.
  auto shared = std::make_shared<const TurnStore>(std::move(store));
  auto index = std::make_shared<const Bm25Index>(shared->turns(), config_.bm25);
  std::lock_guard lock(snapshot_mu_);
  snapshot_.store = std::move(shared);
  snapshot_.index = std::move(index);
}

IngestStats Service::load_corpus(const std::filesystem::path& path) {
  const auto model = snapshot().model;
  Annotator annotate;
  if (model) annotate = [model](std::string_view text) { return model->predict(text).top(); };
  IngestStats stats;
  set_corpus(ingest_corpus(path, annotate, &stats));
  return stats;
}

void Service::initialize() {
  if (!config_.model_path.empty()) load_model(config_.model_path);
  if (!config_.corpus_path.empty()) load_corpus(config_.corpus_path);
}

Response Service::classify(std::string_view body) const {
  if (body.empty()) return error(400, "empty body");
  const auto model = snapshot().model;
  if (!model) return error(503, "model not loaded");
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    return error(400, "expected {\"text\": string}");
  }
  const auto pred = model->predict(j["text"].get<std::string>());
  const auto order = rank_emotions(pred);
  ordered_json out;
  out["probabilities"] = probabilities_json(pred);
  out["order"] = ordered_json::array();
  out["colors"] = ordered_json::object();
  for (Emotion e : order) {
    out["order"].push_back(to_string(e));
    out["colors"][std::string(to_string(e))] = config_.colors.color_of(e).hex();
  }
  return json_response(200, out);
}

Response Service::suggest(std::string_view body) const {
  if (body.size() > kMaxSuggestBody) return error(413, "body exceeds 16KB");
  if (body.empty()) return error(400, "empty body");
  const auto snap = snapshot();
  if (!snap.model || !snap.index) return error(503, "model or corpus not loaded");
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("received_text") ||
      !j["received_text"].is_string() ||
      (j.contains("typed_text") && !j["typed_text"].is_string())) {
    return error(400, "expected {\"received_text\": string, \"typed_text\": string}");
  }
  const auto received = j["received_text"].get<std::string>();
  const auto typed = j.value("typed_text", std::string());
  const Suggester suggester(*snap.store, *snap.index);
  const auto payload = suggester.build_swipe_payload(received, typed, *snap.model);

  ordered_json out;
  out["probabilities"] = probabilities_json(payload.prediction);
  auto& entries = out["entries"] = ordered_json::array();
  for (const auto& entry : payload.entries) {
    ordered_json e;
    e["emotion"] = to_string(entry.emotion);
    e["color"] = config_.colors.color_of(entry.emotion).hex();
    if (entry.suggestion) {
      e["text"] = entry.suggestion->text;
      e["score"] = entry.suggestion->score;
      e["source_turn_id"] = entry.suggestion->source_turn_id();
    }
    entries.push_back(std::move(e));
  }
  return json_response(200, out);
}

std::shared_ptr<Service::SessionSlot> Service::slot(const std::string& session_id) {
  std::lock_guard lock(sessions_mu_);
  auto& s = sessions_[session_id];
  if (!s) {
    s = std::make_shared<SessionSlot>();
    s->log.open(config_.log_dir / "sessions" / (session_id + ".jsonl"),
                std::ios::app | std::ios::binary);
  }
  return s;
}

Response Service::post_events(const std::string& session_id, std::string_view body) {
  if (!valid_session_id(session_id)) return error(400, "invalid session id");
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("events") || !j["events"].is_array()) {
    return error(400, "expected {\"events\": [...]}");
  }
  std::optional<std::string> key;
  if (j.contains("idempotency_key")) {
    if (!j["idempotency_key"].is_string()) return error(400, "idempotency_key must be a string");
    key = j["idempotency_key"].get<std::string>();
  }
  std::vector<SessionEvent> batch;
  try {
    for (const auto& e : j["events"]) batch.push_back(event_from_json(e.dump()));
  } catch (const ValidationError& ex) {
    return error(400, ex.what());
  }

  const auto s = slot(session_id);
  std::lock_guard lock(s->mu);
  if (key) {
    if (const auto it = s->acks.find(*key); it != s->acks.end()) {
      return {200, it->second, "application/json"};
    }
  }
  auto last = s->last_seen_t;
  for (const auto& e : batch) {
    if (last && e.t < *last) {
      ordered_json out;
      out["error"] = "out-of-order event";
      out["last_seen_t"] = *s->last_seen_t;
      return json_response(409, out);
    }
    last = e.t;
  }

  const auto model = snapshot().model;
  std::vector<LabelRecord> fresh;
  for (auto& e : batch) {
    if (e.kind == EventKind::ClassifyTrigger && !e.order && model) {
      e.order = rank_emotions(model->predict(e.text));
    }
    s->log << event_to_json(e) << '\n';
    s->composition.push_back(e);
    s->last_seen_t = e.t;
    if (e.kind == EventKind::Send) {
      const auto records = derive_labels(s->composition, session_id, config_.timing);
      labels_.append(records);
      fresh.insert(fresh.end(), records.begin(), records.end());
      s->composition.clear();
      s->log.flush();
    }
  }

  ordered_json ack;
  ack["session_id"] = session_id;
  ack["accepted"] = batch.size();
  ack["new_labels"] = fresh.size();
  auto& labels = ack["labels"] = ordered_json::array();
  for (const auto& r : fresh) labels.push_back(ordered_json::parse(label_meta_json(r)));
  if (s->last_seen_t) ack["last_seen_t"] = *s->last_seen_t;
  const auto body_out = ack.dump();
  if (key) s->acks.emplace(*key, body_out);
  return {200, body_out, "application/json"};
}

Response Service::export_labels() const {
  std::string out;
  for (const auto& r : labels_.snapshot()) out += label_line(r) + '\n';
  return {200, std::move(out), "text/tab-separated-values; charset=utf-8"};
}

Response Service::export_label_meta() const {
  std::string out;
  for (const auto& r : labels_.snapshot()) out += label_meta_json(r) + '\n';
  return {200, std::move(out), "application/x-ndjson"};
}

Response Service::healthz() const {
  const auto snap = snapshot();
  ordered_json out;
  out["status"] = "ok";
  out["model_loaded"] = static_cast<bool>(snap.model);
  out["corpus_turns"] = snap.store ? snap.store->turns().size() : 0;
  out["labels"] = labels_.size();
  return json_response(200, out);
}

}  // namespace moodswipe
