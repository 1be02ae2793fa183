#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "moodswipe/classifier.hpp"
#include "moodswipe/emotion.hpp"
#include "moodswipe/retrieval.hpp"
#include "moodswipe/session.hpp"
#include "moodswipe/suggestion.hpp"

namespace moodswipe {

/// Loaded from a `key = value` file. Blank lines and lines starting with
/// '#' are ignored; unknown keys are errors. Relative paths resolve against
/// the config file's directory.
///
///   corpus, model, log_dir           paths
///   bm25.k1, bm25.b                  retrieval parameters
///   throttle_ms, pause_ms, dwell_ms  trigger timings (throttle <= pause)
///   wrap_swipe                       true|false
///   color.<emotion>                  #RRGGBB
///   host, port                       listen address
struct ServiceConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path model_path;
  Bm25Params bm25;
  TimingConfig timing;
  ColorMap colors;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path log_dir = "moodswipe-logs";

  void validate() const;
  static ServiceConfig parse(std::istream& in,
                             const std::filesystem::path& base_dir = {});
  static ServiceConfig load(const std::filesystem::path& path);
};

inline constexpr std::size_t kMaxSuggestBody = 16 * 1024;

/// Transport-neutral response.
struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Append-only label log: `label<TAB>text` lines plus a JSON sidecar, both
/// under the log directory. Appends go through one lock; exports copy a
/// snapshot under the same lock.
class LabelStore {
 public:
  explicit LabelStore(std::filesystem::path dir);  // reloads existing records

  void append(const std::vector<LabelRecord>& records);
  std::vector<LabelRecord> snapshot() const;
  std::size_t size() const;

  std::filesystem::path corpus_path() const { return dir_ / "labels.tsv"; }
  std::filesystem::path meta_path() const { return dir_ / "labels.meta.jsonl"; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::vector<LabelRecord> records_;
  std::ofstream corpus_;
  std::ofstream meta_;
};

/// The request handlers behind the HTTP endpoints, callable directly.
///
/// Model and corpus form one immutable snapshot. Reloads build a new
/// snapshot and swap it in, so readers see either the old or the new one.
class Service {
 public:
  explicit Service(ServiceConfig config);

  void set_model(EmotionClassifier model);
  void load_model(const std::filesystem::path& path);
  /// Ingests and indexes a corpus; the loaded model, if any, annotates
  /// messages that lack a gold label.
  IngestStats load_corpus(const std::filesystem::path& path);
  void set_corpus(TurnStore store);

  /// Loads whatever the config names.
  void initialize();

  // POST /classify      {"text": "..."}
  Response classify(std::string_view body) const;
  // POST /suggest       {"received_text": "...", "typed_text": "..."}
  Response suggest(std::string_view body) const;
  // POST /sessions/{id}/events  {"idempotency_key": "...", "events": [...]}
  Response post_events(const std::string& session_id, std::string_view body);
  // GET /labels/export
  Response export_labels() const;
  // GET /labels/export/meta
  Response export_label_meta() const;
  // GET /healthz
  Response healthz() const;

  const ServiceConfig& config() const { return config_; }
  const LabelStore& labels() const { return labels_; }

  struct Snapshot {
    std::shared_ptr<const EmotionClassifier> model;
    std::shared_ptr<const TurnStore> store;
    std::shared_ptr<const Bm25Index> index;
  };
  Snapshot snapshot() const;

 private:
  struct SessionSlot {
    std::mutex mu;
    std::optional<TimestampMs> last_seen_t;
    std::vector<SessionEvent> composition;  // events since the last Send
    std::unordered_map<std::string, std::string> acks;  // idempotency key -> ack
    std::ofstream log;
  };

  std::shared_ptr<SessionSlot> slot(const std::string& session_id);

  ServiceConfig config_;
  mutable std::mutex snapshot_mu_;
  Snapshot snapshot_;
  std::mutex sessions_mu_;
  std::unordered_map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  LabelStore labels_;
};

/// Blocks serving HTTP on the configured address until stop() is called
/// from another thread or the process ends. Returns false when the address
/// cannot be bound.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port; returns it, or -1.
  int bind_any(const std::string& host);
  void listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace moodswipe
