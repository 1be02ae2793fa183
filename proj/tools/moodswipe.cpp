// moodswipe command line: ingest, train, evaluate, serve, demo.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "moodswipe/classifier.hpp"
#include "moodswipe/evaluation.hpp"
#include "moodswipe/retrieval.hpp"
#include "moodswipe/service.hpp"
#include "moodswipe/suggestion.hpp"

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace moodswipe;

namespace {

constexpr int kExitError = 1;
constexpr int kExitMalformed = 2;

struct Failure {
  int code;
  std::string message;
};

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Failure{kExitError, "no such file: " + path.string()};
}

std::ifstream open_in(const fs::path& path) {
  require_file(path);
  std::ifstream in(path);
  if (!in) throw Failure{kExitError, "cannot read " + path.string()};
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Failure{kExitError, "cannot write " + path.string()};
  return out;
}

Annotator annotator_for(const std::optional<EmotionClassifier>& model) {
  if (!model) return [](std::string_view) { return Emotion::Neutral; };
  return [&m = *model](std::string_view text) { return m.predict(text).top(); };
}

TurnStore ingest_or_fail(const fs::path& path, const Annotator& annotate, IngestStats& stats) {
  require_file(path);
  try {
    return ingest_corpus(path, annotate, &stats);
  } catch (const CorpusError& e) {
    throw Failure{kExitMalformed, e.what()};
  }
}

LabeledCorpus read_labeled_or_fail(const fs::path& path) {
  auto in = open_in(path);
  auto corpus = read_labeled_corpus(in);
  const auto lines = corpus.examples.size() + corpus.malformed_lines + corpus.empty_texts;
  if (lines > 0 &&
      static_cast<double>(corpus.malformed_lines) > kMaxMalformedFraction * static_cast<double>(lines)) {
    throw Failure{kExitMalformed, std::to_string(corpus.malformed_lines) + " of " +
                                      std::to_string(lines) + " lines malformed in " +
                                      path.string()};
  }
  if (corpus.malformed_lines > 0) {
    std::cerr << "warning: skipped " << corpus.malformed_lines << " malformed lines\n";
  }
  return corpus;
}

void print_stats(const IngestStats& s) {
  std::cout << "lines " << s.lines << ", messages " << s.messages << ", turns " << s.turns
            << ", gold labels " << s.gold_labels << ", malformed " << s.malformed << "\n";
}

void print_payload(const SwipePayload& payload, const ColorMap& colors) {
  for (const auto& entry : payload.entries) {
    std::printf("%-13s %s %.4f  ", std::string(to_string(entry.emotion)).c_str(),
                colors.color_of(entry.emotion).hex().c_str(), payload.prediction[entry.emotion]);
    if (entry.suggestion) {
      std::printf("[%s %.3f] %s\n", entry.suggestion->source_turn_id().c_str(),
                  entry.suggestion->score, entry.suggestion->text.c_str());
    } else {
      std::printf("-\n");
    }
  }
}

struct TrainOptions {
  TrainConfig config;
  SplitRatios split{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 42;
};

void add_train_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--epochs", o.config.epochs)->check(CLI::PositiveNumber);
  cmd->add_option("--dim", o.config.embedding_dim, "embedding width")->check(CLI::PositiveNumber);
  cmd->add_option("--max-len", o.config.max_length, "tokens per message")->check(CLI::Range(5, 10000));
  cmd->add_option("--lr", o.config.learning_rate)->check(CLI::NonNegativeNumber);
  cmd->add_option("--batch", o.config.batch_size)->check(CLI::PositiveNumber);
  cmd->add_option("--keep-prob", o.config.keep_prob)->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", o.config.seed);
  cmd->add_option("--valid", o.split.valid, "validation fraction")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--test", o.split.test, "test fraction")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--split-seed", o.split_seed);
}

TrainResult run_training(const std::vector<LabeledExample>& examples, TrainOptions o,
                         bool verbose) {
  o.split.train = 1.0 - o.split.valid - o.split.test;
  if (o.split.train <= 0) throw Failure{kExitError, "--valid plus --test must stay below 1"};
  const auto split = split_dataset(examples, o.split, o.split_seed);
  std::cout << "train " << split.train.size() << ", valid " << split.valid.size() << ", test "
            << split.test.size() << "\n";
  auto result = train(split.train, split.valid, o.config,
                      [&](const EpochStats& s, const EmotionClassifier&) {
                        if (!verbose) return;
                        std::printf("epoch %3zu  loss %.4f  train %.3f  valid %.3f\n", s.epoch,
                                    s.mean_loss, s.train_accuracy, s.valid_accuracy);
                      });
  std::cout << "best epoch " << result.best_epoch << "\n";
  if (!split.test.empty()) std::cout << format_report(evaluate(result.model, split.test));
  return result;
}

int cmd_ingest(const fs::path& corpus, const fs::path& model_path, const fs::path& items_path,
               std::size_t context) {
  std::optional<EmotionClassifier> model;
  if (!model_path.empty()) {
    require_file(model_path);
    model = load_model(model_path);
  }
  IngestStats stats;
  const auto store = ingest_or_fail(corpus, annotator_for(model), stats);
  print_stats(stats);
  if (store.turns().empty()) throw Failure{kExitError, "corpus forms no turns"};
  const Bm25Index index(store.turns());
  std::printf("indexed %zu turns, average length %.2f\n", index.size(), index.average_length());
  if (!items_path.empty()) {
    auto items = select_eval_messages(store, context);
    attach_suggestions(items, store, index);
    auto out = open_out(items_path);
    write_eval_items(out, items);
    std::cout << "wrote " << items.size() << " evaluation items to " << items_path.string() << "\n";
  }
  return 0;
}

int cmd_train(const fs::path& labeled, const fs::path& out, TrainOptions opts, bool verbose) {
  const auto corpus = read_labeled_or_fail(labeled);
  auto result = run_training(corpus.examples, opts, verbose);
  save_model(result.model, out);
  std::cout << "saved " << out.string() << "\n";
  return 0;
}

int cmd_evaluate_ranks(const fs::path& ranks_path, const fs::path& items_path, std::size_t workers,
                       bool as_json) {
  auto items_in = open_in(items_path);
  const auto labels = read_item_labels(items_in);
  auto ranks_in = open_in(ranks_path);
  std::vector<RankRecord> records;
  try {
    records = read_rank_records(ranks_in);
  } catch (const ValidationError& e) {
    throw Failure{kExitMalformed, e.what()};
  }
  const auto rated = rate_items(records, labels, workers);
  const auto table = build_report(rated);
  std::cout << (as_json ? format_report_json(table) + "\n" : format_report_text(table));
  return 0;
}

int cmd_evaluate_model(const fs::path& model_path, const fs::path& labeled) {
  require_file(model_path);
  const auto model = load_model(model_path);
  const auto corpus = read_labeled_or_fail(labeled);
  std::cout << format_report(evaluate(model, corpus.examples));
  return 0;
}

int cmd_synth_ranks(const fs::path& items_path, const fs::path& out, SyntheticWorkers workers) {
  auto in = open_in(items_path);
  std::vector<std::string> ids;
  for (const auto& [id, emotion] : read_item_labels(in)) ids.push_back(id);
  auto file = open_out(out);
  write_rank_records(file, workers.generate(ids));
  std::cout << "wrote ranks for " << ids.size() << " items\n";
  return 0;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(Service& service, const std::string& host, int port) {
  HttpServer server(service);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on http://" << host << ":" << port << std::endl;
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  if (!ok) throw Failure{kExitError, "cannot listen on " + host + ":" + std::to_string(port)};
  return 0;
}

int cmd_serve(const fs::path& config_path, const std::string& host, int port) {
  ServiceConfig config;
  try {
    config = ServiceConfig::load(config_path);
  } catch (const ValidationError& e) {
    throw Failure{kExitError, std::string("bad config: ") + e.what()};
  }
  if (!host.empty()) config.host = host;
  if (port > 0) config.port = port;
  Service service(config);
  try {
    service.initialize();
  } catch (const CorpusError& e) {
    throw Failure{kExitMalformed, e.what()};
  }
  const auto h = service.snapshot();
  std::cout << "model " << (h.model ? "loaded" : "absent") << ", corpus turns "
            << (h.store ? h.store->turns().size() : 0) << ", labels " << service.labels().size()
            << "\n";
  return serve(service, config.host, config.port);
}

int cmd_demo(const fs::path& data_dir, const std::string& received, const std::string& typed,
             TrainOptions opts, bool serve_after, int port, const fs::path& log_dir) {
  const auto labeled = read_labeled_or_fail(data_dir / "demo_labeled.tsv");
  opts.split = {1.0, 0.0, 0.0};
  opts.config.require_all_classes = true;
  auto result = train(labeled.examples, {}, opts.config);
  const auto report = evaluate(result.model, labeled.examples);
  std::printf("trained on %zu examples, training accuracy %.3f\n", labeled.examples.size(),
              report.overall.accuracy());

  ServiceConfig config;
  config.log_dir = log_dir;
  config.port = port;
  Service service(config);
  service.set_model(std::move(result.model));
  try {
    print_stats(service.load_corpus(data_dir / "demo_dialogs.tsv"));
  } catch (const CorpusError& e) {
    throw Failure{kExitMalformed, e.what()};
  }

  const auto snap = service.snapshot();
  const Suggester suggester(*snap.store, *snap.index);
  std::cout << "\nreceived: " << received << "\ntyped:    " << typed << "\n\n";
  print_payload(suggester.build_swipe_payload(received, typed, *snap.model), config.colors);
  if (!serve_after) return 0;
  std::cout << "\n";
  return serve(service, config.host, config.port);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-aware reply suggestions"};
  app.require_subcommand(1);

  fs::path corpus, model_path, items_path;
  std::size_t context = kContextSize;
  auto* ingest = app.add_subcommand("ingest", "Ingest a dialog corpus and build the index");
  ingest->add_option("corpus", corpus, "dialog TSV")->required();
  ingest->add_option("--model", model_path, "annotate unlabeled messages with this model");
  ingest->add_option("--items", items_path, "write evaluation items (JSONL) here");
  ingest->add_option("--context", context, "context messages per item")->check(CLI::PositiveNumber);

  fs::path labeled, model_out = "model.bin";
  TrainOptions train_opts;
  bool verbose = false;
  auto* train_cmd = app.add_subcommand("train", "Train the emotion classifier");
  train_cmd->add_option("labeled", labeled, "label<TAB>text corpus")->required();
  train_cmd->add_option("-o,--out", model_out, "model file");
  train_cmd->add_flag("-v,--verbose", verbose, "print every epoch");
  add_train_flags(train_cmd, train_opts);

  fs::path ranks_path, eval_items, eval_model, eval_labeled;
  std::size_t workers = kWorkersPerItem;
  bool as_json = false;
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "Rank report from worker ranks, or accuracy of a model on a labeled set");
  eval_cmd->add_option("ranks", ranks_path, "rank TSV");
  eval_cmd->add_option("--items", eval_items, "evaluation items from `ingest --items`");
  eval_cmd->add_option("--workers", workers, "workers per item and aspect")->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--json", as_json);
  eval_cmd->add_option("--model", eval_model);
  eval_cmd->add_option("--labeled", eval_labeled);

  fs::path synth_items, synth_out = "ranks.tsv";
  SyntheticWorkers synth;
  auto* synth_cmd = app.add_subcommand("synth-ranks", "Simulated worker ranks for testing");
  synth_cmd->add_option("items", synth_items)->required();
  synth_cmd->add_option("-o,--out", synth_out);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--input-strength", synth.input_strength);
  synth_cmd->add_option("--baseline-strength", synth.baseline_strength);
  synth_cmd->add_option("--emotion-strength", synth.emotion_strength);

  fs::path config_path;
  std::string host;
  int port = 0;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("-c,--config", config_path)->required();
  serve_cmd->add_option("--host", host, "overrides the config");
  serve_cmd->add_option("--port", port, "overrides the config")->check(CLI::Range(1, 65535));

  fs::path data_dir = "data", demo_logs = "moodswipe-demo-logs";
  std::string received = "Why don't you come?", typed = "I am not going";
  TrainOptions demo_opts;
  demo_opts.config.epochs = 60;
  demo_opts.config.embedding_dim = 32;
  bool demo_serve = false;
  int demo_port = 8080;
  auto* demo = app.add_subcommand("demo", "Train on the demo set and show one suggestion payload");
  demo->add_option("--data", data_dir, "directory holding demo_dialogs.tsv and demo_labeled.tsv");
  demo->add_option("--received", received);
  demo->add_option("--typed", typed);
  demo->add_option("--epochs", demo_opts.config.epochs)->check(CLI::PositiveNumber);
  demo->add_flag("--serve", demo_serve, "keep serving HTTP afterwards");
  demo->add_option("--port", demo_port)->check(CLI::Range(1, 65535));
  demo->add_option("--log-dir", demo_logs);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(corpus, model_path, items_path, context);
    if (*train_cmd) return cmd_train(labeled, model_out, train_opts, verbose);
    if (*eval_cmd) {
      if (!eval_model.empty() || !eval_labeled.empty()) {
        if (eval_model.empty() || eval_labeled.empty()) {
          throw Failure{kExitError, "--model and --labeled go together"};
        }
        return cmd_evaluate_model(eval_model, eval_labeled);
      }
      if (ranks_path.empty() || eval_items.empty()) {
        throw Failure{kExitError, "evaluate needs a ranks file and --items"};
      }
      return cmd_evaluate_ranks(ranks_path, eval_items, workers, as_json);
    }
    if (*synth_cmd) return cmd_synth_ranks(synth_items, synth_out, synth);
    if (*serve_cmd) return cmd_serve(config_path, host, port);
    if (*demo) return cmd_demo(data_dir, received, typed, demo_opts, demo_serve, demo_port, demo_logs);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
