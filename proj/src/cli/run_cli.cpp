#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "dqa/cli.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "dqa/gradcheck.hpp"
#include "dqa/http_api.hpp"
#include "httplib.h"

namespace fs = std::filesystem;

namespace dqa {

namespace {

struct Globals {
  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

struct Context {
  Globals globals;
  RunConfig config;
  std::ostream& out;
  std::ostream& err;

  void log(const std::string& msg) const {
    if (globals.verbose) err << "[disclosure-qa] " << msg << "\n";
  }
  // --seed wins over the config file; stochastic commands refuse to run without one.
  std::uint64_t require_seed(const char* command) const {
    if (globals.seed) return *globals.seed;
    if (config.seed) return *config.seed;
    throw UsageError(std::string(command) + " needs --seed (or \"seed\" in the config file)");
  }
};

// Writes to `path`, or to `out` when path is empty or "-".
void emit(const Context& ctx, const std::string& path, std::string_view bytes) {
  if (path.empty() || path == "-") {
    ctx.out << bytes;
    ctx.out.flush();
  } else {
    write_file(path, bytes);
    ctx.log("wrote " + path);
  }
}

std::vector<int> parse_qids(const std::string& spec) {
  if (spec.empty() || spec == "all") return {};
  std::vector<int> qids;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      const int q = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      qids.push_back(q);
    } catch (const std::exception&) {
      throw UsageError("--questions: expected comma-separated qids, got '" + spec + "'");
    }
  }
  std::set<int> known;
  for (const auto& q : tcfd_questions()) known.insert(q.qid);
  for (int q : qids) {
    if (!known.count(q)) throw UnknownQuestionId("no question with qid " + std::to_string(q));
  }
  return qids;
}

std::vector<int> all_or(std::vector<int> qids) {
  if (!qids.empty()) {
    std::sort(qids.begin(), qids.end());
    qids.erase(std::unique(qids.begin(), qids.end()), qids.end());
    return qids;
  }
  for (const auto& q : tcfd_questions()) qids.push_back(q.qid);
  return qids;
}

std::unique_ptr<Scorer> scorer_for(const Context& ctx, const std::string& scorer_cmd, const std::string& classifier,
                                   const std::string& embeddings) {
  ServiceConfig sc = ctx.config.service;
  if (!scorer_cmd.empty()) sc.scorer_cmd = scorer_cmd;
  if (!classifier.empty()) sc.classifier_path = classifier;
  if (!embeddings.empty()) sc.embeddings_path = embeddings;
  if (!sc.scorer_cmd && (sc.classifier_path.empty() || sc.embeddings_path.empty())) {
    throw UsageError("need --classifier and --embeddings, or --scorer-cmd");
  }
  return make_scorer(sc);
}

int serve(const Context& ctx, ServiceConfig sc) {
  sc.segmenter = ctx.config.segmenter;
  sc.validate();
  // Blocked before any thread starts, so every thread inherits the mask and
  // only the waiter below receives them.
  sigset_t stop_signals, previous;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);
  struct RestoreMask {
    sigset_t mask;
    ~RestoreMask() { pthread_sigmask(SIG_SETMASK, &mask, nullptr); }
  } restore{previous};

  // Fail fast: the model is loaded before the port is opened.
  std::shared_ptr<Scorer> scorer = make_scorer(sc);
  auto store = std::make_shared<LocalObjectStore>(sc.store_root);
  BatchService::Options options;
  options.workers = sc.workers;
  options.max_upload_bytes = sc.max_upload_bytes;
  options.segmenter = sc.segmenter;
  BatchService service(store, scorer, options);
  auto server = make_http_server(service, sc.max_upload_bytes);

  int port = sc.port;
  if (port == 0) {
    port = server->bind_to_any_port(sc.host);
  } else if (!server->bind_to_port(sc.host, port)) {
    port = -1;
  }
  if (port < 0) throw IoError("cannot listen on " + sc.host + ":" + std::to_string(sc.port));
  ctx.out << "listening on http://" << sc.host << ":" << port << std::endl;
  ctx.log("store " + sc.store_root.string() + ", " + std::to_string(sc.workers) + " workers");

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    server->stop();
  });
  server->listen_after_bind();
  // Wakes the waiter when the server stopped on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  ctx.log("stopped");
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Question answering over climate disclosure reports", "disclosure-qa"};
  app.require_subcommand(1);
  Globals g;
  std::string config_path;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random choice");
  app.add_flag("--verbose", g.verbose, "Progress messages on stderr");
  app.fallthrough();

  // extract
  std::vector<std::string> inputs;
  std::string out_path;
  bool skip_bad = false;
  auto* extract = app.add_subcommand("extract", "Extract raw text from PDF or text files");
  extract->add_option("inputs", inputs, "Input files")->required();
  extract->add_option("-o,--out-dir", out_path, "Directory for <stem>.txt outputs")->required();
  extract->add_flag("--skip-bad", skip_bad, "Warn and continue on unreadable inputs");

  // segment
  auto* segment = app.add_subcommand("segment", "Split documents into a sentence TSV");
  segment->add_option("inputs", inputs, "Text or PDF files")->required();
  segment->add_option("-o,--out", out_path, "Output TSV (default stdout)");

  // train-embeddings
  std::optional<std::uint32_t> dim, epochs, threads;
  std::optional<std::uint64_t> min_count;
  auto* train_emb = app.add_subcommand("train-embeddings", "Train SGNS word embeddings");
  train_emb->add_option("inputs", inputs, "Corpus files or directories")->required();
  train_emb->add_option("-o,--out", out_path, "Model file")->required();
  train_emb->add_option("--dim", dim);
  train_emb->add_option("--epochs", epochs);
  train_emb->add_option("--min-count", min_count);
  train_emb->add_option("--threads", threads);

  // build-dataset
  std::string labels, questions_path;
  auto* build = app.add_subcommand("build-dataset", "Build company-disjoint QA pair splits");
  build->add_option("--labels", labels, "Annotation JSON")->required()->check(CLI::ExistingFile);
  build->add_option("--questions", questions_path, "Questions JSON (default: the built-in 14)");
  build->add_option("-o,--out-dir", out_path, "Directory for train/dev/test TSVs and manifest.json")->required();

  // train
  std::string train_tsv, dev_tsv, embeddings, classifier;
  bool self_test = false;
  auto* train = app.add_subcommand("train", "Train the pair classifier");
  train->add_option("--train", train_tsv, "Training pairs TSV");
  train->add_option("--dev", dev_tsv, "Dev pairs TSV for threshold calibration");
  train->add_option("--embeddings", embeddings, "Embedding model");
  train->add_option("-o,--out", out_path, "Classifier file");
  train->add_flag("--self-test", self_test, "Only check analytic gradients against finite differences");

  // eval
  std::vector<std::string> pair_files;
  std::string json_out;
  auto* eval = app.add_subcommand("eval", "Evaluate on pair TSVs; dev and test together add the difference table");
  eval->add_option("--classifier", classifier)->required();
  eval->add_option("--embeddings", embeddings)->required();
  eval->add_option("pairs", pair_files, "Pair TSVs")->required();
  eval->add_option("--json", json_out, "Report JSON output");

  // infer
  std::string qid_spec, scorer_cmd;
  auto* infer = app.add_subcommand("infer", "Score documents against the questions");
  infer->add_option("inputs", inputs, "Documents")->required();
  infer->add_option("--classifier", classifier);
  infer->add_option("--embeddings", embeddings);
  infer->add_option("--scorer-cmd", scorer_cmd, "External scorer command");
  infer->add_option("--questions", qid_spec, "Comma-separated qids (default all)");
  infer->add_option("-o,--out", out_path, "Result TSV (default stdout)");

  // serve
  std::optional<int> port;
  std::string store_root;
  std::optional<unsigned> workers;
  auto* serve_cmd = app.add_subcommand("serve", "Run the batch HTTP service");
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--store", store_root);
  serve_cmd->add_option("--workers", workers);
  serve_cmd->add_option("--classifier", classifier);
  serve_cmd->add_option("--embeddings", embeddings);
  serve_cmd->add_option("--scorer-cmd", scorer_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) g.config_path = config_path;
    if (*seed_opt) g.seed = seed;
    Context ctx{g, g.config_path ? load_run_config(*g.config_path) : RunConfig{}, out, err};
    const auto paths = [&] { return std::vector<fs::path>(inputs.begin(), inputs.end()); };

    if (*extract) {
      fs::create_directories(out_path);
      for (const auto& in : inputs) {
        try {
          const fs::path target = fs::path(out_path) / (fs::path(in).stem().string() + ".txt");
          write_file(target, extract_text(in));
          ctx.log("extracted " + in);
        } catch (const Error& e) {
          if (!skip_bad) throw;
          err << "warning: skipped " << in << ": " << e.kind() << ": " << e.what() << "\n";
        }
      }
      return 0;
    }

    if (*segment) {
      std::vector<Sentence> all;
      for (const auto& p : paths()) {
        auto s = segment_file(p, ctx.config.segmenter);
        all.insert(all.end(), s.begin(), s.end());
      }
      std::ostringstream tsv;
      write_sentences_tsv(all, tsv);
      emit(ctx, out_path, tsv.str());
      return 0;
    }

    if (*train_emb) {
      TrainConfig tc = ctx.config.embeddings;
      tc.seed = ctx.require_seed("train-embeddings");
      if (dim) tc.dim = *dim;
      if (epochs) tc.epochs = *epochs;
      if (min_count) tc.min_count = *min_count;
      if (threads) tc.threads = *threads;
      const auto p = paths();
      const auto corpus = load_corpus(p, ctx.config.segmenter);
      ctx.log(std::to_string(corpus.size()) + " sequences");
      TrainStats stats;
      const auto model = train_sgns(corpus, tc, &stats);
      save_model(model, out_path);
      for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e) {
        ctx.log("epoch " + std::to_string(e + 1) + " loss " + std::to_string(stats.epoch_loss[e]));
      }
      out << "vocab " << model.vocab.size() << ", dim " << model.dim << ", " << stats.updates << " updates\n";
      return 0;
    }

    if (*build) {
      DatasetConfig dc = ctx.config.dataset;
      dc.seed = ctx.require_seed("build-dataset");
      std::optional<fs::path> qp;
      if (!questions_path.empty()) qp = questions_path;
      const auto built = build_dataset_from_labels(labels, qp, dc, ctx.config.segmenter);
      write_dataset(built, out_path);
      for (const auto& [split, s] : built.summary) {
        out << split_name(split) << ": " << s.companies << " companies, " << s.positives << " positives, "
            << s.negatives << " negatives\n";
      }
      return 0;
    }

    if (*train) {
      const std::uint64_t s = ctx.require_seed("train");
      if (self_test) {
        const auto sgns = check_sgns_gradient(100, s);
        const auto logistic = check_classifier_gradient(100, s);
        const bool ok = sgns.max_rel_error < 1e-4 && logistic.max_rel_error < 1e-5;
        out << "sgns gradient: max relative error " << sgns.max_rel_error << " over " << sgns.draws << " draws\n"
            << "logistic gradient: max relative error " << logistic.max_rel_error << " over " << logistic.draws
            << " draws\n"
            << (ok ? "self-test passed" : "self-test FAILED") << "\n";
        return ok ? 0 : 1;
      }
      if (train_tsv.empty() || embeddings.empty() || out_path.empty()) {
        throw UsageError("train needs --train, --embeddings and --out (or --self-test)");
      }
      ClassifierConfig cc = ctx.config.classifier;
      cc.seed = s;
      const auto model = load_model(embeddings);
      const auto train_pairs = pairs_of(load_pairs_tsv(train_tsv));
      const auto dev_pairs = dev_tsv.empty() ? std::vector<QAPair>{} : pairs_of(load_pairs_tsv(dev_tsv));
      const auto clf = train_pair_classifier(train_pairs, dev_pairs, tcfd_questions(), model, cc);
      save_classifier(clf, out_path);
      out << "trained on " << train_pairs.size() << " pairs, threshold " << clf.threshold << "\n";
      return 0;
    }

    if (*eval) {
      const auto model = load_model(embeddings);
      const auto clf = load_classifier(classifier);
      check_compatible(clf, model);
      std::map<Split, std::vector<QAPair>> by_split;
      for (const auto& f : pair_files) {
        for (auto& row : load_pairs_tsv(f)) by_split[row.split].push_back(std::move(row.pair));
      }
      std::vector<EvalReport> reports;
      for (const auto& [split, pairs] : by_split) {
        reports.push_back(report(predict_pairs(clf, model, pairs, tcfd_questions()), std::string(split_name(split))));
        out << report_text(reports.back()) << "\n";
      }
      std::optional<DiffReport> diff;
      if (by_split.count(Split::dev) && by_split.count(Split::test)) {
        const auto& dev_report = *std::find_if(reports.begin(), reports.end(),
                                               [](const EvalReport& r) { return r.split == "dev"; });
        const auto& test_report = *std::find_if(reports.begin(), reports.end(),
                                                [](const EvalReport& r) { return r.split == "test"; });
        diff = val_test_diff(dev_report, test_report);
        out << diff_text(*diff) << "\n";
      }
      if (!json_out.empty()) write_file(json_out, evaluation_json(reports, diff ? &*diff : nullptr));
      return 0;
    }

    if (*infer) {
      const auto qids = all_or(parse_qids(qid_spec));
      auto scorer = scorer_for(ctx, scorer_cmd, classifier, embeddings);
      const auto p = paths();
      emit(ctx, out_path, infer_documents(p, qids, *scorer, ctx.config.segmenter));
      return 0;
    }

    if (*serve_cmd) {
      ServiceConfig sc = ctx.config.service;
      apply_env_overrides(sc);
      if (port) sc.port = *port;
      if (!store_root.empty()) sc.store_root = store_root;
      if (workers) sc.workers = *workers;
      if (!classifier.empty()) sc.classifier_path = classifier;
      if (!embeddings.empty()) sc.embeddings_path = embeddings;
      if (!scorer_cmd.empty()) sc.scorer_cmd = scorer_cmd;
      return serve(ctx, sc);
    }
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dqa
