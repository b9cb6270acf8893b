// Command-line front end: grammar checks, corpus generation, training,
// sampling and evaluation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nam/ag/grammar.h"
#include "nam/ag/validate.h"
#include "nam/corpus.h"
#include "nam/embedded.h"
#include "nam/engine.h"
#include "nam/error.h"
#include "nam/evaluator.h"
#include "nam/util/kv.h"

using namespace nam;

namespace {

int verbosity() {
  const char* v = std::getenv("NAM_LOG");
  return v ? std::atoi(v) : 1;
}

void log(const std::string& line) {
  if (verbosity() > 0) std::cerr << line << '\n';
}

ag::Grammar grammar_from(const std::string& path) {
  if (path.empty()) return ag::load_grammar(embedded_minic_grammar(), "minic");
  return ag::load_grammar_file(path);
}

ConstraintId constraint_from(const std::string& text) {
  auto c = parse_constraint(text);
  if (!c) throw Error(ErrorCode::UnknownConstraint, "unknown constraint '" + text + "'");
  return *c;
}

struct CheckGrammar {
  std::string file;

  int run() const {
    auto g = ag::load_grammar_file(file);
    auto report = ag::validate_grammar(g);
    if (report.ok()) {
      std::cout << file << ": ok (" << g.nonterminal_count() << " nonterminals, "
                << g.production_count() << " productions)\n";
      return 0;
    }
    std::cout << report.str();
    return 2;
  }
};

struct GenCorpus {
  std::string spec_file;
  std::string out;
  std::string grammar;
  std::optional<std::uint64_t> seed;

  int run() const {
    auto g = grammar_from(grammar);
    CorpusSpec spec = spec_file.empty() ? CorpusSpec{} : CorpusSpec::from(KeyValues::load(spec_file));
    if (seed) spec.seed = *seed;
    spec.check(g);
    auto corpus = generate_corpus(g, spec);
    write_corpus(out, g, corpus);
    log("wrote " + std::to_string(corpus.train.size()) + " train and " +
        std::to_string(corpus.test.size()) + " test programs to " + out);
    return 0;
  }
};

struct Train {
  std::string grammar;
  std::string corpus;
  std::string constraint = "cd";
  std::string variant = "both";
  std::string config;
  std::string out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool resume = false;

  int run() const {
    auto g = grammar_from(grammar);
    auto data = read_corpus(corpus, g);
    std::optional<Trainer> trainer;
    if (resume && std::filesystem::exists(out)) {
      trainer.emplace(g, Checkpoint::load(out), data.train);
      log("resuming " + out + " after epoch " + std::to_string(trainer->checkpoint().epoch));
    } else {
      auto v = parse_variant(variant);
      if (!v) throw Error(ErrorCode::BadConfig, "unknown variant '" + variant + "'");
      KeyValues kv = config.empty() ? KeyValues{} : KeyValues::load(config);
      for (const auto& s : sets) kv.set_assignment(s);
      if (seed) kv.set("seed", std::to_string(*seed));
      TrainConfig cfg;
      cfg.apply(kv);
      trainer.emplace(g, constraint_from(constraint), *v, cfg, data.train);
    }
    trainer->run([&](const EpochResult& e) {
      log("epoch " + std::to_string(e.epoch) + " loss " + format_double(e.train_loss) + " legal " +
          std::to_string(e.legal) + " violations " + std::to_string(e.violations) +
          (e.improved ? " *" : ""));
      trainer->checkpoint().save(out);
    });
    trainer->checkpoint().save(out);
    return 0;
  }
};

struct Sample {
  std::string ckpt;
  int count = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<int> node_cap;

  int run() const {
    Checkpoint c = Checkpoint::load(ckpt);
    TrainedModel model(c);
    int cap = node_cap ? *node_cap : c.config.node_cap;
    auto report = sample_batch(model.policy(), model.grammar(), model.constraint(), count, seed, cap);
    report.model = variant_label(c.variant);
    write_file(out, report.text());
    KeyValues m;
    m.set("checkpoint", ckpt);
    m.set("grammar_hash", hex64(c.grammar_hash));
    m.set("count", std::to_string(count));
    m.set("seed", std::to_string(seed));
    m.set("node_cap", std::to_string(cap));
    m.set("tool_version", NAM_VERSION);
    m.save(out + ".manifest");
    log(std::to_string(report.legal()) + " legal, " + std::to_string(report.illegal()) +
        " illegal, " + std::to_string(report.incomplete()) + " incomplete, " +
        std::to_string(report.violations()) + " violations");
    return 0;
  }
};

struct Eval {
  std::vector<std::string> ckpts;
  std::string corpus;
  std::vector<std::string> samples;
  std::string out;
  std::string csv;

  int run() const {
    if (ckpts.size() != samples.size()) {
      throw Error(ErrorCode::BadConfig, "give one sample report per checkpoint");
    }
    EvalReport report;
    KeyValues m;
    for (std::size_t i = 0; i < ckpts.size(); ++i) {
      Checkpoint c = Checkpoint::load(ckpts[i]);
      TrainedModel model(c);
      auto data = read_corpus(corpus, model.grammar());
      auto batch = GenerationReport::parse(read_file(samples[i]));
      std::string constraint = constraint_short_name(model.constraint());
      if (batch.constraint != constraint) {
        throw Error(ErrorCode::BadConfig, samples[i] + " was sampled under another constraint");
      }
      if (report.rows.empty()) report.constraint = constraint;
      else if (report.constraint != constraint) {
        throw Error(ErrorCode::BadConfig, "checkpoints use different constraints");
      }
      EvalRow row;
      row.model = variant_label(c.variant);
      if (batch.trees.size() > static_cast<std::size_t>(batch.incomplete())) {
        auto stats = tree_stats(batch);
        row.avg_vars = stats.avg_vars;
        row.avg_procs = stats.avg_procs;
      }
      row.violations = count_violations(batch);
      row.legal = count_legal(batch);
      row.trees = static_cast<int>(batch.trees.size());
      row.incomplete = batch.incomplete();
      row.sample_seed = batch.seed;
      row.nll_train = avg_nll(model.policy(), model.grammar(), model.constraint(), data.train);
      row.nll_test = avg_nll(model.policy(), model.grammar(), model.constraint(), data.test);
      report.rows.push_back(row);
      m.set("checkpoint." + std::to_string(i), ckpts[i]);
      m.set("samples." + std::to_string(i), samples[i]);
    }
    report.sort_rows();
    std::string table = render_table(report);
    write_file(out, table);
    std::string csv_path = csv.empty() ? out + ".csv" : csv;
    write_file(csv_path, render_csv(report));
    m.set("corpus", corpus);
    m.set("tool_version", NAM_VERSION);
    m.save(out + ".manifest");
    std::cout << table;
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grammar-constrained tree generation workbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NAM_VERSION);

  CheckGrammar check;
  auto* check_cmd = app.add_subcommand("check-grammar", "Validate an attribute grammar file");
  check_cmd->add_option("grammar", check.file, "Grammar file")->required();

  GenCorpus gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic mini-C corpus");
  gen_cmd->add_option("--spec", gen.spec_file, "Corpus spec (key = value)");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Overrides the spec seed");
  gen_cmd->add_option("--grammar", gen.grammar, "Grammar file (default: built-in mini-C)");

  Train train;
  auto* train_cmd = app.add_subcommand("train", "Train one model variant");
  train_cmd->add_option("--grammar", train.grammar, "Grammar file (default: built-in mini-C)");
  train_cmd->add_option("--corpus", train.corpus, "Corpus directory")->required();
  train_cmd->add_option("--constraint", train.constraint, "cd or ct");
  train_cmd->add_option("--variant", train.variant, "vanilla, loss, context, both or sgwc");
  train_cmd->add_option("--config", train.config, "Config file (key = value)");
  train_cmd->add_option("--set", train.sets, "Override a config key (key=value)");
  train_cmd->add_option("--seed", train.seed, "Overrides the config seed");
  train_cmd->add_option("--out", train.out, "Checkpoint file")->required();
  train_cmd->add_flag("--resume", train.resume, "Continue from --out if it exists");

  Sample sample;
  auto* sample_cmd = app.add_subcommand("sample", "Generate trees from a checkpoint");
  sample_cmd->add_option("--ckpt", sample.ckpt, "Checkpoint file")->required();
  sample_cmd->add_option("--count", sample.count, "Number of trees");
  sample_cmd->add_option("--seed", sample.seed, "Batch seed");
  sample_cmd->add_option("--node-cap", sample.node_cap, "Node cap (default: from checkpoint)");
  sample_cmd->add_option("--out", sample.out, "Report file")->required();

  Eval eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare checkpoints on a corpus and sample reports");
  eval_cmd->add_option("--ckpt", eval.ckpts, "Checkpoint files")->required();
  eval_cmd->add_option("--corpus", eval.corpus, "Corpus directory")->required();
  eval_cmd->add_option("--samples", eval.samples, "Sample reports, one per checkpoint")->required();
  eval_cmd->add_option("--out", eval.out, "Text table")->required();
  eval_cmd->add_option("--csv", eval.csv, "CSV table (default: <out>.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: BadConfig: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*check_cmd) return check.run();
    if (*gen_cmd) return gen.run();
    if (*train_cmd) return train.run();
    if (*sample_cmd) return sample.run();
    if (*eval_cmd) return eval.run();
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: Io: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
