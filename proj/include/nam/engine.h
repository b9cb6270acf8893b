#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nam/ag/grammar.h"
#include "nam/ast.h"
#include "nam/constraint.h"
#include "nam/generate.h"
#include "nam/neural/adam.h"
#include "nam/neural/config.h"
#include "nam/neural/lstm.h"
#include "nam/sgwc.h"
#include "nam/util/kv.h"

namespace nam {

enum class Variant { Vanilla, Loss, Context, Both, Sgwc };

/// "vanilla", "loss", "context", "both", "sgwc".
const char* variant_name(Variant v);
/// Table label, e.g. "NAM w/ context".
const char* variant_label(Variant v);
std::optional<Variant> parse_variant(const std::string& text);
/// Table order: vanilla, loss, context, both, sgwc.
const std::vector<Variant>& all_variants();

struct TrainConfig {
  neural::ModelConfig model;
  int max_epochs = 50;
  int patience = 3;             // epochs without a better sample score
  int early_stop_samples = 100;
  bool restore_best = false;    // sample from the best epoch instead of the last
  int node_cap = 2000;
  double alpha = 1.0;           // SGWC smoothing

  /// Reads model and training keys; throws Error(BadConfig) on unknown
  /// keys or bad values.
  void apply(const KeyValues& kv);
  void write(KeyValues& kv) const;
  void check() const;
};

/// Model widths and loss/context switches for a variant.
neural::ModelConfig variant_model(const TrainConfig& config, Variant variant,
                                  const ag::Grammar& grammar, ConstraintId constraint);

struct EpochResult {
  int epoch = 0;           // 1-based
  double train_loss = 0;   // mean total loss over predictions, dropout on
  int windows = 0;
  int legal = 0;           // early-stopping sample
  long violations = 0;
  int incomplete = 0;
  bool improved = false;
};

/// Everything needed to sample from a model or resume its training.
struct Checkpoint {
  Variant variant = Variant::Vanilla;
  ConstraintId constraint = ConstraintId::DeclaredVariable;
  TrainConfig config;
  std::string grammar_name;
  std::string grammar_text;
  std::uint64_t grammar_hash = 0;
  std::uint64_t corpus_hash = 0;

  int epoch = 0;
  int stale_epochs = 0;
  bool finished = false;
  int best_legal = -1;
  long best_violations = 0;
  std::vector<EpochResult> history;

  Eigen::VectorXd theta;       // current parameters
  Eigen::VectorXd best_theta;  // parameters at the best early-stopping score
  Eigen::VectorXd adam_m, adam_v;
  long adam_steps = 0;
  std::string rng_state;
  std::string sgwc_table;

  /// Binary container plus `<path>.manifest`. Throws Error(Io).
  void save(const std::string& path) const;
  /// Throws Error(Io) or Error(MalformedStream).
  static Checkpoint load(const std::string& path);
  std::string bytes() const;
  static Checkpoint from_bytes(const std::string& bytes);
  KeyValues manifest() const;

  /// Grammar embedded in the checkpoint.
  ag::Grammar grammar() const;
};

/// Fingerprint of a training set (order-sensitive).
std::uint64_t corpus_fingerprint(const ag::Grammar& grammar, const std::vector<AstTree>& trees);

/// A loaded checkpoint ready for sampling and scoring.
class TrainedModel {
 public:
  explicit TrainedModel(const Checkpoint& checkpoint);

  const ag::Grammar& grammar() const { return *grammar_; }
  ConstraintId constraint() const { return constraint_; }
  Variant variant() const { return variant_; }
  Policy& policy() { return *policy_; }
  const neural::LstmModel* lstm() const { return lstm_.get(); }
  const Sgwc* sgwc() const { return sgwc_.get(); }

 private:
  std::unique_ptr<ag::Grammar> grammar_;
  ConstraintId constraint_;
  Variant variant_;
  std::unique_ptr<neural::LstmModel> lstm_;
  std::unique_ptr<Sgwc> sgwc_;
  std::unique_ptr<Policy> policy_;
};

/// Truncated-BPTT training with early stopping on generated-tree legality.
/// The grammar and trees must outlive the trainer.
class Trainer {
 public:
  Trainer(const ag::Grammar& grammar, ConstraintId constraint, Variant variant,
          const TrainConfig& config, const std::vector<AstTree>& train);
  /// Continues from a checkpoint at its epoch boundary. Throws
  /// Error(CorpusGrammarMismatch) when the grammar differs.
  Trainer(const ag::Grammar& grammar, const Checkpoint& checkpoint,
          const std::vector<AstTree>& train);

  bool finished() const { return ckpt_.finished; }
  /// One pass over the training trees, then the early-stopping sample.
  EpochResult epoch();
  /// Epochs until early stopping or the epoch cap.
  void run(const std::function<void(const EpochResult&)>& on_epoch = {});

  const Checkpoint& checkpoint() const;
  const neural::LstmModel* model() const { return model_.get(); }

  /// Logical-machine calls made to build model inputs and loss sets.
  long context_queries() const { return context_queries_; }
  long legal_queries() const { return legal_queries_; }

 private:
  struct Sequence {
    std::vector<neural::ModelToken> tokens;
  };

  void prepare(const std::vector<AstTree>& train);
  const std::vector<std::uint8_t>* intern_context(const std::vector<std::uint8_t>& bits);
  const std::vector<int>* intern_legal(std::vector<int> legal);
  double train_tree(const Sequence& seq, int& windows, long& predictions);

  const ag::Grammar* grammar_;
  mutable Checkpoint ckpt_;
  std::unique_ptr<neural::LstmModel> model_;
  neural::Adam adam_;
  neural::Tape tape_;
  Rng rng_;
  std::vector<Sequence> sequences_;
  std::vector<TokenStream> streams_;

  std::deque<std::vector<std::uint8_t>> context_pool_;
  std::unordered_map<std::string, const std::vector<std::uint8_t>*> context_index_;
  std::deque<std::vector<int>> legal_pool_;
  std::map<std::vector<int>, const std::vector<int>*> legal_index_;

  long context_queries_ = 0;
  long legal_queries_ = 0;
};

}  // namespace nam
