#include "nam/engine.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "nam/corpus.h"
#include "nam/error.h"

namespace nam {

namespace {

struct VariantInfo {
  Variant variant;
  const char* name;
  const char* label;
};

constexpr VariantInfo kVariants[] = {
    {Variant::Vanilla, "vanilla", "Vanilla RNN"},
    {Variant::Loss, "loss", "NAM w/ 3-level loss"},
    {Variant::Context, "context", "NAM w/ context"},
    {Variant::Both, "both", "NAM w/ both"},
    {Variant::Sgwc, "sgwc", "SGWC"},
};

const VariantInfo& info(Variant v) {
  for (const auto& i : kVariants) {
    if (i.variant == v) return i;
  }
  throw Error(ErrorCode::BadConfig, "unknown variant");
}

}  // namespace

const char* variant_name(Variant v) { return info(v).name; }
const char* variant_label(Variant v) { return info(v).label; }

std::optional<Variant> parse_variant(const std::string& text) {
  for (const auto& i : kVariants) {
    if (text == i.name || text == i.label) return i.variant;
  }
  return std::nullopt;
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = {Variant::Vanilla, Variant::Loss, Variant::Context,
                                         Variant::Both, Variant::Sgwc};
  return v;
}

void TrainConfig::apply(const KeyValues& kv) {
  std::string unknown = kv.unknown_keys(
      {"hidden", "layers", "truncation", "learning_rate", "keep_prob", "l1", "l2", "lambda",
       "use_context", "use_three_level_loss", "seed", "nonterminals", "context", "productions",
       "max_epochs", "patience", "early_stop_samples", "restore_best", "node_cap", "alpha"});
  if (!unknown.empty()) throw Error(ErrorCode::BadConfig, "unknown config keys: " + unknown);
  model.apply(kv);
  max_epochs = static_cast<int>(kv.get_int("max_epochs", max_epochs));
  patience = static_cast<int>(kv.get_int("patience", patience));
  early_stop_samples = static_cast<int>(kv.get_int("early_stop_samples", early_stop_samples));
  restore_best = kv.get_bool("restore_best", restore_best);
  node_cap = static_cast<int>(kv.get_int("node_cap", node_cap));
  alpha = kv.get_double("alpha", alpha);
  check();
}

void TrainConfig::write(KeyValues& kv) const {
  model.write(kv);
  kv.set("max_epochs", std::to_string(max_epochs));
  kv.set("patience", std::to_string(patience));
  kv.set("early_stop_samples", std::to_string(early_stop_samples));
  kv.set("restore_best", restore_best ? "true" : "false");
  kv.set("node_cap", std::to_string(node_cap));
  kv.set("alpha", format_double(alpha));
}

void TrainConfig::check() const {
  model.check();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::BadConfig, what); };
  if (max_epochs < 1) fail("max_epochs must be positive");
  if (patience < 1) fail("patience must be positive");
  if (early_stop_samples < 1) fail("early_stop_samples must be positive");
  if (node_cap < 1) fail("node_cap must be positive");
  if (!(alpha >= 0)) fail("alpha must be nonnegative");
}

neural::ModelConfig variant_model(const TrainConfig& config, Variant variant,
                                  const ag::Grammar& grammar, ConstraintId constraint) {
  neural::ModelConfig m = config.model;
  m.use_context = variant == Variant::Context || variant == Variant::Both;
  m.use_three_level_loss = variant == Variant::Loss || variant == Variant::Both;
  m.nonterminals = grammar.nonterminal_count();
  m.productions = grammar.production_count();
  m.context = m.use_context ? context_length(grammar, constraint) : 0;
  return m;
}

std::uint64_t corpus_fingerprint(const ag::Grammar& grammar, const std::vector<AstTree>& trees) {
  std::string all;
  for (const auto& t : trees) {
    all += format_stream(grammar, linearize(grammar, t));
    all += '\n';
  }
  return ag::fnv1a64(all);
}

// ---------------------------------------------------------------------------
// Checkpoint container

namespace {

constexpr const char* kMagic = "NAMCKPT 1\n";

void put_doubles(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(v[i]);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
}

Eigen::VectorXd get_doubles(const std::string& bytes) {
  if (bytes.size() % 8 != 0) throw Error(ErrorCode::MalformedStream, "parameter section size");
  Eigen::VectorXd v(static_cast<Eigen::Index>(bytes.size() / 8));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) {
      bits = (bits << 8) | static_cast<unsigned char>(bytes[static_cast<std::size_t>(i) * 8 + b]);
    }
    v[i] = std::bit_cast<double>(bits);
  }
  return v;
}

void put_section(std::string& out, const std::string& name, const std::string& payload) {
  out += name + ' ' + std::to_string(payload.size()) + '\n';
  out += payload;
  out += '\n';
}

std::string history_text(const std::vector<EpochResult>& history) {
  std::ostringstream out;
  for (const auto& e : history) {
    out << e.epoch << ' ' << format_double(e.train_loss) << ' ' << e.windows << ' ' << e.legal
        << ' ' << e.violations << ' ' << e.incomplete << ' ' << e.improved << '\n';
  }
  return out.str();
}

std::vector<EpochResult> parse_history(const std::string& text) {
  std::vector<EpochResult> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream f(line);
    EpochResult e;
    std::string loss;
    int improved = 0;
    if (!(f >> e.epoch >> loss >> e.windows >> e.legal >> e.violations >> e.incomplete >> improved)) {
      throw Error(ErrorCode::MalformedStream, "checkpoint history line: " + line);
    }
    e.train_loss = std::stod(loss);
    e.improved = improved != 0;
    out.push_back(e);
  }
  return out;
}

std::uint64_t parse_hex(const std::string& s) {
  try {
    return std::stoull(s, nullptr, 16);
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedStream, "bad hex value: " + s);
  }
}

}  // namespace

KeyValues Checkpoint::manifest() const {
  KeyValues kv;
  config.write(kv);
  kv.set("format", "1");
  kv.set("variant", variant_name(variant));
  kv.set("constraint", constraint_short_name(constraint));
  kv.set("grammar_name", grammar_name);
  kv.set("grammar_hash", hex64(grammar_hash));
  kv.set("corpus_hash", hex64(corpus_hash));
  kv.set("epoch", std::to_string(epoch));
  kv.set("stale_epochs", std::to_string(stale_epochs));
  kv.set("finished", finished ? "true" : "false");
  kv.set("best_legal", std::to_string(best_legal));
  kv.set("best_violations", std::to_string(best_violations));
  kv.set("adam_steps", std::to_string(adam_steps));
  kv.set("parameters", std::to_string(theta.size()));
  kv.set("tool_version", NAM_VERSION);
  return kv;
}

std::string Checkpoint::bytes() const {
  std::string out = kMagic;
  put_section(out, "meta", manifest().str());
  put_section(out, "grammar", grammar_text);
  put_section(out, "history", history_text(history));
  std::string buf;
  for (auto [name, v] : {std::pair{"theta", &theta}, std::pair{"best_theta", &best_theta},
                         std::pair{"adam_m", &adam_m}, std::pair{"adam_v", &adam_v}}) {
    buf.clear();
    put_doubles(buf, *v);
    put_section(out, name, buf);
  }
  put_section(out, "rng", rng_state);
  put_section(out, "sgwc", sgwc_table);
  return out;
}

Checkpoint Checkpoint::from_bytes(const std::string& bytes) {
  const std::string magic = kMagic;
  if (bytes.compare(0, magic.size(), magic) != 0) {
    throw Error(ErrorCode::MalformedStream, "not a checkpoint file");
  }
  std::map<std::string, std::string> sections;
  std::size_t at = magic.size();
  while (at < bytes.size()) {
    std::size_t nl = bytes.find('\n', at);
    if (nl == std::string::npos) throw Error(ErrorCode::MalformedStream, "truncated checkpoint");
    std::istringstream head(bytes.substr(at, nl - at));
    std::string name;
    std::size_t size = 0;
    if (!(head >> name >> size) || nl + 1 + size + 1 > bytes.size()) {
      throw Error(ErrorCode::MalformedStream, "bad checkpoint section header");
    }
    sections[name] = bytes.substr(nl + 1, size);
    at = nl + 1 + size + 1;
  }
  for (const char* required :
       {"meta", "grammar", "history", "theta", "best_theta", "adam_m", "adam_v", "rng", "sgwc"}) {
    if (!sections.count(required)) {
      throw Error(ErrorCode::MalformedStream, std::string("checkpoint lacks section ") + required);
    }
  }
  Checkpoint c;
  KeyValues kv = KeyValues::parse(sections["meta"], "checkpoint");
  auto variant = parse_variant(kv.get("variant", ""));
  auto constraint = parse_constraint(kv.get("constraint", ""));
  if (!variant || !constraint) throw Error(ErrorCode::MalformedStream, "checkpoint meta");
  c.variant = *variant;
  c.constraint = *constraint;
  KeyValues config_kv;
  for (const auto& [k, v] : kv.values()) {
    static const std::vector<std::string> meta = {
        "format",     "variant",      "constraint", "grammar_name", "grammar_hash",
        "corpus_hash", "epoch",       "stale_epochs", "finished",   "best_legal",
        "best_violations", "adam_steps", "parameters", "tool_version"};
    if (std::find(meta.begin(), meta.end(), k) == meta.end()) config_kv.set(k, v);
  }
  c.config.apply(config_kv);
  c.grammar_name = kv.get("grammar_name", "");
  c.grammar_hash = parse_hex(kv.get("grammar_hash", "0"));
  c.corpus_hash = parse_hex(kv.get("corpus_hash", "0"));
  c.epoch = static_cast<int>(kv.get_int("epoch", 0));
  c.stale_epochs = static_cast<int>(kv.get_int("stale_epochs", 0));
  c.finished = kv.get_bool("finished", false);
  c.best_legal = static_cast<int>(kv.get_int("best_legal", -1));
  c.best_violations = static_cast<long>(kv.get_int("best_violations", 0));
  c.adam_steps = static_cast<long>(kv.get_int("adam_steps", 0));
  c.grammar_text = sections["grammar"];
  c.history = parse_history(sections["history"]);
  c.theta = get_doubles(sections["theta"]);
  c.best_theta = get_doubles(sections["best_theta"]);
  c.adam_m = get_doubles(sections["adam_m"]);
  c.adam_v = get_doubles(sections["adam_v"]);
  c.rng_state = sections["rng"];
  c.sgwc_table = sections["sgwc"];
  if (ag::fnv1a64(c.grammar_text) != c.grammar_hash) {
    throw Error(ErrorCode::CorpusGrammarMismatch, "checkpoint grammar text does not match its hash");
  }
  return c;
}

void Checkpoint::save(const std::string& path) const {
  write_file(path, bytes());
  write_file(path + ".manifest", manifest().str());
}

Checkpoint Checkpoint::load(const std::string& path) { return from_bytes(read_file(path)); }

ag::Grammar Checkpoint::grammar() const { return ag::load_grammar(grammar_text, grammar_name); }

TrainedModel::TrainedModel(const Checkpoint& ckpt)
    : grammar_(std::make_unique<ag::Grammar>(ckpt.grammar())),
      constraint_(ckpt.constraint),
      variant_(ckpt.variant) {
  if (variant_ == Variant::Sgwc) {
    sgwc_ = std::make_unique<Sgwc>(*grammar_, constraint_, ckpt.config.alpha);
    sgwc_->read_table(ckpt.sgwc_table);
    policy_ = std::make_unique<SgwcPolicy>(*sgwc_);
    return;
  }
  lstm_ = std::make_unique<neural::LstmModel>(
      variant_model(ckpt.config, variant_, *grammar_, constraint_));
  const Eigen::VectorXd& theta = ckpt.config.restore_best ? ckpt.best_theta : ckpt.theta;
  if (theta.size() != lstm_->parameter_count()) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint parameters do not fit the model");
  }
  lstm_->theta = theta;
  policy_ = std::make_unique<LstmPolicy>(*lstm_);
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const ag::Grammar& grammar, ConstraintId constraint, Variant variant,
                 const TrainConfig& config, const std::vector<AstTree>& train)
    : grammar_(&grammar), rng_(config.model.seed) {
  config.check();
  ckpt_.variant = variant;
  ckpt_.constraint = constraint;
  ckpt_.config = config;
  ckpt_.config.model = variant_model(config, variant, grammar, constraint);
  ckpt_.grammar_name = grammar.name();
  ckpt_.grammar_text = grammar.source();
  ckpt_.grammar_hash = grammar.hash();
  ckpt_.corpus_hash = corpus_fingerprint(grammar, train);
  if (variant != Variant::Sgwc) {
    model_ = std::make_unique<neural::LstmModel>(ckpt_.config.model);
    model_->initialize(rng_);
    adam_.resize(model_->parameter_count());
    ckpt_.best_theta = model_->theta;
  }
  prepare(train);
}

Trainer::Trainer(const ag::Grammar& grammar, const Checkpoint& checkpoint,
                 const std::vector<AstTree>& train)
    : grammar_(&grammar), ckpt_(checkpoint) {
  if (grammar.hash() != checkpoint.grammar_hash) {
    throw Error(ErrorCode::CorpusGrammarMismatch,
                "checkpoint was trained with grammar " + hex64(checkpoint.grammar_hash));
  }
  if (corpus_fingerprint(grammar, train) != checkpoint.corpus_hash) {
    throw Error(ErrorCode::BadConfig, "training set differs from the one in the checkpoint");
  }
  if (ckpt_.variant != Variant::Sgwc) {
    model_ = std::make_unique<neural::LstmModel>(ckpt_.config.model);
    if (ckpt_.theta.size() != model_->parameter_count()) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint parameters do not fit the model");
    }
    model_->theta = ckpt_.theta;
    adam_.restore(ckpt_.adam_m, ckpt_.adam_v, ckpt_.adam_steps);
    rng_.restore(ckpt_.rng_state);
  }
  prepare(train);
}

const std::vector<std::uint8_t>* Trainer::intern_context(const std::vector<std::uint8_t>& bits) {
  std::string key(bits.begin(), bits.end());
  auto it = context_index_.find(key);
  if (it != context_index_.end()) return it->second;
  context_pool_.push_back(bits);
  return context_index_[key] = &context_pool_.back();
}

const std::vector<int>* Trainer::intern_legal(std::vector<int> legal) {
  auto it = legal_index_.find(legal);
  if (it != legal_index_.end()) return it->second;
  legal_pool_.push_back(legal);
  return legal_index_[std::move(legal)] = &legal_pool_.back();
}

void Trainer::prepare(const std::vector<AstTree>& train) {
  for (const auto& t : train) streams_.push_back(linearize(*grammar_, t));
  if (!model_) return;
  const auto& m = model_->config();
  const bool machine = m.use_context || m.use_three_level_loss;
  for (const auto& stream : streams_) {
    Sequence seq;
    seq.tokens.reserve(stream.size());
    std::optional<ContextState> state;
    if (machine) state = init_context(*grammar_, ckpt_.constraint);
    for (const Token& tok : stream) {
      neural::ModelToken mt;
      if (!tok.is_pop()) {
        mt.nonterminal = tok.nonterminal;
        mt.truth = tok.production;
      }
      if (m.use_context) {
        mt.context = intern_context(state->context_vector());
        ++context_queries_;
      }
      if (m.use_three_level_loss && !tok.is_pop()) {
        auto legal = state->legal_productions(tok.nonterminal);
        ++legal_queries_;
        if (std::find(legal.begin(), legal.end(), tok.production) == legal.end()) {
          throw Error(ErrorCode::IllegalTruth, "training tree steps outside P_c at production " +
                                                   grammar_->production(tok.production).id);
        }
        mt.legal = intern_legal(std::move(legal));
      }
      if (state) state->update(tok);
      seq.tokens.push_back(mt);
    }
    sequences_.push_back(std::move(seq));
  }
}

double Trainer::train_tree(const Sequence& seq, int& windows, long& predictions) {
  const auto& cfg = model_->config();
  neural::LstmState state = model_->zero_state();
  Eigen::VectorXd grad;
  double loss_sum = 0;
  std::size_t begin = 0;
  const std::size_t n = seq.tokens.size();
  while (begin < n) {
    std::size_t end = begin;
    int steps = 0;
    while (end < n && steps < cfg.truncation) {
      steps += !seq.tokens[end].is_pop();
      ++end;
    }
    if (steps == 0) break;  // trailing pops carry no loss
    std::span<const neural::ModelToken> window(seq.tokens.data() + begin, end - begin);
    std::vector<Eigen::VectorXd> masks;
    if (cfg.keep_prob < 1) masks = model_->draw_masks(window.size(), rng_);
    auto r = model_->window_gradient(window, state, cfg.keep_prob < 1 ? &masks : nullptr, tape_,
                                     grad);
    if (!std::isfinite(r.objective) || !grad.allFinite()) {
      throw Error(ErrorCode::NonFiniteGradient,
                  "non-finite gradient in epoch " + std::to_string(ckpt_.epoch + 1) + ", window " +
                      std::to_string(windows + 1) + " (objective " +
                      format_double(r.objective) + ")");
    }
    adam_.step(model_->theta, grad, cfg.learning_rate);
    loss_sum += r.mean_loss * r.predictions;
    predictions += r.predictions;
    ++windows;
    begin = end;
  }
  return loss_sum;
}

EpochResult Trainer::epoch() {
  EpochResult e;
  if (ckpt_.finished) return e;
  e.epoch = ckpt_.epoch + 1;
  GenerationReport sample;
  if (ckpt_.variant == Variant::Sgwc) {
    Sgwc table(*grammar_, ckpt_.constraint, ckpt_.config.alpha);
    table.fit(streams_);
    ckpt_.sgwc_table = table.table();
    e.train_loss = table.nll(streams_);
    SgwcPolicy policy(table);
    sample = sample_batch(policy, *grammar_, ckpt_.constraint, ckpt_.config.early_stop_samples,
                          derive_seed(ckpt_.config.model.seed, 0x5a3d0000u + e.epoch),
                          ckpt_.config.node_cap);
  } else {
    std::vector<std::size_t> order(sequences_.size());
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(std::span<std::size_t>(order));
    double loss = 0;
    long predictions = 0;
    for (std::size_t i : order) loss += train_tree(sequences_[i], e.windows, predictions);
    e.train_loss = predictions ? loss / static_cast<double>(predictions) : 0.0;
    LstmPolicy policy(*model_);
    sample = sample_batch(policy, *grammar_, ckpt_.constraint, ckpt_.config.early_stop_samples,
                          derive_seed(ckpt_.config.model.seed, 0x5a3d0000u + e.epoch),
                          ckpt_.config.node_cap);
  }
  e.legal = sample.legal();
  e.violations = sample.violations();
  e.incomplete = sample.incomplete();
  e.improved = ckpt_.best_legal < 0 || e.legal > ckpt_.best_legal ||
               (e.legal == ckpt_.best_legal && e.violations < ckpt_.best_violations);
  if (e.improved) {
    ckpt_.best_legal = e.legal;
    ckpt_.best_violations = e.violations;
    ckpt_.stale_epochs = 0;
    if (model_) ckpt_.best_theta = model_->theta;
  } else {
    ++ckpt_.stale_epochs;
  }
  ckpt_.epoch = e.epoch;
  ckpt_.history.push_back(e);
  ckpt_.finished = ckpt_.variant == Variant::Sgwc || ckpt_.stale_epochs >= ckpt_.config.patience ||
                   ckpt_.epoch >= ckpt_.config.max_epochs;
  return e;
}

void Trainer::run(const std::function<void(const EpochResult&)>& on_epoch) {
  while (!finished()) {
    EpochResult e = epoch();
    if (on_epoch) on_epoch(e);
  }
}

const Checkpoint& Trainer::checkpoint() const {
  if (model_) {
    ckpt_.theta = model_->theta;
    ckpt_.adam_m = adam_.first_moment();
    ckpt_.adam_v = adam_.second_moment();
    ckpt_.adam_steps = adam_.steps();
    ckpt_.rng_state = rng_.save();
  }
  return ckpt_;
}

}  // namespace nam
