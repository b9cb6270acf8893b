#include <filesystem>
#include <limits>

#include "doctest.h"
#include "nam/ag/evaluate.h"
#include "nam/corpus.h"
#include "nam/engine.h"
#include "nam/error.h"
#include "nam/evaluator.h"
#include "oracles.h"

using namespace nam;

namespace {

constexpr ConstraintId kCd = ConstraintId::DeclaredVariable;
constexpr ConstraintId kCt = ConstraintId::TypesafeVariable;

CorpusSpec toy_spec(int programs) {
  CorpusSpec s;
  s.programs = programs;
  s.mean_vars = 2.5;
  s.mean_types = 1.5;
  s.mean_procs = 1.5;
  s.mean_stmts = 4;
  s.max_procs = 4;
  s.max_stmts = 12;
  s.holdout = 0.1;
  s.seed = 9;
  return s;
}

const std::vector<AstTree>& toy_trees() {
  static const auto trees = generate_corpus(gen::minic(), toy_spec(22)).train;
  return trees;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.model.hidden = 8;
  c.model.layers = 2;
  c.model.seed = 5;
  c.max_epochs = 3;
  c.patience = 10;
  c.early_stop_samples = 10;
  c.node_cap = 300;
  return c;
}

// Puts all mass on one fixed production per nonterminal.
class FixedPolicy : public Policy {
 public:
  FixedPolicy(const ag::Grammar& g, std::vector<std::string> choice) : g_(&g) {
    for (const auto& id : choice) choice_.push_back(g.production_index(id));
  }
  void reset() override {}
  void predict(const ContextState&, int n, std::vector<double>& out) override {
    out.assign(g_->production_count(), 0.0);
    out[choice_[n]] = 1.0;
  }
  void pop(const ContextState&) override {}

 private:
  const ag::Grammar* g_;
  std::vector<int> choice_;
};

}  // namespace

TEST_CASE("variant names and switches") {
  CHECK(all_variants().size() == 5);
  for (Variant v : all_variants()) {
    CHECK(parse_variant(variant_name(v)) == v);
    CHECK(parse_variant(variant_label(v)) == v);
  }
  CHECK_FALSE(parse_variant("lstm"));
  auto m = variant_model(tiny_config(), Variant::Vanilla, gen::minic(), kCt);
  CHECK_FALSE(m.use_context);
  CHECK_FALSE(m.use_three_level_loss);
  CHECK(m.context == 0);
  m = variant_model(tiny_config(), Variant::Both, gen::minic(), kCt);
  CHECK(m.use_context);
  CHECK(m.use_three_level_loss);
  CHECK(m.context == context_length(gen::minic(), kCt));
  CHECK(m.input_width() == gen::minic().nonterminal_count() + 1 + m.context);
}

TEST_CASE("config files reject unknown keys and bad values") {
  CHECK_THROWS_AS(TrainConfig().apply(KeyValues::parse("hiden = 3\n")), Error);
  CHECK_THROWS_AS(TrainConfig().apply(KeyValues::parse("keep_prob = 1.5\n")), Error);
  TrainConfig c;
  c.apply(KeyValues::parse("hidden = 16\npatience = 2\n"));
  CHECK(c.model.hidden == 16);
  CHECK(c.patience == 2);
  KeyValues kv;
  c.write(kv);
  TrainConfig d;
  d.apply(kv);
  KeyValues kv2;
  d.write(kv2);
  CHECK(kv.str() == kv2.str());
}

TEST_CASE("forced derivation gives the minimal tree") {
  const auto& g = gen::numeral();
  FixedPolicy policy(g, {"Numeral", "Zero"});
  Rng rng(1);
  auto out = generate_tree(policy, g, kCd, rng, 100);
  REQUIRE(out.complete());
  CHECK(to_string(*out.tree) == "Numeral(Zero)");
  CHECK(out.nodes == 2);
  CHECK(out.violations == 0);
  CHECK(out.legal());

  FixedPolicy forever(g, {"Numeral", "Pair"});
  auto capped = generate_tree(forever, g, kCd, rng, 50);
  CHECK_FALSE(capped.complete());
  CHECK(capped.nodes == 50);
}

TEST_CASE("sample_batch accounting, determinism and report round trip") {
  TrainConfig cfg = tiny_config();
  auto mcfg = variant_model(cfg, Variant::Context, gen::minic(), kCt);
  neural::LstmModel model(mcfg);
  Rng init(3);
  model.initialize(init);
  LstmPolicy policy(model);

  auto empty = sample_batch(policy, gen::minic(), kCt, 0, 7, 300);
  CHECK(empty.trees.empty());
  CHECK(empty.violations() == 0);

  auto a = sample_batch(policy, gen::minic(), kCt, 40, 7, 300);
  auto b = sample_batch(policy, gen::minic(), kCt, 40, 7, 300);
  CHECK(a.text() == b.text());
  CHECK(a.legal() + a.illegal() + a.incomplete() == 40);
  auto parsed = GenerationReport::parse(a.text());
  CHECK(parsed.text() == a.text());
  CHECK(count_violations(parsed) == a.violations());
  CHECK(count_legal(parsed) == a.legal());

  std::string tampered = a.text();
  tampered.replace(tampered.find("violations="), 11, "violations=9");
  CHECK_THROWS_AS(GenerationReport::parse(tampered), Error);
}

TEST_CASE("generation-time violations agree with the tree checker") {
  int illegal = 0;
  for (auto c : {kCd, kCt}) {
    for (Variant v : {Variant::Vanilla, Variant::Context}) {
      auto mcfg = variant_model(tiny_config(), v, gen::minic(), c);
      neural::LstmModel model(mcfg);
      Rng init(11);
      model.initialize(init);
      LstmPolicy policy(model);
      std::vector<AstTree> trees;
      auto report = sample_batch(policy, gen::minic(), c, 200, 21, 400, &trees);
      std::size_t k = 0;
      for (const auto& rec : report.trees) {
        if (!rec.complete) continue;
        const AstTree& t = trees[k++];
        bool clean = ag::check_tree(gen::minic(), t, c).empty();
        CHECK(clean == (rec.violations == 0));
        CHECK(clean == oracle::minic_violations(t, c).empty());
        illegal += !clean;
      }
      CHECK(k == trees.size());
      CHECK(k > 50);
    }
  }
  CHECK(illegal > 0);
}

TEST_CASE("SGWC samples never violate") {
  for (auto c : {kCd, kCt}) {
    Sgwc table(gen::minic(), c);
    std::vector<TokenStream> streams;
    for (const auto& t : toy_trees()) streams.push_back(linearize(gen::minic(), t));
    table.fit(streams);
    SgwcPolicy policy(table);
    auto report = sample_batch(policy, gen::minic(), c, 300, 2, 2000);
    CHECK(report.violations() == 0);
    CHECK(report.illegal() == 0);
  }
}

TEST_CASE("vanilla training never queries the logical machine for inputs or loss") {
  Trainer vanilla(gen::minic(), kCt, Variant::Vanilla, tiny_config(), toy_trees());
  CHECK(vanilla.context_queries() == 0);
  CHECK(vanilla.legal_queries() == 0);
  Trainer loss(gen::minic(), kCt, Variant::Loss, tiny_config(), toy_trees());
  CHECK(loss.context_queries() == 0);
  CHECK(loss.legal_queries() > 0);
  Trainer both(gen::minic(), kCt, Variant::Both, tiny_config(), toy_trees());
  CHECK(both.context_queries() > 0);
  CHECK(both.legal_queries() > 0);
}

TEST_CASE("identical config and seed give identical checkpoints") {
  auto run = [] {
    Trainer t(gen::minic(), kCd, Variant::Both, tiny_config(), toy_trees());
    t.run();
    return t.checkpoint().bytes();
  };
  std::string a = run();
  CHECK(a == run());
  TrainConfig other = tiny_config();
  other.model.seed = 6;
  Trainer t(gen::minic(), kCd, Variant::Both, other, toy_trees());
  t.run();
  CHECK(t.checkpoint().bytes() != a);
}

TEST_CASE("resuming at an epoch boundary matches an uninterrupted run") {
  TrainConfig cfg = tiny_config();
  cfg.model.keep_prob = 0.8;
  Trainer whole(gen::minic(), kCt, Variant::Both, cfg, toy_trees());
  whole.run();
  CHECK(whole.checkpoint().epoch == 3);

  Trainer first(gen::minic(), kCt, Variant::Both, cfg, toy_trees());
  first.epoch();
  auto saved = Checkpoint::from_bytes(first.checkpoint().bytes());
  Trainer rest(gen::minic(), saved, toy_trees());
  rest.run();
  CHECK(rest.checkpoint().bytes() == whole.checkpoint().bytes());

  CHECK_THROWS_AS(Trainer(gen::numeral(), saved, toy_trees()), Error);
  try {
    Trainer(gen::numeral(), saved, toy_trees());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorpusGrammarMismatch);
  }
}

TEST_CASE("checkpoint files round trip and carry a manifest") {
  Trainer t(gen::minic(), kCd, Variant::Context, tiny_config(), toy_trees());
  t.epoch();
  const Checkpoint& c = t.checkpoint();
  auto dir = std::filesystem::temp_directory_path() / "nam_test_engine";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "model.ckpt").string();
  c.save(path);
  CHECK(std::filesystem::exists(path + ".manifest"));
  Checkpoint back = Checkpoint::load(path);
  CHECK(back.bytes() == c.bytes());
  CHECK(back.theta == c.theta);
  CHECK(back.history.size() == 1);
  auto manifest = KeyValues::load(path + ".manifest");
  CHECK(manifest.get("variant", "") == "context");
  CHECK(manifest.get("grammar_hash", "") == hex64(gen::minic().hash()));
  CHECK(manifest.has("tool_version"));

  std::string bytes = c.bytes();
  CHECK_THROWS_AS(Checkpoint::from_bytes(bytes.substr(0, bytes.size() / 2)), Error);
  CHECK_THROWS_AS(Checkpoint::from_bytes("junk"), Error);

  TrainedModel loaded(back);
  CHECK(loaded.lstm()->theta == c.theta);
  Checkpoint best = back;
  best.config.restore_best = true;
  CHECK(TrainedModel(best).lstm()->theta == c.best_theta);
  auto report = sample_batch(loaded.policy(), loaded.grammar(), kCd, 5, 1, 300);
  CHECK(report.trees.size() == 5);
  std::filesystem::remove_all(dir);
}

TEST_CASE("SGWC variant trains in one pass") {
  Trainer t(gen::minic(), kCt, Variant::Sgwc, tiny_config(), toy_trees());
  t.run();
  const auto& c = t.checkpoint();
  CHECK(c.finished);
  CHECK(c.epoch == 1);
  CHECK_FALSE(c.sgwc_table.empty());
  CHECK(c.history.front().violations == 0);
  TrainedModel m(Checkpoint::from_bytes(c.bytes()));
  REQUIRE(m.sgwc());
  CHECK(m.sgwc()->table() == c.sgwc_table);
}

TEST_CASE("early stopping keeps the best parameters") {
  TrainConfig cfg = tiny_config();
  cfg.max_epochs = 20;
  cfg.patience = 2;
  Trainer t(gen::minic(), kCd, Variant::Context, cfg, toy_trees());
  t.run();
  const auto& c = t.checkpoint();
  CHECK(c.finished);
  int best = -1;
  long best_v = 0;
  int best_epoch = 0;
  int stale = 0;
  for (const auto& e : c.history) {
    bool better = best < 0 || e.legal > best || (e.legal == best && e.violations < best_v);
    CHECK(better == e.improved);
    if (better) {
      best = e.legal;
      best_v = e.violations;
      best_epoch = e.epoch;
      stale = 0;
    } else {
      ++stale;
    }
  }
  CHECK(c.best_legal == best);
  CHECK((stale >= 2 || c.epoch == 20));
  CHECK(best_epoch >= 1);
}

TEST_CASE("non-finite parameters abort training") {
  Trainer t(gen::minic(), kCd, Variant::Vanilla, tiny_config(), toy_trees());
  Checkpoint c = t.checkpoint();
  c.theta[0] = std::numeric_limits<double>::quiet_NaN();
  Trainer broken(gen::minic(), c, toy_trees());
  try {
    broken.epoch();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteGradient);
  }
}

TEST_CASE("about 200 windows on a 20-tree toy corpus halve the training loss") {
  TrainConfig cfg = tiny_config();
  cfg.model.learning_rate = 0.01;
  cfg.model.keep_prob = 1.0;
  cfg.model.l1 = 0;
  cfg.model.l2 = 0;
  cfg.max_epochs = 100;
  cfg.patience = 100;
  cfg.early_stop_samples = 1;
  Trainer t(gen::minic(), kCd, Variant::Vanilla, cfg, toy_trees());
  auto nll = [&] {
    LstmPolicy p(*t.model());
    return avg_nll(p, gen::minic(), kCd, toy_trees());
  };
  double before = nll();
  int windows = 0;
  while (windows < 200) windows += t.epoch().windows;
  double after = nll();
  INFO("before=" << before << " after=" << after << " windows=" << windows);
  // Whole epochs only, so the count lands just past 200.
  CHECK(windows < 230);
  CHECK(after <= 0.5 * before);
}
