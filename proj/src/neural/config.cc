#include "nam/neural/config.h"

#include <string>

#include "nam/error.h"

namespace nam::neural {

void ModelConfig::apply(const KeyValues& kv) {
  hidden = static_cast<int>(kv.get_int("hidden", hidden));
  layers = static_cast<int>(kv.get_int("layers", layers));
  truncation = static_cast<int>(kv.get_int("truncation", truncation));
  learning_rate = kv.get_double("learning_rate", learning_rate);
  keep_prob = kv.get_double("keep_prob", keep_prob);
  l1 = kv.get_double("l1", l1);
  l2 = kv.get_double("l2", l2);
  lambda = kv.get_double("lambda", lambda);
  use_context = kv.get_bool("use_context", use_context);
  use_three_level_loss = kv.get_bool("use_three_level_loss", use_three_level_loss);
  seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(seed)));
  nonterminals = static_cast<int>(kv.get_int("nonterminals", nonterminals));
  context = static_cast<int>(kv.get_int("context", context));
  productions = static_cast<int>(kv.get_int("productions", productions));
  check();
}

void ModelConfig::write(KeyValues& kv) const {
  kv.set("hidden", std::to_string(hidden));
  kv.set("layers", std::to_string(layers));
  kv.set("truncation", std::to_string(truncation));
  kv.set("learning_rate", format_double(learning_rate));
  kv.set("keep_prob", format_double(keep_prob));
  kv.set("l1", format_double(l1));
  kv.set("l2", format_double(l2));
  kv.set("lambda", format_double(lambda));
  kv.set("use_context", use_context ? "true" : "false");
  kv.set("use_three_level_loss", use_three_level_loss ? "true" : "false");
  kv.set("seed", std::to_string(seed));
  kv.set("nonterminals", std::to_string(nonterminals));
  kv.set("context", std::to_string(context));
  kv.set("productions", std::to_string(productions));
}

void ModelConfig::check() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::BadConfig, what); };
  if (hidden < 1) fail("hidden must be positive");
  if (layers < 1) fail("layers must be positive");
  if (truncation < 1) fail("truncation must be positive");
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (!(keep_prob > 0 && keep_prob <= 1)) fail("keep_prob must lie in (0, 1]");
  if (!(l1 >= 0) || !(l2 >= 0)) fail("l1 and l2 must be nonnegative");
  if (!(lambda >= 0)) fail("lambda must be nonnegative");
  if (nonterminals < 0 || context < 0 || productions < 0) fail("negative width");
}

}  // namespace nam::neural
