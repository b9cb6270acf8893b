#include "nam/util/rng.h"

#include <sstream>

#include "nam/error.h"

namespace nam {

int Rng::weighted(std::span<const double> weights) {
  double total = 0;
  int last = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0) {
      total += weights[i];
      last = static_cast<int>(i);
    }
  }
  if (last < 0) throw Error(ErrorCode::ShapeMismatch, "no positive weight to sample from");
  double u = uniform() * total;
  double acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return last;
}

std::string Rng::save() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  if (!in) throw Error(ErrorCode::Io, "bad random engine state");
}

}  // namespace nam
