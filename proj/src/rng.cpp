#include "dsr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dsr {

int CounterRng::softmax_choice(std::span<const double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> cumulative(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total += std::exp(scores[i] - top);
    cumulative[i] = total;
  }
  const double u = uniform() * total;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (u < cumulative[i]) return static_cast<int>(i);
  }
  return static_cast<int>(scores.size()) - 1;
}

}  // namespace dsr
