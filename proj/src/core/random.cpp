#include "btcgarch/random.hpp"

#include <cmath>

#include "btcgarch/stats.hpp"

namespace btcg {

double Rng::uniform() {
    constexpr double kUnit = 0x1.0p-53;
    return (static_cast<double>(engine_() >> 11) + 0.5) * kUnit;
}

double Rng::normal() { return stats::normal_quantile(uniform()); }

}  // namespace btcg
