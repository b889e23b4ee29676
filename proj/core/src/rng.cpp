#include "glue/rng.hpp"

#include <cmath>
#include <numbers>

namespace glue {

double Rng::gaussian() {
    // Box-Muller on (0,1] to keep log() away from 0.
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace glue
