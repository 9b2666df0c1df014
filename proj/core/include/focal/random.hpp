#pragma once

#include <random>

namespace focal {

// Every stochastic component takes an explicit engine of this type.
using Rng = std::mt19937_64;

}  // namespace focal
