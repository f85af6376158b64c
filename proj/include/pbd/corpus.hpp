#pragma once

#include <cstdint>

#include "pbd/model.hpp"

namespace pbd {

// The frozen benchmark corpus: seed k (k >= 1) deterministically yields one
// model with n in [1, 500] across a mix of shapes and variance levels.
// Shapes rotate by seed: point masses, single binomial blocks, blocks with
// ones/zeros padding, two-block mixtures, tiny handfuls of parameters, and
// low-variance tail-heavy models.
PbdModel corpus_model(std::uint64_t seed);

}  // namespace pbd
