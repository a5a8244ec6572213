#pragma once

#include <string>
#include <vector>

#include "pglab/model.hpp"
#include "pglab/rng.hpp"
#include "pglab/vocab.hpp"

namespace testutil {

// Vocabulary with n regular tokens named t0..t{n-1} on top of the reserved four.
inline pglab::Vocabulary make_vocab(std::size_t n) {
    pglab::Vocabulary v;
    for (std::size_t i = 0; i < n; ++i) v.add("t" + std::to_string(i));
    return v;
}

inline pglab::ModelParams make_random_model(const pglab::ModelDims& dims, bool coverage, std::uint64_t seed,
                                            bool two_layer = false) {
    pglab::Rng rng(seed);
    auto stream = rng.stream("model-init");
    return pglab::init_model_params(dims, coverage, stream, two_layer);
}

}  // namespace testutil
