#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "pglab/errors.hpp"
#include "pglab/tensor.hpp"

namespace pglab {

// Shannon entropy in bits. Zero entries contribute nothing (x log x -> 0).
inline double entropy_bits(const Tensor1& p) {
    double h = 0.0;
    for (double v : p.values()) {
        if (v < 0.0 || !std::isfinite(v)) throw ValueError("entropy_bits: probabilities must be finite and >= 0");
        if (v > 0.0) h -= v * std::log2(v);
    }
    return h;
}

// Entropy divided by log2 of the support size, so distributions over
// different alphabets land on a common [0, 1] scale.
inline double normalized_entropy(const Tensor1& p, std::size_t support_size) {
    if (support_size < 2) throw ValueError("normalized_entropy: support must be >= 2");
    double total = 0.0;
    for (double v : p.values()) total += v;
    if (std::abs(total - 1.0) > 1e-6)
        throw ValueError("normalized_entropy: distribution mass " + std::to_string(total));
    double h = entropy_bits(p) / std::log2(static_cast<double>(support_size));
    // Guard the top end against rounding creep on uniform inputs.
    if (h > 1.0 && h < 1.0 + 1e-9) h = 1.0;
    if (h < 0.0 || h > 1.0) throw ValueError("normalized_entropy: result outside [0,1]");
    return h;
}

}  // namespace pglab
