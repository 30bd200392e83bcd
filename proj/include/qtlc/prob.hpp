// prob.hpp — softmax and KL divergence over feature vectors.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qtlc/errors.hpp"

namespace qtlc {

struct Distribution {
    std::vector<double> probs;
};

/// Floor applied to the second argument of kl_divergence before the log, so
/// a mode zeroed out by truncation yields a large but finite penalty.
inline constexpr double kKlFloor = 1e-12;

/// Temperature softmax with max subtraction. probs sum to 1 exactly up to
/// rounding; safe for inputs of any magnitude.
inline Distribution softmax(const double* v, std::size_t n, double temperature = 1.0) {
    if (!(temperature > 0.0)) {
        throw_error(ErrorCode::invalid_temperature, "softmax temperature must be > 0");
    }
    Distribution d;
    d.probs.resize(n);
    if (n == 0) return d;
    double hi = v[0];
    for (std::size_t i = 1; i < n; ++i) hi = std::max(hi, v[i]);
    if (!std::isfinite(hi)) {
        throw_error(ErrorCode::invalid_input, "softmax input contains non-finite values");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(v[i])) {
            throw_error(ErrorCode::invalid_input, "softmax input contains non-finite values");
        }
        d.probs[i] = std::exp((v[i] - hi) / temperature);
        total += d.probs[i];
    }
    for (double& p : d.probs) p /= total;
    return d;
}

inline Distribution softmax(const std::vector<double>& v, double temperature = 1.0) {
    return softmax(v.data(), v.size(), temperature);
}

/// KL(p || q) = sum_i p_i ln(p_i / q_i), with 0 ln(0/q) = 0 and q floored at
/// kKlFloor before the log.
inline double kl_divergence(const Distribution& p, const Distribution& q) {
    if (p.probs.size() != q.probs.size()) {
        throw_error(ErrorCode::shape_mismatch, "kl_divergence length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        const double pi = p.probs[i];
        if (pi <= 0.0) continue;
        const double qi = std::max(q.probs[i], kKlFloor);
        acc += pi * std::log(pi / qi);
    }
    return acc;
}

}  // namespace qtlc
