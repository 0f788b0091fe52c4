#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "magjump/types.hpp"

namespace magjump {

struct MeanEstimate {
    Real mean = 0.0;
    Real stderr_mean = 0.0;
    std::size_t count = 0;
};

/// Sample mean with a batch-means standard error (about sqrt(n) batches).
/// The mean itself is the plain full-sample mean, so constant samples
/// reproduce exactly with zero spread.
inline MeanEstimate batch_mean_estimate(const std::vector<Real>& samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("batch statistics need at least 2 samples");
    MeanEstimate out;
    out.count = n;
    Real total = 0.0;
    for (Real s : samples) total += s;
    out.mean = total / static_cast<Real>(n);

    const auto nb = static_cast<std::size_t>(std::sqrt(static_cast<Real>(n)));
    const std::size_t batches = nb < 2 ? 2 : nb;
    const std::size_t base = n / batches;
    const std::size_t extra = n % batches;
    std::vector<Real> means;
    means.reserve(batches);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < batches; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        if (len == 0) continue;
        Real acc = 0.0;
        for (std::size_t j = 0; j < len; ++j) acc += samples[pos + j];
        means.push_back(acc / static_cast<Real>(len));
        pos += len;
    }
    Real grand = 0.0;
    for (Real m : means) grand += m;
    grand /= static_cast<Real>(means.size());
    Real var = 0.0;
    for (Real m : means) var += (m - grand) * (m - grand);
    var /= static_cast<Real>(means.size() - 1);
    out.stderr_mean = std::sqrt(var / static_cast<Real>(means.size()));
    return out;
}

/// |estimate - truth| in standard-error units; zero spread maps exact
/// agreement to 0 and any disagreement to infinity.
inline Real z_score(Real estimate, Real truth, Real stderr_mean) {
    const Real diff = std::abs(estimate - truth);
    if (stderr_mean == 0.0) {
        return diff == 0.0 ? 0.0 : std::numeric_limits<Real>::infinity();
    }
    return diff / stderr_mean;
}

} // namespace magjump
