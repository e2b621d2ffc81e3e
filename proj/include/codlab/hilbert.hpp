#pragma once

#include <cstdint>
#include <utility>

#include "codlab/core.hpp"

namespace codlab {

// Cell center visited at step d of the order-`order` Hilbert curve on the
// unit square (2^order cells per side).
inline Vec hilbert_cell_center(int order, std::uint64_t d) {
    std::uint64_t x = 0, y = 0, t = d;
    for (std::uint64_t s = 1; s < (1ULL << order); s *= 2) {
        const std::uint64_t rx = 1 & (t / 2);
        const std::uint64_t ry = 1 & (t ^ rx);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
    }
    const double side = static_cast<double>(1ULL << order);
    Vec p(2);
    p[0] = (static_cast<double>(x) + 0.5) / side;
    p[1] = (static_cast<double>(y) + 0.5) / side;
    return p;
}

// Continuous order-k approximation of the plane-filling curve: piecewise
// linear through the 4^k cell centers, parametrized so segment j covers
// exactly t in [j * 4^-k, (j+1) * 4^-k]. With this dyadic alignment,
// phi_k(t) and phi_{k+1}(t) stay inside neighboring order-k cells, which is
// the nesting property the tests assert.
inline Vec hilbert_curve(int order, double t) {
    if (order < 1) throw ConfigError("Hilbert order must be >= 1");
    const std::uint64_t cells = 1ULL << (2 * order);
    double u = std::min(std::max(t, 0.0), 1.0) * static_cast<double>(cells);
    std::uint64_t j = static_cast<std::uint64_t>(u);
    if (j >= cells) j = cells - 1;
    const double frac = u - static_cast<double>(j);
    Vec a = hilbert_cell_center(order, j);
    if (j + 1 >= cells) return a;
    Vec b = hilbert_cell_center(order, j + 1);
    return a + frac * (b - a);
}

}  // namespace codlab
