#pragma once

#include <cstdint>

#include "codlab/core.hpp"

namespace codlab {

// All samplers are pure functions of (seed, global index). Chunked or
// threaded generation must reproduce the exact same point set, so no
// sequential generator state is allowed anywhere in the sampling path.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline const int kHaltonPrimes[16] = {2,  3,  5,  7,  11, 13, 17, 19,
                                      23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace detail

// Van der Corput radical inverse in the given base.
inline double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

// Uniform double in [0, 1) derived from (seed, index, axis).
inline double uniform01(std::uint64_t seed, std::uint64_t index, int axis) {
    std::uint64_t h = detail::splitmix64(
        seed ^ detail::splitmix64(index ^ (static_cast<std::uint64_t>(axis) << 48)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

enum class SamplerKind { LowDiscrepancy, UniformRandom, Grid };

inline const char* to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::LowDiscrepancy: return "low_discrepancy";
        case SamplerKind::UniformRandom: return "uniform_random";
        case SamplerKind::Grid: return "grid";
    }
    return "?";
}

inline SamplerKind sampler_from_string(const std::string& s) {
    if (s == "low_discrepancy") return SamplerKind::LowDiscrepancy;
    if (s == "uniform_random") return SamplerKind::UniformRandom;
    if (s == "grid") return SamplerKind::Grid;
    throw ConfigError("unknown sampler kind: " + s);
}

// Point i of a d-dimensional sequence in the unit cube [0,1)^d.
//
// Low-discrepancy mode is a scrambled Halton sequence: per-axis prime bases
// with a seed-derived Cranley-Patterson rotation so distinct seeds give
// distinct (but each deterministic) sequences.
inline Vec unit_sample(SamplerKind kind, std::uint64_t seed, std::uint64_t index,
                       int dim, std::uint64_t count = 0) {
    Vec u(dim);
    switch (kind) {
        case SamplerKind::LowDiscrepancy:
            for (int a = 0; a < dim; ++a) {
                int base = detail::kHaltonPrimes[a % 16];
                double shift = static_cast<double>(
                                   detail::splitmix64(seed ^ (0xABCDULL + a)) >> 11) *
                               0x1.0p-53;
                double v = radical_inverse(index + 1, base) + shift;
                u[a] = v - std::floor(v);
            }
            break;
        case SamplerKind::UniformRandom:
            for (int a = 0; a < dim; ++a) u[a] = uniform01(seed, index, a);
            break;
        case SamplerKind::Grid: {
            // Regular lattice with ceil(count^(1/dim)) points per axis,
            // cell-centered so all points are interior.
            std::uint64_t per_axis = 1;
            if (count > 0) {
                per_axis = static_cast<std::uint64_t>(
                    std::ceil(std::pow(static_cast<double>(count), 1.0 / dim)));
                if (per_axis < 1) per_axis = 1;
            }
            std::uint64_t rem = index;
            for (int a = 0; a < dim; ++a) {
                std::uint64_t k = rem % per_axis;
                rem /= per_axis;
                u[a] = (static_cast<double>(k) + 0.5) / static_cast<double>(per_axis);
            }
            break;
        }
    }
    return u;
}

// Sampling plan for one factor of a sweep (base points or fiber coefficients).
struct AxisSampler {
    SamplerKind kind = SamplerKind::LowDiscrepancy;
    Box box;  // sampled region; fiber boxes truncate unbounded fibers

    Vec sample(std::uint64_t seed, std::uint64_t index, std::uint64_t count) const {
        return box.map_unit(unit_sample(kind, seed, index, box.dim(), count));
    }
};

// Full specification of a sweep. The point set it generates is a pure
// function of this struct; `source` is a label recorded in metadata.
struct SweepSpec {
    std::string source;
    AxisSampler base;
    AxisSampler fiber;
    std::uint64_t count = 0;  // total number of generated points
    std::uint64_t seed = 0;

    SweepSpec() = default;
    SweepSpec(std::string src, AxisSampler base_, AxisSampler fiber_,
              std::uint64_t count_, std::uint64_t seed_)
        : source(std::move(src)),
          base(std::move(base_)),
          fiber(std::move(fiber_)),
          count(count_),
          seed(seed_) {
        if (count < 1) throw ConfigError("sweep count must be >= 1");
    }

    // Joint (base, fiber) sample for global index i. Base and fiber use
    // decorrelated seeds and a joint low-discrepancy index so the product
    // space is filled evenly.
    std::pair<Vec, Vec> sample(std::uint64_t i) const {
        const int db = base.box.dim();
        const int df = fiber.box.dim();
        if (base.kind == SamplerKind::LowDiscrepancy &&
            fiber.kind == SamplerKind::LowDiscrepancy) {
            Vec joint = unit_sample(SamplerKind::LowDiscrepancy, seed, i, db + df);
            return {base.box.map_unit(joint.head(db)),
                    fiber.box.map_unit(joint.tail(df))};
        }
        return {base.sample(seed ^ 0x5151ULL, i, count),
                fiber.sample(seed ^ 0xF1BEULL, i, count)};
    }
};

}  // namespace codlab
