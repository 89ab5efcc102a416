#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sast/recording.hpp"
#include "sast/rng.hpp"

namespace sast {

inline constexpr int kObjectEncodingDim = 2048 + kObjectTypeCount;  // d_Obj = 2061

/// Fixed random 3-D points; objects are encoded by the distance from each
/// basis point to their nearest cloud point. A trained model is only
/// usable with the basis it was trained with.
struct BasisPointSet {
    std::vector<double> points;  // (B, 3)
    uint64_t seed = 0;
    double radius = 5.0;

    int64_t count() const { return static_cast<int64_t>(points.size()) / 3; }
};

struct ObjectEncoding {
    std::vector<double> distances;        // (B,), meters, >= 0
    std::vector<double> type_onehot;      // (13,)

    std::vector<double> concat() const {
        std::vector<double> v = distances;
        v.insert(v.end(), type_onehot.begin(), type_onehot.end());
        return v;
    }
};

struct SceneEncoding {
    std::vector<ObjectEncoding> objects;
};

/// Uniform sampling in a ball of the given radius, deterministic per seed.
inline BasisPointSet generate_basis(uint64_t seed, int64_t B = 2048, double radius = 5.0) {
    if (B < 1) throw std::invalid_argument("generate_basis: B must be >= 1");
    if (radius <= 0) throw std::invalid_argument("generate_basis: radius must be positive");
    BasisPointSet basis;
    basis.seed = seed;
    basis.radius = radius;
    basis.points.reserve(static_cast<size_t>(B) * 3);
    Rng rng(seed);
    while (basis.count() < B) {
        double x = rng.uniform(-radius, radius);
        double y = rng.uniform(-radius, radius);
        double z = rng.uniform(-radius, radius);
        if (x * x + y * y + z * z > radius * radius) continue;
        basis.points.push_back(x);
        basis.points.push_back(y);
        basis.points.push_back(z);
    }
    return basis;
}

// AffineTransform2D lives in normalize.hpp; encoding accepts pre-transformed
// clouds to avoid a dependency cycle.
inline ObjectEncoding bps_encode_points(const std::vector<double>& cloud, ObjectType type,
                                        const BasisPointSet& basis) {
    if (cloud.empty()) throw std::invalid_argument("bps_encode: empty point cloud");
    const int64_t B = basis.count();
    const int64_t M = static_cast<int64_t>(cloud.size()) / 3;
    ObjectEncoding enc;
    enc.distances.resize(static_cast<size_t>(B));
    for (int64_t b = 0; b < B; ++b) {
        double bx = basis.points[static_cast<size_t>(3 * b)];
        double by = basis.points[static_cast<size_t>(3 * b + 1)];
        double bz = basis.points[static_cast<size_t>(3 * b + 2)];
        double best = std::numeric_limits<double>::infinity();
        for (int64_t m = 0; m < M; ++m) {
            double dx = bx - cloud[static_cast<size_t>(3 * m)];
            double dy = by - cloud[static_cast<size_t>(3 * m + 1)];
            double dz = bz - cloud[static_cast<size_t>(3 * m + 2)];
            double d2 = dx * dx + dy * dy + dz * dz;
            if (d2 < best) best = d2;
        }
        enc.distances[static_cast<size_t>(b)] = std::sqrt(best);
    }
    enc.type_onehot.assign(kObjectTypeCount, 0.0);
    enc.type_onehot[static_cast<size_t>(type)] = 1.0;
    return enc;
}

}  // namespace sast
