#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sast/bps.hpp"
#include "sast/tensor.hpp"
#include "sast/windowing.hpp"

namespace sast {

/// Planar rigid transform: rotation about z followed by translation.
/// z passes through untouched.
struct AffineTransform2D {
    double angle = 0.0;
    double dx = 0.0, dy = 0.0;

    void apply_point(double& x, double& y) const {
        double c = std::cos(angle), s = std::sin(angle);
        double nx = c * x - s * y + dx;
        double ny = s * x + c * y + dy;
        x = nx;
        y = ny;
    }

    AffineTransform2D inverse() const {
        double c = std::cos(angle), s = std::sin(angle);
        // p = R^-1 (p' - t)
        return {-angle, -(c * dx + s * dy), -(-s * dx + c * dy)};
    }

    bool is_identity(double tol = 0.0) const {
        return std::abs(angle) <= tol && std::abs(dx) <= tol && std::abs(dy) <= tol;
    }
};

/// Fits the person-centric normalization at the last input frame: hip
/// midpoint to (0,0), hip line onto the x-axis with the left hip at
/// negative x (person facing +y).
inline AffineTransform2D fit_norm(const Tensor& x, int64_t n, const SkeletonSpec& sk) {
    if (x.rank() != 3 || x.dim(1) != 3)
        throw std::invalid_argument("fit_norm: expected shape (J,3,N)");
    if (n < 1 || n > x.dim(2)) throw std::invalid_argument("fit_norm: frame n out of range");
    const int64_t f = n - 1;
    const int lh = sk.left_hip_index, rh = sk.right_hip_index;
    double lx = x.at3(lh, 0, f), ly = x.at3(lh, 1, f);
    double rx = x.at3(rh, 0, f), ry = x.at3(rh, 1, f);
    if (!std::isfinite(lx) || !std::isfinite(ly) || !std::isfinite(rx) || !std::isfinite(ry))
        throw std::invalid_argument("fit_norm: non-finite hip joints at frame n");

    AffineTransform2D t;
    double ux = rx - lx, uy = ry - ly;  // left -> right hip
    if (ux * ux + uy * uy > 0.0) t.angle = -std::atan2(uy, ux);
    double mx = 0.5 * (lx + rx), my = 0.5 * (ly + ry);
    double c = std::cos(t.angle), s = std::sin(t.angle);
    t.dx = -(c * mx - s * my);
    t.dy = -(s * mx + c * my);
    return t;
}

inline Tensor apply_norm(const AffineTransform2D& t, const Tensor& seq) {
    if (seq.rank() != 3 || seq.dim(1) != 3)
        throw std::invalid_argument("apply_norm: expected shape (J,3,N)");
    Tensor out = seq;
    const int64_t J = seq.dim(0), N = seq.dim(2);
    for (int64_t j = 0; j < J; ++j)
        for (int64_t f = 0; f < N; ++f) {
            double x = out.at3(j, 0, f), y = out.at3(j, 1, f);
            t.apply_point(x, y);
            out.at3(j, 0, f) = x;
            out.at3(j, 1, f) = y;
        }
    return out;
}

inline Tensor invert_norm(const AffineTransform2D& t, const Tensor& seq) {
    return apply_norm(t.inverse(), seq);
}

inline std::vector<double> transform_cloud(const AffineTransform2D& t,
                                           const std::vector<float>& points) {
    std::vector<double> out(points.size());
    for (size_t i = 0; i + 2 < points.size(); i += 3) {
        double x = points[i], y = points[i + 1];
        t.apply_point(x, y);
        out[i] = x;
        out[i + 1] = y;
        out[i + 2] = points[i + 2];
    }
    return out;
}

inline ObjectEncoding bps_encode(const SceneObject& obj, const BasisPointSet& basis,
                                 const AffineTransform2D* transform = nullptr) {
    if (obj.points.empty()) throw std::invalid_argument("bps_encode: empty point cloud");
    std::vector<double> cloud;
    if (transform) {
        cloud = transform_cloud(*transform, obj.points);
    } else {
        cloud.assign(obj.points.begin(), obj.points.end());
    }
    return bps_encode_points(cloud, obj.object_type, basis);
}

inline SceneEncoding encode_scene(const std::vector<SceneObject>& scene_state,
                                  const BasisPointSet& basis,
                                  const AffineTransform2D* transform = nullptr) {
    SceneEncoding enc;
    enc.objects.reserve(scene_state.size());
    for (const auto& obj : scene_state) enc.objects.push_back(bps_encode(obj, basis, transform));
    return enc;
}

/// Per-(joint, axis) min-max scaling to [-3, 3] fitted on training data.
struct MinMaxScaler {
    std::vector<double> mins;  // (J*3,)
    std::vector<double> maxs;

    static constexpr double kEps = 1e-6;
    static constexpr double kRange = 3.0;

    int64_t channels() const { return static_cast<int64_t>(mins.size()); }

    double scale_value(double v, int64_t ch) const {
        double lo = mins[static_cast<size_t>(ch)], hi = maxs[static_cast<size_t>(ch)];
        // Divide before scaling: the quotient is exactly 1 at v == hi and
        // monotone below it, so the channel extremes map to +-3 exactly.
        return -kRange + 2.0 * kRange * ((v - lo) / (hi - lo));
    }
    double unscale_value(double v, int64_t ch) const {
        double lo = mins[static_cast<size_t>(ch)], hi = maxs[static_cast<size_t>(ch)];
        return lo + (v + kRange) * (hi - lo) / (2.0 * kRange);
    }

    Tensor scale(const Tensor& x) const { return map_(x, true); }
    Tensor unscale(const Tensor& x) const { return map_(x, false); }

private:
    Tensor map_(const Tensor& x, bool fwd) const {
        if (x.rank() != 3 || x.dim(0) * x.dim(1) != channels())
            throw std::invalid_argument("scaler: shape does not match fitted channels");
        Tensor out = x;
        const int64_t J = x.dim(0), N = x.dim(2);
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d) {
                int64_t ch = j * 3 + d;
                for (int64_t f = 0; f < N; ++f)
                    out.at3(j, d, f) = fwd ? scale_value(x.at3(j, d, f), ch)
                                           : unscale_value(x.at3(j, d, f), ch);
            }
        return out;
    }
};

inline MinMaxScaler fit_minmax(const std::vector<Tensor>& training_sequences) {
    if (training_sequences.empty())
        throw std::invalid_argument("fit_minmax: empty training set");
    const int64_t J = training_sequences[0].dim(0);
    const int64_t C = J * 3;
    MinMaxScaler sc;
    sc.mins.assign(static_cast<size_t>(C), std::numeric_limits<double>::infinity());
    sc.maxs.assign(static_cast<size_t>(C), -std::numeric_limits<double>::infinity());
    for (const auto& x : training_sequences) {
        if (x.rank() != 3 || x.dim(0) != J || x.dim(1) != 3)
            throw std::invalid_argument("fit_minmax: inconsistent sequence shape");
        const int64_t N = x.dim(2);
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d) {
                size_t ch = static_cast<size_t>(j * 3 + d);
                for (int64_t f = 0; f < N; ++f) {
                    double v = x.at3(j, d, f);
                    sc.mins[ch] = std::min(sc.mins[ch], v);
                    sc.maxs[ch] = std::max(sc.maxs[ch], v);
                }
            }
    }
    for (int64_t ch = 0; ch < C; ++ch) {
        size_t c = static_cast<size_t>(ch);
        if (sc.maxs[c] - sc.mins[c] < MinMaxScaler::kEps) {
            double mid = 0.5 * (sc.maxs[c] + sc.mins[c]);
            sc.mins[c] = mid - 0.5 * MinMaxScaler::kEps;
            sc.maxs[c] = mid + 0.5 * MinMaxScaler::kEps;
        }
    }
    return sc;
}

/// One normalized training datapoint: primary person i, everyone else as
/// context, scene encoded in person i's frame.
struct Datapoint {
    Tensor x;                 // (J, 3, N), normalized (not scaled)
    Tensor others;            // (P-1, J, 3, N), normalized
    SceneEncoding scene;
    AffineTransform2D transform;
    std::vector<bool> mask;   // presence mask of the primary person
};

inline Datapoint build_datapoint(const MultiPersonWindow& w, int64_t i,
                                 const BasisPointSet& basis) {
    const int64_t P = w.person_count();
    if (i < 0 || i >= P) throw std::invalid_argument("build_datapoint: invalid person index");
    const int64_t J = w.X.dim(1), N = w.N;

    auto person_seq = [&](int64_t p) {
        Tensor seq({J, 3, N});
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < N; ++f) seq.at3(j, d, f) = w.X.at4(p, j, d, f);
        return seq;
    };

    Datapoint dp;
    Tensor xi = person_seq(i);
    dp.transform = fit_norm(xi, w.n, w.skeleton);
    dp.x = apply_norm(dp.transform, xi);
    dp.others = Tensor({P - 1, J, 3, N});
    int64_t oi = 0;
    for (int64_t p = 0; p < P; ++p) {
        if (p == i) continue;
        Tensor norm = apply_norm(dp.transform, person_seq(p));
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < N; ++f) dp.others.at4(oi, j, d, f) = norm.at3(j, d, f);
        ++oi;
    }
    dp.scene = encode_scene(w.scene_state, basis, &dp.transform);
    dp.mask = w.presence_mask[static_cast<size_t>(i)];
    return dp;
}

}  // namespace sast
