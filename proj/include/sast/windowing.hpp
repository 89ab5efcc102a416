#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sast/recording.hpp"
#include "sast/rng.hpp"
#include "sast/tensor.hpp"

namespace sast {

/// A fixed-length window over P concurrent persons. X holds global
/// coordinates, frame index is the last axis. presence_mask is false
/// exactly on frames synthesized by zero-velocity padding.
struct MultiPersonWindow {
    Tensor X;                              // (P, J, 3, N)
    std::vector<std::vector<bool>> presence_mask;  // (P, N)
    std::vector<SceneObject> scene_state;  // point clouds snapshotted at frame n
    int64_t n = 0;                         // input length
    int64_t N = 0;                         // total length
    int64_t start_frame = 0;               // window offset in the recording
    SkeletonSpec skeleton;
    std::vector<std::string> person_ids;
    std::vector<std::vector<std::string>> labels;  // (P, N), empty strings on pad

    int64_t person_count() const { return X.rank() == 4 ? X.dim(0) : 0; }
};

struct PaddedTrack {
    Tensor joints;            // (J, 3, window_len)
    std::vector<bool> mask;   // true on real frames
};

/// Replicates the boundary pose outside [first_frame, last_frame].
inline PaddedTrack zero_velocity_pad(const PersonTrack& track, int64_t J,
                                     int64_t window_start, int64_t window_end) {
    if (track.last_frame < window_start || track.first_frame > window_end)
        throw std::invalid_argument("zero_velocity_pad: track does not overlap window");
    const int64_t len = window_end - window_start + 1;
    PaddedTrack out;
    out.joints = Tensor({J, 3, len});
    out.mask.assign(static_cast<size_t>(len), false);
    for (int64_t f = 0; f < len; ++f) {
        int64_t frame = window_start + f;
        int64_t src = std::clamp(frame, track.first_frame, track.last_frame);
        bool real = (frame >= track.first_frame && frame <= track.last_frame);
        out.mask[static_cast<size_t>(f)] = real;
        int64_t base = (src - track.first_frame) * J * 3;
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                out.joints.at3(j, d, f) =
                    static_cast<double>(track.joints[static_cast<size_t>(base + j * 3 + d)]);
    }
    return out;
}

/// Windows start every `stride` frames. A window includes exactly the
/// persons with at least one real frame in its input segment; the scene is
/// snapshotted at the last input frame.
inline std::vector<MultiPersonWindow> make_windows(const SceneRecording& rec, int64_t n,
                                                   int64_t N, int64_t stride) {
    if (n >= N) throw std::invalid_argument("make_windows: need n < N");
    if (N > rec.total_frames) throw std::invalid_argument("make_windows: N exceeds recording");
    if (stride <= 0) throw std::invalid_argument("make_windows: stride must be positive");
    const int64_t J = rec.skeleton.joint_count;

    std::vector<MultiPersonWindow> windows;
    for (int64_t start = 0; start + N <= rec.total_frames; start += stride) {
        const int64_t input_last = start + n - 1;
        std::vector<size_t> included;
        for (size_t i = 0; i < rec.persons.size(); ++i) {
            const auto& p = rec.persons[i];
            if (p.first_frame <= input_last && p.last_frame >= start) included.push_back(i);
        }
        if (included.empty()) continue;

        MultiPersonWindow w;
        w.n = n;
        w.N = N;
        w.start_frame = start;
        w.skeleton = rec.skeleton;
        const int64_t P = static_cast<int64_t>(included.size());
        w.X = Tensor({P, J, 3, N});
        w.presence_mask.resize(static_cast<size_t>(P));
        w.labels.resize(static_cast<size_t>(P));
        for (int64_t pi = 0; pi < P; ++pi) {
            const auto& track = rec.persons[included[static_cast<size_t>(pi)]];
            auto padded = zero_velocity_pad(track, J, start, start + N - 1);
            for (int64_t j = 0; j < J; ++j)
                for (int64_t d = 0; d < 3; ++d)
                    for (int64_t f = 0; f < N; ++f)
                        w.X.at4(pi, j, d, f) = padded.joints.at3(j, d, f);
            w.presence_mask[static_cast<size_t>(pi)] = std::move(padded.mask);
            w.person_ids.push_back(track.person_id);
            auto& lab = w.labels[static_cast<size_t>(pi)];
            lab.assign(static_cast<size_t>(N), "");
            if (!track.labels.empty()) {
                for (int64_t f = 0; f < N; ++f) {
                    int64_t frame = start + f;
                    if (frame >= track.first_frame && frame <= track.last_frame)
                        lab[static_cast<size_t>(f)] =
                            track.labels[static_cast<size_t>(frame - track.first_frame)];
                }
            }
        }
        for (const auto& obj : rec.objects) {
            SceneObject snap = obj;
            snap.points = obj.points_at(input_last);
            snap.pose_overrides.clear();
            w.scene_state.push_back(std::move(snap));
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

struct StandingDetector {
    bool enabled = true;
    double max_root_displacement = 0.2;  // meters, total over the window
    double max_hip_height_range = 0.1;   // meters
};

namespace detail {

inline bool window_is_standing(const MultiPersonWindow& w, const StandingDetector& det,
                               bool* undecidable) {
    const int lh = w.skeleton.left_hip_index;
    const int rh = w.skeleton.right_hip_index;
    for (int64_t p = 0; p < w.person_count(); ++p) {
        const auto& lab = w.labels[static_cast<size_t>(p)];
        bool has_labels = std::any_of(lab.begin(), lab.end(),
                                      [](const std::string& s) { return !s.empty(); });
        if (has_labels) {
            for (int64_t f = 0; f < w.N; ++f) {
                const auto& s = lab[static_cast<size_t>(f)];
                if (!s.empty() && s != "standing") return false;
            }
            continue;
        }
        if (!det.enabled) {
            *undecidable = true;
            return false;
        }
        double total_disp = 0.0, zmin = 1e300, zmax = -1e300;
        double px = 0.0, py = 0.0;
        for (int64_t f = 0; f < w.N; ++f) {
            double x = 0.5 * (w.X.at4(p, lh, 0, f) + w.X.at4(p, rh, 0, f));
            double y = 0.5 * (w.X.at4(p, lh, 1, f) + w.X.at4(p, rh, 1, f));
            double z = 0.5 * (w.X.at4(p, lh, 2, f) + w.X.at4(p, rh, 2, f));
            if (f > 0) total_disp += std::hypot(x - px, y - py);
            px = x;
            py = y;
            zmin = std::min(zmin, z);
            zmax = std::max(zmax, z);
        }
        if (total_disp >= det.max_root_displacement || (zmax - zmin) >= det.max_hip_height_range)
            return false;
    }
    return true;
}

}  // namespace detail

struct UndersampleResult {
    std::vector<MultiPersonWindow> windows;
    bool warning = false;  // set when neither labels nor detector could decide
};

/// Drops standing-only windows independently with the given probability.
/// Decisions are keyed on (seed, window index), so disjoint copies of the
/// same window list get identical keep/drop decisions.
inline UndersampleResult undersample_standing(std::vector<MultiPersonWindow> windows,
                                              double fraction, uint64_t seed,
                                              const StandingDetector& det = {}) {
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("undersample_standing: fraction outside [0,1]");
    UndersampleResult res;
    for (size_t i = 0; i < windows.size(); ++i) {
        bool undecidable = false;
        bool standing = detail::window_is_standing(windows[i], det, &undecidable);
        if (undecidable) res.warning = true;
        bool drop = false;
        if (standing && fraction > 0.0) {
            Rng rng = Rng::derive(seed, static_cast<uint64_t>(i), 0x5741u);
            drop = rng.uniform() < fraction;
        }
        if (!drop) res.windows.push_back(std::move(windows[i]));
    }
    return res;
}

}  // namespace sast
