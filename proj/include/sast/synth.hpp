#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sast/recording.hpp"
#include "sast/rng.hpp"

namespace sast {

/// Desk-scale synthetic scene generator: a rectangular room with furniture
/// along the walls and scripted persons (stand, walk between waypoints,
/// sit at chairs) in the free interior.
struct SynthConfig {
    int persons = 2;
    int objects = 8;
    double duration_s = 20.0;
    double room_width = 8.0;
    double room_depth = 6.0;
    double partial_track_prob = 0.0;  // chance of a person entering late / leaving early
    SkeletonSpec skeleton = SkeletonSpec::default_spec();
};

namespace synth_detail {

struct Pose2 {
    double x = 0, y = 0, heading = 0;  // heading: facing direction in the x-y plane
    double hip_z = 0.95;
    double phase = 0;                  // leg swing phase while walking
    bool sitting = false;
};

/// Writes one 17-joint pose into `dst` (J*3 floats, joint-major).
inline void emit_pose(const Pose2& p, const SkeletonSpec& sk, float* dst) {
    const double c = std::cos(p.heading), s = std::sin(p.heading);
    auto put = [&](int j, double lx, double ly, double z) {
        // local x: person's right, local y: forward
        double gx = p.x + c * ly - s * lx;
        double gy = p.y + s * ly + c * lx;
        dst[j * 3 + 0] = static_cast<float>(gx);
        dst[j * 3 + 1] = static_cast<float>(gy);
        dst[j * 3 + 2] = static_cast<float>(z);
    };
    const double hz = p.hip_z;
    const double swing = p.sitting ? 0.0 : 0.18 * std::sin(p.phase);
    const double knee_fwd = p.sitting ? 0.35 : 0.0;
    put(0, 0.0, 0.0, hz + 0.05);                 // pelvis
    put(1, 0.0, 0.0, hz + 0.35);                 // spine
    put(2, 0.0, 0.0, hz + 0.60);                 // neck
    put(3, 0.0, 0.03, hz + 0.75);                // head
    put(4, -0.20, 0.0, hz + 0.55);               // left shoulder
    put(5, -0.25, 0.05 - swing, hz + 0.30);      // left elbow
    put(6, -0.27, 0.10 - 2.0 * swing, hz + 0.08);  // left wrist
    put(7, 0.20, 0.0, hz + 0.55);                // right shoulder
    put(8, 0.25, 0.05 + swing, hz + 0.30);       // right elbow
    put(9, 0.27, 0.10 + 2.0 * swing, hz + 0.08);   // right wrist
    put(10, -0.10, knee_fwd + swing, hz - 0.45);   // left knee
    put(11, -0.10, (p.sitting ? knee_fwd : 0.0) + 2.0 * swing, std::max(0.05, hz - 0.90));  // left ankle
    put(sk.left_hip_index, -0.12, 0.0, hz);
    put(sk.right_hip_index, 0.12, 0.0, hz);
    put(14, 0.10, knee_fwd - swing, hz - 0.45);    // right knee
    put(15, 0.10, (p.sitting ? knee_fwd : 0.0) - 2.0 * swing, std::max(0.05, hz - 0.90));   // right ankle
    put(16, 0.0, 0.08, hz + 0.72);               // nose
}

inline SceneObject make_box(const std::string& id, ObjectType type, double cx, double cy,
                            double half_w, double half_d, double z0, double z1, Rng& rng) {
    SceneObject o;
    o.object_id = id;
    o.object_type = type;
    const int per_face = 24;
    for (int i = 0; i < per_face; ++i) {
        double u = rng.uniform(-1.0, 1.0), v = rng.uniform(-1.0, 1.0);
        double z = z0 + (z1 - z0) * rng.uniform();
        int face = i % 4;
        double x, y;
        switch (face) {
            case 0: x = cx - half_w; y = cy + v * half_d; break;
            case 1: x = cx + half_w; y = cy + v * half_d; break;
            case 2: x = cx + u * half_w; y = cy - half_d; break;
            default: x = cx + u * half_w; y = cy + half_d; break;
        }
        o.points.push_back(static_cast<float>(x));
        o.points.push_back(static_cast<float>(y));
        o.points.push_back(static_cast<float>(z));
        // top surface point
        o.points.push_back(static_cast<float>(cx + u * half_w));
        o.points.push_back(static_cast<float>(cy + v * half_d));
        o.points.push_back(static_cast<float>(z1));
    }
    return o;
}

}  // namespace synth_detail

inline SceneRecording synth_generate(const SynthConfig& cfg, uint64_t seed) {
    using namespace synth_detail;
    if (cfg.room_width <= 2.5 || cfg.room_depth <= 2.5)
        throw std::invalid_argument("synth_generate: room too small for a free interior");
    if (cfg.persons < 1 || cfg.objects < 1)
        throw std::invalid_argument("synth_generate: need at least one person and object");
    if (cfg.duration_s <= 0) throw std::invalid_argument("synth_generate: duration must be positive");
    cfg.skeleton.validate();
    if (cfg.skeleton.joint_count != 17)
        throw std::invalid_argument("synth_generate: generator scripts a 17-joint skeleton");

    Rng rng(seed);
    SceneRecording rec;
    rec.skeleton = cfg.skeleton;
    rec.total_frames = static_cast<int64_t>(std::llround(cfg.duration_s * cfg.skeleton.fps));

    const double W = cfg.room_width, D = cfg.room_depth;
    // Furniture sits in a band along the walls; persons move in the inner
    // rectangle, so straight walks cannot cross furniture interiors.
    const double margin = 1.0;
    const double ix0 = margin, ix1 = W - margin, iy0 = margin, iy1 = D - margin;

    // Walls first (4), then alternating furniture along the walls.
    int obj_idx = 0;
    auto add_wall = [&](double cx, double cy, double hw, double hd) {
        if (obj_idx >= cfg.objects) return;
        rec.objects.push_back(make_box("wall_" + std::to_string(obj_idx), ObjectType::wall, cx,
                                       cy, hw, hd, 0.0, 2.5, rng));
        ++obj_idx;
    };
    add_wall(W / 2, 0.025, W / 2, 0.025);
    add_wall(W / 2, D - 0.025, W / 2, 0.025);
    add_wall(0.025, D / 2, 0.025, D / 2);
    add_wall(W - 0.025, D / 2, 0.025, D / 2);

    std::vector<size_t> chair_indices;
    const ObjectType band_types[] = {ObjectType::table, ObjectType::chair,
                                     ObjectType::cupboard, ObjectType::chair,
                                     ObjectType::standing_table, ObjectType::coffee_machine,
                                     ObjectType::chair, ObjectType::fridge,
                                     ObjectType::whiteboard, ObjectType::sink,
                                     ObjectType::drawer, ObjectType::sofa,
                                     ObjectType::microwave, ObjectType::dishwasher};
    int k = 0;
    while (obj_idx < cfg.objects) {
        ObjectType type = band_types[k % (sizeof(band_types) / sizeof(band_types[0]))];
        // place along one of the four wall bands
        int side = k % 4;
        double t = rng.uniform(0.15, 0.85);
        double cx, cy;
        double half = (type == ObjectType::chair) ? 0.22 : 0.35;
        switch (side) {
            case 0: cx = ix0 + t * (ix1 - ix0); cy = 0.5; break;
            case 1: cx = ix0 + t * (ix1 - ix0); cy = D - 0.5; break;
            case 2: cx = 0.5; cy = iy0 + t * (iy1 - iy0); break;
            default: cx = W - 0.5; cy = iy0 + t * (iy1 - iy0); break;
        }
        double z1 = (type == ObjectType::chair) ? 0.45
                    : (type == ObjectType::table || type == ObjectType::sofa) ? 0.75
                                                                             : 1.2;
        SceneObject o = make_box(to_string(type) + "_" + std::to_string(obj_idx), type, cx, cy,
                                 half, half, 0.0, z1, rng);
        if (type == ObjectType::chair) chair_indices.push_back(rec.objects.size());
        rec.objects.push_back(std::move(o));
        ++obj_idx;
        ++k;
    }

    // Seat approach points: just inside the inner rectangle, facing the chair.
    struct Seat {
        double x, y, heading;
    };
    std::vector<Seat> seats;
    for (size_t ci : chair_indices) {
        const auto& ch = rec.objects[ci];
        double cx = 0, cy = 0;
        for (int64_t m = 0; m < ch.point_count(); ++m) {
            cx += ch.points[static_cast<size_t>(3 * m)];
            cy += ch.points[static_cast<size_t>(3 * m + 1)];
        }
        cx /= static_cast<double>(ch.point_count());
        cy /= static_cast<double>(ch.point_count());
        double sx = std::clamp(cx, ix0, ix1), sy = std::clamp(cy, iy0, iy1);
        seats.push_back({sx, sy, std::atan2(cy - sy, cx - sx)});
    }

    const double fps = cfg.skeleton.fps;
    const double dt = 1.0 / fps;
    const double walk_speed = 1.1;  // m/s

    for (int pi = 0; pi < cfg.persons; ++pi) {
        Rng prng = Rng::derive(seed, 0x9e37u, static_cast<uint64_t>(pi));
        PersonTrack track;
        track.person_id = "person_" + std::to_string(pi);
        track.first_frame = 0;
        track.last_frame = rec.total_frames - 1;
        if (cfg.partial_track_prob > 0 && prng.uniform() < cfg.partial_track_prob) {
            int64_t cut = std::min<int64_t>(rec.total_frames / 4,
                                            std::max<int64_t>(1, rec.total_frames - 2));
            if (prng.uniform() < 0.5)
                track.first_frame = prng.uniform_int(cut) + 1;
            else
                track.last_frame = rec.total_frames - 2 - prng.uniform_int(cut);
        }

        Pose2 pose;
        pose.x = prng.uniform(ix0, ix1);
        pose.y = prng.uniform(iy0, iy1);
        pose.heading = prng.uniform(0.0, 2.0 * M_PI);

        enum class Mode { stand, walk, sit };
        Mode mode = Mode::stand;
        double mode_left = prng.uniform(1.0, 3.0);
        double tx = pose.x, ty = pose.y;
        double sit_heading = 0.0;

        const int64_t frames = track.frames();
        track.joints.resize(static_cast<size_t>(frames) * 17 * 3);
        track.labels.resize(static_cast<size_t>(frames));
        for (int64_t f = 0; f < frames; ++f) {
            switch (mode) {
                case Mode::stand: {
                    pose.hip_z = std::min(0.95, pose.hip_z + 1.2 * dt);
                    pose.sitting = false;
                    mode_left -= dt;
                    if (mode_left <= 0) {
                        bool to_seat = !seats.empty() && prng.uniform() < 0.35;
                        if (to_seat) {
                            const Seat& s = seats[static_cast<size_t>(
                                prng.uniform_int(static_cast<int64_t>(seats.size())))];
                            tx = s.x;
                            ty = s.y;
                            sit_heading = s.heading;
                        } else {
                            tx = prng.uniform(ix0, ix1);
                            ty = prng.uniform(iy0, iy1);
                            sit_heading = std::nan("");
                        }
                        mode = Mode::walk;
                    }
                    break;
                }
                case Mode::walk: {
                    double dx = tx - pose.x, dy = ty - pose.y;
                    double dist = std::hypot(dx, dy);
                    double step = walk_speed * dt;
                    pose.sitting = false;
                    pose.hip_z = 0.95;
                    if (dist <= step) {
                        pose.x = tx;
                        pose.y = ty;
                        if (!std::isnan(sit_heading)) {
                            pose.heading = sit_heading;
                            mode = Mode::sit;
                            mode_left = prng.uniform(2.0, 4.0);
                        } else {
                            mode = Mode::stand;
                            mode_left = prng.uniform(1.0, 3.0);
                        }
                    } else {
                        pose.heading = std::atan2(dy, dx);  // face travel direction
                        pose.x += step * dx / dist;
                        pose.y += step * dy / dist;
                        pose.phase += 2.0 * M_PI * 1.8 * dt;
                    }
                    break;
                }
                case Mode::sit: {
                    pose.hip_z = std::max(0.48, pose.hip_z - 1.2 * dt);
                    pose.sitting = true;
                    mode_left -= dt;
                    if (mode_left <= 0) {
                        mode = Mode::stand;
                        mode_left = prng.uniform(1.0, 3.0);
                    }
                    break;
                }
            }
            emit_pose(pose, cfg.skeleton, track.joints.data() + f * 17 * 3);
            track.labels[static_cast<size_t>(f)] = (mode == Mode::walk)   ? "walking"
                                                   : (mode == Mode::sit) ? "sitting"
                                                                         : "standing";
        }
        rec.persons.push_back(std::move(track));
    }

    rec.validate();
    return rec;
}

}  // namespace sast
