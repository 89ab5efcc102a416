#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sast/io.hpp"
#include "sast/skeleton.hpp"

namespace sast {

struct RecordingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ManifestError : RecordingError {
    using RecordingError::RecordingError;
};
struct ShapeMismatchError : RecordingError {
    using RecordingError::RecordingError;
};
struct UnknownObjectTypeError : RecordingError {
    using RecordingError::RecordingError;
};

/// Per-frame rigid override for movable objects: rotation about z plus a
/// translation, applied to the object's base point cloud.
struct RigidPose {
    float angle = 0.f;
    float dx = 0.f, dy = 0.f, dz = 0.f;
    bool operator==(const RigidPose&) const = default;
};

struct PersonTrack {
    std::string person_id;
    int64_t first_frame = 0;
    int64_t last_frame = 0;
    /// Shape (frames, J, 3), meters, global coordinates. Stored as float32
    /// to match the on-disk representation bit for bit.
    std::vector<float> joints;
    std::vector<std::string> labels;  // per-frame activity labels, may be empty

    int64_t frames() const { return last_frame - first_frame + 1; }

    bool operator==(const PersonTrack&) const = default;
};

struct SceneObject {
    std::string object_id;
    ObjectType object_type = ObjectType::wall;
    std::vector<float> points;  // shape (M, 3)
    std::vector<RigidPose> pose_overrides;  // per recording frame, may be empty

    int64_t point_count() const { return static_cast<int64_t>(points.size()) / 3; }

    /// Point cloud at a given recording frame (override applied if present).
    std::vector<float> points_at(int64_t frame) const {
        if (pose_overrides.empty()) return points;
        const RigidPose& p = pose_overrides.at(static_cast<size_t>(frame));
        std::vector<float> out(points.size());
        float c = std::cos(p.angle), s = std::sin(p.angle);
        for (size_t i = 0; i + 2 < points.size(); i += 3) {
            float x = points[i], y = points[i + 1];
            out[i] = c * x - s * y + p.dx;
            out[i + 1] = s * x + c * y + p.dy;
            out[i + 2] = points[i + 2] + p.dz;
        }
        return out;
    }

    bool operator==(const SceneObject&) const = default;
};

struct SceneRecording {
    SkeletonSpec skeleton;
    std::vector<PersonTrack> persons;
    std::vector<SceneObject> objects;
    int64_t total_frames = 0;

    void validate() const {
        skeleton.validate();
        int64_t J = skeleton.joint_count;
        for (const auto& p : persons) {
            if (p.last_frame < p.first_frame)
                throw ShapeMismatchError("track " + p.person_id + ": last_frame < first_frame");
            if (p.first_frame < 0 || p.last_frame >= total_frames)
                throw ShapeMismatchError("track " + p.person_id + ": outside recording range");
            if (static_cast<int64_t>(p.joints.size()) != p.frames() * J * 3)
                throw ShapeMismatchError("track " + p.person_id + ": joint array size mismatch");
            if (!p.labels.empty() && static_cast<int64_t>(p.labels.size()) != p.frames())
                throw ShapeMismatchError("track " + p.person_id + ": label count mismatch");
            for (float v : p.joints)
                if (!std::isfinite(v))
                    throw ShapeMismatchError("track " + p.person_id + ": non-finite coordinate");
        }
        for (const auto& o : objects) {
            if (o.point_count() < 1)
                throw ShapeMismatchError("object " + o.object_id + ": empty point cloud");
            if (static_cast<int64_t>(o.points.size()) % 3 != 0)
                throw ShapeMismatchError("object " + o.object_id + ": point array not (M,3)");
            if (!o.pose_overrides.empty() &&
                static_cast<int64_t>(o.pose_overrides.size()) != total_frames)
                throw ShapeMismatchError("object " + o.object_id + ": pose override count mismatch");
        }
    }

    bool operator==(const SceneRecording&) const = default;
};

namespace detail {

inline nlohmann::json skeleton_to_json(const SkeletonSpec& s) {
    return {{"joint_count", s.joint_count},
            {"joint_names", s.joint_names},
            {"left_hip_index", s.left_hip_index},
            {"right_hip_index", s.right_hip_index},
            {"fps", s.fps}};
}

inline SkeletonSpec skeleton_from_json(const nlohmann::json& j) {
    SkeletonSpec s;
    try {
        s.joint_count = j.at("joint_count").get<int>();
        s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
        s.left_hip_index = j.at("left_hip_index").get<int>();
        s.right_hip_index = j.at("right_hip_index").get<int>();
        s.fps = j.at("fps").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("malformed skeleton spec: ") + e.what());
    }
    return s;
}

}  // namespace detail

/// On-disk container: a directory holding manifest.json, tracks.bin and
/// objects.bin. Binary payloads are float32 LE row-major with shapes and
/// byte offsets declared in the manifest. Output bytes are deterministic.
inline void write_recording(const SceneRecording& rec, const std::filesystem::path& dir) {
    rec.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir))
        throw RecordingError("cannot create recording directory: " + dir.string());

    nlohmann::json manifest;
    manifest["format"] = "sast-recording-v1";
    manifest["skeleton"] = detail::skeleton_to_json(rec.skeleton);
    manifest["total_frames"] = rec.total_frames;

    std::vector<std::byte> tracks_bin;
    manifest["persons"] = nlohmann::json::array();
    for (const auto& p : rec.persons) {
        nlohmann::json jp = {
            {"person_id", p.person_id},
            {"first_frame", p.first_frame},
            {"last_frame", p.last_frame},
            {"shape", {p.frames(), rec.skeleton.joint_count, 3}},
            {"byte_offset", tracks_bin.size()},
        };
        if (!p.labels.empty()) jp["labels"] = p.labels;
        io::append_f32_span(tracks_bin, p.joints.data(), p.joints.size());
        manifest["persons"].push_back(std::move(jp));
    }

    std::vector<std::byte> objects_bin;
    manifest["objects"] = nlohmann::json::array();
    for (const auto& o : rec.objects) {
        nlohmann::json jo = {
            {"object_id", o.object_id},
            {"object_type", to_string(o.object_type)},
            {"shape", {o.point_count(), 3}},
            {"byte_offset", objects_bin.size()},
        };
        io::append_f32_span(objects_bin, o.points.data(), o.points.size());
        if (!o.pose_overrides.empty()) {
            jo["pose_override_shape"] = {static_cast<int64_t>(o.pose_overrides.size()), 4};
            jo["pose_override_offset"] = objects_bin.size();
            for (const auto& pp : o.pose_overrides) {
                io::append_f32(objects_bin, pp.angle);
                io::append_f32(objects_bin, pp.dx);
                io::append_f32(objects_bin, pp.dy);
                io::append_f32(objects_bin, pp.dz);
            }
        }
        manifest["objects"].push_back(std::move(jo));
    }

    {
        std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!mf) throw RecordingError("cannot write manifest: " + (dir / "manifest.json").string());
        mf << manifest.dump(2) << "\n";
    }
    io::write_file(dir / "tracks.bin", tracks_bin);
    io::write_file(dir / "objects.bin", objects_bin);
}

inline SceneRecording load_recording(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw RecordingError("recording not found: " + dir.string());
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }

    SceneRecording rec;
    try {
        rec.skeleton = detail::skeleton_from_json(manifest.at("skeleton"));
        rec.total_frames = manifest.at("total_frames").get<int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }

    auto tracks_bin = io::read_file(dir / "tracks.bin");
    auto objects_bin = io::read_file(dir / "objects.bin");

    const int64_t J = rec.skeleton.joint_count;
    try {
        for (const auto& jp : manifest.at("persons")) {
            PersonTrack p;
            p.person_id = jp.at("person_id").get<std::string>();
            p.first_frame = jp.at("first_frame").get<int64_t>();
            p.last_frame = jp.at("last_frame").get<int64_t>();
            auto shape = jp.at("shape").get<std::vector<int64_t>>();
            if (shape.size() != 3 || shape[0] != p.frames() || shape[1] != J || shape[2] != 3)
                throw ShapeMismatchError("track " + p.person_id +
                                         ": declared shape inconsistent with skeleton/frames");
            size_t offset = jp.at("byte_offset").get<size_t>();
            size_t count = static_cast<size_t>(shape[0] * shape[1] * shape[2]);
            std::vector<float> vals;
            try {
                vals = io::read_f32_block(tracks_bin, offset, count);
            } catch (const std::runtime_error& e) {
                throw ShapeMismatchError("track " + p.person_id + ": " + e.what());
            }
            p.joints = std::move(vals);
            if (jp.contains("labels")) p.labels = jp.at("labels").get<std::vector<std::string>>();
            rec.persons.push_back(std::move(p));
        }
        for (const auto& jo : manifest.at("objects")) {
            SceneObject o;
            o.object_id = jo.at("object_id").get<std::string>();
            try {
                o.object_type = object_type_from_string(jo.at("object_type").get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw UnknownObjectTypeError(e.what());
            }
            auto shape = jo.at("shape").get<std::vector<int64_t>>();
            if (shape.size() != 2 || shape[1] != 3)
                throw ShapeMismatchError("object " + o.object_id + ": declared shape not (M,3)");
            size_t offset = jo.at("byte_offset").get<size_t>();
            size_t count = static_cast<size_t>(shape[0] * 3);
            try {
                o.points = io::read_f32_block(objects_bin, offset, count);
            } catch (const std::runtime_error& e) {
                throw ShapeMismatchError("object " + o.object_id + ": " + e.what());
            }
            if (jo.contains("pose_override_shape")) {
                auto pshape = jo.at("pose_override_shape").get<std::vector<int64_t>>();
                size_t poffset = jo.at("pose_override_offset").get<size_t>();
                if (pshape.size() != 2 || pshape[1] != 4)
                    throw ShapeMismatchError("object " + o.object_id + ": pose override shape");
                auto vals = io::read_f32_block(objects_bin, poffset,
                                               static_cast<size_t>(pshape[0] * 4));
                o.pose_overrides.resize(static_cast<size_t>(pshape[0]));
                for (size_t i = 0; i < o.pose_overrides.size(); ++i)
                    o.pose_overrides[i] = {vals[4 * i], vals[4 * i + 1], vals[4 * i + 2],
                                           vals[4 * i + 3]};
            }
            rec.objects.push_back(std::move(o));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }

    rec.validate();
    return rec;
}

}  // namespace sast
