#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sast {

struct SkeletonSpec {
    int joint_count = 17;
    std::vector<std::string> joint_names;
    int left_hip_index = 12;   // 0-based
    int right_hip_index = 13;  // 0-based
    double fps = 25.0;

    void validate() const {
        if (joint_count <= 0) throw std::invalid_argument("skeleton: joint_count must be positive");
        if (fps <= 0) throw std::invalid_argument("skeleton: fps must be positive");
        if (left_hip_index == right_hip_index)
            throw std::invalid_argument("skeleton: hip indices must differ");
        if (left_hip_index < 0 || left_hip_index >= joint_count ||
            right_hip_index < 0 || right_hip_index >= joint_count)
            throw std::invalid_argument("skeleton: hip index out of range");
        if (!joint_names.empty() && static_cast<int>(joint_names.size()) != joint_count)
            throw std::invalid_argument("skeleton: joint_names size mismatch");
    }

    static SkeletonSpec default_spec() {
        SkeletonSpec s;
        s.joint_names = {
            "pelvis",    "spine",     "neck",       "head",       "left_shoulder",
            "left_elbow", "left_wrist", "right_shoulder", "right_elbow", "right_wrist",
            "left_knee",  "left_ankle", "left_hip",  "right_hip",  "right_knee",
            "right_ankle", "nose"};
        return s;
    }

    bool operator==(const SkeletonSpec&) const = default;
};

enum class ObjectType : int {
    wall = 0,
    table,
    standing_table,
    drawer,
    cupboard,
    chair,
    sofa,
    whiteboard,
    coffee_machine,
    dishwasher,
    sink,
    microwave,
    fridge,
};

inline constexpr int kObjectTypeCount = 13;

inline const std::array<std::string, kObjectTypeCount>& object_type_names() {
    static const std::array<std::string, kObjectTypeCount> names = {
        "wall",        "table",      "standing_table", "drawer",     "cupboard",
        "chair",       "sofa",       "whiteboard",     "coffee_machine",
        "dishwasher",  "sink",       "microwave",      "fridge"};
    return names;
}

inline std::string to_string(ObjectType t) {
    return object_type_names().at(static_cast<size_t>(t));
}

inline ObjectType object_type_from_string(const std::string& s) {
    const auto& names = object_type_names();
    for (int i = 0; i < kObjectTypeCount; ++i)
        if (names[static_cast<size_t>(i)] == s) return static_cast<ObjectType>(i);
    throw std::invalid_argument("unknown object type: " + s);
}

}  // namespace sast
