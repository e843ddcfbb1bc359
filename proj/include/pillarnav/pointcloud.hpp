#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

namespace pillarnav {

enum class Frame { camera, robot };

// N x 3 points in meters. x = lateral, y = forward, z = up in this project's
// camera convention.
struct PointCloud {
    std::vector<std::array<float, 3>> points;
    Frame frame = Frame::camera;

    size_t size() const { return points.size(); }
};

// Uniform random subset without replacement when the cloud is larger than
// `target`; keeps all points and pads with uniform re-draws when smaller.
PointCloud downsample_cloud(const PointCloud& raw, size_t target, std::mt19937& rng);

struct AugmentConfig {
    float shift = 0.01f;  // uniform per-cloud translation bound, per horizontal axis
};

// One translation vector per cloud, applied to every point; vertical axis
// untouched.
PointCloud augment(const PointCloud& cloud, const AugmentConfig& cfg, std::mt19937& rng);

// Plain-text "x y z" per line. Throws with the offending line number on
// malformed input.
PointCloud read_xyz_file(const std::string& path);
void write_xyz_file(const std::string& path, const PointCloud& cloud);

}  // namespace pillarnav
