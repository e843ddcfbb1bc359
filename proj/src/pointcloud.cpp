#include "pillarnav/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pillarnav {

PointCloud downsample_cloud(const PointCloud& raw, size_t target, std::mt19937& rng) {
    if (raw.points.empty()) throw std::runtime_error("downsample_cloud: empty cloud");
    PointCloud out;
    out.frame = raw.frame;
    const size_t n = raw.points.size();
    if (n == target) {
        out.points = raw.points;
        return out;
    }
    if (n > target) {
        // Partial Fisher-Yates: first `target` entries form a uniform subset.
        std::vector<size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (size_t i = 0; i < target; ++i) {
            std::uniform_int_distribution<size_t> pick(i, n - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        out.points.reserve(target);
        for (size_t i = 0; i < target; ++i) out.points.push_back(raw.points[idx[i]]);
        return out;
    }
    out.points = raw.points;
    out.points.reserve(target);
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    while (out.points.size() < target) out.points.push_back(raw.points[pick(rng)]);
    return out;
}

PointCloud augment(const PointCloud& cloud, const AugmentConfig& cfg, std::mt19937& rng) {
    std::uniform_real_distribution<float> shift(-cfg.shift, cfg.shift);
    const float dx = shift(rng);
    const float dy = shift(rng);
    PointCloud out = cloud;
    for (auto& p : out.points) {
        p[0] += dx;
        p[1] += dy;
    }
    return out;
}

PointCloud read_xyz_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open point cloud file " + path);
    PointCloud cloud;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        float x, y, z;
        if (!(ss >> x >> y >> z))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed XYZ line");
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-finite coordinate");
        cloud.points.push_back({x, y, z});
    }
    if (cloud.points.empty()) throw std::runtime_error(path + ": no points in file");
    return cloud;
}

void write_xyz_file(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& p : cloud.points) out << p[0] << " " << p[1] << " " << p[2] << "\n";
}

}  // namespace pillarnav
