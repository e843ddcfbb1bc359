#include "pillarnav/pillars.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace pillarnav {

namespace {

int cell_count(float lo, float hi, float cell, const char* axis) {
    const double span = static_cast<double>(hi) - lo;
    if (span <= 0 || cell <= 0)
        throw std::invalid_argument(std::string("pillar config: bad range on axis ") + axis);
    const double cells = span / cell;
    const double rounded = std::round(cells);
    if (std::fabs(cells - rounded) > 1e-4)
        throw std::invalid_argument(std::string("pillar config: range not divisible by cell on axis ") +
                                    axis);
    return static_cast<int>(rounded);
}

// Log-normalized point count, saturating around 64 points per pillar.
float count_feature(int count) {
    return std::log1p(static_cast<float>(count)) / std::log1p(64.0f);
}

}  // namespace

int PillarConfig::rows() const { return cell_count(x_min, x_max, cell_x, "x"); }
int PillarConfig::cols() const { return cell_count(y_min, y_max, cell_y, "y"); }

void PillarConfig::validate() const {
    (void)rows();
    (void)cols();
    if (z_max <= z_min) throw std::invalid_argument("pillar config: bad z range");
}

PillarConfig PillarConfig::paper_preset() {
    return PillarConfig{-9.6f, 9.6f, -1.6f, 0.448f, 0.0f, 10.0f, 0.15f, 0.016f};
}

PillarConfig PillarConfig::sim_preset() {
    return PillarConfig{-9.6f, 9.6f, 0.0f, 9.6f, 0.0f, 2.0f, 0.15f, 0.075f};
}

SparseBEVGrid pillarize(const PointCloud& cloud, const PillarConfig& cfg) {
    const int h = cfg.rows();
    const int w = cfg.cols();
    if (cfg.z_max <= cfg.z_min) throw std::invalid_argument("pillar config: bad z range");

    // Bucket per cell, then sort points within each cell so the aggregates do
    // not depend on input order.
    std::map<std::pair<int, int>, std::vector<std::array<float, 3>>> cells;
    for (const auto& p : cloud.points) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
            throw std::invalid_argument("pillarize: NaN coordinate in cloud");
        if (p[0] < cfg.x_min || p[0] >= cfg.x_max) continue;
        if (p[1] < cfg.y_min || p[1] >= cfg.y_max) continue;
        if (p[2] < cfg.z_min || p[2] >= cfg.z_max) continue;
        const int r = static_cast<int>(std::floor((p[0] - cfg.x_min) / cfg.cell_x));
        const int c = static_cast<int>(std::floor((p[1] - cfg.y_min) / cfg.cell_y));
        if (r < 0 || r >= h || c < 0 || c >= w) continue;  // float edge cases at the max bound
        cells[{r, c}].push_back(p);
    }

    SparseBEVGrid grid;
    grid.rows = h;
    grid.cols = w;
    grid.sites.reserve(cells.size());
    grid.counts.reserve(cells.size());
    std::vector<float> feats;
    feats.reserve(cells.size() * kPillarFeatureDim);
    for (auto& [site, pts] : cells) {
        std::sort(pts.begin(), pts.end());
        const float cx = cfg.x_min + (static_cast<float>(site.first) + 0.5f) * cfg.cell_x;
        const float cy = cfg.y_min + (static_cast<float>(site.second) + 0.5f) * cfg.cell_y;
        float sum_dx = 0, sum_dy = 0, sum_z = 0;
        float min_z = pts[0][2], max_z = pts[0][2];
        for (const auto& p : pts) {
            sum_dx += p[0] - cx;
            sum_dy += p[1] - cy;
            sum_z += p[2];
            min_z = std::min(min_z, p[2]);
            max_z = std::max(max_z, p[2]);
        }
        const float inv = 1.0f / static_cast<float>(pts.size());
        grid.sites.push_back(site);
        grid.counts.push_back(static_cast<int>(pts.size()));
        feats.push_back(count_feature(static_cast<int>(pts.size())));
        feats.push_back(sum_dx * inv);
        feats.push_back(sum_dy * inv);
        feats.push_back(sum_z * inv);
        feats.push_back(min_z);
        feats.push_back(max_z);
    }
    grid.features = Tensor::from_data({static_cast<int>(grid.sites.size()), kPillarFeatureDim},
                                      std::move(feats));
    return grid;
}

void write_occupancy_csv(const std::string& path, const SparseBEVGrid& grid) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    std::vector<int> dense(static_cast<size_t>(grid.rows) * grid.cols, 0);
    for (size_t i = 0; i < grid.sites.size(); ++i)
        dense[static_cast<size_t>(grid.sites[i].first) * grid.cols + grid.sites[i].second] =
            grid.counts[i];
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            if (c) out << ",";
            out << dense[static_cast<size_t>(r) * grid.cols + c];
        }
        out << "\n";
    }
}

void write_occupancy_pgm(const std::string& path, const SparseBEVGrid& grid) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    int max_count = 0;
    for (int c : grid.counts) max_count = std::max(max_count, c);
    out << "P5\n" << grid.cols << " " << grid.rows << "\n255\n";
    std::vector<unsigned char> img(static_cast<size_t>(grid.rows) * grid.cols, 0);
    for (size_t i = 0; i < grid.sites.size(); ++i) {
        const auto [r, c] = grid.sites[i];
        const int v = max_count > 0 ? 55 + (200 * grid.counts[i]) / max_count : 0;
        img[static_cast<size_t>(r) * grid.cols + c] = static_cast<unsigned char>(std::min(v, 255));
    }
    out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

}  // namespace pillarnav
