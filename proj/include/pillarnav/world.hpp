#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "pillarnav/pointcloud.hpp"

namespace pillarnav {

struct Vec2 {
    float x = 0.0f;
    float y = 0.0f;
};

float distance(const Vec2& a, const Vec2& b);

// Axis-aligned box resting on the floor.
struct Box {
    float cx = 0, cy = 0;
    float sx = 1, sy = 1, sz = 1.5f;
};

struct PedSpec {
    std::vector<Vec2> waypoints;  // constant-speed loop
    float radius = 0.3f;
    float height = 1.7f;
    float speed = 1.0f;
};

struct SensorConfig {
    int rays_h = 64;
    int rays_v = 24;
    float fov_h_deg = 85.0f;
    float fov_v_deg = 58.0f;
    float height = 0.45f;  // camera height above the floor
    float range_min = 0.3f;
    float range_max = 10.0f;
    int cloud_points = 1024;
};

struct RewardConfig {
    float eta_d = 0.2f;
    float r_goal = 80.0f;
    float r_collision = -100.0f;
};

struct WorldSpec {
    std::string scenario = "square";
    float half_extent = 10.0f;
    float wall_height = 2.0f;
    std::vector<Box> fixed_boxes;
    int random_boxes = 6;
    float box_min_size = 0.6f;
    float box_max_size = 1.5f;
    float box_height = 1.5f;
    std::vector<PedSpec> pedestrians;
    int random_pedestrians = 0;  // waypoint loops sampled at reset
    SensorConfig sensor;
    RewardConfig reward;
    float robot_radius = 0.3f;
    float dt = 0.1f;
    int max_steps = 500;
    float goal_min_dist = 2.0f;

    static WorldSpec square();
    static WorldSpec lobby(int pedestrians);
};

void to_json(nlohmann::json& j, const WorldSpec& spec);
void from_json(const nlohmann::json& j, WorldSpec& spec);

struct RobotState {
    float x = 0, y = 0;
    float theta = 0;  // wrapped to (-pi, pi]
    float v = 0, omega = 0;
    float radius = 0.3f;
};

struct Observation {
    PointCloud cloud;
    float goal_distance = 0;
    float goal_bearing = 0;  // robot frame, (-pi, pi]
};

enum class Outcome { running, goal, collision, timeout };
const char* outcome_name(Outcome o);

struct StepResult {
    Observation observation;
    float reward = 0;
    bool done = false;
    Outcome outcome = Outcome::running;
};

// Reward cases, evaluated in order: goal, collision, shaped.
float compute_reward(const RewardConfig& cfg, float d_t, float d_prev, float v, float omega,
                     bool collided);

float wrap_angle(float a);

// Deterministic, seedable navigation environment: arena with walls, boxed
// obstacles, waypoint pedestrians, a unicycle robot, and a raycast depth
// camera.
class World {
public:
    explicit World(WorldSpec spec);

    Observation reset(std::uint32_t seed);
    StepResult step(float v, float omega);

    bool collision_check() const;
    PointCloud raycast_depth();  // consumes sensor rng for downsampling

    const WorldSpec& spec() const { return spec_; }
    const RobotState& robot() const { return robot_; }
    Vec2 goal() const { return goal_; }
    Vec2 start() const { return start_; }
    const std::vector<Box>& boxes() const { return boxes_; }
    bool done() const { return outcome_ != Outcome::running; }
    Outcome outcome() const { return outcome_; }
    int step_count() const { return steps_; }

    struct Ped {
        PedSpec spec;
        Vec2 pos;
        size_t next_wp = 0;
    };
    const std::vector<Ped>& pedestrians() const { return peds_; }

private:
    Observation make_observation();
    bool position_free(const Vec2& p, float clearance) const;
    Vec2 sample_free_position(std::mt19937& rng, float clearance, int max_tries);
    void advance_pedestrians();
    float raycast_single(const Vec2& origin, float cam_z, float dx, float dy, float dz) const;

    WorldSpec spec_;
    std::vector<Box> boxes_;  // fixed + sampled
    std::vector<Ped> peds_;
    RobotState robot_;
    Vec2 goal_;
    Vec2 start_;
    float d_prev_ = 0;
    int steps_ = 0;
    Outcome outcome_ = Outcome::running;
    bool started_ = false;
    std::mt19937 rng_;         // layout sampling
    std::mt19937 sensor_rng_;  // cloud downsampling
};

struct TraceRow {
    int t;
    float x, y, theta, v, omega, reward;
    Outcome outcome;
};

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);

}  // namespace pillarnav
