#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "millibot/types.hpp"

namespace millibot::planner {

// Binary occupancy image. navigable[row*nx + col] is 1 inside the channel.
// Pixel (col, row) has row 0 at the top of the image; the centered metric
// frame puts +y up, so row increases as y decreases.
struct CanalMask {
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> navigable;
  double pixel_mm = kPixelMm;

  std::size_t idx(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(col);
  }
  bool at(int col, int row) const { return navigable[idx(col, row)] != 0; }

  Vec2 pixel_to_mm(double col, double row) const {
    return Vec2((col - (nx - 1) / 2.0) * pixel_mm,
                ((ny - 1) / 2.0 - row) * pixel_mm);
  }
  // Nearest pixel containing the point; may land outside the image.
  void mm_to_pixel(const Vec2& mm, int& col, int& row) const;
};

struct PixelCoord {
  int col = 0, row = 0;
  bool operator==(const PixelCoord&) const = default;
};

// Exact Euclidean distance to the nearest non-navigable pixel. The outermost
// pixel ring of the image counts as obstacle regardless of the mask, so a
// fully open image still has finite clearance everywhere.
struct ClearanceMap {
  int nx = 0, ny = 0;
  std::vector<std::int64_t> sq_px;  // squared distance in pixel units
  std::vector<double> mm;           // sqrt(sq_px) * pixel_mm
};

ClearanceMap distance_transform(const CanalMask& mask);

// feasible = navigable and clearance >= min_clearance_mm. Cost on feasible
// pixels falls from 1.5 at the clearance floor to 1.0 at the map's maximum
// feasible clearance: cost = 1 + w * (1 - clearance/max_feasible_clearance).
struct CostMap {
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> feasible;
  std::vector<double> cost;
  double min_clearance_mm = 5.0;
  double max_feasible_clearance_mm = 0.0;

  std::size_t idx(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(col);
  }
};

CostMap build_cost_map(const CanalMask& mask, const ClearanceMap& clearance,
                       double min_clearance_mm = 5.0, double w_clear = 0.5);

// Nearest feasible pixel (Euclidean, ties by row-major order). Throws
// EmptyFeasibleError when the map has no feasible pixel at all.
PixelCoord project_to_feasible(const CostMap& map, PixelCoord p);

// 8-connected A*. Step cost is (1 or sqrt(2)) * cost(destination); the
// heuristic is the octile distance (admissible since cost >= 1). Expansion
// ties break on (f, h, row-major index) so runs are reproducible.
std::vector<PixelCoord> astar(const CostMap& map, PixelCoord start, PixelCoord goal);

struct PlannedPath {
  std::vector<Vec2> waypoints_mm;  // centered frame
  double length_mm = 0.0;          // arc length of the waypoint polyline
};

// Centered moving average in pixel coordinates; the window shrinks
// symmetrically near the ends so the endpoints stay fixed.
std::vector<Vec2> smooth_path(const std::vector<PixelCoord>& path, int window);

// Moving-average smoothing (window shrinks symmetrically near the ends)
// followed by resampling to n_waypoints equally spaced in arc length,
// endpoints included.
PlannedPath smooth_resample(const std::vector<PixelCoord>& path,
                            const CanalMask& mask, int window = 7,
                            int n_waypoints = 10);

// Constant-speed reference along the waypoint polyline; clamps at the final
// waypoint with zero velocity once the path is exhausted.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory(PlannedPath path, double speed_mmps);

  struct Sample {
    Vec2 position_mm{0.0, 0.0};
    Vec2 velocity_mmps{0.0, 0.0};
    Vec2 tangent{1.0, 0.0};
  };
  Sample at(double t) const;

  double duration_s() const { return duration_; }
  double length_mm() const { return cum_.empty() ? 0.0 : cum_.back(); }
  const PlannedPath& path() const { return path_; }
  double speed_mmps() const { return speed_; }

 private:
  PlannedPath path_;
  double speed_;
  double duration_;
  std::vector<double> cum_;
};

CanalMask load_pgm(const std::string& path);
void save_pgm(const std::string& path, const CanalMask& mask);

void save_waypoints_csv(const std::string& path, const PlannedPath& planned);
PlannedPath load_waypoints_csv(const std::string& path);

}  // namespace millibot::planner
