#include "millibot/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "millibot/errors.hpp"
#include "millibot/text.hpp"

namespace millibot::planner {

void CanalMask::mm_to_pixel(const Vec2& mm, int& col, int& row) const {
  col = static_cast<int>(std::lround(mm.x() / pixel_mm + (nx - 1) / 2.0));
  row = static_cast<int>(std::lround((ny - 1) / 2.0 - mm.y() / pixel_mm));
}

namespace {

// 1-D squared-distance lower envelope (Felzenszwalb/Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, int n,
            std::vector<int>& v, std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      s = ((f[q] + q * double(q)) - (f[v[k]] + v[k] * double(v[k]))) /
          (2.0 * q - 2.0 * v[k]);
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double dq = q - double(v[k]);
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

ClearanceMap distance_transform(const CanalMask& mask) {
  if (mask.nx < 1 || mask.ny < 1) throw GridError("empty mask");
  const int nx = mask.nx, ny = mask.ny;
  const double inf = 1e18;

  ClearanceMap out;
  out.nx = nx;
  out.ny = ny;
  std::size_t total = static_cast<std::size_t>(nx) * ny;
  std::vector<double> grid(total);
  for (int row = 0; row < ny; ++row) {
    for (int col = 0; col < nx; ++col) {
      bool border = row == 0 || col == 0 || row == ny - 1 || col == nx - 1;
      bool obstacle = border || !mask.at(col, row);
      grid[mask.idx(col, row)] = obstacle ? 0.0 : inf;
    }
  }

  int nmax = std::max(nx, ny);
  std::vector<double> f(nmax), d(nmax);
  std::vector<int> v(nmax);
  std::vector<double> z(nmax + 1);

  for (int col = 0; col < nx; ++col) {
    for (int row = 0; row < ny; ++row) f[row] = grid[mask.idx(col, row)];
    edt_1d(f, d, ny, v, z);
    for (int row = 0; row < ny; ++row) grid[mask.idx(col, row)] = d[row];
  }
  for (int row = 0; row < ny; ++row) {
    for (int col = 0; col < nx; ++col) f[col] = grid[mask.idx(col, row)];
    edt_1d(f, d, nx, v, z);
    for (int col = 0; col < nx; ++col) grid[mask.idx(col, row)] = d[col];
  }

  out.sq_px.resize(total);
  out.mm.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    out.sq_px[k] = std::llround(grid[k]);  // exact integers up to fp round-off
    out.mm[k] = std::sqrt(static_cast<double>(out.sq_px[k])) * mask.pixel_mm;
  }
  return out;
}

CostMap build_cost_map(const CanalMask& mask, const ClearanceMap& clearance,
                       double min_clearance_mm, double w_clear) {
  if (clearance.nx != mask.nx || clearance.ny != mask.ny)
    throw GridError("clearance map does not match mask");
  CostMap out;
  out.nx = mask.nx;
  out.ny = mask.ny;
  out.min_clearance_mm = min_clearance_mm;
  std::size_t total = static_cast<std::size_t>(mask.nx) * mask.ny;
  out.feasible.assign(total, 0);
  out.cost.assign(total, std::numeric_limits<double>::infinity());

  double cmax = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    if (mask.navigable[k] && clearance.mm[k] >= min_clearance_mm) {
      out.feasible[k] = 1;
      cmax = std::max(cmax, clearance.mm[k]);
    }
  }
  out.max_feasible_clearance_mm = cmax;
  if (cmax <= 0.0) return out;  // empty feasible set; callers check

  for (std::size_t k = 0; k < total; ++k) {
    if (out.feasible[k])
      out.cost[k] = 1.0 + w_clear * (1.0 - clearance.mm[k] / cmax);
  }
  return out;
}

PixelCoord project_to_feasible(const CostMap& map, PixelCoord p) {
  PixelCoord best;
  std::int64_t best_d = -1;
  bool found = false;
  for (int row = 0; row < map.ny; ++row) {
    for (int col = 0; col < map.nx; ++col) {
      if (!map.feasible[map.idx(col, row)]) continue;
      std::int64_t dc = col - p.col, dr = row - p.row;
      std::int64_t d = dc * dc + dr * dr;
      if (!found || d < best_d) {
        found = true;
        best_d = d;
        best = {col, row};
      }
    }
  }
  if (!found) throw EmptyFeasibleError("no feasible pixel in cost map");
  return best;
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double octile(PixelCoord a, PixelCoord b) {
  double dc = std::abs(a.col - b.col);
  double dr = std::abs(a.row - b.row);
  return dc + dr + (kSqrt2 - 2.0) * std::min(dc, dr);
}

struct OpenEntry {
  double f, h;
  std::size_t idx;
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (h != o.h) return h > o.h;
    return idx > o.idx;
  }
};

}  // namespace

std::vector<PixelCoord> astar(const CostMap& map, PixelCoord start, PixelCoord goal) {
  auto in_bounds = [&](PixelCoord p) {
    return p.col >= 0 && p.row >= 0 && p.col < map.nx && p.row < map.ny;
  };
  if (!in_bounds(start) || !map.feasible[map.idx(start.col, start.row)])
    throw NoPathError("start pixel is not feasible");
  if (!in_bounds(goal) || !map.feasible[map.idx(goal.col, goal.row)])
    throw NoPathError("goal pixel is not feasible");

  std::size_t total = static_cast<std::size_t>(map.nx) * map.ny;
  std::vector<double> g(total, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(total, total);
  std::vector<std::uint8_t> closed(total, 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;

  std::size_t s_idx = map.idx(start.col, start.row);
  std::size_t t_idx = map.idx(goal.col, goal.row);
  g[s_idx] = 0.0;
  open.push({octile(start, goal), octile(start, goal), s_idx});

  constexpr int dc[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  constexpr int dr[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  while (!open.empty()) {
    OpenEntry e = open.top();
    open.pop();
    if (closed[e.idx]) continue;
    closed[e.idx] = 1;
    if (e.idx == t_idx) break;

    PixelCoord p{static_cast<int>(e.idx % map.nx), static_cast<int>(e.idx / map.nx)};
    for (int d = 0; d < 8; ++d) {
      PixelCoord q{p.col + dc[d], p.row + dr[d]};
      if (!in_bounds(q)) continue;
      std::size_t qi = map.idx(q.col, q.row);
      if (closed[qi] || !map.feasible[qi]) continue;
      double base = (d < 4) ? 1.0 : kSqrt2;
      double cand = g[e.idx] + base * map.cost[qi];
      if (cand < g[qi]) {
        g[qi] = cand;
        parent[qi] = e.idx;
        double h = octile(q, goal);
        open.push({cand + h, h, qi});
      }
    }
  }

  if (!closed[t_idx]) throw NoPathError("goal not reachable from start");

  std::vector<PixelCoord> path;
  for (std::size_t i = t_idx; i != total; i = parent[i]) {
    path.push_back({static_cast<int>(i % map.nx), static_cast<int>(i / map.nx)});
    if (i == s_idx) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Vec2> smooth_path(const std::vector<PixelCoord>& path, int window) {
  if (path.empty()) throw NoPathError("cannot smooth an empty path");
  if (window < 1 || window % 2 == 0)
    throw ConfigError("smoothing window must be odd and positive");
  const int n = static_cast<int>(path.size());
  const int half = window / 2;
  std::vector<Vec2> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int reach = std::min({half, i, n - 1 - i});  // shrink window near the ends
    Vec2 acc{0.0, 0.0};
    for (int j = i - reach; j <= i + reach; ++j)
      acc += Vec2(path[static_cast<std::size_t>(j)].col,
                  path[static_cast<std::size_t>(j)].row);
    out[static_cast<std::size_t>(i)] = acc / (2.0 * reach + 1.0);
  }
  return out;
}

PlannedPath smooth_resample(const std::vector<PixelCoord>& path,
                            const CanalMask& mask, int window, int n_waypoints) {
  if (n_waypoints < 2) throw ConfigError("need at least two waypoints");

  std::vector<Vec2> smooth = smooth_path(path, window);
  for (auto& p : smooth) p = mask.pixel_to_mm(p.x(), p.y());
  if (smooth.size() == 1) smooth.push_back(smooth.front());  // degenerate path
  const int n = static_cast<int>(smooth.size());

  std::vector<double> cum(n, 0.0);
  for (int i = 1; i < n; ++i)
    cum[i] = cum[i - 1] + (smooth[i] - smooth[i - 1]).norm();
  double length = cum.back();

  PlannedPath out;
  out.waypoints_mm.resize(n_waypoints);
  out.waypoints_mm.front() = smooth.front();
  out.waypoints_mm.back() = smooth.back();
  int seg = 0;
  for (int k = 1; k + 1 < n_waypoints; ++k) {
    double target = length * k / (n_waypoints - 1);
    while (seg < n - 2 && cum[seg + 1] < target) ++seg;
    double span = cum[seg + 1] - cum[seg];
    double u = span > 0.0 ? (target - cum[seg]) / span : 0.0;
    out.waypoints_mm[k] = smooth[seg] + u * (smooth[seg + 1] - smooth[seg]);
  }

  out.length_mm = 0.0;
  for (int k = 1; k < n_waypoints; ++k)
    out.length_mm += (out.waypoints_mm[k] - out.waypoints_mm[k - 1]).norm();
  return out;
}

ReferenceTrajectory::ReferenceTrajectory(PlannedPath path, double speed_mmps)
    : path_(std::move(path)), speed_(speed_mmps) {
  if (path_.waypoints_mm.size() < 2)
    throw ConfigError("reference needs at least two waypoints");
  if (speed_ <= 0.0) throw ConfigError("reference speed must be positive");
  cum_.resize(path_.waypoints_mm.size(), 0.0);
  for (std::size_t i = 1; i < path_.waypoints_mm.size(); ++i)
    cum_[i] = cum_[i - 1] +
              (path_.waypoints_mm[i] - path_.waypoints_mm[i - 1]).norm();
  duration_ = cum_.back() / speed_;
}

ReferenceTrajectory::Sample ReferenceTrajectory::at(double t) const {
  Sample out;
  const auto& wp = path_.waypoints_mm;
  double s = std::clamp(speed_ * t, 0.0, cum_.back());

  std::size_t seg = 0;
  while (seg + 2 < wp.size() && cum_[seg + 1] < s) ++seg;
  double span = cum_[seg + 1] - cum_[seg];
  Vec2 dir = span > 0.0 ? Vec2((wp[seg + 1] - wp[seg]) / span) : Vec2(1.0, 0.0);
  double u = span > 0.0 ? (s - cum_[seg]) / span : 0.0;

  out.position_mm = wp[seg] + u * span * dir;
  out.tangent = dir;
  bool clamped = speed_ * t >= cum_.back();
  out.velocity_mmps = clamped ? Vec2(0.0, 0.0) : Vec2(speed_ * dir);

  if (clamped) {
    // keep the tangent of the final segment
    std::size_t last = wp.size() - 1;
    Vec2 d = wp[last] - wp[last - 1];
    if (d.norm() > 0.0) out.tangent = d.normalized();
    out.position_mm = wp[last];
  }
  return out;
}

CanalMask load_pgm(const std::string& path) {
  std::string data = read_file(path);
  std::size_t pos = 0;

  auto next_token = [&]() -> std::string {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])))
      ++pos;
    if (start == pos) throw ParseError(path + ": truncated PGM header");
    return data.substr(start, pos - start);
  };

  std::string magic = next_token();
  if (magic != "P2" && magic != "P5")
    throw ParseError(path + ": not a PGM file (magic '" + magic + "')");
  long long nx = parse_int(next_token());
  long long ny = parse_int(next_token());
  long long maxval = parse_int(next_token());
  if (nx < 1 || ny < 1 || maxval < 1 || maxval > 65535)
    throw ParseError(path + ": bad PGM dimensions");

  CanalMask mask;
  mask.nx = static_cast<int>(nx);
  mask.ny = static_cast<int>(ny);
  std::size_t total = static_cast<std::size_t>(nx * ny);
  mask.navigable.resize(total);

  auto classify = [&](long long v) -> std::uint8_t {
    return (v * 255 >= 128 * maxval) ? 1 : 0;
  };

  if (magic == "P2") {
    for (std::size_t k = 0; k < total; ++k)
      mask.navigable[k] = classify(parse_int(next_token()));
  } else {
    ++pos;  // single whitespace byte after maxval
    int bytes = maxval > 255 ? 2 : 1;
    if (data.size() - pos < total * static_cast<std::size_t>(bytes))
      throw ParseError(path + ": truncated PGM raster");
    for (std::size_t k = 0; k < total; ++k) {
      long long v = static_cast<unsigned char>(data[pos + k * bytes]);
      if (bytes == 2)
        v = (v << 8) | static_cast<unsigned char>(data[pos + k * 2 + 1]);
      mask.navigable[k] = classify(v);
    }
  }
  return mask;
}

void save_pgm(const std::string& path, const CanalMask& mask) {
  std::string body = "P5\n" + std::to_string(mask.nx) + " " +
                     std::to_string(mask.ny) + "\n255\n";
  body.reserve(body.size() + mask.navigable.size());
  for (auto v : mask.navigable) body += static_cast<char>(v ? 255 : 0);
  write_file(path, body);
}

void save_waypoints_csv(const std::string& path, const PlannedPath& planned) {
  std::string body = "idx,x_mm,y_mm\n";
  for (std::size_t i = 0; i < planned.waypoints_mm.size(); ++i) {
    body += std::to_string(i);
    body += ',';
    body += format_double(planned.waypoints_mm[i].x());
    body += ',';
    body += format_double(planned.waypoints_mm[i].y());
    body += '\n';
  }
  write_file(path, body);
}

PlannedPath load_waypoints_csv(const std::string& path) {
  std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "idx,x_mm,y_mm")
    throw ParseError(path + ": bad header '" + line + "'");

  PlannedPath out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != 3)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 3 columns");
    long long idx = parse_int(cols[0]);
    if (idx != static_cast<long long>(out.waypoints_mm.size()))
      throw ParseError(path + ":" + std::to_string(lineno) + ": non-sequential index");
    out.waypoints_mm.emplace_back(parse_double(cols[1]), parse_double(cols[2]));
  }
  if (out.waypoints_mm.size() < 2)
    throw ParseError(path + ": need at least two waypoints");
  for (std::size_t i = 1; i < out.waypoints_mm.size(); ++i)
    out.length_mm += (out.waypoints_mm[i] - out.waypoints_mm[i - 1]).norm();
  return out;
}

}  // namespace millibot::planner
