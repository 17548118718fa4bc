#include "millibot/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "millibot/errors.hpp"
#include "millibot/text.hpp"

namespace millibot::flow {

double modulation(const PulsatileProfile& profile, double t) {
  switch (profile.waveform) {
    case Waveform::kConstant:
      return 1.0;
    case Waveform::kRectifiedSine:
      return std::abs(std::sin(2.0 * std::numbers::pi * profile.frequency_hz * t +
                               profile.phase));
  }
  return 1.0;
}

double mean_modulation(const PulsatileProfile& profile) {
  switch (profile.waveform) {
    case Waveform::kConstant:
      return 1.0;
    case Waveform::kRectifiedSine:
      return 2.0 / std::numbers::pi;
  }
  return 1.0;
}

FlowSampleResult sample_flow(const FlowGrid& grid, const PulsatileProfile& profile,
                             const Vec2& point_mm, double t) {
  FlowSampleResult out;
  if (grid.nx < 2 || grid.ny < 2) return out;

  double fx = (point_mm.x() - grid.origin_mm.x()) / grid.spacing_mm;
  double fy = (point_mm.y() - grid.origin_mm.y()) / grid.spacing_mm;
  if (fx < 0.0 || fy < 0.0 || fx > grid.nx - 1 || fy > grid.ny - 1) return out;

  int nix = std::clamp(static_cast<int>(std::lround(fx)), 0, grid.nx - 1);
  int niy = std::clamp(static_cast<int>(std::lround(fy)), 0, grid.ny - 1);
  if (!grid.lumen[grid.idx(nix, niy)]) return out;

  int ix = std::min(static_cast<int>(fx), grid.nx - 2);
  int iy = std::min(static_cast<int>(fy), grid.ny - 2);
  double tx = fx - ix;
  double ty = fy - iy;

  auto lerp2 = [&](const std::vector<double>& f) {
    double f00 = f[grid.idx(ix, iy)], f10 = f[grid.idx(ix + 1, iy)];
    double f01 = f[grid.idx(ix, iy + 1)], f11 = f[grid.idx(ix + 1, iy + 1)];
    return (1 - tx) * (1 - ty) * f00 + tx * (1 - ty) * f10 +
           (1 - tx) * ty * f01 + tx * ty * f11;
  };

  double g = modulation(profile, t);
  out.velocity = Vec2(lerp2(grid.vx), lerp2(grid.vy)) * g;
  out.inside = true;
  return out;
}

FlowGrid synth_jet_flow(double peak_speed_mps, const SynthGeometry& geom) {
  if (peak_speed_mps < 0.0) throw GeometryError("peak speed must be non-negative");
  if (geom.nx < 3 || geom.ny < 3) throw GeometryError("synthetic grid too small");
  if (geom.inlets.empty()) throw GeometryError("no inlets given");
  if (!geom.lumen.empty() &&
      geom.lumen.size() != static_cast<std::size_t>(geom.nx) * geom.ny)
    throw GeometryError("lumen override size mismatch");

  FlowGrid grid;
  grid.origin_mm = geom.origin_mm;
  grid.spacing_mm = geom.spacing_mm;
  grid.nx = geom.nx;
  grid.ny = geom.ny;
  std::size_t total = static_cast<std::size_t>(geom.nx) * geom.ny;
  grid.vx.assign(total, 0.0);
  grid.vy.assign(total, 0.0);

  if (geom.lumen.empty()) {
    grid.lumen.assign(total, 1);
    for (int ix = 0; ix < grid.nx; ++ix) {
      grid.lumen[grid.idx(ix, 0)] = 0;
      grid.lumen[grid.idx(ix, grid.ny - 1)] = 0;
    }
    for (int iy = 0; iy < grid.ny; ++iy) {
      grid.lumen[grid.idx(0, iy)] = 0;
      grid.lumen[grid.idx(grid.nx - 1, iy)] = 0;
    }
  } else {
    grid.lumen = geom.lumen;
  }

  double xmax = geom.origin_mm.x() + (geom.nx - 1) * geom.spacing_mm;
  double ymax = geom.origin_mm.y() + (geom.ny - 1) * geom.spacing_mm;
  for (const auto& jet : geom.inlets) {
    if (jet.direction.norm() == 0.0) throw GeometryError("inlet direction is zero");
    if (jet.width_mm <= 0.0) throw GeometryError("inlet width must be positive");
    if (jet.center_mm.x() < geom.origin_mm.x() || jet.center_mm.x() > xmax ||
        jet.center_mm.y() < geom.origin_mm.y() || jet.center_mm.y() > ymax)
      throw GeometryError("inlet outside grid");
  }
  for (const auto& cell : geom.recircs) {
    if (cell.radius_mm <= 0.0) throw GeometryError("recirculation radius must be positive");
    if (cell.center_mm.x() < geom.origin_mm.x() || cell.center_mm.x() > xmax ||
        cell.center_mm.y() < geom.origin_mm.y() || cell.center_mm.y() > ymax)
      throw GeometryError("recirculation center outside grid");
  }

  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      std::size_t k = grid.idx(ix, iy);
      if (!grid.lumen[k]) continue;
      Vec2 p = geom.origin_mm + geom.spacing_mm * Vec2(ix, iy);
      Vec2 v{0.0, 0.0};
      for (const auto& jet : geom.inlets) {
        Vec2 dir = jet.direction.normalized();
        Vec2 rel = p - jet.center_mm;
        double s = rel.dot(dir);                    // downstream distance
        double q = rel.x() * dir.y() - rel.y() * dir.x();  // lateral offset
        double along = (s >= 0.0)
                           ? std::exp(-s / geom.decay_mm)
                           : std::exp(-(s / jet.width_mm) * (s / jet.width_mm));
        double across = std::exp(-(q / jet.width_mm) * (q / jet.width_mm));
        v += jet.amplitude * along * across * dir;
      }
      for (const auto& cell : geom.recircs) {
        Vec2 rel = p - cell.center_mm;
        double r = rel.norm();
        if (r <= 0.0) continue;
        double u = r / cell.radius_mm;
        double speed = cell.amplitude * u * std::exp(0.5 * (1.0 - u * u));
        v += speed / r * Vec2(-rel.y(), rel.x());
      }
      grid.vx[k] = v.x();
      grid.vy[k] = v.y();
    }
  }

  // Remove the wall-normal component at lumen nodes that touch wall.
  std::vector<double> nvx = grid.vx, nvy = grid.vy;
  constexpr int dx[4] = {1, -1, 0, 0};
  constexpr int dy[4] = {0, 0, 1, -1};
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      std::size_t k = grid.idx(ix, iy);
      if (!grid.lumen[k]) continue;
      Vec2 normal{0.0, 0.0};
      for (int d = 0; d < 4; ++d) {
        int jx = ix + dx[d], jy = iy + dy[d];
        bool wall = jx < 0 || jy < 0 || jx >= grid.nx || jy >= grid.ny ||
                    !grid.lumen[grid.idx(jx, jy)];
        if (wall) normal += Vec2(dx[d], dy[d]);
      }
      if (normal.norm() < 1e-12) continue;
      normal.normalize();
      Vec2 v{grid.vx[k], grid.vy[k]};
      v -= v.dot(normal) * normal;
      nvx[k] = v.x();
      nvy[k] = v.y();
    }
  }
  grid.vx = std::move(nvx);
  grid.vy = std::move(nvy);

  double peak = 0.0;
  for (std::size_t k = 0; k < total; ++k)
    peak = std::max(peak, std::hypot(grid.vx[k], grid.vy[k]));
  if (peak <= 0.0) throw GeometryError("jets produce no flow inside the lumen");
  double scale = peak_speed_mps / peak;
  for (std::size_t k = 0; k < total; ++k) {
    grid.vx[k] *= scale;
    grid.vy[k] *= scale;
  }
  return grid;
}

void save_flow_csv(const std::string& path, const FlowGrid& grid) {
  std::string body = "x_mm,y_mm,vx_mps,vy_mps\n";
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      std::size_t k = grid.idx(ix, iy);
      double x = grid.origin_mm.x() + ix * grid.spacing_mm;
      double y = grid.origin_mm.y() + iy * grid.spacing_mm;
      body += format_double(x);
      body += ',';
      body += format_double(y);
      body += ',';
      body += format_double(grid.vx[k]);
      body += ',';
      body += format_double(grid.vy[k]);
      body += '\n';
    }
  }
  write_file(path, body);
}

FlowGrid load_flow_csv(const std::string& path) {
  std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x_mm,y_mm,vx_mps,vy_mps")
    throw ParseError(path + ": bad header '" + line + "'");

  std::vector<double> xs, ys, vxs, vys;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != 4)
      throw ParseError(path + ": line " + std::to_string(lineno) + ": expected 4 columns");
    try {
      xs.push_back(parse_double(cols[0]));
      ys.push_back(parse_double(cols[1]));
      vxs.push_back(parse_double(cols[2]));
      vys.push_back(parse_double(cols[3]));
    } catch (const ParseError& e) {
      throw ParseError(path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (xs.empty()) throw ParseError(path + ": no data rows");

  // Row-major y-then-x ordering: the first run of rows sharing y defines nx.
  std::size_t nx = 1;
  while (nx < xs.size() && ys[nx] == ys[0]) ++nx;
  if (xs.size() % nx != 0)
    throw GridError(path + ": row count not a multiple of grid width");
  std::size_t ny = xs.size() / nx;
  if (nx < 2 || ny < 2) throw GridError(path + ": grid must be at least 2x2");

  double sx = xs[1] - xs[0];
  double sy = ys[nx] - ys[0];
  if (sx <= 0.0 || sy <= 0.0) throw GridError(path + ": grid not ascending");
  double tol = 1e-6 * std::max(std::abs(sx), std::abs(sy));
  if (std::abs(sx - sy) > tol)
    throw GridError(path + ": anisotropic spacing");
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      std::size_t k = iy * nx + ix;
      double ex = xs[0] + static_cast<double>(ix) * sx;
      double ey = ys[0] + static_cast<double>(iy) * sy;
      if (std::abs(xs[k] - ex) > tol || std::abs(ys[k] - ey) > tol)
        throw GridError(path + ": nodes do not form a uniform row-major grid");
    }
  }

  FlowGrid grid;
  grid.origin_mm = Vec2(xs[0], ys[0]);
  grid.spacing_mm = sx;
  grid.nx = static_cast<int>(nx);
  grid.ny = static_cast<int>(ny);
  grid.vx = std::move(vxs);
  grid.vy = std::move(vys);
  grid.lumen.assign(xs.size(), 1);  // format carries no wall information
  return grid;
}

}  // namespace millibot::flow
