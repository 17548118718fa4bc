#pragma once

#include <string>
#include <vector>

#include "millibot/types.hpp"

namespace millibot::svg {

// Tiny deterministic SVG writer; coordinates are emitted with shortest
// round-trip formatting so repeated runs produce identical bytes.
class Document {
 public:
  Document(double min_x, double min_y, double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill);
  void circle(double cx, double cy, double r, const std::string& fill);
  void polyline(const std::vector<Vec2>& pts, const std::string& stroke,
                double stroke_width, const std::string& dash = "");
  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double stroke_width);
  void text(double x, double y, double size, const std::string& fill,
            const std::string& content);

  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::string body_;
  std::string header_;
};

}  // namespace millibot::svg
