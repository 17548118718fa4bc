#include "millibot/svg.hpp"

#include "millibot/text.hpp"

namespace millibot::svg {

Document::Document(double min_x, double min_y, double width, double height) {
  header_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" +
            format_double(min_x) + " " + format_double(min_y) + " " +
            format_double(width) + " " + format_double(height) + "\">\n";
}

void Document::rect(double x, double y, double w, double h,
                    const std::string& fill) {
  body_ += "<rect x=\"" + format_double(x) + "\" y=\"" + format_double(y) +
           "\" width=\"" + format_double(w) + "\" height=\"" + format_double(h) +
           "\" fill=\"" + fill + "\"/>\n";
}

void Document::circle(double cx, double cy, double r, const std::string& fill) {
  body_ += "<circle cx=\"" + format_double(cx) + "\" cy=\"" + format_double(cy) +
           "\" r=\"" + format_double(r) + "\" fill=\"" + fill + "\"/>\n";
}

void Document::polyline(const std::vector<Vec2>& pts, const std::string& stroke,
                        double stroke_width, const std::string& dash) {
  body_ += "<polyline points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) body_ += ' ';
    body_ += format_double(pts[i].x()) + "," + format_double(pts[i].y());
  }
  body_ += "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
           format_double(stroke_width) + "\"";
  if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
  body_ += "/>\n";
}

void Document::line(double x1, double y1, double x2, double y2,
                    const std::string& stroke, double stroke_width) {
  body_ += "<line x1=\"" + format_double(x1) + "\" y1=\"" + format_double(y1) +
           "\" x2=\"" + format_double(x2) + "\" y2=\"" + format_double(y2) +
           "\" stroke=\"" + stroke + "\" stroke-width=\"" +
           format_double(stroke_width) + "\"/>\n";
}

void Document::text(double x, double y, double size, const std::string& fill,
                    const std::string& content) {
  body_ += "<text x=\"" + format_double(x) + "\" y=\"" + format_double(y) +
           "\" font-size=\"" + format_double(size) + "\" fill=\"" + fill +
           "\" font-family=\"sans-serif\">" + content + "</text>\n";
}

std::string Document::str() const { return header_ + body_ + "</svg>\n"; }

void Document::write(const std::string& path) const { write_file(path, str()); }

}  // namespace millibot::svg
