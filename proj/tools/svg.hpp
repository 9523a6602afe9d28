#pragma once

// Minimal static SVG 1.1 charts: polylines, scatter points and box glyphs on
// linear or log10 axes. Output depends only on the data, so it is
// byte-reproducible.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace lmf::cli {

struct BoxGlyph {
  double x = 0, half_width = 0;
  double low = 0, q1 = 0, median = 0, q3 = 0, high = 0;
};

class Plot {
 public:
  Plot(std::string title, std::string xlabel, std::string ylabel, bool logx = false, bool logy = false)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), logx_(logx), logy_(logy) {}

  void line(std::vector<double> x, std::vector<double> y, std::string color, std::string label = {}) {
    series_.push_back({std::move(x), std::move(y), std::move(color), std::move(label), false});
  }
  void points(std::vector<double> x, std::vector<double> y, std::string color, std::string label = {}) {
    series_.push_back({std::move(x), std::move(y), std::move(color), std::move(label), true});
  }
  void box(const BoxGlyph& b) { boxes_.push_back(b); }

  void write(std::ostream& out) const {
    Range rx, ry;
    for (const auto& s : series_)
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (usable(s.x[i], logx_) && usable(s.y[i], logy_)) rx.add(tx(s.x[i])), ry.add(ty(s.y[i]));
      }
    for (const auto& b : boxes_) {
      rx.add(tx(b.x - b.half_width));
      rx.add(tx(b.x + b.half_width));
      if (usable(b.low, logy_)) ry.add(ty(b.low));
      if (usable(b.high, logy_)) ry.add(ty(b.high));
    }
    rx.finish();
    ry.finish();

    auto px = [&](double v) { return kLeft + (tx(v) - rx.lo) / (rx.hi - rx.lo) * (kWidth - kLeft - kRight); };
    auto py = [&](double v) { return kHeight - kBottom - (ty(v) - ry.lo) / (ry.hi - ry.lo) * (kHeight - kTop - kBottom); };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(out, kWidth / 2, 20, title_, "middle", 14);
    text(out, kWidth / 2, kHeight - 8, xlabel_, "middle");
    out << "<text transform=\"translate(16," << num(kHeight / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(ylabel_) << "</text>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
        << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : ticks(rx, logx_)) {
      double x = kLeft + (t - rx.lo) / (rx.hi - rx.lo) * (kWidth - kLeft - kRight);
      out << "<line x1=\"" << num(x) << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << num(x) << "\" y2=\""
          << kHeight - kBottom + 5 << "\" stroke=\"black\"/>\n";
      text(out, x, kHeight - kBottom + 18, label(t, logx_), "middle");
    }
    for (double t : ticks(ry, logy_)) {
      double y = kHeight - kBottom - (t - ry.lo) / (ry.hi - ry.lo) * (kHeight - kTop - kBottom);
      out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft << "\" y2=\"" << num(y)
          << "\" stroke=\"black\"/>\n";
      text(out, kLeft - 8, y + 4, label(t, logy_), "end");
    }

    int legend = 0;
    for (const auto& s : series_) {
      if (s.scatter) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
          if (usable(s.x[i], logx_) && usable(s.y[i], logy_))
            out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2.5\" fill=\""
                << s.color << "\" fill-opacity=\"0.6\"/>\n";
      } else {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
          if (!usable(s.x[i], logx_) || !usable(s.y[i], logy_)) continue;
          out << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
          first = false;
        }
        out << "\"/>\n";
      }
      if (!s.label.empty()) {
        double y = kTop + 16 + 16 * legend++;
        out << "<rect x=\"" << kWidth - kRight - 150 << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
            << s.color << "\"/>\n";
        text(out, kWidth - kRight - 135, y, s.label, "start");
      }
    }
    for (const auto& b : boxes_) {
      double x0 = px(b.x - b.half_width), x1 = px(b.x + b.half_width), xm = px(b.x);
      out << "<g stroke=\"black\" fill=\"none\">"
          << "<rect x=\"" << num(x0) << "\" y=\"" << num(py(b.q3)) << "\" width=\"" << num(x1 - x0) << "\" height=\""
          << num(py(b.q1) - py(b.q3)) << "\"/>"
          << "<line x1=\"" << num(x0) << "\" y1=\"" << num(py(b.median)) << "\" x2=\"" << num(x1) << "\" y2=\""
          << num(py(b.median)) << "\" stroke-width=\"2\"/>"
          << "<line x1=\"" << num(xm) << "\" y1=\"" << num(py(b.q3)) << "\" x2=\"" << num(xm) << "\" y2=\""
          << num(py(b.high)) << "\"/>"
          << "<line x1=\"" << num(xm) << "\" y1=\"" << num(py(b.q1)) << "\" x2=\"" << num(xm) << "\" y2=\""
          << num(py(b.low)) << "\"/></g>\n";
    }
    out << "</svg>\n";
  }

 private:
  struct Series {
    std::vector<double> x, y;
    std::string color, label;
    bool scatter;
  };
  struct Range {
    double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    void add(double v) { lo = std::min(lo, v), hi = std::max(hi, v); }
    void finish() {
      if (!(lo <= hi)) lo = 0, hi = 1;
      if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
      double pad = 0.04 * (hi - lo);
      lo -= pad, hi += pad;
    }
  };

  static constexpr int kWidth = 720, kHeight = 480, kLeft = 70, kRight = 20, kTop = 34, kBottom = 50;

  static bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0); }
  double tx(double v) const { return logx_ ? std::log10(v) : v; }
  double ty(double v) const { return logy_ ? std::log10(v) : v; }

  // tick positions in transformed units
  static std::vector<double> ticks(const Range& r, bool log) {
    std::vector<double> out;
    if (log) {
      double step = std::max(1.0, std::ceil((r.hi - r.lo) / 8));
      for (double t = std::ceil(r.lo); t <= r.hi; t += step) out.push_back(t);
      return out;
    }
    double raw = (r.hi - r.lo) / 6, mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = raw / mag < 2 ? 2 * mag : raw / mag < 5 ? 5 * mag : 10 * mag;
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi; t += step) out.push_back(std::abs(t) < 1e-12 ? 0 : t);
    return out;
  }
  static std::string label(double t, bool log) {
    char buf[32];
    if (log) std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(t)));
    else std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
  }
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }
  static std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  }
  static void text(std::ostream& out, double x, double y, const std::string& s, const char* anchor, int size = 12) {
    out << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\"";
    if (size != 12) out << " font-size=\"" << size << "\"";
    out << ">" << escape(s) << "</text>\n";
  }

  std::string title_, xlabel_, ylabel_;
  bool logx_, logy_;
  std::vector<Series> series_;
  std::vector<BoxGlyph> boxes_;
};

}  // namespace lmf::cli
