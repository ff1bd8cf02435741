#include "spm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace spm::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-3, std::abs(lo) * 0.05);
      lo -= pad;
      hi += pad;
    }
  }
};

std::vector<double> nice_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
  return t;
}

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

Plot& Plot::xlabel(std::string s) {
  xlabel_ = std::move(s);
  return *this;
}
Plot& Plot::ylabel(std::string s) {
  ylabel_ = std::move(s);
  return *this;
}
Plot& Plot::line(std::vector<double> xs, std::vector<double> ys, std::string color, std::string label) {
  lines_.push_back({std::move(xs), std::move(ys), std::move(color), std::move(label)});
  return *this;
}
Plot& Plot::band(std::vector<double> xs, std::vector<double> lo, std::vector<double> hi, std::string color) {
  bands_.push_back({std::move(xs), std::move(lo), std::move(hi), std::move(color)});
  return *this;
}
Plot& Plot::histogram(std::vector<double> values, std::string color, std::string label) {
  hists_.push_back({std::move(values), std::move(color), std::move(label)});
  return *this;
}
Plot& Plot::vline(double x, std::string color, bool dashed) {
  vlines_.push_back({x, std::move(color), dashed});
  return *this;
}
Plot& Plot::bins(std::size_t count) {
  bins_ = std::max<std::size_t>(1, count);
  return *this;
}

std::string Plot::render(double x0, double y0, double width, double height) const {
  const double ml = 52, mr = 12, mt = 24, mb = 40;
  const double pw = width - ml - mr, ph = height - mt - mb;

  Range xr, yr;
  for (const auto& s : lines_) {
    for (double v : s.xs) xr.add(v);
    for (double v : s.ys) yr.add(v);
  }
  for (const auto& b : bands_) {
    for (double v : b.xs) xr.add(v);
    for (double v : b.lo) yr.add(v);
    for (double v : b.hi) yr.add(v);
  }
  for (const auto& h : hists_)
    for (double v : h.values) xr.add(v);
  for (const auto& v : vlines_) xr.add(v.x);
  xr.settle();

  // Histogram counts on shared edges.
  std::vector<std::vector<double>> counts;
  const double bw = (xr.hi - xr.lo) / static_cast<double>(bins_);
  if (!hists_.empty()) {
    yr.add(0.0);
    for (const auto& h : hists_) {
      std::vector<double> c(bins_, 0.0);
      for (double v : h.values) {
        if (!std::isfinite(v)) continue;
        auto k = static_cast<std::size_t>(std::floor((v - xr.lo) / bw));
        c[std::min(k, bins_ - 1)] += 1.0;
      }
      for (double v : c) yr.add(v);
      counts.push_back(std::move(c));
    }
  }
  yr.settle();

  auto sx = [&](double v) { return x0 + ml + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double v) { return y0 + mt + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<g>\n";
  o << "<rect x=\"" << num(x0 + ml) << "\" y=\"" << num(y0 + mt) << "\" width=\"" << num(pw) << "\" height=\""
    << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (double t : nice_ticks(xr.lo, xr.hi)) {
    o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(y0 + mt + ph) << "\" x2=\"" << num(sx(t)) << "\" y2=\""
      << num(y0 + mt + ph + 4) << "\" stroke=\"#444\"/>";
    o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(y0 + mt + ph + 16)
      << "\" font-size=\"10\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  }
  for (double t : nice_ticks(yr.lo, yr.hi)) {
    o << "<line x1=\"" << num(x0 + ml - 4) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(x0 + ml) << "\" y2=\""
      << num(sy(t)) << "\" stroke=\"#444\"/>";
    o << "<text x=\"" << num(x0 + ml - 6) << "\" y=\"" << num(sy(t) + 3)
      << "\" font-size=\"10\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
  }
  if (!title_.empty())
    o << "<text x=\"" << num(x0 + ml + pw / 2) << "\" y=\"" << num(y0 + 15)
      << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(title_) << "</text>\n";
  if (!xlabel_.empty())
    o << "<text x=\"" << num(x0 + ml + pw / 2) << "\" y=\"" << num(y0 + height - 6)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(xlabel_) << "</text>\n";
  if (!ylabel_.empty())
    o << "<text transform=\"translate(" << num(x0 + 12) << "," << num(y0 + mt + ph / 2)
      << ") rotate(-90)\" font-size=\"11\" text-anchor=\"middle\">" << escape(ylabel_) << "</text>\n";

  for (const auto& b : bands_) {
    o << "<polygon fill=\"" << b.color << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < b.xs.size(); ++i) o << num(sx(b.xs[i])) << ',' << num(sy(b.hi[i])) << ' ';
    for (std::size_t i = b.xs.size(); i-- > 0;) o << num(sx(b.xs[i])) << ',' << num(sy(b.lo[i])) << ' ';
    o << "\"/>\n";
  }
  for (std::size_t h = 0; h < hists_.size(); ++h) {
    for (std::size_t k = 0; k < bins_; ++k) {
      if (counts[h][k] <= 0.0) continue;
      const double left = xr.lo + static_cast<double>(k) * bw;
      o << "<rect x=\"" << num(sx(left)) << "\" y=\"" << num(sy(counts[h][k])) << "\" width=\""
        << num(sx(left + bw) - sx(left)) << "\" height=\"" << num(sy(0.0) - sy(counts[h][k])) << "\" fill=\""
        << hists_[h].color << "\" fill-opacity=\"0.5\" stroke=\"" << hists_[h].color << "\"/>\n";
    }
  }
  for (const auto& s : lines_) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) o << num(sx(s.xs[i])) << ',' << num(sy(s.ys[i])) << ' ';
    o << "\"/>\n";
  }
  for (const auto& v : vlines_) {
    o << "<line x1=\"" << num(sx(v.x)) << "\" y1=\"" << num(y0 + mt) << "\" x2=\"" << num(sx(v.x)) << "\" y2=\""
      << num(y0 + mt + ph) << "\" stroke=\"" << v.color << "\"" << (v.dashed ? " stroke-dasharray=\"4 3\"" : "")
      << "/>\n";
  }
  // Legend for labelled series.
  double ly = y0 + mt + 12;
  auto legend = [&](const std::string& label, const std::string& color) {
    if (label.empty()) return;
    o << "<rect x=\"" << num(x0 + ml + pw - 110) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"8\" fill=\""
      << color << "\"/>";
    o << "<text x=\"" << num(x0 + ml + pw - 96) << "\" y=\"" << num(ly) << "\" font-size=\"10\">" << escape(label)
      << "</text>\n";
    ly += 13;
  };
  for (const auto& s : lines_) legend(s.label, s.color);
  for (const auto& h : hists_) legend(h.label, h.color);
  o << "</g>\n";
  return o.str();
}

Plot& Figure::add(std::string title) {
  plots_.emplace_back(std::move(title));
  return plots_.back();
}

std::string Figure::str() const {
  const std::size_t cols = std::max<std::size_t>(1, std::min(columns_, plots_.size()));
  const std::size_t rows = (plots_.size() + cols - 1) / cols;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_ * static_cast<double>(cols)) << "\" height=\""
    << num(h_ * static_cast<double>(std::max<std::size_t>(rows, 1))) << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < plots_.size(); ++i)
    o << plots_[i].render(w_ * static_cast<double>(i % cols), h_ * static_cast<double>(i / cols), w_, h_);
  o << "</svg>\n";
  return o.str();
}

}  // namespace spm::svg
