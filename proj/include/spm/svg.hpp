#pragma once
// Minimal SVG line/band/histogram panels for report figures.

#include <deque>
#include <string>
#include <vector>

namespace spm::svg {

class Plot {
 public:
  explicit Plot(std::string title = {}) : title_(std::move(title)) {}

  Plot& xlabel(std::string s);
  Plot& ylabel(std::string s);
  Plot& line(std::vector<double> xs, std::vector<double> ys, std::string color, std::string label = {});
  Plot& band(std::vector<double> xs, std::vector<double> lo, std::vector<double> hi, std::string color);
  // Histograms in one plot share their bin edges.
  Plot& histogram(std::vector<double> values, std::string color, std::string label = {});
  Plot& vline(double x, std::string color, bool dashed = true);
  Plot& bins(std::size_t count);

  // SVG group for a panel placed at (x, y) with the given size.
  std::string render(double x, double y, double width, double height) const;

 private:
  struct Series {
    std::vector<double> xs, ys;
    std::string color, label;
  };
  struct Band {
    std::vector<double> xs, lo, hi;
    std::string color;
  };
  struct Hist {
    std::vector<double> values;
    std::string color, label;
  };
  struct VLine {
    double x;
    std::string color;
    bool dashed;
  };

  std::string title_, xlabel_, ylabel_;
  std::vector<Series> lines_;
  std::vector<Band> bands_;
  std::vector<Hist> hists_;
  std::vector<VLine> vlines_;
  std::size_t bins_ = 20;
};

// Panels laid out row by row in a grid with `columns` columns.
class Figure {
 public:
  Figure(std::size_t columns, double panel_width = 360, double panel_height = 260)
      : columns_(columns), w_(panel_width), h_(panel_height) {}
  Plot& add(std::string title = {});
  std::string str() const;

 private:
  std::size_t columns_;
  double w_, h_;
  std::deque<Plot> plots_;  // stable references for add()
};

std::string escape(const std::string& text);

}  // namespace spm::svg
