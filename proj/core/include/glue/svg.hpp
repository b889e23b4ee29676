#pragma once

#include <span>
#include <string>
#include <vector>

namespace glue {

// Minimal self-contained SVG line plots: polylines, confidence bands,
// horizontal rules, and shaded vertical spans, with automatic axes and a
// legend. Rendering is pure — identical inputs give byte-identical files.
class SvgPlot {
  public:
    SvgPlot(std::string title, std::string x_label, std::string y_label);

    // Polyline through (x, y) pairs; non-finite points break the line.
    void add_line(std::span<const double> x, std::span<const double> y, std::string color,
                  std::string label = "", double stroke_width = 1.5);
    // Filled region between lo and hi along x (e.g. mean +- 1.96 sigma).
    void add_band(std::span<const double> x, std::span<const double> lo,
                  std::span<const double> hi, std::string color, double opacity = 0.25);
    // Dashed horizontal rule across the plot (e.g. a threshold).
    void add_hline(double y, std::string color, std::string label = "");
    // Shaded background interval [x0, x1] (e.g. true-anomaly regions).
    void add_vspan(double x0, double x1, std::string color, double opacity = 0.18);

    std::string render() const;
    void save(const std::string& path) const;

  private:
    struct Line {
        std::vector<double> x, y;
        std::string color, label;
        double stroke_width;
    };
    struct Band {
        std::vector<double> x, lo, hi;
        std::string color;
        double opacity;
    };
    struct HLine {
        double y;
        std::string color, label;
    };
    struct VSpan {
        double x0, x1;
        std::string color;
        double opacity;
    };

    std::string title_, x_label_, y_label_;
    std::vector<Line> lines_;
    std::vector<Band> bands_;
    std::vector<HLine> hlines_;
    std::vector<VSpan> vspans_;
};

}  // namespace glue
