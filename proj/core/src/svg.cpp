#include "glue/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "glue/error.hpp"
#include "glue/util.hpp"

namespace glue {

namespace {

constexpr double kWidth = 960.0, kHeight = 360.0;
constexpr double kLeft = 64.0, kRight = 24.0, kTop = 40.0, kBottom = 48.0;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void grow(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finalize() {
        if (!(lo <= hi)) {  // nothing finite was added
            lo = 0.0;
            hi = 1.0;
        } else if (lo == hi) {
            const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
            lo -= pad;
            hi += pad;
        }
    }
};

// Round tick spacing to 1/2/5 x 10^k covering the range with ~5 steps.
std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> ticks;
    double t = std::ceil(lo / step) * step;
    for (; t <= hi + step * 1e-9; t += step) {
        if (std::abs(t) < step * 1e-9) t = 0.0;  // avoid "-0"
        ticks.push_back(t);
    }
    return ticks;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_line(std::span<const double> x, std::span<const double> y, std::string color,
                       std::string label, double stroke_width) {
    if (x.size() != y.size())
        throw ShapeError("svg: line has " + std::to_string(x.size()) + " x values but " +
                         std::to_string(y.size()) + " y values");
    lines_.push_back(Line{{x.begin(), x.end()},
                          {y.begin(), y.end()},
                          std::move(color),
                          std::move(label),
                          stroke_width});
}

void SvgPlot::add_band(std::span<const double> x, std::span<const double> lo,
                       std::span<const double> hi, std::string color, double opacity) {
    if (x.size() != lo.size() || x.size() != hi.size())
        throw ShapeError("svg: band edges do not match the x values");
    bands_.push_back(Band{{x.begin(), x.end()},
                          {lo.begin(), lo.end()},
                          {hi.begin(), hi.end()},
                          std::move(color),
                          opacity});
}

void SvgPlot::add_hline(double y, std::string color, std::string label) {
    hlines_.push_back(HLine{y, std::move(color), std::move(label)});
}

void SvgPlot::add_vspan(double x0, double x1, std::string color, double opacity) {
    vspans_.push_back(VSpan{x0, x1, std::move(color), opacity});
}

std::string SvgPlot::render() const {
    Range xr, yr;
    for (const auto& l : lines_)
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            xr.grow(l.x[i]);
            yr.grow(l.y[i]);
        }
    for (const auto& b : bands_)
        for (std::size_t i = 0; i < b.x.size(); ++i) {
            xr.grow(b.x[i]);
            yr.grow(b.lo[i]);
            yr.grow(b.hi[i]);
        }
    for (const auto& h : hlines_) yr.grow(h.y);
    xr.finalize();
    yr.finalize();

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto sy = [&](double v) { return kTop + (yr.hi - v) / (yr.hi - yr.lo) * plot_h; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" " +
         "font-family=\"sans-serif\" font-size=\"15\">" + escape(title_) + "</text>\n";

    for (const auto& v : vspans_) {
        const double a = std::clamp(sx(std::min(v.x0, v.x1)), kLeft, kLeft + plot_w);
        const double b = std::clamp(sx(std::max(v.x0, v.x1)), kLeft, kLeft + plot_w);
        if (b <= a) continue;
        s += "<rect x=\"" + num(a) + "\" y=\"" + num(kTop) + "\" width=\"" + num(b - a) +
             "\" height=\"" + num(plot_h) + "\" fill=\"" + v.color + "\" fill-opacity=\"" +
             num(v.opacity) + "\"/>\n";
    }

    for (double t : nice_ticks(xr.lo, xr.hi)) {
        const double px = sx(t);
        s += "<line x1=\"" + num(px) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(px) +
             "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"#dddddd\"/>\n";
        s += "<text x=\"" + num(px) + "\" y=\"" + num(kTop + plot_h + 16) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
             tick_label(t) + "</text>\n";
    }
    for (double t : nice_ticks(yr.lo, yr.hi)) {
        const double py = sy(t);
        s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py) + "\" x2=\"" +
             num(kLeft + plot_w) + "\" y2=\"" + num(py) + "\" stroke=\"#dddddd\"/>\n";
        s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
             tick_label(t) + "</text>\n";
    }

    for (const auto& b : bands_) {
        std::string path;
        for (std::size_t i = 0; i < b.x.size(); ++i)
            path += (i == 0 ? "M" : "L") + num(sx(b.x[i])) + "," + num(sy(b.lo[i]));
        for (std::size_t i = b.x.size(); i-- > 0;)
            path += "L" + num(sx(b.x[i])) + "," + num(sy(b.hi[i]));
        s += "<path d=\"" + path + "Z\" fill=\"" + b.color + "\" fill-opacity=\"" +
             num(b.opacity) + "\" stroke=\"none\"/>\n";
    }

    for (const auto& h : hlines_) {
        const double py = sy(h.y);
        s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py) + "\" x2=\"" +
             num(kLeft + plot_w) + "\" y2=\"" + num(py) + "\" stroke=\"" + h.color +
             "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
    }

    for (const auto& l : lines_) {
        std::string points;
        bool open = false;
        auto flush = [&]() {
            if (open && !points.empty())
                s += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + l.color +
                     "\" stroke-width=\"" + num(l.stroke_width) + "\"/>\n";
            points.clear();
            open = false;
        };
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) {
                flush();
                continue;
            }
            points += num(sx(l.x[i])) + "," + num(sy(l.y[i])) + " ";
            open = true;
        }
        flush();
    }

    double legend_y = kTop + 8.0;
    auto legend_entry = [&](const std::string& color, const std::string& label, bool dashed) {
        if (label.empty()) return;
        const double lx = kWidth - kRight - 150.0;
        s += "<line x1=\"" + num(lx) + "\" y1=\"" + num(legend_y) + "\" x2=\"" + num(lx + 22) +
             "\" y2=\"" + num(legend_y) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" +
             (dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
        s += "<text x=\"" + num(lx + 28) + "\" y=\"" + num(legend_y + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(label) + "</text>\n";
        legend_y += 16.0;
    };
    for (const auto& l : lines_) legend_entry(l.color, l.label, false);
    for (const auto& h : hlines_) legend_entry(h.color, h.label, true);

    s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(plot_w) +
         "\" height=\"" + num(plot_h) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
    s += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape(x_label_) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num(kTop + plot_h / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" " +
         "transform=\"rotate(-90 16 " + num(kTop + plot_h / 2) + ")\">" + escape(y_label_) +
         "</text>\n";
    s += "</svg>\n";
    return s;
}

void SvgPlot::save(const std::string& path) const { write_text_file(path, render()); }

}  // namespace glue
