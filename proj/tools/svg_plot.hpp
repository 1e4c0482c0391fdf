// svg_plot.hpp - minimal static SVG charts (line panels and heatmaps)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;  // draw points instead of a polyline
};

struct Panel {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<Series> series;
    std::vector<double> vlines;  // e.g. stroke boundaries
    bool log_x = false;
};

inline const char* palette(std::size_t i)
{
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    return colors[i % 7];
}

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::vector<double> ticks(double lo, double hi, int target = 5)
{
    std::vector<double> t;
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
}

class Document {
public:
    Document(double width, double height) : w_(width), h_(height) {}

    void panel(const Panel& p, double x0, double y0, double pw, double ph)
    {
        const double left = x0 + 60, right = x0 + pw - 15, top = y0 + 25, bottom = y0 + ph - 40;
        auto tx = [&](double v) { return p.log_x ? std::log10(v) : v; };

        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
        for (const auto& s : p.series) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (p.log_x && s.x[i] <= 0)) continue;
                xmin = std::min(xmin, tx(s.x[i]));
                xmax = std::max(xmax, tx(s.x[i]));
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
        if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
        if (xmax == xmin) xmax = xmin + 1;
        if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
        auto px = [&](double v) { return left + (tx(v) - xmin) / (xmax - xmin) * (right - left); };
        auto py = [&](double v) { return bottom - (v - ymin) / (ymax - ymin) * (bottom - top); };

        out_ << "<g>\n";
        out_ << "<rect x='" << left << "' y='" << top << "' width='" << right - left << "' height='" << bottom - top
             << "' fill='none' stroke='#000'/>\n";
        text(x0 + pw / 2, y0 + 16, p.title, "middle", 13);
        text((left + right) / 2, y0 + ph - 6, p.xlabel, "middle", 11);
        out_ << "<text x='" << x0 + 14 << "' y='" << (top + bottom) / 2 << "' font-size='11' text-anchor='middle' "
             << "transform='rotate(-90 " << x0 + 14 << " " << (top + bottom) / 2 << ")'>" << escape(p.ylabel) << "</text>\n";
        for (double t : ticks(xmin, xmax)) {
            const double xx = left + (t - xmin) / (xmax - xmin) * (right - left);
            line(xx, bottom, xx, bottom + 4, "#000");
            text(xx, bottom + 15, p.log_x ? num(std::pow(10.0, t)) : num(t), "middle", 10);
        }
        for (double t : ticks(ymin, ymax)) {
            line(left - 4, py(t), left, py(t), "#000");
            text(left - 6, py(t) + 3, num(t), "end", 10);
        }
        for (double v : p.vlines) {
            if (tx(v) >= xmin && tx(v) <= xmax) line(px(v), top, px(v), bottom, "#ddd");
        }
        for (std::size_t k = 0; k < p.series.size(); ++k) {
            const auto& s = p.series[k];
            if (s.markers) {
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    if (!std::isfinite(s.y[i])) continue;
                    out_ << "<circle cx='" << px(s.x[i]) << "' cy='" << py(s.y[i]) << "' r='2.5' fill='" << palette(k)
                         << "'/>\n";
                }
            } else {
                out_ << "<polyline fill='none' stroke-width='1.2' stroke='" << palette(k) << "' points='";
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    if (!std::isfinite(s.y[i]) || (p.log_x && s.x[i] <= 0)) continue;
                    out_ << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
                }
                out_ << "'/>\n";
            }
            if (!s.label.empty()) {
                const double ly = top + 12 + 13 * static_cast<double>(k);
                line(right - 110, ly - 4, right - 95, ly - 4, palette(k));
                text(right - 90, ly, s.label, "start", 10);
            }
        }
        out_ << "</g>\n";
    }

    // values[r][c]: row r drawn at y = ys[r], column c at x = xs[c]. NaN cells are grey.
    void heatmap(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                 const std::vector<double>& xs, const std::vector<std::string>& ys,
                 const std::vector<std::vector<double>>& values, double x0, double y0, double pw, double ph)
    {
        const double left = x0 + 70, right = x0 + pw - 80, top = y0 + 25, bottom = y0 + ph - 40;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& row : values) {
            for (double v : row) {
                if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
            }
        }
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi == lo) hi = lo + 1;
        const double cw = (right - left) / std::max<std::size_t>(xs.size(), 1);
        const double ch = (bottom - top) / std::max<std::size_t>(ys.size(), 1);
        text(x0 + pw / 2, y0 + 16, title, "middle", 13);
        text((left + right) / 2, y0 + ph - 6, xlabel, "middle", 11);
        text(x0 + 10, top - 6, ylabel, "start", 11);
        for (std::size_t r = 0; r < values.size(); ++r) {
            const double yy = bottom - (static_cast<double>(r) + 1) * ch;
            text(left - 6, yy + ch / 2 + 3, ys[r], "end", 10);
            for (std::size_t c = 0; c < values[r].size(); ++c) {
                const double v = values[r][c];
                out_ << "<rect x='" << left + static_cast<double>(c) * cw << "' y='" << yy << "' width='" << cw + 0.3
                     << "' height='" << ch + 0.3 << "' fill='" << (std::isfinite(v) ? color((v - lo) / (hi - lo)) : "#bbb")
                     << "'/>\n";
            }
        }
        if (!xs.empty()) {
            for (double t : ticks(xs.front(), xs.back())) {
                const double xx = left + (t - xs.front()) / std::max(xs.back() - xs.front(), 1e-300) * (right - left - cw) + cw / 2;
                line(xx, bottom, xx, bottom + 4, "#000");
                text(xx, bottom + 15, num(t), "middle", 10);
            }
        }
        for (int i = 0; i <= 10; ++i) {
            const double f = i / 10.0;
            const double yy = bottom - f * (bottom - top);
            out_ << "<rect x='" << right + 15 << "' y='" << yy - (bottom - top) / 10 << "' width='15' height='"
                 << (bottom - top) / 10 + 0.3 << "' fill='" << color(f) << "'/>\n";
            if (i % 5 == 0) text(right + 34, yy + 3, num(lo + f * (hi - lo)), "start", 10);
        }
    }

    bool save(const std::string& path) const
    {
        std::ofstream f(path);
        f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w_ << "' height='" << h_ << "' font-family='sans-serif'>\n"
          << "<rect width='100%' height='100%' fill='#fff'/>\n"
          << out_.str() << "</svg>\n";
        return static_cast<bool>(f);
    }

private:
    void line(double x1, double y1, double x2, double y2, const char* stroke)
    {
        out_ << "<line x1='" << x1 << "' y1='" << y1 << "' x2='" << x2 << "' y2='" << y2 << "' stroke='" << stroke << "'/>\n";
    }

    void text(double x, double y, const std::string& s, const char* anchor, int size)
    {
        out_ << "<text x='" << x << "' y='" << y << "' font-size='" << size << "' text-anchor='" << anchor << "'>"
             << escape(s) << "</text>\n";
    }

    // Dark blue -> teal -> yellow.
    static std::string color(double f)
    {
        f = std::clamp(f, 0.0, 1.0);
        const double a[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
        const int seg = f < 0.5 ? 0 : 1;
        const double u = f < 0.5 ? f * 2 : (f - 0.5) * 2;
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(a[seg][0] + u * (a[seg + 1][0] - a[seg][0])),
                      static_cast<int>(a[seg][1] + u * (a[seg + 1][1] - a[seg][1])),
                      static_cast<int>(a[seg][2] + u * (a[seg + 1][2] - a[seg][2])));
        return buf;
    }

    double w_, h_;
    std::ostringstream out_;
};

} // namespace svg
