#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sast/metrics.hpp"
#include "sast/normalize.hpp"
#include "sast/rng.hpp"
#include "sast/tensor.hpp"

namespace sast {

namespace plot_detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline const char* palette(size_t i) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

struct SvgCanvas {
    double width, height;
    std::string body;

    SvgCanvas(double w, double h) : width(w), height(h) {}

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double sw = 1.0) {
        body += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) +
                "\" y2=\"" + fmt(y2) + "\" stroke=\"" + color + "\" stroke-width=\"" +
                fmt(sw) + "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                  double sw = 1.2) {
        if (pts.size() < 2) return;
        body += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt(sw) +
                "\" points=\"";
        for (const auto& [x, y] : pts) body += fmt(x) + "," + fmt(y) + " ";
        body += "\"/>\n";
    }

    void text(double x, double y, const std::string& s, int size = 12) {
        body += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) +
                "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) + "\">" + s +
                "</text>\n";
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write plot: " + path.string());
        f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
          << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
          << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
          << body << "</svg>\n";
    }
};

}  // namespace plot_detail

/// Root-trajectory scatter: every sequence is re-normalized so the person
/// starts at the origin facing +y, and a random subset is drawn.
inline void plot_trajectories(const std::vector<Tensor>& sequences, const SkeletonSpec& sk,
                              int64_t n_input, const std::filesystem::path& path,
                              int64_t max_count = 20, uint64_t seed = 0) {
    if (sequences.empty()) throw std::invalid_argument("plot_trajectories: no sequences");

    std::vector<size_t> order(sequences.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::derive(seed, 0x504c54u);
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)))]);
    order.resize(std::min<size_t>(order.size(), static_cast<size_t>(max_count)));

    std::vector<std::vector<std::pair<double, double>>> trajs;
    double extent = 0.5;
    for (size_t idx : order) {
        const Tensor& seq = sequences[idx];
        Tensor norm = apply_norm(fit_norm(seq, std::min<int64_t>(n_input, seq.dim(2)), sk), seq);
        Tensor r = root_trajectory(norm, sk);
        std::vector<std::pair<double, double>> t;
        for (int64_t f = 0; f < r.dim(0); ++f) {
            t.emplace_back(r.at2(f, 0), r.at2(f, 1));
            extent = std::max({extent, std::abs(r.at2(f, 0)), std::abs(r.at2(f, 1))});
        }
        trajs.push_back(std::move(t));
    }
    extent *= 1.1;

    const double size = 560, margin = 40;
    plot_detail::SvgCanvas svg(size, size);
    auto px = [&](double x) { return margin + (x + extent) / (2 * extent) * (size - 2 * margin); };
    auto py = [&](double y) { return size - margin - (y + extent) / (2 * extent) * (size - 2 * margin); };
    svg.line(px(-extent), py(0), px(extent), py(0), "#dddddd");
    svg.line(px(0), py(-extent), px(0), py(extent), "#dddddd");
    for (size_t i = 0; i < trajs.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [x, y] : trajs[i]) pts.emplace_back(px(x), py(y));
        svg.polyline(pts, plot_detail::palette(i));
    }
    svg.text(margin, margin - 16, "root trajectories (origin = last input frame, facing +y)");
    svg.text(px(extent) - 60, py(0) - 6, plot_detail::fmt(extent) + " m", 10);
    svg.write(path);
}

/// Velocity-over-time line plot; one curve per labelled series.
inline void plot_velocity_curves(const std::vector<std::pair<std::string, std::vector<double>>>& curves,
                                 double fps, const std::filesystem::path& path) {
    if (curves.empty()) throw std::invalid_argument("plot_velocity_curves: no curves");
    double vmax = 0.1;
    size_t len = 0;
    for (const auto& [name, c] : curves) {
        len = std::max(len, c.size());
        for (double v : c) vmax = std::max(vmax, v);
    }
    if (len < 2) throw std::invalid_argument("plot_velocity_curves: curves too short");
    vmax *= 1.1;

    const double w = 640, h = 360, margin = 45;
    plot_detail::SvgCanvas svg(w, h);
    auto px = [&](double f) { return margin + f / static_cast<double>(len - 1) * (w - 2 * margin); };
    auto py = [&](double v) { return h - margin - v / vmax * (h - 2 * margin); };
    svg.line(px(0), py(0), px(static_cast<double>(len - 1)), py(0), "#444444");
    svg.line(px(0), py(0), px(0), py(vmax), "#444444");
    svg.text(w / 2 - 30, h - 10, "time [s]");
    svg.text(8, margin - 10, "mean speed [m/s]", 11);
    for (double sec = 0; sec * fps < static_cast<double>(len); sec += 1.0) {
        double x = px(sec * fps);
        svg.line(x, py(0), x, py(0) + 4, "#444444");
        svg.text(x - 4, py(0) + 16, plot_detail::fmt(sec), 9);
    }
    for (size_t i = 0; i < curves.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (size_t f = 0; f < curves[i].second.size(); ++f)
            pts.emplace_back(px(static_cast<double>(f)), py(curves[i].second[f]));
        svg.polyline(pts, plot_detail::palette(i));
        svg.text(w - margin - 120, margin + 14 * static_cast<double>(i), curves[i].first, 11);
        svg.line(w - margin - 140, margin + 14 * static_cast<double>(i) - 4,
                 w - margin - 126, margin + 14 * static_cast<double>(i) - 4,
                 plot_detail::palette(i), 2.0);
    }
    svg.write(path);
}

}  // namespace sast
