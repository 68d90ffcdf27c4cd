#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cbfqp/models.hpp"

namespace cbfqp {

struct SvgTrajectory {
    std::vector<Vec> points;
    std::string color = "#1f77b4";
    double width = 1.2;
};

struct SvgMarker {
    Vec p;
    std::string color = "#d62728";
    double radius_px = 4.0;
    std::string label;
};

// Level set 1/2 x' A x = level of a positive-definite quadratic.
struct SvgEllipse {
    Mat quad_form;
    double level = 1.0;
    std::string color = "#2ca02c";
};

struct PhasePortrait {
    double x_min = -7, x_max = 7, y_min = -7, y_max = 7;
    double size_px = 640;
    std::string title;
    std::optional<Cbf::Circle> obstacle;
    std::vector<SvgTrajectory> trajectories;
    std::vector<SvgMarker> markers;
    std::vector<SvgEllipse> ellipses;
};

// SVG 1.1, deterministic byte output for identical inputs.
void write_svg(std::ostream& os, const PhasePortrait& p);

}  // namespace cbfqp
