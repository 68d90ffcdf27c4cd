#include "cbfqp/svg.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace cbfqp {

namespace {

std::string px(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

void write_svg(std::ostream& os, const PhasePortrait& p) {
    const double sx = p.size_px / (p.x_max - p.x_min);
    const double sy = p.size_px / (p.y_max - p.y_min);
    const auto X = [&](double x) { return (x - p.x_min) * sx; };
    const auto Y = [&](double y) { return (p.y_max - y) * sy; };

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
       << px(p.size_px) << "\" height=\"" << px(p.size_px) << "\" viewBox=\"0 0 "
       << px(p.size_px) << " " << px(p.size_px) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // axes through the origin
    os << "<line x1=\"" << px(X(p.x_min)) << "\" y1=\"" << px(Y(0)) << "\" x2=\""
       << px(X(p.x_max)) << "\" y2=\"" << px(Y(0))
       << "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    os << "<line x1=\"" << px(X(0)) << "\" y1=\"" << px(Y(p.y_min)) << "\" x2=\""
       << px(X(0)) << "\" y2=\"" << px(Y(p.y_max))
       << "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";

    if (p.obstacle) {
        os << "<circle cx=\"" << px(X(p.obstacle->center(0))) << "\" cy=\""
           << px(Y(p.obstacle->center(1))) << "\" r=\"" << px(p.obstacle->radius * sx)
           << "\" fill=\"#bbbbbb\" fill-opacity=\"0.6\" stroke=\"#555555\" "
              "stroke-width=\"1.5\"/>\n";
    }

    for (const auto& e : p.ellipses) {
        // 1/2 x'Ax = L: principal radii sqrt(2L / eig_i) along the eigenvectors.
        Eigen::SelfAdjointEigenSolver<Mat> es(e.quad_form);
        const Vec ev = es.eigenvalues();
        if (ev.minCoeff() <= 0.0) continue;
        const double r0 = std::sqrt(2.0 * e.level / ev(0));
        const double r1 = std::sqrt(2.0 * e.level / ev(1));
        const Vec v0 = es.eigenvectors().col(0);
        const double ang = -std::atan2(v0(1), v0(0)) * 180.0 / std::numbers::pi;
        os << "<ellipse cx=\"0\" cy=\"0\" rx=\"" << px(r0 * sx) << "\" ry=\""
           << px(r1 * sy) << "\" fill=\"none\" stroke=\"" << e.color
           << "\" stroke-width=\"1.2\" stroke-dasharray=\"5,4\" transform=\"translate("
           << px(X(0)) << "," << px(Y(0)) << ") rotate(" << px(ang) << ")\"/>\n";
    }

    for (const auto& tr : p.trajectories) {
        if (tr.points.empty()) continue;
        const size_t stride = std::max<size_t>(1, tr.points.size() / 1500);
        os << "<polyline fill=\"none\" stroke=\"" << tr.color << "\" stroke-width=\""
           << px(tr.width) << "\" points=\"";
        for (size_t i = 0; i < tr.points.size(); i += stride) {
            if (i) os << ' ';
            os << px(X(tr.points[i](0))) << ',' << px(Y(tr.points[i](1)));
        }
        const auto& last = tr.points.back();
        os << ' ' << px(X(last(0))) << ',' << px(Y(last(1)));
        os << "\"/>\n";
    }

    for (const auto& m : p.markers) {
        os << "<circle cx=\"" << px(X(m.p(0))) << "\" cy=\"" << px(Y(m.p(1))) << "\" r=\""
           << px(m.radius_px) << "\" fill=\"" << m.color
           << "\" stroke=\"black\" stroke-width=\"0.8\"/>\n";
        if (!m.label.empty()) {
            os << "<text x=\"" << px(X(m.p(0)) + 7) << "\" y=\"" << px(Y(m.p(1)) - 6)
               << "\" font-family=\"sans-serif\" font-size=\"12\">" << m.label
               << "</text>\n";
        }
    }

    if (!p.title.empty()) {
        os << "<text x=\"12\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
           << p.title << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace cbfqp
