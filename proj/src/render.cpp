#include "stdeep/render.hpp"

#include <algorithm>
#include <map>

#include <opencv2/imgproc.hpp>

#include "stdeep/error.hpp"
#include "stdeep/imageio.hpp"

namespace stdeep::render {

cv::Mat cam_strip(const std::vector<cv::Mat>& frames, const probe::ActivationMap& map, int cell) {
    if (frames.empty() || frames.size() != map.heatmaps.size())
        throw Error(ErrorKind::ShapeMismatch, "one heatmap per frame required");
    const int n = static_cast<int>(frames.size());
    cv::Mat strip(2 * cell, n * cell, CV_8UC3, cv::Scalar(0, 0, 0));
    for (int t = 0; t < n; ++t) {
        const cv::Mat frame = resize_square(frames[static_cast<std::size_t>(t)], cell);
        frame.copyTo(strip(cv::Rect(t * cell, 0, cell, cell)));
        cv::Mat heat8, colour, heat = map.heatmaps[static_cast<std::size_t>(t)];
        cv::resize(heat, heat, cv::Size(cell, cell), 0, 0, cv::INTER_LINEAR);
        heat.convertTo(heat8, CV_8U, 255.0);
        cv::applyColorMap(heat8, colour, cv::COLORMAP_JET);
        cv::cvtColor(colour, colour, cv::COLOR_BGR2RGB);
        cv::Mat blended;
        cv::addWeighted(frame, 0.5, colour, 0.5, 0.0, blended);
        blended.copyTo(strip(cv::Rect(t * cell, cell, cell, cell)));
    }
    return strip;
}

cv::Mat scatter(const std::vector<std::array<double, 2>>& points, const std::vector<std::string>& groups, int size) {
    if (points.size() != groups.size()) throw Error(ErrorKind::ShapeMismatch, "one group label per point required");
    static const cv::Scalar kPalette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                                          {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
    cv::Mat img(size, size, CV_8UC3, cv::Scalar(255, 255, 255));
    std::map<std::string, cv::Scalar> colour;
    for (const auto& g : groups)
        if (!colour.count(g)) colour[g] = kPalette[colour.size() % std::size(kPalette)];
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!points.empty()) {
        x0 = x1 = points[0][0];
        y0 = y1 = points[0][1];
        for (const auto& p : points) {
            x0 = std::min(x0, p[0]);
            x1 = std::max(x1, p[0]);
            y0 = std::min(y0, p[1]);
            y1 = std::max(y1, p[1]);
        }
    }
    const double margin = 0.08 * size;
    const double span = std::max({x1 - x0, y1 - y0, 1e-12});
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int px = static_cast<int>(margin + (points[i][0] - x0) / span * (size - 2 * margin));
        const int py = static_cast<int>(size - margin - (points[i][1] - y0) / span * (size - 2 * margin));
        cv::circle(img, {px, py}, 4, colour[groups[i]], cv::FILLED, cv::LINE_AA);
    }
    int row = 0;
    for (const auto& [name, c] : colour) {
        const cv::Point at(10, 18 + 18 * row++);
        cv::circle(img, at, 5, c, cv::FILLED, cv::LINE_AA);
        cv::putText(img, name, at + cv::Point(10, 5), cv::FONT_HERSHEY_SIMPLEX, 0.45, {0, 0, 0}, 1, cv::LINE_AA);
    }
    return img;
}

}  // namespace stdeep::render
