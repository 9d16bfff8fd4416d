#pragma once

#include <array>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "stdeep/probes.hpp"

namespace stdeep::render {

/// Two-row RGB strip: the frames on top, heatmap overlays below; every cell is cell x cell pixels.
cv::Mat cam_strip(const std::vector<cv::Mat>& frames, const probe::ActivationMap& map, int cell = 64);

/// RGB scatter plot with one colour per group label and a legend.
cv::Mat scatter(const std::vector<std::array<double, 2>>& points, const std::vector<std::string>& groups,
                int size = 640);

}  // namespace stdeep::render
