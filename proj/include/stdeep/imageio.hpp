#pragma once

#include <filesystem>

#include <opencv2/core.hpp>

namespace stdeep {

/// Reads an image as 8-bit RGB (3 channels).
cv::Mat read_rgb(const std::filesystem::path& path);

/// Writes an 8-bit RGB image; the format follows the extension.
void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb);

/// Area-resamples to size x size unless already that size.
cv::Mat resize_square(const cv::Mat& rgb, int size);

}  // namespace stdeep
