#include "stdeep/imageio.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "stdeep/error.hpp"

namespace stdeep {

cv::Mat read_rgb(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw Error(ErrorKind::Io, "cannot read image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    return rgb;
}

void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb) {
    if (rgb.type() != CV_8UC3) throw Error(ErrorKind::InvalidArgument, "write_rgb expects 8-bit RGB");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), bgr)) throw Error(ErrorKind::Io, "cannot write image " + path.string());
}

cv::Mat resize_square(const cv::Mat& rgb, int size) {
    if (rgb.cols == size && rgb.rows == size) return rgb;
    cv::Mat out;
    const int interp = (rgb.cols > size) ? cv::INTER_AREA : cv::INTER_LINEAR;
    cv::resize(rgb, out, cv::Size(size, size), 0, 0, interp);
    return out;
}

}  // namespace stdeep
