#include "stdeep/facepipe.hpp"

#include <algorithm>
#include <cmath>

#include "stdeep/error.hpp"
#include "stdeep/imageio.hpp"

namespace stdeep::facepipe {

void validate(const BoundingBox& box) {
    if (!box.valid()) {
        throw Error(ErrorKind::InvalidArgument, "bounding box at frame " + std::to_string(box.frame_index) +
                                                    " has non-positive extent");
    }
}

void validate(const FaceTrack& track) {
    for (std::size_t i = 0; i < track.boxes.size(); ++i) {
        validate(track.boxes[i]);
        if (i > 0 && track.boxes[i].frame_index <= track.boxes[i - 1].frame_index)
            throw Error(ErrorKind::InvalidArgument, "face track frames must be strictly increasing");
    }
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    // fixed summation order; a contracted fma(a.w, a.h, b.w * b.h) is not symmetric
    const double area_a = a.w * a.h, area_b = b.w * b.h;
    const double uni = std::min(area_a, area_b) + std::max(area_a, area_b) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

FaceTrack filter_by_overlap(const FaceTrack& track) {
    validate(track);
    if (track.boxes.empty()) throw Error(ErrorKind::EmptyTrack, "empty face track");
    const auto& boxes = track.boxes;
    const std::size_t n = boxes.size();
    FaceTrack out = track;
    out.boxes.clear();
    for (std::size_t i = 0; i < n; ++i) {
        bool keep = n == 1;
        if (i > 0 && iou(boxes[i], boxes[i - 1]) > 0.0) keep = true;
        if (i + 1 < n && iou(boxes[i], boxes[i + 1]) > 0.0) keep = true;
        if (keep) out.boxes.push_back(boxes[i]);
    }
    if (out.boxes.empty()) throw Error(ErrorKind::EmptyTrack, "overlap filter removed every box");
    return out;
}

double median_width(const FaceTrack& track) {
    if (track.boxes.empty()) throw Error(ErrorKind::EmptyTrack, "empty face track");
    std::vector<double> widths;
    widths.reserve(track.boxes.size());
    for (const auto& b : track.boxes) widths.push_back(b.w);
    std::sort(widths.begin(), widths.end());
    const std::size_t n = widths.size();
    return n % 2 ? widths[n / 2] : 0.5 * (widths[n / 2 - 1] + widths[n / 2]);
}

FaceTrack filter_size_outliers(const FaceTrack& track, const OutlierParams& params) {
    if (params.threshold <= 0.0) throw Error(ErrorKind::InvalidArgument, "outlier threshold must be positive");
    if (track.boxes.empty()) throw Error(ErrorKind::EmptyTrack, "empty face track");
    for (const auto& b : track.boxes) {
        if (b.w < 0.0) throw Error(ErrorKind::InvalidArgument, "negative width");
    }
    FaceTrack out = track;
    // re-estimate until nothing moves, so a second application is a no-op
    for (;;) {
        const double median = median_width(out);
        if (median == 0.0) throw Error(ErrorKind::ZeroMedian, "median box width is zero");
        const std::size_t before = out.boxes.size();
        std::erase_if(out.boxes, [&](const BoundingBox& b) { return std::abs(b.w - median) / median > params.threshold; });
        if (out.boxes.empty()) throw Error(ErrorKind::EmptyTrack, "size filter removed every box");
        if (out.boxes.size() == before) return out;
    }
}

BoundingBox squarify(const BoundingBox& box) {
    validate(box);
    const double side = std::max(box.w, box.h);
    return {box.center_x() - side / 2.0, box.center_y() - side / 2.0, side, side, box.frame_index};
}

BoundingBox expand_with_margin(const BoundingBox& box, double margin_fraction, int image_width, int image_height) {
    validate(box);
    if (margin_fraction < 0.0) throw Error(ErrorKind::InvalidArgument, "margin must be non-negative");
    const double side = std::max(box.w, box.h) * (1.0 + margin_fraction);
    double x0 = box.center_x() - side / 2.0;
    double y0 = box.center_y() - side / 2.0;
    double x1 = x0 + side;
    double y1 = y0 + side;
    x0 = std::clamp(x0, 0.0, static_cast<double>(image_width));
    x1 = std::clamp(x1, 0.0, static_cast<double>(image_width));
    y0 = std::clamp(y0, 0.0, static_cast<double>(image_height));
    y1 = std::clamp(y1, 0.0, static_cast<double>(image_height));
    const double w = x1 - x0;
    const double h = y1 - y0;
    if (w <= 0.0 || h <= 0.0) throw Error(ErrorKind::InvalidArgument, "box lies outside the image");
    if (w != h) {
        const double s = std::min(w, h);
        const double cx = (x0 + x1) / 2.0;
        const double cy = (y0 + y1) / 2.0;
        x0 = cx - s / 2.0;
        y0 = cy - s / 2.0;
        return {x0, y0, s, s, box.frame_index};
    }
    return {x0, y0, w, h, box.frame_index};
}

std::vector<int> schedule_frames(double duration_seconds, double source_fps, double sample_rate) {
    if (duration_seconds <= 0.0 || source_fps <= 0.0 || sample_rate <= 0.0)
        throw Error(ErrorKind::InvalidArgument, "schedule_frames inputs must be positive");
    const auto count = static_cast<int>(std::floor(duration_seconds * sample_rate + 1e-9));
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    const double step = source_fps / sample_rate;
    for (int k = 0; k < count; ++k) out.push_back(static_cast<int>(std::floor(k * step + 1e-9)));
    return out;
}

KnownBoxDetector::KnownBoxDetector(std::map<int, BoundingBox> boxes) : boxes_(std::move(boxes)) {}

std::vector<BoundingBox> KnownBoxDetector::detect(const cv::Mat&, int frame_index) {
    auto it = boxes_.find(frame_index);
    if (it == boxes_.end()) return {};
    BoundingBox b = it->second;
    b.frame_index = frame_index;
    return {b};
}

CropResult extract_faces(const std::map<int, cv::Mat>& frames, FaceDetector& detector, const CropOptions& options) {
    FaceTrack track;
    int width = 0, height = 0;
    for (const auto& [index, image] : frames) {
        auto found = detector.detect(image, index);
        if (found.empty()) continue;
        if (found.size() > 1) {
            throw Error(ErrorKind::MultipleFaces,
                        std::to_string(found.size()) + " faces at frame " + std::to_string(index));
        }
        BoundingBox b = squarify(found.front());
        b.frame_index = index;
        track.boxes.push_back(b);
        width = image.cols;
        height = image.rows;
    }
    if (track.boxes.empty()) throw Error(ErrorKind::EmptyTrack, "detector found no faces");
    track = filter_size_outliers(filter_by_overlap(track), options.outliers);

    CropResult result;
    for (auto& b : track.boxes) {
        b = expand_with_margin(b, options.margin_fraction, width, height);
        const cv::Mat& image = frames.at(b.frame_index);
        cv::Rect roi(static_cast<int>(std::lround(b.x)), static_cast<int>(std::lround(b.y)),
                     static_cast<int>(std::lround(b.w)), static_cast<int>(std::lround(b.h)));
        roi &= cv::Rect(0, 0, image.cols, image.rows);
        cv::Mat crop = image(roi).clone();
        if (options.output_size > 0) crop = resize_square(crop, options.output_size);
        result.crops.push_back(crop);
    }
    result.track = track;
    return result;
}

void write_crops(const std::filesystem::path& root, const std::string& video_id, const CropResult& result) {
    for (std::size_t i = 0; i < result.crops.size(); ++i) {
        write_rgb(root / video_id / (std::to_string(result.track.boxes[i].frame_index) + ".png"), result.crops[i]);
    }
}

}  // namespace stdeep::facepipe
