#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace stdeep::facepipe {

/// Axis-aligned face box in pixel coordinates of one source frame.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    int frame_index = 0;

    double center_x() const { return x + w / 2.0; }
    double center_y() const { return y + h / 2.0; }
    bool valid() const { return w > 0.0 && h > 0.0; }
};

/// Boxes in strictly increasing frame order.
struct FaceTrack {
    std::vector<BoundingBox> boxes;
    double source_fps = 30.0;
    double sample_rate = 3.0;
};

struct OutlierParams {
    double threshold = 10.0;
};

void validate(const BoundingBox& box);
void validate(const FaceTrack& track);

double iou(const BoundingBox& a, const BoundingBox& b);

/**
 * Drops every box whose IoU with each of its temporal neighbours is zero.
 * The first and last box only have one neighbour and are judged on it;
 * a single-box track is returned unchanged. Throws EmptyTrack when
 * nothing survives.
 */
FaceTrack filter_by_overlap(const FaceTrack& track);

/// Median of the widths; even counts average the two central values.
double median_width(const FaceTrack& track);

/**
 * Drops boxes with |w - median| / median > threshold, re-estimating the
 * median over the survivors until no box is removed. Idempotent. The input's
 * median box survives unless some width is below median / (1 + threshold).
 */
FaceTrack filter_size_outliers(const FaceTrack& track, const OutlierParams& params = {});

/// Square box of side max(w, h) around the same centre.
BoundingBox squarify(const BoundingBox& box);

/**
 * Grows a square box by margin_fraction of its side around its centre and
 * clamps it into a width x height image. If clamping breaks squareness the
 * box shrinks to the largest centred square that still fits.
 */
BoundingBox expand_with_margin(const BoundingBox& box, double margin_fraction, int image_width, int image_height);

/// Evenly spaced source frame indices, floor(duration * sample_rate) of them.
std::vector<int> schedule_frames(double duration_seconds, double source_fps, double sample_rate);

/// Detector plug-in: zero or more face boxes for one image.
class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    virtual std::vector<BoundingBox> detect(const cv::Mat& image, int frame_index) = 0;
};

/// Detector for synthetic footage whose face boxes are known by construction.
class KnownBoxDetector : public FaceDetector {
public:
    explicit KnownBoxDetector(std::map<int, BoundingBox> boxes);
    std::vector<BoundingBox> detect(const cv::Mat& image, int frame_index) override;

private:
    std::map<int, BoundingBox> boxes_;
};

struct CropOptions {
    double margin_fraction = 0.40;
    OutlierParams outliers;
    int output_size = 0;  ///< resize crops to this side; 0 keeps native size
};

struct CropResult {
    FaceTrack track;               ///< surviving, squarified, margin-expanded boxes
    std::vector<cv::Mat> crops;    ///< one 8-bit RGB crop per surviving box
};

/**
 * Runs the detector on the scheduled frames, squarifies, applies the
 * overlap filter then the size-outlier filter, expands by the margin and
 * cuts the crops. Frames with no detection are skipped; frames with more
 * than one detection throw MultipleFaces.
 */
CropResult extract_faces(const std::map<int, cv::Mat>& frames, FaceDetector& detector, const CropOptions& options = {});

/// Writes crops as `<root>/<video_id>/<frame_index>.png` (8-bit RGB).
void write_crops(const std::filesystem::path& root, const std::string& video_id, const CropResult& result);

}  // namespace stdeep::facepipe
