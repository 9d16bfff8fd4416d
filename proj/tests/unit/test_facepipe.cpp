#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include <opencv2/core.hpp>

#include "stdeep/error.hpp"
#include "stdeep/facepipe.hpp"
#include "stdeep/imageio.hpp"

using namespace stdeep;
using namespace stdeep::facepipe;

namespace {

BoundingBox box(double x, double y, double w, double h, int f = 0) { return {x, y, w, h, f}; }

FaceTrack track_of(std::vector<BoundingBox> boxes) {
    FaceTrack t;
    for (std::size_t i = 0; i < boxes.size(); ++i) boxes[i].frame_index = static_cast<int>(i) * 10;
    t.boxes = std::move(boxes);
    return t;
}

FaceTrack widths_track(const std::vector<double>& widths) {
    std::vector<BoundingBox> b;
    for (std::size_t i = 0; i < widths.size(); ++i) b.push_back(box(static_cast<double>(i), 0, widths[i], widths[i]));
    return track_of(b);
}

std::vector<int> frames_of(const FaceTrack& t) {
    std::vector<int> out;
    for (const auto& b : t.boxes) out.push_back(b.frame_index);
    return out;
}

// Hand-rolled reference used by the property tests.
double ref_iou(const BoundingBox& a, const BoundingBox& b) {
    const double left = std::max(a.x, b.x), right = std::min(a.x + a.w, b.x + b.w);
    const double top = std::max(a.y, b.y), bottom = std::min(a.y + a.h, b.y + b.h);
    if (right <= left || bottom <= top) return 0.0;
    const double inter = (right - left) * (bottom - top);
    return inter / (a.w * a.h + b.w * b.h - inter);
}

}  // namespace

TEST(FacepipeIou, WorkedExamples) {
    EXPECT_DOUBLE_EQ(iou(box(3, 4, 20, 30), box(3, 4, 20, 30)), 1.0);
    EXPECT_DOUBLE_EQ(iou(box(0, 0, 10, 10), box(100, 0, 10, 10)), 0.0);
    EXPECT_NEAR(iou(box(0, 0, 10, 10), box(5, 0, 10, 10)), 50.0 / 150.0, 1e-12);
    // touching edges share no area
    EXPECT_DOUBLE_EQ(iou(box(0, 0, 10, 10), box(10, 0, 10, 10)), 0.0);
}

TEST(FacepipeOverlap, DriftingBoxesAllKept) {
    std::vector<BoundingBox> b;
    for (int i = 0; i < 5; ++i) b.push_back(box(50 + i, 60 + i, 80, 80));
    const auto out = filter_by_overlap(track_of(b));
    EXPECT_EQ(out.boxes.size(), 5u);
}

TEST(FacepipeOverlap, TeleportedMiddleBoxRemoved) {
    std::vector<BoundingBox> b;
    for (int i = 0; i < 5; ++i) b.push_back(box(50 + i, 60, 80, 80));
    b[2] = box(900, 900, 80, 80);
    auto t = track_of(b);
    ASSERT_EQ(iou(t.boxes[2], t.boxes[1]), 0.0);
    ASSERT_EQ(iou(t.boxes[2], t.boxes[3]), 0.0);
    const auto out = filter_by_overlap(t);
    EXPECT_EQ(frames_of(out), (std::vector<int>{0, 10, 30, 40}));
}

TEST(FacepipeOverlap, EndpointJudgedOnItsOnlyNeighbour) {
    std::vector<BoundingBox> b = {box(0, 0, 10, 10), box(2, 0, 10, 10), box(4, 0, 10, 10), box(500, 0, 10, 10)};
    const auto out = filter_by_overlap(track_of(b));
    EXPECT_EQ(frames_of(out), (std::vector<int>{0, 10, 20}));
}

TEST(FacepipeOverlap, SingleBoxAndEmpty) {
    auto single = track_of({box(1, 2, 3, 4)});
    EXPECT_EQ(filter_by_overlap(single).boxes.size(), 1u);
    FaceTrack empty;
    try {
        filter_by_overlap(empty);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyTrack);
    }
    try {
        filter_by_overlap(track_of({box(0, 0, 10, 10), box(100, 0, 10, 10)}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyTrack);
    }
}

TEST(FacepipeOverlap, RejectsUnorderedOrInvalid) {
    auto t = track_of({box(0, 0, 10, 10), box(1, 0, 10, 10)});
    t.boxes[1].frame_index = 0;
    EXPECT_THROW(filter_by_overlap(t), Error);
    auto bad = track_of({box(0, 0, 0, 10)});
    EXPECT_THROW(filter_by_overlap(bad), Error);
}

TEST(FacepipeOutliers, WorkedExamples) {
    EXPECT_EQ(filter_size_outliers(widths_track({100, 100, 100, 100, 100})).boxes.size(), 5u);
    const auto removed = filter_size_outliers(widths_track({100, 100, 100, 100, 1200}));
    EXPECT_EQ(frames_of(removed), (std::vector<int>{0, 10, 20, 30}));
    EXPECT_EQ(filter_size_outliers(widths_track({100, 100, 100, 100, 1000})).boxes.size(), 5u);
}

// median 48 first: 525 scores 9.9 and stays; after the big four go the
// median is 44 and 525 scores 10.8
TEST(FacepipeOutliers, ReEstimatesUntilStable) {
    const auto once = filter_size_outliers(
        widths_track({42, 647, 661, 38, 44, 525, 48, 976, 43.5, 40, 1272, 48, 47}));
    EXPECT_EQ(frames_of(once), (std::vector<int>{0, 30, 40, 60, 80, 90, 110, 120}));
    EXPECT_EQ(frames_of(filter_size_outliers(once)), frames_of(once));
}

TEST(FacepipeOutliers, MedianEvenCountAndErrors) {
    EXPECT_DOUBLE_EQ(median_width(widths_track({4, 1, 3, 2})), 2.5);
    EXPECT_DOUBLE_EQ(median_width(widths_track({5, 1, 3})), 3.0);
    try {
        filter_size_outliers(widths_track({0, 0, 0, 5}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroMedian);
    }
    EXPECT_THROW(filter_size_outliers(FaceTrack{}), Error);
    EXPECT_THROW(filter_size_outliers(widths_track({1, 2}), OutlierParams{0.0}), Error);
}

TEST(FacepipeGeometry, SquarifyAndMargin) {
    const auto sq = squarify(box(10, 20, 40, 60));
    EXPECT_DOUBLE_EQ(sq.w, 60);
    EXPECT_DOUBLE_EQ(sq.h, 60);
    EXPECT_DOUBLE_EQ(sq.center_x(), 30);
    EXPECT_DOUBLE_EQ(sq.center_y(), 50);

    const auto grown = expand_with_margin(box(200, 200, 100, 100), 0.40, 1000, 1000);
    EXPECT_NEAR(grown.w, 140, 1e-12);
    EXPECT_NEAR(grown.h, 140, 1e-12);
    EXPECT_NEAR(grown.center_x(), 250, 1e-12);
    EXPECT_NEAR(grown.center_y(), 250, 1e-12);

    const auto same = expand_with_margin(box(200, 200, 100, 100), 0.0, 1000, 1000);
    EXPECT_DOUBLE_EQ(same.x, 200);
    EXPECT_DOUBLE_EQ(same.w, 100);

    for (auto corner : {box(0, 0, 200, 200), box(24, 24, 200, 200), box(0, 24, 200, 200)}) {
        const auto c = expand_with_margin(corner, 0.40, 224, 224);
        EXPECT_DOUBLE_EQ(c.w, c.h);
        EXPECT_GE(c.x, 0.0);
        EXPECT_GE(c.y, 0.0);
        EXPECT_LE(c.x + c.w, 224.0 + 1e-9);
        EXPECT_LE(c.y + c.h, 224.0 + 1e-9);
    }
    // clamping on one axis only forces a shrink
    const auto edge = expand_with_margin(box(0, 100, 100, 100), 0.40, 1000, 1000);
    EXPECT_DOUBLE_EQ(edge.w, edge.h);
    EXPECT_NEAR(edge.w, 120, 1e-12);
    EXPECT_GE(edge.x, 0.0);
}

TEST(FacepipeSchedule, WorkedExamples) {
    EXPECT_EQ(schedule_frames(10, 30, 3).size(), 30u);
    EXPECT_EQ(schedule_frames(1, 30, 3), (std::vector<int>{0, 10, 20}));
    const auto all = schedule_frames(2, 25, 25);
    ASSERT_EQ(all.size(), 50u);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
    EXPECT_THROW(schedule_frames(0, 30, 3), Error);
}

TEST(FacepipeProperties, RandomisedTracks) {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> pos(0, 400), size(5, 150), unit(0, 1);
    for (int c = 0; c < 1000; ++c) {
        const auto a = box(pos(rng), pos(rng), size(rng), size(rng));
        const auto b = box(pos(rng), pos(rng), size(rng), size(rng));
        EXPECT_DOUBLE_EQ(iou(a, b), iou(b, a));
        EXPECT_NEAR(iou(a, b), ref_iou(a, b), 1e-12);

        // realistic track: a slowly moving face with occasional teleports and size spikes
        const int n = 2 + static_cast<int>(unit(rng) * 30);
        const double base = 40 + unit(rng) * 100;
        double x = pos(rng), y = pos(rng);
        std::vector<BoundingBox> boxes;
        for (int i = 0; i < n; ++i) {
            x += (unit(rng) - 0.5) * 6;
            y += (unit(rng) - 0.5) * 6;
            double w = base * (0.8 + 0.4 * unit(rng));
            double bx = x, by = y;
            const double r = unit(rng);
            if (r < 0.08) {
                bx += 5000 + 1000 * unit(rng);
            } else if (r < 0.14) {
                w = base * (15 + 20 * unit(rng));
            }
            boxes.push_back(box(bx, by, w, w));
        }
        const auto t = track_of(boxes);

        FaceTrack once;
        try {
            once = filter_by_overlap(t);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::EmptyTrack);
            continue;
        }
        EXPECT_EQ(frames_of(filter_by_overlap(once)), frames_of(once));
        const auto fo = frames_of(once);
        EXPECT_TRUE(std::is_sorted(fo.begin(), fo.end()));

        const auto sized = filter_size_outliers(once);
        EXPECT_EQ(frames_of(filter_size_outliers(sized)), frames_of(sized));
        const auto fs = frames_of(sized);
        EXPECT_TRUE(std::is_sorted(fs.begin(), fs.end()));
        // the central order statistic(s) define the median and must survive
        std::vector<double> ws;
        for (const auto& bx : once.boxes) ws.push_back(bx.w);
        std::sort(ws.begin(), ws.end());
        const std::size_t k = ws.size();
        for (const auto& bx : once.boxes) {
            if (bx.w == ws[k / 2] || (k % 2 == 0 && bx.w == ws[k / 2 - 1])) {
                EXPECT_NE(std::find(fs.begin(), fs.end(), bx.frame_index), fs.end());
            }
        }

        const auto sq = box(200 + pos(rng), 200 + pos(rng), size(rng), 0);
        auto sqb = squarify(box(sq.x, sq.y, sq.w, sq.w * (0.5 + unit(rng))));
        const auto grown = expand_with_margin(sqb, 0.40, 2000, 2000);
        EXPECT_NEAR(grown.center_x(), sqb.center_x(), 1e-9);
        EXPECT_NEAR(grown.center_y(), sqb.center_y(), 1e-9);
        EXPECT_NEAR(grown.w, sqb.w * 1.4, 1e-9);
    }
}

TEST(FacepipeExtract, CropsFromKnownBoxes) {
    std::map<int, cv::Mat> frames;
    std::map<int, BoundingBox> truth;
    for (int f : schedule_frames(2, 30, 3)) {
        frames[f] = cv::Mat(120, 160, CV_8UC3, cv::Scalar(10, 20, 30));
        truth[f] = box(50 + f * 0.2, 30, 40, 50);
    }
    truth[30] = box(150, 100, 8, 8);  // teleport
    KnownBoxDetector det(truth);
    CropOptions opt;
    opt.output_size = 32;
    const auto res = extract_faces(frames, det, opt);
    EXPECT_EQ(res.crops.size(), 5u);
    for (const auto& c : res.crops) {
        EXPECT_EQ(c.rows, 32);
        EXPECT_EQ(c.cols, 32);
        EXPECT_EQ(c.type(), CV_8UC3);
    }
    for (const auto& b : res.track.boxes) EXPECT_NE(b.frame_index, 30);

    const auto root = std::filesystem::temp_directory_path() / "stdeep_facepipe_test";
    std::filesystem::remove_all(root);
    write_crops(root, "vid0", res);
    const auto back = read_rgb(root / "vid0" / "0.png");
    EXPECT_EQ(back.at<cv::Vec3b>(5, 5), res.crops[0].at<cv::Vec3b>(5, 5));
    std::filesystem::remove_all(root);
}

namespace {
class TwoFaceDetector : public FaceDetector {
public:
    std::vector<BoundingBox> detect(const cv::Mat&, int f) override { return {box(0, 0, 5, 5, f), box(9, 9, 5, 5, f)}; }
};
}  // namespace

TEST(FacepipeExtract, MultipleFacesRejected) {
    std::map<int, cv::Mat> frames{{0, cv::Mat(20, 20, CV_8UC3, cv::Scalar(0, 0, 0))}};
    TwoFaceDetector det;
    try {
        extract_faces(frames, det);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MultipleFaces);
    }
}
