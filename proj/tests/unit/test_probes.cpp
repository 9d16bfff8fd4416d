#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "stdeep/clipper.hpp"
#include "stdeep/error.hpp"
#include "stdeep/evalkit.hpp"
#include "stdeep/probes.hpp"
#include "support/fixtures.hpp"
#include "support/stats.hpp"

using namespace stdeep;
using namespace stdeep::probe;

namespace {

// Frames whose pixels encode their index, so permutations are observable.
std::vector<cv::Mat> indexed_frames(int n, int size = 8) {
    std::vector<cv::Mat> out;
    for (int i = 0; i < n; ++i) {
        cv::Mat m(size, size, CV_8UC3);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) m.at<cv::Vec3b>(y, x) = cv::Vec3b(i * 10, x * 20, y);
        out.push_back(m);
    }
    return out;
}

bool same(const cv::Mat& a, const cv::Mat& b) { return cv::norm(a, b, cv::NORM_INF) == 0.0; }

int frame_index(const cv::Mat& m) { return m.at<cv::Vec3b>(0, 0)[0] / 10; }

bool is_mirrored(const cv::Mat& m) { return m.at<cv::Vec3b>(0, 0)[1] != 0; }

}  // namespace

TEST(Perturb, NamesRoundTrip) {
    for (const auto& s : default_battery(3)) EXPECT_EQ(PerturbationSpec::parse(s.name()).name(), s.name());
    EXPECT_EQ(PerturbationSpec::parse("flip12").n, 12);
    EXPECT_THROW(PerturbationSpec::parse("flipx"), Error);
    EXPECT_THROW(PerturbationSpec::parse("mirror"), Error);
    std::vector<std::string> names;
    for (const auto& s : default_battery()) names.push_back(s.name());
    EXPECT_EQ(names, (std::vector<std::string>{"original", "flip1", "flip3", "flip5", "flip_every_2nd", "shuffle"}));
}

TEST(Perturb, OriginalIsIdentityAndFlipsAreExact) {
    const auto frames = indexed_frames(16);
    const auto same_clip = perturb(frames, PerturbationSpec::parse("original"));
    for (int i = 0; i < 16; ++i) EXPECT_TRUE(same(same_clip[i], frames[i]));

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto spec = PerturbationSpec::parse("flip5", seed);
        const auto idx = flipped_indices(16, spec);
        ASSERT_EQ(idx.size(), 5u);
        EXPECT_EQ(std::set<int>(idx.begin(), idx.end()).size(), 5u);
        const auto out = perturb(frames, spec);
        for (int i = 0; i < 16; ++i) {
            const bool flipped = std::find(idx.begin(), idx.end(), i) != idx.end();
            EXPECT_EQ(frame_index(out[i]), i);
            EXPECT_EQ(is_mirrored(out[i]), flipped);
            if (flipped) EXPECT_TRUE(same(clip::hflip(out[i]), frames[i]));
        }
    }
}

TEST(Perturb, FlipEverySecondUsesOddPositions) {
    const auto idx = flipped_indices(16, PerturbationSpec::parse("flip_every_2nd"));
    EXPECT_EQ(idx, (std::vector<int>{1, 3, 5, 7, 9, 11, 13, 15}));
    EXPECT_EQ(flipped_indices(5, PerturbationSpec::parse("flip_every_2nd")), (std::vector<int>{1, 3}));
}

TEST(Perturb, BadFlipCount) {
    try {
        perturb(indexed_frames(4), PerturbationSpec::parse("flip5"));
        FAIL() << "expected BadN";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BadN);
    }
    EXPECT_NO_THROW(perturb(indexed_frames(5), PerturbationSpec::parse("flip5")));
}

TEST(Perturb, ShuffleIsPermutationInvertible) {
    const auto frames = indexed_frames(16);
    const auto spec = PerturbationSpec::parse("shuffle", 7);
    const auto perm = shuffle_permutation(16, spec);
    const auto out = perturb(frames, spec);
    std::vector<int> inverse(16);
    for (int i = 0; i < 16; ++i) {
        EXPECT_EQ(frame_index(out[i]), perm[i]);
        EXPECT_FALSE(is_mirrored(out[i]));
        inverse[perm[i]] = i;
    }
    for (int i = 0; i < 16; ++i) EXPECT_TRUE(same(out[inverse[i]], frames[i]));
    EXPECT_NE(perm, shuffle_permutation(16, PerturbationSpec::parse("shuffle", 8)));
    EXPECT_EQ(perm, shuffle_permutation(16, PerturbationSpec::parse("shuffle", 7)));
}

TEST(Perturb, FlipCommutesWithNormalisation) {
    const auto& m = fixture::tiny_corpus();
    FrameCache cache(m);
    auto frames = cache.get(*m.in_split(Split::Train).front());
    frames.resize(16);
    const auto spec = PerturbationSpec::parse("flip3", 2);
    const auto a = clip::to_clip_tensor(perturb(frames, spec), clip::Normalization::HalfHalf, 16);
    const auto plain = clip::to_clip_tensor(frames, clip::Normalization::HalfHalf, 16);
    const auto idx = flipped_indices(16, spec);
    // mirror the normalised tensor directly and compare
    const int T = 16, H = 16, W = 16;
    for (int c = 0; c < 3; ++c)
        for (int t = 0; t < T; ++t) {
            const bool f = std::find(idx.begin(), idx.end(), t) != idx.end();
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const double want = plain[((c * T + t) * H + y) * W + (f ? W - 1 - x : x)];
                    ASSERT_NEAR(a[((c * T + t) * H + y) * W + x], want, 1e-12);
                }
        }
}

TEST(Battery, Flip0MatchesBaselineAndImageShuffleInvariant) {
    const auto& m = fixture::tiny_corpus();
    FrameCache cache(m);
    auto image = enc::build(fixture::tiny_image2d());
    const auto samples = m.in_split(Split::Test);
    std::vector<PerturbationSpec> specs{PerturbationSpec::parse("original", 1), PerturbationSpec::parse("flip0", 1),
                                        PerturbationSpec::parse("shuffle", 1)};
    const auto r = run_perturbation_battery(*image, samples, specs, cache);
    ASSERT_EQ(r.columns.size(), 3u);
    for (const char* cls : {"real", "fake"}) {
        EXPECT_DOUBLE_EQ(r.at(cls, "flip0"), r.at(cls, "original"));
        EXPECT_NEAR(r.at(cls, "shuffle"), r.at(cls, "original"), 1e-9);
    }
    EXPECT_EQ(r.counts.at("real"), 2);
    EXPECT_EQ(r.counts.at("fake"), 8);
    for (const auto* v : samples) {
        const auto& frames = cache.get(*v);
        EXPECT_NEAR(perturbed_score(*image, frames, specs[2], v->id), eval::score_video(*image, frames), 1e-9);
    }
    // the battery's original column is the plain video log-loss
    double real_loss = 0.0;
    int n = 0;
    for (const auto* v : samples)
        if (!v->fake) {
            real_loss += train::log_loss(eval::score_video(*image, cache.get(*v)), 0);
            ++n;
        }
    EXPECT_NEAR(r.at("real", "original"), real_loss / n, 1e-12);
    EXPECT_THROW(r.at("real", "flip9"), Error);
}

TEST(Battery, VideoModelSeesFlips) {
    const auto& m = fixture::tiny_corpus();
    FrameCache cache(m);
    auto video = enc::build(fixture::tiny_st3d());
    const auto* rec = m.in_split(Split::Test).front();
    const auto& frames = cache.get(*rec);
    const double base = perturbed_score(*video, frames, PerturbationSpec::parse("original"), rec->id);
    EXPECT_NEAR(base, eval::score_video(*video, frames), 1e-12);
    EXPECT_NE(perturbed_score(*video, frames, PerturbationSpec::parse("flip_every_2nd"), rec->id), base);
    EXPECT_NE(perturbed_score(*video, frames, PerturbationSpec::parse("shuffle", 3), rec->id), base);
}

TEST(Embedding, SeparatesClustersAndIsDeterministic) {
    Rng rng(5);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 45; ++i) {
            std::vector<double> r(10);
            for (int k = 0; k < 10; ++k) r[k] = noise(rng) + (k == c ? 4.0 : 0.0);
            rows.push_back(r);
            labels.push_back(c);
        }
    TsneOptions o;
    o.iterations = 600;
    o.seed = 3;
    const auto y = embed_2d(rows, o);
    ASSERT_EQ(y.size(), rows.size());
    std::vector<std::vector<double>> pts;
    for (const auto& p : y) pts.push_back({p[0], p[1]});
    EXPECT_GT(oracle::silhouette(pts, labels), 0.5);
    const auto again = embed_2d(rows, o);
    for (std::size_t i = 0; i < y.size(); ++i) {
        EXPECT_EQ(y[i][0], again[i][0]);
        EXPECT_EQ(y[i][1], again[i][1]);
    }
}

TEST(Embedding, RejectsTooFewRows) {
    std::vector<std::vector<double>> rows(119, std::vector<double>(3, 0.0));
    try {
        embed_2d(rows);
        FAIL() << "expected TooFewRows";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooFewRows);
    }
}

TEST(Features, ShapeAndImageOrderInvariance) {
    const auto& m = fixture::tiny_corpus();
    FrameCache cache(m);
    auto image = enc::build(fixture::tiny_image2d());
    const auto recs = m.in_split(Split::Val);
    const auto t = extract_features(*image, recs, cache);
    ASSERT_EQ(t.rows.size(), recs.size());
    for (const auto& r : t.rows) EXPECT_EQ(r.size(), t.rows[0].size());
    auto frames = cache.get(*recs[0]);
    std::reverse(frames.begin(), frames.end());
    const auto rev = video_feature(*image, frames);
    for (std::size_t k = 0; k < rev.size(); ++k) EXPECT_NEAR(rev[k], t.rows[0][k], 1e-9);
}

TEST(GradCam, OneNormalisedMapPerFrame) {
    const auto& m = fixture::tiny_corpus();
    FrameCache cache(m);
    const auto& frames = cache.get(*m.in_split(Split::Test).front());
    for (const auto& spec : {fixture::tiny_st3d(), fixture::tiny_image2d()}) {
        auto model = enc::build(spec);
        const std::vector<cv::Mat> clip(frames.begin(), frames.begin() + 16);
        const auto x = clip::to_clip_tensor(clip, spec.normalization, spec.resolution);
        const auto cam = grad_cam(*model, x);
        ASSERT_EQ(cam.heatmaps.size(), 16u);
        double peak = 0.0, lo = 1.0;
        for (const auto& h : cam.heatmaps) {
            EXPECT_EQ(h.rows, spec.resolution);
            EXPECT_EQ(h.cols, spec.resolution);
            double a, b;
            cv::minMaxLoc(h, &a, &b);
            peak = std::max(peak, b);
            lo = std::min(lo, a);
        }
        EXPECT_GE(lo, 0.0);
        // an all-zero map stays zero; otherwise the clip peak is exactly 1
        EXPECT_TRUE(peak == 0.0 || std::abs(peak - 1.0) < 1e-12) << peak;
        EXPECT_NEAR(cam.prediction, eval::score_video(*model, clip), 1e-9);
    }
    auto model = enc::build(fixture::tiny_st3d());
    EXPECT_THROW(grad_cam(*model, nn::Tensor({3, 16, 16})), Error);
}

TEST(GradCam, ZeroGradientGivesZeroMap) {
    auto spec = fixture::tiny_st3d();
    auto model = enc::build(spec);
    for (auto* p : model->params().all())
        if (p->name.starts_with("head")) std::fill(p->var->value.values().begin(), p->var->value.values().end(), 0.0);
    Rng rng(1);
    nn::Tensor x({3, 16, 16, 16});
    std::normal_distribution<double> d(0.0, 1.0);
    for (double& v : x.values()) v = d(rng);
    const auto cam = grad_cam(*model, x);
    for (const auto& h : cam.heatmaps) EXPECT_EQ(cv::countNonZero(h), 0);
    EXPECT_DOUBLE_EQ(cam.prediction, 0.5);
}

TEST(Perturb, FlipEverySecondIsAnInvolution) {
    const auto frames = indexed_frames(16);
    const auto spec = PerturbationSpec::parse("flip_every_2nd");
    const auto twice = perturb(perturb(frames, spec), spec);
    for (std::size_t i = 0; i < frames.size(); ++i) EXPECT_TRUE(same(twice[i], frames[i])) << i;
}

TEST(Battery, ConstantModelLossIgnoresPerturbations) {
    const auto& m = fixture::tiny_corpus();
    FrameCache cache(m);
    auto video = enc::build(fixture::tiny_st3d());
    for (auto* p : video->params().all())
        if (p->name.starts_with("head")) std::fill(p->var->value.values().begin(), p->var->value.values().end(), 0.0);
    const auto r = run_perturbation_battery(*video, m.in_split(Split::Test), default_battery(2), cache);
    for (const auto& [cls, row] : r.logloss)
        for (double v : row) EXPECT_NEAR(v, std::log(2.0), 1e-12) << cls;
}

TEST(Features, IdenticalFramesGiveTheSingleFrameFeature) {
    auto image = enc::build(fixture::tiny_image2d());
    const auto one = indexed_frames(3, 16)[2];
    const auto single = video_feature(*image, {one});
    const auto many = video_feature(*image, std::vector<cv::Mat>(16, one));
    ASSERT_EQ(single.size(), many.size());
    for (std::size_t k = 0; k < single.size(); ++k) EXPECT_NEAR(many[k], single[k], 1e-12);
    const auto out = image->forward(clip::to_clip_tensor({one}, image->spec().normalization, 16));
    EXPECT_EQ(single.size(), out.features[0].size());
}

TEST(Embedding, IdenticalRowsCollapse) {
    Rng rng(8);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> r(6);
        for (double& v : r) v = d(rng);
        rows.push_back(r);
    }
    // rows 0..9 are copies of one vector
    for (int i = 1; i < 10; ++i) rows[i] = rows[0];
    TsneOptions o;
    o.perplexity = 10;
    o.iterations = 800;
    o.seed = 2;
    const auto y = embed_2d(rows, o);
    // random init keeps copies apart by a cluster radius; they must still sit far
    // closer to each other than unrelated rows do
    double dup = 0.0, other = 0.0;
    int n_dup = 0, n_other = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = i + 1; j < y.size(); ++j) {
            const double dist = std::hypot(y[i][0] - y[j][0], y[i][1] - y[j][1]);
            if (j < 10) {
                dup += dist;
                ++n_dup;
            } else if (i >= 10) {
                other += dist;
                ++n_other;
            }
        }
    EXPECT_LT(dup / n_dup, 0.5 * other / n_other);
}
