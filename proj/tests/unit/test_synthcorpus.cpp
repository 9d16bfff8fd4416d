#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "stdeep/error.hpp"
#include "stdeep/seed.hpp"
#include "stdeep/synthcorpus.hpp"
#include "support/stats.hpp"

using namespace stdeep;
using namespace stdeep::synth;

namespace {

double frame_mean(const cv::Mat& m) {
    double s = 0.0;
    const auto* p = m.ptr<unsigned char>();
    const std::size_t n = m.total() * 3;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s / static_cast<double>(n);
}

bool same_pixels(const cv::Mat& a, const cv::Mat& b) {
    return a.size() == b.size() && a.type() == b.type() &&
           std::equal(a.datastart, a.dataend, b.datastart);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SynthMethod zeroed(MethodKind kind) {
    SynthMethod m;
    m.kind = kind;
    m.edge_jitter_px = 0;
    m.tint = 0;
    m.flicker = 0;
    m.warp_px = 0;
    m.seam_contrast = 0;
    m.seam_width = 0;
    return m;
}

}  // namespace

TEST(SynthReal, DeterministicAndCounted) {
    const auto a = generate_real(0, 16);
    const auto b = generate_real(0, 16);
    ASSERT_EQ(a.frames.size(), 16u);
    for (std::size_t t = 0; t < 16; ++t) {
        EXPECT_TRUE(same_pixels(a.frames[t], b.frames[t]));
        EXPECT_EQ(a.frames[t].rows, 64);
        EXPECT_EQ(a.frames[t].type(), CV_8UC3);
    }
    const auto c = generate_real(1, 16);
    EXPECT_FALSE(same_pixels(a.frames[0], c.frames[0]));
}

TEST(SynthReal, BrightnessLag1AutocorrelationNearRho) {
    RealParams p;
    p.size = 24;
    const auto v = generate_real(42, 10000, p);
    std::vector<double> means;
    for (const auto& f : v.frames) means.push_back(frame_mean(f));
    EXPECT_NEAR(oracle::lag1_autocorrelation(means), 0.9, 0.03);
}

TEST(SynthMethods, FlickerDecorrelatesButKeepsMarginal) {
    RealParams p;
    p.size = 24;
    const auto real = generate_real(43, 10000, p);
    const auto fake = apply_method(real, method_by_name("M2"), 7, p);
    std::vector<double> means;
    for (const auto& f : fake.frames) means.push_back(frame_mean(f));
    EXPECT_NEAR(oracle::lag1_autocorrelation(means), 0.0, 0.03);

    // frame-level marginal: independent real vs flickered videos at one frame index
    std::vector<double> real_stat, fake_stat, real_diff, fake_diff;
    for (int i = 0; i < 1000; ++i) {
        const auto r = generate_real(derive_seed(100, static_cast<std::uint64_t>(i)), 6, p);
        const auto src = generate_real(derive_seed(200, static_cast<std::uint64_t>(i)), 6, p);
        const auto f = apply_method(src, method_by_name("M2"), static_cast<std::uint64_t>(i), p);
        real_stat.push_back(frame_mean(r.frames[4]));
        fake_stat.push_back(frame_mean(f.frames[4]));
        real_diff.push_back(frame_mean(r.frames[5]) - frame_mean(r.frames[4]));
        fake_diff.push_back(frame_mean(f.frames[5]) - frame_mean(f.frames[4]));
    }
    EXPECT_GT(oracle::ks_two_sample(real_stat, fake_stat).p_value, 0.01);
    // the cue lives in consecutive frames
    EXPECT_LT(oracle::ks_two_sample(real_diff, fake_diff).p_value, 1e-6);
}

TEST(SynthMethods, SeamIsStatic) {
    const auto real = generate_real(5, 20);
    const auto fake = apply_method(real, method_by_name("M4"), 11);
    cv::Mat diff;
    cv::absdiff(real.frames[0], fake.frames[0], diff);
    std::vector<cv::Point> seam;
    for (int y = 0; y < diff.rows; ++y)
        for (int x = 0; x < diff.cols; ++x)
            if (diff.at<cv::Vec3b>(y, x) != cv::Vec3b(0, 0, 0)) seam.emplace_back(x, y);
    ASSERT_GT(seam.size(), 5u);
    for (std::size_t t = 0; t + 1 < fake.frames.size(); ++t)
        for (const auto& pt : seam) EXPECT_EQ(fake.frames[t].at<cv::Vec3b>(pt), fake.frames[t + 1].at<cv::Vec3b>(pt));
    // the source video is left untouched
    EXPECT_TRUE(same_pixels(real.frames[0], generate_real(5, 20).frames[0]));
}

TEST(SynthMethods, EveryMethodChangesFrames) {
    const auto real = generate_real(6, 16);
    for (const auto& m : default_methods()) {
        const auto fake = apply_method(real, m, 3);
        bool changed = false;
        for (std::size_t t = 0; t < 16; ++t) changed |= !same_pixels(real.frames[t], fake.frames[t]);
        EXPECT_TRUE(changed) << m.long_name();
    }
}

TEST(SynthMethods, ZeroMagnitudeIsIdentity) {
    const auto real = generate_real(8, 16);
    for (auto kind : {MethodKind::BlendBoundary, MethodKind::TemporalFlicker, MethodKind::WarpJitter,
                      MethodKind::SharpSeam}) {
        const auto out = apply_method(real, zeroed(kind), 99);
        for (std::size_t t = 0; t < 16; ++t) EXPECT_TRUE(same_pixels(real.frames[t], out.frames[t]));
    }
}

TEST(SynthMethods, NamesAndErrors) {
    EXPECT_EQ(method_by_name("M3").kind, MethodKind::WarpJitter);
    EXPECT_EQ(method_by_name("M2_temporal_flicker").short_name(), "M2");
    try {
        method_by_name("M9");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownMethod);
    }
    EXPECT_THROW(apply_method(SynthVideo{}, method_by_name("M1"), 0), Error);
}

TEST(SynthCorpus, DefaultPlanCountsAndSplits) {
    const auto m = plan_corpus(CorpusConfig{}, 0);
    std::map<Split, int> totals, reals;
    std::map<Split, std::set<std::string>> real_ids;
    for (const auto& r : m.records) {
        totals[r.split]++;
        if (!r.fake) {
            reals[r.split]++;
            real_ids[r.split].insert(r.id);
            EXPECT_GE(r.n_frames, 16);
            EXPECT_LE(r.n_frames, 28);
        }
    }
    EXPECT_EQ(reals[Split::Train], 72);
    EXPECT_EQ(reals[Split::Val], 14);
    EXPECT_EQ(reals[Split::Test], 14);
    EXPECT_EQ(totals[Split::Train], 360);
    EXPECT_EQ(totals[Split::Val], 70);
    EXPECT_EQ(totals[Split::Test], 70);
    for (auto a : {Split::Train, Split::Val, Split::Test})
        for (auto b : {Split::Train, Split::Val, Split::Test}) {
            if (a == b) continue;
            for (const auto& id : real_ids[a]) EXPECT_EQ(real_ids[b].count(id), 0u);
        }
    for (const auto& r : m.records) {
        if (!r.fake) continue;
        const auto* src = m.find(r.source);
        ASSERT_NE(src, nullptr);
        EXPECT_EQ(src->split, r.split);
        EXPECT_EQ(src->n_frames, r.n_frames);
    }
    EXPECT_EQ(m.methods(), (std::vector<std::string>{"M1", "M2", "M3", "M4"}));
}

TEST(SynthCorpus, BuildIsByteIdenticalAndRoundTrips) {
    CorpusConfig c;
    c.real_train = 2;
    c.real_val = 1;
    c.real_test = 1;
    c.motion_heavy_test = 1;
    c.max_frames = 17;
    const auto tmp = std::filesystem::temp_directory_path();
    const auto a = tmp / "stdeep_corpus_a", b = tmp / "stdeep_corpus_b";
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
    const auto ma = build_corpus(c, 5, a);
    build_corpus(c, 5, b);
    EXPECT_EQ(slurp(a / "manifest.jsonl"), slurp(b / "manifest.jsonl"));
    std::size_t files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(e.path(), a);
        EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
        ++files;
    }
    EXPECT_GT(files, 25u);

    const auto back = read_manifest(a / "manifest.jsonl");
    ASSERT_EQ(back.records.size(), ma.records.size());
    EXPECT_EQ(back.with_tag("motion_heavy").records.size(), 5u);
    const auto& rec = back.records[3];
    const auto frames = load_frames(back, rec);
    EXPECT_EQ(static_cast<int>(frames.size()), rec.n_frames);
    const auto rendered = render_record(c, 5, rec);
    EXPECT_TRUE(same_pixels(frames[2], rendered.frames[2]));

    const auto without = back.without_methods({"M2"});
    for (const auto& r : without.records)
        if (r.method == "M2") EXPECT_EQ(r.split, Split::Test);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST(Manifest, RejectsMalformedInput) {
    const auto p = std::filesystem::temp_directory_path() / "stdeep_bad_manifest.jsonl";
    {
        std::ofstream out(p);
        out << R"({"id":"a","split":"train","label":"fake","method":"real","frame_dir":"x","n_frames":3})" << "\n";
    }
    try {
        read_manifest(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BadManifest);
    }
    {
        std::ofstream out(p);
        out << "{not json\n";
    }
    EXPECT_THROW(read_manifest(p), Error);
    std::filesystem::remove(p);
}
