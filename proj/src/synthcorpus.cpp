#include "stdeep/synthcorpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "stdeep/error.hpp"
#include "stdeep/imageio.hpp"
#include "stdeep/seed.hpp"

namespace stdeep::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kBrightnessClamp = 40;
constexpr double kBaseLow = 40.0;
constexpr double kBaseHigh = 215.0;

using Color = std::array<double, 3>;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double smoothstep(double e0, double e1, double x) {
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Sum of oriented sinusoids; cheap, smooth and exactly shiftable.
struct Texture {
    std::array<double, 6> fx{}, fy{}, phase{}, amp{};

    Texture() = default;
    Texture(Rng& rng, double scale, double max_freq) {
        for (std::size_t k = 0; k < fx.size(); ++k) {
            const double angle = uniform(rng, 0.0, kPi);
            const double freq = uniform(rng, 0.15, max_freq);
            fx[k] = freq * std::cos(angle);
            fy[k] = freq * std::sin(angle);
            phase[k] = uniform(rng, 0.0, 2.0 * kPi);
            amp[k] = scale * uniform(rng, 0.3, 1.0);
        }
    }
    double operator()(double x, double y) const {
        double v = 0.0;
        for (std::size_t k = 0; k < fx.size(); ++k) v += amp[k] * std::sin(fx[k] * x + fy[k] * y + phase[k]);
        return v;
    }
};

struct Layout {
    double cx = 0, cy = 0, rx = 0, ry = 0;
    Color skin{}, hair{}, bg_a{}, bg_b{}, eye{};
    double hair_side = 1.0;
    double light = 0.0;
    double bg_angle = 0.0;
    Texture skin_tex, bg_tex;
    double sway = 0.0, period_x = 0, period_y = 0, phase_x = 0, phase_y = 0;
    double mouth_period = 0, mouth_phase = 0;
};

Layout draw_layout(Rng& rng, const RealParams& p, bool motion_heavy) {
    const double s = p.size;
    Layout L;
    L.cx = s * 0.5 + uniform(rng, -0.05, 0.05) * s;
    L.cy = s * 0.52 + uniform(rng, -0.03, 0.03) * s;
    L.rx = s * uniform(rng, 0.26, 0.31);
    L.ry = L.rx * uniform(rng, 1.15, 1.3);
    const double tone = uniform(rng, 0.0, 1.0);
    L.skin = {150 + 50 * tone, 115 + 45 * tone, 90 + 40 * tone};
    const double hair_dark = uniform(rng, 40, 110);
    L.hair = {hair_dark + uniform(rng, 0, 30), hair_dark * 0.8, hair_dark * 0.6};
    for (auto& c : L.bg_a) c = uniform(rng, 60, 190);
    for (auto& c : L.bg_b) c = uniform(rng, 60, 190);
    L.eye = {uniform(rng, 40, 80), uniform(rng, 40, 90), uniform(rng, 50, 110)};
    L.hair_side = uniform(rng, 0, 1) < 0.5 ? -1.0 : 1.0;
    L.light = uniform(rng, 0.12, 0.3) * (uniform(rng, 0, 1) < 0.5 ? -1.0 : 1.0);
    L.bg_angle = uniform(rng, 0, 2 * kPi);
    L.skin_tex = Texture(rng, 4.0, 0.9);
    L.bg_tex = Texture(rng, 6.0, 0.5);
    L.sway = motion_heavy ? p.motion_heavy_px : p.motion_px;
    L.period_x = uniform(rng, 12, 26);
    L.period_y = uniform(rng, 14, 30);
    L.phase_x = uniform(rng, 0, 2 * kPi);
    L.phase_y = uniform(rng, 0, 2 * kPi);
    L.mouth_period = uniform(rng, 6, 14);
    L.mouth_phase = uniform(rng, 0, 2 * kPi);
    return L;
}

FaceGeometry geometry_at(const Layout& L, int t) {
    const double dx = L.sway * std::sin(2 * kPi * t / L.period_x + L.phase_x);
    const double dy = 0.6 * L.sway * std::sin(2 * kPi * t / L.period_y + L.phase_y);
    const double breathe = 1.0 + 0.01 * std::sin(2 * kPi * t / L.period_y);
    return {L.cx + dx, L.cy + dy, L.rx * breathe, L.ry * breathe};
}

// Base frame before the brightness offset, values in [kBaseLow, kBaseHigh].
void render_base(const Layout& L, const FaceGeometry& g, int t, int size, std::vector<double>& rgb) {
    rgb.assign(static_cast<std::size_t>(size) * size * 3, 0.0);
    const double ca = std::cos(L.bg_angle), sa = std::sin(L.bg_angle);
    const double mouth_open = 0.05 + 0.035 * (1 + std::sin(2 * kPi * t / L.mouth_period + L.mouth_phase));
    const double shift_x = g.cx - L.cx, shift_y = g.cy - L.cy;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const double ramp = 0.5 + 0.5 * std::clamp(((px / size - 0.5) * ca + (py / size - 0.5) * sa) * 1.6, -1.0, 1.0);
            Color c;
            const double bt = L.bg_tex(px, py);
            for (int k = 0; k < 3; ++k) c[k] = L.bg_a[k] * (1 - ramp) + L.bg_b[k] * ramp + bt;

            const double u = (px - g.cx) / g.rx;
            const double v = (py - g.cy) / g.ry;
            const double r = std::sqrt(u * u + v * v);
            const double edge = 1.0 / std::max(g.rx, g.ry);

            // hair behind the head on one side
            const double side_u = u * L.hair_side;
            if (side_u > 0.55 && v < 0.45 && r < 1.35) {
                const double w = smoothstep(1.35, 1.35 - 2 * edge, r) * smoothstep(0.55, 0.55 + 2 * edge, side_u);
                for (int k = 0; k < 3; ++k) c[k] = c[k] * (1 - w) + L.hair[k] * w;
            }

            const double face_w = smoothstep(1.0, 1.0 - 1.5 * edge, r);
            if (face_w > 0) {
                const double tex = L.skin_tex(px - shift_x, py - shift_y);
                const double shade = 1.0 + L.light * u - 0.08 * v * v;
                Color f;
                for (int k = 0; k < 3; ++k) f[k] = L.skin[k] * shade + tex;

                // slanted hairline, lower on the hair side
                const double hairline = -0.5 + 0.22 * side_u;
                const double hw = smoothstep(hairline + 1.5 * edge, hairline - 1.5 * edge, v);
                for (int k = 0; k < 3; ++k) f[k] = f[k] * (1 - hw) + L.hair[k] * hw;

                for (double ex : {-0.38, 0.38}) {
                    const double du = (u - ex) / 0.17, dv = (v + 0.12) / 0.09;
                    const double er = std::sqrt(du * du + dv * dv);
                    const double ew = smoothstep(1.0, 0.6, er);
                    for (int k = 0; k < 3; ++k) f[k] = f[k] * (1 - ew) + L.eye[k] * ew;
                    const double pr = std::sqrt((u - ex - 0.04 * L.hair_side) * (u - ex - 0.04 * L.hair_side) / 0.0036 +
                                                (v + 0.12) * (v + 0.12) / 0.0036);
                    const double pw = smoothstep(1.0, 0.5, pr);
                    for (int k = 0; k < 3; ++k) f[k] = f[k] * (1 - pw) + 25.0 * pw;
                }
                {
                    const double nu = (u - 0.08 * L.hair_side) / 0.07, nv = (v - 0.15) / 0.16;
                    const double nw = 0.25 * smoothstep(1.0, 0.3, std::sqrt(nu * nu + nv * nv));
                    for (int k = 0; k < 3; ++k) f[k] *= 1.0 - nw;
                }
                {
                    const double mu = (u - 0.1 * L.hair_side) / 0.32, mv = (v - 0.48) / mouth_open;
                    const double mw = smoothstep(1.0, 0.6, std::sqrt(mu * mu + mv * mv));
                    const Color lip{110, 45, 50};
                    for (int k = 0; k < 3; ++k) f[k] = f[k] * (1 - mw) + lip[k] * mw;
                }
                for (int k = 0; k < 3; ++k) c[k] = c[k] * (1 - face_w) + f[k] * face_w;
            }
            const std::size_t o = (static_cast<std::size_t>(y) * size + x) * 3;
            for (int k = 0; k < 3; ++k) rgb[o + k] = std::clamp(c[k], kBaseLow, kBaseHigh);
        }
    }
}

cv::Mat to_mat(const std::vector<double>& rgb, int size, int offset) {
    cv::Mat m(size, size, CV_8UC3);
    auto* p = m.ptr<unsigned char>();
    for (std::size_t i = 0; i < rgb.size(); ++i)
        p[i] = static_cast<unsigned char>(std::clamp(std::lround(rgb[i]) + offset, 0L, 255L));
    return m;
}

int quantize_brightness(double b) {
    return static_cast<int>(std::clamp(std::lround(b), static_cast<long>(-kBrightnessClamp),
                                       static_cast<long>(kBrightnessClamp)));
}

// Soft elliptical mask around the face, radii scaled by `scale` plus `extra_px`.
cv::Mat ellipse_mask(const FaceGeometry& g, int size, double scale, double extra_px, double feather_px) {
    cv::Mat mask(size, size, CV_64F);
    const double ax = g.rx * scale + extra_px, ay = g.ry * scale + extra_px;
    for (int y = 0; y < size; ++y) {
        auto* row = mask.ptr<double>(y);
        for (int x = 0; x < size; ++x) {
            const double u = (x + 0.5 - g.cx) / ax, v = (y + 0.5 - g.cy) / ay;
            const double r = std::sqrt(u * u + v * v);
            const double feather = feather_px / std::min(ax, ay);
            row[x] = smoothstep(1.0 + feather / 2, 1.0 - feather / 2, r);
        }
    }
    return mask;
}

cv::Mat composite(const cv::Mat& base, const cv::Mat& overlay, const cv::Mat& mask) {
    cv::Mat out = base.clone();
    for (int y = 0; y < base.rows; ++y) {
        const auto* b = base.ptr<unsigned char>(y);
        const auto* o = overlay.ptr<unsigned char>(y);
        const auto* m = mask.ptr<double>(y);
        auto* d = out.ptr<unsigned char>(y);
        for (int x = 0; x < base.cols; ++x) {
            for (int k = 0; k < 3; ++k) {
                const int i = x * 3 + k;
                d[i] = static_cast<unsigned char>(std::lround(b[i] * (1 - m[x]) + o[i] * m[x]));
            }
        }
    }
    return out;
}

SynthVideo blend_boundary(const SynthVideo& real, const SynthMethod& m, Rng& rng, int size) {
    SynthVideo out = real;
    if (m.tint == 0.0) return out;
    const double hue = uniform(rng, 0, 2 * kPi);
    const Color tint{m.tint * std::cos(hue), m.tint * std::cos(hue + 2 * kPi / 3), m.tint * std::cos(hue + 4 * kPi / 3)};
    for (std::size_t t = 0; t < real.frames.size(); ++t) {
        const double jitter = uniform(rng, -m.edge_jitter_px, m.edge_jitter_px);
        const cv::Mat mask = ellipse_mask(real.face[t], size, 0.72, jitter, 1.0);
        cv::Mat tinted = real.frames[t].clone();
        for (int y = 0; y < size; ++y) {
            auto* p = tinted.ptr<unsigned char>(y);
            for (int x = 0; x < size; ++x)
                for (int k = 0; k < 3; ++k)
                    p[x * 3 + k] = static_cast<unsigned char>(std::clamp(std::lround(p[x * 3 + k] + tint[k]), 0L, 255L));
        }
        out.frames[t] = composite(real.frames[t], tinted, mask);
    }
    return out;
}

SynthVideo temporal_flicker(const SynthVideo& real, const SynthMethod& m, Rng& rng, const RealParams& p) {
    SynthVideo out = real;
    if (m.flicker == 0.0) return out;
    if (m.flicker < 0.0 || m.flicker > 1.0) throw Error(ErrorKind::InvalidArgument, "flicker must lie in [0, 1]");
    std::normal_distribution<double> z(0.0, p.brightness_sigma);
    const double keep = std::sqrt(1.0 - m.flicker), redraw = std::sqrt(m.flicker);
    for (std::size_t t = 0; t < real.frames.size(); ++t) {
        const int b_new = quantize_brightness(keep * real.brightness[t] + redraw * z(rng));
        const int delta = b_new - real.brightness[t];
        cv::Mat f;
        real.frames[t].convertTo(f, CV_8UC3, 1.0, delta);
        out.frames[t] = f;
        out.brightness[t] = b_new;
    }
    return out;
}

SynthVideo warp_jitter(const SynthVideo& real, const SynthMethod& m, Rng& rng, int size) {
    SynthVideo out = real;
    if (m.warp_px == 0.0) return out;
    for (std::size_t t = 0; t < real.frames.size(); ++t) {
        const auto& g = real.face[t];
        const double radius = std::max(g.rx, g.ry);
        const double angle = uniform(rng, -1, 1) * m.warp_px / radius;
        const double scale = 1.0 + uniform(rng, -1, 1) * m.warp_px / radius;
        cv::Mat A = cv::getRotationMatrix2D(cv::Point2f(static_cast<float>(g.cx), static_cast<float>(g.cy)),
                                            angle * 180.0 / kPi, scale);
        A.at<double>(0, 2) += uniform(rng, -m.warp_px, m.warp_px);
        A.at<double>(1, 2) += uniform(rng, -m.warp_px, m.warp_px);
        cv::Mat warped;
        cv::warpAffine(real.frames[t], warped, A, real.frames[t].size(), cv::INTER_LINEAR, cv::BORDER_REPLICATE);
        out.frames[t] = composite(real.frames[t], warped, ellipse_mask(g, size, 0.85, 0.0, 2.0));
    }
    return out;
}

SynthVideo sharp_seam(const SynthVideo& real, const SynthMethod& m, Rng& rng, int size) {
    SynthVideo out = real;
    if (m.seam_contrast == 0.0 || m.seam_width <= 0) return out;
    if (m.seam_contrast < 0.0 || m.seam_contrast > 1.0)
        throw Error(ErrorKind::InvalidArgument, "seam contrast must lie in [0, 1]");
    // arc along the lower face boundary of the first frame, fixed thereafter
    const auto& g = real.face.front();
    const double a0 = uniform(rng, 0.15, 0.45) * kPi;
    const double span = uniform(rng, 0.25, 0.4) * kPi;
    cv::Mat seam = cv::Mat::zeros(size, size, CV_8U);
    std::vector<cv::Point> pts;
    for (int i = 0; i <= 40; ++i) {
        const double a = a0 + span * i / 40.0;
        pts.emplace_back(static_cast<int>(std::lround(g.cx + 0.9 * g.rx * std::cos(a))),
                         static_cast<int>(std::lround(g.cy + 0.9 * g.ry * std::sin(a))));
    }
    cv::polylines(seam, pts, false, cv::Scalar(255), m.seam_width, cv::LINE_8);
    for (auto& f : out.frames) {
        f = f.clone();
        for (int y = 0; y < size; ++y) {
            const auto* s = seam.ptr<unsigned char>(y);
            auto* p = f.ptr<unsigned char>(y);
            for (int x = 0; x < size; ++x) {
                if (!s[x]) continue;
                const double pattern = ((x / 2 + y / 2) % 2) ? 235.0 : 20.0;
                for (int k = 0; k < 3; ++k) {
                    const int i = x * 3 + k;
                    p[i] = static_cast<unsigned char>(std::lround((1 - m.seam_contrast) * p[i] + m.seam_contrast * pattern));
                }
            }
        }
    }
    return out;
}

}  // namespace

SynthVideo generate_real(std::uint64_t seed, int n_frames, const RealParams& params, bool motion_heavy) {
    if (n_frames <= 0) throw Error(ErrorKind::InvalidArgument, "n_frames must be positive");
    if (params.size < 8) throw Error(ErrorKind::InvalidArgument, "frame size too small");
    if (!(params.brightness_rho >= 0.0 && params.brightness_rho < 1.0))
        throw Error(ErrorKind::InvalidArgument, "brightness rho must lie in [0, 1)");
    Rng rng = make_rng(derive_seed(seed, "layout"));
    const Layout layout = draw_layout(rng, params, motion_heavy);

    Rng brng = make_rng(derive_seed(seed, "brightness"));
    const double sigma = params.brightness_sigma;
    const double rho = params.brightness_rho;
    std::normal_distribution<double> init(0.0, sigma);
    std::normal_distribution<double> innov(0.0, sigma * std::sqrt(1.0 - rho * rho));

    SynthVideo v;
    v.frames.reserve(static_cast<std::size_t>(n_frames));
    std::vector<double> base;
    double b = init(brng);
    for (int t = 0; t < n_frames; ++t) {
        if (t > 0) b = rho * b + innov(brng);
        const auto g = geometry_at(layout, t);
        render_base(layout, g, t, params.size, base);
        const int offset = quantize_brightness(b);
        v.frames.push_back(to_mat(base, params.size, offset));
        v.brightness.push_back(offset);
        v.face.push_back(g);
    }
    return v;
}

std::string SynthMethod::short_name() const {
    switch (kind) {
        case MethodKind::BlendBoundary: return "M1";
        case MethodKind::TemporalFlicker: return "M2";
        case MethodKind::WarpJitter: return "M3";
        case MethodKind::SharpSeam: return "M4";
    }
    throw Error(ErrorKind::UnknownMethod, "unknown method kind");
}

std::string SynthMethod::long_name() const {
    switch (kind) {
        case MethodKind::BlendBoundary: return "M1_blend_boundary";
        case MethodKind::TemporalFlicker: return "M2_temporal_flicker";
        case MethodKind::WarpJitter: return "M3_warp_jitter";
        case MethodKind::SharpSeam: return "M4_sharp_seam";
    }
    throw Error(ErrorKind::UnknownMethod, "unknown method kind");
}

SynthMethod method_by_name(const std::string& name) {
    for (auto m : default_methods())
        if (name == m.short_name() || name == m.long_name()) return m;
    throw Error(ErrorKind::UnknownMethod, "unknown method '" + name + "'");
}

std::vector<SynthMethod> default_methods() {
    std::vector<SynthMethod> out;
    for (auto k : {MethodKind::BlendBoundary, MethodKind::TemporalFlicker, MethodKind::WarpJitter, MethodKind::SharpSeam}) {
        SynthMethod m;
        m.kind = k;
        out.push_back(m);
    }
    return out;
}

SynthVideo apply_method(const SynthVideo& real, const SynthMethod& method, std::uint64_t seed, const RealParams& params) {
    if (real.frames.empty()) throw Error(ErrorKind::NoFrames, "apply_method needs at least one frame");
    if (real.brightness.size() != real.frames.size() || real.face.size() != real.frames.size())
        throw Error(ErrorKind::InvalidArgument, "synthetic video metadata does not match its frames");
    Rng rng = make_rng(derive_seed(seed, method.short_name()));
    const int size = real.frames.front().cols;
    switch (method.kind) {
        case MethodKind::BlendBoundary: return blend_boundary(real, method, rng, size);
        case MethodKind::TemporalFlicker: return temporal_flicker(real, method, rng, params);
        case MethodKind::WarpJitter: return warp_jitter(real, method, rng, size);
        case MethodKind::SharpSeam: return sharp_seam(real, method, rng, size);
    }
    throw Error(ErrorKind::UnknownMethod, "unknown method kind");
}

namespace {

char id_prefix(bool heavy) { return heavy ? 'h' : 'r'; }

std::string real_id(bool heavy, int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%04d", id_prefix(heavy), index);
    return buf;
}

int frames_for(const CorpusConfig& c, std::uint64_t seed, const std::string& id) {
    Rng rng = make_rng(derive_seed(seed, "length", id));
    return std::uniform_int_distribution<int>(c.min_frames, c.max_frames)(rng);
}

void check_config(const CorpusConfig& c) {
    if (c.real_train <= 0 || c.real_val <= 0 || c.real_test <= 0 || c.motion_heavy_test < 0)
        throw Error(ErrorKind::InvalidArgument, "corpus counts must be positive");
    if (c.min_frames < 1 || c.max_frames < c.min_frames)
        throw Error(ErrorKind::InvalidArgument, "invalid frame-count range");
    if (c.methods.empty()) throw Error(ErrorKind::InvalidArgument, "corpus needs at least one method");
}

}  // namespace

CorpusManifest plan_corpus(const CorpusConfig& config, std::uint64_t seed) {
    check_config(config);
    CorpusManifest m;
    m.seed = seed;
    auto add_video = [&](Split split, bool heavy, int index) {
        VideoRecord real;
        real.id = real_id(heavy, index);
        real.split = split;
        real.frame_dir = "frames/" + real.id;
        real.n_frames = frames_for(config, seed, real.id);
        if (heavy) real.tags.push_back("motion_heavy");
        m.records.push_back(real);
        for (const auto& method : config.methods) {
            VideoRecord fake = real;
            fake.id = method.short_name() + "_" + real.id;
            fake.fake = true;
            fake.method = method.short_name();
            fake.frame_dir = "frames/" + fake.id;
            fake.source = real.id;
            m.records.push_back(fake);
        }
    };
    int index = 0;
    for (int i = 0; i < config.real_train; ++i) add_video(Split::Train, false, index++);
    for (int i = 0; i < config.real_val; ++i) add_video(Split::Val, false, index++);
    for (int i = 0; i < config.real_test; ++i) add_video(Split::Test, false, index++);
    for (int i = 0; i < config.motion_heavy_test; ++i) add_video(Split::Test, true, i);
    m.validate();
    return m;
}

namespace {

SynthVideo render_real(const CorpusConfig& config, std::uint64_t seed, const VideoRecord& real) {
    return generate_real(derive_seed(seed, "real", real.id), real.n_frames, config.real, real.has_tag("motion_heavy"));
}

const SynthMethod& method_for(const CorpusConfig& config, const std::string& name) {
    for (const auto& m : config.methods)
        if (m.short_name() == name || m.long_name() == name) return m;
    throw Error(ErrorKind::UnknownMethod, "method '" + name + "' is not part of the corpus config");
}

}  // namespace

SynthVideo render_record(const CorpusConfig& config, std::uint64_t seed, const VideoRecord& record) {
    if (!record.fake) return render_real(config, seed, record);
    VideoRecord source = record;
    source.id = record.source;
    source.fake = false;
    source.method = "real";
    const SynthVideo real = render_real(config, seed, source);
    return apply_method(real, method_for(config, record.method), derive_seed(seed, "fake", record.id), config.real);
}

CorpusManifest build_corpus(const CorpusConfig& config, std::uint64_t seed, const std::filesystem::path& out_dir) {
    CorpusManifest m = plan_corpus(config, seed);
    m.root = out_dir;
    auto write_video = [&](const VideoRecord& r, const SynthVideo& v) {
        const auto dir = out_dir / r.frame_dir;
        std::filesystem::create_directories(dir);
        for (std::size_t t = 0; t < v.frames.size(); ++t) write_rgb(dir / (std::to_string(t) + ".png"), v.frames[t]);
    };
    SynthVideo current;
    for (const auto& r : m.records) {
        if (!r.fake) {
            current = render_real(config, seed, r);
            write_video(r, current);
        } else {
            write_video(r, apply_method(current, method_for(config, r.method), derive_seed(seed, "fake", r.id), config.real));
        }
    }
    write_manifest(out_dir / "manifest.jsonl", m);
    return m;
}

}  // namespace stdeep::synth
