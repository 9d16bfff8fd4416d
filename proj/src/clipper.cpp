#include "stdeep/clipper.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "stdeep/error.hpp"
#include "stdeep/imageio.hpp"
#include "stdeep/seed.hpp"

namespace stdeep::clip {

NormStats stats_for(Normalization scheme) {
    if (scheme == Normalization::ImageNet) return {{0.485, 0.456, 0.406}, {0.229, 0.224, 0.225}};
    return {{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
}

int default_resolution(Normalization scheme) { return scheme == Normalization::ImageNet ? 224 : 299; }

std::string normalization_name(Normalization scheme) {
    return scheme == Normalization::ImageNet ? "imagenet_stats" : "half_half";
}

Normalization parse_normalization(const std::string& name) {
    if (name == "imagenet_stats" || name == "imagenet") return Normalization::ImageNet;
    if (name == "half_half") return Normalization::HalfHalf;
    throw Error(ErrorKind::InvalidArgument, "unknown normalization '" + name + "'");
}

namespace {

void check_rgb(const cv::Mat& m) {
    if (m.type() != CV_8UC3 || m.empty()) throw Error(ErrorKind::ShapeMismatch, "expected a non-empty 8-bit RGB frame");
}

void write_frame(const cv::Mat& rgb, const NormStats& s, double* out, std::size_t plane, std::size_t channel_stride) {
    const int w = rgb.cols;
    for (int y = 0; y < rgb.rows; ++y) {
        const auto* p = rgb.ptr<unsigned char>(y);
        for (int x = 0; x < w; ++x) {
            const std::size_t o = static_cast<std::size_t>(y) * w + x;
            for (int c = 0; c < 3; ++c)
                out[c * channel_stride + plane + o] = (p[x * 3 + c] / 255.0 - s.mean[static_cast<std::size_t>(c)]) /
                                                       s.std[static_cast<std::size_t>(c)];
        }
    }
}

}  // namespace

nn::Tensor normalize(const cv::Mat& rgb, Normalization scheme, int resolution) {
    check_rgb(rgb);
    const cv::Mat img = resolution > 0 ? resize_square(rgb, resolution) : rgb;
    nn::Tensor out({3, img.rows, img.cols});
    write_frame(img, stats_for(scheme), out.data(), 0, static_cast<std::size_t>(img.rows) * img.cols);
    return out;
}

cv::Mat denormalize(const nn::Tensor& chw, Normalization scheme) {
    nn::Tensor t = chw;
    if (t.rank() == 4 && t.dim(1) == 1) t = t.reshaped({t.dim(0), t.dim(2), t.dim(3)});
    if (t.rank() != 3 || t.dim(0) != 3) throw Error(ErrorKind::ShapeMismatch, "denormalize expects [3, H, W]");
    const auto s = stats_for(scheme);
    const int h = t.dim(1), w = t.dim(2);
    cv::Mat out(h, w, CV_8UC3);
    for (int y = 0; y < h; ++y) {
        auto* p = out.ptr<unsigned char>(y);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = t[static_cast<std::size_t>(c) * h * w + static_cast<std::size_t>(y) * w + x];
                const double px = (v * s.std[static_cast<std::size_t>(c)] + s.mean[static_cast<std::size_t>(c)]) * 255.0;
                p[x * 3 + c] = static_cast<unsigned char>(std::clamp(std::lround(px), 0L, 255L));
            }
    }
    return out;
}

nn::Tensor to_clip_tensor(const std::vector<cv::Mat>& frames, Normalization scheme, int resolution) {
    if (frames.empty()) throw Error(ErrorKind::NoFrames, "empty clip");
    if (resolution <= 0) throw Error(ErrorKind::InvalidArgument, "resolution must be positive");
    const int t_len = static_cast<int>(frames.size());
    nn::Tensor out({3, t_len, resolution, resolution});
    const std::size_t plane = static_cast<std::size_t>(resolution) * resolution;
    const auto s = stats_for(scheme);
    for (int t = 0; t < t_len; ++t) {
        check_rgb(frames[static_cast<std::size_t>(t)]);
        write_frame(resize_square(frames[static_cast<std::size_t>(t)], resolution), s, out.data(), t * plane,
                    static_cast<std::size_t>(t_len) * plane);
    }
    return out;
}

std::vector<int> looped_indices(int n_frames, int start, int length) {
    if (n_frames <= 0) throw Error(ErrorKind::NoFrames, "video has no frames");
    if (length <= 0) throw Error(ErrorKind::InvalidArgument, "clip length must be positive");
    std::vector<int> out(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) out[static_cast<std::size_t>(i)] = (start + i) % n_frames;
    return out;
}

std::vector<int> sample_training_indices(int n_frames, int clip_len, std::uint64_t seed) {
    if (n_frames <= 0) throw Error(ErrorKind::NoFrames, "video has no frames");
    if (clip_len <= 0) throw Error(ErrorKind::InvalidArgument, "clip length must be positive");
    const int last_start = std::max(n_frames, clip_len) - clip_len;
    Rng rng = make_rng(seed);
    const int start = std::uniform_int_distribution<int>(0, last_start)(rng);
    return looped_indices(n_frames, start, clip_len);
}

std::vector<cv::Mat> gather(const std::vector<cv::Mat>& frames, const std::vector<int>& indices) {
    std::vector<cv::Mat> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(frames.at(static_cast<std::size_t>(i)));
    return out;
}

std::vector<cv::Mat> sample_training_clip(const std::vector<cv::Mat>& frames, int clip_len, std::uint64_t seed) {
    return gather(frames, sample_training_indices(static_cast<int>(frames.size()), clip_len, seed));
}

WindowPlan plan_inference_windows(int n_frames, int clip_len, int stride) {
    if (n_frames <= 0) throw Error(ErrorKind::NoFrames, "video has no frames");
    if (clip_len < 1 || stride < 1) throw Error(ErrorKind::InvalidArgument, "clip_len and stride must be >= 1");
    WindowPlan plan;
    plan.stride = stride;
    plan.clip_len = clip_len;
    plan.n_frames = n_frames;
    const int padded = std::max(n_frames, clip_len);
    int start = 0;
    for (; start + clip_len <= padded; start += stride) plan.starts.push_back(start);
    const int covered = plan.starts.back() + clip_len;
    if (covered < n_frames) plan.starts.push_back(start);
    return plan;
}

cv::Mat hflip(const cv::Mat& rgb) {
    cv::Mat out;
    cv::flip(rgb, out, 1);
    return out;
}

std::string aug_name(AugKind kind) {
    switch (kind) {
        case AugKind::None: return "none";
        case AugKind::Crop: return "crop";
        case AugKind::Jpeg: return "jpeg";
        case AugKind::Noise: return "noise";
        case AugKind::Blur: return "blur";
        case AugKind::Downscale: return "downscale";
        case AugKind::Brightness: return "brightness";
        case AugKind::Contrast: return "contrast";
        case AugKind::Color: return "color";
    }
    return "none";
}

AugmentParams draw_augmentation(std::uint64_t seed, const AugmentOptions& o) {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AugmentParams p;
    p.flip = u(rng) < o.flip_p;
    if (u(rng) >= o.extra_p) return p;
    p.kind = static_cast<AugKind>(1 + std::uniform_int_distribution<int>(0, 7)(rng));
    switch (p.kind) {
        case AugKind::Crop:
            p.amount = o.crop_min + (1.0 - o.crop_min) * u(rng);
            p.corner = std::uniform_int_distribution<int>(-1, 3)(rng);
            p.offset_x = u(rng);
            p.offset_y = u(rng);
            break;
        case AugKind::Jpeg: p.amount = std::uniform_int_distribution<int>(o.jpeg_min, o.jpeg_max)(rng); break;
        case AugKind::Noise:
            p.amount = o.noise_sigma_max * u(rng);
            p.noise_seed = rng();
            break;
        case AugKind::Blur: p.amount = 0.3 + (o.blur_sigma_max - 0.3) * u(rng); break;
        case AugKind::Downscale: p.amount = o.downscale_min + (1.0 - o.downscale_min) * u(rng); break;
        case AugKind::Brightness: p.amount = o.brightness_max * (2 * u(rng) - 1); break;
        case AugKind::Contrast: p.amount = 1.0 + o.contrast_max * (2 * u(rng) - 1); break;
        case AugKind::Color:
            for (auto& c : p.color) c = o.color_max * (2 * u(rng) - 1);
            break;
        case AugKind::None: break;
    }
    return p;
}

namespace {

cv::Mat apply_one(const cv::Mat& in, const AugmentParams& p, const cv::Mat& noise) {
    cv::Mat img = p.flip ? hflip(in) : in.clone();
    const int w = img.cols, h = img.rows;
    switch (p.kind) {
        case AugKind::None: break;
        case AugKind::Crop: {
            const int cw = std::max(1, static_cast<int>(std::lround(w * p.amount)));
            const int ch = std::max(1, static_cast<int>(std::lround(h * p.amount)));
            int x0 = 0, y0 = 0;
            if (p.corner < 0) {
                x0 = static_cast<int>(std::floor(p.offset_x * (w - cw + 1)));
                y0 = static_cast<int>(std::floor(p.offset_y * (h - ch + 1)));
                x0 = std::min(x0, w - cw);
                y0 = std::min(y0, h - ch);
            } else {
                x0 = (p.corner & 1) ? w - cw : 0;
                y0 = (p.corner & 2) ? h - ch : 0;
            }
            cv::resize(img(cv::Rect(x0, y0, cw, ch)), img, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
            break;
        }
        case AugKind::Jpeg: {
            std::vector<unsigned char> buf;
            cv::Mat bgr;
            cv::cvtColor(img, bgr, cv::COLOR_RGB2BGR);
            cv::imencode(".jpg", bgr, buf, {cv::IMWRITE_JPEG_QUALITY, static_cast<int>(p.amount)});
            cv::cvtColor(cv::imdecode(buf, cv::IMREAD_COLOR), img, cv::COLOR_BGR2RGB);
            break;
        }
        case AugKind::Noise: {
            cv::Mat f;
            img.convertTo(f, CV_64FC3);
            f += noise;
            f.convertTo(img, CV_8UC3);
            break;
        }
        case AugKind::Blur: cv::GaussianBlur(img, img, cv::Size(0, 0), p.amount); break;
        case AugKind::Downscale: {
            cv::Mat small;
            const int sw = std::max(1, static_cast<int>(std::lround(w * p.amount)));
            const int sh = std::max(1, static_cast<int>(std::lround(h * p.amount)));
            cv::resize(img, small, cv::Size(sw, sh), 0, 0, cv::INTER_AREA);
            cv::resize(small, img, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
            break;
        }
        case AugKind::Brightness: img.convertTo(img, CV_8UC3, 1.0, p.amount); break;
        case AugKind::Contrast: img.convertTo(img, CV_8UC3, p.amount, 128.0 * (1.0 - p.amount)); break;
        case AugKind::Color: cv::add(img, cv::Scalar(p.color[0], p.color[1], p.color[2]), img, cv::noArray(), CV_8UC3); break;
    }
    return img;
}

}  // namespace

std::vector<cv::Mat> apply_augmentation(const std::vector<cv::Mat>& frames, const AugmentParams& params) {
    std::vector<cv::Mat> out;
    out.reserve(frames.size());
    cv::Mat noise;
    if (params.kind == AugKind::Noise && !frames.empty()) {
        // one noise field for the whole clip
        noise = cv::Mat(frames.front().size(), CV_64FC3);
        Rng rng = make_rng(params.noise_seed);
        std::normal_distribution<double> n(0.0, params.amount * 255.0);
        for (auto it = noise.begin<cv::Vec3d>(); it != noise.end<cv::Vec3d>(); ++it)
            *it = cv::Vec3d(n(rng), n(rng), n(rng));
    }
    for (const auto& f : frames) {
        check_rgb(f);
        if (!noise.empty() && f.size() != noise.size())
            throw Error(ErrorKind::ShapeMismatch, "clip frames differ in size");
        out.push_back(apply_one(f, params, noise));
    }
    return out;
}

std::vector<cv::Mat> augment(const std::vector<cv::Mat>& frames, std::uint64_t seed, const AugmentOptions& options) {
    return apply_augmentation(frames, draw_augmentation(seed, options));
}

}  // namespace stdeep::clip
