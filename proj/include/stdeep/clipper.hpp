#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "stdeep/nn/tensor.hpp"

namespace stdeep::clip {

enum class Normalization { ImageNet, HalfHalf };

struct NormStats {
    std::array<double, 3> mean;
    std::array<double, 3> std;
};

NormStats stats_for(Normalization scheme);
/// 224 for ImageNet statistics, 299 for half/half.
int default_resolution(Normalization scheme);
std::string normalization_name(Normalization scheme);
Normalization parse_normalization(const std::string& name);

/// One 8-bit RGB frame to a [3, H, W] tensor, resized when resolution > 0.
nn::Tensor normalize(const cv::Mat& rgb, Normalization scheme, int resolution = 0);
/// Inverse of normalize for a [3, H, W] tensor (rounded, saturated).
cv::Mat denormalize(const nn::Tensor& chw, Normalization scheme);

/// Frames to a [3, T, R, R] clip tensor.
nn::Tensor to_clip_tensor(const std::vector<cv::Mat>& frames, Normalization scheme, int resolution);

/// start, start+1, ... wrapping to the beginning past the last frame.
std::vector<int> looped_indices(int n_frames, int start, int length);

/// Random consecutive window; short videos are looped first.
std::vector<int> sample_training_indices(int n_frames, int clip_len, std::uint64_t seed);
std::vector<cv::Mat> sample_training_clip(const std::vector<cv::Mat>& frames, int clip_len, std::uint64_t seed);

struct WindowPlan {
    std::vector<int> starts;
    int stride = 16;
    int clip_len = 16;
    int n_frames = 0;

    std::vector<int> indices(std::size_t window) const { return looped_indices(n_frames, starts.at(window), clip_len); }
};

/**
 * Starts 0, stride, 2*stride, ... while the window fits the sequence
 * (looped up to clip_len when shorter). If frames remain uncovered one
 * more start is added and its window wraps around.
 */
WindowPlan plan_inference_windows(int n_frames, int clip_len, int stride);

std::vector<cv::Mat> gather(const std::vector<cv::Mat>& frames, const std::vector<int>& indices);

cv::Mat hflip(const cv::Mat& rgb);

enum class AugKind { None, Crop, Jpeg, Noise, Blur, Downscale, Brightness, Contrast, Color };
std::string aug_name(AugKind kind);

/// Ranges for the extra augmentation; kept mild.
struct AugmentOptions {
    double flip_p = 0.5;
    double extra_p = 0.5;
    double crop_min = 0.8;
    int jpeg_min = 50;
    int jpeg_max = 95;
    double noise_sigma_max = 0.05;  ///< fraction of the 0..255 range
    double blur_sigma_max = 1.2;
    double downscale_min = 0.4;
    double brightness_max = 20.0;
    double contrast_max = 0.2;
    double color_max = 12.0;
};

/// One draw of augmentation parameters, shared by every frame of a clip.
struct AugmentParams {
    bool flip = false;
    AugKind kind = AugKind::None;
    double amount = 0.0;
    std::array<double, 3> color{0.0, 0.0, 0.0};
    int corner = -1;  ///< crop anchor: -1 random offset, 0..3 corners
    double offset_x = 0.0, offset_y = 0.0;
    std::uint64_t noise_seed = 0;
};

AugmentParams draw_augmentation(std::uint64_t seed, const AugmentOptions& options = {});
std::vector<cv::Mat> apply_augmentation(const std::vector<cv::Mat>& frames, const AugmentParams& params);
/// draw_augmentation then apply_augmentation.
std::vector<cv::Mat> augment(const std::vector<cv::Mat>& frames, std::uint64_t seed, const AugmentOptions& options = {});

}  // namespace stdeep::clip
