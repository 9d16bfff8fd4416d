#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>

#include "stdeep/encoders.hpp"
#include "stdeep/manifest.hpp"

namespace stdeep::probe {

enum class PerturbKind { None, FlipRandom, FlipEvery2nd, Shuffle };

struct PerturbationSpec {
    PerturbKind kind = PerturbKind::None;
    int n = 0;  ///< FlipRandom only
    std::uint64_t seed = 0;

    /// original, flip<n>, flip_every_2nd, shuffle
    std::string name() const;
    static PerturbationSpec parse(const std::string& name, std::uint64_t seed = 0);
};

/// original, flip1, flip3, flip5, flip_every_2nd, shuffle.
std::vector<PerturbationSpec> default_battery(std::uint64_t seed = 0);

/// Frames mirrored by a flip spec, ascending; empty for other kinds.
std::vector<int> flipped_indices(int n_frames, const PerturbationSpec& spec);
/// Output position i holds input frame perm[i]; identity unless shuffling.
std::vector<int> shuffle_permutation(int n_frames, const PerturbationSpec& spec);

/// Applies the perturbation; throws BadN when a flip count exceeds the clip.
std::vector<cv::Mat> perturb(const std::vector<cv::Mat>& frames, const PerturbationSpec& spec);

struct ProbeReport {
    std::vector<std::string> columns;                       ///< spec names in battery order
    std::map<std::string, std::vector<double>> logloss;     ///< class ("real", "fake") -> per column
    std::map<std::string, int> counts;                      ///< videos per class
    /// Loss of one class under one column; throws InvalidArgument for unknown names.
    double at(const std::string& cls, const std::string& column) const;
    nlohmann::json to_json() const;
};

/**
 * Video encoders: each video is cut into inference windows, every window
 * is perturbed independently (per-window seed) and scored, and the video
 * probability is the mean over windows. Image encoders perturb the whole
 * video once and average all frame probabilities.
 * Reports per-class mean log-loss for every spec.
 */
ProbeReport run_perturbation_battery(const enc::Encoder& model, const std::vector<const VideoRecord*>& samples,
                                     const std::vector<PerturbationSpec>& specs, FrameCache& cache, int stride = 0);

/// Video probability with every window perturbed by spec (seeded per video and window).
double perturbed_score(const enc::Encoder& model, const std::vector<cv::Mat>& frames, const PerturbationSpec& spec,
                       const std::string& video_id, int stride = 0);

struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::string> methods;  ///< "real" for pristine
    std::vector<int> labels;
    std::vector<std::vector<double>> rows;
};

/// Image encoders average per-frame descriptors over all frames; video encoders use the first clip_len frames.
std::vector<double> video_feature(const enc::Encoder& model, const std::vector<cv::Mat>& frames);
FeatureTable extract_features(const enc::Encoder& model, const std::vector<const VideoRecord*>& records,
                              FrameCache& cache);

struct TsneOptions {
    double perplexity = 40.0;
    int iterations = 2500;
    std::uint64_t seed = 0;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    nlohmann::json to_json() const;
};

/// Exact t-SNE to two dimensions. Throws TooFewRows below 3 * perplexity rows.
std::vector<std::array<double, 2>> embed_2d(const std::vector<std::vector<double>>& rows, const TsneOptions& options = {});

struct ActivationMap {
    std::vector<cv::Mat> heatmaps;  ///< one CV_64F H x W map per input frame, values in [0, 1]
    double prediction = 0.0;       ///< fake probability of the clip
    nn::Shape activation_shape;    ///< [C, T', H', W'] of the mapped block
};

/**
 * Gradient-weighted activation map of the fake logit over the encoder's last
 * convolutional block. Channel weights are averages of the gradient over the
 * block (per frame for frame-wise encoders); the map is upsampled nearest in
 * time and bilinear in space and scaled to a per-clip maximum of 1.
 */
ActivationMap grad_cam(const enc::Encoder& model, const nn::Tensor& clip);

}  // namespace stdeep::probe
