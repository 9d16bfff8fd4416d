#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "stdeep/manifest.hpp"

namespace stdeep::synth {

/// Rendering knobs for pristine videos.
struct RealParams {
    int size = 64;
    double brightness_rho = 0.9;     ///< AR(1) coefficient of the global brightness
    double brightness_sigma = 10.0;  ///< stationary std, gray levels
    double motion_px = 1.5;          ///< amplitude of the head sway
    double motion_heavy_px = 5.0;    ///< amplitude used for motion_heavy videos
};

/// Face ellipse of one frame: centre and radii in pixels.
struct FaceGeometry {
    double cx = 0.0;
    double cy = 0.0;
    double rx = 0.0;
    double ry = 0.0;
};

/// Frames plus what was used to render them.
struct SynthVideo {
    std::vector<cv::Mat> frames;     ///< 8-bit RGB
    std::vector<int> brightness;     ///< integer offset added to every pixel of frame t
    std::vector<FaceGeometry> face;  ///< per-frame face ellipse
};

SynthVideo generate_real(std::uint64_t seed, int n_frames, const RealParams& params = {}, bool motion_heavy = false);

enum class MethodKind { BlendBoundary, TemporalFlicker, WarpJitter, SharpSeam };

/**
 * One fake-generation method. The short name (M1..M4) is what manifests
 * and command lines use. Setting every magnitude to zero yields the
 * identity transform.
 */
struct SynthMethod {
    MethodKind kind = MethodKind::BlendBoundary;
    double edge_jitter_px = 2.0;  ///< M1
    double tint = 14.0;           ///< M1, gray levels added to the inner region
    double flicker = 1.0;         ///< M2, fraction of brightness variance redrawn i.i.d.
    double warp_px = 1.5;         ///< M3
    double seam_contrast = 1.0;   ///< M4, blend weight of the fixed seam pattern
    int seam_width = 2;           ///< M4; the pattern uses 2 x 2 cells so it survives a 2x downscale

    std::string short_name() const;
    std::string long_name() const;
};

/// Accepts M1..M4 or the long names; throws UnknownMethod.
SynthMethod method_by_name(const std::string& name);
std::vector<SynthMethod> default_methods();

/// Turns a real video into a fake one. Throws UnknownMethod for an invalid kind.
SynthVideo apply_method(const SynthVideo& real, const SynthMethod& method, std::uint64_t seed,
                        const RealParams& params = {});

struct CorpusConfig {
    int real_train = 72;
    int real_val = 14;
    int real_test = 14;
    int motion_heavy_test = 0;  ///< extra test reals (with fakes) rendered with heavy motion
    int min_frames = 16;
    int max_frames = 28;
    RealParams real;
    std::vector<SynthMethod> methods = default_methods();
};

/**
 * Renders every video and writes `<out>/frames/<id>/<k>.png` plus
 * `<out>/manifest.jsonl`. Each fake derives from a real video of the same
 * split. Output is a pure function of (config, seed).
 */
CorpusManifest build_corpus(const CorpusConfig& config, std::uint64_t seed, const std::filesystem::path& out_dir);

/// Same records as build_corpus would write, without touching disk.
CorpusManifest plan_corpus(const CorpusConfig& config, std::uint64_t seed);

/// Renders one planned record (real or fake) in memory.
SynthVideo render_record(const CorpusConfig& config, std::uint64_t seed, const VideoRecord& record);

}  // namespace stdeep::synth
