#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stdeep/clipper.hpp"
#include "stdeep/nn/archive.hpp"
#include "stdeep/nn/layers.hpp"

namespace stdeep::enc {

enum class Family { Image2d, SeqLstm, SeqBigru, St3dResidual, St3dInception };

std::string family_name(Family family);
/// Accepts the family names plus the short aliases image, lstm, bigru, st3d, inception.
Family parse_family(const std::string& name);
bool is_video_family(Family family);
bool is_sequential(Family family);

/**
 * Declarative encoder description. Widths are the full-scale widths times
 * width_multiplier (never below 1). Fields that a family does not use are
 * ignored by it.
 */
struct EncoderSpec {
    Family family = Family::St3dResidual;
    std::string preset = "custom";
    double width_multiplier = 1.0;
    int resolution = 224;
    clip::Normalization normalization = clip::Normalization::ImageNet;
    int clip_len = 16;
    double dropout_p = 0.0;

    // st3d
    int n_stages = 4;
    std::vector<int> stage_temporal_strides{1, 1, 1, 1};
    int blocks_per_stage = 2;

    // image2d and the backbone of the sequential families
    int n_blocks = 25;

    // sequential heads
    int hidden = 256;
    int fc_hidden = 64;
    int frozen_blocks = -1;  ///< bigru: -1 means ceil(0.8 * n_blocks)

    std::uint64_t init_seed = 0;

    int resolved_frozen_blocks() const;
    void validate() const;
    nlohmann::json to_json() const;
    static EncoderSpec from_json(const nlohmann::json& j);
};

/**
 * Named presets. Full scale: xception_like, efficient_like, r3d18_like,
 * i3d_like, lstm_like, bigru_like. Desk scale: desk_image2d, desk_st3d,
 * desk_st3d_original (temporal strides 2 at stages 2-4), desk_inception,
 * desk_lstm, desk_bigru. Throws BadSpec for unknown names.
 */
EncoderSpec preset(const std::string& name);
std::vector<std::string> preset_names();
/// Desk preset for a family.
EncoderSpec desk_preset(Family family);

/// Result of one recorded forward pass.
struct Graph {
    nn::Var logits;     ///< [T] per frame (image2d) or [1]
    nn::Var features;   ///< [T, C] per frame (image2d) or [C]
    nn::Var last_conv;  ///< last convolutional activation, [C, T', H', W']
    std::vector<nn::Shape> stage_shapes;
};

/// Plain-value result for inference callers.
struct EncoderOutput {
    std::vector<double> logits;
    std::vector<std::vector<double>> features;
    std::vector<nn::Shape> stage_shapes;  ///< per-stage activation shapes, last one is pre-pool
    /// Mean of the per-output sigmoid probabilities.
    double probability() const;
};

class Encoder {
public:
    virtual ~Encoder() = default;

    const EncoderSpec& spec() const { return spec_; }
    nn::ParameterStore& params() { return params_; }
    const nn::ParameterStore& params() const { return params_; }

    /// Clip [3, T, H, W] to the last convolutional activation.
    virtual nn::Var trunk(const nn::Var& clip, std::vector<nn::Shape>* stage_shapes) const = 0;
    /// Last convolutional activation to logits and features.
    virtual Graph head(const nn::Var& activation, bool training, Rng& rng) const = 0;
    /// True when trunk output frames map one-to-one onto input frames.
    virtual bool framewise() const { return false; }

    /// trunk then head; input must be a [3, T, H, W] clip.
    Graph run(const nn::Var& clip, bool training, Rng& rng) const;
    /// Evaluation-mode forward (no dropout); deterministic.
    EncoderOutput forward(const nn::Tensor& clip) const;

    std::size_t parameter_count() const { return params_.scalar_count(); }

protected:
    explicit Encoder(EncoderSpec spec) : spec_(std::move(spec)) {}
    EncoderSpec spec_;
    nn::ParameterStore params_;
};

std::unique_ptr<Encoder> build_image2d(const EncoderSpec& spec);
/// Backbone weights are copied from `backbone`; all of them are frozen.
std::unique_ptr<Encoder> build_seq_lstm(const EncoderSpec& spec, const Encoder& backbone);
/// Backbone weights are copied; the first resolved_frozen_blocks() blocks (and the stem) are frozen.
std::unique_ptr<Encoder> build_seq_bigru(const EncoderSpec& spec, const Encoder& backbone);
std::unique_ptr<Encoder> build_st3d(const EncoderSpec& spec);
/// Any family; sequential families get a freshly initialised backbone.
std::unique_ptr<Encoder> build(const EncoderSpec& spec);

/// The backbone spec a sequential spec expects.
EncoderSpec backbone_spec(const EncoderSpec& seq_spec);

/// Saves weights plus the spec (and optional extra metadata) as an archive.
void save_checkpoint(const std::filesystem::path& path, const Encoder& model,
                     const nlohmann::json& extra = nlohmann::json::object());
/// Rebuilds the model from the stored spec and restores its weights.
std::unique_ptr<Encoder> load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

/// Copies every parameter value from `from` into the same-named parameter of `to`.
void copy_weights(const Encoder& from, Encoder& to);

}  // namespace stdeep::enc
