#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stdeep/clipper.hpp"
#include "stdeep/encoders.hpp"
#include "stdeep/manifest.hpp"

namespace stdeep::train {

enum class SchedulerKind { Plateau, Multiplicative };
std::string scheduler_name(SchedulerKind kind);
SchedulerKind parse_scheduler(const std::string& name);

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = -1.0;  ///< negative: family default (1e-7 st3d, 1e-5 otherwise)
    int batch_size = 8;
    SchedulerKind scheduler = SchedulerKind::Plateau;
    int patience = 5;
    double factor = 0.1;
    std::vector<int> milestones{10};
    int max_epochs = 20;
    int early_stop = 10;  ///< epochs without validation improvement before stopping
    std::uint64_t seed = 0;
    bool augment = true;
    clip::AugmentOptions augment_options{};
    int image_frames = 1;  ///< frames per training sample for image2d
    int eval_stride = 0;   ///< inference window stride; 0 means clip_len

    double resolved_weight_decay(enc::Family family) const;
    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// Desk defaults for a family (learning rate tuned for training from scratch).
TrainConfig desk_config(enc::Family family);
/// Desk defaults with small batch sizes: 2 recurrent, 4 st3d, 8 image.
TrainConfig small_batch_config(enc::Family family);

struct BatchEntry {
    std::string video_id;
    int label = 0;
    std::string method;
};

struct BatchPlan {
    std::vector<BatchEntry> entries;
    int real_count = 0;
    int fake_count = 0;
};

/**
 * One epoch of balanced batches over a split. Each batch holds
 * batch_size/2 reals and as many fakes; the epoch ends once every real has
 * been used (the final batch may be smaller but stays balanced). Fake slots
 * cycle through a per-epoch shuffled method order and each method's pool is
 * reshuffled when exhausted.
 */
std::vector<BatchPlan> plan_epoch(const CorpusManifest& manifest, Split split, int batch_size, std::uint64_t seed,
                                  int epoch);
/// The first epoch's plan on the training split.
std::vector<BatchPlan> plan_balanced_batches(const CorpusManifest& manifest, int batch_size, std::uint64_t seed);

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(const std::vector<double>& logits, const std::vector<int>& labels);
/// Same clamp applied to a probability.
double log_loss(double probability, int label);

/// Learning-rate schedule driven by per-epoch validation losses.
class LrScheduler {
public:
    explicit LrScheduler(const TrainConfig& config);
    double lr() const { return lr_; }
    /// Call after epoch `epoch` (0-based) finished; sets the rate for the next one.
    void step(int epoch, double val_loss);

private:
    TrainConfig config_;
    double lr_;
    double best_;
    int bad_ = 0;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
    nlohmann::json to_json() const;
};

struct TrainHooks {
    std::filesystem::path log_path;         ///< JSONL, one record per epoch (optional)
    std::filesystem::path checkpoint_path;  ///< best-validation checkpoint (optional)
    nlohmann::json provenance = nlohmann::json::object();
    std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    double final_train_loss = 0.0;
};

/**
 * Trains in place and leaves the model holding the weights of the epoch
 * with the lowest validation loss. Validation loss is the class-balanced
 * log-loss of video-level scores. Throws Diverged on a non-finite loss.
 */
TrainResult train(enc::Encoder& model, const CorpusManifest& manifest, const TrainConfig& config,
                  FrameCache& cache, const TrainHooks& hooks = {});

/// Class-balanced mean log-loss of video scores over a split.
double validation_loss(const enc::Encoder& model, const CorpusManifest& manifest, Split split, FrameCache& cache,
                       int stride = 0);

/// Training tensor for one sample: frame sampling, augmentation and normalisation.
nn::Tensor training_sample(const enc::EncoderSpec& spec, const TrainConfig& config,
                           const std::vector<cv::Mat>& frames, std::uint64_t seed);

}  // namespace stdeep::train
