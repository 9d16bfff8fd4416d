#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>

#include "stdeep/encoders.hpp"
#include "stdeep/manifest.hpp"
#include "stdeep/trainer.hpp"

namespace stdeep::eval {

double sigmoid(double z);

/**
 * Video-level fake probability. Video encoders average the sigmoid of every
 * inference window (stride 0 means clip_len); image encoders average the
 * per-frame sigmoids over all frames.
 */
double score_video(const enc::Encoder& model, const std::vector<cv::Mat>& frames, int stride = 0);
/// Per-window (video encoders) or per-frame (image encoders) probabilities.
std::vector<double> unit_probabilities(const enc::Encoder& model, const std::vector<cv::Mat>& frames, int stride = 0);

using ScoreMap = std::map<std::string, double>;
ScoreMap score_split(const enc::Encoder& model, const CorpusManifest& manifest, Split split, FrameCache& cache,
                     int stride = 0);

/// Percentages in [0, 100].
struct ClassPrecisionTable {
    std::map<std::string, double> per_method;
    double real_acc = 0.0;
    double fake_acc = 0.0;
    double overall_avg = 0.0;
    std::map<std::string, int> counts;  ///< videos per class ("real" and each method)

    nlohmann::json to_json() const;
    static ClassPrecisionTable from_json(const nlohmann::json& j);
};

/// fake_acc is the unweighted mean of the per-method values; overall is (real + fake) / 2.
ClassPrecisionTable table_from_rates(const std::map<std::string, double>& per_method, double real_acc);

/**
 * Per method: share of its videos with score > threshold. Real: share of
 * reals with score <= threshold. Every video of the split needs a score
 * (MissingScores otherwise).
 */
ClassPrecisionTable class_precision_table(const ScoreMap& scores, const CorpusManifest& manifest,
                                          double threshold = 0.5, Split split = Split::Test);

/// Two-decimal rounding used for reported percentages.
double reported(double percentage);
/// Difference of the reported (two-decimal) overall averages.
double drop(const ClassPrecisionTable& run, const ClassPrecisionTable& baseline);

using MethodGroup = std::set<std::string>;
std::string group_name(const MethodGroup& group);
/// "singletons" or "A,B;C,D"; validated against the available methods.
std::vector<MethodGroup> parse_groups(const std::string& spec, const std::vector<std::string>& methods);

struct CampaignRun {
    std::string name;  ///< "baseline" or the joined group
    MethodGroup left_out;
    ClassPrecisionTable table;
    double drop = 0.0;
    train::TrainResult training;
    std::vector<std::string> test_ids;
    std::filesystem::path checkpoint;
};

struct LeaveOutCampaign {
    CampaignRun baseline;
    std::vector<CampaignRun> runs;
    double avg_drop = 0.0;

    nlohmann::json to_json() const;
    /// One row per run: name, left_out, real, each method, fake, avg, drop.
    std::string to_csv() const;
};

struct CampaignOptions {
    std::filesystem::path out_dir;  ///< checkpoints and logs per run (optional)
    double threshold = 0.5;
    std::function<void(const std::string& run, const train::EpochLog&)> on_epoch;
};

/**
 * Baseline on all methods, then one fresh model per group trained with the
 * group's fakes removed from train and val. Every run starts from the same
 * initial weights and is tested on the same test split.
 */
LeaveOutCampaign run_leave_out_campaign(const enc::EncoderSpec& spec, const CorpusManifest& manifest,
                                        const std::vector<MethodGroup>& groups, const train::TrainConfig& config,
                                        const CampaignOptions& options = {});

/// Recomputes drops and the average from the stored tables.
void finalize_campaign(LeaveOutCampaign& campaign);

struct CrossDatasetResult {
    ClassPrecisionTable table;
    std::string source_manifest;
    std::string target_manifest;
};

/**
 * Scores a foreign manifest's test split with no retraining. Refuses a
 * target whose fingerprint equals the model's training manifest.
 */
CrossDatasetResult cross_dataset_eval(const enc::Encoder& model, const std::string& training_fingerprint,
                                      const CorpusManifest& foreign, double threshold = 0.5);

}  // namespace stdeep::eval
