#include "stdeep/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "stdeep/error.hpp"
#include "stdeep/evalkit.hpp"
#include "stdeep/nn/adam.hpp"
#include "stdeep/nn/archive.hpp"
#include "stdeep/seed.hpp"

namespace stdeep::train {

using nlohmann::json;

std::string scheduler_name(SchedulerKind kind) {
    return kind == SchedulerKind::Plateau ? "plateau" : "multiplicative";
}

SchedulerKind parse_scheduler(const std::string& name) {
    if (name == "plateau") return SchedulerKind::Plateau;
    if (name == "multiplicative" || name == "multistep") return SchedulerKind::Multiplicative;
    throw Error(ErrorKind::InvalidArgument, "unknown scheduler '" + name + "'");
}

double TrainConfig::resolved_weight_decay(enc::Family family) const {
    if (weight_decay >= 0.0) return weight_decay;
    return family == enc::Family::St3dResidual || family == enc::Family::St3dInception ? 1e-7 : 1e-5;
}

void TrainConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidArgument, m); };
    if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr must be positive");
    if (!(factor > 0.0 && factor < 1.0)) bad("factor must lie in (0, 1)");
    if (patience < 1) bad("patience must be >= 1");
    if (batch_size < 2 || batch_size % 2 != 0) bad("batch_size must be even and >= 2");
    if (max_epochs < 1) bad("max_epochs must be >= 1");
    if (early_stop < 1) bad("early_stop must be >= 1");
    if (image_frames < 1) bad("image_frames must be >= 1");
    if (eval_stride < 0) bad("eval_stride must be >= 0");
    for (int m : milestones)
        if (m < 1) bad("milestones must be >= 1");
}

json TrainConfig::to_json() const {
    return json{{"lr", lr},
                {"weight_decay", weight_decay},
                {"batch_size", batch_size},
                {"scheduler", scheduler_name(scheduler)},
                {"patience", patience},
                {"factor", factor},
                {"milestones", milestones},
                {"max_epochs", max_epochs},
                {"early_stop", early_stop},
                {"seed", seed},
                {"augment", augment},
                {"image_frames", image_frames},
                {"eval_stride", eval_stride},
                {"adam", {{"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    try {
        c.lr = j.value("lr", c.lr);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.batch_size = j.value("batch_size", c.batch_size);
        if (j.contains("scheduler")) c.scheduler = parse_scheduler(j["scheduler"].get<std::string>());
        c.patience = j.value("patience", c.patience);
        c.factor = j.value("factor", c.factor);
        c.milestones = j.value("milestones", c.milestones);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.early_stop = j.value("early_stop", c.early_stop);
        c.seed = j.value("seed", c.seed);
        c.augment = j.value("augment", c.augment);
        c.image_frames = j.value("image_frames", c.image_frames);
        c.eval_stride = j.value("eval_stride", c.eval_stride);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed train config: ") + e.what());
    }
    c.validate();
    return c;
}

TrainConfig desk_config(enc::Family family) {
    TrainConfig c;
    c.batch_size = 8;
    c.max_epochs = family == enc::Family::Image2d ? 30 : 20;
    return c;
}

TrainConfig small_batch_config(enc::Family family) {
    TrainConfig c = desk_config(family);
    switch (family) {
        case enc::Family::Image2d: c.batch_size = 8; break;
        case enc::Family::SeqLstm:
        case enc::Family::SeqBigru: c.batch_size = 2; break;
        case enc::Family::St3dResidual:
        case enc::Family::St3dInception: c.batch_size = 4; break;
    }
    return c;
}

std::vector<BatchPlan> plan_epoch(const CorpusManifest& manifest, Split split, int batch_size, std::uint64_t seed,
                                  int epoch) {
    if (batch_size < 2 || batch_size % 2 != 0)
        throw Error(ErrorKind::InvalidArgument, "batch_size must be even and >= 2");
    std::vector<const VideoRecord*> reals;
    std::map<std::string, std::vector<const VideoRecord*>> pools;
    for (const auto* r : manifest.in_split(split)) {
        if (r->fake) pools[r->method].push_back(r);
        else reals.push_back(r);
    }
    if (reals.empty()) throw Error(ErrorKind::BadManifest, "no real videos in the " + split_name(split) + " split");
    if (pools.empty()) throw Error(ErrorKind::BadManifest, "no fake videos in the " + split_name(split) + " split");

    Rng rng = make_rng(derive_seed(seed, "plan", static_cast<std::uint64_t>(epoch)));
    std::shuffle(reals.begin(), reals.end(), rng);
    std::vector<std::string> order;
    for (auto& [method, pool] : pools) {
        order.push_back(method);
        std::shuffle(pool.begin(), pool.end(), rng);
    }
    std::shuffle(order.begin(), order.end(), rng);
    std::map<std::string, std::size_t> cursor;

    const std::size_t half = static_cast<std::size_t>(batch_size / 2);
    std::vector<BatchPlan> plans;
    std::size_t slot = 0;
    for (std::size_t i = 0; i < reals.size(); i += half) {
        BatchPlan b;
        const std::size_t end = std::min(reals.size(), i + half);
        for (std::size_t k = i; k < end; ++k) b.entries.push_back({reals[k]->id, 0, "real"});
        b.real_count = static_cast<int>(end - i);
        for (int k = 0; k < b.real_count; ++k) {
            const std::string& method = order[slot++ % order.size()];
            auto& pool = pools[method];
            std::size_t& c = cursor[method];
            if (c == pool.size()) {
                std::shuffle(pool.begin(), pool.end(), rng);
                c = 0;
            }
            b.entries.push_back({pool[c++]->id, 1, method});
        }
        b.fake_count = b.real_count;
        plans.push_back(std::move(b));
    }
    return plans;
}

std::vector<BatchPlan> plan_balanced_batches(const CorpusManifest& manifest, int batch_size, std::uint64_t seed) {
    return plan_epoch(manifest, Split::Train, batch_size, seed, 0);
}

double log_loss(double p, int label) {
    p = std::clamp(p, 1e-7, 1.0 - 1e-7);
    return label ? -std::log(p) : -std::log(1.0 - p);
}

double bce_loss(const std::vector<double>& logits, const std::vector<int>& labels) {
    if (logits.size() != labels.size()) throw Error(ErrorKind::InvalidArgument, "logits and labels differ in length");
    if (logits.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) acc += log_loss(eval::sigmoid(logits[i]), labels[i]);
    return acc / static_cast<double>(logits.size());
}

LrScheduler::LrScheduler(const TrainConfig& config)
    : config_(config), lr_(config.lr), best_(std::numeric_limits<double>::infinity()) {}

void LrScheduler::step(int epoch, double val_loss) {
    if (config_.scheduler == SchedulerKind::Plateau) {
        if (val_loss < best_) {
            best_ = val_loss;
            bad_ = 0;
        } else if (++bad_ >= config_.patience) {
            lr_ *= config_.factor;
            bad_ = 0;
        }
        return;
    }
    // the rate used in epoch e is lr * factor^(milestones <= e)
    for (int m : config_.milestones)
        if (m == epoch + 1) lr_ *= config_.factor;
}

json EpochLog::to_json() const {
    return json{{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss}, {"lr", lr}, {"seconds", seconds}};
}

nn::Tensor training_sample(const enc::EncoderSpec& spec, const TrainConfig& config, const std::vector<cv::Mat>& frames,
                           std::uint64_t seed) {
    if (frames.empty()) throw Error(ErrorKind::NoFrames, "video has no frames");
    std::vector<cv::Mat> picked;
    if (spec.family == enc::Family::Image2d) {
        Rng rng = make_rng(derive_seed(seed, "frames"));
        std::uniform_int_distribution<int> d(0, static_cast<int>(frames.size()) - 1);
        for (int i = 0; i < config.image_frames; ++i) picked.push_back(frames[static_cast<std::size_t>(d(rng))]);
    } else {
        picked = clip::sample_training_clip(frames, spec.clip_len, derive_seed(seed, "window"));
    }
    if (config.augment) picked = clip::augment(picked, derive_seed(seed, "augment"), config.augment_options);
    return clip::to_clip_tensor(picked, spec.normalization, spec.resolution);
}

double validation_loss(const enc::Encoder& model, const CorpusManifest& manifest, Split split, FrameCache& cache,
                       int stride) {
    double sums[2] = {0.0, 0.0};
    int counts[2] = {0, 0};
    for (const auto* r : manifest.in_split(split)) {
        const double p = eval::score_video(model, cache.get(*r), stride);
        sums[r->label()] += log_loss(p, r->label());
        counts[r->label()]++;
    }
    if (counts[0] == 0 && counts[1] == 0) throw Error(ErrorKind::BadManifest, "empty " + split_name(split) + " split");
    if (counts[0] == 0) return sums[1] / counts[1];
    if (counts[1] == 0) return sums[0] / counts[0];
    return 0.5 * (sums[0] / counts[0] + sums[1] / counts[1]);
}

TrainResult train(enc::Encoder& model, const CorpusManifest& manifest, const TrainConfig& config, FrameCache& cache,
                  const TrainHooks& hooks) {
    config.validate();
    const auto& spec = model.spec();
    nn::Adam opt(model.params(), {.lr = config.lr, .weight_decay = config.resolved_weight_decay(spec.family)});
    LrScheduler sched(config);

    std::ofstream log_file;
    if (!hooks.log_path.empty()) {
        if (hooks.log_path.has_parent_path()) std::filesystem::create_directories(hooks.log_path.parent_path());
        log_file.open(hooks.log_path);
        if (!log_file) throw Error(ErrorKind::Io, "cannot write " + hooks.log_path.string());
    }

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    nn::Archive best;
    int since_best = 0;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        opt.set_lr(sched.lr());
        const auto plan = plan_epoch(manifest, Split::Train, config.batch_size, config.seed, epoch);
        double loss_sum = 0.0;
        int samples = 0;
        for (std::size_t b = 0; b < plan.size(); ++b) {
            const auto& batch = plan[b].entries;
            model.params().zero_grad();
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const auto& e = batch[i];
                const VideoRecord* rec = manifest.find(e.video_id);
                const std::uint64_t s = derive_seed(config.seed, "sample", static_cast<std::uint64_t>(epoch), b, i);
                const nn::Tensor x = training_sample(spec, config, cache.get(*rec), s);
                Rng dropout_rng = make_rng(derive_seed(s, "dropout"));
                const auto g = model.run(nn::constant(x), true, dropout_rng);
                const int n = g.logits->value.dim(0);
                std::vector<nn::Var> terms;
                for (int t = 0; t < n; ++t) terms.push_back(nn::bce_with_logits(nn::slice(g.logits, t, 1), e.label));
                const nn::Var loss = nn::mean(terms);
                loss_sum += loss->value[0];
                ++samples;
                nn::backward(loss, 1.0 / static_cast<double>(batch.size()));
            }
            opt.step();
        }
        EpochLog entry;
        entry.epoch = epoch;
        entry.lr = sched.lr();
        entry.train_loss = loss_sum / std::max(1, samples);
        entry.val_loss = validation_loss(model, manifest, Split::Val, cache, config.eval_stride);
        entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back(entry);
        result.final_train_loss = entry.train_loss;
        if (log_file) log_file << entry.to_json().dump() << '\n' << std::flush;
        if (hooks.on_epoch) hooks.on_epoch(entry);
        if (!std::isfinite(entry.val_loss) || !std::isfinite(entry.train_loss))
            throw Error(ErrorKind::Diverged, "non-finite loss at epoch " + std::to_string(epoch));

        if (entry.val_loss < result.best_val_loss) {
            result.best_val_loss = entry.val_loss;
            result.best_epoch = epoch;
            best = nn::snapshot(model.params());
            since_best = 0;
            if (!hooks.checkpoint_path.empty()) {
                json extra = hooks.provenance;
                extra["train_config"] = config.to_json();
                extra["epoch"] = epoch;
                extra["val_loss"] = entry.val_loss;
                extra["train_manifest"] = manifest.fingerprint();
                enc::save_checkpoint(hooks.checkpoint_path, model, extra);
            }
        } else if (++since_best >= config.early_stop) {
            break;
        }
        sched.step(epoch, entry.val_loss);
    }
    nn::restore(model.params(), best, true);
    return result;
}

}  // namespace stdeep::train
