#include "stdeep/probes.hpp"

#include <algorithm>
#include <numeric>

#include "stdeep/clipper.hpp"
#include "stdeep/error.hpp"
#include "stdeep/evalkit.hpp"
#include "stdeep/seed.hpp"
#include "stdeep/trainer.hpp"

namespace stdeep::probe {

using nlohmann::json;

std::string PerturbationSpec::name() const {
    switch (kind) {
        case PerturbKind::None: return "original";
        case PerturbKind::FlipRandom: return "flip" + std::to_string(n);
        case PerturbKind::FlipEvery2nd: return "flip_every_2nd";
        case PerturbKind::Shuffle: return "shuffle";
    }
    return "original";
}

PerturbationSpec PerturbationSpec::parse(const std::string& name, std::uint64_t seed) {
    PerturbationSpec s;
    s.seed = seed;
    if (name == "original") return s;
    if (name == "flip_every_2nd") {
        s.kind = PerturbKind::FlipEvery2nd;
        return s;
    }
    if (name == "shuffle") {
        s.kind = PerturbKind::Shuffle;
        return s;
    }
    if (name.rfind("flip", 0) == 0 && name.size() > 4 &&
        std::all_of(name.begin() + 4, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        s.kind = PerturbKind::FlipRandom;
        s.n = std::stoi(name.substr(4));
        return s;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown perturbation '" + name + "'");
}

std::vector<PerturbationSpec> default_battery(std::uint64_t seed) {
    std::vector<PerturbationSpec> out;
    for (const char* n : {"original", "flip1", "flip3", "flip5", "flip_every_2nd", "shuffle"})
        out.push_back(PerturbationSpec::parse(n, seed));
    return out;
}

std::vector<int> flipped_indices(int n_frames, const PerturbationSpec& spec) {
    std::vector<int> out;
    if (spec.kind == PerturbKind::FlipEvery2nd) {
        for (int i = 1; i < n_frames; i += 2) out.push_back(i);
    } else if (spec.kind == PerturbKind::FlipRandom) {
        if (spec.n < 0 || spec.n > n_frames)
            throw Error(ErrorKind::BadN, "cannot flip " + std::to_string(spec.n) + " of " + std::to_string(n_frames) +
                                             " frames");
        std::vector<int> all(static_cast<std::size_t>(n_frames));
        std::iota(all.begin(), all.end(), 0);
        Rng rng = make_rng(derive_seed(spec.seed, "flip"));
        // partial Fisher-Yates: the first n entries are a uniform n-subset
        for (int i = 0; i < spec.n; ++i) {
            std::uniform_int_distribution<int> d(i, n_frames - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(d(rng))]);
        }
        out.assign(all.begin(), all.begin() + spec.n);
        std::sort(out.begin(), out.end());
    }
    return out;
}

std::vector<int> shuffle_permutation(int n_frames, const PerturbationSpec& spec) {
    std::vector<int> perm(static_cast<std::size_t>(n_frames));
    std::iota(perm.begin(), perm.end(), 0);
    if (spec.kind == PerturbKind::Shuffle) {
        Rng rng = make_rng(derive_seed(spec.seed, "shuffle"));
        std::shuffle(perm.begin(), perm.end(), rng);
    }
    return perm;
}

std::vector<cv::Mat> perturb(const std::vector<cv::Mat>& frames, const PerturbationSpec& spec) {
    const int n = static_cast<int>(frames.size());
    std::vector<cv::Mat> out;
    out.reserve(frames.size());
    for (int i : shuffle_permutation(n, spec)) out.push_back(frames[static_cast<std::size_t>(i)]);
    for (int i : flipped_indices(n, spec)) out[static_cast<std::size_t>(i)] = clip::hflip(out[static_cast<std::size_t>(i)]);
    return out;
}

double ProbeReport::at(const std::string& cls, const std::string& column) const {
    const auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end() || !logloss.count(cls))
        throw Error(ErrorKind::InvalidArgument, "no entry for " + cls + "/" + column);
    return logloss.at(cls)[static_cast<std::size_t>(it - columns.begin())];
}

json ProbeReport::to_json() const {
    json rows = json::array();
    for (const auto& [cls, values] : logloss) {
        json row{{"class", cls}, {"count", counts.count(cls) ? counts.at(cls) : 0}};
        for (std::size_t i = 0; i < columns.size(); ++i) row[columns[i]] = values[i];
        rows.push_back(row);
    }
    return json{{"columns", columns}, {"rows", rows}};
}

double perturbed_score(const enc::Encoder& model, const std::vector<cv::Mat>& frames, const PerturbationSpec& spec,
                       const std::string& video_id, int stride) {
    if (frames.empty()) throw Error(ErrorKind::NoFrames, "video has no frames");
    const auto& s = model.spec();
    // image encoders have no clip: the whole video is the perturbation unit
    if (!enc::is_video_family(s.family)) {
        PerturbationSpec ws = spec;
        ws.seed = derive_seed(spec.seed, video_id, 0);
        return eval::score_video(model, perturb(frames, ws));
    }
    const auto plan = clip::plan_inference_windows(static_cast<int>(frames.size()), s.clip_len,
                                                   stride > 0 ? stride : s.clip_len);
    double acc = 0.0;
    for (std::size_t w = 0; w < plan.starts.size(); ++w) {
        PerturbationSpec ws = spec;
        ws.seed = derive_seed(spec.seed, video_id, w);
        const auto window = perturb(clip::gather(frames, plan.indices(w)), ws);
        acc += eval::score_video(model, window);
    }
    return acc / static_cast<double>(plan.starts.size());
}

ProbeReport run_perturbation_battery(const enc::Encoder& model, const std::vector<const VideoRecord*>& samples,
                                     const std::vector<PerturbationSpec>& specs, FrameCache& cache, int stride) {
    ProbeReport report;
    for (const auto& s : specs) report.columns.push_back(s.name());
    std::map<std::string, std::vector<double>> sums;
    for (const auto* r : samples) {
        const std::string cls = r->fake ? "fake" : "real";
        auto& row = sums[cls];
        row.resize(specs.size(), 0.0);
        report.counts[cls]++;
        const auto& frames = cache.get(*r);
        for (std::size_t k = 0; k < specs.size(); ++k)
            row[k] += train::log_loss(perturbed_score(model, frames, specs[k], r->id, stride), r->label());
    }
    for (auto& [cls, row] : sums) {
        for (double& v : row) v /= report.counts[cls];
        report.logloss[cls] = row;
    }
    return report;
}

std::vector<double> video_feature(const enc::Encoder& model, const std::vector<cv::Mat>& frames) {
    if (frames.empty()) throw Error(ErrorKind::NoFrames, "video has no frames");
    const auto& s = model.spec();
    if (enc::is_video_family(s.family)) {
        const auto clip = clip::gather(frames, clip::looped_indices(static_cast<int>(frames.size()), 0, s.clip_len));
        return model.forward(clip::to_clip_tensor(clip, s.normalization, s.resolution)).features.at(0);
    }
    std::vector<double> mean;
    std::size_t count = 0;
    for (std::size_t start = 0; start < frames.size(); start += 32) {
        const std::vector<cv::Mat> part(frames.begin() + static_cast<std::ptrdiff_t>(start),
                                        frames.begin() + static_cast<std::ptrdiff_t>(std::min(frames.size(), start + 32)));
        for (const auto& f : model.forward(clip::to_clip_tensor(part, s.normalization, s.resolution)).features) {
            if (mean.empty()) mean.assign(f.size(), 0.0);
            for (std::size_t i = 0; i < f.size(); ++i) mean[i] += f[i];
            ++count;
        }
    }
    for (double& v : mean) v /= static_cast<double>(count);
    return mean;
}

FeatureTable extract_features(const enc::Encoder& model, const std::vector<const VideoRecord*>& records,
                              FrameCache& cache) {
    FeatureTable t;
    for (const auto* r : records) {
        t.ids.push_back(r->id);
        t.methods.push_back(r->method);
        t.labels.push_back(r->label());
        t.rows.push_back(video_feature(model, cache.get(*r)));
    }
    return t;
}

}  // namespace stdeep::probe
