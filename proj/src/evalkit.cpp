#include "stdeep/evalkit.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "stdeep/error.hpp"

namespace stdeep::eval {

using nlohmann::json;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<double> unit_probabilities(const enc::Encoder& model, const std::vector<cv::Mat>& frames, int stride) {
    if (frames.empty()) throw Error(ErrorKind::NoFrames, "video has no frames");
    const auto& spec = model.spec();
    std::vector<double> probs;
    if (!enc::is_video_family(spec.family)) {
        constexpr std::size_t kChunk = 32;
        for (std::size_t s = 0; s < frames.size(); s += kChunk) {
            const std::vector<cv::Mat> part(frames.begin() + static_cast<std::ptrdiff_t>(s),
                                            frames.begin() + static_cast<std::ptrdiff_t>(std::min(frames.size(), s + kChunk)));
            for (double z : model.forward(clip::to_clip_tensor(part, spec.normalization, spec.resolution)).logits)
                probs.push_back(sigmoid(z));
        }
        return probs;
    }
    const auto plan = clip::plan_inference_windows(static_cast<int>(frames.size()), spec.clip_len,
                                                   stride > 0 ? stride : spec.clip_len);
    for (std::size_t w = 0; w < plan.starts.size(); ++w) {
        const auto clip = clip::gather(frames, plan.indices(w));
        probs.push_back(model.forward(clip::to_clip_tensor(clip, spec.normalization, spec.resolution)).probability());
    }
    return probs;
}

double score_video(const enc::Encoder& model, const std::vector<cv::Mat>& frames, int stride) {
    const auto probs = unit_probabilities(model, frames, stride);
    return std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
}

ScoreMap score_split(const enc::Encoder& model, const CorpusManifest& manifest, Split split, FrameCache& cache,
                     int stride) {
    ScoreMap scores;
    for (const auto* r : manifest.in_split(split)) scores[r->id] = score_video(model, cache.get(*r), stride);
    return scores;
}

json ClassPrecisionTable::to_json() const {
    return json{{"per_method", per_method},
                {"real_acc", real_acc},
                {"fake_acc", fake_acc},
                {"overall_avg", overall_avg},
                {"counts", counts}};
}

ClassPrecisionTable ClassPrecisionTable::from_json(const json& j) {
    ClassPrecisionTable t;
    t.per_method = j.at("per_method").get<std::map<std::string, double>>();
    t.real_acc = j.at("real_acc").get<double>();
    t.fake_acc = j.at("fake_acc").get<double>();
    t.overall_avg = j.at("overall_avg").get<double>();
    t.counts = j.value("counts", std::map<std::string, int>{});
    return t;
}

ClassPrecisionTable table_from_rates(const std::map<std::string, double>& per_method, double real_acc) {
    if (per_method.empty()) throw Error(ErrorKind::InvalidArgument, "no fake methods");
    ClassPrecisionTable t;
    t.per_method = per_method;
    t.real_acc = real_acc;
    double acc = 0.0;
    for (const auto& [m, v] : per_method) acc += v;
    t.fake_acc = acc / static_cast<double>(per_method.size());
    t.overall_avg = 0.5 * (t.real_acc + t.fake_acc);
    return t;
}

ClassPrecisionTable class_precision_table(const ScoreMap& scores, const CorpusManifest& manifest, double threshold,
                                          Split split) {
    std::map<std::string, int> hits, counts;
    for (const auto* r : manifest.in_split(split)) {
        auto it = scores.find(r->id);
        if (it == scores.end()) throw Error(ErrorKind::MissingScores, "no score for video " + r->id);
        const std::string key = r->fake ? r->method : "real";
        counts[key]++;
        const bool correct = r->fake ? it->second > threshold : it->second <= threshold;
        hits[key] += correct ? 1 : 0;
    }
    if (!counts.count("real")) throw Error(ErrorKind::MissingScores, "no real videos in the split");
    std::map<std::string, double> per_method;
    for (const auto& [key, n] : counts)
        if (key != "real") per_method[key] = 100.0 * hits[key] / n;
    auto t = table_from_rates(per_method, 100.0 * hits["real"] / counts["real"]);
    t.counts = counts;
    return t;
}

double reported(double percentage) { return std::round(percentage * 100.0) / 100.0; }

double drop(const ClassPrecisionTable& run, const ClassPrecisionTable& baseline) {
    return reported(run.overall_avg) - reported(baseline.overall_avg);
}

std::string group_name(const MethodGroup& group) {
    std::string out;
    for (const auto& m : group) out += (out.empty() ? "" : "+") + m;
    return out;
}

std::vector<MethodGroup> parse_groups(const std::string& spec, const std::vector<std::string>& methods) {
    const std::set<std::string> known(methods.begin(), methods.end());
    std::vector<MethodGroup> groups;
    if (spec == "singletons") {
        for (const auto& m : methods) groups.push_back({m});
        return groups;
    }
    std::stringstream outer(spec);
    std::string part;
    while (std::getline(outer, part, ';')) {
        MethodGroup g;
        std::stringstream inner(part);
        std::string m;
        while (std::getline(inner, m, ',')) {
            m.erase(0, m.find_first_not_of(" \t"));
            m.erase(m.find_last_not_of(" \t") + 1);
            if (m.empty()) continue;
            if (!known.count(m)) throw Error(ErrorKind::UnknownMethod, "method '" + m + "' is not in the manifest");
            g.insert(m);
        }
        if (g.empty()) throw Error(ErrorKind::InvalidArgument, "empty method group in '" + spec + "'");
        groups.push_back(std::move(g));
    }
    if (groups.empty()) throw Error(ErrorKind::InvalidArgument, "no method groups given");
    return groups;
}

json LeaveOutCampaign::to_json() const {
    auto run_json = [](const CampaignRun& r) {
        json log = json::array();
        for (const auto& e : r.training.log) log.push_back(e.to_json());
        return json{{"name", r.name},
                    {"left_out", r.left_out},
                    {"table", r.table.to_json()},
                    {"drop", r.drop},
                    {"best_epoch", r.training.best_epoch},
                    {"best_val_loss", r.training.best_val_loss},
                    {"log", log},
                    {"test_ids", r.test_ids},
                    {"checkpoint", r.checkpoint.string()}};
    };
    json runs = json::array();
    for (const auto& r : this->runs) runs.push_back(run_json(r));
    return json{{"baseline", run_json(baseline)}, {"runs", runs}, {"avg_drop", avg_drop}};
}

std::string LeaveOutCampaign::to_csv() const {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    const auto& methods = baseline.table.per_method;
    out << "run,left_out,real";
    for (const auto& [m, v] : methods) out << ',' << m;
    out << ",fake,avg,drop\n";
    auto row = [&](const CampaignRun& r) {
        out << r.name << ',' << group_name(r.left_out) << ',' << r.table.real_acc;
        for (const auto& [m, v] : methods) {
            auto it = r.table.per_method.find(m);
            out << ',' << (it == r.table.per_method.end() ? 0.0 : it->second);
        }
        out << ',' << r.table.fake_acc << ',' << r.table.overall_avg << ',' << r.drop << '\n';
    };
    row(baseline);
    for (const auto& r : runs) row(r);
    out << "average,,,";
    for (std::size_t i = 0; i < methods.size(); ++i) out << ',';
    out << ",," << avg_drop << '\n';
    return out.str();
}

void finalize_campaign(LeaveOutCampaign& c) {
    c.baseline.drop = 0.0;
    double acc = 0.0;
    for (auto& r : c.runs) {
        r.drop = drop(r.table, c.baseline.table);
        acc += r.drop;
    }
    c.avg_drop = c.runs.empty() ? 0.0 : acc / static_cast<double>(c.runs.size());
}

namespace {

CampaignRun run_one(const std::string& name, const MethodGroup& left_out, const enc::EncoderSpec& spec,
                    const CorpusManifest& manifest, const train::TrainConfig& config, const CampaignOptions& options,
                    FrameCache& cache) {
    const CorpusManifest training_set = manifest.without_methods(left_out);
    bool any_fake = false;
    for (const auto* r : training_set.in_split(Split::Train)) any_fake = any_fake || r->fake;
    if (!any_fake) throw Error(ErrorKind::InvalidArgument, "group " + name + " leaves no fakes to train on");

    CampaignRun run;
    run.name = name;
    run.left_out = left_out;
    auto model = enc::build(spec);
    train::TrainHooks hooks;
    if (!options.out_dir.empty()) {
        const auto dir = options.out_dir / name;
        hooks.log_path = dir / "train_log.jsonl";
        hooks.checkpoint_path = dir / "best.ckpt";
        run.checkpoint = hooks.checkpoint_path;
    }
    hooks.provenance = json{{"campaign_run", name}, {"left_out", left_out}};
    if (options.on_epoch) hooks.on_epoch = [&](const train::EpochLog& e) { options.on_epoch(name, e); };
    run.training = train::train(*model, training_set, config, cache, hooks);
    const auto scores = score_split(*model, manifest, Split::Test, cache, config.eval_stride);
    run.table = class_precision_table(scores, manifest, options.threshold, Split::Test);
    for (const auto* r : manifest.in_split(Split::Test)) run.test_ids.push_back(r->id);
    return run;
}

}  // namespace

LeaveOutCampaign run_leave_out_campaign(const enc::EncoderSpec& spec, const CorpusManifest& manifest,
                                        const std::vector<MethodGroup>& groups, const train::TrainConfig& config,
                                        const CampaignOptions& options) {
    const auto methods = manifest.methods();
    const std::set<std::string> all(methods.begin(), methods.end());
    if (groups.empty()) throw Error(ErrorKind::InvalidArgument, "no method groups given");
    for (const auto& g : groups) {
        if (g.empty()) throw Error(ErrorKind::InvalidArgument, "empty method group");
        for (const auto& m : g)
            if (!all.count(m)) throw Error(ErrorKind::UnknownMethod, "method '" + m + "' is not in the manifest");
        if (g == all) throw Error(ErrorKind::InvalidArgument, "a group may not contain every method");
    }
    FrameCache cache(manifest);
    LeaveOutCampaign c;
    c.baseline = run_one("baseline", {}, spec, manifest, config, options, cache);
    for (const auto& g : groups) c.runs.push_back(run_one(group_name(g), g, spec, manifest, config, options, cache));
    finalize_campaign(c);
    return c;
}

CrossDatasetResult cross_dataset_eval(const enc::Encoder& model, const std::string& training_fingerprint,
                                      const CorpusManifest& foreign, double threshold) {
    const std::string target = foreign.fingerprint();
    if (target == training_fingerprint)
        throw Error(ErrorKind::InvalidArgument, "target manifest is the model's own training manifest");
    FrameCache cache(foreign);
    CrossDatasetResult r;
    r.table = class_precision_table(score_split(model, foreign, Split::Test, cache), foreign, threshold);
    r.source_manifest = training_fingerprint;
    r.target_manifest = target;
    return r;
}

}  // namespace stdeep::eval
