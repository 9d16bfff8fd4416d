#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "run_config.hpp"
#include "stdeep/error.hpp"
#include "stdeep/evalkit.hpp"
#include "stdeep/imageio.hpp"
#include "stdeep/probes.hpp"
#include "stdeep/render.hpp"
#include "stdeep/synthcorpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stdeep;
using namespace stdeep::cli;

namespace {

struct Common {
    std::uint64_t seed = 0;
    int workers = 1;
    std::string config_file;
};

struct SynthArgs {
    std::string out;
    int real_train = 72, real_val = 14, real_test = 14, motion_heavy = 0;
    int min_frames = 16, max_frames = 28, size = 64;
};

struct ModelArgs {
    std::string family = "st3d";
    std::string preset;
    double width = 0.0;
    int resolution = 0;
    std::string backbone;
};

struct TrainArgs {
    std::string manifest, out;
    ModelArgs model;
    double lr = 0.0, weight_decay = -1.0;
    int batch_size = 0, epochs = 0, patience = 5, early_stop = 10, image_frames = 1, eval_stride = 0;
    std::string scheduler = "plateau";
    std::vector<int> milestones{10};
    bool no_augment = false;
    std::vector<std::string> exclude;
};

struct EvalArgs {
    std::string checkpoint, manifest, out, split = "test";
    double threshold = 0.5;
    int stride = 0;
    bool cross_dataset = false;
};

struct CampaignArgs {
    TrainArgs train;
    std::string groups;
    double threshold = 0.5;
};

struct ProbeArgs {
    std::string checkpoint, manifest, out, split = "test", set, video, perturbation = "original";
    std::vector<std::string> specs;
    int stride = 0, iters = 2500, frame = 0;
    double perplexity = 40.0;
};

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string out;
};

// ---------------------------------------------------------------- helpers

enc::EncoderSpec model_spec(const ModelArgs& m, std::uint64_t seed) {
    enc::EncoderSpec spec;
    try {
        spec = m.preset.empty() ? enc::desk_preset(enc::parse_family(m.family)) : enc::preset(m.preset);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (m.width > 0.0) spec.width_multiplier = m.width;
    if (m.resolution > 0) spec.resolution = m.resolution;
    spec.init_seed = seed;
    try {
        spec.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return spec;
}

std::unique_ptr<enc::Encoder> build_model(const ModelArgs& m, const enc::EncoderSpec& spec) {
    if (!m.backbone.empty()) {
        if (!enc::is_sequential(spec.family)) throw UsageError("--backbone only applies to lstm/bigru families");
        const auto bb = enc::load_checkpoint(m.backbone);
        return spec.family == enc::Family::SeqLstm ? enc::build_seq_lstm(spec, *bb) : enc::build_seq_bigru(spec, *bb);
    }
    return enc::build(spec);
}

train::TrainConfig train_config(const TrainArgs& a, enc::Family family, std::uint64_t seed) {
    auto c = train::desk_config(family);
    if (a.lr > 0.0) c.lr = a.lr;
    c.weight_decay = a.weight_decay;
    if (a.batch_size > 0) c.batch_size = a.batch_size;
    if (a.epochs > 0) c.max_epochs = a.epochs;
    c.patience = a.patience;
    c.early_stop = a.early_stop;
    c.milestones = a.milestones;
    c.image_frames = a.image_frames;
    c.eval_stride = a.eval_stride;
    c.augment = !a.no_augment;
    c.seed = seed;
    try {
        c.scheduler = train::parse_scheduler(a.scheduler);
        c.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return c;
}

CorpusManifest load_manifest(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("manifest not found: " + path);
    return read_manifest(path);
}

std::vector<const VideoRecord*> sample_set(const CorpusManifest& m, const std::string& split, const std::string& tag) {
    std::vector<const VideoRecord*> out;
    for (const auto* r : m.in_split(parse_split(split)))
        if (tag.empty() || r->has_tag(tag)) out.push_back(r);
    if (out.empty()) throw UsageError("no videos in split '" + split + "'" + (tag.empty() ? "" : " with tag " + tag));
    return out;
}

std::string csv_header(const json& prov) { return "# " + prov.dump() + "\n"; }

// ---------------------------------------------------------------- commands

int cmd_synth(const SynthArgs& a, const Common& c, const json& prov) {
    synth::CorpusConfig cfg;
    cfg.real_train = a.real_train;
    cfg.real_val = a.real_val;
    cfg.real_test = a.real_test;
    cfg.motion_heavy_test = a.motion_heavy;
    cfg.min_frames = a.min_frames;
    cfg.max_frames = a.max_frames;
    cfg.real.size = a.size;
    if (a.min_frames < 16 || a.max_frames < a.min_frames) throw UsageError("need 16 <= min-frames <= max-frames");
    const auto m = synth::build_corpus(cfg, c.seed, a.out);
    json summary = prov;
    summary["videos"] = m.records.size();
    summary["methods"] = m.methods();
    summary["fingerprint"] = m.fingerprint();
    write_json(fs::path(a.out) / "provenance.json", summary);
    std::cout << "wrote " << m.records.size() << " videos to " << a.out << "\n";
    return 0;
}

int cmd_train(const TrainArgs& a, const Common& c, const json& prov) {
    auto manifest = load_manifest(a.manifest);
    if (!a.exclude.empty()) {
        const auto known = manifest.methods();
        for (const auto& m : a.exclude)
            if (std::find(known.begin(), known.end(), m) == known.end())
                throw UsageError("--exclude-methods: '" + m + "' is not in the manifest");
        manifest = manifest.without_methods({a.exclude.begin(), a.exclude.end()});
    }
    const auto spec = model_spec(a.model, c.seed);
    auto model = build_model(a.model, spec);
    const auto config = train_config(a, spec.family, c.seed);
    FrameCache cache(manifest);
    const fs::path out(a.out);
    train::TrainHooks hooks;
    hooks.log_path = out / "train_log.jsonl";
    hooks.checkpoint_path = out / "best.ckpt";
    hooks.provenance = prov;
    hooks.on_epoch = [](const train::EpochLog& e) {
        std::cerr << "epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss << " lr " << e.lr << "\n";
    };
    const auto r = train::train(*model, manifest, config, cache, hooks);
    json summary = prov;
    summary["train_config"] = config.to_json();
    summary["encoder"] = spec.to_json();
    summary["best_epoch"] = r.best_epoch;
    summary["best_val_loss"] = r.best_val_loss;
    summary["final_train_loss"] = r.final_train_loss;
    summary["epochs"] = r.log.size();
    summary["train_manifest"] = manifest.fingerprint();
    write_json(out / "train.json", summary);
    std::cout << "best epoch " << r.best_epoch << " val loss " << r.best_val_loss << "\n";
    return 0;
}

int cmd_eval(const EvalArgs& a, const Common&, const json& prov) {
    const auto manifest = load_manifest(a.manifest);
    json meta;
    const auto model = enc::load_checkpoint(a.checkpoint, &meta);
    json report = prov;
    report["checkpoint"] = a.checkpoint;
    eval::ClassPrecisionTable table;
    if (a.cross_dataset) {
        const std::string trained_on = meta.value("extra", json::object()).value("train_manifest", "");
        const auto r = eval::cross_dataset_eval(*model, trained_on, manifest, a.threshold);
        table = r.table;
        report["source_manifest"] = r.source_manifest;
        report["target_manifest"] = r.target_manifest;
    } else {
        FrameCache cache(manifest);
        const auto split = parse_split(a.split);
        const auto scores = eval::score_split(*model, manifest, split, cache, a.stride);
        table = eval::class_precision_table(scores, manifest, a.threshold, split);
        report["scores"] = scores;
    }
    report["table"] = table.to_json();
    write_json(a.out, report);
    std::cout << "real " << table.real_acc << " fake " << table.fake_acc << " avg " << table.overall_avg << "\n";
    return 0;
}

int cmd_campaign(const CampaignArgs& a, const Common& c, const json& prov) {
    const auto manifest = load_manifest(a.train.manifest);
    std::vector<eval::MethodGroup> groups;
    try {
        groups = eval::parse_groups(a.groups, manifest.methods());
    } catch (const Error& e) {
        throw UsageError(std::string("--groups: ") + e.what());
    }
    const auto spec = model_spec(a.train.model, c.seed);
    const auto config = train_config(a.train, spec.family, c.seed);
    eval::CampaignOptions opt;
    opt.out_dir = fs::path(a.train.out) / "runs";
    opt.threshold = a.threshold;
    opt.on_epoch = [](const std::string& run, const train::EpochLog& e) {
        std::cerr << run << " epoch " << e.epoch << " val " << e.val_loss << "\n";
    };
    const auto campaign = eval::run_leave_out_campaign(spec, manifest, groups, config, opt);
    json report = prov;
    report["campaign"] = campaign.to_json();
    report["train_config"] = config.to_json();
    report["encoder"] = spec.to_json();
    write_json(fs::path(a.train.out) / "campaign.json", report);
    write_text(fs::path(a.train.out) / "campaign.csv", csv_header(prov) + campaign.to_csv());
    std::cout << "avg drop " << campaign.avg_drop << "\n";
    return 0;
}

int cmd_battery(const ProbeArgs& a, const Common& c, const json& prov) {
    const auto manifest = load_manifest(a.manifest);
    const auto model = enc::load_checkpoint(a.checkpoint);
    std::vector<probe::PerturbationSpec> specs;
    try {
        if (a.specs.empty()) specs = probe::default_battery(c.seed);
        for (const auto& s : a.specs) specs.push_back(probe::PerturbationSpec::parse(s, c.seed));
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    FrameCache cache(manifest);
    const auto report = probe::run_perturbation_battery(*model, sample_set(manifest, a.split, a.set), specs, cache,
                                                        a.stride);
    json out = prov;
    out["model"] = enc::family_name(model->spec().family);
    out["battery"] = report.to_json();
    write_json(a.out, out);
    for (const auto& [cls, row] : report.logloss) {
        std::cout << cls;
        for (double v : row) std::cout << ' ' << v;
        std::cout << '\n';
    }
    return 0;
}

int cmd_embed(const ProbeArgs& a, const Common& c, const json& prov) {
    const auto manifest = load_manifest(a.manifest);
    const auto model = enc::load_checkpoint(a.checkpoint);
    FrameCache cache(manifest);
    const auto table = probe::extract_features(*model, sample_set(manifest, a.split, a.set), cache);
    probe::TsneOptions o;
    o.perplexity = a.perplexity;
    o.iterations = a.iters;
    o.seed = c.seed;
    const auto points = probe::embed_2d(table.rows, o);
    const fs::path out(a.out);
    std::ostringstream csv;
    csv.precision(17);
    csv << csv_header(prov) << "video_id,label,method,x,y\n";
    for (std::size_t i = 0; i < points.size(); ++i)
        csv << table.ids[i] << ',' << (table.labels[i] ? "fake" : "real") << ',' << table.methods[i] << ','
            << points[i][0] << ',' << points[i][1] << '\n';
    write_text(out / "embedding.csv", csv.str());
    write_rgb(out / "embedding.png", render::scatter(points, table.methods));
    json meta = prov;
    meta["tsne"] = o.to_json();
    meta["rows"] = points.size();
    meta["feature_dim"] = table.rows.empty() ? 0 : table.rows[0].size();
    meta["artifacts"] = {"embedding.csv", "embedding.png"};
    write_json(out / "embedding.json", meta);
    std::cout << "embedded " << points.size() << " videos\n";
    return 0;
}

int cmd_cam(const ProbeArgs& a, const Common& c, const json& prov) {
    const auto manifest = load_manifest(a.manifest);
    const auto model = enc::load_checkpoint(a.checkpoint);
    const VideoRecord* rec = manifest.find(a.video);
    if (rec == nullptr) throw UsageError("--video: no video '" + a.video + "' in the manifest");
    const auto frames = load_frames(manifest, *rec);
    const auto& s = model->spec();
    if (a.frame < 0 || a.frame >= static_cast<int>(frames.size())) throw UsageError("--start outside the video");
    probe::PerturbationSpec spec;
    try {
        spec = probe::PerturbationSpec::parse(a.perturbation, c.seed);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const auto clip = probe::perturb(clip::gather(frames, clip::looped_indices(static_cast<int>(frames.size()), a.frame,
                                                                               s.clip_len)),
                                     spec);
    const auto map = probe::grad_cam(*model, clip::to_clip_tensor(clip, s.normalization, s.resolution));
    const fs::path out(a.out);
    write_rgb(out / "cam.png", render::cam_strip(clip, map));
    json meta = prov;
    meta["video"] = a.video;
    meta["prediction"] = map.prediction;
    meta["activation_shape"] = map.activation_shape;
    meta["flipped_frames"] = probe::flipped_indices(static_cast<int>(clip.size()), spec);
    json intensity = json::array();
    for (const auto& h : map.heatmaps) intensity.push_back(cv::mean(h)[0]);
    meta["mean_intensity"] = intensity;
    meta["artifacts"] = {"cam.png"};
    write_json(out / "cam.json", meta);
    std::cout << "prediction " << map.prediction << "\n";
    return 0;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << v;
    return s.str();
}

std::string render_table(const json& t, const std::string& name) {
    std::ostringstream out;
    const auto methods = t.at("per_method");
    out << "| run | real |";
    for (const auto& [m, v] : methods.items()) out << ' ' << m << " |";
    out << " fake | avg |\n|---|---|";
    for (std::size_t i = 0; i < methods.size(); ++i) out << "---|";
    out << "---|---|\n| " << name << " | " << fmt(t.at("real_acc").get<double>()) << " |";
    for (const auto& [m, v] : methods.items()) out << ' ' << fmt(v.get<double>()) << " |";
    out << ' ' << fmt(t.at("fake_acc").get<double>()) << " | " << fmt(t.at("overall_avg").get<double>()) << " |\n";
    return out.str();
}

int cmd_report(const ReportArgs& a, const Common&, const json& prov) {
    std::ostringstream md;
    md << "# stdeep report\n\n";
    json sources = json::array();
    for (const auto& path : a.inputs) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot read " + path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw UsageError(path + ": " + e.what());
        }
        sources.push_back({{"path", path}, {"provenance", {{"command", j.value("command", "")},
                                                          {"version", j.value("version", "")},
                                                          {"config", j.value("config", json::object())}}}});
        md << "## " << path << "\n\n";
        if (j.contains("campaign")) {
            const auto& c = j["campaign"];
            md << "| run | left out | real | fake | avg | drop |\n|---|---|---|---|---|---|\n";
            auto row = [&](const json& r) {
                const auto& t = r["table"];
                std::string left;
                for (const auto& m : r["left_out"]) left += (left.empty() ? "" : "+") + m.get<std::string>();
                md << "| " << r["name"].get<std::string>() << " | " << left << " | " << fmt(t["real_acc"]) << " | "
                   << fmt(t["fake_acc"]) << " | " << fmt(t["overall_avg"]) << " | " << fmt(r["drop"]) << " |\n";
            };
            row(c["baseline"]);
            for (const auto& r : c["runs"]) row(r);
            md << "\naverage drop: " << fmt(c["avg_drop"]) << "\n\n";
        } else if (j.contains("battery")) {
            const auto& b = j["battery"];
            md << "| class |";
            for (const auto& col : b["columns"]) md << ' ' << col.get<std::string>() << " |";
            md << "\n|---|";
            for (std::size_t i = 0; i < b["columns"].size(); ++i) md << "---|";
            md << '\n';
            for (const auto& r : b["rows"]) {
                md << "| " << r["class"].get<std::string>() << " |";
                for (const auto& col : b["columns"]) md << ' ' << fmt(r[col.get<std::string>()]) << " |";
                md << '\n';
            }
            md << '\n';
        } else if (j.contains("table")) {
            md << render_table(j["table"], j.value("checkpoint", "model")) << '\n';
        } else {
            throw UsageError(path + ": not a campaign, battery or eval artifact");
        }
    }
    json meta = prov;
    meta["sources"] = sources;
    md << "<!-- provenance\n" << meta.dump(2) << "\n-->\n";
    write_text(a.out, md.str());
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

void add_model_options(CLI::App* app, ModelArgs& m) {
    app->add_option("--family", m.family, "image2d | lstm | bigru | st3d | inception")->capture_default_str();
    app->add_option("--preset", m.preset, "named encoder preset (overrides --family)");
    app->add_option("--width", m.width, "width multiplier override");
    app->add_option("--resolution", m.resolution, "input resolution override");
    app->add_option("--backbone", m.backbone, "trained image2d checkpoint for lstm/bigru");
}

void add_train_options(CLI::App* app, TrainArgs& t) {
    app->add_option("--manifest", t.manifest, "corpus manifest (JSONL)")->required();
    app->add_option("--out", t.out, "output directory")->required();
    add_model_options(app, t.model);
    app->add_option("--lr", t.lr, "learning rate (0: family default)")->capture_default_str();
    app->add_option("--weight-decay", t.weight_decay, "negative: family default")->capture_default_str();
    app->add_option("--batch-size", t.batch_size, "even batch size (0: family default)")->capture_default_str();
    app->add_option("--epochs", t.epochs, "maximum epochs (0: family default)")->capture_default_str();
    app->add_option("--scheduler", t.scheduler, "plateau | multiplicative")->capture_default_str();
    app->add_option("--patience", t.patience, "plateau patience")->capture_default_str();
    app->add_option("--milestones", t.milestones, "multiplicative scheduler epochs")->capture_default_str();
    app->add_option("--early-stop", t.early_stop, "epochs without improvement before stopping")->capture_default_str();
    app->add_option("--image-frames", t.image_frames, "frames per image2d sample")->capture_default_str();
    app->add_option("--eval-stride", t.eval_stride, "inference window stride (0: clip length)")->capture_default_str();
    app->add_flag("--no-augment", t.no_augment, "disable training augmentation");
}

void add_probe_common(CLI::App* app, ProbeArgs& p, bool needs_out_dir) {
    app->add_option("--checkpoint", p.checkpoint, "trained checkpoint")->required();
    app->add_option("--manifest", p.manifest, "corpus manifest (JSONL)")->required();
    app->add_option("--out", p.out, needs_out_dir ? "output directory" : "output JSON")->required();
    app->add_option("--split", p.split, "train | val | test")->capture_default_str();
    app->add_option("--set", p.set, "restrict to videos carrying this tag (e.g. motion_heavy)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stdeep: spatio-temporal deepfake detection toolkit"};
    app.set_version_flag("--version", std::string("stdeep ") + STDEEP_VERSION);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    // subcommands inherit this, so --seed/--workers/--config also work after the command name
    app.fallthrough();

    Common common;
    app.add_option("--config", common.config_file, "flat key = value file; flags take precedence");
    auto* seed_opt = app.add_option("--seed", common.seed, "global seed (fallback: STDEEP_SEED, then 0)");
    app.add_option("--workers", common.workers, "data worker cap")->check(CLI::PositiveNumber)->capture_default_str();

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "render a synthetic corpus");
    synth->add_option("--out", synth_args.out, "output directory")->required();
    synth->add_option("--real-train", synth_args.real_train)->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--real-val", synth_args.real_val)->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--real-test", synth_args.real_test)->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--motion-heavy", synth_args.motion_heavy, "extra motion-heavy test reals")->capture_default_str();
    synth->add_option("--min-frames", synth_args.min_frames)->capture_default_str();
    synth->add_option("--max-frames", synth_args.max_frames)->capture_default_str();
    synth->add_option("--size", synth_args.size, "frame size in pixels")->check(CLI::PositiveNumber)->capture_default_str();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train one encoder");
    add_train_options(train_cmd, train_args);
    train_cmd->add_option("--exclude-methods", train_args.exclude, "drop these methods from train and val")
        ->delimiter(',');

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "score a split and tabulate per-class precision");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
    eval_cmd->add_option("--manifest", eval_args.manifest)->required();
    eval_cmd->add_option("--out", eval_args.out, "output JSON")->required();
    eval_cmd->add_option("--split", eval_args.split)->capture_default_str();
    eval_cmd->add_option("--threshold", eval_args.threshold)->capture_default_str();
    eval_cmd->add_option("--stride", eval_args.stride, "window stride (0: clip length)")->capture_default_str();
    eval_cmd->add_flag("--cross-dataset", eval_args.cross_dataset,
                       "foreign test split; refuses the model's own training manifest");

    CampaignArgs campaign_args;
    auto* campaign = app.add_subcommand("campaign", "leave-one-method-out campaign");
    add_train_options(campaign, campaign_args.train);
    campaign->add_option("--groups", campaign_args.groups, "singletons or \"M1,M4;M2,M3\"")->required();
    campaign->add_option("--threshold", campaign_args.threshold)->capture_default_str();

    ProbeArgs probe_args;
    auto* probe_cmd = app.add_subcommand("probe", "perturbation battery, embedding, activation maps");
    probe_cmd->require_subcommand(1);
    auto* battery = probe_cmd->add_subcommand("battery", "per-class log-loss under frame perturbations");
    add_probe_common(battery, probe_args, false);
    battery->add_option("--specs", probe_args.specs, "perturbations (default: the standard battery)")->delimiter(',');
    battery->add_option("--stride", probe_args.stride)->capture_default_str();
    auto* embed = probe_cmd->add_subcommand("embed", "penultimate features embedded in 2D");
    add_probe_common(embed, probe_args, true);
    embed->add_option("--perplexity", probe_args.perplexity)->capture_default_str();
    embed->add_option("--iters", probe_args.iters)->check(CLI::PositiveNumber)->capture_default_str();
    auto* cam = probe_cmd->add_subcommand("cam", "activation-map strip for one clip");
    cam->add_option("--checkpoint", probe_args.checkpoint)->required();
    cam->add_option("--manifest", probe_args.manifest)->required();
    cam->add_option("--out", probe_args.out, "output directory")->required();
    cam->add_option("--video", probe_args.video)->required();
    cam->add_option("--start", probe_args.frame, "first frame of the clip")->capture_default_str();
    cam->add_option("--perturbation", probe_args.perturbation, "e.g. flip3, flip_every_2nd")->capture_default_str();

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "markdown summary of eval/campaign/battery artifacts");
    report->add_option("--in", report_args.inputs, "artifact JSON files")->required();
    report->add_option("--out", report_args.out, "output markdown")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    // deepest selected subcommand
    CLI::App* cmd = app.get_subcommands().front();
    while (!cmd->get_subcommands().empty()) cmd = cmd->get_subcommands().front();
    std::string command = cmd->get_name();
    if (cmd->get_parent() != &app) command = cmd->get_parent()->get_name() + " " + command;

    try {
        if (!common.config_file.empty()) apply_config(app, *cmd, read_config_file(common.config_file));
        if (seed_opt->count() == 0) {
            if (const char* env = std::getenv("STDEEP_SEED")) {
                try {
                    common.seed = std::stoull(env);
                } catch (const std::exception&) {
                    throw UsageError(std::string("STDEEP_SEED is not an integer: ") + env);
                }
            }
        }
        json config = resolved_options(*cmd);
        config["seed"] = common.seed;
        config["workers"] = common.workers;
        const json prov = provenance(command, config);

        if (command == "synth") return cmd_synth(synth_args, common, prov);
        if (command == "train") return cmd_train(train_args, common, prov);
        if (command == "eval") return cmd_eval(eval_args, common, prov);
        if (command == "campaign") return cmd_campaign(campaign_args, common, prov);
        if (command == "probe battery") return cmd_battery(probe_args, common, prov);
        if (command == "probe embed") return cmd_embed(probe_args, common, prov);
        if (command == "probe cam") return cmd_cam(probe_args, common, prov);
        if (command == "report") return cmd_report(report_args, common, prov);
        throw UsageError("unknown command " + command);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error [" << error_kind_name(e.kind()) << "]: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
