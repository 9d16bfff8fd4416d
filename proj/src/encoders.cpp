#include "stdeep/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "stdeep/error.hpp"
#include "stdeep/seed.hpp"

namespace stdeep::enc {

using nlohmann::json;
using nn::Conv3d;
using nn::Linear;
using nn::Tensor;
using nn::Triple;
using nn::Var;

std::string family_name(Family family) {
    switch (family) {
        case Family::Image2d: return "image2d";
        case Family::SeqLstm: return "seq_lstm";
        case Family::SeqBigru: return "seq_bigru";
        case Family::St3dResidual: return "st3d_residual";
        case Family::St3dInception: return "st3d_inception";
    }
    return "image2d";
}

Family parse_family(const std::string& name) {
    if (name == "image2d" || name == "image") return Family::Image2d;
    if (name == "seq_lstm" || name == "lstm") return Family::SeqLstm;
    if (name == "seq_bigru" || name == "bigru") return Family::SeqBigru;
    if (name == "st3d_residual" || name == "st3d") return Family::St3dResidual;
    if (name == "st3d_inception" || name == "inception") return Family::St3dInception;
    throw Error(ErrorKind::BadSpec, "unknown encoder family '" + name + "'");
}

bool is_video_family(Family family) { return family != Family::Image2d; }
bool is_sequential(Family family) { return family == Family::SeqLstm || family == Family::SeqBigru; }

int EncoderSpec::resolved_frozen_blocks() const {
    if (frozen_blocks >= 0) return frozen_blocks;
    return static_cast<int>(std::ceil(0.8 * n_blocks - 1e-9));
}

void EncoderSpec::validate() const {
    auto bad = [](const std::string& msg) { throw Error(ErrorKind::BadSpec, msg); };
    if (!(width_multiplier > 0.0)) bad("width_multiplier must be positive");
    if (resolution < 8) bad("resolution must be at least 8");
    if (clip_len < 1) bad("clip_len must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) bad("dropout_p must lie in [0, 1)");
    if (family == Family::St3dResidual || family == Family::St3dInception) {
        if (n_stages < 1 || n_stages > 4) bad("n_stages must lie in [1, 4]");
        if (static_cast<int>(stage_temporal_strides.size()) != n_stages) bad("one temporal stride per stage required");
        for (int s : stage_temporal_strides)
            if (s != 1 && s != 2) bad("temporal strides must be 1 or 2");
        if (blocks_per_stage < 1) bad("blocks_per_stage must be >= 1");
    } else {
        if (n_blocks < 1) bad("n_blocks must be >= 1");
    }
    if (is_sequential(family)) {
        if (hidden < 1 || fc_hidden < 1) bad("hidden sizes must be >= 1");
        if (resolved_frozen_blocks() > n_blocks) bad("cannot freeze more blocks than exist");
    }
}

json EncoderSpec::to_json() const {
    return json{{"family", family_name(family)},
                {"preset", preset},
                {"width_multiplier", width_multiplier},
                {"resolution", resolution},
                {"normalization", clip::normalization_name(normalization)},
                {"clip_len", clip_len},
                {"dropout_p", dropout_p},
                {"n_stages", n_stages},
                {"stage_temporal_strides", stage_temporal_strides},
                {"blocks_per_stage", blocks_per_stage},
                {"n_blocks", n_blocks},
                {"hidden", hidden},
                {"fc_hidden", fc_hidden},
                {"frozen_blocks", frozen_blocks},
                {"init_seed", init_seed}};
}

EncoderSpec EncoderSpec::from_json(const json& j) {
    EncoderSpec s;
    try {
        s.family = parse_family(j.at("family").get<std::string>());
        s.preset = j.value("preset", s.preset);
        s.width_multiplier = j.value("width_multiplier", s.width_multiplier);
        s.resolution = j.value("resolution", s.resolution);
        if (j.contains("normalization")) s.normalization = clip::parse_normalization(j["normalization"].get<std::string>());
        s.clip_len = j.value("clip_len", s.clip_len);
        s.dropout_p = j.value("dropout_p", s.dropout_p);
        s.n_stages = j.value("n_stages", s.n_stages);
        s.stage_temporal_strides = j.value("stage_temporal_strides", s.stage_temporal_strides);
        s.blocks_per_stage = j.value("blocks_per_stage", s.blocks_per_stage);
        s.n_blocks = j.value("n_blocks", s.n_blocks);
        s.hidden = j.value("hidden", s.hidden);
        s.fc_hidden = j.value("fc_hidden", s.fc_hidden);
        s.frozen_blocks = j.value("frozen_blocks", s.frozen_blocks);
        s.init_seed = j.value("init_seed", s.init_seed);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::BadSpec, std::string("malformed encoder spec: ") + e.what());
    }
    s.validate();
    return s;
}

EncoderSpec preset(const std::string& name) {
    EncoderSpec s;
    s.preset = name;
    if (name == "xception_like") {
        s.family = Family::Image2d;
        s.normalization = clip::Normalization::HalfHalf;
        s.resolution = 299;
        s.n_blocks = 25;
        s.dropout_p = 0.0;
    } else if (name == "efficient_like") {
        s.family = Family::Image2d;
        s.normalization = clip::Normalization::ImageNet;
        s.resolution = 224;
        s.n_blocks = 25;
        s.dropout_p = 0.3;
    } else if (name == "r3d18_like") {
        s.family = Family::St3dResidual;
    } else if (name == "i3d_like") {
        s.family = Family::St3dInception;
    } else if (name == "lstm_like" || name == "bigru_like") {
        s.family = name == "lstm_like" ? Family::SeqLstm : Family::SeqBigru;
        s.dropout_p = 0.3;
    } else if (name == "desk_image2d") {
        s.family = Family::Image2d;
        s.width_multiplier = 0.25;
        s.resolution = 32;
        s.n_blocks = 5;
        s.dropout_p = 0.3;
    } else if (name == "desk_st3d" || name == "desk_st3d_original") {
        s.family = Family::St3dResidual;
        s.width_multiplier = 0.125;
        s.resolution = 32;
        if (name == "desk_st3d_original") s.stage_temporal_strides = {1, 2, 2, 2};
    } else if (name == "desk_inception") {
        s.family = Family::St3dInception;
        s.width_multiplier = 0.25;
        s.resolution = 32;
    } else if (name == "desk_lstm" || name == "desk_bigru") {
        s.family = name == "desk_lstm" ? Family::SeqLstm : Family::SeqBigru;
        s.width_multiplier = 0.25;
        s.resolution = 32;
        s.n_blocks = 5;
        s.hidden = 64;
        s.fc_hidden = 16;
        s.dropout_p = 0.3;
    } else {
        throw Error(ErrorKind::BadSpec, "unknown preset '" + name + "'");
    }
    s.validate();
    return s;
}

std::vector<std::string> preset_names() {
    return {"xception_like", "efficient_like", "r3d18_like", "i3d_like",       "lstm_like",  "bigru_like",
            "desk_image2d",  "desk_st3d",      "desk_st3d_original", "desk_inception", "desk_lstm", "desk_bigru"};
}

EncoderSpec desk_preset(Family family) {
    switch (family) {
        case Family::Image2d: return preset("desk_image2d");
        case Family::SeqLstm: return preset("desk_lstm");
        case Family::SeqBigru: return preset("desk_bigru");
        case Family::St3dResidual: return preset("desk_st3d");
        case Family::St3dInception: return preset("desk_inception");
    }
    throw Error(ErrorKind::BadSpec, "unknown family");
}

EncoderSpec backbone_spec(const EncoderSpec& seq_spec) {
    EncoderSpec b = seq_spec;
    b.family = Family::Image2d;
    b.preset = seq_spec.preset + "_backbone";
    return b;
}

double EncoderOutput::probability() const {
    if (logits.empty()) throw Error(ErrorKind::NoFrames, "no outputs");
    double acc = 0.0;
    for (double z : logits) acc += 1.0 / (1.0 + std::exp(-z));
    return acc / static_cast<double>(logits.size());
}

Graph Encoder::run(const Var& clip, bool training, Rng& rng) const {
    const auto& s = clip->value.shape();
    if (s.size() != 4 || s[0] != 3)
        throw Error(ErrorKind::ShapeMismatch, "expected a [3, T, H, W] clip, got " + nn::shape_string(s));
    std::vector<nn::Shape> shapes;
    Var act = trunk(clip, &shapes);
    Graph g = head(act, training, rng);
    g.last_conv = act;
    g.stage_shapes = std::move(shapes);
    return g;
}

EncoderOutput Encoder::forward(const Tensor& clip) const {
    Rng unused(0);
    const Graph g = run(nn::constant(clip), false, unused);
    EncoderOutput out;
    out.logits.assign(g.logits->value.values().begin(), g.logits->value.values().end());
    const Tensor& f = g.features->value;
    if (f.rank() == 2) {
        const int rows = f.dim(0), cols = f.dim(1);
        for (int r = 0; r < rows; ++r)
            out.features.emplace_back(f.data() + static_cast<std::size_t>(r) * cols,
                                      f.data() + static_cast<std::size_t>(r + 1) * cols);
    } else {
        out.features.emplace_back(f.values().begin(), f.values().end());
    }
    out.stage_shapes = g.stage_shapes;
    return out;
}

namespace {

int scaled(int base, double mult) { return std::max(1, static_cast<int>(std::lround(base * mult))); }

Rng init_rng(const EncoderSpec& spec, const char* part) {
    return make_rng(derive_seed(spec.init_seed, "init", family_name(spec.family), part));
}

// Frame-wise 2D trunk: stem plus n_blocks conv+norm blocks spread over
// five width levels. Identity-shaped blocks are residual with a zero-gamma norm.
class FrameTrunk {
public:
    struct Block {
        Conv3d conv;
        nn::GroupNorm norm;
        bool residual = false;
        std::vector<nn::Parameter*> params;
    };

    FrameTrunk() = default;
    FrameTrunk(nn::ParameterStore& store, const EncoderSpec& spec) {
        static constexpr int kBase[5] = {32, 64, 128, 256, 512};
        Rng rng = init_rng(spec, "trunk");
        const int levels = std::min(5, spec.n_blocks);
        int width = scaled(kBase[0], spec.width_multiplier);
        stem_ = Conv3d(store, "stem", 3, width, {1, 3, 3}, {1, 2, 2}, {0, 1, 1}, rng, false);
        stem_norm_ = nn::GroupNorm(store, "stem.norm", width, 1.0, true);
        stem_params_ = {store.find("stem.weight")};
        for (auto* p : stem_norm_.parameters()) stem_params_.push_back(p);
        int prev_level = 0;
        for (int i = 0; i < spec.n_blocks; ++i) {
            const int level = i * levels / spec.n_blocks;
            const int out = scaled(kBase[level], spec.width_multiplier);
            const int stride = level != prev_level ? 2 : 1;
            const std::string name = "block" + std::to_string(i);
            Block b;
            b.conv = Conv3d(store, name, width, out, {1, 3, 3}, {1, stride, stride}, {0, 1, 1}, rng, false);
            b.residual = out == width && stride == 1;
            b.norm = nn::GroupNorm(store, name + ".norm", out, b.residual ? 0.0 : 1.0, true);
            b.params = {store.find(name + ".weight")};
            for (auto* p : b.norm.parameters()) b.params.push_back(p);
            blocks_.push_back(b);
            width = out;
            prev_level = level;
        }
        out_channels_ = width;
    }

    Var operator()(const Var& clip, std::vector<nn::Shape>* shapes) const {
        Var x = nn::relu(stem_norm_(stem_(clip)));
        if (shapes) shapes->push_back(x->value.shape());
        for (const auto& b : blocks_) {
            Var y = b.norm(b.conv(x));
            x = b.residual ? nn::relu(nn::add(x, y)) : nn::relu(y);
            if (shapes) shapes->push_back(x->value.shape());
        }
        return x;
    }

    /// Freezes the stem and the first n blocks.
    void freeze_prefix(int n) {
        if (n <= 0) return;
        for (auto* p : stem_params_) p->set_frozen(true);
        for (int i = 0; i < n && i < static_cast<int>(blocks_.size()); ++i)
            for (auto* p : blocks_[static_cast<std::size_t>(i)].params) p->set_frozen(true);
    }

    int out_channels() const { return out_channels_; }

private:
    Conv3d stem_;
    nn::GroupNorm stem_norm_;
    std::vector<nn::Parameter*> stem_params_;
    std::vector<Block> blocks_;
    int out_channels_ = 0;
};

std::vector<Var> rows_of(const Var& table) {
    std::vector<Var> rows;
    for (int t = 0; t < table->value.dim(0); ++t) rows.push_back(nn::slice(table, t, 1));
    return rows;
}

class Image2dEncoder : public Encoder {
public:
    explicit Image2dEncoder(const EncoderSpec& spec) : Encoder(spec) {
        trunk_ = FrameTrunk(params_, spec_);
        Rng rng = init_rng(spec_, "head");
        head_ = Linear(params_, "head", trunk_.out_channels(), 1, rng);
    }

    Var trunk(const Var& clip, std::vector<nn::Shape>* shapes) const override { return trunk_(clip, shapes); }

    Graph head(const Var& act, bool training, Rng& rng) const override {
        Graph g;
        g.features = nn::spatial_avg_pool(act);
        Var pooled = training ? nn::dropout(g.features, spec_.dropout_p, rng) : g.features;
        std::vector<Var> logits;
        for (const auto& row : rows_of(pooled)) logits.push_back(head_(row));
        g.logits = nn::concat(logits);
        return g;
    }

    bool framewise() const override { return true; }

private:
    FrameTrunk trunk_;
    Linear head_;
};

class SeqLstmEncoder : public Encoder {
public:
    explicit SeqLstmEncoder(const EncoderSpec& spec) : Encoder(spec) {
        trunk_ = FrameTrunk(params_, spec_);
        for (auto* p : params_.all()) p->set_frozen(true);
        Rng rng = init_rng(spec_, "head");
        lstm1_ = nn::Lstm(params_, "lstm1", trunk_.out_channels(), spec_.hidden, rng);
        lstm2_ = nn::Lstm(params_, "lstm2", spec_.hidden, spec_.hidden, rng);
        fc1_ = Linear(params_, "fc1", spec_.hidden, spec_.hidden, rng);
        fc2_ = Linear(params_, "fc2", spec_.hidden, spec_.fc_hidden, rng);
        fc3_ = Linear(params_, "fc3", spec_.fc_hidden, 1, rng);
    }

    Var trunk(const Var& clip, std::vector<nn::Shape>* shapes) const override { return trunk_(clip, shapes); }

    Graph head(const Var& act, bool training, Rng& rng) const override {
        const auto seq = rows_of(nn::spatial_avg_pool(act));
        const Var last = lstm2_(lstm1_(seq)).back();
        const double p = training ? spec_.dropout_p : 0.0;
        Var x = nn::relu(fc1_(nn::dropout(last, p, rng)));
        Graph g;
        g.features = nn::relu(fc2_(nn::dropout(x, p, rng)));
        g.logits = fc3_(g.features);
        return g;
    }

private:
    FrameTrunk trunk_;
    nn::Lstm lstm1_, lstm2_;
    Linear fc1_, fc2_, fc3_;
};

class SeqBigruEncoder : public Encoder {
public:
    explicit SeqBigruEncoder(const EncoderSpec& spec) : Encoder(spec) {
        trunk_ = FrameTrunk(params_, spec_);
        trunk_.freeze_prefix(spec_.resolved_frozen_blocks());
        Rng rng = init_rng(spec_, "head");
        fwd_ = nn::Gru(params_, "gru_fwd", trunk_.out_channels(), spec_.hidden, rng);
        bwd_ = nn::Gru(params_, "gru_bwd", trunk_.out_channels(), spec_.hidden, rng);
        out_ = Linear(params_, "out", 2 * spec_.hidden, 1, rng);
    }

    Var trunk(const Var& clip, std::vector<nn::Shape>* shapes) const override { return trunk_(clip, shapes); }

    Graph head(const Var& act, bool training, Rng& rng) const override {
        auto seq = rows_of(nn::spatial_avg_pool(act));
        const Var forward_last = fwd_(seq).back();
        std::reverse(seq.begin(), seq.end());
        // the backward direction's state at the final timestep has seen only that step
        const Var backward_last = bwd_(seq).front();
        Graph g;
        g.features = nn::concat({forward_last, backward_last});
        g.logits = out_(nn::dropout(g.features, training ? spec_.dropout_p : 0.0, rng));
        return g;
    }

private:
    FrameTrunk trunk_;
    nn::Gru fwd_, bwd_;
    Linear out_;
};

class ResidualEncoder : public Encoder {
public:
    explicit ResidualEncoder(const EncoderSpec& spec) : Encoder(spec) {
        static constexpr int kBase[4] = {64, 128, 256, 512};
        Rng rng = init_rng(spec_, "trunk");
        int width = scaled(kBase[0], spec_.width_multiplier);
        stem_ = Conv3d(params_, "stem", 3, width, {3, 7, 7}, {1, 2, 2}, {1, 3, 3}, rng, false);
        stem_norm_ = nn::GroupNorm(params_, "stem.norm", width);
        for (int s = 0; s < spec_.n_stages; ++s) {
            const int out = scaled(kBase[s], spec_.width_multiplier);
            std::vector<Block> stage;
            for (int b = 0; b < spec_.blocks_per_stage; ++b) {
                const std::string name = "stage" + std::to_string(s) + ".block" + std::to_string(b);
                Triple stride{1, 1, 1};
                if (b == 0) stride = {spec_.stage_temporal_strides[static_cast<std::size_t>(s)], s > 0 ? 2 : 1, s > 0 ? 2 : 1};
                Block blk;
                blk.conv1 = Conv3d(params_, name + ".conv1", width, out, {3, 3, 3}, stride, {1, 1, 1}, rng, false);
                blk.norm1 = nn::GroupNorm(params_, name + ".norm1", out);
                blk.conv2 = Conv3d(params_, name + ".conv2", out, out, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng, false);
                blk.norm2 = nn::GroupNorm(params_, name + ".norm2", out, 0.0);
                if (out != width || stride != Triple{1, 1, 1}) {
                    blk.project = true;
                    blk.shortcut = Conv3d(params_, name + ".shortcut", width, out, {1, 1, 1}, stride, {0, 0, 0}, rng, false);
                    blk.shortcut_norm = nn::GroupNorm(params_, name + ".shortcut.norm", out);
                }
                stage.push_back(std::move(blk));
                width = out;
            }
            stages_.push_back(std::move(stage));
        }
        Rng hrng = init_rng(spec_, "head");
        head_ = Linear(params_, "head", width, 1, hrng);
    }

    Var trunk(const Var& clip, std::vector<nn::Shape>* shapes) const override {
        Var x = nn::relu(stem_norm_(stem_(clip)));
        for (const auto& stage : stages_) {
            for (const auto& b : stage) {
                Var main = b.norm2(b.conv2(nn::relu(b.norm1(b.conv1(x)))));
                Var skip = b.project ? b.shortcut_norm(b.shortcut(x)) : x;
                x = nn::relu(nn::add(skip, main));
            }
            if (shapes) shapes->push_back(x->value.shape());
        }
        return x;
    }

    Graph head(const Var& act, bool training, Rng& rng) const override {
        Graph g;
        g.features = nn::global_avg_pool(act);
        g.logits = head_(nn::dropout(g.features, training ? spec_.dropout_p : 0.0, rng));
        return g;
    }

private:
    struct Block {
        Conv3d conv1, conv2, shortcut;
        nn::GroupNorm norm1, norm2, shortcut_norm;
        bool project = false;
    };
    Conv3d stem_;
    nn::GroupNorm stem_norm_;
    std::vector<std::vector<Block>> stages_;
    Linear head_;
};

// conv (no bias) -> group norm -> relu
struct ConvUnit {
    Conv3d conv;
    nn::GroupNorm norm;
    ConvUnit() = default;
    ConvUnit(nn::ParameterStore& store, const std::string& name, int in, int out, Triple k, Triple stride, Triple pad,
             Rng& rng)
        : conv(store, name, in, out, k, stride, pad, rng, false), norm(store, name + ".norm", out) {}
    Var operator()(const Var& x) const { return nn::relu(norm(conv(x))); }
};

class InceptionEncoder : public Encoder {
public:
    explicit InceptionEncoder(const EncoderSpec& spec) : Encoder(spec) {
        static constexpr int kUnit[4] = {32, 64, 128, 256};
        Rng rng = init_rng(spec_, "trunk");
        int width = scaled(kUnit[0], spec_.width_multiplier);
        stem_ = ConvUnit(params_, "stem", 3, width, {3, 7, 7}, {1, 2, 2}, {1, 3, 3}, rng);
        for (int s = 0; s < spec_.n_stages; ++s) {
            const int u = scaled(kUnit[s], spec_.width_multiplier);
            const int half = std::max(1, u / 2), quarter = std::max(1, u / 4);
            const std::string name = "mixed" + std::to_string(s);
            const Triple one{1, 1, 1}, zero{0, 0, 0}, three{3, 3, 3};
            Module m;
            m.b0 = ConvUnit(params_, name + ".b0", width, u, one, one, zero, rng);
            m.b1a = ConvUnit(params_, name + ".b1a", width, half, one, one, zero, rng);
            m.b1b = ConvUnit(params_, name + ".b1b", half, u, three, one, one, rng);
            m.b2a = ConvUnit(params_, name + ".b2a", width, quarter, one, one, zero, rng);
            m.b2b = ConvUnit(params_, name + ".b2b", quarter, half, three, one, one, rng);
            m.b3 = ConvUnit(params_, name + ".b3", width, half, one, one, zero, rng);
            modules_.push_back(std::move(m));
            width = u + u + half + half;
        }
        Rng hrng = init_rng(spec_, "head");
        head_ = Linear(params_, "head", width, 1, hrng);
    }

    Var trunk(const Var& clip, std::vector<nn::Shape>* shapes) const override {
        Var x = stem_(clip);
        for (std::size_t s = 0; s < modules_.size(); ++s) {
            if (s > 0) {
                const int ts = spec_.stage_temporal_strides[s];
                x = nn::max_pool3d(x, {ts == 1 ? 1 : 3, 3, 3}, {ts, 2, 2}, {ts == 1 ? 0 : 1, 1, 1});
            }
            const auto& m = modules_[s];
            Var b0 = m.b0(x);
            Var b1 = m.b1b(m.b1a(x));
            Var b2 = m.b2b(m.b2a(x));
            Var b3 = m.b3(nn::max_pool3d(x, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}));
            x = nn::concat({b0, b1, b2, b3});
            if (shapes) shapes->push_back(x->value.shape());
        }
        return x;
    }

    Graph head(const Var& act, bool training, Rng& rng) const override {
        Graph g;
        g.features = nn::global_avg_pool(act);
        g.logits = head_(nn::dropout(g.features, training ? spec_.dropout_p : 0.0, rng));
        return g;
    }

private:
    struct Module {
        ConvUnit b0, b1a, b1b, b2a, b2b, b3;
    };
    ConvUnit stem_;
    std::vector<Module> modules_;
    Linear head_;
};

void require_family(const EncoderSpec& spec, std::initializer_list<Family> allowed) {
    for (Family f : allowed)
        if (spec.family == f) return;
    throw Error(ErrorKind::BadSpec, "builder does not accept family " + family_name(spec.family));
}

void copy_backbone(const Encoder& backbone, Encoder& seq) {
    if (backbone.spec().family != Family::Image2d)
        throw Error(ErrorKind::BadSpec, "sequential encoders need an image2d backbone");
    std::size_t copied = 0;
    for (auto* p : seq.params().all()) {
        const auto* src = backbone.params().find(p->name);
        if (!src) continue;
        if (src->value().shape() != p->value().shape())
            throw Error(ErrorKind::BadSpec, "backbone parameter " + p->name + " has shape " +
                                                nn::shape_string(src->value().shape()));
        p->var->value = src->value();
        ++copied;
    }
    std::size_t expected = 0;
    for (const auto* p : backbone.params().all())
        if (p->name.rfind("head.", 0) != 0) ++expected;
    if (copied != expected) throw Error(ErrorKind::BadSpec, "backbone does not match the sequential spec");
}

}  // namespace

std::unique_ptr<Encoder> build_image2d(const EncoderSpec& spec) {
    spec.validate();
    require_family(spec, {Family::Image2d});
    return std::make_unique<Image2dEncoder>(spec);
}

std::unique_ptr<Encoder> build_seq_lstm(const EncoderSpec& spec, const Encoder& backbone) {
    spec.validate();
    require_family(spec, {Family::SeqLstm});
    auto model = std::make_unique<SeqLstmEncoder>(spec);
    copy_backbone(backbone, *model);
    return model;
}

std::unique_ptr<Encoder> build_seq_bigru(const EncoderSpec& spec, const Encoder& backbone) {
    spec.validate();
    require_family(spec, {Family::SeqBigru});
    auto model = std::make_unique<SeqBigruEncoder>(spec);
    copy_backbone(backbone, *model);
    return model;
}

std::unique_ptr<Encoder> build_st3d(const EncoderSpec& spec) {
    spec.validate();
    require_family(spec, {Family::St3dResidual, Family::St3dInception});
    if (spec.family == Family::St3dResidual) return std::make_unique<ResidualEncoder>(spec);
    return std::make_unique<InceptionEncoder>(spec);
}

std::unique_ptr<Encoder> build(const EncoderSpec& spec) {
    switch (spec.family) {
        case Family::Image2d: return build_image2d(spec);
        case Family::SeqLstm: return build_seq_lstm(spec, *build_image2d(backbone_spec(spec)));
        case Family::SeqBigru: return build_seq_bigru(spec, *build_image2d(backbone_spec(spec)));
        case Family::St3dResidual:
        case Family::St3dInception: return build_st3d(spec);
    }
    throw Error(ErrorKind::BadSpec, "unknown family");
}

void save_checkpoint(const std::filesystem::path& path, const Encoder& model, const json& extra) {
    nn::Archive a = nn::snapshot(model.params());
    a.meta = json{{"kind", "stdeep-checkpoint"}, {"spec", model.spec().to_json()}, {"extra", extra}};
    a.save(path);
}

std::unique_ptr<Encoder> load_checkpoint(const std::filesystem::path& path, json* meta) {
    const nn::Archive a = nn::Archive::load(path);
    if (!a.meta.contains("spec")) throw Error(ErrorKind::BadArchive, "archive has no encoder spec");
    auto model = build(EncoderSpec::from_json(a.meta["spec"]));
    nn::restore(model->params(), a, true);
    if (meta) *meta = a.meta;
    return model;
}

void copy_weights(const Encoder& from, Encoder& to) {
    for (auto* p : to.params().all()) {
        const auto* src = from.params().find(p->name);
        if (!src) throw Error(ErrorKind::BadSpec, "missing parameter " + p->name);
        if (src->value().shape() != p->value().shape()) throw Error(ErrorKind::BadSpec, "shape mismatch for " + p->name);
        p->var->value = src->value();
    }
}

}  // namespace stdeep::enc
