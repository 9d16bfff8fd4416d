#pragma once

// Small on-disk corpora and reduced encoders shared by the training-path tests.

#include <filesystem>
#include <string>

#include "stdeep/encoders.hpp"
#include "stdeep/synthcorpus.hpp"
#include "stdeep/trainer.hpp"

namespace stdeep::fixture {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("stdeep_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// 4/2/2 reals with four fakes each, 32 px frames; built once per process.
inline const CorpusManifest& tiny_corpus() {
    static const CorpusManifest m = [] {
        synth::CorpusConfig c;
        c.real_train = 4;
        c.real_val = 2;
        c.real_test = 2;
        c.min_frames = 16;
        c.max_frames = 18;
        c.real.size = 32;
        return synth::build_corpus(c, 21, temp_dir("tiny_corpus"));
    }();
    return m;
}

inline enc::EncoderSpec tiny_image2d() {
    auto s = enc::preset("desk_image2d");
    s.resolution = 16;
    s.width_multiplier = 0.125;
    s.n_blocks = 3;
    return s;
}

inline enc::EncoderSpec tiny_st3d() {
    auto s = enc::preset("desk_st3d");
    s.resolution = 16;
    s.width_multiplier = 0.0625;
    s.n_stages = 2;
    s.stage_temporal_strides = {1, 1};
    s.blocks_per_stage = 1;
    return s;
}

inline train::TrainConfig quick_config(int epochs = 3) {
    auto c = train::desk_config(enc::Family::Image2d);
    c.max_epochs = epochs;
    c.batch_size = 4;
    c.seed = 9;
    return c;
}

}  // namespace stdeep::fixture
