#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "stdeep/error.hpp"
#include "stdeep/evalkit.hpp"
#include "stdeep/facepipe.hpp"
#include "stdeep/probes.hpp"
#include "stdeep/synthcorpus.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace stdeep;

namespace {

using Frame = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::object& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::array_t<std::uint8_t> mat_to_array(const cv::Mat& rgb) {
    py::array_t<std::uint8_t> a({rgb.rows, rgb.cols, 3});
    for (int y = 0; y < rgb.rows; ++y)
        std::memcpy(a.mutable_data(y, 0, 0), rgb.ptr<unsigned char>(y), static_cast<std::size_t>(rgb.cols) * 3);
    return a;
}

cv::Mat array_to_mat(const Frame& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw Error(ErrorKind::InvalidArgument, "frames must be H x W x 3 uint8");
    cv::Mat m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), CV_8UC3);
    std::memcpy(m.data, a.data(), m.total() * 3);
    return m;
}

std::vector<cv::Mat> frames_in(const std::vector<Frame>& frames) {
    std::vector<cv::Mat> out;
    for (const auto& f : frames) out.push_back(array_to_mat(f));
    return out;
}

py::list frames_out(const std::vector<cv::Mat>& frames) {
    py::list out;
    for (const auto& f : frames) out.append(mat_to_array(f));
    return out;
}

py::array_t<double> tensor_to_array(const nn::Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> a(shape);
    std::memcpy(a.mutable_data(), t.data(), t.size() * sizeof(double));
    return a;
}

facepipe::BoundingBox box_from(const py::sequence& s) {
    if (py::len(s) < 4) throw Error(ErrorKind::InvalidArgument, "box needs x, y, w, h");
    facepipe::BoundingBox b{s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>(), s[3].cast<double>()};
    if (py::len(s) > 4) b.frame_index = s[4].cast<int>();
    return b;
}

py::tuple box_to(const facepipe::BoundingBox& b) { return py::make_tuple(b.x, b.y, b.w, b.h, b.frame_index); }

facepipe::FaceTrack track_from(const std::vector<py::sequence>& boxes) {
    facepipe::FaceTrack t;
    for (const auto& b : boxes) t.boxes.push_back(box_from(b));
    return t;
}

py::list track_to(const facepipe::FaceTrack& t) {
    py::list out;
    for (const auto& b : t.boxes) out.append(box_to(b));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "stdeep core bindings";
    m.attr("__version__") = STDEEP_VERSION;

    static py::exception<Error> error(m, "StdeepError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(std::string(e.what()));
            exc.attr("kind") = std::string(error_kind_name(e.kind()));
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    // facepipe
    m.def("iou", [](const py::sequence& a, const py::sequence& b) { return facepipe::iou(box_from(a), box_from(b)); });
    m.def("filter_by_overlap", [](const std::vector<py::sequence>& boxes) {
        return track_to(facepipe::filter_by_overlap(track_from(boxes)));
    });
    m.def(
        "filter_size_outliers",
        [](const std::vector<py::sequence>& boxes, double threshold) {
            return track_to(facepipe::filter_size_outliers(track_from(boxes), {threshold}));
        },
        py::arg("boxes"), py::arg("threshold") = 10.0);
    m.def("schedule_frames", &facepipe::schedule_frames, py::arg("duration_seconds"), py::arg("source_fps"),
          py::arg("sample_rate") = 3.0);

    // synthcorpus and manifests
    m.def(
        "generate_real",
        [](std::uint64_t seed, int n_frames, int size, bool motion_heavy) {
            synth::RealParams p;
            p.size = size;
            return frames_out(synth::generate_real(seed, n_frames, p, motion_heavy).frames);
        },
        py::arg("seed"), py::arg("n_frames"), py::arg("size") = 64, py::arg("motion_heavy") = false);
    m.def(
        "build_corpus",
        [](const std::filesystem::path& out_dir, std::uint64_t seed, int real_train, int real_val, int real_test,
           int size) {
            synth::CorpusConfig c;
            c.real_train = real_train;
            c.real_val = real_val;
            c.real_test = real_test;
            c.real.size = size;
            synth::build_corpus(c, seed, out_dir);
            return out_dir / "manifest.jsonl";
        },
        py::arg("out_dir"), py::arg("seed") = 0, py::arg("real_train") = 72, py::arg("real_val") = 14,
        py::arg("real_test") = 14, py::arg("size") = 64);
    m.def("manifest_fingerprint", [](const std::filesystem::path& p) { return read_manifest(p).fingerprint(); });
    m.def("manifest_records", [](const std::filesystem::path& p) {
        py::list out;
        for (const auto& r : read_manifest(p).records) {
            py::dict d;
            d["id"] = r.id;
            d["split"] = split_name(r.split);
            d["fake"] = r.fake;
            d["method"] = r.method;
            d["n_frames"] = r.n_frames;
            d["tags"] = r.tags;
            out.append(d);
        }
        return out;
    });
    m.def("load_frames", [](const std::filesystem::path& manifest, const std::string& id) {
        const auto man = read_manifest(manifest);
        const auto* r = man.find(id);
        if (r == nullptr) throw Error(ErrorKind::InvalidArgument, "no video " + id);
        return frames_out(load_frames(man, *r));
    });

    // clipper
    m.def(
        "clip_tensor",
        [](const std::vector<Frame>& frames, const std::string& normalization, int resolution) {
            return tensor_to_array(
                clip::to_clip_tensor(frames_in(frames), clip::parse_normalization(normalization), resolution));
        },
        py::arg("frames"), py::arg("normalization") = "imagenet", py::arg("resolution") = 32);

    // encoders
    py::class_<enc::Encoder>(m, "Encoder")
        .def_property_readonly("spec", [](const enc::Encoder& e) { return to_py(e.spec().to_json()); })
        .def_property_readonly("family", [](const enc::Encoder& e) { return enc::family_name(e.spec().family); })
        .def("parameter_count", &enc::Encoder::parameter_count)
        .def(
            "forward",
            [](const enc::Encoder& e, const py::array_t<double, py::array::c_style | py::array::forcecast>& clip) {
                nn::Shape shape(clip.shape(), clip.shape() + clip.ndim());
                nn::Tensor t(shape, std::vector<double>(clip.data(), clip.data() + clip.size()));
                const auto out = e.forward(t);
                py::dict d;
                d["logits"] = out.logits;
                d["features"] = out.features;
                d["stage_shapes"] = out.stage_shapes;
                d["probability"] = out.probability();
                return d;
            },
            "[3, T, H, W] float clip")
        .def(
            "score_video",
            [](const enc::Encoder& e, const std::vector<Frame>& frames, int stride) {
                return eval::score_video(e, frames_in(frames), stride);
            },
            py::arg("frames"), py::arg("stride") = 0)
        .def("save", [](const enc::Encoder& e, const std::filesystem::path& p) { enc::save_checkpoint(p, e); });

    m.def("preset_names", &enc::preset_names);
    m.def(
        "build_encoder",
        [](const std::string& preset, py::object overrides) {
            auto j = enc::preset(preset).to_json();
            if (!overrides.is_none()) j.update(from_py(overrides));
            return enc::build(enc::EncoderSpec::from_json(j));
        },
        py::arg("preset"), py::arg("overrides") = py::none());
    m.def("load_checkpoint", [](const std::filesystem::path& p) { return enc::load_checkpoint(p); });

    // trainer
    m.def(
        "train",
        [](enc::Encoder& model, const std::filesystem::path& manifest, py::object config,
           const std::filesystem::path& out_dir) {
            const auto man = read_manifest(manifest);
            auto j = train::desk_config(model.spec().family).to_json();
            if (!config.is_none()) j.update(from_py(config));
            const auto c = train::TrainConfig::from_json(j);
            c.validate();
            FrameCache cache(man);
            train::TrainHooks hooks;
            if (!out_dir.empty()) {
                hooks.log_path = out_dir / "train_log.jsonl";
                hooks.checkpoint_path = out_dir / "best.ckpt";
            }
            train::TrainResult r;
            {
                py::gil_scoped_release release;
                r = train::train(model, man, c, cache, hooks);
            }
            json log = json::array();
            for (const auto& e : r.log) log.push_back(e.to_json());
            return to_py({{"best_epoch", r.best_epoch},
                          {"best_val_loss", r.best_val_loss},
                          {"final_train_loss", r.final_train_loss},
                          {"log", log}});
        },
        py::arg("model"), py::arg("manifest"), py::arg("config") = py::none(), py::arg("out_dir") = "");

    // evalkit
    m.def(
        "score_split",
        [](const enc::Encoder& model, const std::filesystem::path& manifest, const std::string& split, int stride) {
            const auto man = read_manifest(manifest);
            FrameCache cache(man);
            return eval::score_split(model, man, parse_split(split), cache, stride);
        },
        py::arg("model"), py::arg("manifest"), py::arg("split") = "test", py::arg("stride") = 0);
    m.def(
        "class_precision_table",
        [](const eval::ScoreMap& scores, const std::filesystem::path& manifest, double threshold,
           const std::string& split) {
            return to_py(
                eval::class_precision_table(scores, read_manifest(manifest), threshold, parse_split(split)).to_json());
        },
        py::arg("scores"), py::arg("manifest"), py::arg("threshold") = 0.5, py::arg("split") = "test");
    m.def(
        "table_from_rates",
        [](const std::map<std::string, double>& per_method, double real_acc) {
            return to_py(eval::table_from_rates(per_method, real_acc).to_json());
        },
        py::arg("per_method"), py::arg("real_acc"));
    m.def("reported", &eval::reported);

    // probes
    m.def(
        "perturb",
        [](const std::vector<Frame>& frames, const std::string& spec, std::uint64_t seed) {
            return frames_out(probe::perturb(frames_in(frames), probe::PerturbationSpec::parse(spec, seed)));
        },
        py::arg("frames"), py::arg("spec"), py::arg("seed") = 0);
    m.def(
        "flipped_indices",
        [](int n, const std::string& spec, std::uint64_t seed) {
            return probe::flipped_indices(n, probe::PerturbationSpec::parse(spec, seed));
        },
        py::arg("n_frames"), py::arg("spec"), py::arg("seed") = 0);
    m.def(
        "embed_2d",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& rows, double perplexity,
           int iterations, std::uint64_t seed) {
            if (rows.ndim() != 2) throw Error(ErrorKind::InvalidArgument, "rows must be 2-D");
            std::vector<std::vector<double>> in(static_cast<std::size_t>(rows.shape(0)));
            for (py::ssize_t i = 0; i < rows.shape(0); ++i)
                in[i].assign(rows.data(i, 0), rows.data(i, 0) + rows.shape(1));
            probe::TsneOptions o;
            o.perplexity = perplexity;
            o.iterations = iterations;
            o.seed = seed;
            std::vector<std::array<double, 2>> pts;
            {
                py::gil_scoped_release release;
                pts = probe::embed_2d(in, o);
            }
            py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
            for (std::size_t i = 0; i < pts.size(); ++i) {
                *out.mutable_data(i, 0) = pts[i][0];
                *out.mutable_data(i, 1) = pts[i][1];
            }
            return out;
        },
        py::arg("rows"), py::arg("perplexity") = 40.0, py::arg("iterations") = 2500, py::arg("seed") = 0);
    m.def(
        "grad_cam",
        [](const enc::Encoder& model, const std::vector<Frame>& frames) {
            const auto& s = model.spec();
            const auto map = probe::grad_cam(model, clip::to_clip_tensor(frames_in(frames), s.normalization,
                                                                         s.resolution));
            py::list heat;
            for (const auto& h : map.heatmaps) {
                py::array_t<double> a({h.rows, h.cols});
                for (int y = 0; y < h.rows; ++y)
                    std::memcpy(a.mutable_data(y, 0), h.ptr<double>(y), static_cast<std::size_t>(h.cols) * sizeof(double));
                heat.append(a);
            }
            py::dict d;
            d["heatmaps"] = heat;
            d["prediction"] = map.prediction;
            d["activation_shape"] = map.activation_shape;
            return d;
        },
        py::arg("model"), py::arg("frames"));
}
