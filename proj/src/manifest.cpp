#include "stdeep/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "stdeep/error.hpp"
#include "stdeep/imageio.hpp"
#include "stdeep/seed.hpp"

namespace stdeep {

using nlohmann::json;

std::string split_name(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw Error(ErrorKind::BadManifest, "unknown split '" + name + "'");
}

bool VideoRecord::has_tag(const std::string& tag) const {
    return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::vector<const VideoRecord*> CorpusManifest::in_split(Split split) const {
    std::vector<const VideoRecord*> out;
    for (const auto& r : records)
        if (r.split == split) out.push_back(&r);
    return out;
}

std::vector<std::string> CorpusManifest::methods() const {
    std::set<std::string> names;
    for (const auto& r : records)
        if (r.fake) names.insert(r.method);
    return {names.begin(), names.end()};
}

const VideoRecord* CorpusManifest::find(const std::string& id) const {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

std::filesystem::path CorpusManifest::frame_path(const VideoRecord& record) const {
    return root / record.frame_dir;
}

CorpusManifest CorpusManifest::without_methods(const std::set<std::string>& excluded) const {
    CorpusManifest out = *this;
    out.records.clear();
    for (const auto& r : records) {
        if (r.fake && r.split != Split::Test && excluded.count(r.method)) continue;
        out.records.push_back(r);
    }
    return out;
}

CorpusManifest CorpusManifest::with_tag(const std::string& tag) const {
    CorpusManifest out = *this;
    out.records.clear();
    for (const auto& r : records)
        if (r.has_tag(tag)) out.records.push_back(r);
    return out;
}

std::string CorpusManifest::fingerprint() const {
    std::uint64_t h = derive_seed(seed, "manifest");
    for (const auto& r : records) h = derive_seed(h, r.id, split_name(r.split), r.method);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void CorpusManifest::validate() const {
    std::set<std::string> ids;
    for (const auto& r : records) {
        if (r.id.empty()) throw Error(ErrorKind::BadManifest, "record with empty id");
        if (!ids.insert(r.id).second) throw Error(ErrorKind::BadManifest, "duplicate id " + r.id);
        if (r.fake == (r.method == "real"))
            throw Error(ErrorKind::BadManifest, "label and method disagree for " + r.id);
        if (r.n_frames <= 0) throw Error(ErrorKind::BadManifest, "no frames for " + r.id);
    }
}

namespace {

json to_json(const VideoRecord& r) {
    json j{{"id", r.id},
           {"split", split_name(r.split)},
           {"label", r.fake ? "fake" : "real"},
           {"method", r.method},
           {"frame_dir", r.frame_dir},
           {"n_frames", r.n_frames}};
    if (!r.tags.empty()) j["tags"] = r.tags;
    if (!r.source.empty()) j["source"] = r.source;
    return j;
}

VideoRecord from_json(const json& j) {
    VideoRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.split = parse_split(j.at("split").get<std::string>());
        const auto label = j.at("label").get<std::string>();
        if (label != "real" && label != "fake") throw Error(ErrorKind::BadManifest, "bad label " + label);
        r.fake = label == "fake";
        r.method = j.at("method").get<std::string>();
        r.frame_dir = j.at("frame_dir").get<std::string>();
        r.n_frames = j.at("n_frames").get<int>();
        if (j.contains("tags")) r.tags = j["tags"].get<std::vector<std::string>>();
        if (j.contains("source")) r.source = j["source"].get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::BadManifest, std::string("malformed manifest record: ") + e.what());
    }
    return r;
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    for (const auto& r : manifest.records) out << to_json(r).dump() << '\n';
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    CorpusManifest m;
    m.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::BadManifest, std::string("invalid JSON line: ") + e.what());
        }
        m.records.push_back(from_json(j));
    }
    m.validate();
    return m;
}

std::vector<cv::Mat> load_frames(const CorpusManifest& manifest, const VideoRecord& record) {
    const auto dir = manifest.frame_path(record);
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::NoFrames, "missing frame directory " + dir.string());
    std::vector<std::pair<long, std::filesystem::path>> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".png") continue;
        try {
            files.emplace_back(std::stol(entry.path().stem().string()), entry.path());
        } catch (const std::exception&) {
            // non-numeric names are not frames
        }
    }
    if (files.empty()) throw Error(ErrorKind::NoFrames, "no frames in " + dir.string());
    std::sort(files.begin(), files.end());
    std::vector<cv::Mat> frames;
    frames.reserve(files.size());
    for (const auto& [index, file] : files) frames.push_back(read_rgb(file));
    return frames;
}

const std::vector<cv::Mat>& FrameCache::get(const VideoRecord& record) {
    auto it = cache_.find(record.id);
    if (it == cache_.end()) it = cache_.emplace(record.id, load_frames(*manifest_, record)).first;
    return it->second;
}

}  // namespace stdeep
