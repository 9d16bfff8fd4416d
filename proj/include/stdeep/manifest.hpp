#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace stdeep {

enum class Split { Train, Val, Test };

std::string split_name(Split split);
Split parse_split(const std::string& name);

/// One labelled video: an ordered directory of face-crop frames.
struct VideoRecord {
    std::string id;
    Split split = Split::Train;
    bool fake = false;
    std::string method = "real";  ///< "real" for pristine videos
    std::string frame_dir;        ///< relative to the manifest's root
    int n_frames = 0;
    std::vector<std::string> tags;
    std::string source;  ///< real video a fake was derived from

    int label() const { return fake ? 1 : 0; }
    bool has_tag(const std::string& tag) const;
};

struct CorpusManifest {
    std::vector<VideoRecord> records;
    std::uint64_t seed = 0;
    std::filesystem::path root;  ///< directory frame_dir entries resolve against

    std::vector<const VideoRecord*> in_split(Split split) const;
    /// Fake method names present, sorted.
    std::vector<std::string> methods() const;
    const VideoRecord* find(const std::string& id) const;
    std::filesystem::path frame_path(const VideoRecord& record) const;

    /// Drops fakes of the listed methods from train and val; test is untouched.
    CorpusManifest without_methods(const std::set<std::string>& excluded) const;
    /// Keeps only records carrying the tag.
    CorpusManifest with_tag(const std::string& tag) const;

    /// Hex digest of the seed and every (id, split, method); independent of the root.
    std::string fingerprint() const;

    /// Checks unique ids, labels and method tags; throws BadManifest.
    void validate() const;
};

/// JSON lines, one record per line, keys sorted.
void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);
/// Reads a JSONL manifest; the root becomes the file's directory.
CorpusManifest read_manifest(const std::filesystem::path& path);

/// Loads all PNG frames of a record in numeric file-name order (8-bit RGB).
std::vector<cv::Mat> load_frames(const CorpusManifest& manifest, const VideoRecord& record);

/// Memoising frame loader for repeated passes over the same corpus.
class FrameCache {
public:
    explicit FrameCache(const CorpusManifest& manifest) : manifest_(&manifest) {}
    const std::vector<cv::Mat>& get(const VideoRecord& record);

private:
    const CorpusManifest* manifest_;
    std::map<std::string, std::vector<cv::Mat>> cache_;
};

}  // namespace stdeep
