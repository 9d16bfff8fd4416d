#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "stdeep/nn/layers.hpp"

namespace stdeep::nn {

/**
 * Flat archive of named float64 arrays plus free-form JSON metadata.
 *
 * On-disk layout (little-endian):
 *   8 bytes   magic "STDEEPA1"
 *   u64       header length in bytes
 *   header    UTF-8 JSON {"meta": ..., "arrays": [{"name", "shape", "offset", "count"}]}
 *   payload   raw float64 values; offsets are relative to the payload start
 *
 * Values are stored bit-for-bit, so save -> load reproduces a model exactly.
 */
struct Archive {
    nlohmann::json meta = nlohmann::json::object();
    std::map<std::string, Tensor> arrays;

    void save(const std::filesystem::path& path) const;
    static Archive load(const std::filesystem::path& path);
};

/// Snapshot of every parameter in the store.
Archive snapshot(const ParameterStore& store);

/**
 * Copies archive arrays into same-named parameters. With strict, every
 * parameter must be present; otherwise missing names are skipped (the
 * pretrained-weight import path). Shape mismatches always throw.
 * Returns the number of parameters assigned.
 */
std::size_t restore(ParameterStore& store, const Archive& archive, bool strict = true);

}  // namespace stdeep::nn
