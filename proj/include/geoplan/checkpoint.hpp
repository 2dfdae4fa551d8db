#pragma once

// Checkpoints: flat binary of little-endian 64-bit floats plus a JSON
// sidecar (`<path>.json`) describing tensor names, shapes, offsets, and the
// RNG seed the parameters were derived from.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoplan/common.hpp"

namespace geoplan {

struct TensorStore {
    struct Entry {
        std::vector<int64_t> shape;
        std::vector<double> values;
    };
    std::map<std::string, Entry> tensors;  // ordered -> stable layout
    uint64_t seed{0};

    void put(const std::string& name, std::vector<int64_t> shape,
             std::vector<double> values) {
        int64_t count = 1;
        for (int64_t d : shape) count *= d;
        if (count != static_cast<int64_t>(values.size()))
            fail(GeoplanError::Kind::Dimension, "tensor '" + name + "': shape/value mismatch");
        tensors[name] = {std::move(shape), std::move(values)};
    }

    const Entry& get(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end())
            fail(GeoplanError::Kind::Lookup, "checkpoint missing tensor '" + name + "'");
        return it->second;
    }
};

namespace checkpoint {

inline void save(const std::string& path, const TensorStore& store) {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) fail(GeoplanError::Kind::Io, "cannot write checkpoint: " + path);
    nlohmann::json sidecar;
    sidecar["seed"] = store.seed;
    sidecar["tensors"] = nlohmann::json::array();
    int64_t offset = 0;
    for (const auto& [name, entry] : store.tensors) {
        sidecar["tensors"].push_back(
            {{"name", name}, {"shape", entry.shape}, {"offset", offset}});
        // assumes little-endian host, as does the format
        bin.write(reinterpret_cast<const char*>(entry.values.data()),
                  static_cast<std::streamsize>(entry.values.size() * sizeof(double)));
        offset += static_cast<int64_t>(entry.values.size());
    }
    std::ofstream side(path + ".json");
    side << sidecar.dump(2) << "\n";
}

inline TensorStore load(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) fail(GeoplanError::Kind::Io, "cannot read checkpoint sidecar: " + path + ".json");
    nlohmann::json sidecar = nlohmann::json::parse(side);
    std::ifstream bin(path, std::ios::binary);
    if (!bin) fail(GeoplanError::Kind::Io, "cannot read checkpoint: " + path);

    TensorStore store;
    store.seed = sidecar.at("seed").get<uint64_t>();
    for (const auto& t : sidecar.at("tensors")) {
        TensorStore::Entry entry;
        entry.shape = t.at("shape").get<std::vector<int64_t>>();
        int64_t count = 1;
        for (int64_t d : entry.shape) count *= d;
        entry.values.resize(static_cast<size_t>(count));
        bin.seekg(static_cast<std::streamoff>(t.at("offset").get<int64_t>() * sizeof(double)));
        bin.read(reinterpret_cast<char*>(entry.values.data()),
                 static_cast<std::streamsize>(entry.values.size() * sizeof(double)));
        if (static_cast<size_t>(bin.gcount()) != entry.values.size() * sizeof(double))
            fail(GeoplanError::Kind::Io, "checkpoint truncated: " + path);
        store.tensors[t.at("name").get<std::string>()] = std::move(entry);
    }
    return store;
}

}  // namespace checkpoint
}  // namespace geoplan
