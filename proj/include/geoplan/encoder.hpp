#pragma once

// Patch encoder stand-in for a frozen satellite backbone: each patch is
// mapped through a fixed seeded random projection and L2-normalized.
// Canonical road prototypes are built from procedurally rendered templates.

#include <string>
#include <vector>

#include "geoplan/common.hpp"
#include "geoplan/raster.hpp"

namespace geoplan {

struct FeatureMap {
    int gridWidth{0};   // tokens per row (W')
    int gridHeight{0};  // token rows (H')
    int dim{0};
    std::vector<double> data;  // token-major, row-major grid

    const double* token(int row, int col) const {
        return data.data() + (static_cast<size_t>(row) * gridWidth + col) * dim;
    }
    double* token(int row, int col) {
        return data.data() + (static_cast<size_t>(row) * gridWidth + col) * dim;
    }
};

struct PrototypeSet {
    std::vector<std::vector<double>> prototypes;  // unit L2 norm
    std::vector<std::string> labels;

    int dim() const { return prototypes.empty() ? 0 : static_cast<int>(prototypes[0].size()); }

    void validate() const {
        if (prototypes.empty())
            fail(GeoplanError::Kind::Parameter, "prototype set must be non-empty");
        for (const auto& p : prototypes) {
            double n = l2norm(p);
            if (std::abs(n - 1.0) > 1e-6)
                fail(GeoplanError::Kind::Parameter, "prototype not unit norm");
        }
    }
};

namespace detail {

// Fixed projection matrix for a given (seed, inputLen, dim). Entries are
// N(0, 1/sqrt(inputLen)) so projected magnitudes stay O(1).
inline std::vector<double> projectionMatrix(uint64_t seed, int inputLen, int dim) {
    RngStream rng(seed, "patch-projection");
    std::vector<double> m(static_cast<size_t>(dim) * inputLen);
    double scale = 1.0 / std::sqrt(static_cast<double>(inputLen));
    for (auto& v : m) v = rng.normal(0.0, scale);
    return m;
}

inline void normalizeOrZero(double* v, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += v[i] * v[i];
    double n = std::sqrt(s);
    if (n > 1e-12)
        for (int i = 0; i < dim; ++i) v[i] /= n;
    else
        for (int i = 0; i < dim; ++i) v[i] = 0.0;
}

}  // namespace detail

inline FeatureMap encodeTile(const RasterTile& tile, int patchSize, int dim, uint64_t seed) {
    if (patchSize <= 0 || tile.width % patchSize != 0 || tile.height % patchSize != 0)
        fail(GeoplanError::Kind::Dimension,
             "encodeTile: patchSize must divide tile width and height");
    const int gw = tile.width / patchSize;
    const int gh = tile.height / patchSize;
    const int inputLen = patchSize * patchSize * tile.channels;

    FeatureMap fm;
    fm.gridWidth = gw;
    fm.gridHeight = gh;
    fm.dim = dim;
    fm.data.assign(static_cast<size_t>(gw) * gh * dim, 0.0);

    const std::vector<double> proj = detail::projectionMatrix(seed, inputLen, dim);
    std::vector<double> patch(inputLen);
    for (int gr = 0; gr < gh; ++gr) {
        for (int gc = 0; gc < gw; ++gc) {
            int idx = 0;
            for (int pr = 0; pr < patchSize; ++pr)
                for (int pc = 0; pc < patchSize; ++pc)
                    for (int ch = 0; ch < tile.channels; ++ch)
                        patch[idx++] = tile.at(gr * patchSize + pr, gc * patchSize + pc, ch);
            double* out = fm.token(gr, gc);
            for (int d = 0; d < dim; ++d) {
                double acc = 0.0;
                const double* row = proj.data() + static_cast<size_t>(d) * inputLen;
                for (int i = 0; i < inputLen; ++i) acc += row[i] * patch[i];
                out[d] = acc;
            }
            detail::normalizeOrZero(out, dim);
        }
    }
    return fm;
}

// Max-over-prototypes cosine similarity per token. Tokens are unit norm (or
// zero for empty patches), so the dot product is the cosine directly.
inline std::vector<double> similarityMap(const FeatureMap& fm, const PrototypeSet& protos) {
    protos.validate();
    if (protos.dim() != fm.dim)
        fail(GeoplanError::Kind::Dimension, "similarityMap: prototype dim mismatch");
    std::vector<double> sim(static_cast<size_t>(fm.gridWidth) * fm.gridHeight,
                            -1.0);
    for (int r = 0; r < fm.gridHeight; ++r) {
        for (int c = 0; c < fm.gridWidth; ++c) {
            const double* t = fm.token(r, c);
            double best = -1.0;
            for (const auto& p : protos.prototypes) {
                double dot = 0.0;
                for (int d = 0; d < fm.dim; ++d) dot += t[d] * p[d];
                best = std::max(best, dot);
            }
            sim[static_cast<size_t>(r) * fm.gridWidth + c] = best;
        }
    }
    return sim;
}

namespace detail {

// Renders one patchSize x patchSize road template: bright 1-px-wide stroke
// on a dark background.
inline RasterTile renderTemplate(int patchSize, const std::string& kind) {
    RasterTile t = RasterTile::zeros(patchSize, patchSize, 1);
    const int mid = patchSize / 2;
    auto hline = [&] { for (int c = 0; c < patchSize; ++c) t.at(mid, c) = 1.0; };
    auto vline = [&] { for (int r = 0; r < patchSize; ++r) t.at(r, mid) = 1.0; };
    if (kind == "straight-h") {
        hline();
    } else if (kind == "straight-v") {
        vline();
    } else if (kind == "diag-main") {
        for (int i = 0; i < patchSize; ++i) t.at(i, i) = 1.0;
    } else if (kind == "diag-anti") {
        for (int i = 0; i < patchSize; ++i) t.at(i, patchSize - 1 - i) = 1.0;
    } else if (kind == "corner") {
        for (int c = mid; c < patchSize; ++c) t.at(mid, c) = 1.0;
        for (int r = mid; r < patchSize; ++r) t.at(r, mid) = 1.0;
    } else if (kind == "t-junction") {
        hline();
        for (int r = mid; r < patchSize; ++r) t.at(r, mid) = 1.0;
    } else if (kind == "cross") {
        hline();
        vline();
    } else {
        fail(GeoplanError::Kind::Parameter, "unknown template kind: " + kind);
    }
    return t;
}

}  // namespace detail

// Prototype per template class: mean of the encodings of the template patch
// and its one-pixel translates, renormalized. The support set is just the
// translate stack, which keeps prototype construction fully procedural.
inline PrototypeSet buildPrototypes(int patchSize, int dim, uint64_t seed) {
    static const char* kinds[] = {"straight-h", "straight-v", "diag-main",
                                  "diag-anti",  "corner",     "t-junction",
                                  "cross"};
    PrototypeSet set;
    for (const char* kind : kinds) {
        std::vector<double> mean(dim, 0.0);
        RasterTile tmpl = detail::renderTemplate(patchSize, kind);
        // shift the stroke around inside the patch to average out placement
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                RasterTile shifted = RasterTile::zeros(patchSize, patchSize, 1);
                for (int r = 0; r < patchSize; ++r)
                    for (int c = 0; c < patchSize; ++c) {
                        int sr = r - dr, sc = c - dc;
                        if (sr >= 0 && sr < patchSize && sc >= 0 && sc < patchSize)
                            shifted.at(r, c) = tmpl.at(sr, sc);
                    }
                FeatureMap fm = encodeTile(shifted, patchSize, dim, seed);
                for (int d = 0; d < dim; ++d) mean[d] += fm.data[d];
            }
        }
        detail::normalizeOrZero(mean.data(), dim);
        set.prototypes.push_back(std::move(mean));
        set.labels.emplace_back(kind);
    }
    return set;
}

}  // namespace geoplan
