#pragma once

// Raster tiles: row-major float intensities in [0,1] plus world-frame
// georeferencing (planar meters, no geodesy). I/O is binary PGM/PPM with
// a sidecar text header `origin_x origin_y resolution`.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "geoplan/common.hpp"

namespace geoplan {

struct RasterTile {
    int width{0};
    int height{0};
    int channels{1};
    std::vector<double> data;  // row-major, channel-interleaved
    Vec2 origin;               // world coordinates of pixel (0,0)
    double resolution{1.0};    // meters per pixel

    static RasterTile zeros(int w, int h, int c = 1, Vec2 origin = {},
                            double resolution = 1.0) {
        RasterTile t;
        t.width = w;
        t.height = h;
        t.channels = c;
        t.data.assign(static_cast<size_t>(w) * h * c, 0.0);
        t.origin = origin;
        t.resolution = resolution;
        return t;
    }

    double& at(int row, int col, int ch = 0) {
        return data[(static_cast<size_t>(row) * width + col) * channels + ch];
    }
    double at(int row, int col, int ch = 0) const {
        return data[(static_cast<size_t>(row) * width + col) * channels + ch];
    }

    bool inBounds(int row, int col) const {
        return row >= 0 && row < height && col >= 0 && col < width;
    }

    // center of pixel (row, col) in world meters
    Vec2 pixelToWorld(int row, int col) const {
        return {origin.x + (col + 0.5) * resolution,
                origin.y + (row + 0.5) * resolution};
    }

    void validate() const {
        if (width < 0 || height < 0 || channels <= 0)
            fail(GeoplanError::Kind::Parameter, "raster: bad dimensions");
        if (resolution <= 0)
            fail(GeoplanError::Kind::Parameter, "raster: resolution must be > 0");
        if (data.size() != static_cast<size_t>(width) * height * channels)
            fail(GeoplanError::Kind::Dimension, "raster: data length mismatch");
        for (double v : data)
            if (!(v >= 0.0 && v <= 1.0))
                fail(GeoplanError::Kind::Parameter, "raster: intensity outside [0,1]");
    }
};

namespace pnm {

inline void skipWhitespaceAndComments(std::istream& in) {
    int c;
    while ((c = in.peek()) != EOF) {
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
}

// Reads a binary P5 (graymap) or P6 (pixmap) file. The sidecar path is
// `<path>.geo`; when absent, origin (0,0) and resolution 1 are used.
inline RasterTile read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(GeoplanError::Kind::Io, "cannot open raster file: " + path);

    std::string magic;
    in >> magic;
    int channels = 0;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else fail(GeoplanError::Kind::Io, path + ": bad magic '" + magic + "' (want P5/P6)");

    int width = 0, height = 0, maxval = 0;
    skipWhitespaceAndComments(in); in >> width;
    skipWhitespaceAndComments(in); in >> height;
    skipWhitespaceAndComments(in); in >> maxval;
    if (!in || width < 0 || height < 0 || maxval <= 0 || maxval > 255)
        fail(GeoplanError::Kind::Io, path + ": bad header (width/height/maxval)");
    in.get();  // single whitespace byte before pixel data

    RasterTile tile = RasterTile::zeros(width, height, channels);
    std::vector<uint8_t> raw(static_cast<size_t>(width) * height * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
        fail(GeoplanError::Kind::Io, path + ": truncated pixel data");
    for (size_t i = 0; i < raw.size(); ++i)
        tile.data[i] = static_cast<double>(raw[i]) / maxval;

    std::ifstream geo(path + ".geo");
    if (geo) {
        double ox, oy, res;
        if (!(geo >> ox >> oy >> res) || res <= 0)
            fail(GeoplanError::Kind::Io, path + ".geo: expected 'origin_x origin_y resolution'");
        tile.origin = {ox, oy};
        tile.resolution = res;
    }
    return tile;
}

inline void write(const std::string& path, const RasterTile& tile) {
    if (tile.channels != 1 && tile.channels != 3)
        fail(GeoplanError::Kind::Parameter, "pnm write: channels must be 1 or 3");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(GeoplanError::Kind::Io, "cannot write raster file: " + path);
    out << (tile.channels == 1 ? "P5" : "P6") << "\n"
        << tile.width << " " << tile.height << "\n255\n";
    std::vector<uint8_t> raw(tile.data.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        double v = std::clamp(tile.data[i], 0.0, 1.0);
        raw[i] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));

    std::ofstream geo(path + ".geo");
    geo << tile.origin.x << " " << tile.origin.y << " " << tile.resolution << "\n";
}

}  // namespace pnm
}  // namespace geoplan
