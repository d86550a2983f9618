#include "iim/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "iim/kernels.hpp"

namespace iim {

PixelGrid pixel_grid_of(const Mesh& mesh) { return {mesh.nx(), mesh.ny(), mesh.lx1(), mesh.lx2()}; }

ScalarImage::ScalarImage(PixelGrid grid, double value) : grid_(grid), values_(grid.size(), value) {
    if (grid.width < 1 || grid.height < 1 || !(grid.lx1 > 0.0) || !(grid.lx2 > 0.0)) {
        throw std::invalid_argument("image: grid must have positive size and extent");
    }
}

ScalarImage::ScalarImage(PixelGrid grid, std::vector<double> values) : ScalarImage(grid) {
    if (values.size() != grid.size()) {
        throw std::invalid_argument("image: expected " + std::to_string(grid.size()) + " values, got " +
                                    std::to_string(values.size()));
    }
    values_ = std::move(values);
}

double ScalarImage::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarImage::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarImage::norm() const {
    const std::vector<double> zero(values_.size(), 0.0);
    return std::sqrt(kernels::sum_squared_difference(values_, zero));
}

double squared_l2_distance(const ScalarImage& a, const ScalarImage& b) {
    if (!(a.grid() == b.grid())) {
        throw std::invalid_argument("squared_l2_distance: image grids differ");
    }
    return a.grid().pixel_area() * kernels::sum_squared_difference(a.values(), b.values());
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_pgm(const ScalarImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "P5\n# extent_mm " << format_double(img.grid().lx1) << ' ' << format_double(img.grid().lx2) << '\n'
        << img.width() << ' ' << img.height() << "\n65535\n";
    std::vector<unsigned char> row(2 * static_cast<std::size_t>(img.width()));
    for (std::int32_t r = img.height() - 1; r >= 0; --r) {
        for (std::int32_t c = 0; c < img.width(); ++c) {
            const double v = std::clamp(img.at(c, r), 0.0, 1.0);
            const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
            row[2 * c] = static_cast<unsigned char>(q >> 8);
            row[2 * c + 1] = static_cast<unsigned char>(q & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

ScalarImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string magic;
    in >> magic;
    if (magic != "P5") {
        throw std::runtime_error(path.string() + ": not a binary PGM");
    }
    double lx1 = 0.0;
    double lx2 = 0.0;
    std::vector<long> header;
    while (header.size() < 3 && in) {
        in >> std::ws;
        if (in.peek() == '#') {
            std::string line;
            std::getline(in, line);
            std::istringstream ls(line.substr(1));
            std::string key;
            if (ls >> key && key == "extent_mm") ls >> lx1 >> lx2;
            continue;
        }
        long v = 0;
        in >> v;
        header.push_back(v);
    }
    in.get();
    if (header.size() != 3 || header[2] != 65535) {
        throw std::runtime_error(path.string() + ": expected a 16-bit PGM header");
    }
    PixelGrid grid{static_cast<std::int32_t>(header[0]), static_cast<std::int32_t>(header[1]), lx1 > 0 ? lx1 : header[0],
                   lx2 > 0 ? lx2 : header[1]};
    ScalarImage img(grid);
    std::vector<unsigned char> row(2 * static_cast<std::size_t>(grid.width));
    for (std::int32_t r = grid.height - 1; r >= 0; --r) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) {
            throw std::runtime_error(path.string() + ": truncated pixel data");
        }
        for (std::int32_t c = 0; c < grid.width; ++c) {
            img.at(c, r) = ((row[2 * c] << 8) | row[2 * c + 1]) / 65535.0;
        }
    }
    return img;
}

void write_image_csv(const ScalarImage& img, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << img.width() << ',' << img.height() << ',' << format_double(img.grid().lx1) << ','
        << format_double(img.grid().lx2) << '\n';
    for (std::int32_t r = 0; r < img.height(); ++r) {
        for (std::int32_t c = 0; c < img.width(); ++c) {
            if (c > 0) out << ',';
            out << format_double(img.at(c, r));
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

ScalarImage read_image_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    PixelGrid grid;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &grid.width, &grid.height, &grid.lx1, &grid.lx2) != 4) {
        throw std::runtime_error(path.string() + ": malformed image CSV header");
    }
    ScalarImage img(grid);
    for (std::int32_t r = 0; r < grid.height; ++r) {
        if (!std::getline(in, line)) {
            throw std::runtime_error(path.string() + ": missing row " + std::to_string(r));
        }
        std::istringstream ls(line);
        std::string cell;
        for (std::int32_t c = 0; c < grid.width; ++c) {
            if (!std::getline(ls, cell, ',')) {
                throw std::runtime_error(path.string() + ": short row " + std::to_string(r));
            }
            img.at(c, r) = std::stod(cell);
        }
    }
    return img;
}

}  // namespace iim
