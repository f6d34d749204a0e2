#include "ratemap/gridmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ratemap {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_range(GridMap& map, const std::string& path) {
    for (int i = 0; i < map.size(); ++i) {
        double v = map.values[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            Cell c = map.cell(i);
            fail(path + ": value " + std::to_string(v) + " out of [0,1] at (" +
                 std::to_string(c.row) + "," + std::to_string(c.col) + ")");
        }
    }
}

GridMap load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    std::vector<double> vals;
    int rows = 0, cols = -1;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        int c = 0;
        while (std::getline(ss, tok, ',')) {
            size_t pos = 0;
            double v;
            try {
                v = std::stod(tok, &pos);
            } catch (const std::exception&) {
                fail(path + ": parse error at (" + std::to_string(rows) + "," +
                     std::to_string(c) + ")");
            }
            vals.push_back(v);
            ++c;
        }
        if (cols < 0) cols = c;
        else if (c != cols) fail(path + ": ragged row " + std::to_string(rows));
        ++rows;
    }
    if (rows == 0 || cols <= 0) fail(path + ": empty map");
    GridMap map{rows, cols, Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size())};
    check_range(map, path);
    return map;
}

// Skips whitespace and '#' comment lines in a PGM header.
int next_pgm_int(std::istream& in, const std::string& path) {
    char ch;
    while (in.get(ch)) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        if (ch == '#') {
            std::string junk;
            std::getline(in, junk);
            continue;
        }
        in.unget();
        int v;
        if (in >> v) return v;
        break;
    }
    fail(path + ": truncated PGM header");
}

GridMap load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5") fail(path + ": not a P2/P5 PGM");
    int cols = next_pgm_int(in, path);
    int rows = next_pgm_int(in, path);
    int maxval = next_pgm_int(in, path);
    if (rows <= 0 || cols <= 0 || maxval <= 0 || maxval > 65535)
        fail(path + ": bad PGM dimensions");
    GridMap map{rows, cols, Eigen::VectorXd(rows * cols)};
    if (magic == "P2") {
        for (int i = 0; i < map.size(); ++i) {
            int v = next_pgm_int(in, path);
            map.values[i] = static_cast<double>(v) / maxval;
        }
    } else {
        in.get();  // single whitespace after maxval
        int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> buf(static_cast<size_t>(map.size()) * bytes);
        in.read(reinterpret_cast<char*>(buf.data()), buf.size());
        if (!in) fail(path + ": truncated PGM payload");
        for (int i = 0; i < map.size(); ++i) {
            int v = bytes == 1 ? buf[i] : (buf[2 * i] << 8) | buf[2 * i + 1];
            map.values[i] = static_cast<double>(v) / maxval;
        }
    }
    check_range(map, path);
    return map;
}

}  // namespace

GridMap load_map(const std::string& path, MapFormat format) {
    return format == MapFormat::csv ? load_csv(path) : load_pgm(path);
}

GridMap load_map(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "pgm") return load_pgm(path);
    if (ext == "csv") return load_csv(path);
    fail(path + ": unknown map extension (expected .pgm or .csv)");
}

void save_pgm(const Eigen::VectorXd& values, int rows, int cols,
              const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write " + path);
    out << "P2\n" << cols << " " << rows << "\n255\n";
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double v = std::clamp(values[r * cols + c], 0.0, 1.0);
            out << static_cast<int>(std::lround(v * 255.0))
                << (c + 1 == cols ? '\n' : ' ');
        }
    }
}

void save_csv(const Eigen::VectorXd& values, int rows, int cols,
              const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write " + path);
    out.precision(17);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c)
            out << values[r * cols + c] << (c + 1 == cols ? '\n' : ',');
    }
}

FovSelection fov_indices(Cell center, int fov_rows, int fov_cols,
                         const GridMap& map) {
    if (!map.contains(center)) fail("fov center outside map");
    if (fov_rows <= 0 || fov_cols <= 0 || fov_rows % 2 == 0 || fov_cols % 2 == 0)
        fail("FOV dimensions must be odd and positive");
    int r0 = std::max(0, center.row - fov_rows / 2);
    int r1 = std::min(map.rows - 1, center.row + fov_rows / 2);
    int c0 = std::max(0, center.col - fov_cols / 2);
    int c1 = std::min(map.cols - 1, center.col + fov_cols / 2);
    FovSelection sel;
    sel.indices.reserve(static_cast<size_t>(r1 - r0 + 1) * (c1 - c0 + 1));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) sel.indices.push_back(r * map.cols + c);
    return sel;
}

FovSelection complement_indices(const FovSelection& sel, int d) {
    std::vector<char> in_sel(d, 0);
    for (int i : sel.indices) {
        if (i < 0 || i >= d) fail("selection index out of range");
        in_sel[i] = 1;
    }
    FovSelection comp;
    comp.indices.reserve(d - sel.size());
    for (int i = 0; i < d; ++i)
        if (!in_sel[i]) comp.indices.push_back(i);
    return comp;
}

WeightVector path_weights(const std::vector<Cell>& path, double sigma,
                          const GridMap& map, double floor) {
    if (path.empty()) fail("path_weights: empty path");
    if (sigma <= 0.0) fail("path_weights: sigma must be positive");
    WeightVector wv{Eigen::VectorXd(map.size())};
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int i = 0; i < map.size(); ++i) {
        Cell p = map.cell(i);
        double best = 0.0;
        for (const Cell& q : path) {
            double dr = p.row - q.row, dc = p.col - q.col;
            best = std::max(best, std::exp(-(dr * dr + dc * dc) * inv));
        }
        wv.w[i] = std::max(floor, best);
    }
    return wv;
}

GridMap elevation_to_traversability(const Eigen::MatrixXd& elev) {
    const int rows = static_cast<int>(elev.rows());
    const int cols = static_cast<int>(elev.cols());
    if (rows == 0 || cols == 0) fail("empty elevation grid");
    Eigen::VectorXd z(rows * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                    acc += std::abs(elev(r, c) - elev(rr, cc));
                }
            }
            z[r * cols + c] = acc;
        }
    }
    double lo = z.minCoeff(), hi = z.maxCoeff();
    GridMap map{rows, cols, Eigen::VectorXd::Zero(rows * cols)};
    if (hi > lo) map.values = (z.array() - lo) / (hi - lo);
    return map;
}

Eigen::VectorXd block_average_prior(const GridMap& map, int block) {
    if (block <= 0 || map.rows % block != 0 || map.cols % block != 0)
        fail("block size must divide map dimensions");
    Eigen::VectorXd prior(map.size());
    for (int br = 0; br < map.rows; br += block) {
        for (int bc = 0; bc < map.cols; bc += block) {
            double sum = 0.0;
            for (int r = br; r < br + block; ++r)
                for (int c = bc; c < bc + block; ++c)
                    sum += map.values[r * map.cols + c];
            double avg = sum / (block * block);
            for (int r = br; r < br + block; ++r)
                for (int c = bc; c < bc + block; ++c)
                    prior[r * map.cols + c] = avg;
        }
    }
    return prior;
}

}  // namespace ratemap
