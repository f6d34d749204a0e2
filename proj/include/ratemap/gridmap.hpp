#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ratemap {

struct Cell {
    int row = 0;
    int col = 0;
    bool operator==(const Cell&) const = default;
};

// Traversability grid, row-major, values in [0,1] (0 free, 1 untraversable).
struct GridMap {
    int rows = 0;
    int cols = 0;
    Eigen::VectorXd values;

    int size() const { return rows * cols; }
    bool contains(Cell c) const {
        return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols;
    }
    int index(Cell c) const { return c.row * cols + c.col; }
    Cell cell(int idx) const { return {idx / cols, idx % cols}; }
    double at(Cell c) const { return values[index(c)]; }
};

// Index-set form of a 0/1 selection matrix. Indices are distinct global
// cell indices in canonical row-major order of the covered region.
struct FovSelection {
    std::vector<int> indices;
    int size() const { return static_cast<int>(indices.size()); }
};

struct WeightVector {
    Eigen::VectorXd w;
};

enum class MapFormat { pgm, csv };

GridMap load_map(const std::string& path, MapFormat format);
// Format deduced from the file extension (.pgm or .csv).
GridMap load_map(const std::string& path);

// Writes values clamped to [0,1] as an 8-bit P2 PGM.
void save_pgm(const Eigen::VectorXd& values, int rows, int cols,
              const std::string& path);
void save_csv(const Eigen::VectorXd& values, int rows, int cols,
              const std::string& path);

// Row-major indices of the fov_rows x fov_cols rectangle centered at
// `center`, clipped to the map bounds. FOV dimensions must be odd.
FovSelection fov_indices(Cell center, int fov_rows, int fov_cols,
                         const GridMap& map);

// Sorted complement of `sel` in {0, ..., d-1}.
FovSelection complement_indices(const FovSelection& sel, int d);

// Gaussian proximity weights: w(p) = max(floor, max_{p_pi in path}
// exp(-||p - p_pi||^2 / (2 sigma^2))), Euclidean distance in cell units.
WeightVector path_weights(const std::vector<Cell>& path, double sigma,
                          const GridMap& map, double floor = 1e-6);

// Local elevation variability over the 8-neighborhood, normalized to [0,1].
// A constant elevation grid maps to all zeros.
GridMap elevation_to_traversability(const Eigen::MatrixXd& elev);

// Per-cell prior mean equal to the average of the cell's block x block tile.
Eigen::VectorXd block_average_prior(const GridMap& map, int block);

}  // namespace ratemap
