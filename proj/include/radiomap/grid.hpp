#pragma once

// Spatial discretization: grid geometry, measurement-to-grid assignment,
// aggregation into sampled maps and mask construction.
//
// All map tensors are row-major N_y x N_x x N_f with values in dB.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace radiomap {

inline constexpr double kDbFloorLinear = 1e-20; // linear power at or below this clamps to -200 dB
inline constexpr double kMissFillDb = 0.0;

double to_db(double linear);
double from_db(double db);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

double distance(Point2 a, Point2 b);

struct Cell {
    std::size_t i = 0; // row (y)
    std::size_t j = 0; // column (x)
    auto operator<=>(const Cell&) const = default;
};

struct GridSpec {
    std::size_t n_y = 1;
    std::size_t n_x = 1;
    double delta_x = 1.0; // meters
    double delta_y = 1.0; // meters
    Point2 origin{};

    // Square region of side `side_m` split into n x n cells.
    static GridSpec square(std::size_t n, double side_m);

    void validate() const;
    std::size_t cell_count() const { return n_y * n_x; }
    std::size_t index(std::size_t i, std::size_t j) const { return i * n_x + j; }
    Cell cell(std::size_t flat) const { return {flat / n_x, flat % n_x}; }
    Point2 point(std::size_t i, std::size_t j) const;
    Point2 point(Cell c) const { return point(c.i, c.j); }
    double extent_x() const { return delta_x * static_cast<double>(n_x); }
    double extent_y() const { return delta_y * static_cast<double>(n_y); }

    bool operator==(const GridSpec&) const = default;
};

struct MeasurementSet {
    std::vector<Point2> locations;
    std::vector<std::vector<double>> values; // per location, N_f values in dB
    std::vector<double> frequencies;         // Hz

    void validate() const;
    std::size_t size() const { return locations.size(); }
};

struct MapTensor {
    GridSpec grid;
    std::vector<double> frequencies; // Hz, size N_f
    std::vector<double> values;      // N_y * N_x * N_f

    MapTensor() = default;
    MapTensor(const GridSpec& g, std::vector<double> freqs, double fill = 0.0);

    std::size_t n_f() const { return frequencies.empty() ? 1 : frequencies.size(); }
    double& at(std::size_t i, std::size_t j, std::size_t f) { return values[(i * grid.n_x + j) * n_f() + f]; }
    double at(std::size_t i, std::size_t j, std::size_t f) const { return values[(i * grid.n_x + j) * n_f() + f]; }
    void validate() const;
};

struct SampledMap {
    GridSpec grid;
    std::vector<double> frequencies;
    std::vector<double> values;            // N_y * N_x * N_f, misses hold kMissFillDb
    std::vector<Cell> omega;               // sorted row-major
    std::vector<double> sample_mask;       // N_y * N_x, 1 on omega, 0 elsewhere
    std::vector<std::uint8_t> buildings;   // N_y * N_x flags, or empty when no building set
    std::vector<std::vector<double>> meta_masks; // extra N_y * N_x side-information channels

    std::size_t n_f() const { return frequencies.empty() ? 1 : frequencies.size(); }
    double at(std::size_t i, std::size_t j, std::size_t f) const { return values[(i * grid.n_x + j) * n_f() + f]; }
    bool observed(std::size_t i, std::size_t j) const { return sample_mask[grid.index(i, j)] != 0.0; }
    bool has_buildings() const { return !buildings.empty(); }

    // Mask fed to the network: the {0,1,-1} combination when a building set
    // is present, the plain sample mask otherwise.
    std::vector<double> network_mask() const;

    void validate() const;
};

// Row-major index sets A_{i,j}: members[grid.index(i,j)] lists measurement indices.
struct Assignment {
    GridSpec grid;
    std::vector<std::vector<std::size_t>> members;

    const std::vector<std::size_t>& at(std::size_t i, std::size_t j) const { return members[grid.index(i, j)]; }
};

// Nearest grid point with row-major tie-breaking; returns flat cell index.
std::size_t nearest_cell(const GridSpec& grid, Point2 x);

Assignment assign_to_grid(const GridSpec& grid, const MeasurementSet& meas);
SampledMap aggregate(const GridSpec& grid, const MeasurementSet& meas, const Assignment& assignment);

// Builds a SampledMap from explicit cell values (used by the synthetic sampler).
SampledMap make_sampled_map(const GridSpec& grid, std::vector<double> frequencies, const std::vector<Cell>& omega,
                            const std::vector<double>& cell_values /* |omega| * N_f */);

// 1 on omega, -1 on buildings, 0 elsewhere. Throws if the sets overlap.
std::vector<double> combine_masks(const GridSpec& grid, const std::vector<double>& sample_mask,
                                  const std::vector<std::uint8_t>& buildings);

// Indices of the k grid points closest to `center` (itself included), row-major tie-break.
std::vector<std::size_t> nearest_cells(const GridSpec& grid, Cell center, std::size_t k);

// Linear-domain average over each cell's k nearest grid points.
MapTensor smooth_map(const MapTensor& map, std::size_t k_neighbors);

} // namespace radiomap
