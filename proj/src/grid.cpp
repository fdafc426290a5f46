#include "radiomap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace radiomap {

double to_db(double linear)
{
    if (!(linear > kDbFloorLinear))
        return -200.0;
    return 10.0 * std::log10(linear);
}

double from_db(double db) { return std::pow(10.0, db / 10.0); }

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

GridSpec GridSpec::square(std::size_t n, double side_m)
{
    GridSpec g;
    g.n_y = g.n_x = n;
    g.delta_x = g.delta_y = side_m / static_cast<double>(n);
    return g;
}

void GridSpec::validate() const
{
    if (n_y < 1 || n_x < 1)
        throw std::invalid_argument("grid must have at least one row and one column");
    if (!(delta_x > 0.0) || !(delta_y > 0.0))
        throw std::invalid_argument("grid spacing must be positive");
    if (!std::isfinite(origin.x) || !std::isfinite(origin.y))
        throw std::invalid_argument("grid origin must be finite");
}

Point2 GridSpec::point(std::size_t i, std::size_t j) const
{
    return {origin.x + static_cast<double>(j) * delta_x, origin.y + static_cast<double>(i) * delta_y};
}

void MeasurementSet::validate() const
{
    if (locations.size() != values.size())
        throw std::invalid_argument("measurement set: " + std::to_string(locations.size()) + " locations but " +
                                    std::to_string(values.size()) + " value vectors");
    const std::size_t nf = frequencies.empty() ? 1 : frequencies.size();
    for (std::size_t n = 0; n < locations.size(); ++n) {
        if (!std::isfinite(locations[n].x) || !std::isfinite(locations[n].y))
            throw std::invalid_argument("measurement " + std::to_string(n) + " has a non-finite location");
        if (values[n].size() != nf)
            throw std::invalid_argument("measurement " + std::to_string(n) + " has " +
                                        std::to_string(values[n].size()) + " values, expected " + std::to_string(nf));
        for (double v : values[n])
            if (!std::isfinite(v))
                throw std::invalid_argument("measurement " + std::to_string(n) + " has a non-finite value");
    }
}

MapTensor::MapTensor(const GridSpec& g, std::vector<double> freqs, double fill)
    : grid(g), frequencies(std::move(freqs))
{
    values.assign(grid.cell_count() * n_f(), fill);
}

void MapTensor::validate() const
{
    grid.validate();
    if (values.size() != grid.cell_count() * n_f())
        throw std::invalid_argument("map tensor size does not match grid and frequency count");
    for (double v : values)
        if (!std::isfinite(v))
            throw std::invalid_argument("map tensor holds a non-finite entry");
}

std::vector<double> SampledMap::network_mask() const
{
    if (!has_buildings())
        return sample_mask;
    return combine_masks(grid, sample_mask, buildings);
}

void SampledMap::validate() const
{
    grid.validate();
    const std::size_t cells = grid.cell_count();
    if (values.size() != cells * n_f())
        throw std::invalid_argument("sampled map value tensor has the wrong size");
    if (sample_mask.size() != cells)
        throw std::invalid_argument("sample mask has the wrong size");
    if (has_buildings() && buildings.size() != cells)
        throw std::invalid_argument("building mask has the wrong size");
    for (const auto& m : meta_masks)
        if (m.size() != cells)
            throw std::invalid_argument("meta mask has the wrong size");
    std::size_t ones = 0;
    for (double m : sample_mask) {
        if (m != 0.0 && m != 1.0)
            throw std::invalid_argument("sample mask entries must be 0 or 1");
        ones += m == 1.0;
    }
    if (ones != omega.size())
        throw std::invalid_argument("sample mask and omega disagree");
    for (const auto& c : omega) {
        if (c.i >= grid.n_y || c.j >= grid.n_x || sample_mask[grid.index(c.i, c.j)] != 1.0)
            throw std::invalid_argument("omega cell outside grid or not flagged in the mask");
        if (has_buildings() && buildings[grid.index(c.i, c.j)])
            throw std::invalid_argument("omega overlaps the building set");
    }
}

std::size_t nearest_cell(const GridSpec& grid, Point2 x)
{
    auto candidates = [](double rel, std::size_t n) {
        const double f = std::floor(rel);
        const long lo = static_cast<long>(std::clamp(f - 1.0, 0.0, static_cast<double>(n - 1)));
        const long hi = static_cast<long>(std::clamp(f + 2.0, 0.0, static_cast<double>(n - 1)));
        return std::pair<long, long>{lo, hi};
    };
    const auto [i_lo, i_hi] = candidates((x.y - grid.origin.y) / grid.delta_y, grid.n_y);
    const auto [j_lo, j_hi] = candidates((x.x - grid.origin.x) / grid.delta_x, grid.n_x);

    std::size_t best = grid.index(static_cast<std::size_t>(i_lo), static_cast<std::size_t>(j_lo));
    double best_d = distance(grid.point(grid.cell(best)), x);
    for (long i = i_lo; i <= i_hi; ++i) {
        for (long j = j_lo; j <= j_hi; ++j) {
            const double d = distance(grid.point(static_cast<std::size_t>(i), static_cast<std::size_t>(j)), x);
            if (d < best_d) {
                best_d = d;
                best = grid.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            }
        }
    }
    return best;
}

Assignment assign_to_grid(const GridSpec& grid, const MeasurementSet& meas)
{
    grid.validate();
    Assignment a{grid, std::vector<std::vector<std::size_t>>(grid.cell_count())};
    for (std::size_t n = 0; n < meas.locations.size(); ++n) {
        const Point2 x = meas.locations[n];
        if (!std::isfinite(x.x) || !std::isfinite(x.y))
            throw std::invalid_argument("measurement " + std::to_string(n) + " has a non-finite location");
        a.members[nearest_cell(grid, x)].push_back(n);
    }
    return a;
}

SampledMap aggregate(const GridSpec& grid, const MeasurementSet& meas, const Assignment& assignment)
{
    meas.validate();
    if (!(assignment.grid == grid) || assignment.members.size() != grid.cell_count())
        throw std::invalid_argument("assignment was computed on a different grid");

    SampledMap s;
    s.grid = grid;
    s.frequencies = meas.frequencies;
    const std::size_t nf = s.n_f();
    s.values.assign(grid.cell_count() * nf, kMissFillDb);
    s.sample_mask.assign(grid.cell_count(), 0.0);

    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const auto& idx = assignment.members[c];
        if (idx.empty())
            continue;
        for (std::size_t f = 0; f < nf; ++f) {
            double acc = 0.0;
            for (auto n : idx)
                acc += from_db(meas.values[n][f]);
            s.values[c * nf + f] = to_db(acc / static_cast<double>(idx.size()));
        }
        s.sample_mask[c] = 1.0;
        s.omega.push_back(grid.cell(c));
    }
    return s;
}

SampledMap make_sampled_map(const GridSpec& grid, std::vector<double> frequencies, const std::vector<Cell>& omega,
                            const std::vector<double>& cell_values)
{
    SampledMap s;
    s.grid = grid;
    s.frequencies = std::move(frequencies);
    const std::size_t nf = s.n_f();
    if (cell_values.size() != omega.size() * nf)
        throw std::invalid_argument("cell values do not match |omega| * N_f");
    s.values.assign(grid.cell_count() * nf, kMissFillDb);
    s.sample_mask.assign(grid.cell_count(), 0.0);
    for (std::size_t k = 0; k < omega.size(); ++k) {
        const std::size_t c = grid.index(omega[k].i, omega[k].j);
        if (s.sample_mask[c] != 0.0)
            throw std::invalid_argument("duplicate cell in omega");
        s.sample_mask[c] = 1.0;
        for (std::size_t f = 0; f < nf; ++f)
            s.values[c * nf + f] = cell_values[k * nf + f];
    }
    s.omega = omega;
    std::sort(s.omega.begin(), s.omega.end());
    return s;
}

std::vector<double> combine_masks(const GridSpec& grid, const std::vector<double>& sample_mask,
                                  const std::vector<std::uint8_t>& buildings)
{
    if (sample_mask.size() != grid.cell_count())
        throw std::invalid_argument("sample mask has the wrong size");
    if (buildings.empty())
        return sample_mask;
    if (buildings.size() != grid.cell_count())
        throw std::invalid_argument("building mask has the wrong size");
    std::vector<double> out(sample_mask);
    for (std::size_t c = 0; c < out.size(); ++c) {
        if (!buildings[c])
            continue;
        if (sample_mask[c] != 0.0) {
            const Cell cell = grid.cell(c);
            throw std::invalid_argument("observation set and building set overlap at cell (" +
                                        std::to_string(cell.i) + "," + std::to_string(cell.j) + ")");
        }
        out[c] = -1.0;
    }
    return out;
}

std::vector<std::size_t> nearest_cells(const GridSpec& grid, Cell center, std::size_t k)
{
    if (k < 1)
        throw std::invalid_argument("k_neighbors must be at least 1");
    if (k > grid.cell_count())
        throw std::invalid_argument("k_neighbors (" + std::to_string(k) + ") exceeds the number of grid points (" +
                                    std::to_string(grid.cell_count()) + ")");
    const Point2 p = grid.point(center);
    const double step = std::min(grid.delta_x, grid.delta_y);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t r = 1;; ++r) {
        const std::size_t i0 = center.i >= r ? center.i - r : 0, i1 = std::min(grid.n_y - 1, center.i + r);
        const std::size_t j0 = center.j >= r ? center.j - r : 0, j1 = std::min(grid.n_x - 1, center.j + r);
        cand.clear();
        for (std::size_t i = i0; i <= i1; ++i)
            for (std::size_t j = j0; j <= j1; ++j)
                cand.emplace_back(distance(grid.point(i, j), p), grid.index(i, j));
        const bool whole_grid = i0 == 0 && j0 == 0 && i1 == grid.n_y - 1 && j1 == grid.n_x - 1;
        if (cand.size() < k && !whole_grid)
            continue;
        std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(k), cand.end());
        // Anything outside the window is at least (r+1)*step away.
        if (whole_grid || cand[k - 1].first < static_cast<double>(r + 1) * step)
            break;
    }
    std::vector<std::size_t> out(k);
    for (std::size_t n = 0; n < k; ++n)
        out[n] = cand[n].second;
    return out;
}

MapTensor smooth_map(const MapTensor& map, std::size_t k_neighbors)
{
    map.validate();
    if (k_neighbors < 1)
        throw std::invalid_argument("k_neighbors must be at least 1");
    if (k_neighbors > map.grid.cell_count())
        throw std::invalid_argument("k_neighbors (" + std::to_string(k_neighbors) +
                                    ") exceeds the number of grid points");
    MapTensor out = map;
    if (k_neighbors == 1)
        return out;
    const std::size_t nf = map.n_f();
    for (std::size_t c = 0; c < map.grid.cell_count(); ++c) {
        const auto nbrs = nearest_cells(map.grid, map.grid.cell(c), k_neighbors);
        for (std::size_t f = 0; f < nf; ++f) {
            double acc = 0.0;
            for (auto n : nbrs)
                acc += from_db(map.values[n * nf + f]);
            out.values[c * nf + f] = to_db(acc / static_cast<double>(k_neighbors));
        }
    }
    return out;
}

} // namespace radiomap
