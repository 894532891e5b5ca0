#include "adsorbkit/neighbors.hpp"

#include <algorithm>
#include <cmath>

#include "adsorbkit/errors.hpp"

namespace adsorbkit {

const std::vector<NeighborList::Entry>& NeighborList::neighbors_of(std::size_t i) const {
    if (i >= rows_.size()) {
        throw IndexOutOfRangeError("site index " + std::to_string(i) + " out of range (" +
                                   std::to_string(rows_.size()) + " sites)");
    }
    return rows_[i];
}

NeighborList build_neighbor_list(const Structure& structure, const RadiiTable& radii,
                                 double scale) {
    if (!(scale > 0.0)) throw InvalidArgumentError("cutoff scale must be positive");

    const std::size_t n = structure.size();
    std::vector<double> radius(n);
    double max_radius = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        radius[i] = radii.radius(structure.sites[i].element);
        max_radius = std::max(max_radius, radius[i]);
    }

    // Largest pair cutoff anywhere in this structure; also the bin size.
    const double max_cutoff = scale * 2.0 * max_radius;
    if (!(structure.lattice.shortest_vector() > 2.0 * max_cutoff)) {
        throw CellTooSmallError("shortest lattice vector must exceed twice the maximum cutoff (" +
                                std::to_string(2.0 * max_cutoff) + " A)");
    }

    std::vector<std::vector<NeighborList::Entry>> rows(n);
    auto try_pair = [&](std::size_t i, std::size_t j) {
        double cutoff = scale * (radius[i] + radius[j]);
        double d = min_image_distance(structure.lattice, structure.sites[i].frac,
                                      structure.sites[j].frac);
        if (d <= cutoff) {
            rows[i].emplace_back(j, d);
            rows[j].emplace_back(i, d);
        }
    };

    // Bins sized so one bin spans at least max_cutoff in perpendicular
    // distance; with fewer than 3 bins per axis the 27-stencil would revisit
    // bins, so fall back to all pairs (also cheaper for small structures).
    int nbins[3];
    bool use_cells = n >= 32;
    for (int k = 0; k < 3; ++k) {
        double height = structure.lattice.perpendicular_height(k);
        nbins[k] = std::max(1, static_cast<int>(std::floor(height / max_cutoff)));
        if (nbins[k] < 3) use_cells = false;
    }

    if (!use_cells) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) try_pair(i, j);
        }
    } else {
        const int nx = nbins[0], ny = nbins[1], nz = nbins[2];
        std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(nx) * ny * nz);
        std::vector<std::size_t> bin_of(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& f = structure.sites[i].frac;
            int bx = std::min(nx - 1, static_cast<int>(f[0] * nx));
            int by = std::min(ny - 1, static_cast<int>(f[1] * ny));
            int bz = std::min(nz - 1, static_cast<int>(f[2] * nz));
            bin_of[i] = (static_cast<std::size_t>(bx) * ny + by) * nz + bz;
            bins[bin_of[i]].push_back(i);
        }
        auto wrap = [](int v, int m) { return ((v % m) + m) % m; };
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t b = bin_of[i];
            const int bx = static_cast<int>(b / (static_cast<std::size_t>(ny) * nz));
            const int by = static_cast<int>((b / nz) % ny);
            const int bz = static_cast<int>(b % nz);
            for (int dx = -1; dx <= 1; ++dx) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dz = -1; dz <= 1; ++dz) {
                        std::size_t ob = (static_cast<std::size_t>(wrap(bx + dx, nx)) * ny +
                                          wrap(by + dy, ny)) * nz + wrap(bz + dz, nz);
                        for (std::size_t j : bins[ob]) {
                            if (j > i) try_pair(i, j);
                        }
                    }
                }
            }
        }
    }

    for (auto& row : rows) std::sort(row.begin(), row.end());
    return NeighborList(std::move(rows), scale);
}

}  // namespace adsorbkit
