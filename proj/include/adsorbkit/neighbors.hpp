#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "adsorbkit/structure.hpp"

namespace adsorbkit {

// Periodic adjacency under the pair rule d <= scale * (r_i + r_j), boundary
// inclusive. Rows are sorted by (neighbor index, distance); distances are
// minimum-image.
class NeighborList {
public:
    using Entry = std::pair<std::size_t, double>;  // (site index, distance in Angstrom)

    NeighborList(std::vector<std::vector<Entry>> rows, double scale)
        : rows_(std::move(rows)), scale_(scale) {}

    std::size_t size() const { return rows_.size(); }
    double scale() const { return scale_; }

    const std::vector<Entry>& neighbors_of(std::size_t i) const;

    const std::vector<std::vector<Entry>>& rows() const { return rows_; }

private:
    std::vector<std::vector<Entry>> rows_;
    double scale_;
};

// Cell-list accelerated construction. Preconditions: every element known to
// the radii table; scale > 0; the shortest lattice vector must exceed
// 2 * scale * (2 * max radius over elements present), otherwise CellTooSmall.
NeighborList build_neighbor_list(const Structure& structure, const RadiiTable& radii,
                                 double scale);

}  // namespace adsorbkit
