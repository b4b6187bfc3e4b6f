#ifndef RPKM_GRID_HPP
#define RPKM_GRID_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rpkm/core.hpp"

namespace rpkm {

/// Axis-aligned box enclosing the data; the tight coordinate-wise min/max.
struct BoundingBox {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t dim() const { return min.size(); }
    bool contains(std::span<const double> p) const;
};

/// Address of one grid cell: at level i each axis is split into 2^i slabs.
struct CellIndex {
    std::uint32_t level = 0;
    std::vector<std::uint32_t> coords;  // each in [0, 2^level)
};

/// All nonempty cells of one grid level, sorted by cell coordinates.
/// Representative means derive from full-precision coordinate sums so that
/// coarsening reproduces them exactly.
struct PartitionLevel {
    std::uint32_t level = 0;
    std::size_t dim = 0;
    std::vector<std::uint32_t> cell_coords;  // cells()*dim, row-major
    std::vector<std::uint64_t> weights;      // per cell
    std::vector<double> coord_sums;          // cells()*dim
    std::vector<double> means;               // cells()*dim (sums / weight)

    std::size_t cells() const { return weights.size(); }
    std::uint64_t total_weight() const;

    std::span<const std::uint32_t> coords(std::size_t i) const {
        return {cell_coords.data() + i * dim, dim};
    }
    Representative representative(std::size_t i) const;
    WeightedPoints reps() const {
        return {cells(), dim, means, weights};
    }

    /// Index of the cell with the given coordinates, if present.
    std::optional<std::size_t> find_cell(std::span<const std::uint32_t> c) const;
};

/// The grid levels 1..m for one dataset, plus the box they live in.
struct PartitionSequence {
    BoundingBox box;
    std::vector<PartitionLevel> levels;  // levels[i] holds grid level i+1

    const PartitionLevel& level(std::uint32_t lv) const { return levels[lv - 1]; }
    std::uint32_t depth() const { return static_cast<std::uint32_t>(levels.size()); }
};

/// Tight enclosing box of the dataset.
BoundingBox bounding_box(const Dataset& data);

/// Grid cell of a point at the given level. Points on the upper face clamp
/// into the last slab; a zero-extent axis collapses to slab 0. Throws
/// std::invalid_argument if the point lies outside the box.
CellIndex cell_index(std::span<const double> point, const BoundingBox& box,
                     std::uint32_t level);

/// Aggregates every point into its level-m cell in one pass. No distance
/// evaluations.
PartitionLevel build_finest(const Dataset& data, const BoundingBox& box,
                            std::uint32_t m);

/// Merges cells of the child level pairwise per axis (parent coordinate =
/// child coordinate / 2), summing weights and coordinate sums. Requires
/// child.level >= 2.
PartitionLevel coarsen(const PartitionLevel& child);

/// Builds level m from the raw data and coarsens backward to level 1.
PartitionSequence build_sequence(const Dataset& data, std::uint32_t m);

}  // namespace rpkm

#endif  // RPKM_GRID_HPP
