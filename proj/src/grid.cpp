#include "rpkm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace rpkm {

namespace {

constexpr std::uint32_t kMaxLevel = 30;

// Writes the level-`level` cell coordinates of `p` into `out`.
void cell_coords_of(const double* p, const BoundingBox& box,
                    std::uint32_t level, std::uint32_t* out) {
    const double cells_per_axis = static_cast<double>(std::uint64_t{1} << level);
    const std::uint32_t last = static_cast<std::uint32_t>(cells_per_axis) - 1;
    for (std::size_t j = 0; j < box.dim(); ++j) {
        const double extent = box.max[j] - box.min[j];
        if (extent <= 0.0) {
            out[j] = 0;
            continue;
        }
        const double width = extent / cells_per_axis;
        double idx = std::floor((p[j] - box.min[j]) / width);
        if (idx < 0.0) idx = 0.0;
        std::uint32_t c = static_cast<std::uint32_t>(idx);
        if (idx > static_cast<double>(last)) c = last;
        out[j] = c;
    }
}

PartitionLevel freeze(std::uint32_t level, std::size_t dim,
                      const std::map<std::vector<std::uint32_t>,
                                     std::pair<std::uint64_t, std::vector<double>>>& cells) {
    PartitionLevel out;
    out.level = level;
    out.dim = dim;
    out.cell_coords.reserve(cells.size() * dim);
    out.weights.reserve(cells.size());
    out.coord_sums.reserve(cells.size() * dim);
    out.means.reserve(cells.size() * dim);
    for (const auto& [coords, agg] : cells) {
        out.cell_coords.insert(out.cell_coords.end(), coords.begin(), coords.end());
        out.weights.push_back(agg.first);
        const double w = static_cast<double>(agg.first);
        for (std::size_t j = 0; j < dim; ++j) {
            out.coord_sums.push_back(agg.second[j]);
            out.means.push_back(agg.second[j] / w);
        }
    }
    return out;
}

}  // namespace

bool BoundingBox::contains(std::span<const double> p) const {
    if (p.size() != dim()) return false;
    for (std::size_t j = 0; j < dim(); ++j)
        if (p[j] < min[j] || p[j] > max[j]) return false;
    return true;
}

std::uint64_t PartitionLevel::total_weight() const {
    std::uint64_t total = 0;
    for (const auto w : weights) total += w;
    return total;
}

Representative PartitionLevel::representative(std::size_t i) const {
    Representative rep;
    rep.weight = weights[i];
    rep.mean.assign(means.begin() + static_cast<std::ptrdiff_t>(i * dim),
                    means.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    return rep;
}

std::optional<std::size_t> PartitionLevel::find_cell(
    std::span<const std::uint32_t> c) const {
    if (c.size() != dim) return std::nullopt;
    // Cells are sorted lexicographically by coordinates.
    std::size_t lo = 0, hi = cells();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const auto row = coords(mid);
        if (std::lexicographical_compare(row.begin(), row.end(),
                                         c.begin(), c.end()))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < cells() && std::equal(c.begin(), c.end(), coords(lo).begin()))
        return lo;
    return std::nullopt;
}

BoundingBox bounding_box(const Dataset& data) {
    if (data.n == 0)
        throw std::invalid_argument("bounding_box: empty dataset");
    BoundingBox box;
    box.min.assign(data.points.begin(),
                   data.points.begin() + static_cast<std::ptrdiff_t>(data.d));
    box.max = box.min;
    for (std::size_t i = 1; i < data.n; ++i) {
        const double* p = data.points.data() + i * data.d;
        for (std::size_t j = 0; j < data.d; ++j) {
            if (p[j] < box.min[j]) box.min[j] = p[j];
            if (p[j] > box.max[j]) box.max[j] = p[j];
        }
    }
    return box;
}

CellIndex cell_index(std::span<const double> point, const BoundingBox& box,
                     std::uint32_t level) {
    if (point.size() != box.dim())
        throw std::invalid_argument("cell_index: dimension mismatch");
    if (level < 1 || level > kMaxLevel)
        throw std::invalid_argument("cell_index: level out of range");
    if (!box.contains(point))
        throw std::invalid_argument("cell_index: point outside bounding box");
    CellIndex idx;
    idx.level = level;
    idx.coords.resize(point.size());
    cell_coords_of(point.data(), box, level, idx.coords.data());
    return idx;
}

PartitionLevel build_finest(const Dataset& data, const BoundingBox& box,
                            std::uint32_t m) {
    if (m < 1 || m > kMaxLevel)
        throw std::invalid_argument("build_finest: level out of range");
    if (box.dim() != data.d)
        throw std::invalid_argument("build_finest: dimension mismatch");

    std::map<std::vector<std::uint32_t>, std::pair<std::uint64_t, std::vector<double>>>
        cells;
    std::vector<std::uint32_t> key(data.d);
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* p = data.points.data() + i * data.d;
        cell_coords_of(p, box, m, key.data());
        auto [it, inserted] =
            cells.try_emplace(key, 0, std::vector<double>(data.d, 0.0));
        it->second.first += 1;
        for (std::size_t j = 0; j < data.d; ++j) it->second.second[j] += p[j];
    }
    return freeze(m, data.d, cells);
}

PartitionLevel coarsen(const PartitionLevel& child) {
    if (child.level < 2)
        throw std::invalid_argument("coarsen: child level must be >= 2");

    std::map<std::vector<std::uint32_t>, std::pair<std::uint64_t, std::vector<double>>>
        cells;
    std::vector<std::uint32_t> key(child.dim);
    for (std::size_t i = 0; i < child.cells(); ++i) {
        const auto c = child.coords(i);
        for (std::size_t j = 0; j < child.dim; ++j) key[j] = c[j] >> 1;
        auto [it, inserted] =
            cells.try_emplace(key, 0, std::vector<double>(child.dim, 0.0));
        it->second.first += child.weights[i];
        const double* sums = child.coord_sums.data() + i * child.dim;
        for (std::size_t j = 0; j < child.dim; ++j) it->second.second[j] += sums[j];
    }
    return freeze(child.level - 1, child.dim, cells);
}

PartitionSequence build_sequence(const Dataset& data, std::uint32_t m) {
    if (m < 1)
        throw std::invalid_argument("build_sequence: m must be >= 1");
    data.validate();

    PartitionSequence seq;
    seq.box = bounding_box(data);
    seq.levels.resize(m);
    seq.levels[m - 1] = build_finest(data, seq.box, m);
    for (std::uint32_t lv = m; lv >= 2; --lv)
        seq.levels[lv - 2] = coarsen(seq.levels[lv - 1]);
    return seq;
}

}  // namespace rpkm
