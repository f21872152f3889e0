#ifndef FASFLOW_PARTITION_HPP
#define FASFLOW_PARTITION_HPP

#include <cstdint>
#include <vector>

#include "fasflow/grid.hpp"

namespace fasflow {

/// Assignment of every graph vertex to one of num_aggregates contiguous
/// aggregates, labels compact in [0, num_aggregates).
struct Partition
{
    std::vector<int> assignment;
    int num_aggregates = 0;

    std::vector<std::vector<int>> members() const;
};

/// Multilevel k-way partition of a weighted graph: heavy-edge matching
/// coarsening, greedy region growing, boundary refinement, and a
/// connectivity fix-up. Produces k' <= k non-empty connected aggregates,
/// deterministic for a fixed seed. Heavier edges are preferentially left
/// uncut. Throws if k exceeds the vertex count.
Partition kway_partition(const ConnectivityGraph& graph, int k, std::uint64_t seed);

/// Well-location informed partition: edges whose endpoints both lie within
/// n_lay graph layers of a well cell get their weight multiplied by `scale`
/// before partitioning; afterwards, for each well all aggregates containing
/// or adjacent to that well's cells are merged. Every perforated cell ends
/// up interior to its aggregate.
Partition well_aware_partition(const ConnectivityGraph& conn,
                               const std::vector<std::vector<int>>& well_cells,
                               int n_lay, std::int64_t scale, int k,
                               std::uint64_t seed);

/// Vertices within `layers` graph distance of any seed (BFS).
std::vector<bool> cells_within_layers(const ConnectivityGraph& conn,
                                      const std::vector<int>& seeds, int layers);

} // namespace fasflow

#endif
