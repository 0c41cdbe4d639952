#ifndef KYLE_GRID_HPP
#define KYLE_GRID_HPP

#include <cstddef>
#include <vector>

namespace kyle {

enum class GridRefinement { Uniform, GeometricTowardOne };

/**
 * Discretization of the trading interval. Nodes run from 0 to 1 - epsilon,
 * strictly increasing; the terminal cutoff epsilon keeps the bridge drift,
 * which is singular at time 1, evaluable at every node.
 *
 * Geometric refinement places node spacing proportional to the distance
 * from 1: t_k = 1 - epsilon^(k/(n-1)), so dt_k = (1 - t_k)(1 - epsilon^(1/(n-1))).
 */
struct TimeGrid {
    std::vector<double> nodes;
    double epsilon = 0.0;
    GridRefinement refinement = GridRefinement::Uniform;

    std::size_t size() const { return nodes.size(); }
    std::size_t steps() const { return nodes.size() - 1; }
    double dt(std::size_t k) const { return nodes[k + 1] - nodes[k]; }
    double horizon() const { return nodes.back(); }

    /// New grid with the given times spliced in (each must lie in [0, horizon]).
    /// An existing node within 1e-12 of a requested time is snapped to it.
    TimeGrid with_times(const std::vector<double>& times) const;

    /// Index of the node equal to t (within 1e-12). Throws InconsistentBundle
    /// if t is not a node.
    std::size_t index_of(double t) const;
};

/// n_nodes counts grid nodes (so n_nodes - 1 steps). Throws InvalidParameter
/// unless 0 < epsilon < 1 and n_nodes >= 2.
TimeGrid make_grid(double epsilon, std::size_t n_nodes, GridRefinement refinement);

}  // namespace kyle

#endif
