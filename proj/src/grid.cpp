#include "kyle/grid.hpp"

#include <algorithm>
#include <cmath>

#include "kyle/errors.hpp"

namespace kyle {

TimeGrid make_grid(double epsilon, std::size_t n_nodes, GridRefinement refinement) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw InvalidParameter("make_grid: epsilon must lie in (0, 1)");
    if (n_nodes < 2)
        throw InvalidParameter("make_grid: need at least 2 nodes");

    TimeGrid grid;
    grid.epsilon = epsilon;
    grid.refinement = refinement;
    grid.nodes.resize(n_nodes);

    const double horizon = 1.0 - epsilon;
    const double m = static_cast<double>(n_nodes - 1);
    if (refinement == GridRefinement::Uniform) {
        for (std::size_t k = 0; k < n_nodes; ++k)
            grid.nodes[k] = horizon * static_cast<double>(k) / m;
    } else {
        const double log_eps = std::log(epsilon);
        for (std::size_t k = 0; k < n_nodes; ++k)
            grid.nodes[k] = 1.0 - std::exp(log_eps * static_cast<double>(k) / m);
    }
    grid.nodes.front() = 0.0;
    grid.nodes.back() = horizon;
    return grid;
}

TimeGrid TimeGrid::with_times(const std::vector<double>& times) const {
    constexpr double snap = 1e-12;
    TimeGrid out = *this;
    for (double t : times) {
        if (t < 0.0 || t > horizon() + snap)
            throw InvalidParameter("with_times: time outside [0, horizon]");
        auto it = std::lower_bound(out.nodes.begin(), out.nodes.end(), t - snap);
        if (it != out.nodes.end() && std::abs(*it - t) <= snap) {
            *it = t;  // snap the near-coincident node to the requested time
        } else {
            out.nodes.insert(it, t);
        }
    }
    return out;
}

std::size_t TimeGrid::index_of(double t) const {
    constexpr double snap = 1e-12;
    auto it = std::lower_bound(nodes.begin(), nodes.end(), t - snap);
    if (it == nodes.end() || std::abs(*it - t) > snap)
        throw InconsistentBundle("index_of: time is not a grid node");
    return static_cast<std::size_t>(it - nodes.begin());
}

}  // namespace kyle
