#ifndef WMDX_OT_HPP
#define WMDX_OT_HPP

#include <cstddef>
#include <vector>

#include "wmdx/matrix.hpp"

namespace wmdx {

/// A discrete probability measure: nonnegative weights summing to one.
/// Weight vectors whose total drifts from 1 by at most 1e-6 (float-
/// accumulated bag-of-words normalization) are renormalized on
/// construction; larger deviations and negative weights are rejected.
class DiscreteMeasure {
public:
    explicit DiscreteMeasure(std::vector<double> weights);

    std::size_t size() const noexcept { return weights_.size(); }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double operator[](std::size_t i) const { return weights_[i]; }

private:
    std::vector<double> weights_;
};

/// Optimal coupling between two measures plus its transport cost.
struct TransportPlan {
    Matrix coupling;
    double objective = 0.0;
};

/// Exact solution of the balanced discrete Kantorovich problem
///   min sum_ij C_ij P_ij  s.t.  P >= 0, P 1 = a, P^T 1 = b
/// by network simplex on the bipartite transportation graph. Pivoting uses
/// the lowest-index eligible arc (Bland's rule), so identical inputs give
/// identical plans. Weights below 1e-12 are pruned before solving and
/// restored as zero rows/columns in the plan.
TransportPlan solve_emd(const DiscreteMeasure& source, const DiscreteMeasure& target,
                        const CostMatrix& cost);

/// Exhaustive test oracle: enumerates the vertices of the transportation
/// polytope (spanning trees of the bipartite graph, flows by leaf
/// elimination) and returns a minimum-cost feasible one. Exponential;
/// limited to source.size <= 6 and target.size <= 6.
TransportPlan brute_force_emd(const DiscreteMeasure& source, const DiscreteMeasure& target,
                              const CostMatrix& cost);

} // namespace wmdx

#endif
