#include "wmdx/ot.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "wmdx/error.hpp"

namespace wmdx {

namespace {

constexpr double kPruneWeight = 1e-12;   // mass below this is dropped before solving
constexpr double kMassTolerance = 1e-6;  // accepted drift of the total mass from 1
constexpr double kFlowTolerance = 1e-12; // flows this far below zero are treated as zero

void validate_pair(const DiscreteMeasure& source, const DiscreteMeasure& target,
                   const CostMatrix& cost) {
    if (cost.rows() != source.size() || cost.cols() != target.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "cost matrix is " + std::to_string(cost.rows()) + "x" +
                        std::to_string(cost.cols()) + " but measures have sizes " +
                        std::to_string(source.size()) + " and " + std::to_string(target.size()));
    }
    for (double v : cost.data()) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorKind::NonfiniteCost, "cost entries must be finite and nonnegative");
        }
    }
}

/// Indices of weights worth keeping, and the kept weights themselves.
struct PrunedMeasure {
    std::vector<std::size_t> kept;
    std::vector<double> weights;
};

PrunedMeasure prune(const DiscreteMeasure& m) {
    PrunedMeasure out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] >= kPruneWeight) {
            out.kept.push_back(i);
            out.weights.push_back(m[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Network simplex on the dense bipartite transportation graph.
//
// Nodes 0..n-1 are sources, n..n+m-1 are targets; every cell (i, j) of the
// cost matrix is an arc. The basis is a spanning tree held as adjacency
// lists of cell ids. Entering arc selection is Bland's lowest-index rule,
// which cannot cycle and makes the returned plan deterministic.
// ---------------------------------------------------------------------------
class TransportSimplex {
public:
    TransportSimplex(std::vector<double> a, std::vector<double> b, std::vector<double> cost)
        : n_(a.size()),
          m_(b.size()),
          nodes_(n_ + m_),
          a_(std::move(a)),
          b_(std::move(b)),
          cost_(std::move(cost)),
          flow_(n_ * m_, 0.0),
          basic_(n_ * m_, 0),
          adjacency_(nodes_),
          potential_(nodes_, 0.0),
          parent_node_(nodes_, -1),
          parent_cell_(nodes_, -1) {
        double max_cost = 0.0;
        for (double c : cost_) max_cost = std::max(max_cost, c);
        tolerance_ = max_cost > 0.0 ? max_cost * 1e-12 : 1.0;
    }

    void run() {
        northwest_corner();
        const std::size_t max_pivots = 1000 + 50 * n_ * m_;
        for (std::size_t pivot = 0; pivot < max_pivots; ++pivot) {
            update_potentials();
            const int entering = find_entering();
            if (entering < 0) return;
            pivot_on(entering);
        }
        throw Error(ErrorKind::Internal, "transport simplex failed to converge");
    }

    double objective() const {
        double total = 0.0;
        for (std::size_t cell = 0; cell < flow_.size(); ++cell) {
            if (basic_[cell]) total += flow_[cell] * cost_[cell];
        }
        return total;
    }

    double flow(std::size_t i, std::size_t j) const { return std::max(flow_[i * m_ + j], 0.0); }

private:
    std::size_t row_of(std::size_t cell) const { return cell / m_; }
    std::size_t col_node(std::size_t cell) const { return n_ + cell % m_; }

    void add_basic(std::size_t cell, double f) {
        basic_[cell] = 1;
        flow_[cell] = f;
        adjacency_[row_of(cell)].push_back(static_cast<int>(cell));
        adjacency_[col_node(cell)].push_back(static_cast<int>(cell));
    }

    void drop_basic(std::size_t cell) {
        basic_[cell] = 0;
        flow_[cell] = 0.0;
        auto detach = [cell](std::vector<int>& list) {
            list.erase(std::find(list.begin(), list.end(), static_cast<int>(cell)));
        };
        detach(adjacency_[row_of(cell)]);
        detach(adjacency_[col_node(cell)]);
    }

    // Initial basis: n + m - 1 staircase cells, advancing one index per step.
    void northwest_corner() {
        std::vector<double> arem = a_;
        std::vector<double> brem = b_;
        std::size_t i = 0, j = 0;
        while (true) {
            const double f = std::min(arem[i], brem[j]);
            add_basic(i * m_ + j, f);
            arem[i] -= f;
            brem[j] -= f;
            if (i == n_ - 1 && j == m_ - 1) break;
            if (j == m_ - 1) {
                ++i;
            } else if (i == n_ - 1) {
                ++j;
            } else if (arem[i] <= brem[j]) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    // Root the basis tree at node 0 and solve u_i + v_j = c_ij along it.
    // Potentials on a tree are unique given the root value, so the result
    // does not depend on adjacency list order.
    void update_potentials() {
        std::fill(parent_node_.begin(), parent_node_.end(), -1);
        potential_[0] = 0.0;
        stack_.assign(1, 0);
        parent_node_[0] = 0;
        while (!stack_.empty()) {
            const int node = stack_.back();
            stack_.pop_back();
            for (int cell : adjacency_[node]) {
                const int row = static_cast<int>(row_of(cell));
                const int col = static_cast<int>(col_node(cell));
                const int next = (node == row) ? col : row;
                if (parent_node_[next] >= 0) continue;
                parent_node_[next] = node;
                parent_cell_[next] = cell;
                potential_[next] = cost_[cell] - potential_[node];
                stack_.push_back(next);
            }
        }
    }

    // Lowest-index arc with negative reduced cost, or -1 at optimality.
    int find_entering() const {
        for (std::size_t cell = 0; cell < cost_.size(); ++cell) {
            if (basic_[cell]) continue;
            const double reduced =
                cost_[cell] - potential_[row_of(cell)] - potential_[col_node(cell)];
            if (reduced < -tolerance_) return static_cast<int>(cell);
        }
        return -1;
    }

    void pivot_on(int entering) {
        const int erow = static_cast<int>(row_of(entering));
        const int ecol = static_cast<int>(col_node(entering));
        orient_from(erow);

        // The cycle is the entering arc plus the unique tree path from its
        // column node back to its row node. Walking the path from the
        // column end, even positions lose the pivot flow, odd ones gain it.
        cycle_cells_.clear();
        for (int node = ecol; node != erow; node = parent_node_[node]) {
            cycle_cells_.push_back(parent_cell_[node]);
        }

        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (std::size_t k = 0; k < cycle_cells_.size(); k += 2) {
            const int cell = cycle_cells_[k];
            if (flow_[cell] < theta || (flow_[cell] == theta && cell < leaving)) {
                theta = flow_[cell];
                leaving = cell;
            }
        }

        if (theta > 0.0) {
            for (std::size_t k = 0; k < cycle_cells_.size(); ++k) {
                flow_[cycle_cells_[k]] += (k % 2 == 0) ? -theta : theta;
            }
        }
        drop_basic(leaving);
        add_basic(entering, theta);
    }

    void orient_from(int root) {
        std::fill(parent_node_.begin(), parent_node_.end(), -1);
        stack_.assign(1, root);
        parent_node_[root] = root;
        while (!stack_.empty()) {
            const int node = stack_.back();
            stack_.pop_back();
            for (int cell : adjacency_[node]) {
                const int row = static_cast<int>(row_of(cell));
                const int col = static_cast<int>(col_node(cell));
                const int next = (node == row) ? col : row;
                if (parent_node_[next] >= 0) continue;
                parent_node_[next] = node;
                parent_cell_[next] = cell;
                stack_.push_back(next);
            }
        }
    }

    std::size_t n_, m_, nodes_;
    std::vector<double> a_, b_, cost_;
    std::vector<double> flow_;
    std::vector<char> basic_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<double> potential_;
    std::vector<int> parent_node_;
    std::vector<int> parent_cell_;
    std::vector<int> stack_;
    std::vector<int> cycle_cells_;
    double tolerance_ = 0.0;
};

// ---------------------------------------------------------------------------
// Exhaustive vertex enumeration for the brute-force oracle.
//
// Every vertex of the transportation polytope is the unique flow of some
// spanning tree of the bipartite graph, so a depth-first include/exclude
// search over cells that keeps chosen cells acyclic visits every vertex.
// Three prunes keep it tractable, none of which can discard all optimal
// vertices:
//   - flows forced by fully decided rows/columns are propagated eagerly and
//     branches with negative forced flow or overloaded nodes are dropped;
//   - branches that cannot reach a spanning tree any more are dropped;
//   - a dual bound: per-node coefficients with coeff_u + coeff_v <= cost_uv
//     on every cell a future flow could use, so partial cost plus
//     sum(remaining_mass * coeff) underestimates every completion. Nodes
//     whose candidate cells are all decided get their coefficient
//     retightened over the cells actually available to them.
// ---------------------------------------------------------------------------
class VertexEnumerator {
public:
    static constexpr int kMaxSide = 6;
    static constexpr int kMaxNodes = 2 * kMaxSide;

    VertexEnumerator(const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<double>& cost)
        : n_(static_cast<int>(a.size())),
          m_(static_cast<int>(b.size())),
          nodes_(n_ + m_),
          cells_(n_ * m_),
          cost_(cost) {
        for (int cell = 0; cell < cells_; ++cell) {
            incident_[cell / m_] |= std::uint64_t(1) << cell;
            incident_[n_ + cell % m_] |= std::uint64_t(1) << cell;
        }

        // Initial dual-feasible coefficients via alternating min passes.
        std::array<double, kMaxNodes> coeff{};
        for (int pass = 0; pass < 3; ++pass) {
            for (int i = 0; i < n_; ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (int j = 0; j < m_; ++j) {
                    best = std::min(best, cost_[i * m_ + j] - coeff[n_ + j]);
                }
                coeff[i] = best;
            }
            for (int j = 0; j < m_; ++j) {
                double best = std::numeric_limits<double>::infinity();
                for (int i = 0; i < n_; ++i) {
                    best = std::min(best, cost_[i * m_ + j] - coeff[i]);
                }
                coeff[n_ + j] = best;
            }
        }

        root_.coeff = coeff;
        for (int v = 0; v < nodes_; ++v) root_.parent[v] = static_cast<std::int8_t>(v);
        for (int i = 0; i < n_; ++i) root_.remaining[i] = a[i];
        for (int j = 0; j < m_; ++j) root_.remaining[n_ + j] = b[j];
        for (int v = 0; v < nodes_; ++v) root_.bound += root_.remaining[v] * coeff[v];
    }

    void run() {
        seed_greedy_incumbent();
        search(0, 0, root_);
    }

    double objective() const { return best_objective_; }

    Matrix plan() const {
        Matrix p(n_, m_);
        for (std::size_t k = 0; k < best_edges_.size(); ++k) {
            const int cell = best_edges_[k];
            p(cell / m_, cell % m_) = std::max(best_flows_[k], 0.0);
        }
        return p;
    }

private:
    struct State {
        std::array<std::int8_t, kMaxNodes> parent{};
        std::array<double, kMaxNodes> coeff{};
        std::array<double, kMaxNodes> remaining{};
        std::uint64_t chosen = 0;  // cells picked as tree edges
        std::uint64_t pending = 0; // chosen cells whose flow is not yet forced
        double partial = 0.0;
        double bound = 0.0; // dual value of the remaining masses
    };

    int find_root(const State& s, int v) const {
        while (s.parent[v] != v) v = s.parent[v];
        return v;
    }

    int other_end(int cell, int v) const {
        const int row = cell / m_;
        return (v == row) ? n_ + cell % m_ : row;
    }

    // Assigns the forced flow of edge `cell` out of node `from`. Returns
    // false when the branch became infeasible.
    bool consume(State& s, int cell, int from) const {
        const int other = other_end(cell, from);
        const double f = s.remaining[from];
        if (f < -kFlowTolerance) return false;
        s.partial += f * cost_[cell];
        s.bound -= f * (s.coeff[from] + s.coeff[other]);
        s.remaining[from] = 0.0;
        s.remaining[other] -= f;
        s.pending &= ~(std::uint64_t(1) << cell);
        return s.remaining[other] >= -kFlowTolerance;
    }

    // Called once all candidate cells of node v are decided. A node the
    // tree never touched cannot be spanned any more; one undetermined edge
    // forces that edge's flow; otherwise the node's future flows are
    // confined to its pending cells, so its dual coefficient can tighten.
    bool finalize_node(State& s, int v) const {
        std::uint64_t pending_v = s.pending & incident_[v];
        if (pending_v == 0) {
            return (s.chosen & incident_[v]) != 0 && std::abs(s.remaining[v]) <= kFlowTolerance;
        }
        if ((pending_v & (pending_v - 1)) == 0) {
            return consume(s, std::countr_zero(pending_v), v);
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::uint64_t bits = pending_v; bits != 0; bits &= bits - 1) {
            const int cell = std::countr_zero(bits);
            best = std::min(best, cost_[cell] - s.coeff[other_end(cell, v)]);
        }
        if (best > s.coeff[v]) {
            s.bound += s.remaining[v] * (best - s.coeff[v]);
            s.coeff[v] = best;
        }
        return true;
    }

    // Matrix-minimum construction of a feasible vertex. Enumeration prunes
    // against its objective from the first branch; when nothing beats it,
    // the greedy vertex itself is the optimum and is returned.
    void seed_greedy_incumbent() {
        std::array<double, kMaxNodes> rem = root_.remaining;
        std::array<char, kMaxNodes> active{};
        std::fill(active.begin(), active.begin() + nodes_, char(1));
        int active_rows = n_, active_cols = m_;

        best_edges_.clear();
        best_flows_.clear();
        double objective = 0.0;
        for (int step = 0; step < nodes_ - 1; ++step) {
            int pick = -1;
            double pick_cost = std::numeric_limits<double>::infinity();
            for (int cell = 0; cell < cells_; ++cell) {
                if (!active[cell / m_] || !active[n_ + cell % m_]) continue;
                if (cost_[cell] < pick_cost) {
                    pick_cost = cost_[cell];
                    pick = cell;
                }
            }
            const int row = pick / m_;
            const int col = n_ + pick % m_;
            const double f = std::min(rem[row], rem[col]);
            best_edges_.push_back(pick);
            best_flows_.push_back(f);
            objective += f * cost_[pick];
            bool close_row = rem[row] < rem[col] || (rem[row] == rem[col] && active_rows > 1);
            if (close_row && active_rows == 1) close_row = false;
            if (!close_row && active_cols == 1) close_row = true;
            if (close_row) {
                active[row] = 0;
                --active_rows;
                rem[row] = 0.0;
                rem[col] -= f;
            } else {
                active[col] = 0;
                --active_cols;
                rem[col] = 0.0;
                rem[row] -= f;
            }
        }
        best_objective_ = objective;
    }

    void search(int cell, int chosen, const State& state) {
        const int needed = nodes_ - 1;
        if (chosen == needed) {
            complete(state);
            return;
        }
        if (cell >= cells_) return;
        if (chosen + cells_ - cell < needed) return;
        if (state.partial + state.bound >= best_objective_) return;

        const int row = cell / m_;
        const int col = n_ + cell % m_;
        const bool row_done = (cell % m_ == m_ - 1);
        const bool col_done = (row == n_ - 1);

        const int root_row = find_root(state, row);
        const int root_col = find_root(state, col);
        if (root_row != root_col) {
            State next = state;
            next.parent[root_row] = static_cast<std::int8_t>(root_col);
            next.chosen |= std::uint64_t(1) << cell;
            next.pending |= std::uint64_t(1) << cell;
            edge_stack_.push_back(cell);
            bool ok = true;
            if (row_done) ok = finalize_node(next, row);
            if (ok && col_done) ok = finalize_node(next, col);
            if (ok) search(cell + 1, chosen + 1, next);
            edge_stack_.pop_back();
        }

        if (!row_done && !col_done) {
            search(cell + 1, chosen, state);
        } else {
            State next = state;
            bool ok = true;
            if (row_done) ok = finalize_node(next, row);
            if (ok && col_done) ok = finalize_node(next, col);
            if (ok) search(cell + 1, chosen, next);
        }
    }

    // A full spanning tree: recompute its unique flows by leaf elimination
    // and keep it when strictly better.
    void complete(const State& state) {
        if (state.partial + state.bound >= best_objective_) return;

        std::array<double, kMaxNodes> rem = root_.remaining;
        std::array<std::int8_t, kMaxNodes> deg{};
        std::array<std::int16_t, kMaxNodes> exor{};
        for (int cell : edge_stack_) {
            const int row = cell / m_;
            const int col = n_ + cell % m_;
            for (int v : {row, col}) {
                deg[v] = static_cast<std::int8_t>(deg[v] + 1);
                exor[v] = static_cast<std::int16_t>(exor[v] ^ (cell + 1));
            }
        }

        candidate_flows_.assign(edge_stack_.size(), 0.0);
        std::array<std::int8_t, kMaxNodes> queue{};
        int queued = 0;
        for (int v = 0; v < nodes_; ++v) {
            if (deg[v] == 1) queue[queued++] = static_cast<std::int8_t>(v);
        }
        double objective = 0.0;
        std::size_t processed = 0;
        for (int qi = 0; qi < queued && processed < edge_stack_.size(); ++qi) {
            const int v = queue[qi];
            if (deg[v] != 1) continue;
            const int cell = exor[v] - 1;
            const int other = other_end(cell, v);
            const double f = rem[v];
            if (f < -kFlowTolerance) return;
            const auto slot = std::find(edge_stack_.begin(), edge_stack_.end(), cell);
            candidate_flows_[static_cast<std::size_t>(slot - edge_stack_.begin())] = f;
            objective += f * cost_[cell];
            rem[v] = 0.0;
            rem[other] -= f;
            for (int u : {v, other}) {
                deg[u] = static_cast<std::int8_t>(deg[u] - 1);
                exor[u] = static_cast<std::int16_t>(exor[u] ^ (cell + 1));
            }
            if (deg[other] == 1) queue[queued++] = static_cast<std::int8_t>(other);
            ++processed;
        }
        if (processed != edge_stack_.size()) return;

        if (objective < best_objective_) {
            best_objective_ = objective;
            best_edges_ = edge_stack_;
            best_flows_ = candidate_flows_;
        }
    }

    int n_, m_, nodes_, cells_;
    std::vector<double> cost_;
    std::array<std::uint64_t, kMaxNodes> incident_{};
    State root_{};
    std::vector<int> edge_stack_;
    std::vector<double> candidate_flows_;
    std::vector<int> best_edges_;
    std::vector<double> best_flows_;
    double best_objective_ = std::numeric_limits<double>::infinity();
};

} // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) {
        throw Error(ErrorKind::InvalidMeasure, "measure needs at least one support point");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw Error(ErrorKind::InvalidMeasure, "measure weights must be finite and nonnegative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > kMassTolerance) {
        throw Error(ErrorKind::InvalidMeasure,
                    "measure mass is " + std::to_string(total) + ", expected 1");
    }
    if (total != 1.0) {
        for (double& w : weights_) w /= total;
    }
}

TransportPlan solve_emd(const DiscreteMeasure& source, const DiscreteMeasure& target,
                        const CostMatrix& cost) {
    validate_pair(source, target, cost);

    const PrunedMeasure rows = prune(source);
    const PrunedMeasure cols = prune(target);
    std::vector<double> sub_cost(rows.kept.size() * cols.kept.size());
    for (std::size_t i = 0; i < rows.kept.size(); ++i) {
        for (std::size_t j = 0; j < cols.kept.size(); ++j) {
            sub_cost[i * cols.kept.size() + j] = cost(rows.kept[i], cols.kept[j]);
        }
    }

    TransportSimplex simplex(rows.weights, cols.weights, std::move(sub_cost));
    simplex.run();

    TransportPlan plan;
    plan.coupling = Matrix(source.size(), target.size());
    for (std::size_t i = 0; i < rows.kept.size(); ++i) {
        for (std::size_t j = 0; j < cols.kept.size(); ++j) {
            plan.coupling(rows.kept[i], cols.kept[j]) = simplex.flow(i, j);
        }
    }
    plan.objective = simplex.objective();
    return plan;
}

TransportPlan brute_force_emd(const DiscreteMeasure& source, const DiscreteMeasure& target,
                              const CostMatrix& cost) {
    if (source.size() > VertexEnumerator::kMaxSide || target.size() > VertexEnumerator::kMaxSide) {
        throw Error(ErrorKind::InstanceTooLarge,
                    "brute-force oracle is limited to 6x6 instances, got " +
                        std::to_string(source.size()) + "x" + std::to_string(target.size()));
    }
    validate_pair(source, target, cost);

    VertexEnumerator enumerator(source.weights(), target.weights(),
                                std::vector<double>(cost.data()));
    enumerator.run();
    TransportPlan plan;
    plan.coupling = enumerator.plan();
    plan.objective = enumerator.objective();
    return plan;
}

} // namespace wmdx
