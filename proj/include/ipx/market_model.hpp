#pragma once

#include <functional>
#include <string>
#include <vector>

namespace ipx {

// (x^b, x^s): cash units and shares.
struct Portfolio {
    double cash = 0.0;
    double shares = 0.0;

    Portfolio operator+(const Portfolio& o) const { return {cash + o.cash, shares + o.shares}; }
    Portfolio operator-(const Portfolio& o) const { return {cash - o.cash, shares - o.shares}; }
    Portfolio operator-() const { return {-cash, -shares}; }
    bool operator==(const Portfolio&) const = default;
};

struct Node {
    int t = 0;
    int state = 0;      // position within the level; number of up moves on a lattice
    double bid = 0.0;
    double ask = 0.0;
    double ref = 0.0;   // reference (mid) price used by payoff constructors
    std::vector<int> succ;
    std::vector<double> prob;
    std::vector<int> parents;
};

class TreeModel {
public:
    TreeModel() = default;
    // Node 0 must be the root; ids of level t+1 must follow those of level t.
    // Validates probabilities, prices and successor links; throws InputError.
    TreeModel(int horizon, std::vector<Node> nodes, bool lattice,
              std::vector<double> discount = {});

    int horizon() const { return horizon_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int id) const { return nodes_[id]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<int>& level(int t) const { return levels_[t]; }
    bool lattice() const { return lattice_; }
    // Number of root-to-node paths (1 everywhere on a non-recombinant tree).
    double multiplicity(int id) const { return mult_[id]; }
    // Factor converting nominal cash at time t into discounted units.
    double discount(int t) const { return discount_[t]; }

private:
    int horizon_ = 0;
    std::vector<Node> nodes_;
    std::vector<std::vector<int>> levels_;
    std::vector<double> mult_;
    std::vector<double> discount_;
    bool lattice_ = false;
};

struct LatticeParams {
    int T = 52;
    double S0 = 100.0;
    double sigma = 0.2;
    double rate = 0.02;      // annual effective
    double cost = 0.005;     // proportional, k
    double p = 0.5;          // up-move probability
    int steps_per_year = 0;  // 0 means T steps per year
    // Charge the spread at t = 0 as well. Off by default: the root is friction-free.
    bool cost_at_root = false;

    int year_steps() const { return steps_per_year > 0 ? steps_per_year : T; }
    void validate() const;
    bool operator==(const LatticeParams&) const = default;
};

// Recombinant lattice in discounted units. Successor 0 is the up move.
TreeModel build_binomial(const LatticeParams& params);

// Frictionless one-period risk-neutral up probability of the lattice.
double risk_neutral_up(const LatticeParams& params);

// x^b + x^s_+ S^a - x^s_- S^b
double portfolio_cost(const Node& node, const Portfolio& x);

struct ScenarioPath {
    std::vector<int> nodes;  // omega_0 .. omega_T
};

// 'u'/'d' select successor 0/1; digits select successor by index.
ScenarioPath parse_scenario(const TreeModel& model, const std::string& text);
ScenarioPath path_from_choices(const TreeModel& model, const std::vector<int>& choices);
double path_probability(const TreeModel& model, const ScenarioPath& path);

// Depth-first enumeration of every root-to-leaf path with its probability.
void for_each_path(const TreeModel& model,
                   const std::function<void(const ScenarioPath&, double)>& visit);

// Non-recombinant expansion; origin[i] is the model node behind path-tree node i.
struct PathTree {
    TreeModel tree;
    std::vector<int> origin;
};
PathTree expand_to_path_tree(const TreeModel& model);

// Admissible set for the price at a node: a point (lo == hi) or an open interval.
struct Admissible {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = false;
    bool point() const { return !empty && lo == hi; }
};

struct NoArbitrageReport {
    bool ok = false;
    int failing_node = -1;
    std::string message;
    std::vector<Admissible> admissible;        // per node
    std::vector<double> witness;               // per node, empty on failure
    std::vector<std::vector<double>> witness_q;  // per node, transition weights
};

NoArbitrageReport check_robust_no_arbitrage(const TreeModel& model);

}  // namespace ipx
