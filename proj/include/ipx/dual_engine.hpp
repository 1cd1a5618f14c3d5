#pragma once

#include <string>
#include <vector>

#include "ipx/market_model.hpp"
#include "ipx/payoff.hpp"
#include "ipx/pwl.hpp"

namespace ipx {

enum class Method { upper, lower };

const char* method_name(Method m);
Method parse_method(const std::string& text);

struct ApproxSettings {
    Method method = Method::upper;
    int n = 150;               // subintervals per price interval
    double dual_tol = 1e-12;
    int max_iters = 200;
    int threads = 0;           // 0: hardware concurrency

    void validate() const;
    HullOptions hull_options() const { return {dual_tol, max_iters}; }
    bool operator==(const ApproxSettings&) const = default;
};

// Backward-induction family of per-node approximants. Holds its own copies of
// the inputs; hulls reference the stored functions, so it is move-only.
class ValueSurface {
public:
    ValueSurface(TreeModel model, AggregateClaim claim, DisutilityProfile profile, ApproxSettings approx);
    ValueSurface(ValueSurface&&) noexcept = default;
    ValueSurface& operator=(ValueSurface&&) noexcept = default;
    ValueSurface(const ValueSurface&) = delete;
    ValueSurface& operator=(const ValueSurface&) = delete;

    const TreeModel& model() const { return model_; }
    const AggregateClaim& claim() const { return claim_; }
    const DisutilityProfile& profile() const { return profile_; }
    const ApproxSettings& approx() const { return approx_; }
    Method method() const { return approx_.method; }

    const PwlConvex& J(int node) const { return J_[node]; }
    // Hull of the successors of a non-terminal node with weight a_{t+1}.
    const Hull& hull(int node) const { return hulls_[node]; }

private:
    void build();

    TreeModel model_;
    AggregateClaim claim_;
    DisutilityProfile profile_;
    ApproxSettings approx_;
    std::vector<PwlConvex> J_;
    std::vector<Hull> hulls_;
};

// Throws ModelError when a node's restricted domain is empty.
ValueSurface backward_sweep(const TreeModel& model, const AggregateClaim& claim, const DisutilityProfile& profile,
                            const ApproxSettings& approx);

struct KValue {
    double s0 = 0.0;  // minimizing root price
    double K = 0.0;
};
KValue k_value(const ValueSurface& surface);

struct ShadowStep {
    std::vector<int> succ;
    std::vector<double> q;       // weights over all successors
    std::vector<double> s_next;  // shadow price at each successor
    double theta = 0.0;          // dual multiplier of the hull at this node
    double value = 0.0;          // hull value at the query price
    double residual = 0.0;       // |S_t - sum q S_{t+1}|
};
ShadowStep shadow_step(const ValueSurface& surface, int node, double s, double theta_pref = kNaN);

struct ShadowPath {
    ScenarioPath path;
    std::vector<double> s;           // S_t on the path, t = 0..T
    std::vector<ShadowStep> steps;   // steps[t] leaves node t of the path
    std::vector<int> taken;          // index of the realized successor in steps[t]
    std::vector<double> log_lambda;  // ln of the density, t = 0..T (may be -inf)
    double K = 0.0;
};
ShadowPath shadow_path(const ValueSurface& surface, const ScenarioPath& scenario);

// Shadow pair on every node; only meaningful on a non-recombinant tree, where
// node values are path values. Throws InputError on a lattice.
struct ShadowTree {
    std::vector<double> s;                // per node
    std::vector<std::vector<double>> q;   // per node, aligned with succ
};
ShadowTree shadow_tree(const ValueSurface& surface);

// Weighted relative entropy plus expected terminal value for an explicit pair.
// Validates spreads and the martingale property to tol (relative).
double entropy_h(const TreeModel& model, const std::vector<std::vector<double>>& q, const std::vector<double>& s,
                 const DisutilityProfile& profile, const AggregateClaim& claim, double tol = 1e-9);

}  // namespace ipx
