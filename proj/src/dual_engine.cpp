#include "ipx/dual_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipx/errors.hpp"
#include "parallel.hpp"

namespace ipx {

const char* method_name(Method m) { return m == Method::upper ? "upper" : "lower"; }

Method parse_method(const std::string& text) {
    if (text == "upper") return Method::upper;
    if (text == "lower") return Method::lower;
    throw InputError("method must be 'upper' or 'lower', got '" + text + "'");
}

void ApproxSettings::validate() const {
    if (n < 1) throw InputError("n must be at least 1");
    if (!(dual_tol > 0.0)) throw InputError("dual_tol must be positive");
    if (max_iters < 1) throw InputError("max_iters must be at least 1");
}

ValueSurface::ValueSurface(TreeModel model, AggregateClaim claim, DisutilityProfile profile, ApproxSettings approx)
    : model_(std::move(model)), claim_(std::move(claim)), profile_(std::move(profile)), approx_(approx) {
    build();
}

void ValueSurface::build() {
    approx_.validate();
    if (profile_.horizon() != model_.horizon()) throw InputError("disutility profile horizon differs from the model horizon");
    if (static_cast<int>(claim_.value.size()) != model_.size()) throw InputError("claim does not match the model");
    const int T = model_.horizon();
    J_.assign(model_.size(), PwlConvex{});
    hulls_.assign(model_.size(), Hull{});

    for (int id : model_.level(T)) {
        const Node& nd = model_.node(id);
        J_[id] = PwlConvex::affine(nd.bid, nd.ask, claim_[id].cash, claim_[id].shares);
    }
    const HullOptions opt = approx_.hull_options();
    for (int t = T - 1; t >= 0; --t) {
        const double a = profile_.a(t + 1);
        const auto& ids = model_.level(t);
        detail::parallel_for(ids.size(), approx_.threads, [&](std::size_t i) {
            const int id = ids[i];
            const Node& nd = model_.node(id);
            std::vector<HullChild> kids;
            for (std::size_t k = 0; k < nd.succ.size(); ++k) kids.push_back({&J_[nd.succ[k]], nd.prob[k]});
            try {
                if (a == 0.0) J_[id] = convex_envelope(kids, nd.bid, nd.ask);
                else if (approx_.method == Method::upper) J_[id] = hull_upper(kids, a, nd.bid, nd.ask, approx_.n, opt);
                else J_[id] = hull_lower(kids, a, nd.bid, nd.ask, approx_.n, opt);
            } catch (const DomainError& e) {
                throw ModelError("value function has empty domain at node " + std::to_string(id) + " (t=" +
                                 std::to_string(t) + "); the model admits arbitrage: " + e.what());
            }
            hulls_[id] = Hull(std::move(kids), a);
        });
    }
}

ValueSurface backward_sweep(const TreeModel& model, const AggregateClaim& claim, const DisutilityProfile& profile,
                            const ApproxSettings& approx) {
    return ValueSurface(model, claim, profile, approx);
}

KValue k_value(const ValueSurface& surface) {
    const Node& root = surface.model().node(0);
    const MinResult m = min_on_interval(surface.J(0), root.bid, root.ask);
    return {m.x, m.value};
}

ShadowStep shadow_step(const ValueSurface& surface, int node, double s, double theta_pref) {
    const TreeModel& model = surface.model();
    if (node < 0 || node >= model.size()) throw InputError("unknown node " + std::to_string(node));
    const Node& nd = model.node(node);
    if (nd.succ.empty()) throw InputError("shadow step from a terminal node");
    if (!surface.J(node).contains(s))
        throw DomainError("shadow price " + std::to_string(s) + " outside the value domain at node " + std::to_string(node));
    HullOptions opt = surface.approx().hull_options();
    opt.theta_pref = theta_pref;
    const HullResult r = surface.hull(node).solve(s, opt);
    ShadowStep out;
    out.succ = nd.succ;
    out.q = r.q;
    out.s_next = r.x;
    out.theta = r.theta;
    out.value = r.value;
    out.residual = r.mean_residual;
    return out;
}

namespace {

void check_path(const TreeModel& model, const ScenarioPath& p) {
    if (static_cast<int>(p.nodes.size()) != model.horizon() + 1 || p.nodes.front() != 0)
        throw InputError("scenario must start at the root and span the horizon");
    for (int t = 0; t < model.horizon(); ++t) {
        const auto& succ = model.node(p.nodes[t]).succ;
        if (std::find(succ.begin(), succ.end(), p.nodes[t + 1]) == succ.end())
            throw InputError("scenario step " + std::to_string(t + 1) + " does not follow a successor link");
    }
}

}  // namespace

ShadowPath shadow_path(const ValueSurface& surface, const ScenarioPath& scenario) {
    const TreeModel& model = surface.model();
    check_path(model, scenario);
    const int T = model.horizon();
    const KValue kv = k_value(surface);
    ShadowPath out;
    out.path = scenario;
    out.K = kv.K;
    out.s.assign(T + 1, 0.0);
    out.log_lambda.assign(T + 1, 0.0);
    out.s[0] = kv.s0;
    for (int t = 0; t < T; ++t) {
        const int id = scenario.nodes[t];
        ShadowStep step = shadow_step(surface, id, out.s[t]);
        const auto& succ = model.node(id).succ;
        const int j = static_cast<int>(std::find(succ.begin(), succ.end(), scenario.nodes[t + 1]) - succ.begin());
        out.s[t + 1] = step.s_next[j];
        out.log_lambda[t + 1] = out.log_lambda[t] + std::log(step.q[j] / model.node(id).prob[j]);
        out.taken.push_back(j);
        out.steps.push_back(std::move(step));
    }
    return out;
}

ShadowTree shadow_tree(const ValueSurface& surface) {
    const TreeModel& model = surface.model();
    if (model.lattice()) throw InputError("shadow pairs are path-dependent; expand the lattice into a path tree first");
    ShadowTree out;
    out.s.assign(model.size(), 0.0);
    out.q.assign(model.size(), {});
    out.s[0] = k_value(surface).s0;
    for (int t = 0; t < model.horizon(); ++t) {
        for (int id : model.level(t)) {
            const ShadowStep step = shadow_step(surface, id, out.s[id]);
            out.q[id] = step.q;
            for (std::size_t k = 0; k < step.succ.size(); ++k) out.s[step.succ[k]] = step.s_next[k];
        }
    }
    return out;
}

double entropy_h(const TreeModel& model, const std::vector<std::vector<double>>& q, const std::vector<double>& s,
                 const DisutilityProfile& profile, const AggregateClaim& claim, double tol) {
    if (static_cast<int>(q.size()) != model.size() || static_cast<int>(s.size()) != model.size())
        throw InputError("pair must assign weights and a price to every node");
    std::vector<double> reach(model.size(), 0.0);
    reach[0] = 1.0;
    double h = 0.0;
    for (int t = 0; t <= model.horizon(); ++t) {
        for (int id : model.level(t)) {
            if (reach[id] <= 0.0) continue;
            const Node& nd = model.node(id);
            const double scale = std::max(1.0, std::abs(s[id]));
            if (s[id] < nd.bid - tol * scale || s[id] > nd.ask + tol * scale)
                throw InputError("price at node " + std::to_string(id) + " lies outside the bid-ask spread");
            if (nd.succ.empty()) {
                h += reach[id] * (claim[id].cash + claim[id].shares * s[id]);
                continue;
            }
            if (q[id].size() != nd.succ.size()) throw InputError("weights at node " + std::to_string(id) + " do not match successors");
            double total = 0.0, mean = 0.0, ent = 0.0;
            for (std::size_t k = 0; k < nd.succ.size(); ++k) {
                const double w = q[id][k];
                if (w < -tol) throw InputError("negative transition weight at node " + std::to_string(id));
                total += w;
                mean += w * s[nd.succ[k]];
                if (w > 0.0) ent += w * std::log(w / nd.prob[k]);
                reach[nd.succ[k]] += reach[id] * std::max(w, 0.0);
            }
            if (std::abs(total - 1.0) > tol) throw InputError("transition weights at node " + std::to_string(id) + " do not sum to one");
            if (std::abs(mean - s[id]) > tol * scale) throw InputError("price is not a martingale at node " + std::to_string(id));
            h += reach[id] * profile.a(t + 1) * ent;
        }
    }
    return h;
}

}  // namespace ipx
