#include "ipx/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ipx/errors.hpp"

namespace ipx {

namespace {

std::string node_name(const Node& n, int id) {
    std::ostringstream os;
    os << "node " << id << " (t=" << n.t << ", state=" << n.state << ")";
    return os.str();
}

}  // namespace

TreeModel::TreeModel(int horizon, std::vector<Node> nodes, bool lattice, std::vector<double> discount)
    : horizon_(horizon), nodes_(std::move(nodes)), lattice_(lattice) {
    if (horizon_ < 1) throw InputError("tree horizon must be at least 1");
    if (nodes_.empty() || nodes_[0].t != 0) throw InputError("node 0 must be the root at t=0");
    if (discount.empty()) discount.assign(horizon_ + 1, 1.0);
    if (static_cast<int>(discount.size()) != horizon_ + 1) throw InputError("discount vector must have T+1 entries");
    discount_ = std::move(discount);

    const int n = size();
    levels_.assign(horizon_ + 1, {});
    for (auto& node : nodes_) node.parents.clear();
    for (int id = 0; id < n; ++id) {
        const Node& nd = nodes_[id];
        if (nd.t < 0 || nd.t > horizon_) throw InputError(node_name(nd, id) + ": time outside [0,T]");
        if (!(nd.bid > 0.0) || !(nd.ask >= nd.bid) || !std::isfinite(nd.ask))
            throw InputError(node_name(nd, id) + ": need 0 < bid <= ask");
        levels_[nd.t].push_back(id);
        if (nd.t == horizon_) {
            if (!nd.succ.empty()) throw InputError(node_name(nd, id) + ": terminal node has successors");
            continue;
        }
        if (nd.succ.empty()) throw InputError(node_name(nd, id) + ": non-terminal node without successors");
        if (nd.prob.size() != nd.succ.size()) throw InputError(node_name(nd, id) + ": one probability per successor");
        double total = 0.0;
        for (std::size_t k = 0; k < nd.succ.size(); ++k) {
            const int c = nd.succ[k];
            if (c <= 0 || c >= n) throw InputError(node_name(nd, id) + ": successor id out of range");
            if (nodes_[c].t != nd.t + 1) throw InputError(node_name(nd, id) + ": successor not at the next date");
            if (!(nd.prob[k] > 0.0) || nd.prob[k] > 1.0)
                throw InputError(node_name(nd, id) + ": transition probabilities must lie in (0,1]");
            total += nd.prob[k];
        }
        if (std::abs(total - 1.0) > 1e-9) throw InputError(node_name(nd, id) + ": transition probabilities must sum to 1");
    }
    for (int id = 0; id < n; ++id)
        for (int c : nodes_[id].succ) nodes_[c].parents.push_back(id);
    if (levels_[0].size() != 1) throw InputError("exactly one node must sit at t=0");
    for (int id = 1; id < n; ++id) {
        const auto& par = nodes_[id].parents;
        if (par.empty()) throw InputError(node_name(nodes_[id], id) + ": unreachable from the root");
        if (!lattice_ && par.size() != 1) throw InputError(node_name(nodes_[id], id) + ": several parents in a non-lattice tree");
    }
    for (int t = 0; t <= horizon_; ++t)
        if (levels_[t].empty()) throw InputError("no nodes at t=" + std::to_string(t));

    mult_.assign(n, 0.0);
    mult_[0] = 1.0;
    for (int t = 0; t < horizon_; ++t)
        for (int id : levels_[t])
            for (int c : nodes_[id].succ) mult_[c] += mult_[id];
}

void LatticeParams::validate() const {
    if (T < 1) throw InputError("steps must be at least 1");
    if (!(S0 > 0.0)) throw InputError("s0 must be positive");
    if (!(sigma >= 0.0)) throw InputError("sigma must be nonnegative");
    if (!(cost >= 0.0 && cost < 1.0)) throw InputError("cost must lie in [0,1)");
    if (!(p > 0.0 && p < 1.0)) throw InputError("prob_up must lie in (0,1)");
    if (!(rate > -1.0)) throw InputError("rate must exceed -1");
    if (steps_per_year < 0) throw InputError("steps_per_year must be positive");
}

TreeModel build_binomial(const LatticeParams& params) {
    params.validate();
    const int T = params.T;
    const double spy = params.year_steps();
    const double h = params.sigma * std::sqrt(1.0 / spy);
    std::vector<double> disc(T + 1);
    for (int t = 0; t <= T; ++t) disc[t] = std::pow(1.0 + params.rate, -t / spy);

    auto id_of = [](int t, int j) { return t * (t + 1) / 2 + j; };
    std::vector<Node> nodes(static_cast<std::size_t>((T + 1) * (T + 2) / 2));
    for (int t = 0; t <= T; ++t) {
        for (int j = 0; j <= t; ++j) {
            Node& nd = nodes[id_of(t, j)];
            nd.t = t;
            nd.state = j;
            const double mid = params.S0 * std::exp(h * (2 * j - t)) * disc[t];
            nd.ref = mid;
            if (t == 0 && !params.cost_at_root) {
                nd.bid = nd.ask = params.S0;
            } else {
                nd.ask = (1.0 + params.cost) * mid;
                nd.bid = (1.0 - params.cost) * mid;
            }
            if (t < T) {
                nd.succ = {id_of(t + 1, j + 1), id_of(t + 1, j)};
                nd.prob = {params.p, 1.0 - params.p};
            }
        }
    }
    return TreeModel(T, std::move(nodes), true, std::move(disc));
}

double risk_neutral_up(const LatticeParams& params) {
    const double spy = params.year_steps();
    const double h = params.sigma * std::sqrt(1.0 / spy);
    const double growth = std::pow(1.0 + params.rate, 1.0 / spy);
    return (growth - std::exp(-h)) / (std::exp(h) - std::exp(-h));
}

double portfolio_cost(const Node& node, const Portfolio& x) {
    if (x.shares > 0.0) return x.cash + x.shares * node.ask;
    if (x.shares < 0.0) return x.cash + x.shares * node.bid;
    return x.cash;
}

ScenarioPath parse_scenario(const TreeModel& model, const std::string& text) {
    std::vector<int> choices;
    for (char ch : text) {
        if (ch == 'u' || ch == 'U') choices.push_back(0);
        else if (ch == 'd' || ch == 'D') choices.push_back(1);
        else if (ch >= '0' && ch <= '9') choices.push_back(ch - '0');
        else if (ch == ' ' || ch == ',') continue;
        else throw InputError(std::string("scenario: unexpected character '") + ch + "'");
    }
    return path_from_choices(model, choices);
}

ScenarioPath path_from_choices(const TreeModel& model, const std::vector<int>& choices) {
    if (static_cast<int>(choices.size()) != model.horizon())
        throw InputError("scenario must have exactly " + std::to_string(model.horizon()) + " moves, got " +
                         std::to_string(choices.size()));
    ScenarioPath path;
    path.nodes.push_back(0);
    for (std::size_t s = 0; s < choices.size(); ++s) {
        const Node& nd = model.node(path.nodes.back());
        if (choices[s] < 0 || choices[s] >= static_cast<int>(nd.succ.size()))
            throw InputError("scenario move " + std::to_string(s + 1) + " selects a missing successor");
        path.nodes.push_back(nd.succ[choices[s]]);
    }
    return path;
}

double path_probability(const TreeModel& model, const ScenarioPath& path) {
    double pr = 1.0;
    for (std::size_t s = 0; s + 1 < path.nodes.size(); ++s) {
        const Node& nd = model.node(path.nodes[s]);
        const auto it = std::find(nd.succ.begin(), nd.succ.end(), path.nodes[s + 1]);
        if (it == nd.succ.end()) throw InputError("scenario nodes are not successor-linked");
        pr *= nd.prob[it - nd.succ.begin()];
    }
    return pr;
}

void for_each_path(const TreeModel& model, const std::function<void(const ScenarioPath&, double)>& visit) {
    ScenarioPath path;
    path.nodes.reserve(model.horizon() + 1);
    std::function<void(int, double)> rec = [&](int id, double pr) {
        path.nodes.push_back(id);
        const Node& nd = model.node(id);
        if (nd.succ.empty()) {
            visit(path, pr);
        } else {
            for (std::size_t k = 0; k < nd.succ.size(); ++k) rec(nd.succ[k], pr * nd.prob[k]);
        }
        path.nodes.pop_back();
    };
    rec(0, 1.0);
}

PathTree expand_to_path_tree(const TreeModel& model) {
    PathTree out;
    std::vector<Node> nodes;
    std::vector<int> origin;
    nodes.push_back(model.node(0));
    nodes.back().succ.clear();
    nodes.back().prob.clear();
    nodes.back().parents.clear();
    origin.push_back(0);
    // Breadth-first so ids stay grouped by level.
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Node& src = model.node(origin[i]);
        for (std::size_t k = 0; k < src.succ.size(); ++k) {
            if (nodes.size() >= (std::size_t{1} << 24)) throw InputError("path tree too large to materialize");
            Node child = model.node(src.succ[k]);
            child.succ.clear();
            child.prob.clear();
            child.parents.clear();
            child.state = static_cast<int>(nodes.size());
            nodes[i].succ.push_back(static_cast<int>(nodes.size()));
            nodes[i].prob.push_back(src.prob[k]);
            nodes.push_back(std::move(child));
            origin.push_back(src.succ[k]);
        }
    }
    // Renumber states within each level for readability.
    std::vector<int> counter(model.horizon() + 1, 0);
    for (auto& nd : nodes) nd.state = counter[nd.t]++;
    std::vector<double> disc(model.horizon() + 1);
    for (int t = 0; t <= model.horizon(); ++t) disc[t] = model.discount(t);
    out.tree = TreeModel(model.horizon(), std::move(nodes), false, std::move(disc));
    out.origin = std::move(origin);
    return out;
}

namespace {

Admissible spread_relint(const Node& nd) {
    return {nd.bid, nd.ask, false};
}

Admissible intersect(const Admissible& a, const Admissible& b) {
    if (a.empty || b.empty) return {0, 0, true};
    if (a.point() && b.point()) return a.lo == b.lo ? a : Admissible{0, 0, true};
    if (a.point()) return (b.lo < a.lo && a.lo < b.hi) ? a : Admissible{0, 0, true};
    if (b.point()) return (a.lo < b.lo && b.lo < a.hi) ? b : Admissible{0, 0, true};
    const double lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
    return lo < hi ? Admissible{lo, hi, false} : Admissible{0, 0, true};
}

// Convex combinations with strictly positive weights of the successors' sets.
Admissible open_span(const std::vector<Admissible>& parts) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool all_same_point = true;
    for (const auto& p : parts) {
        lo = std::min(lo, p.lo);
        hi = std::max(hi, p.hi);
        if (!p.point() || p.lo != parts.front().lo) all_same_point = false;
    }
    if (all_same_point) return parts.front();
    return {lo, hi, false};
}

// Strictly positive weights on xs with mean s; requires min xs < s < max xs or all equal.
std::vector<double> positive_martingale_weights(const std::vector<double>& xs, double s) {
    const std::size_t m = xs.size();
    std::vector<double> q(m, 1.0 / m);
    if (m == 1) return {1.0};
    double mean = 0.0;
    for (double x : xs) mean += x / m;
    if (mean == s) return q;
    const std::size_t e = mean < s ? std::max_element(xs.begin(), xs.end()) - xs.begin()
                                   : std::min_element(xs.begin(), xs.end()) - xs.begin();
    const double lam = (s - mean) / (xs[e] - mean);
    for (auto& w : q) w *= (1.0 - lam);
    q[e] += lam;
    return q;
}

}  // namespace

NoArbitrageReport check_robust_no_arbitrage(const TreeModel& model) {
    NoArbitrageReport rep;
    const int n = model.size();
    rep.admissible.assign(n, {});
    for (int t = model.horizon(); t >= 0; --t) {
        for (int id : model.level(t)) {
            const Node& nd = model.node(id);
            Admissible adm = spread_relint(nd);
            if (!nd.succ.empty()) {
                std::vector<Admissible> parts;
                for (int c : nd.succ) parts.push_back(rep.admissible[c]);
                adm = intersect(adm, open_span(parts));
            }
            rep.admissible[id] = adm;
            if (adm.empty && rep.failing_node < 0) {
                rep.failing_node = id;
                rep.message = node_name(nd, id) + ": no martingale price inside the spread";
            }
        }
        if (rep.failing_node >= 0) return rep;
    }

    // Forward selection: midpoints, nudged where a parent would otherwise fall
    // outside the open span of its successors' selected prices.
    rep.witness.assign(n, std::numeric_limits<double>::quiet_NaN());
    rep.witness_q.assign(n, {});
    auto mid = [](const Admissible& a) { return 0.5 * (a.lo + a.hi); };
    rep.witness[0] = mid(rep.admissible[0]);
    for (int t = 0; t < model.horizon(); ++t) {
        for (int id : model.level(t)) {
            const Node& nd = model.node(id);
            const double s = rep.witness[id];
            std::vector<bool> fresh(nd.succ.size());
            for (std::size_t k = 0; k < nd.succ.size(); ++k) {
                const int c = nd.succ[k];
                fresh[k] = std::isnan(rep.witness[c]);
                if (fresh[k]) rep.witness[c] = nd.succ.size() == 1 ? s : mid(rep.admissible[c]);
            }
            auto values = [&] {
                std::vector<double> xs;
                for (int c : nd.succ) xs.push_back(rep.witness[c]);
                return xs;
            };
            auto xs = values();
            double lo = *std::min_element(xs.begin(), xs.end()), hi = *std::max_element(xs.begin(), xs.end());
            if (!(lo == hi && lo == s) && !(lo < s && s < hi)) {
                for (int side = 0; side < 2; ++side) {
                    xs = values();
                    lo = *std::min_element(xs.begin(), xs.end());
                    hi = *std::max_element(xs.begin(), xs.end());
                    const bool need_high = side == 0 && hi <= s;
                    const bool need_low = side == 1 && lo >= s;
                    if (!need_high && !need_low) continue;
                    for (std::size_t k = 0; k < nd.succ.size(); ++k) {
                        const Admissible& a = rep.admissible[nd.succ[k]];
                        if (!fresh[k]) continue;
                        if (need_high && a.hi > s) {
                            rep.witness[nd.succ[k]] = a.point() ? a.lo : 0.5 * (std::max(a.lo, s) + a.hi);
                            break;
                        }
                        if (need_low && a.lo < s) {
                            rep.witness[nd.succ[k]] = a.point() ? a.lo : 0.5 * (a.lo + std::min(a.hi, s));
                            break;
                        }
                    }
                }
                xs = values();
                lo = *std::min_element(xs.begin(), xs.end());
                hi = *std::max_element(xs.begin(), xs.end());
                if (!(lo == hi && lo == s) && !(lo < s && s < hi)) {
                    rep.message = node_name(nd, id) + ": admissible intervals are nonempty but the recombinant "
                                  "witness selection failed";
                    rep.ok = true;  // the interval criterion itself is satisfied
                    rep.witness.clear();
                    rep.witness_q.clear();
                    return rep;
                }
            }
            rep.witness_q[id] = positive_martingale_weights(xs, s);
        }
    }
    rep.ok = true;
    return rep;
}

}  // namespace ipx
