#include "ipx/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ipx/errors.hpp"
#include "ipx/pricing.hpp"
#include "parallel.hpp"

namespace ipx {

double disutility(const DisutilityProfile& profile, int t, double x, double tol) {
    if (profile.contains(t)) return std::expm1(profile.alpha(t) * x);
    return x <= tol ? 0.0 : kInf;
}

InjectionPath injection_path(const ValueSurface& surface, const ShadowPath& shadow) {
    const DisutilityProfile& prof = surface.profile();
    InjectionPath out;
    out.lambda = disutility_from_k(shadow.K, prof).lambda;
    out.x.assign(shadow.s.size(), 0.0);
    for (int t : prof.dates()) {
        const double al = prof.alpha(t);
        out.x[t] = (std::log(out.lambda / al) + shadow.log_lambda[t]) / al;
    }
    return out;
}

InjectionPath injection_path(const ValueSurface& surface, const ScenarioPath& scenario) {
    return injection_path(surface, shadow_path(surface, scenario));
}

namespace {

double log_ratio(double a, double q, double p) { return a > 0.0 ? a * std::log(q / p) : 0.0; }

struct NodeFit {
    Portfolio w;
    double residual = 0.0;
};

// Least-squares fit of w^b + w^s x = rhs over the active successors; w^s is
// pinned to `keep` when those successors all share one price.
NodeFit fit_node(const ValueSurface& surface, int node, const ShadowStep& step, double a, double s, double keep) {
    const TreeModel& model = surface.model();
    const Node& nd = model.node(node);
    const std::size_t m = step.succ.size();
    std::vector<double> rhs(m);
    for (std::size_t k = 0; k < m; ++k) {
        rhs[k] = -surface.J(step.succ[k]).eval(step.s_next[k]);
        if (step.q[k] > 0.0) rhs[k] -= log_ratio(a, step.q[k], nd.prob[k]);
    }
    double xbar = 0.0, rbar = 0.0, xmin = kInf, xmax = -kInf;
    for (std::size_t k = 0; k < m; ++k) {
        if (step.q[k] <= 0.0) continue;
        xbar += step.q[k] * step.s_next[k];
        rbar += step.q[k] * rhs[k];
        xmin = std::min(xmin, step.s_next[k]);
        xmax = std::max(xmax, step.s_next[k]);
    }
    auto surplus_ok = [&](const Portfolio& w) {
        for (std::size_t k = 0; k < m; ++k)
            if (step.q[k] <= 0.0 && w.cash + w.shares * step.s_next[k] < rhs[k] - 1e-9 * (1.0 + std::abs(rhs[k]))) return false;
        return true;
    };
    NodeFit fit;
    if (xmax - xmin > 1e-12 * std::max(1.0, std::abs(s))) {
        double sxx = 0.0, sxr = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (step.q[k] <= 0.0) continue;
            sxx += step.q[k] * (step.s_next[k] - xbar) * (step.s_next[k] - xbar);
            sxr += step.q[k] * (step.s_next[k] - xbar) * (rhs[k] - rbar);
        }
        fit.w.shares = sxr / sxx;
    } else {
        fit.w.shares = keep;
        if (!surplus_ok({rbar - keep * xbar, keep})) fit.w.shares = -step.theta;
    }
    fit.w.cash = rbar - fit.w.shares * xbar;
    return fit;
}

double node_residual(const ValueSurface& surface, int node, const ShadowStep& step, double a, const Portfolio& w) {
    const Node& nd = surface.model().node(node);
    double worst = 0.0;
    for (std::size_t k = 0; k < step.succ.size(); ++k) {
        double rhs = -surface.J(step.succ[k]).eval(step.s_next[k]);
        const double lhs = w.cash + w.shares * step.s_next[k];
        if (step.q[k] > 0.0) {
            rhs -= log_ratio(a, step.q[k], nd.prob[k]);
            worst = std::max(worst, std::abs(lhs - rhs));
        } else {
            worst = std::max(worst, std::max(0.0, rhs - lhs));  // surplus allowed on null successors
        }
    }
    return worst;
}

}  // namespace

TradePath trade_path(const ValueSurface& surface, const ScenarioPath& scenario, const PaymentStream& u) {
    const TreeModel& model = surface.model();
    const DisutilityProfile& prof = surface.profile();
    const int T = model.horizon();
    TradePath out;
    out.shadow = shadow_path(surface, scenario);
    out.injection = injection_path(surface, out.shadow).x;

    const auto& nodes = scenario.nodes;
    const Portfolio total = sum_along(u, scenario);
    const Portfolio& X = surface.claim()[nodes[T]];
    const double scale = 1.0 + std::abs(total.cash) + std::abs(total.shares);
    if (std::abs(X.cash + total.cash) > 1e-9 * scale || std::abs(X.shares + total.shares) > 1e-9 * scale)
        throw InputError("surface was not built for this liability: claim differs from -sum u on the scenario");

    const auto& S = out.shadow.s;
    out.w.resize(T + 1);
    out.financing.assign(T + 1, 0.0);
    Portfolio prev{};  // w_{-1}
    for (int t = 0; t < T; ++t) {
        const int id = nodes[t];
        const Node& nd = model.node(id);
        const ShadowStep& step = out.shadow.steps[t];
        const double a1 = prof.a(t + 1);
        const NodeFit fit = fit_node(surface, id, step, a1, S[t], prev.shares);

        // Trade only at the spread: buy at the ask, sell at the bid.
        const double tol = 1e-10 * std::max(1.0, std::abs(S[t]));
        double ws = fit.w.shares;
        if (nd.ask - nd.bid <= tol) ws = fit.w.shares;
        else if (std::abs(S[t] - nd.ask) <= tol) ws = std::max(ws, prev.shares);
        else if (std::abs(S[t] - nd.bid) <= tol) ws = std::min(ws, prev.shares);
        else ws = prev.shares;
        out.spread_adjust.push_back(std::abs(ws - fit.w.shares));

        Portfolio w;
        w.shares = ws;
        if (t == 0) {
            w.cash = -out.shadow.K - ws * S[0];
        } else {
            const int j = out.shadow.taken[t - 1];
            const double lr = log_ratio(prof.a(t), out.shadow.steps[t - 1].q[j], model.node(nodes[t - 1]).prob[j]);
            w.cash = prev.cash + lr - (ws - prev.shares) * S[t];
        }
        out.node_residual.push_back(node_residual(surface, id, step, a1, w));
        out.w[t] = w;
        prev = w;
    }

    // Terminal condition w_T = sum u along the scenario.
    out.w[T] = total;
    {
        const Node& nd = model.node(nodes[T]);
        const double dws = total.shares - prev.shares;
        const int j = out.shadow.taken[T - 1];
        const double lr = log_ratio(prof.a(T), out.shadow.steps[T - 1].q[j], model.node(nodes[T - 1]).prob[j]);
        out.financing[T] = std::abs((total.cash - prev.cash) + dws * S[T] - lr);
        const double tol = 1e-10 * std::max(1.0, std::abs(S[T]));
        const bool at_ask = std::abs(S[T] - nd.ask) <= tol, at_bid = std::abs(S[T] - nd.bid) <= tol;
        if ((dws > 0.0 && !at_ask) || (dws < 0.0 && !at_bid)) out.terminal_spread_violation = std::abs(dws);
    }
    for (int t = 1; t < T; ++t) {
        const int j = out.shadow.taken[t - 1];
        const double lr = log_ratio(prof.a(t), out.shadow.steps[t - 1].q[j], model.node(nodes[t - 1]).prob[j]);
        const Portfolio dw = out.w[t] - out.w[t - 1];
        out.financing[t] = std::abs(dw.cash + dw.shares * S[t] - lr);
    }

    // Positions from the increments of w.
    out.y.resize(T + 1);
    Portfolio y{};
    for (int t = 0; t <= T; ++t) {
        const Portfolio dw = t == 0 ? out.w[0] : out.w[t] - out.w[t - 1];
        const Portfolio ut = u.at(nodes[t]);
        Portfolio next;
        next.shares = y.shares + dw.shares - ut.shares;
        if (t == 0) {
            next.cash = dw.cash + out.injection[0] - ut.cash + out.shadow.K;
        } else {
            const int j = out.shadow.taken[t - 1];
            const double lr = log_ratio(prof.a(t), out.shadow.steps[t - 1].q[j], model.node(nodes[t - 1]).prob[j]);
            next.cash = y.cash + dw.cash + out.injection[t] - ut.cash - lr;
        }
        out.y[t] = next;
        y = next;
    }
    // The share leg closes exactly up to rounding; the cash leg carries the
    // approximation error, which the final injection absorbs.
    const double pos_scale = 1.0 + std::abs(total.shares);
    if (std::abs(out.y[T].shares) > 1e-9 * pos_scale)
        throw NumericError("terminal share position does not close: " + std::to_string(out.y[T].shares));
    out.y[T] = {};

    out.realized.resize(T + 1);
    Portfolio last{};
    for (int t = 0; t <= T; ++t) {
        const Portfolio trade = out.y[t] - last + u.at(nodes[t]);
        out.realized[t] = portfolio_cost(model.node(nodes[t]), trade);
        last = out.y[t];
    }
    out.terminal_residual = out.realized[T] - out.injection[T];
    return out;
}

StrategyAudit audit_strategies(const ValueSurface& surface, const PaymentStream& u) {
    const DisutilityProfile& prof = surface.profile();
    const int T = surface.model().horizon();
    StrategyAudit a;
    for_each_path(surface.model(), [&](const ScenarioPath& path, double prob) {
        const TradePath tp = trade_path(surface, path, u);
        double vf = 0.0, vr = 0.0;
        for (int t = 0; t <= T; ++t) {
            vf += disutility(prof, t, tp.injection[t]);
            vr += disutility(prof, t, tp.realized[t]);
        }
        a.expected_formula += prob * vf;
        a.expected_realized += prob * vr;
        for (int t = 1; t < T; ++t) a.max_financing_interior = std::max(a.max_financing_interior, tp.financing[t]);
        a.max_financing_terminal = std::max(a.max_financing_terminal, tp.financing[T]);
        for (double s : tp.spread_adjust) a.max_spread = std::max(a.max_spread, s);
        a.max_spread = std::max(a.max_spread, tp.terminal_spread_violation);
        for (double r : tp.node_residual) a.max_node_residual = std::max(a.max_node_residual, r);
        a.max_terminal_residual = std::max(a.max_terminal_residual, std::abs(tp.terminal_residual));
        a.terminal_zero = a.terminal_zero && tp.y[T].cash == 0.0 && tp.y[T].shares == 0.0;
        ++a.paths;
    });
    return a;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double quantile(const std::vector<double>& sorted, double level) {
    const double pos = level * static_cast<double>(sorted.size() - 1);
    const std::size_t i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, sorted.size() - 1);
    return sorted[i] + (pos - static_cast<double>(i)) * (sorted[j] - sorted[i]);
}

}  // namespace

std::uint64_t scenario_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) + index); }

ScenarioPath draw_path(const TreeModel& model, std::uint64_t seed, std::uint64_t index) {
    std::mt19937_64 gen(scenario_seed(seed, index));
    ScenarioPath path;
    path.nodes.push_back(0);
    for (int t = 0; t < model.horizon(); ++t) {
        const Node& nd = model.node(path.nodes.back());
        const double r = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        std::size_t k = 0;
        double acc = nd.prob[0];
        while (r >= acc && k + 1 < nd.succ.size()) acc += nd.prob[++k];
        path.nodes.push_back(nd.succ[k]);
    }
    return path;
}

PnLSummary simulate_pnl(const ValueSurface& surface, long n_scenarios, std::uint64_t seed, int bins, int threads) {
    if (n_scenarios < 1) throw InputError("scenario count must be positive");
    if (bins < 1) throw InputError("histogram needs at least one bin");
    const DisutilityProfile& prof = surface.profile();
    const int T = surface.model().horizon();
    std::vector<double> pnl(n_scenarios), profit(n_scenarios), dis(n_scenarios);
    detail::parallel_for(static_cast<std::size_t>(n_scenarios), threads, [&](std::size_t i) {
        const ScenarioPath path = draw_path(surface.model(), seed, i);
        const ShadowPath sp = shadow_path(surface, path);
        const InjectionPath inj = injection_path(surface, sp);
        double gain = 0.0, prof_term = 0.0, v = 0.0;
        for (int t = 0; t <= T; ++t) {
            if (!prof.contains(t)) continue;
            gain -= inj.x[t];
            v += disutility(prof, t, inj.x[t]);
            const double L = std::exp(sp.log_lambda[t]);
            if (L > 0.0) prof_term += (L - 1.0) * sp.log_lambda[t] / prof.alpha(t);
        }
        pnl[i] = gain;
        profit[i] = prof_term;
        dis[i] = v;
    });

    PnLSummary s;
    s.rng = kRngName;
    s.seed = seed;
    s.scenarios = n_scenarios;
    const double n = static_cast<double>(n_scenarios);
    s.mean = std::accumulate(pnl.begin(), pnl.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : pnl) ss += (x - s.mean) * (x - s.mean);
    s.stddev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    s.std_error = s.stddev / std::sqrt(n);
    s.profit_term = std::accumulate(profit.begin(), profit.end(), 0.0) / n;
    s.disutility_mean = std::accumulate(dis.begin(), dis.end(), 0.0) / n;
    double sd = 0.0;
    for (double x : dis) sd += (x - s.disutility_mean) * (x - s.disutility_mean);
    s.disutility_se = n > 1 ? std::sqrt(sd / (n - 1) / n) : 0.0;

    std::vector<double> sorted = pnl;
    std::sort(sorted.begin(), sorted.end());
    s.quantile_levels = {0.05, 0.25, 0.5, 0.75, 0.95};
    for (double l : s.quantile_levels) s.quantiles.push_back(quantile(sorted, l));
    const double lo = sorted.front(), hi = sorted.back();
    const double width = hi > lo ? (hi - lo) / bins : 1.0;
    for (int b = 0; b <= bins; ++b) s.histogram.edges.push_back(lo + b * width);
    s.histogram.counts.assign(bins, 0);
    for (double x : pnl) {
        int b = static_cast<int>((x - lo) / width);
        s.histogram.counts[std::clamp(b, 0, bins - 1)]++;
    }
    s.pnl = std::move(pnl);
    return s;
}

}  // namespace ipx
