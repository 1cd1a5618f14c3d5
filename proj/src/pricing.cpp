#include "ipx/pricing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "ipx/errors.hpp"

namespace ipx {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Minimum of the lower convex envelope recursion for the claim X.
double envelope_min(const TreeModel& model, const AggregateClaim& X) {
    std::vector<PwlConvex> G(model.size());
    for (int id : model.level(model.horizon())) {
        const Node& nd = model.node(id);
        G[id] = PwlConvex::affine(nd.bid, nd.ask, X[id].cash, X[id].shares);
    }
    for (int t = model.horizon() - 1; t >= 0; --t) {
        for (int id : model.level(t)) {
            const Node& nd = model.node(id);
            std::vector<HullChild> kids;
            for (std::size_t k = 0; k < nd.succ.size(); ++k) kids.push_back({&G[nd.succ[k]], nd.prob[k]});
            try {
                G[id] = convex_envelope(kids, nd.bid, nd.ask);
            } catch (const DomainError& e) {
                throw ModelError("superhedging recursion has empty domain at node " + std::to_string(id) + ": " + e.what());
            }
        }
    }
    return min_on_interval(G[0], model.node(0).bid, model.node(0).ask).value;
}

}  // namespace

double k_of(const TreeModel& model, const AggregateClaim& X, const DisutilityProfile& profile,
            const ApproxSettings& approx) {
    return k_value(backward_sweep(model, X, profile, approx)).K;
}

Disutility disutility_from_k(double K, const DisutilityProfile& profile) {
    const double a0 = profile.a(0);
    const double lambda = std::exp((profile.sum_log_alpha_over_alpha() - K) / a0);
    return {lambda * a0 - profile.count(), lambda, K};
}

Disutility disutility_value(const TreeModel& model, const PaymentStream& u, const DisutilityProfile& profile,
                            const ApproxSettings& approx) {
    return disutility_from_k(k_of(model, -aggregate_claim(model, u), profile, approx), profile);
}

IndifferencePricer::IndifferencePricer(const TreeModel& model, const PaymentStream& w, const DisutilityProfile& profile,
                                       const ApproxSettings& approx)
    : model_(model), w_(aggregate_claim(model, w)), profile_(profile), approx_(approx) {
    k_w_ = k_of(model_, w_, profile_, approx_);
}

PriceQuote IndifferencePricer::ask(const PaymentStream& c) const {
    const auto t0 = Clock::now();
    const double k = k_of(model_, w_ + (-aggregate_claim(model_, c)), profile_, approx_);
    return {k_w_ - k, approx_.method, approx_.n, std::nullopt, since(t0)};
}

PriceQuote IndifferencePricer::bid(const PaymentStream& c) const {
    const auto t0 = Clock::now();
    const double k = k_of(model_, w_ + aggregate_claim(model_, c), profile_, approx_);
    return {k - k_w_, approx_.method, approx_.n, std::nullopt, since(t0)};
}

PriceQuote indifference_ask(const TreeModel& model, const PaymentStream& c, const PaymentStream& w,
                            const DisutilityProfile& profile, const ApproxSettings& approx) {
    const auto t0 = Clock::now();
    PriceQuote q = IndifferencePricer(model, w, profile, approx).ask(c);
    q.seconds = since(t0);
    return q;
}

PriceQuote indifference_bid(const TreeModel& model, const PaymentStream& c, const PaymentStream& w,
                            const DisutilityProfile& profile, const ApproxSettings& approx) {
    const auto t0 = Clock::now();
    PriceQuote q = IndifferencePricer(model, w, profile, approx).bid(c);
    q.seconds = since(t0);
    return q;
}

PriceQuote superhedge_ask(const TreeModel& model, const PaymentStream& c) {
    const auto t0 = Clock::now();
    const double v = -envelope_min(model, -aggregate_claim(model, c));
    return {v, Method::upper, 0, std::nullopt, since(t0)};
}

PriceQuote superhedge_bid(const TreeModel& model, const PaymentStream& c) {
    const auto t0 = Clock::now();
    const double v = envelope_min(model, aggregate_claim(model, c));
    return {v, Method::upper, 0, std::nullopt, since(t0)};
}

void OneStepData::validate() const {
    if (!(bid_down > 0.0 && bid_down <= ask_down && bid_up <= ask_up)) throw InputError("one-step spreads must be positive and ordered");
    if (!(ask_down < s0 && s0 < bid_up)) throw InputError("one-step prices must satisfy ask_down < S0 < bid_up");
    if (!(p > 0.0 && p < 1.0)) throw InputError("p must lie in (0,1)");
    if (!(alpha > 0.0)) throw InputError("alpha must be positive");
}

TreeModel one_step_model(const OneStepData& d) {
    d.validate();
    std::vector<Node> nodes(3);
    nodes[0] = {0, 0, d.s0, d.s0, d.s0, {1, 2}, {d.p, 1.0 - d.p}, {}};
    nodes[1] = {1, 0, d.bid_up, d.ask_up, 0.5 * (d.bid_up + d.ask_up), {}, {}, {0}};
    nodes[2] = {1, 1, d.bid_down, d.ask_down, 0.5 * (d.bid_down + d.ask_down), {}, {}, {0}};
    return TreeModel(1, std::move(nodes), false);
}

OneStepPrices one_step_oracle(const OneStepData& d, double d_up, double d_down) {
    d.validate();
    OneStepPrices r;
    r.q_min = (d.s0 - d.ask_down) / (d.ask_up - d.ask_down);
    r.q_max = (d.s0 - d.bid_down) / (d.bid_up - d.bid_down);
    const double p = d.p, al = d.alpha;
    auto K = [&](double yu, double yd) {
        const double eu = p * std::exp(-al * yu), ed = (1.0 - p) * std::exp(-al * yd);
        const double q = std::clamp(eu / (eu + ed), r.q_min, r.q_max);
        return (q * std::log(q / p) + (1.0 - q) * std::log((1.0 - q) / (1.0 - p))) / al + q * yu + (1.0 - q) * yd;
    };
    r.K_zero = K(0.0, 0.0);
    r.K_plus = K(d_up, d_down);
    r.K_minus = K(-d_up, -d_down);
    r.ask = r.K_zero - r.K_minus;
    r.bid = r.K_plus - r.K_zero;
    return r;
}

}  // namespace ipx
