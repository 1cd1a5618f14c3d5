#include "ipx/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipx/errors.hpp"

namespace ipx {

Portfolio PaymentStream::at(int node) const {
    const auto it = pay_.find(node);
    return it == pay_.end() ? Portfolio{} : it->second;
}

void PaymentStream::add(int node, const Portfolio& c) {
    if (!std::isfinite(c.cash) || !std::isfinite(c.shares)) throw InputError("payment must be finite");
    Portfolio& slot = pay_[node];
    slot = slot + c;
    if (slot.cash == 0.0 && slot.shares == 0.0) pay_.erase(node);
}

PaymentStream PaymentStream::operator+(const PaymentStream& o) const {
    PaymentStream out = *this;
    for (const auto& [id, c] : o.pay_) out.add(id, c);
    return out;
}

PaymentStream PaymentStream::operator-(const PaymentStream& o) const { return *this + (-o); }

PaymentStream PaymentStream::operator-() const { return scaled(-1.0); }

PaymentStream PaymentStream::scaled(double s) const {
    PaymentStream out;
    for (const auto& [id, c] : pay_) out.add(id, {s * c.cash, s * c.shares});
    return out;
}

AggregateClaim AggregateClaim::operator+(const AggregateClaim& o) const {
    AggregateClaim out = *this;
    for (std::size_t i = 0; i < out.value.size(); ++i) out.value[i] = out.value[i] + o.value[i];
    return out;
}

AggregateClaim AggregateClaim::operator-() const {
    AggregateClaim out = *this;
    for (auto& v : out.value) v = -v;
    return out;
}

AggregateClaim AggregateClaim::shifted(double cash) const {
    AggregateClaim out = *this;
    for (auto& v : out.value) v.cash += cash;
    return out;
}

DisutilityProfile::DisutilityProfile(int horizon, std::vector<int> dates, std::vector<double> alphas)
    : horizon_(horizon) {
    if (dates.empty()) throw InputError("injection set must be nonempty");
    std::vector<std::pair<int, double>> pairs;
    if (alphas.size() != 1 && alphas.size() != dates.size())
        throw InputError("alpha must be a single value or one value per injection date");
    for (std::size_t i = 0; i < dates.size(); ++i) pairs.emplace_back(dates[i], alphas.size() == 1 ? alphas[0] : alphas[i]);
    std::sort(pairs.begin(), pairs.end());
    alpha_.assign(horizon_ + 1, 0.0);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [t, al] = pairs[i];
        if (t < 0 || t > horizon_) throw InputError("injection date " + std::to_string(t) + " outside [0,T]");
        if (i > 0 && pairs[i - 1].first == t) throw InputError("injection date " + std::to_string(t) + " listed twice");
        if (!(al > 0.0) || !std::isfinite(al)) throw InputError("risk aversion must be positive and finite");
        alpha_[t] = al;
        dates_.push_back(t);
        log_term_ += std::log(al) / al;
    }
    tail_.assign(horizon_ + 2, 0.0);
    for (int t = horizon_; t >= 0; --t) tail_[t] = tail_[t + 1] + (alpha_[t] > 0.0 ? 1.0 / alpha_[t] : 0.0);
}

namespace {

PaymentStream option(const TreeModel& model, double strike, Delivery delivery, int expiry, bool call) {
    if (!(strike > 0.0)) throw InputError("strike must be positive");
    if (expiry < 0) expiry = model.horizon();
    if (expiry > model.horizon()) throw InputError("expiry beyond the horizon");
    const double k = strike * model.discount(expiry);
    PaymentStream out;
    for (int id : model.level(expiry)) {
        const double s = model.node(id).ref;
        const bool itm = call ? s > k : s < k;
        if (!itm) continue;
        const double sign = call ? 1.0 : -1.0;
        if (delivery == Delivery::physical) out.add(id, {-sign * k, sign});
        else out.add(id, {sign * (s - k), 0.0});
    }
    return out;
}

}  // namespace

PaymentStream call_option(const TreeModel& model, double strike, Delivery delivery, int expiry) {
    return option(model, strike, delivery, expiry, true);
}

PaymentStream put_option(const TreeModel& model, double strike, Delivery delivery, int expiry) {
    return option(model, strike, delivery, expiry, false);
}

PaymentStream cash_at(const TreeModel& model, int t, double amount) {
    if (t < 0 || t > model.horizon()) throw InputError("payment date outside [0,T]");
    PaymentStream out;
    for (int id : model.level(t)) out.add(id, {amount, 0.0});
    return out;
}

PaymentStream shift_cash(const PaymentStream& stream, double delta) {
    PaymentStream out = stream;
    out.add(0, {-delta, 0.0});
    return out;
}

AggregateClaim aggregate_claim(const TreeModel& model, const PaymentStream& stream) {
    for (const auto& [id, c] : stream.entries())
        if (id < 0 || id >= model.size()) throw InputError("payment keyed by unknown node " + std::to_string(id));
    std::vector<Portfolio> partial(model.size());
    std::vector<bool> seen(model.size(), false);
    partial[0] = stream.at(0);
    seen[0] = true;
    for (int t = 0; t < model.horizon(); ++t) {
        for (int id : model.level(t)) {
            for (int c : model.node(id).succ) {
                const Portfolio v = partial[id] + stream.at(c);
                if (!seen[c]) {
                    partial[c] = v;
                    seen[c] = true;
                    continue;
                }
                const double scale = 1.0 + std::abs(v.cash) + std::abs(v.shares);
                if (std::abs(partial[c].cash - v.cash) > 1e-12 * scale ||
                    std::abs(partial[c].shares - v.shares) > 1e-12 * scale)
                    throw InputError("payment stream is path-dependent on the lattice at node " + std::to_string(c) +
                                     "; use path-tree mode");
            }
        }
    }
    AggregateClaim out;
    out.value.assign(model.size(), {});
    for (int id : model.level(model.horizon())) out.value[id] = partial[id];
    return out;
}

Portfolio sum_along(const PaymentStream& stream, const ScenarioPath& path) {
    Portfolio s;
    for (int id : path.nodes) s = s + stream.at(id);
    return s;
}

PaymentStream lift_stream(const PaymentStream& stream, const PathTree& tree) {
    PaymentStream out;
    for (std::size_t i = 0; i < tree.origin.size(); ++i) {
        const Portfolio c = stream.at(tree.origin[i]);
        if (c.cash != 0.0 || c.shares != 0.0) out.add(static_cast<int>(i), c);
    }
    return out;
}

}  // namespace ipx
