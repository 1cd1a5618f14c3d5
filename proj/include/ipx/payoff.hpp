#pragma once

#include <map>
#include <vector>

#include "ipx/market_model.hpp"

namespace ipx {

// Adapted portfolio-valued payments keyed by node; absent nodes pay (0,0).
class PaymentStream {
public:
    Portfolio at(int node) const;
    void add(int node, const Portfolio& c);
    const std::map<int, Portfolio>& entries() const { return pay_; }
    bool empty() const { return pay_.empty(); }

    PaymentStream operator+(const PaymentStream& o) const;
    PaymentStream operator-(const PaymentStream& o) const;
    PaymentStream operator-() const;
    PaymentStream scaled(double s) const;
    bool operator==(const PaymentStream&) const = default;

private:
    std::map<int, Portfolio> pay_;
};

// Sum of payments up to T, stored per node id; meaningful on terminal nodes.
struct AggregateClaim {
    std::vector<Portfolio> value;

    const Portfolio& operator[](int node) const { return value[node]; }
    AggregateClaim operator+(const AggregateClaim& o) const;
    AggregateClaim operator-() const;
    AggregateClaim shifted(double cash) const;
};

class DisutilityProfile {
public:
    DisutilityProfile() = default;
    // alphas holds either one value for every date in I or one per date.
    DisutilityProfile(int horizon, std::vector<int> dates, std::vector<double> alphas);

    int horizon() const { return horizon_; }
    const std::vector<int>& dates() const { return dates_; }
    int count() const { return static_cast<int>(dates_.size()); }
    bool contains(int t) const { return alpha_[t] > 0.0; }
    double alpha(int t) const { return alpha_[t]; }  // 0 outside I
    // a_t = sum over k in I, k >= t of 1/alpha_k; a(T+1) = 0.
    double a(int t) const { return tail_[t]; }
    double sum_log_alpha_over_alpha() const { return log_term_; }

private:
    int horizon_ = 0;
    std::vector<int> dates_;
    std::vector<double> alpha_;
    std::vector<double> tail_;
    double log_term_ = 0.0;
};

enum class Delivery { physical, cash };

// Strike is nominal; it is discounted to the expiry date.
PaymentStream call_option(const TreeModel& model, double strike, Delivery delivery, int expiry = -1);
PaymentStream put_option(const TreeModel& model, double strike, Delivery delivery, int expiry = -1);
inline PaymentStream call_physical(const TreeModel& model, double strike) {
    return call_option(model, strike, Delivery::physical);
}
// (amount, 0) at every node of date t; amount already in discounted units.
PaymentStream cash_at(const TreeModel& model, int t, double amount);

// Subtracts delta cash at time 0.
PaymentStream shift_cash(const PaymentStream& stream, double delta);

// Throws InputError on a lattice when partial sums depend on the path.
AggregateClaim aggregate_claim(const TreeModel& model, const PaymentStream& stream);

// Sum of the stream along one scenario (always well defined).
Portfolio sum_along(const PaymentStream& stream, const ScenarioPath& path);

// Re-keys a stream defined on a lattice onto its path-tree expansion.
PaymentStream lift_stream(const PaymentStream& stream, const PathTree& tree);

}  // namespace ipx
