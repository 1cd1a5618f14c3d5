#pragma once

#include <optional>

#include "ipx/dual_engine.hpp"

namespace ipx {

struct PriceQuote {
    double value = 0.0;
    Method method = Method::upper;
    int n = 0;                       // 0 for exact computations
    std::optional<double> companion;  // same quantity from the other method
    double seconds = 0.0;
};

double k_of(const TreeModel& model, const AggregateClaim& X, const DisutilityProfile& profile,
            const ApproxSettings& approx);

struct Disutility {
    double V = 0.0;
    double lambda = 0.0;
    double K = 0.0;
};
// Minimal disutility of the liability u and its optimal dual scaling.
Disutility disutility_value(const TreeModel& model, const PaymentStream& u, const DisutilityProfile& profile,
                            const ApproxSettings& approx);
Disutility disutility_from_k(double K, const DisutilityProfile& profile);

// Prices several claims against one endowment; K of the endowment is computed once.
class IndifferencePricer {
public:
    IndifferencePricer(const TreeModel& model, const PaymentStream& w, const DisutilityProfile& profile,
                       const ApproxSettings& approx);
    PriceQuote ask(const PaymentStream& c) const;
    PriceQuote bid(const PaymentStream& c) const;
    double k_endowment() const { return k_w_; }

private:
    TreeModel model_;
    AggregateClaim w_;
    DisutilityProfile profile_;
    ApproxSettings approx_;
    double k_w_ = 0.0;
};

PriceQuote indifference_ask(const TreeModel& model, const PaymentStream& c, const PaymentStream& w,
                            const DisutilityProfile& profile, const ApproxSettings& approx);
PriceQuote indifference_bid(const TreeModel& model, const PaymentStream& c, const PaymentStream& w,
                            const DisutilityProfile& profile, const ApproxSettings& approx);

// Exact envelope recursions; throw ModelError when a domain empties.
PriceQuote superhedge_ask(const TreeModel& model, const PaymentStream& c);
PriceQuote superhedge_bid(const TreeModel& model, const PaymentStream& c);

// One-period model with a friction-free root and two successors.
struct OneStepData {
    double s0 = 100.0;
    double bid_up = 0.0, ask_up = 0.0;
    double bid_down = 0.0, ask_down = 0.0;
    double p = 0.5;
    double alpha = 1.0;

    void validate() const;
};
TreeModel one_step_model(const OneStepData& d);

struct OneStepPrices {
    double q_min = 0.0, q_max = 0.0;
    double K_zero = 0.0;   // K((0,0))
    double K_plus = 0.0;   // K((D,0))
    double K_minus = 0.0;  // K((-D,0))
    double ask = 0.0, bid = 0.0;
};
// Closed form for a cash payoff D at time 1 with I = {0,1} and a common alpha.
OneStepPrices one_step_oracle(const OneStepData& d, double d_up, double d_down);

}  // namespace ipx
