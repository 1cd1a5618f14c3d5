#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipx/dual_engine.hpp"

namespace ipx {

// exp(alpha_t x) - 1 on I; elsewhere 0 for x <= tol and +inf otherwise.
double disutility(const DisutilityProfile& profile, int t, double x, double tol = 1e-9);

struct InjectionPath {
    std::vector<double> x;  // t = 0..T, exactly 0 outside I
    double lambda = 0.0;
};
InjectionPath injection_path(const ValueSurface& surface, const ShadowPath& shadow);
InjectionPath injection_path(const ValueSurface& surface, const ScenarioPath& scenario);

struct TradePath {
    ShadowPath shadow;
    std::vector<double> injection;        // x-hat from the closed form
    std::vector<Portfolio> w;             // w_0..w_T
    std::vector<Portfolio> y;             // y_0..y_T; y_{-1} = 0 is implicit and y_T = 0
    std::vector<double> realized;         // phi_t(y_t - y_{t-1} + u_t)
    std::vector<double> node_residual;    // node equations after projection, t < T
    std::vector<double> spread_adjust;    // change made to w^s to trade at the spread, t < T
    std::vector<double> financing;        // |dw^b + dw^s S - a ln(q/p)|, index t (0 at t = 0)
    double terminal_spread_violation = 0.0;
    double terminal_residual = 0.0;       // realized_T - injection_T
};
// The surface must have been built with X = -sum u.
TradePath trade_path(const ValueSurface& surface, const ScenarioPath& scenario, const PaymentStream& u);

struct StrategyAudit {
    int paths = 0;
    double expected_formula = 0.0;   // E sum v_t(x-hat_t)
    double expected_realized = 0.0;  // E sum v_t(phi_t(dy_t + u_t))
    double max_financing_interior = 0.0;  // 0 < t < T
    double max_financing_terminal = 0.0;
    double max_spread = 0.0;         // projection adjustments and terminal violations
    double max_node_residual = 0.0;
    double max_terminal_residual = 0.0;
    bool terminal_zero = true;
};
// Enumerates every path of the model; intended for small trees.
StrategyAudit audit_strategies(const ValueSurface& surface, const PaymentStream& u);

struct Histogram {
    std::vector<double> edges;  // bins + 1
    std::vector<long> counts;
};

struct PnLSummary {
    std::string rng;
    std::uint64_t seed = 0;
    long scenarios = 0;
    double mean = 0.0, stddev = 0.0, std_error = 0.0;
    std::vector<double> quantile_levels, quantiles;
    Histogram histogram;
    double profit_term = 0.0;       // sample mean of sum (1/alpha)(L-1) ln L
    double disutility_mean = 0.0;   // sample mean of sum v_t(x-hat_t)
    double disutility_se = 0.0;
    std::vector<double> pnl;        // per scenario, in draw order
};

inline constexpr const char* kRngName = "mt19937_64/splitmix-v1";

// Seed of the generator for one scenario; independent of thread count.
std::uint64_t scenario_seed(std::uint64_t seed, std::uint64_t index);
ScenarioPath draw_path(const TreeModel& model, std::uint64_t seed, std::uint64_t index);

PnLSummary simulate_pnl(const ValueSurface& surface, long n_scenarios, std::uint64_t seed, int bins = 50,
                        int threads = 0);

}  // namespace ipx
