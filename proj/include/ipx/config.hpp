#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipx/dual_engine.hpp"
#include "ipx/market_model.hpp"
#include "ipx/payoff.hpp"

namespace ipx {

struct PayoffSpec {
    std::string kind = "none";  // none, call, put, cash
    double strike = 0.0;
    Delivery delivery = Delivery::physical;
    int expiry = -1;            // -1: the horizon
    int date = 0;               // cash payments
    double amount = 0.0;        // discounted units
    bool operator==(const PayoffSpec&) const = default;
};

// One row of an explicit tree: prices in discounted units, successors by id.
struct TreeNodeSpec {
    int id = 0;
    double bid = 0.0, ask = 0.0;
    std::vector<int> succ;
    std::vector<double> prob;
    bool operator==(const TreeNodeSpec&) const = default;
};

struct RunConfig {
    std::string model_type = "lattice";  // lattice or tree
    LatticeParams lattice;
    std::vector<TreeNodeSpec> tree;

    std::vector<int> dates;
    std::vector<double> alphas;

    PayoffSpec claim;
    PayoffSpec endowment;
    ApproxSettings approx;

    std::string scenario;
    long scenarios = 1000;
    std::uint64_t seed = 0;
    int bins = 50;
    std::vector<int> sweep_n{20, 50, 100, 150, 200, 300};
    std::string out;

    bool operator==(const RunConfig&) const = default;
};

// Sectioned key = value text. Diagnostics name the line and the field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Inverse of parse_config: parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

TreeModel build_model(const RunConfig& config);
DisutilityProfile build_profile(const RunConfig& config, int horizon);
PaymentStream build_payoff(const PayoffSpec& spec, const TreeModel& model);

}  // namespace ipx
