#include <cmath>
#include <numeric>

#include "catch_amalgamated.hpp"
#include "ipx/errors.hpp"
#include "ipx/market_model.hpp"

using namespace ipx;
using Catch::Approx;

namespace {

LatticeParams small(int T, double k = 0.005) {
    LatticeParams lp;
    lp.T = T;
    lp.steps_per_year = 52;
    lp.cost = k;
    return lp;
}

// Node list for a tree given as (bid, ask, successors, probabilities).
TreeModel explicit_tree(int horizon, std::vector<Node> nodes) { return TreeModel(horizon, std::move(nodes), false); }

}  // namespace

TEST_CASE("Lattice has recombinant levels with spreads around the discounted mid") {
    LatticeParams lp = small(4, 0.01);
    const TreeModel m = build_binomial(lp);
    REQUIRE(m.size() == 15);
    REQUIRE(m.lattice());
    const double h = 0.2 / std::sqrt(52.0);
    for (int t = 0; t <= 4; ++t) {
        REQUIRE(m.level(t).size() == static_cast<std::size_t>(t + 1));
        const double disc = std::pow(1.02, -t / 52.0);
        CHECK(m.discount(t) == Approx(disc).epsilon(1e-14));
        for (int id : m.level(t)) {
            const Node& nd = m.node(id);
            const double mid = 100.0 * std::exp(h * (2 * nd.state - t)) * disc;
            CHECK(nd.ref == Approx(mid).epsilon(1e-13));
            if (t == 0) {
                CHECK(nd.bid == 100.0);
                CHECK(nd.ask == 100.0);
            } else {
                CHECK(nd.ask == Approx(1.01 * mid).epsilon(1e-13));
                CHECK(nd.bid == Approx(0.99 * mid).epsilon(1e-13));
            }
        }
    }
    // Successor 0 is the up move.
    CHECK(m.node(m.node(0).succ[0]).ref > m.node(m.node(0).succ[1]).ref);
}

TEST_CASE("Root spread is charged only when asked for") {
    LatticeParams lp = small(2, 0.01);
    lp.cost_at_root = true;
    const TreeModel m = build_binomial(lp);
    CHECK(m.node(0).ask == Approx(101.0));
    CHECK(m.node(0).bid == Approx(99.0));
}

TEST_CASE("Multiplicities count lattice paths") {
    const TreeModel m = build_binomial(small(5));
    for (int id : m.level(5)) {
        const int j = m.node(id).state;
        double binom = 1.0;
        for (int i = 1; i <= j; ++i) binom = binom * (5 - j + i) / i;
        CHECK(m.multiplicity(id) == Approx(binom));
    }
}

TEST_CASE("Weekly risk-neutral probability of the baseline lattice") {
    LatticeParams lp;  // weekly steps over one year, sigma 0.2, 2% effective rate
    const double q = risk_neutral_up(lp);
    CHECK(q == Approx(0.4999).margin(1e-4));
    const double h = 0.2 / std::sqrt(52.0);
    CHECK(q == Approx((std::pow(1.02, 1.0 / 52) - std::exp(-h)) / (std::exp(h) - std::exp(-h))).epsilon(1e-14));
}

TEST_CASE("Lattice parameters are validated") {
    LatticeParams lp;
    lp.T = 0;
    CHECK_THROWS_AS(build_binomial(lp), InputError);
    lp = LatticeParams{};
    lp.p = 1.0;
    CHECK_THROWS_AS(build_binomial(lp), InputError);
    lp = LatticeParams{};
    lp.cost = -0.1;
    CHECK_THROWS_AS(build_binomial(lp), InputError);
    lp = LatticeParams{};
    lp.S0 = 0.0;
    CHECK_THROWS_AS(build_binomial(lp), InputError);
}

TEST_CASE("Explicit trees reject malformed nodes") {
    auto nodes = [] {
        std::vector<Node> n(3);
        n[0] = {0, 0, 100, 100, 100, {1, 2}, {0.5, 0.5}, {}};
        n[1] = {1, 0, 110, 111, 110.5, {}, {}, {}};
        n[2] = {1, 1, 90, 91, 90.5, {}, {}, {}};
        return n;
    };
    CHECK_NOTHROW(explicit_tree(1, nodes()));

    auto bad = nodes();
    bad[0].prob = {0.5, 0.4};
    CHECK_THROWS_AS(explicit_tree(1, bad), InputError);
    bad = nodes();
    bad[1].bid = 112;
    CHECK_THROWS_AS(explicit_tree(1, bad), InputError);
    bad = nodes();
    bad[0].succ = {1};
    CHECK_THROWS_AS(explicit_tree(1, bad), InputError);
    bad = nodes();
    bad[2].t = 0;
    CHECK_THROWS_AS(explicit_tree(1, bad), InputError);
}

TEST_CASE("Portfolio cost buys at the ask and sells at the bid") {
    Node nd;
    nd.bid = 99.0;
    nd.ask = 101.0;
    CHECK(portfolio_cost(nd, {10.0, 2.0}) == Approx(212.0));
    CHECK(portfolio_cost(nd, {10.0, -2.0}) == Approx(-188.0));
    CHECK(portfolio_cost(nd, {-5.0, 0.0}) == -5.0);
    // Superadditive in the position: round trips lose the spread.
    CHECK(portfolio_cost(nd, {0, 1}) + portfolio_cost(nd, {0, -1}) == Approx(2.0));
}

TEST_CASE("Scenario strings select successors") {
    const TreeModel m = build_binomial(small(3));
    const ScenarioPath p = parse_scenario(m, "udu");
    REQUIRE(p.nodes.size() == 4);
    CHECK(m.node(p.nodes[3]).state == 2);
    CHECK(parse_scenario(m, "u,d,u").nodes == p.nodes);
    CHECK(parse_scenario(m, "010").nodes == p.nodes);
    CHECK(path_probability(m, p) == Approx(0.125));
    CHECK_THROWS_AS(parse_scenario(m, "ud"), InputError);
    CHECK_THROWS_AS(parse_scenario(m, "uxd"), InputError);
    CHECK_THROWS_AS(parse_scenario(m, "u2d"), InputError);
}

TEST_CASE("Path enumeration covers every path once with total mass one") {
    LatticeParams lp = small(6);
    lp.p = 0.3;
    const TreeModel m = build_binomial(lp);
    int count = 0;
    double mass = 0.0, up_moves = 0.0;
    for_each_path(m, [&](const ScenarioPath& path, double prob) {
        ++count;
        mass += prob;
        up_moves += prob * m.node(path.nodes.back()).state;
        CHECK(prob == Approx(path_probability(m, path)));
    });
    CHECK(count == 64);
    CHECK(mass == Approx(1.0).epsilon(1e-14));
    CHECK(up_moves == Approx(6 * 0.3));
}

TEST_CASE("Path-tree expansion preserves prices and probabilities") {
    const TreeModel m = build_binomial(small(4));
    const PathTree pt = expand_to_path_tree(m);
    REQUIRE(pt.tree.size() == 31);
    CHECK_FALSE(pt.tree.lattice());
    for (int id = 0; id < pt.tree.size(); ++id) {
        const Node& a = pt.tree.node(id);
        const Node& b = m.node(pt.origin[id]);
        CHECK(a.t == b.t);
        CHECK(a.bid == b.bid);
        CHECK(a.ask == b.ask);
        if (a.t < 4) {
            REQUIRE(a.prob.size() == 2);
            CHECK(a.prob == b.prob);
            for (std::size_t k = 0; k < 2; ++k) CHECK(pt.origin[a.succ[k]] == b.succ[k]);
        }
    }
    for (int id : pt.tree.level(4)) CHECK(pt.tree.multiplicity(id) == 1.0);
}

TEST_CASE("Robust no-arbitrage witness is a martingale inside the spreads") {
    const TreeModel m = build_binomial(small(6, 0.01));
    const NoArbitrageReport rep = check_robust_no_arbitrage(m);
    REQUIRE(rep.ok);
    for (int id = 0; id < m.size(); ++id) {
        const Node& nd = m.node(id);
        const double s = rep.witness[id];
        if (nd.bid < nd.ask) {
            CHECK(s > nd.bid);
            CHECK(s < nd.ask);
        } else {
            CHECK(s == nd.bid);
        }
        if (nd.succ.empty()) continue;
        double mean = 0.0, total = 0.0;
        for (std::size_t k = 0; k < nd.succ.size(); ++k) {
            CHECK(rep.witness_q[id][k] > 0.0);
            mean += rep.witness_q[id][k] * rep.witness[nd.succ[k]];
            total += rep.witness_q[id][k];
        }
        CHECK(total == Approx(1.0));
        CHECK(mean == Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("Arbitrage is reported with the failing node") {
    std::vector<Node> n(7);
    n[0] = {0, 0, 100, 100, 100, {1, 2}, {0.5, 0.5}, {}};
    n[1] = {1, 0, 110, 111, 110.5, {3, 4}, {0.5, 0.5}, {}};
    n[2] = {1, 1, 90, 91, 90.5, {5, 6}, {0.5, 0.5}, {}};
    n[3] = {2, 0, 120, 121, 120.5, {}, {}, {}};
    n[4] = {2, 1, 112, 113, 112.5, {}, {}, {}};  // both successors of node 1 bid above its ask
    n[5] = {2, 2, 95, 96, 95.5, {}, {}, {}};
    n[6] = {2, 3, 85, 86, 85.5, {}, {}, {}};
    const TreeModel m(2, n, false);
    const NoArbitrageReport rep = check_robust_no_arbitrage(m);
    CHECK_FALSE(rep.ok);
    CHECK(rep.failing_node == 1);
    CHECK(rep.message.find("node 1") != std::string::npos);
}

TEST_CASE("Zero spreads with the frictionless lattice are arbitrage free") {
    const TreeModel m = build_binomial(small(5, 0.0));
    const NoArbitrageReport rep = check_robust_no_arbitrage(m);
    REQUIRE(rep.ok);
    for (int id = 0; id < m.size(); ++id) CHECK(rep.admissible[id].point());
}
