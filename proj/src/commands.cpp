#include "ipx/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ipx/errors.hpp"
#include "ipx/pricing.hpp"
#include "ipx/strategy.hpp"

namespace ipx {

namespace {

std::string g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(std::initializer_list<const char*> header) {
        bool first = true;
        for (const char* h : header) {
            out_ << (first ? "" : ",") << h;
            first = false;
        }
        out_ << "\n";
    }
    Csv& operator<<(double v) { return cell(g6(v)); }
    Csv& operator<<(int v) { return cell(std::to_string(v)); }
    Csv& operator<<(long v) { return cell(std::to_string(v)); }
    Csv& operator<<(const std::string& v) { return cell(v); }
    Csv& operator<<(const char* v) { return cell(v); }
    void end() {
        out_ << "\n";
        fresh_ = true;
    }
    std::string str() const { return out_.str(); }

private:
    Csv& cell(const std::string& s) {
        out_ << (fresh_ ? "" : ",") << s;
        fresh_ = false;
        return *this;
    }
    std::ostringstream out_;
    bool fresh_ = true;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Setup {
    TreeModel model;
    DisutilityProfile profile;
    PaymentStream claim, endowment;
};

Setup setup(const RunConfig& c) {
    Setup s;
    s.model = build_model(c);
    s.profile = build_profile(c, s.model.horizon());
    s.claim = build_payoff(c.claim, s.model);
    s.endowment = build_payoff(c.endowment, s.model);
    return s;
}

// Liability of the agent: the claim sold, net of the endowment held.
PaymentStream liability(const Setup& s) { return s.claim - s.endowment; }

std::string price(const RunConfig& c, std::ostream& log) {
    const Setup s = setup(c);
    if (c.claim.kind == "none") throw InputError("price needs a [claim] section with kind other than none");
    const auto t0 = std::chrono::steady_clock::now();
    IndifferencePricer pricer(s.model, s.endowment, s.profile, c.approx);
    const PriceQuote ask = pricer.ask(s.claim), bid = pricer.bid(s.claim);
    const PriceQuote sa = superhedge_ask(s.model, s.claim), sb = superhedge_bid(s.model, s.claim);
    log << "price: " << g6(seconds_since(t0)) << " s\n";
    Csv csv{"method", "n", "indifference_bid", "indifference_ask", "superhedge_bid", "superhedge_ask"};
    csv << method_name(c.approx.method) << c.approx.n << bid.value << ask.value << sb.value << sa.value;
    csv.end();
    return csv.str();
}

std::string disutility(const RunConfig& c, std::ostream& log) {
    const Setup s = setup(c);
    const auto t0 = std::chrono::steady_clock::now();
    const Disutility d = disutility_value(s.model, liability(s), s.profile, c.approx);
    log << "disutility: " << g6(seconds_since(t0)) << " s\n";
    Csv csv{"method", "n", "K", "lambda", "V"};
    csv << method_name(c.approx.method) << c.approx.n << d.K << d.lambda << d.V;
    csv.end();
    return csv.str();
}

std::string convergence(const RunConfig& c, std::ostream& log) {
    const Setup s = setup(c);
    if (c.claim.kind == "none") throw InputError("convergence needs a [claim] section with kind other than none");
    Csv csv{"method", "n", "bid", "ask"};
    for (Method m : {Method::upper, Method::lower}) {
        for (int n : c.sweep_n) {
            ApproxSettings a = c.approx;
            a.method = m;
            a.n = n;
            const auto t0 = std::chrono::steady_clock::now();
            IndifferencePricer pricer(s.model, s.endowment, s.profile, a);
            const double bid = pricer.bid(s.claim).value, ask = pricer.ask(s.claim).value;
            log << "convergence: " << method_name(m) << " n=" << n << " " << g6(seconds_since(t0)) << " s\n";
            csv << method_name(m) << n << bid << ask;
            csv.end();
        }
    }
    return csv.str();
}

std::string strategy(const RunConfig& c, std::ostream& log) {
    if (c.scenario.empty()) throw InputError("strategy needs a scenario (--scenario or [run] scenario)");
    const Setup s = setup(c);
    const PaymentStream u = liability(s);
    const ScenarioPath path = parse_scenario(s.model, c.scenario);
    const ValueSurface surface = backward_sweep(s.model, -aggregate_claim(s.model, u), s.profile, c.approx);
    const TradePath tp = trade_path(surface, path, u);
    log << "strategy: terminal residual " << g6(tp.terminal_residual) << "\n";
    Csv csv{"t", "node", "bid", "ask", "shadow_price", "injection", "realized_injection", "y_cash", "y_shares", "w_cash",
            "w_shares"};
    for (int t = 0; t <= s.model.horizon(); ++t) {
        const Node& nd = s.model.node(path.nodes[t]);
        csv << t << path.nodes[t] << nd.bid << nd.ask << tp.shadow.s[t] << tp.injection[t] << tp.realized[t]
            << tp.y[t].cash << tp.y[t].shares << tp.w[t].cash << tp.w[t].shares;
        csv.end();
    }
    return csv.str();
}

std::string simulate(const RunConfig& c, std::ostream& log) {
    const Setup s = setup(c);
    const PaymentStream u = liability(s);
    const ValueSurface surface = backward_sweep(s.model, -aggregate_claim(s.model, u), s.profile, c.approx);
    const PnLSummary sum = simulate_pnl(surface, c.scenarios, c.seed, c.bins, c.approx.threads);
    log << "simulate: rng " << sum.rng << " seed " << sum.seed << " scenarios " << sum.scenarios << "\n"
        << "simulate: mean " << g6(sum.mean) << " sd " << g6(sum.stddev) << " se " << g6(sum.std_error)
        << " profit_term " << g6(sum.profit_term) << " mean_disutility " << g6(sum.disutility_mean) << "\n";
    Csv csv{"bin_lo", "bin_hi", "count"};
    for (std::size_t b = 0; b < sum.histogram.counts.size(); ++b) {
        csv << sum.histogram.edges[b] << sum.histogram.edges[b + 1] << sum.histogram.counts[b];
        csv.end();
    }
    return csv.str();
}

std::string check(const RunConfig& c, std::ostream& log) {
    const TreeModel model = build_model(c);
    const NoArbitrageReport rep = check_robust_no_arbitrage(model);
    if (!rep.ok) throw ModelError("no-arbitrage check failed at node " + std::to_string(rep.failing_node) + ": " + rep.message);
    log << "check: robust no-arbitrage holds on " << model.size() << " nodes\n";
    Csv csv{"node", "t", "bid", "ask", "admissible_lo", "admissible_hi", "witness"};
    for (int id = 0; id < model.size(); ++id) {
        const Node& nd = model.node(id);
        csv << id << nd.t << nd.bid << nd.ask << rep.admissible[id].lo << rep.admissible[id].hi << rep.witness[id];
        csv.end();
    }
    return csv.str();
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"price", "disutility", "convergence", "strategy", "simulate", "check"};
    return names;
}

void apply_overrides(RunConfig& c, const std::string& command, const Overrides& o) {
    if (o.method) c.approx.method = *o.method;
    if (o.n) {
        if (*o.n < 1) throw InputError("--n must be positive");
        if (command == "simulate") c.scenarios = *o.n;
        else if (command == "convergence") c.sweep_n = {*o.n};
        else c.approx.n = *o.n;
    }
    if (o.seed) c.seed = *o.seed;
    if (o.scenario) c.scenario = *o.scenario;
    if (o.out) c.out = *o.out;
}

std::string run_report(const std::string& command, const RunConfig& c, std::ostream& log) {
    if (command == "price") return price(c, log);
    if (command == "disutility") return disutility(c, log);
    if (command == "convergence") return convergence(c, log);
    if (command == "strategy") return strategy(c, log);
    if (command == "simulate") return simulate(c, log);
    if (command == "check") return check(c, log);
    throw InputError("unknown command '" + command + "'");
}

void write_report(const std::string& path, const std::string& text) {
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (f) f << text;
        if (f && f.flush()) return;
    }
    std::remove(path.c_str());
    throw InputError("cannot write report to '" + path + "'");
}

int run_command(const std::string& command, const RunConfig& c, std::ostream& out, std::ostream& err) {
    try {
        const std::string report = run_report(command, c, err);
        if (c.out.empty()) out << report;
        else write_report(c.out, report);
        return 0;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const ModelError& e) {
        err << "model inconsistency: " << e.what() << "\n";
        return 3;
    } catch (const std::bad_alloc&) {
        err << "numeric failure: out of memory\n";
        return 2;
    }
}

}  // namespace ipx
