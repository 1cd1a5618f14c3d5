#include "ipx/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ipx/errors.hpp"

namespace ipx {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

// Where a value came from, for diagnostics.
struct Field {
    int line = 0;
    std::string section, key, value;

    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("config line " + std::to_string(line) + ": [" + section + "] " + key + ": " + what);
    }

    double number(const std::string& text) const {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (text.empty() || *end != '\0' || errno == ERANGE) fail("expected a number, got '" + text + "'");
        return v;
    }
    double number() const { return number(value); }

    long long integer(const std::string& text) const {
        errno = 0;
        char* end = nullptr;
        const long long v = std::strtoll(text.c_str(), &end, 10);
        if (text.empty() || *end != '\0' || errno == ERANGE) fail("expected an integer, got '" + text + "'");
        return v;
    }
    int integer() const {
        const long long v = integer(value);
        if (v < -2147483647LL || v > 2147483647LL) fail("integer out of range");
        return static_cast<int>(v);
    }

    std::uint64_t unsigned64() const {
        errno = 0;
        char* end = nullptr;
        if (value.empty() || value[0] == '-') fail("expected an unsigned integer, got '" + value + "'");
        const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
        if (*end != '\0' || errno == ERANGE) fail("expected an unsigned integer, got '" + value + "'");
        return v;
    }

    bool boolean() const {
        if (value == "true" || value == "1" || value == "yes") return true;
        if (value == "false" || value == "0" || value == "no") return false;
        fail("expected true or false, got '" + value + "'");
    }

    std::vector<double> numbers() const {
        std::vector<double> out;
        for (const auto& w : split(value, ',')) out.push_back(number(w));
        if (out.empty()) fail("list must be nonempty");
        return out;
    }

    // "0..52", "0, 13, 26" or a mix of both.
    std::vector<int> int_list() const {
        std::vector<int> out;
        if (trim(value).empty()) return out;
        for (const auto& item : split(value, ',')) {
            const auto dots = item.find("..");
            if (dots == std::string::npos) {
                out.push_back(static_cast<int>(integer(item)));
                continue;
            }
            const long long a = integer(trim(item.substr(0, dots))), b = integer(trim(item.substr(dots + 2)));
            if (b < a) fail("empty range '" + item + "'");
            if (b - a > 10000000) fail("range too long");
            for (long long t = a; t <= b; ++t) out.push_back(static_cast<int>(t));
        }
        return out;
    }
};

using Handler = std::function<void(RunConfig&, const Field&)>;
using Section = std::map<std::string, Handler>;

Delivery parse_delivery(const Field& f) {
    if (f.value == "physical") return Delivery::physical;
    if (f.value == "cash") return Delivery::cash;
    f.fail("expected physical or cash, got '" + f.value + "'");
}

Section payoff_section(PayoffSpec RunConfig::*member) {
    return {
        {"kind", [member](RunConfig& c, const Field& f) {
             if (f.value != "none" && f.value != "call" && f.value != "put" && f.value != "cash")
                 f.fail("expected none, call, put or cash, got '" + f.value + "'");
             (c.*member).kind = f.value;
         }},
        {"strike", [member](RunConfig& c, const Field& f) { (c.*member).strike = f.number(); }},
        {"delivery", [member](RunConfig& c, const Field& f) { (c.*member).delivery = parse_delivery(f); }},
        {"expiry", [member](RunConfig& c, const Field& f) { (c.*member).expiry = f.integer(); }},
        {"date", [member](RunConfig& c, const Field& f) { (c.*member).date = f.integer(); }},
        {"amount", [member](RunConfig& c, const Field& f) { (c.*member).amount = f.number(); }},
    };
}

TreeNodeSpec parse_node(const Field& f) {
    const auto w = words(f.value);
    if (w.size() < 3) f.fail("expected '<id> <bid> <ask> [succ:prob ...]'");
    TreeNodeSpec n;
    n.id = static_cast<int>(f.integer(w[0]));
    n.bid = f.number(w[1]);
    n.ask = f.number(w[2]);
    for (std::size_t i = 3; i < w.size(); ++i) {
        const auto colon = w[i].find(':');
        if (colon == std::string::npos) f.fail("successor '" + w[i] + "' must look like id:prob");
        n.succ.push_back(static_cast<int>(f.integer(w[i].substr(0, colon))));
        n.prob.push_back(f.number(w[i].substr(colon + 1)));
    }
    return n;
}

const std::map<std::string, Section>& grammar() {
    static const std::map<std::string, Section> g = {
        {"model",
         {
             {"type", [](RunConfig& c, const Field& f) {
                  if (f.value != "lattice" && f.value != "tree") f.fail("expected lattice or tree, got '" + f.value + "'");
                  c.model_type = f.value;
              }},
             {"steps", [](RunConfig& c, const Field& f) { c.lattice.T = f.integer(); }},
             {"s0", [](RunConfig& c, const Field& f) { c.lattice.S0 = f.number(); }},
             {"sigma", [](RunConfig& c, const Field& f) { c.lattice.sigma = f.number(); }},
             {"rate", [](RunConfig& c, const Field& f) { c.lattice.rate = f.number(); }},
             {"cost", [](RunConfig& c, const Field& f) { c.lattice.cost = f.number(); }},
             {"prob_up", [](RunConfig& c, const Field& f) { c.lattice.p = f.number(); }},
             {"steps_per_year", [](RunConfig& c, const Field& f) { c.lattice.steps_per_year = f.integer(); }},
             {"cost_at_root", [](RunConfig& c, const Field& f) { c.lattice.cost_at_root = f.boolean(); }},
         }},
        {"tree", {{"node", [](RunConfig& c, const Field& f) { c.tree.push_back(parse_node(f)); }}}},
        {"disutility",
         {
             {"dates", [](RunConfig& c, const Field& f) { c.dates = f.int_list(); }},
             {"alpha", [](RunConfig& c, const Field& f) { c.alphas = f.numbers(); }},
         }},
        {"claim", payoff_section(&RunConfig::claim)},
        {"endowment", payoff_section(&RunConfig::endowment)},
        {"approx",
         {
             {"method", [](RunConfig& c, const Field& f) {
                  try {
                      c.approx.method = parse_method(f.value);
                  } catch (const InputError&) {
                      f.fail("expected upper or lower, got '" + f.value + "'");
                  }
              }},
             {"n", [](RunConfig& c, const Field& f) { c.approx.n = f.integer(); }},
             {"dual_tol", [](RunConfig& c, const Field& f) { c.approx.dual_tol = f.number(); }},
             {"max_iters", [](RunConfig& c, const Field& f) { c.approx.max_iters = f.integer(); }},
             {"threads", [](RunConfig& c, const Field& f) { c.approx.threads = f.integer(); }},
         }},
        {"run",
         {
             {"scenario", [](RunConfig& c, const Field& f) { c.scenario = f.value; }},
             {"scenarios", [](RunConfig& c, const Field& f) {
                  c.scenarios = static_cast<long>(f.integer(f.value));
              }},
             {"seed", [](RunConfig& c, const Field& f) { c.seed = f.unsigned64(); }},
             {"bins", [](RunConfig& c, const Field& f) { c.bins = f.integer(); }},
             {"sweep_n", [](RunConfig& c, const Field& f) {
                  c.sweep_n = f.int_list();
                  if (c.sweep_n.empty()) f.fail("sweep list must be nonempty");
              }},
             {"out", [](RunConfig& c, const Field& f) { c.out = f.value; }},
         }},
    };
    return g;
}

void validate(const RunConfig& c, const std::map<std::string, int>& section_line) {
    auto at = [&](const std::string& s) {
        auto it = section_line.find(s);
        return it == section_line.end() ? std::string("config") : "config line " + std::to_string(it->second);
    };
    if (!section_line.count("model")) throw InputError("config: missing [model] section");
    if (!section_line.count("disutility")) throw InputError("config: missing [disutility] section");
    if (c.dates.empty()) throw InputError(at("disutility") + ": [disutility] dates: injection set must be nonempty");
    if (c.alphas.empty()) throw InputError(at("disutility") + ": [disutility] alpha: missing");
    if (c.alphas.size() != 1 && c.alphas.size() != c.dates.size())
        throw InputError(at("disutility") + ": [disutility] alpha: give one value or one per date");
    if (c.model_type == "tree" && c.tree.empty()) throw InputError("config: model type tree needs a [tree] section with nodes");
    if (c.model_type == "lattice") {
        try {
            c.lattice.validate();
        } catch (const InputError& e) {
            throw InputError(at("model") + ": [model] " + e.what());
        }
    }
    try {
        c.approx.validate();
    } catch (const InputError& e) {
        throw InputError(at("approx") + ": [approx] " + e.what());
    }
    if (c.sweep_n.empty()) throw InputError(at("run") + ": [run] sweep_n: sweep list must be nonempty");
    for (int n : c.sweep_n)
        if (n < 1) throw InputError(at("run") + ": [run] sweep_n: entries must be positive");
    if (c.scenarios < 1) throw InputError(at("run") + ": [run] scenarios: must be positive");
    if (c.bins < 1) throw InputError(at("run") + ": [run] bins: must be positive");
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s;
}

void render_payoff(std::ostream& out, const char* name, const PayoffSpec& p) {
    out << "\n[" << name << "]\n"
        << "kind = " << p.kind << "\n"
        << "strike = " << num(p.strike) << "\n"
        << "delivery = " << (p.delivery == Delivery::physical ? "physical" : "cash") << "\n"
        << "expiry = " << p.expiry << "\n"
        << "date = " << p.date << "\n"
        << "amount = " << num(p.amount) << "\n";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::map<std::string, int> section_line;
    std::set<std::pair<std::string, std::string>> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    for (int line = 1; std::getline(in, raw); ++line) {
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw InputError("config line " + std::to_string(line) + ": unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!grammar().count(section))
                throw InputError("config line " + std::to_string(line) + ": unknown section [" + section + "]");
            if (section_line.count(section))
                throw InputError("config line " + std::to_string(line) + ": section [" + section + "] repeated");
            section_line[section] = line;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(line) + ": expected key = value");
        if (section.empty())
            throw InputError("config line " + std::to_string(line) + ": key outside any section");
        Field f{line, section, trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
        const auto& keys = grammar().at(section);
        const auto h = keys.find(f.key);
        if (h == keys.end()) f.fail("unknown key");
        if (f.key != "node" && !seen.insert({section, f.key}).second) f.fail("key given twice");
        h->second(c, f);
    }
    validate(c, section_line);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string render_config(const RunConfig& c) {
    std::ostringstream out;
    const LatticeParams& l = c.lattice;
    out << "[model]\n"
        << "type = " << c.model_type << "\n"
        << "steps = " << l.T << "\n"
        << "s0 = " << num(l.S0) << "\n"
        << "sigma = " << num(l.sigma) << "\n"
        << "rate = " << num(l.rate) << "\n"
        << "cost = " << num(l.cost) << "\n"
        << "prob_up = " << num(l.p) << "\n"
        << "steps_per_year = " << l.steps_per_year << "\n"
        << "cost_at_root = " << (l.cost_at_root ? "true" : "false") << "\n";
    if (!c.tree.empty()) {
        out << "\n[tree]\n";
        for (const auto& n : c.tree) {
            out << "node = " << n.id << " " << num(n.bid) << " " << num(n.ask);
            for (std::size_t k = 0; k < n.succ.size(); ++k) out << " " << n.succ[k] << ":" << num(n.prob[k]);
            out << "\n";
        }
    }
    out << "\n[disutility]\n"
        << "dates = " << join_ints(c.dates) << "\n"
        << "alpha = ";
    for (std::size_t i = 0; i < c.alphas.size(); ++i) out << (i ? ", " : "") << num(c.alphas[i]);
    out << "\n";
    render_payoff(out, "claim", c.claim);
    render_payoff(out, "endowment", c.endowment);
    out << "\n[approx]\n"
        << "method = " << method_name(c.approx.method) << "\n"
        << "n = " << c.approx.n << "\n"
        << "dual_tol = " << num(c.approx.dual_tol) << "\n"
        << "max_iters = " << c.approx.max_iters << "\n"
        << "threads = " << c.approx.threads << "\n";
    out << "\n[run]\n";
    if (!c.scenario.empty()) out << "scenario = " << c.scenario << "\n";
    out << "scenarios = " << c.scenarios << "\n"
        << "seed = " << c.seed << "\n"
        << "bins = " << c.bins << "\n"
        << "sweep_n = " << join_ints(c.sweep_n) << "\n";
    if (!c.out.empty()) out << "out = " << c.out << "\n";
    return out.str();
}

TreeModel build_model(const RunConfig& c) {
    if (c.model_type == "lattice") return build_binomial(c.lattice);
    const int n = static_cast<int>(c.tree.size());
    std::vector<Node> nodes(n);
    for (int i = 0; i < n; ++i) {
        const auto& s = c.tree[i];
        if (s.id != i) throw InputError("tree nodes must be listed in id order 0, 1, 2, ...; found id " + std::to_string(s.id) +
                                        " at position " + std::to_string(i));
        nodes[i].bid = s.bid;
        nodes[i].ask = s.ask;
        nodes[i].ref = 0.5 * (s.bid + s.ask);
        nodes[i].succ = s.succ;
        nodes[i].prob = s.prob;
    }
    // Dates follow from the successor links.
    std::vector<int> t(n, -1), parents(n, 0);
    t[0] = 0;
    for (int i = 0; i < n; ++i) {
        if (t[i] < 0) throw InputError("tree node " + std::to_string(i) + " is not reached from earlier nodes");
        for (int s : nodes[i].succ) {
            if (s <= i || s >= n) throw InputError("tree node " + std::to_string(i) + ": successor ids must be larger and exist");
            if (t[s] >= 0 && t[s] != t[i] + 1) throw InputError("tree node " + std::to_string(s) + " reached at two different dates");
            t[s] = t[i] + 1;
            ++parents[s];
        }
    }
    int horizon = 0;
    for (int i = 0; i < n; ++i) {
        nodes[i].t = t[i];
        horizon = std::max(horizon, t[i]);
    }
    std::vector<int> count(horizon + 1, 0);
    for (int i = 0; i < n; ++i) nodes[i].state = count[t[i]]++;
    const bool lattice = std::any_of(parents.begin(), parents.end(), [](int p) { return p > 1; });
    return TreeModel(horizon, std::move(nodes), lattice);
}

DisutilityProfile build_profile(const RunConfig& c, int horizon) { return DisutilityProfile(horizon, c.dates, c.alphas); }

PaymentStream build_payoff(const PayoffSpec& p, const TreeModel& model) {
    if (p.kind == "none") return {};
    if (p.kind == "call") return call_option(model, p.strike, p.delivery, p.expiry);
    if (p.kind == "put") return put_option(model, p.strike, p.delivery, p.expiry);
    if (p.kind == "cash") return cash_at(model, p.date, p.amount);
    throw InputError("unknown payoff kind '" + p.kind + "'");
}

}  // namespace ipx
