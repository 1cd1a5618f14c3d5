#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "catch_amalgamated.hpp"
#include "ipx/commands.hpp"
#include "ipx/config.hpp"
#include "ipx/errors.hpp"

using namespace ipx;
using Catch::Matchers::ContainsSubstring;

namespace fs = std::filesystem;

namespace {

const char* kBaseline = R"(# weekly lattice, one year
[model]
type = lattice
steps = 52
s0 = 100
sigma = 0.2
rate = 0.02
cost = 0.005
prob_up = 0.5

[disutility]
dates = 0..52
alpha = 0.1

[claim]
kind = call
strike = 100
delivery = physical
)";

const char* kSmall = R"([model]
steps = 6
steps_per_year = 52
cost = 0.005

[disutility]
dates = 0..6
alpha = 0.1

[claim]
kind = call
strike = 100

[approx]
n = 40

[run]
seed = 7
bins = 10
sweep_n = 10, 20
)";

const char* kArbitrage = R"([model]
type = tree

[tree]
node = 0 100 100 1:0.5 2:0.5
node = 1 101 102
node = 2 100.5 101

[disutility]
dates = 0, 1
alpha = 1
)";

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ipx_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const {
        const fs::path p = path / name;
        std::ofstream(p) << text;
        return p.string();
    }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(IPX_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
    text.replace(text.find(from), from.size(), to);
    return text;
}

}  // namespace

TEST_CASE("Baseline config parses to the weekly one-year setting") {
    const RunConfig c = parse_config(kBaseline);
    CHECK(c.model_type == "lattice");
    CHECK(c.lattice.T == 52);
    CHECK(c.lattice.cost == 0.005);
    CHECK(c.alphas == std::vector<double>{0.1});
    REQUIRE(c.dates.size() == 53);
    CHECK(c.dates.front() == 0);
    CHECK(c.dates.back() == 52);
    CHECK(c.claim.kind == "call");
    CHECK(c.claim.delivery == Delivery::physical);
    CHECK(c.approx.method == Method::upper);
    CHECK(c.sweep_n == std::vector<int>{20, 50, 100, 150, 200, 300});
    const TreeModel m = build_model(c);
    CHECK(m.horizon() == 52);
    CHECK(build_profile(c, 52).a(0) == Catch::Approx(530.0));
}

TEST_CASE("Config diagnostics name the line and the field") {
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "dates = 0..52", "dates =")),
                      ContainsSubstring("injection set must be nonempty"));
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "sigma = 0.2", "sigma = 0.2x")),
                      ContainsSubstring("line 6") && ContainsSubstring("sigma") && ContainsSubstring("0.2x"));
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "steps = 52", "steps = 5.5")),
                      ContainsSubstring("steps") && ContainsSubstring("integer"));
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "rate = 0.02", "rates = 0.02")),
                      ContainsSubstring("unknown key") && ContainsSubstring("rates"));
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "[claim]", "[claims]")), ContainsSubstring("unknown section"));
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "cost = 0.005", "cost = 0.005\ncost = 0.01")),
                      ContainsSubstring("given twice"));
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "kind = call", "kind = swap")), ContainsSubstring("kind"));
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "prob_up = 0.5", "prob_up = 1.5")), ContainsSubstring("prob_up"));
    CHECK_THROWS_WITH(parse_config(replace(kBaseline, "alpha = 0.1", "alpha = 0.1, 0.2")), ContainsSubstring("alpha"));
    CHECK_THROWS_WITH(parse_config(std::string(kBaseline) + "[run]\nsweep_n =\n"), ContainsSubstring("nonempty"));
    CHECK_THROWS_WITH(parse_config("[disutility]\ndates = 0\nalpha = 1\n"), ContainsSubstring("[model]"));
    CHECK_THROWS_WITH(parse_config("[model]\nsteps 5\n"), ContainsSubstring("line 2"));
    CHECK_THROWS_AS(load_config("/nonexistent/ipx.ini"), InputError);
}

TEST_CASE("Rendered configs parse back to the same value") {
    CHECK(parse_config(render_config(parse_config(kBaseline))) == parse_config(kBaseline));
    CHECK(parse_config(render_config(parse_config(kArbitrage))) == parse_config(kArbitrage));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        RunConfig c = parse_config(kSmall);
        c.lattice.T = 1 + static_cast<int>(30 * U(rng));
        c.lattice.sigma = U(rng);
        c.lattice.rate = 0.1 * U(rng) - 0.02;
        c.lattice.cost = 0.02 * U(rng);
        c.lattice.p = 0.01 + 0.98 * U(rng);
        c.lattice.cost_at_root = U(rng) < 0.5;
        c.dates = {0, c.lattice.T};
        c.alphas = {U(rng), 1.0 / 3.0 + U(rng)};
        c.claim = {U(rng) < 0.5 ? "put" : "cash", 80.0 + 40.0 * U(rng), U(rng) < 0.5 ? Delivery::cash : Delivery::physical,
                   -1, 1, U(rng) - 0.5};
        c.endowment.kind = "call";
        c.endowment.strike = 100.0 * U(rng) + 1.0;
        c.approx.method = U(rng) < 0.5 ? Method::lower : Method::upper;
        c.approx.n = 1 + static_cast<int>(500 * U(rng));
        c.approx.dual_tol = 1e-14 + 1e-10 * U(rng);
        c.seed = rng();
        c.scenarios = 1 + static_cast<long>(1e6 * U(rng));
        c.scenario = "udu";
        c.sweep_n = {3, 1 + static_cast<int>(100 * U(rng))};
        c.out = "report.csv";
        CHECK(parse_config(render_config(c)) == c);
    }
}

TEST_CASE("Explicit trees take their dates from the successor links") {
    const RunConfig c = parse_config(kArbitrage);
    const TreeModel m = build_model(c);
    CHECK(m.horizon() == 1);
    CHECK(m.node(2).t == 1);
    CHECK_FALSE(m.lattice());
    RunConfig bad = c;
    bad.tree[1].id = 2;
    CHECK_THROWS_AS(build_model(bad), InputError);
}

TEST_CASE("Overrides take precedence over the config") {
    RunConfig c = parse_config(kSmall);
    Overrides o;
    o.n = 77;
    o.method = Method::lower;
    o.seed = 9;
    apply_overrides(c, "price", o);
    CHECK(c.approx.n == 77);
    CHECK(c.approx.method == Method::lower);
    CHECK(c.seed == 9);
    apply_overrides(c, "simulate", o);
    CHECK(c.scenarios == 77);
    apply_overrides(c, "convergence", o);
    CHECK(c.sweep_n == std::vector<int>{77});
    o.n = 0;
    CHECK_THROWS_AS(apply_overrides(c, "price", o), InputError);
}

TEST_CASE("Reports are CSV with a header and six significant digits") {
    const RunConfig c = parse_config(kSmall);
    std::ostringstream log;
    const std::string price = run_report("price", c, log);
    CHECK(price.rfind("method,n,indifference_bid,indifference_ask,superhedge_bid,superhedge_ask\nupper,40,", 0) == 0);
    const std::string row = price.substr(price.find('\n') + 1);
    std::stringstream cells(row);
    std::string cell;
    int count = 0;
    while (std::getline(cells, cell, ',')) {
        ++count;
        if (count <= 2) continue;
        const auto digits = std::count_if(cell.begin(), cell.end(), [](char ch) { return std::isdigit(ch); });
        CHECK(digits <= 6);
    }
    CHECK(count == 6);

    const std::string conv = run_report("convergence", c, log);
    CHECK(std::count(conv.begin(), conv.end(), '\n') == 5);
    CHECK(conv.find("lower,20,") != std::string::npos);

    RunConfig sc = c;
    sc.scenario = "uuddud";
    const std::string strat = run_report("strategy", sc, log);
    CHECK(std::count(strat.begin(), strat.end(), '\n') == 8);
    CHECK_THROWS_AS(run_report("strategy", c, log), InputError);
    CHECK_THROWS_AS(run_report("fly", c, log), InputError);
}

TEST_CASE("Command errors map to exit codes") {
    std::ostringstream out, err;
    CHECK(run_command("check", parse_config(kArbitrage), out, err) == 3);
    CHECK_THAT(err.str(), ContainsSubstring("node 0"));
    err.str("");
    RunConfig c = parse_config(kSmall);
    c.scenario = "uu";
    CHECK(run_command("strategy", c, out, err) == 1);
    CHECK(run_command("price", parse_config(kSmall), out, err) == 0);
}

TEST_CASE("Unwritable report paths leave no file behind") {
    TempDir dir;
    const std::string target = (dir.path / "missing" / "r.csv").string();
    CHECK_THROWS_AS(write_report(target, "a,b\n"), InputError);
    CHECK_FALSE(fs::exists(target));
    RunConfig c = parse_config(kSmall);
    c.out = (dir.path / "p.csv").string();
    c.scenario = "u";  // wrong length
    std::ostringstream out, err;
    CHECK(run_command("strategy", c, out, err) == 1);
    CHECK_FALSE(fs::exists(c.out));
}

TEST_CASE("Command-line tool runs end to end") {
    TempDir dir;
    const std::string cfg = dir.write("small.ini", kSmall);
    const std::string a = (dir.path / "a.csv").string(), b = (dir.path / "b.csv").string();
    CHECK(run_cli("simulate --config " + cfg + " --seed 7 --n 1000 --out " + a) == 0);
    CHECK(run_cli("simulate --config " + cfg + " --seed 7 --n 1000 --out " + b) == 0);
    const std::string ha = slurp(a);
    CHECK(ha.rfind("bin_lo,bin_hi,count\n", 0) == 0);
    CHECK(ha == slurp(b));

    CHECK(run_cli("price --config " + cfg + " --method lower --n 30 --out " + a) == 0);
    CHECK(slurp(a).find("lower,30,") != std::string::npos);
    CHECK(run_cli("strategy --config " + cfg + " --scenario ududud --out " + a) == 0);

    CHECK(run_cli("check --config " + dir.write("arb.ini", kArbitrage)) == 3);
    CHECK(run_cli("price --config " + dir.write("bad.ini", replace(kSmall, "n = 40", "n = forty"))) == 1);
    CHECK(run_cli("price --config " + cfg + " --method middle") == 1);
    CHECK(run_cli("launch --config " + cfg) == 1);
    CHECK(run_cli("price") == 1);
}
