#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "cfet/harness/commands.hpp"
#include "cfet/harness/selftest.hpp"

using namespace cfet;
using namespace cfet::harness;
namespace fs = std::filesystem;

namespace
{

const char* kSpin = R"(
[model]
kind = spin
j = 0.5
delta = 1
V = 1
omega = 1

[initial]
state = up

[run]
scheme = cfet4-opt
engine = chebyshev-hermitian
tolerance = 1e-14
dt = 0.05
t_end = 2
stride = 5
observables = jz, iz, jx
)";

// small, strongly damped Rabi case: quick to settle
const char* kSmallDicke = R"(
[model]
kind = dicke
j = 0.5
n_max = 3
delta = 1
Omega = 1
lambda0 = 0.02
dlambda = 0.0005
omega_p = 2.0489897948556637
kappa = 0.05

[run]
scheme = cfet4-opt
)";

std::string with(const std::string& base, const std::string& extra) { return base + "\n" + extra; }

std::string run_to_string(int (*cmd)(const RunConfig&, std::ostream&, const CommandOptions&), const RunConfig& c,
                          CommandOptions o = {})
{
    std::ostringstream log, out;
    o.log = &log;
    EXPECT_EQ(cmd(c, out, o), kExitOk) << log.str();
    return out.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ','))
            cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(CFET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path temp_file(const std::string& name, const std::string& text = {})
{
    const fs::path p = fs::temp_directory_path() / ("cfet_test_" + std::to_string(::getpid()) + "_" + name);
    if (!text.empty()) {
        std::ofstream f(p);
        f << text;
    }
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

} // namespace

// --- configuration ------------------------------------------------------------

TEST(Config, ParsesSpinModel)
{
    const auto c = parse_config_text(kSpin);
    EXPECT_EQ(c.model.kind, ModelKind::Spin);
    EXPECT_EQ(c.model.initial, "up");
    EXPECT_EQ(*c.run.scheme, SchemeKind::Cfet4Opt);
    EXPECT_EQ(c.run.engine, EngineKind::ChebyshevHermitian);
    EXPECT_DOUBLE_EQ(*c.run.dt, 0.05);
    EXPECT_EQ(c.run.stride, 5u);
    EXPECT_EQ(c.run.observables, (std::vector<std::string>{"jz", "iz", "jx"}));
}

TEST(Config, EverySampleLoads)
{
    int n = 0;
    for (const auto& e : fs::directory_iterator(CFET_SAMPLES_DIR)) {
        if (e.path().extension() != ".ini")
            continue;
        EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
        ++n;
    }
    EXPECT_GE(n, 5);
}

TEST(Config, RejectsUnknownKeysAndSections)
{
    EXPECT_THROW(parse_config_text(with(kSpin, "[run2]\nx = 1")), ConfigError);
    auto bad = std::string(kSpin);
    bad.replace(bad.find("omega = 1"), 9, "omega = 1\nomgea = 2");
    try {
        parse_config_text(bad);
        FAIL() << "unknown key accepted";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("omgea"), std::string::npos) << e.what();
    }
    // gamma only exists for the dissipative spin
    bad = std::string(kSpin);
    bad.replace(bad.find("omega = 1"), 9, "omega = 1\ngamma = 0.1");
    EXPECT_THROW(parse_config_text(bad), ConfigError);
}

TEST(Config, RejectsMissingRequiredKeys)
{
    auto bad = std::string(kSpin);
    bad.erase(bad.find("V = 1"), 5);
    EXPECT_THROW(parse_config_text(bad), ConfigError);
    EXPECT_THROW(parse_config_text("[run]\ndt = 1\n"), ConfigError);
    std::string dicke = kSmallDicke;
    dicke.erase(dicke.find("n_max = 3"), 9);
    EXPECT_THROW(parse_config_text(dicke), ConfigError);
}

TEST(Config, RejectsMalformedValues)
{
    const std::string base = "[model]\nkind = spin\nj = 0.5\ndelta = 1\nV = 1\nomega = 1\n";
    EXPECT_THROW(parse_config_text(base + "[run]\ndt = 0.1x\n"), ConfigError);
    EXPECT_THROW(parse_config_text(base + "[run]\ndt = -0.1\n"), ConfigError);
    EXPECT_THROW(parse_config_text(base + "[run]\nscheme = rk5\n"), ConfigError);
    EXPECT_THROW(parse_config_text(base + "[run]\nengine = krylov\n"), ConfigError);
    EXPECT_THROW(parse_config_text(base + "[run]\nstride = 0\n"), ConfigError);
    EXPECT_THROW(parse_config_text(base + "[run]\ndeterministic = maybe\n"), ConfigError);
    EXPECT_THROW(parse_config_text(base + "[run]\nobservables = nb\n"), ConfigError);
    EXPECT_THROW(parse_config_text(base + "[initial]\nstate = ground\n"), ConfigError);
    EXPECT_THROW(parse_config_text(base + "[run]\nt_start = 2\nt_end = 1\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[model]\nkind = spin\nj = 0.3\ndelta = 1\nV = 1\nomega = 1\n"), ConfigError);
}

TEST(Config, RejectsDuplicatesAndStrayKeys)
{
    EXPECT_THROW(parse_config_text(with(kSpin, "[run]\ndt = 0.1\n")), ConfigError);
    EXPECT_THROW(parse_config_text(std::string("dt = 0.1\n") + kSpin), ConfigError);
    auto bad = std::string(kSpin);
    bad.replace(bad.find("V = 1"), 5, "V = 1\nV = 2");
    EXPECT_THROW(parse_config_text(bad), ConfigError);
}

TEST(Config, SweepGrid)
{
    const auto c = parse_config_text(with(kSmallDicke, "[sweep]\nparameter = omega_p\nstart = 1\nstop = 2\ncount = 5\n"));
    ASSERT_TRUE(c.sweep);
    EXPECT_EQ(c.sweep->values, (std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0}));
    EXPECT_THROW(parse_config_text(with(kSmallDicke, "[sweep]\nparameter = omega_p\nvalues = 1\nstart = 1\n")),
                 ConfigError);
    EXPECT_THROW(parse_config_text(with(kSmallDicke, "[sweep]\nparameter = kappa\nvalues = 1\n")), ConfigError);
    EXPECT_THROW(parse_config_text(with(kSpin, "[sweep]\nparameter = omega_p\nvalues = 1\n")), ConfigError);
}

TEST(Config, BenchStepLists)
{
    const auto c = parse_config_text(
        with(kSpin, "[bench]\nschemes = rk4, cfet4-opt\ndts = 0.1, 0.05\ndts_rk4 = 0.02, 0.01\n"));
    ASSERT_TRUE(c.bench);
    EXPECT_EQ(c.bench->steps(SchemeKind::Rk4), (std::vector<double>{0.02, 0.01}));
    EXPECT_EQ(c.bench->steps(SchemeKind::Cfet4Opt), (std::vector<double>{0.1, 0.05}));
    EXPECT_DOUBLE_EQ(c.bench->smallest_step(), 0.01);
    EXPECT_FALSE(c.bench->reference_dt);
    const auto r = parse_config_text(with(kSpin, "[bench]\nschemes = rk4\ndts = 0.1\nreference_dt = 0.004\n"));
    EXPECT_DOUBLE_EQ(r.bench->reference_dt.value(), 0.004);
    EXPECT_THROW(parse_config_text(with(kSpin, "[bench]\nschemes = rk4\ndts = 0.1\nreference_dt = 0\n")),
                 ConfigError);
    EXPECT_THROW(parse_config_text(with(kSpin, "[bench]\nschemes = rk4\n")), ConfigError);
    EXPECT_THROW(parse_config_text(with(kSpin, "[bench]\nschemes = rk4\ndts = 0.1\ndts_middle = 0.1\n")),
                 ConfigError);
}

// --- CSV --------------------------------------------------------------------------

TEST(Csv, SeventeenDigitsAndSpelledOutSpecials)
{
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(format_double(std::nan("")), "nan");
    EXPECT_EQ(format_double(-INFINITY), "-inf");
    EXPECT_EQ(std::stod(format_double(M_PI)), M_PI);
}

TEST(Csv, HeaderRowsAndQuoting)
{
    std::ostringstream s;
    CsvWriter w(s, {"a", "b", "c"});
    w.row({1.5, 7LL, std::string("x,y")});
    w.row({std::nan(""), -2LL, std::string("say \"hi\"")});
    EXPECT_EQ(s.str(), "a,b,c\n1.5,7,\"x,y\"\nnan,-2,\"say \"\"hi\"\"\"\n");
    EXPECT_THROW(w.row({1.0}), std::logic_error);
}

// --- propagate --------------------------------------------------------------------

TEST(Propagate, ZeroLengthRunWritesHeaderOnly)
{
    auto c = parse_config_text(kSpin);
    c.run.t_end = c.run.t_start;
    EXPECT_EQ(run_to_string(cmd_propagate, c), "t,jz,iz,jx,trace_defect,hermiticity_defect\n");
}

TEST(Propagate, SpinTrajectoryMatchesRotatingFrameSolution)
{
    const auto c = parse_config_text(kSpin);
    const auto rows = parse_csv(run_to_string(cmd_propagate, c));
    ASSERT_EQ(rows.size(), 1u + 1u + 40u / 5u); // header, t = 0, every fifth of 40 steps
    Vector psi0 = Vector::Zero(2);
    psi0(0) = 1.0;
    const auto s = spin_operators(0.5);
    double prev = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double t = std::stod(rows[i][0]);
        EXPECT_GT(t, prev);
        prev = t;
        const Vector ex = spin_exact_state(c.model.spin, psi0, t);
        const double jz = (ex.adjoint() * s.jz * ex)(0).real();
        const double jx = (ex.adjoint() * s.jx * ex)(0).real();
        EXPECT_NEAR(std::stod(rows[i][1]), jz, 1e-8) << t;
        EXPECT_NEAR(std::stod(rows[i][2]), 0.5 + jz, 1e-8) << t;
        EXPECT_NEAR(std::stod(rows[i][3]), jx, 1e-8) << t;
        EXPECT_LT(std::stod(rows[i][4]), 1e-12);
    }
    EXPECT_DOUBLE_EQ(std::stod(rows.back()[0]), 2.0);
}

TEST(Propagate, DissipativeSpinKeepsTraceAndHermiticity)
{
    const auto c = parse_config_text(
        "[model]\nkind = dissipative-spin\nj = 1\ndelta = 1\nV = 0.5\nomega = 0.8\ngamma = 0.1\n"
        "[run]\nscheme = cfet4-opt\ndt = 0.05\nt_end = 5\nobservables = jz, omega_drive\n");
    const auto rows = parse_csv(run_to_string(cmd_propagate, c));
    ASSERT_EQ(rows.size(), 102u);
    EXPECT_EQ(rows[1][1], "-1"); // default initial state m = -j
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][2], "0.80000000000000004");
        EXPECT_LT(std::stod(rows[i][3]), 1e-12);
        EXPECT_LT(std::stod(rows[i][4]), 1e-12);
    }
}

TEST(Propagate, RequiresSchemeStepAndEnd)
{
    auto c = parse_config_text(kSpin);
    c.run.dt.reset();
    std::ostringstream out;
    EXPECT_THROW(cmd_propagate(c, out), ConfigError);
}

TEST(Propagate, DeterministicOutputIsByteIdentical)
{
    const auto c = parse_config_text(with(kSmallDicke, "[ramp]\nw0 = 1.9\nw1 = 2.1\nduration = 20\n"
                                                       "\n[initial]\nstate = ground\n"));
    auto d = c;
    d.run.dt = 0.1;
    d.run.t_end = 20.0;
    d.run.observables = {"iz", "nb", "omega_drive"};
    EXPECT_EQ(run_to_string(cmd_propagate, d), run_to_string(cmd_propagate, d));
}

// --- bench ------------------------------------------------------------------------

TEST(Bench, RecordsErrorAndEffortAgainstConvergedReference)
{
    const auto c = parse_config_text(
        with(kSpin, "[bench]\nschemes = cfet4-opt, rk4, middle\ndts = 0.2, 0.1, 0.05\n"));
    std::ostringstream log;
    CommandOptions o;
    o.log = &log;
    const auto res = run_bench(c, o);
    EXPECT_LT(res.reference.self_consistency, 1e-12);
    EXPECT_EQ(res.reference.engine, EngineKind::DenseOracle);
    ASSERT_EQ(res.records.size(), 9u);
    for (const auto& r : res.records) {
        EXPECT_GT(r.n_h, 0u);
        EXPECT_GE(r.epsilon, 0.0);
        EXPECT_TRUE(r.failure.empty());
    }
    // error ratios under halving: 16 for the fourth-order schemes, 4 for the middle point
    EXPECT_NEAR(std::log2(res.records[1].epsilon / res.records[2].epsilon), 4.0, 0.3);
    EXPECT_NEAR(std::log2(res.records[4].epsilon / res.records[5].epsilon), 4.0, 0.3);
    EXPECT_NEAR(std::log2(res.records[7].epsilon / res.records[8].epsilon), 2.0, 0.2);
    // rk4 makes exactly four products per step
    EXPECT_EQ(res.records[3].n_h, 4u * 10u);
    // against the exact solution
    Vector psi0 = Vector::Zero(2);
    psi0(0) = 1.0;
    EXPECT_LT(error_max(res.reference.state, spin_exact_state(c.model.spin, psi0, 2.0)), 1e-12);
}

TEST(Bench, DeterministicModeBlanksWallTime)
{
    auto c = parse_config_text(with(kSpin, "[bench]\nschemes = rk4\ndts = 0.1\n"));
    CommandOptions o;
    o.deterministic = true;
    const auto text = run_to_string(cmd_bench, c, o);
    EXPECT_EQ(text, run_to_string(cmd_bench, c, o));
    const auto rows = parse_csv(text);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"scheme", "dt", "N_H", "epsilon", "wall_seconds"}));
    EXPECT_EQ(rows[1][0], "rk4");
    EXPECT_EQ(rows[1][2], "80");
    EXPECT_EQ(rows[1][4], "nan");
}

TEST(Bench, RejectsDenseEngine)
{
    auto c = parse_config_text(with(kSpin, "[bench]\nschemes = rk4\ndts = 0.1\n"));
    c.run.engine = EngineKind::DenseOracle;
    EXPECT_THROW(run_bench(c), ConfigError);
}

TEST(Bench, EffortAtErrorInterpolatesLogLog)
{
    std::vector<BenchRecord> r;
    r.push_back({SchemeKind::Rk4, 0.1, 100, 1e-4, 0.0, {}});
    r.push_back({SchemeKind::Rk4, 0.05, 1000, 1e-6, 0.0, {}});
    r.push_back({SchemeKind::Cfet4Opt, 0.1, 50, 1e-6, 0.0, {}});
    EXPECT_NEAR(effort_at_error(r, SchemeKind::Rk4, 1e-5), std::sqrt(100.0 * 1000.0), 1e-9);
    EXPECT_NEAR(effort_at_error(r, SchemeKind::Rk4, 1e-4), 100.0, 1e-9);
    EXPECT_TRUE(std::isnan(effort_at_error(r, SchemeKind::Rk4, 1e-7)));
    EXPECT_TRUE(std::isnan(effort_at_error(r, SchemeKind::Cfet4Opt, 1e-6)));
}

// --- sweep and spectrum --------------------------------------------------------------

TEST(Sweep, RowsInGridOrderAndIndependentOfThreads)
{
    const auto c = parse_config_text(with(kSmallDicke, "[sweep]\nparameter = omega_p\nvalues = 2.06, 1.9, 2.0489897948556637\n"));
    CommandOptions one, three;
    three.threads = 3;
    const auto a = run_to_string(cmd_sweep, c, one);
    EXPECT_EQ(a, run_to_string(cmd_sweep, c, three));
    const auto rows = parse_csv(a);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0][0], "omega_p");
    EXPECT_EQ(rows[1][0], "2.0600000000000001");
    EXPECT_EQ(rows[2][0], "1.8999999999999999");
    for (std::size_t i = 1; i < 4; ++i)
        EXPECT_EQ(rows[i].back(), "ok");
    // the resonant point has the most photons
    EXPECT_GT(std::stod(rows[3][2]), std::stod(rows[1][2]));
    EXPECT_GT(std::stod(rows[3][2]), std::stod(rows[2][2]));
}

TEST(Sweep, FailedPointBecomesNanRowAndRunContinues)
{
    const auto c = parse_config_text(with(kSmallDicke, "[sweep]\nparameter = lambda0\nvalues = 0.02, 0.03\nmax_periods = 1\n"
                                                       "harmonics = -1\n"));
    std::ostringstream log;
    CommandOptions o;
    o.log = &log;
    const auto rows = run_sweep(c, o);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_TRUE(std::isnan(r.iz));
        EXPECT_TRUE(std::isnan(r.nb));
        EXPECT_NE(r.status.find("settle"), std::string::npos) << r.status;
    }
    EXPECT_DOUBLE_EQ(rows[1].value, 0.03);
}

TEST(Spectrum, SummaryIsConsistent)
{
    const auto c = parse_config_text(with(kSmallDicke, "[spectrum]\nomega_min = 0.8\nomega_max = 1.2\nn_omega = 801\nextend = true\n"));
    std::ostringstream out, summary, log;
    CommandOptions o;
    o.log = &log;
    ASSERT_EQ(cmd_spectrum(c, out, &summary, o), kExitOk);
    const auto rows = parse_csv(out.str());
    ASSERT_EQ(rows.size(), 802u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"omega", "S"}));
    const auto s = parse_csv(summary.str());
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0][0], "N_b");
    const double nb = std::stod(s[1][0]), s0 = std::stod(s[1][3]), full = std::stod(s[1][4]);
    EXPECT_NEAR(s0 / nb, 1.0, 1e-3);
    EXPECT_NEAR(full / s0, 1.0, 1e-9);
    EXPECT_GT(std::stoi(s[1][7]), 0);
}

TEST(Spectrum, RejectsRampAndSpin)
{
    std::ostringstream out;
    EXPECT_THROW(cmd_spectrum(parse_config_text(kSpin), out, nullptr), ConfigError);
    EXPECT_THROW(cmd_spectrum(parse_config_text(with(kSmallDicke, "[ramp]\nw0 = 1\nw1 = 2\nduration = 5\n")), out,
                              nullptr),
                 ConfigError);
}

// --- selftest ---------------------------------------------------------------------

TEST(Selftest, FreshBuildPasses)
{
    const auto rep = run_selftest();
    for (const auto& c : rep.checks)
        EXPECT_TRUE(c.passed) << c.name << " " << c.value << " " << c.detail;
    EXPECT_TRUE(rep.passed());
    const auto j = rep.to_json();
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_GE(j["checks"].size(), 10u);
}

TEST(Selftest, PerturbedG5FailsOrderConditions)
{
    SelftestOptions o;
    o.inject_fault = "g5";
    const auto rep = run_selftest(o);
    EXPECT_FALSE(rep.passed());
    for (const auto& c : rep.checks) {
        if (c.name == "order_conditions") {
            EXPECT_FALSE(c.passed);
        }
        if (c.name == "mutation_g5_detected" || c.name == "lindblad_trace_preservation") {
            EXPECT_TRUE(c.passed) << c.name;
        }
    }
}

TEST(Selftest, ReversedFactorOrderFailsSlopeCheck)
{
    SelftestOptions o;
    o.inject_fault = "order";
    const auto rep = run_selftest(o);
    EXPECT_FALSE(rep.passed());
    for (const auto& c : rep.checks) {
        if (c.name == "defect_slope_cfet4-opt" || c.name == "defect_slope_cfet4-simple") {
            EXPECT_FALSE(c.passed) << c.name;
        }
        if (c.name == "order_conditions" || c.name == "mutation_order_detected") {
            EXPECT_TRUE(c.passed) << c.name;
        }
    }
}

// --- command line -------------------------------------------------------------------

TEST(Cli, ExitCodes)
{
    const std::string samples = CFET_SAMPLES_DIR;
    const auto out = temp_file("out.csv");
    EXPECT_EQ(run_cli("propagate --config " + samples + "/spin_rabi.ini --out " + out.string()), 0);
    EXPECT_EQ(slurp(out).substr(0, 2), "t,");
    EXPECT_EQ(run_cli("propagate --config " + samples + "/zero_length.ini --out " + out.string()), 0);
    EXPECT_EQ(slurp(out), "t,jz,trace_defect,hermiticity_defect\n");

    const auto bad = temp_file("bad.ini", std::string(kSpin) + "\n[run2]\n");
    EXPECT_EQ(run_cli("propagate --config " + bad.string()), 2);
    EXPECT_EQ(run_cli("propagate --config /nonexistent/cfet.ini"), 2);
    EXPECT_EQ(run_cli("propagate"), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);

    const auto stuck = temp_file("stuck.ini", with(kSmallDicke, "[spectrum]\nmax_periods = 1\n"));
    EXPECT_EQ(run_cli("spectrum --config " + stuck.string()), 3);

    EXPECT_EQ(run_cli("selftest --out " + out.string()), 0);
    EXPECT_NE(slurp(out).find("\"passed\": true"), std::string::npos);
    EXPECT_EQ(run_cli("selftest --inject-fault g5"), 4);
    EXPECT_EQ(run_cli("selftest --inject-fault order"), 4);
    for (const auto& p : {out, bad, stuck})
        fs::remove(p);
}

TEST(Cli, DeterministicFlagGivesIdenticalFiles)
{
    const std::string samples = CFET_SAMPLES_DIR;
    const auto a = temp_file("a.csv"), b = temp_file("b.csv");
    const auto cfg = temp_file("det.ini", with(kSpin, "[bench]\nschemes = cfet4-opt, rk4\ndts = 0.1, 0.05\n"));
    ASSERT_EQ(run_cli("bench --deterministic --threads 2 --config " + cfg.string() + " --out " + a.string()), 0);
    ASSERT_EQ(run_cli("bench --deterministic --config " + cfg.string() + " --out " + b.string()), 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(slurp(a).find('\r'), std::string::npos);
    for (const auto& p : {a, b, cfg})
        fs::remove(p);
}
