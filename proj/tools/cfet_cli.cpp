// cfet_cli: propagate, bench, sweep, spectrum and selftest front end.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "cfet/harness/commands.hpp"
#include "cfet/harness/selftest.hpp"

namespace h = cfet::harness;

namespace
{

struct Output
{
    std::unique_ptr<std::ofstream> file;
    std::ostream* stream = &std::cout;

    explicit Output(const std::string& path)
    {
        if (path.empty())
            return;
        file = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file)
            throw h::ConfigError("cannot open output file '" + path + "'");
        stream = file.get();
    }
};

h::RunConfig need_config(const std::string& path)
{
    if (path.empty())
        throw h::ConfigError("this command needs --config PATH");
    return h::load_config(path);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Commutator-free exponential time propagation of driven quantum systems"};
    app.require_subcommand(1);

    std::string config, out, fault;
    int threads = 1;
    bool deterministic = false;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "INI run configuration");
        sub->add_option("--out", out, "output file (default stdout)");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
        sub->add_flag("--deterministic", deterministic, "byte-identical output for identical input");
    };
    auto* propagate = app.add_subcommand("propagate", "trajectory CSV of observables");
    auto* bench = app.add_subcommand("bench", "error versus effort against a converged reference");
    auto* sweep = app.add_subcommand("sweep", "periodic steady state over a parameter grid");
    auto* spectrum = app.add_subcommand("spectrum", "emission spectrum of the periodic steady state");
    auto* selftest = app.add_subcommand("selftest", "order conditions, oracles and invariants");
    for (auto* s : {propagate, bench, sweep, spectrum, selftest})
        common(s);
    selftest->add_option("--inject-fault", fault, "deliberate defect: g5 or order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return h::kExitConfig;
    }

    h::CommandOptions opts;
    opts.threads = threads;
    opts.deterministic = deterministic;
    try {
        if (*selftest) {
            h::SelftestOptions so;
            so.inject_fault = fault;
            if (!config.empty())
                so.seed = h::load_config(config).run.seed;
            const auto rep = h::run_selftest(so);
            Output o(out);
            *o.stream << rep.to_json().dump(2) << "\n";
            for (const auto& c : rep.checks)
                if (!c.passed)
                    std::cerr << "FAILED " << c.name << ": " << c.value << " (threshold " << c.threshold << ") "
                              << c.detail << "\n";
            return rep.passed() ? h::kExitOk : h::kExitSelftest;
        }
        const auto cfg = need_config(config);
        opts.deterministic = opts.deterministic || cfg.run.deterministic;
        Output o(out);
        int code = h::kExitOk;
        if (*propagate) {
            code = h::cmd_propagate(cfg, *o.stream, opts);
        } else if (*bench) {
            code = h::cmd_bench(cfg, *o.stream, opts);
        } else if (*sweep) {
            code = h::cmd_sweep(cfg, *o.stream, opts);
        } else if (*spectrum) {
            std::unique_ptr<std::ofstream> summary;
            if (!out.empty()) {
                summary = std::make_unique<std::ofstream>(out + ".summary.csv", std::ios::binary);
                if (!*summary)
                    throw h::ConfigError("cannot open summary file '" + out + ".summary.csv'");
            }
            code = h::cmd_spectrum(cfg, *o.stream, summary ? summary.get() : &std::cerr, opts);
        }
        o.stream->flush();
        return code;
    } catch (const h::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return h::kExitConfig;
    } catch (const cfet::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << " (residual " << cfet::sci(e.residual()) << ")\n";
        return h::kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return h::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return h::kExitNumerical;
    }
}
