// Command-line front end. Option precedence, most specific last:
// built-in defaults -> --config file -> SCHRO_* environment -> explicit flags.
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schro/cli.hpp"

namespace {

struct CliState {
    schro::RunConfig v;                                    // flag capture
    std::string config_path_;
    std::map<std::string, std::vector<CLI::Option*>> opts; // field -> per-subcommand options

    bool given(const std::string& key) const {
        const auto it = opts.find(key);
        if (it == opts.end()) return false;
        for (const CLI::Option* o : it->second)
            if (o->count() > 0) return true;
        return false;
    }
};

void add_options(CLI::App* cmd, CliState& s) {
    auto& o = s.opts;
    auto& v = s.v;
    o["config"].push_back(cmd->add_option("--config", s.config_path_, "TOML or JSON config file"));
    o["out_dir"].push_back(cmd->add_option("--out", v.out_dir, "output directory"));
    o["seed"].push_back(cmd->add_option("--seed", v.seed, "RNG seed"));
    o["threads"].push_back(cmd->add_option("--threads", v.threads, "worker threads"));
    o["quiet"].push_back(cmd->add_flag("--quiet", v.quiet, "suppress stdout chatter"));
    o["potential"].push_back(cmd->add_option("--potential", v.potential,
                                             "potential values V_1..V_p, comma separated")
                                 ->delimiter(','));
    o["mu"].push_back(cmd->add_option("--mu", v.mu, "coupling strength"));
    o["mu_list"].push_back(
        cmd->add_option("--mu-list", v.mu_list, "sweep couplings, comma separated")
            ->delimiter(','));
    o["rho0"].push_back(cmd->add_option("--rho0", v.rho0, "contour radius > 1"));
    o["nodes"].push_back(cmd->add_option("--nodes", v.nodes, "quadrature nodes M"));
    o["sites"].push_back(cmd->add_option("--sites", v.sites, "lattice sites (0 = auto)"));
    o["t"].push_back(cmd->add_option("--t", v.t, "evolution time"));
    o["t_list"].push_back(cmd->add_option("--t-list", v.t_list, "time grid, comma separated")
                              ->delimiter(','));
    o["d_max"].push_back(cmd->add_option("--dmax", v.d_max, "block distance window (0 = auto)"));
    o["eps"].push_back(cmd->add_option("--eps", v.eps, "front threshold"));
    o["T"].push_back(cmd->add_option("--T", v.T, "direct-velocity horizon (0 = auto)"));
    o["method"].push_back(cmd->add_option("--method", v.method, "evolution method")
                              ->check(CLI::IsMember({"chebyshev", "eig"})));
    o["hopping"].push_back(cmd->add_option("--hopping", v.hopping, "hopping amplitude"));
    o["front"].push_back(cmd->add_flag("--front,!--no-front", v.front, "fit the cone front"));
    o["direct"].push_back(
        cmd->add_flag("--direct,!--no-direct", v.direct, "run the direct dynamical estimate"));
    o["p_verify"].push_back(cmd->add_option("--p", v.p_verify, "focus verification on one period"));
    o["trials"].push_back(cmd->add_option("--trials", v.trials, "determinant suite trials"));
    o["perturb_formula"].push_back(cmd->add_flag("--perturb-formula", v.perturb_formula,
                                                 "fault injection: perturb the determinant formula"));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"periodic discrete Schrodinger operator toolkit"};
    app.set_version_flag("--version", schro::version);
    app.require_subcommand(1);

    CliState state;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"constants", "print the closed-form constants ledger"},
        {"bands", "band functions and derivatives on the quasimomentum grid"},
        {"kernel", "evolution block kernels at one time"},
        {"evolve", "real-space wave packet evolution"},
        {"lightcone", "cone profile, front fit, and tail decay"},
        {"vasy", "asymptotic velocity: exact formula, bounds, direct estimate"},
        {"sweep", "velocity scaling across a mu list"},
        {"verify", "formula verification suites"},
        {"pipeline", "bands -> kernel -> lightcone -> vasy -> sweep, end to end"},
    };
    std::map<std::string, CLI::App*> subs;
    add_options(&app, state);
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        add_options(sub, state);
        subs[name] = sub;
    }

    CLI11_PARSE(app, argc, argv);

    try {
        schro::RunConfig cfg; // defaults
        if (state.given("config")) cfg = schro::parse_config(state.config_path_);
        schro::apply_env_overrides(cfg);
        const auto& v = state.v;
        if (state.given("out_dir")) cfg.out_dir = v.out_dir;
        if (state.given("seed")) cfg.seed = v.seed;
        if (state.given("threads")) cfg.threads = v.threads;
        if (state.given("quiet")) cfg.quiet = v.quiet;
        if (state.given("potential")) cfg.potential = v.potential;
        if (state.given("mu")) cfg.mu = v.mu;
        if (state.given("mu_list")) cfg.mu_list = v.mu_list;
        if (state.given("rho0")) cfg.rho0 = v.rho0;
        if (state.given("nodes")) cfg.nodes = v.nodes;
        if (state.given("sites")) cfg.sites = v.sites;
        if (state.given("t")) cfg.t = v.t;
        if (state.given("t_list")) cfg.t_list = v.t_list;
        if (state.given("d_max")) cfg.d_max = v.d_max;
        if (state.given("eps")) cfg.eps = v.eps;
        if (state.given("T")) cfg.T = v.T;
        if (state.given("method")) cfg.method = v.method;
        if (state.given("hopping")) cfg.hopping = v.hopping;
        if (state.given("front")) cfg.front = v.front;
        if (state.given("direct")) cfg.direct = v.direct;
        if (state.given("p_verify")) cfg.p_verify = v.p_verify;
        if (state.given("trials")) cfg.trials = v.trials;
        if (state.given("perturb_formula")) cfg.perturb_formula = v.perturb_formula;

        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "constants") return schro::cmd_constants(cfg);
        if (name == "bands") return schro::cmd_bands(cfg);
        if (name == "kernel") return schro::cmd_kernel(cfg);
        if (name == "evolve") return schro::cmd_evolve(cfg);
        if (name == "lightcone") return schro::cmd_lightcone(cfg);
        if (name == "vasy") return schro::cmd_vasy(cfg);
        if (name == "sweep") return schro::cmd_sweep(cfg);
        if (name == "verify") return schro::cmd_verify(cfg);
        if (name == "pipeline") return schro::cmd_pipeline(cfg);
        std::fprintf(stderr, "error: unknown subcommand %s\n", name.c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
