#include "jobswitch/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "jobswitch/errors.hpp"

namespace jobswitch {

using nlohmann::json;

namespace {

const std::vector<std::string> kModelFields = {"beta", "r",     "mu",    "sigma", "eps0",
                                               "eps1", "L0",    "L1",    "zeta0", "zeta1",
                                               "T",    "gamma", "T_death"};

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ValidationError("config: '" + where + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            const std::string name = where.empty() ? it.key() : where + "." + it.key();
            throw ValidationError("config: unknown field '" + name + "'");
        }
    }
}

double get_number(const json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ValidationError("config: field '" + where + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError("config: field '" + where + key + "' must be finite");
    return x;
}

template <class T>
void read(const json& j, const std::string& key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    const std::string name = where + key;
    const auto& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ValidationError("config: field '" + name + "' must be a boolean");
        out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError("config: field '" + name + "' must be a string");
        out = v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() && !v.is_number_unsigned())
            throw ValidationError("config: field '" + name + "' must be an integer");
        out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) throw ValidationError("config: field '" + name + "' must be an array");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number()) throw ValidationError("config: field '" + name + "' must hold numbers");
            out.push_back(e.get<double>());
        }
    } else {
        out = get_number(j, key, where);
    }
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    c.model.T_death = c.model.T + 20.0;
    c.grid.T = c.model.T;
    return c;
}

RunConfig config_from_json(const json& j) {
    RunConfig c = default_config();
    std::set<std::string> top(kModelFields.begin(), kModelFields.end());
    top.insert({"pde", "ie", "strategy", "simulate", "duality"});
    check_keys(j, "", top);

    bool any_model = false;
    for (const auto& f : kModelFields) any_model = any_model || j.contains(f);
    if (any_model) {
        for (const auto& f : kModelFields) {
            if (f != "T_death" && !j.contains(f))
                throw ValidationError("config: missing field '" + f + "'");
        }
        auto& p = c.model;
        p.beta = get_number(j, "beta", "");
        p.r = get_number(j, "r", "");
        p.mu = get_number(j, "mu", "");
        p.sigma = get_number(j, "sigma", "");
        p.eps0 = get_number(j, "eps0", "");
        p.eps1 = get_number(j, "eps1", "");
        p.L0 = get_number(j, "L0", "");
        p.L1 = get_number(j, "L1", "");
        p.zeta0 = get_number(j, "zeta0", "");
        p.zeta1 = get_number(j, "zeta1", "");
        p.T = get_number(j, "T", "");
        p.gamma = get_number(j, "gamma", "");
        p.T_death = j.contains("T_death") ? get_number(j, "T_death", "") : p.T + 20.0;
        c.grid.T = p.T;
    }

    if (j.contains("pde")) {
        const auto& s = j.at("pde");
        check_keys(s, "pde", {"n_trunc", "nx", "nt", "method", "sweep_tol", "max_sweeps", "omega",
                              "eps_sequence", "newton_tol", "max_newton", "surface_stride_t",
                              "surface_stride_x"});
        read(s, "n_trunc", c.grid.n_trunc, "pde.");
        read(s, "nx", c.grid.nx, "pde.");
        read(s, "nt", c.grid.nt, "pde.");
        std::string method = obstacle::method_name(c.pde.method);
        read(s, "method", method, "pde.");
        c.pde.method = obstacle::parse_method(method);
        read(s, "sweep_tol", c.pde.sweep_tol, "pde.");
        read(s, "max_sweeps", c.pde.max_sweeps, "pde.");
        read(s, "omega", c.pde.omega, "pde.");
        read(s, "eps_sequence", c.pde.eps_sequence, "pde.");
        read(s, "newton_tol", c.pde.newton_tol, "pde.");
        read(s, "max_newton", c.pde.max_newton, "pde.");
        read(s, "surface_stride_t", c.surface_stride_t, "pde.");
        read(s, "surface_stride_x", c.surface_stride_x, "pde.");
    }
    if (j.contains("ie")) {
        const auto& s = j.at("ie");
        check_keys(s, "ie", {"nt_ie", "newton_tol", "max_newton_iters", "lambda_cap", "endpoint_offset"});
        read(s, "nt_ie", c.ie.nt_ie, "ie.");
        read(s, "newton_tol", c.ie.newton_tol, "ie.");
        read(s, "max_newton_iters", c.ie.max_newton_iters, "ie.");
        read(s, "lambda_cap", c.ie.lambda_cap, "ie.");
        read(s, "endpoint_offset", c.ie.endpoint_offset, "ie.");
    }
    if (j.contains("strategy")) {
        const auto& s = j.at("strategy");
        check_keys(s, "strategy", {"v_panels", "geometric_panels", "bracket_lo", "bracket_hi",
                                   "max_bisection", "wealth_tol", "table_times", "table_wealth"});
        read(s, "v_panels", c.strategy.v_panels, "strategy.");
        read(s, "geometric_panels", c.strategy.geometric_panels, "strategy.");
        read(s, "bracket_lo", c.strategy.bracket_lo, "strategy.");
        read(s, "bracket_hi", c.strategy.bracket_hi, "strategy.");
        read(s, "max_bisection", c.strategy.max_bisection, "strategy.");
        read(s, "wealth_tol", c.strategy.wealth_tol, "strategy.");
        read(s, "table_times", c.table_times, "strategy.");
        read(s, "table_wealth", c.table_wealth, "strategy.");
    }
    if (j.contains("simulate")) {
        const auto& s = j.at("simulate");
        check_keys(s, "simulate", {"n_paths", "n_steps", "seed", "lambda0", "job0", "antithetic", "t0",
                                   "threads", "boundaries"});
        read(s, "n_paths", c.sim.n_paths, "simulate.");
        read(s, "n_steps", c.sim.n_steps, "simulate.");
        read(s, "seed", c.sim.seed, "simulate.");
        read(s, "lambda0", c.sim.lambda0, "simulate.");
        read(s, "job0", c.sim.job0, "simulate.");
        read(s, "antithetic", c.sim.antithetic, "simulate.");
        read(s, "t0", c.sim.t0, "simulate.");
        read(s, "threads", c.sim.threads, "simulate.");
        read(s, "boundaries", c.sim_boundaries, "simulate.");
        if (c.sim_boundaries != "ie" && c.sim_boundaries != "pde")
            throw ValidationError("config: field 'simulate.boundaries' must be \"ie\" or \"pde\"");
    }
    if (j.contains("duality")) {
        const auto& s = j.at("duality");
        check_keys(s, "duality", {"wealth", "job0", "t0", "n_paths", "n_steps", "seed", "antithetic",
                                  "threads", "spot_checks"});
        read(s, "wealth", c.duality.wealth, "duality.");
        read(s, "job0", c.duality.job0, "duality.");
        read(s, "t0", c.duality.t0, "duality.");
        read(s, "n_paths", c.duality.n_paths, "duality.");
        read(s, "n_steps", c.duality.n_steps, "duality.");
        read(s, "seed", c.duality.seed, "duality.");
        read(s, "antithetic", c.duality.antithetic, "duality.");
        read(s, "threads", c.duality.threads, "duality.");
        read(s, "spot_checks", c.duality.spot_checks, "duality.");
    }
    if (c.surface_stride_t < 1 || c.surface_stride_x < 1)
        throw ValidationError("config: surface strides must be >= 1");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: parse error in '") + path + "': " + e.what());
    }
    return config_from_json(j);
}

json to_json(const ModelParams& p) {
    return {{"beta", p.beta}, {"r", p.r},         {"mu", p.mu},       {"sigma", p.sigma},
            {"eps0", p.eps0}, {"eps1", p.eps1},   {"L0", p.L0},       {"L1", p.L1},
            {"zeta0", p.zeta0}, {"zeta1", p.zeta1}, {"T", p.T},       {"gamma", p.gamma},
            {"T_death", p.T_death}};
}

json to_json(const DerivedConstants& d) {
    return {{"theta", d.theta}, {"T1", d.T1}, {"X1", d.X1},
            {"X2", d.X2},       {"K", d.K},   {"bequest_coef", d.bequest_coef}};
}

json to_json(const RunConfig& c) {
    json j = to_json(c.model);
    j["pde"] = {{"n_trunc", c.grid.n_trunc},
                {"nx", c.grid.nx},
                {"nt", c.grid.nt},
                {"method", obstacle::method_name(c.pde.method)},
                {"sweep_tol", c.pde.sweep_tol},
                {"max_sweeps", c.pde.max_sweeps},
                {"omega", c.pde.omega},
                {"eps_sequence", c.pde.eps_sequence},
                {"newton_tol", c.pde.newton_tol},
                {"max_newton", c.pde.max_newton},
                {"surface_stride_t", c.surface_stride_t},
                {"surface_stride_x", c.surface_stride_x}};
    j["ie"] = {{"nt_ie", c.ie.nt_ie},
               {"newton_tol", c.ie.newton_tol},
               {"max_newton_iters", c.ie.max_newton_iters},
               {"lambda_cap", c.ie.lambda_cap},
               {"endpoint_offset", c.ie.endpoint_offset}};
    j["strategy"] = {{"v_panels", c.strategy.v_panels},
                     {"geometric_panels", c.strategy.geometric_panels},
                     {"bracket_lo", c.strategy.bracket_lo},
                     {"bracket_hi", c.strategy.bracket_hi},
                     {"max_bisection", c.strategy.max_bisection},
                     {"wealth_tol", c.strategy.wealth_tol},
                     {"table_times", c.table_times},
                     {"table_wealth", c.table_wealth}};
    json sim = {{"n_paths", c.sim.n_paths},
                {"n_steps", c.sim.n_steps},
                {"seed", c.sim.seed},
                {"job0", c.sim.job0},
                {"antithetic", c.sim.antithetic},
                {"t0", c.sim.t0},
                {"threads", c.sim.threads},
                {"boundaries", c.sim_boundaries}};
    if (!std::isnan(c.sim.lambda0)) sim["lambda0"] = c.sim.lambda0;
    j["simulate"] = sim;
    j["duality"] = {{"wealth", c.duality.wealth},         {"job0", c.duality.job0},
                    {"t0", c.duality.t0},                 {"n_paths", c.duality.n_paths},
                    {"n_steps", c.duality.n_steps},       {"seed", c.duality.seed},
                    {"antithetic", c.duality.antithetic}, {"threads", c.duality.threads},
                    {"spot_checks", c.duality.spot_checks}};
    return j;
}

void apply_grid_flag(RunConfig& c, const std::string& spec) {
    std::istringstream in(spec);
    std::string a, b, n;
    if (!std::getline(in, a, ',') || !std::getline(in, b, ',') || !std::getline(in, n) || a.empty() ||
        b.empty() || n.empty())
        throw ValidationError("--grid expects nx,nt,n (got '" + spec + "')");
    try {
        std::size_t pos = 0;
        c.grid.nx = std::stoi(a, &pos);
        if (pos != a.size()) throw std::invalid_argument(a);
        c.grid.nt = std::stoi(b, &pos);
        if (pos != b.size()) throw std::invalid_argument(b);
        c.grid.n_trunc = std::stod(n, &pos);
        if (pos != n.size()) throw std::invalid_argument(n);
    } catch (const std::logic_error&) {
        throw ValidationError("--grid expects nx,nt,n (got '" + spec + "')");
    }
}

}  // namespace jobswitch
