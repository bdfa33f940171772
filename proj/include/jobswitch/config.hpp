#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "jobswitch/integral.hpp"
#include "jobswitch/model.hpp"
#include "jobswitch/obstacle.hpp"
#include "jobswitch/simulate.hpp"
#include "jobswitch/strategy.hpp"

namespace jobswitch {

/// Everything a run needs. Model parameters sit at the top level of the JSON file
/// under their exact names; numerical controls live in optional sections.
struct RunConfig {
    ModelParams model;
    obstacle::Grid grid;
    obstacle::SolverOptions pde;
    integral::IeSolverConfig ie;
    strategy::StrategyOptions strategy;
    simulate::SimConfig sim;
    /// Which boundaries drive `simulate`: "ie" or "pde".
    std::string sim_boundaries = "ie";
    simulate::PrimalConfig duality;
    /// Sample points of the exported strategy table.
    std::vector<double> table_times = {0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 28.0};
    std::vector<double> table_wealth = {-10.0, -5.0, 0.0, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0, 30.0, 40.0, 60.0};
    /// Row and column strides of the exported u surface.
    int surface_stride_t = 30;
    int surface_stride_x = 10;
};

/// Reference parameters; T_death = T + 20 and the grid horizon follows T.
RunConfig default_config();

/// Parses a config object. When any model parameter is given, all of them except
/// T_death must be. Unknown keys and wrong types raise ValidationError naming the field.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

nlohmann::json to_json(const RunConfig& c);
nlohmann::json to_json(const ModelParams& p);
nlohmann::json to_json(const DerivedConstants& d);

/// Parses "nx,nt,n" into the grid, e.g. "2001,3000,12".
void apply_grid_flag(RunConfig& c, const std::string& spec);

}  // namespace jobswitch
