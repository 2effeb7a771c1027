#pragma once

#include <string>
#include <vector>

#include "dadp/grid.hpp"

namespace dadp {

/// Linear-beta forward-process schedule. Step indices run over [0, T-1] and
/// alpha_bar[t] is the cumulative product of alpha starting at step 0.
struct NoiseSchedule {
    int T = 0;
    double beta_start = 0.0;
    double beta_end = 0.0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    bool step_in_range(int t) const { return t >= 0 && t < T; }
};

NoiseSchedule build_schedule(int T, double beta_start, double beta_end);

/// {"T":..., "beta_start":..., "beta_end":...}
std::string schedule_to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const std::string& json_text);

}  // namespace dadp
