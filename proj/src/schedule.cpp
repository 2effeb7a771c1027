#include "dadp/schedule.hpp"

#include <nlohmann/json.hpp>

namespace dadp {

NoiseSchedule build_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw ConfigError("build_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ConfigError("build_schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.T = T;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        double frac = T == 1 ? 0.0 : double(t) / double(T - 1);
        s.beta[t] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[t] = 1.0 - s.beta[t];
        prod *= s.alpha[t];
        s.alpha_bar[t] = prod;
    }
    return s;
}

std::string schedule_to_json(const NoiseSchedule& s) {
    nlohmann::json j{{"T", s.T}, {"beta_start", s.beta_start}, {"beta_end", s.beta_end}};
    return j.dump();
}

NoiseSchedule schedule_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    return build_schedule(j.at("T").get<int>(), j.at("beta_start").get<double>(),
                          j.at("beta_end").get<double>());
}

}  // namespace dadp
