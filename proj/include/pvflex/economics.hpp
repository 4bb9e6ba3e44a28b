#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pvflex/errors.hpp"
#include "pvflex/scheduler.hpp"

namespace pvflex {

// How the operating-expenditure share beta enters the annualized cost bracket:
// either as a fraction of the annuity factor (size*cost*alpha*(1+beta), the
// default) or added to it raw (size*cost*(alpha+beta)).
enum class OpexMode { fraction_of_annuity, fraction_of_capex };

// Economic constants of one price scenario.
struct Scenario {
    std::string name;
    double pv_cost_per_kwp = 0.0;    // EUR/kWp
    double bes_cost_per_kwh = 0.0;   // EUR/kWh
    double mean_import_price = 0.0;  // EUR/kWh
    double feed_in_tariff = 0.0;     // EUR/kWh
    double interest_rate = 0.035;
    int lifetime_years = 20;
    double opex_fraction = 0.04;
    OpexMode opex_mode = OpexMode::fraction_of_annuity;

    void validate() const {
        if (pv_cost_per_kwp < 0.0 || bes_cost_per_kwh < 0.0 || mean_import_price < 0.0 ||
            feed_in_tariff < 0.0) {
            throw ConfigError("scenario prices and costs must be non-negative");
        }
        if (interest_rate <= 0.0 || interest_rate >= 1.0) {
            throw ConfigError("interest rate must lie in (0, 1)");
        }
        if (lifetime_years < 1) throw ConfigError("lifetime must be at least one year");
        if (opex_fraction < 0.0) throw ConfigError("opex fraction must be non-negative");
    }
};

// Remuneration for called flexibility: price per kWh and calls per year.
struct FlexRemuneration {
    double price_per_kwh = 0.0;
    int calls_per_year = 0;

    void validate() const {
        if (price_per_kwh < 0.0) throw ConfigError("flexibility price must be non-negative");
        if (calls_per_year < 0 || calls_per_year > 365) {
            throw ConfigError("flexibility calls must lie in [0, 365]");
        }
    }
};

inline Scenario scenario_present() {
    Scenario s;
    s.name = "present";
    s.pv_cost_per_kwp = 1200.0;
    s.bes_cost_per_kwh = 900.0;
    s.mean_import_price = 0.319;
    s.feed_in_tariff = 0.068;
    return s;
}

inline Scenario scenario_longterm() {
    Scenario s;
    s.name = "longterm";
    s.pv_cost_per_kwp = 800.0;
    s.bes_cost_per_kwh = 500.0;
    s.mean_import_price = 0.37;
    s.feed_in_tariff = 0.02;
    return s;
}

// Capital-recovery factor r / (1 - (1+r)^-n); straight-line 1/n as r -> 0.
inline double annuity_factor(double rate, int years) {
    if (rate < 0.0 || years < 1) throw ConfigError("annuity_factor: rate >= 0 and years >= 1");
    if (rate == 0.0) return 1.0 / years;
    return rate / (1.0 - std::pow(1.0 + rate, -years));
}

// Annualized device cost: size * unit_cost * (alpha + beta-term).
inline double annualized_capex(double size, double unit_cost, double rate, int years,
                               double opex_fraction, OpexMode mode = OpexMode::fraction_of_annuity) {
    const double alpha = annuity_factor(rate, years);
    const double beta = mode == OpexMode::fraction_of_annuity ? opex_fraction * alpha
                                                              : opex_fraction;
    return size * unit_cost * (alpha + beta);
}

inline double annualized_capex(double size, double unit_cost, const Scenario& scenario) {
    return annualized_capex(size, unit_cost, scenario.interest_rate, scenario.lifetime_years,
                            scenario.opex_fraction, scenario.opex_mode);
}

// Export ratio f_e and self-sufficiency f_s from the annual energy totals.
inline std::pair<double, double> energy_ratios(const AnnualTotals& totals) {
    if (totals.e_demand_kwh <= 0.0) throw DataError("energy_ratios: zero annual demand");
    const double f_e = totals.e_pv_kwh > 0.0 ? totals.e_pv_export_kwh / totals.e_pv_kwh : 0.0;
    const double f_s = (totals.e_demand_pv_kwh + totals.e_demand_bes_kwh) / totals.e_demand_kwh;
    return {f_e, f_s};
}

inline double import_cost(double annual_demand_kwh, double mean_import_price,
                          double self_sufficiency) {
    return annual_demand_kwh * mean_import_price * (1.0 - self_sufficiency);
}

inline double feed_in_revenue(double annual_pv_kwh, double feed_in_tariff, double export_ratio) {
    return annual_pv_kwh * feed_in_tariff * export_ratio;
}

inline double flexibility_revenue(double flex_energy_kwh, const FlexRemuneration& remun) {
    return flex_energy_kwh * remun.price_per_kwh * remun.calls_per_year;
}

// Mean electricity price: total annualized cost net of revenues per kWh of
// demand. Negative values are legal (revenues dominate).
inline double amep(double annualized_capex_eur, double import_cost_eur, double pv_revenue_eur,
                   double flex_revenue_eur, double annual_demand_kwh) {
    if (annual_demand_kwh <= 0.0) throw DataError("amep: zero annual demand");
    return (annualized_capex_eur + import_cost_eur - pv_revenue_eur - flex_revenue_eur) /
           annual_demand_kwh;
}

// Levelized cost of the system's generation; the lower bound of the
// flexibility price range. Zero yield has no LCOE and falls back to 0.
inline double system_lcoe(double annualized_capex_eur, double annual_pv_kwh) {
    if (annual_pv_kwh <= 0.0) return 0.0;
    return annualized_capex_eur / annual_pv_kwh;
}

// Full cost breakdown for one configuration and year.
struct AmepResult {
    double annualized_capex_eur = 0.0;
    double import_cost_eur = 0.0;
    double pv_revenue_eur = 0.0;
    double flex_revenue_eur = 0.0;
    double export_ratio = 0.0;
    double self_sufficiency = 0.0;
    double amep_eur_per_kwh = 0.0;
};

inline AmepResult evaluate_amep(const AnnualTotals& totals, const DeviceParams& devices,
                                const Scenario& scenario, double flex_energy_kwh,
                                const FlexRemuneration& remun) {
    AmepResult r;
    r.annualized_capex_eur =
        annualized_capex(devices.pv_peak_kw, scenario.pv_cost_per_kwp, scenario) +
        annualized_capex(devices.bes_capacity_kwh, scenario.bes_cost_per_kwh, scenario);
    const auto [f_e, f_s] = energy_ratios(totals);
    r.export_ratio = f_e;
    r.self_sufficiency = f_s;
    r.import_cost_eur = import_cost(totals.e_demand_kwh, scenario.mean_import_price, f_s);
    r.pv_revenue_eur = feed_in_revenue(totals.e_pv_kwh, scenario.feed_in_tariff, f_e);
    r.flex_revenue_eur = flexibility_revenue(flex_energy_kwh, remun);
    r.amep_eur_per_kwh = amep(r.annualized_capex_eur, r.import_cost_eur, r.pv_revenue_eur,
                              r.flex_revenue_eur, totals.e_demand_kwh);
    return r;
}

// --- scenario files ----------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace detail

// INI-style scenario file with sections [pv], [bes], [prices], [finance],
// [flex]; keys mirror the Scenario and FlexRemuneration fields.
inline std::pair<Scenario, FlexRemuneration> load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path.string());
    Scenario s;
    s.name = path.stem().string();
    FlexRemuneration remun;
    std::string section;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(row) + ": expected key=value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;
        try {
            if (qual == ".name" || qual == "scenario.name") {
                s.name = value;
            } else if (qual == "pv.cost_per_kwp") {
                s.pv_cost_per_kwp = std::stod(value);
            } else if (qual == "bes.cost_per_kwh") {
                s.bes_cost_per_kwh = std::stod(value);
            } else if (qual == "prices.mean_import") {
                s.mean_import_price = std::stod(value);
            } else if (qual == "prices.feed_in") {
                s.feed_in_tariff = std::stod(value);
            } else if (qual == "finance.interest_rate") {
                s.interest_rate = std::stod(value);
            } else if (qual == "finance.lifetime_years") {
                s.lifetime_years = std::stoi(value);
            } else if (qual == "finance.opex_fraction") {
                s.opex_fraction = std::stod(value);
            } else if (qual == "finance.opex_mode") {
                if (value == "annuity_fraction") s.opex_mode = OpexMode::fraction_of_annuity;
                else if (value == "capex_fraction") s.opex_mode = OpexMode::fraction_of_capex;
                else throw ConfigError("opex_mode must be annuity_fraction or capex_fraction");
            } else if (qual == "flex.price_per_kwh") {
                remun.price_per_kwh = std::stod(value);
            } else if (qual == "flex.calls_per_year") {
                remun.calls_per_year = std::stoi(value);
            } else {
                throw ConfigError("unknown key '" + qual + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError(path.string() + ":" + std::to_string(row) + ": bad value '" +
                              value + "' for " + qual);
        }
    }
    s.validate();
    remun.validate();
    return {s, remun};
}

// Resolves "present", "longterm", or a file path.
inline Scenario resolve_scenario(const std::string& spec, FlexRemuneration* remun_out = nullptr) {
    if (spec == "present") return scenario_present();
    if (spec == "longterm") return scenario_longterm();
    auto [s, remun] = load_scenario(spec);
    if (remun_out) *remun_out = remun;
    return s;
}

} // namespace pvflex
