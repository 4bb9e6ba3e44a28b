// Command-line front end: synthetic data generation, daily/annual dispatch,
// flexibility profiles, and the sizing / flexibility-remuneration sweeps.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "pvflex/pvflex.hpp"

namespace fs = std::filesystem;
using namespace pvflex;

namespace {

struct DataOpts {
    std::string pv_path = "synthetic";
    std::string load_path = "synthetic";
    std::string price_path = "synthetic";
    bool synthetic = false;
    std::uint64_t seed = 1;
    double demand_kwh = 4000.0; // runnable placeholder, not a measured value
    bool demand_given = false;
    double pv_rated_kwp = 3.0;
};

struct DeviceOpts {
    double pv_size_kwp = -1.0; // -1: use the rated peak of the trace
    double bes_capacity_kwh = 0.0;
    double bes_charge_kw = -1.0;    // -1: 1C
    double bes_discharge_kw = -1.0; // -1: 1C
    double eta_ch = 0.95;
    double eta_dh = 0.95;
};

struct LoadedYear {
    TimeSeries pv;
    TimeSeries demand;
    TimeSeries import_price;
    TimeSeries export_price;
};

void add_data_options(CLI::App* cmd, DataOpts& d) {
    cmd->add_option("--pv", d.pv_path, "PV CSV path or 'synthetic'");
    cmd->add_option("--load", d.load_path, "household load CSV path or 'synthetic'");
    cmd->add_option("--price", d.price_path, "import price CSV path or 'synthetic'");
    cmd->add_flag("--synthetic", d.synthetic, "use synthetic data for all three series");
    cmd->add_option("--seed", d.seed, "random seed for synthetic data");
    cmd->add_option("--demand", d.demand_kwh,
                    "annual demand in kWh (synthetic load; rescales a loaded profile when given)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--pv-peak", d.pv_rated_kwp, "rated peak of the PV trace in kWp")
        ->check(CLI::NonNegativeNumber);
}

void add_device_options(CLI::App* cmd, DeviceOpts& dev) {
    cmd->add_option("--pv-size", dev.pv_size_kwp, "installed PV size in kWp (default: rated peak)");
    cmd->add_option("--bes-capacity", dev.bes_capacity_kwh, "battery capacity in kWh")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--bes-charge-kw", dev.bes_charge_kw, "battery charge limit in kW (default 1C)");
    cmd->add_option("--bes-discharge-kw", dev.bes_discharge_kw,
                    "battery discharge limit in kW (default 1C)");
    cmd->add_option("--eta-ch", dev.eta_ch, "charging efficiency")->check(CLI::Range(0.01, 1.0));
    cmd->add_option("--eta-dh", dev.eta_dh, "discharging efficiency")->check(CLI::Range(0.01, 1.0));
}

// Loads or synthesizes the year and aligns the import price mean with the
// scenario; the export price is the scenario's flat feed-in tariff.
LoadedYear load_year(const DataOpts& d, const Scenario& scenario) {
    const bool pv_synth = d.synthetic || d.pv_path == "synthetic";
    const bool load_synth = d.synthetic || d.load_path == "synthetic";
    const bool price_synth = d.synthetic || d.price_path == "synthetic";

    TimeSeries pv = pv_synth ? synthetic_pv(d.seed, d.pv_rated_kwp)
                             : load_series(d.pv_path, SeriesKind::power);
    TimeSeries demand = load_synth ? synthetic_load(d.seed, d.demand_kwh)
                                   : load_series(d.load_path, SeriesKind::power);
    if (!load_synth && d.demand_given) {
        demand = scale_to_annual_energy(demand, d.demand_kwh);
    }
    TimeSeries price = price_synth ? synthetic_import_price(d.seed)
                                   : load_series(d.price_path, SeriesKind::price);
    price = scale_price_to_mean(price, scenario.mean_import_price);
    TimeSeries feed_in = constant_series(scenario.feed_in_tariff, price.days(), SeriesKind::price,
                                         price.step_minutes());
    return LoadedYear{std::move(pv), std::move(demand), std::move(price), std::move(feed_in)};
}

DeviceParams make_devices(const DeviceOpts& dev, double rated_kwp) {
    DeviceParams p;
    p.pv_peak_kw = dev.pv_size_kwp >= 0.0 ? dev.pv_size_kwp : rated_kwp;
    p.bes_capacity_kwh = dev.bes_capacity_kwh;
    p.bes_charge_kw = dev.bes_charge_kw >= 0.0 ? dev.bes_charge_kw : dev.bes_capacity_kwh;
    p.bes_discharge_kw = dev.bes_discharge_kw >= 0.0 ? dev.bes_discharge_kw : dev.bes_capacity_kwh;
    p.eta_ch = dev.eta_ch;
    p.eta_dh = dev.eta_dh;
    p.validate();
    return p;
}

// Rescale the PV trace to the installed size.
TimeSeries scale_pv(const TimeSeries& pv, double rated_kwp, double installed_kwp) {
    if (installed_kwp == rated_kwp) return pv;
    if (rated_kwp <= 0.0) {
        throw ConfigError("--pv-peak must be positive to rescale the PV trace");
    }
    std::vector<double> values = pv.values();
    const double factor = installed_kwp / rated_kwp;
    for (double& v : values) v *= factor;
    return TimeSeries(std::move(values), SeriesKind::power, pv.step_minutes());
}

std::vector<double> parse_axis(const std::string& spec) {
    double a = 0.0, b = 0.0, step = 0.0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0.0 || b < a) {
        throw ConfigError("axis spec must be start:stop:step with step > 0, got '" + spec + "'");
    }
    std::vector<double> axis;
    for (int i = 0;; ++i) {
        const double v = a + i * step;
        if (v > b + 1e-9) break;
        axis.push_back(v);
    }
    return axis;
}

std::vector<Scenario> resolve_scenarios(const std::string& spec, FlexRemuneration* remun) {
    if (spec == "both") return {scenario_present(), scenario_longterm()};
    return {resolve_scenario(spec, remun)};
}

int run_gen_data(const DataOpts& d, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const SyntheticYear year = synthetic_year(d.seed, d.demand_kwh, d.pv_rated_kwp);
    save_series(year.pv, out_dir / "pv.csv");
    save_series(year.load, out_dir / "load.csv");
    save_series(year.import_price, out_dir / "price.csv");
    std::printf("wrote %s, %s, %s\n", (out_dir / "pv.csv").c_str(), (out_dir / "load.csv").c_str(),
                (out_dir / "price.csv").c_str());
    std::printf("pv: %d days, %.6f kWh/a (peak %.6f kW)\n", year.pv.days(), year.pv.energy_kwh(),
                d.pv_rated_kwp);
    std::printf("load: %.6f kWh/a   price mean: %.6f EUR/kWh\n", year.load.energy_kwh(),
                year.import_price.mean());
    return 0;
}

int run_dispatch(const DataOpts& d, const DeviceOpts& dev, const std::string& scenario_spec,
                 std::optional<int> day_index, const fs::path& out_dir) {
    const Scenario scenario = resolve_scenario(scenario_spec);
    LoadedYear year = load_year(d, scenario);
    const DeviceParams devices = make_devices(dev, d.pv_rated_kwp);
    const TimeSeries pv = scale_pv(year.pv, d.pv_rated_kwp, devices.pv_peak_kw);
    fs::create_directories(out_dir);

    if (day_index) {
        if (*day_index < 0 || *day_index >= pv.days()) {
            throw ConfigError("--day out of range [0, " + std::to_string(pv.days()) + ")");
        }
        // Chain SOC through the preceding days so the requested day matches
        // its position in the annual schedule.
        double soc = 0.5 * devices.bes_capacity_kwh;
        DaySchedule schedule;
        for (int di = 0; di <= *day_index; ++di) {
            DayInputs in;
            in.pv = day(pv, di);
            in.demand = day(year.demand, di);
            in.import_price = day(year.import_price, di);
            in.export_price = day(year.export_price, di);
            in.initial_soc_kwh = soc;
            in.step_hours = pv.step_hours();
            schedule = solve_day(in, devices);
            soc = schedule.soc_kwh.back();
        }
        const fs::path file = out_dir / ("day_" + std::to_string(*day_index) + ".csv");
        write_schedule_csv(schedule, file);
        std::printf("day %d: objective %.6f EUR  ->  %s\n", *day_index, schedule.objective_eur,
                    file.c_str());
        return 0;
    }

    const AnnualSchedule annual =
        annual_dispatch(pv, year.demand, year.import_price, year.export_price, devices);
    const fs::path file = out_dir / "schedule.csv";
    write_schedule_csv(annual, file);
    double objective = 0.0;
    for (const DaySchedule& s : annual.days) objective += s.objective_eur;
    const auto [f_e, f_s] = energy_ratios(annual.totals);
    std::printf("annual dispatch: %d days  ->  %s\n", static_cast<int>(annual.days.size()),
                file.c_str());
    std::printf("objective %.6f EUR/a   E_pv %.6f kWh   E_d %.6f kWh\n", objective,
                annual.totals.e_pv_kwh, annual.totals.e_demand_kwh);
    std::printf("export ratio %.6f   self-sufficiency %.6f\n", f_e, f_s);
    return 0;
}

int run_flex(const DataOpts& d, const DeviceOpts& dev, const std::string& scenario_spec,
             const FlexRemuneration& remun, const fs::path& out_dir) {
    const Scenario scenario = resolve_scenario(scenario_spec);
    LoadedYear year = load_year(d, scenario);
    const DeviceParams devices = make_devices(dev, d.pv_rated_kwp);
    const TimeSeries pv = scale_pv(year.pv, d.pv_rated_kwp, devices.pv_peak_kw);
    fs::create_directories(out_dir);

    const AnnualSchedule annual =
        annual_dispatch(pv, year.demand, year.import_price, year.export_price, devices);
    const FlexProfile profile = annual_flex(annual, pv, devices);
    const fs::path file = out_dir / "flexibility.csv";
    write_flex_csv(profile, file);
    const double flex_energy = average_flex_energy(profile);
    const AmepResult res = evaluate_amep(annual.totals, devices, scenario, flex_energy, remun);
    std::printf("flexibility profile: %zu steps  ->  %s\n", profile.steps(), file.c_str());
    std::printf("average flex energy %.6f kWh   flex revenue %.6f EUR/a\n", flex_energy,
                res.flex_revenue_eur);
    std::printf("amep %.6f EUR/kWh (capex %.6f + import %.6f - pv %.6f - flex %.6f)\n",
                res.amep_eur_per_kwh, res.annualized_capex_eur, res.import_cost_eur,
                res.pv_revenue_eur, res.flex_revenue_eur);
    return 0;
}

int run_sweep_sizing(const DataOpts& d, const std::string& scenario_spec, const SizingGrid& grid,
                     const FlexRemuneration& remun, const SweepOptions& options,
                     const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const std::vector<Scenario> scenarios = resolve_scenarios(scenario_spec, nullptr);
    std::vector<SweepResult> results;
    for (const Scenario& scenario : scenarios) {
        LoadedYear year = load_year(d, scenario);
        SweepData data{std::move(year.pv), d.pv_rated_kwp, std::move(year.demand),
                       std::move(year.import_price), std::move(year.export_price)};
        results.push_back(sweep_sizing(grid, scenario, data, remun, options));
        const SweepResult& r = results.back();
        const fs::path file = scenarios.size() == 1
                                  ? out_dir / "sizing_sweep.csv"
                                  : out_dir / ("sizing_sweep_" + scenario.name + ".csv");
        write_sizing_csv(r, file);
        const SweepCell& best = r.cells[r.optimum];
        std::printf("scenario %s: %zu cells  ->  %s\n", scenario.name.c_str(), r.cells.size(),
                    file.c_str());
        std::printf("optimum pv %.6f kWp, bes %.6f kWh, amep %.6f EUR/kWh\n", best.pv_kwp,
                    best.bes_kwh, best.amep);
    }
    std::vector<std::pair<const SweepResult*, const Scenario*>> runs;
    for (std::size_t i = 0; i < scenarios.size(); ++i) runs.push_back({&results[i], &scenarios[i]});
    write_summary(runs, out_dir / "summary.txt");
    return 0;
}

int run_sweep_flex(const DataOpts& d, const std::string& scenario_spec, const SizingGrid& grid,
                   const FlexGrid& flex_grid, const SweepOptions& options,
                   const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Scenario scenario = resolve_scenario(scenario_spec);
    LoadedYear year = load_year(d, scenario);
    SweepData data{std::move(year.pv), d.pv_rated_kwp, std::move(year.demand),
                   std::move(year.import_price), std::move(year.export_price)};
    const FlexSweepResult result = sweep_flex(flex_grid, grid, scenario, data, options);
    const fs::path file = out_dir / "flex_sweep.csv";
    write_flex_sweep_csv(result, file);
    write_summary({{&result.base, &scenario}}, out_dir / "summary.txt");
    const FlexSweepRow& corner = result.rows.back();
    std::printf("flex sweep: %zu cells  ->  %s\n", result.rows.size(), file.c_str());
    std::printf("zero-flex optimum amep %.6f; corner (%d calls, %.2f EUR/kWh) amep %.6f\n",
                result.base.cells[result.base.optimum].amep, corner.calls, corner.price,
                corner.optimum_amep);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PV-battery dispatch, flexibility and sizing-sensitivity toolkit"};
    app.require_subcommand(1);

    DataOpts data;
    DeviceOpts devices;
    std::string scenario_spec = "present";
    std::string out_dir = "out";
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    int day_index = -1;
    double flex_price = 0.0;
    int flex_calls = 0;
    std::string pv_axis = "0:2.5:0.25";
    std::string bes_axis = "0:2.5:0.25";
    std::string calls_axis = "0:365:73";
    std::string price_axis = "0:0.16:0.02";

    CLI::App* gen = app.add_subcommand("gen-data", "write a deterministic synthetic year of CSVs");
    gen->add_option("--seed", data.seed, "random seed");
    gen->add_option("--demand", data.demand_kwh, "annual demand in kWh")->check(CLI::PositiveNumber);
    gen->add_option("--pv-peak", data.pv_rated_kwp, "PV peak power in kWp")
        ->check(CLI::PositiveNumber);
    gen->add_option("--out", out_dir, "output directory");

    CLI::App* dispatch = app.add_subcommand("dispatch", "cost-optimal daily/annual dispatch");
    add_data_options(dispatch, data);
    add_device_options(dispatch, devices);
    dispatch->add_option("--scenario", scenario_spec, "present, longterm, or a scenario file");
    dispatch->add_option("--day", day_index, "solve a single day (index into the year)");
    dispatch->add_option("--out", out_dir, "output directory");

    CLI::App* flex = app.add_subcommand("flex", "per-step flexibility of the optimal schedule");
    add_data_options(flex, data);
    add_device_options(flex, devices);
    flex->add_option("--scenario", scenario_spec, "present, longterm, or a scenario file");
    flex->add_option("--flex-price", flex_price, "flexibility price in EUR/kWh")
        ->check(CLI::NonNegativeNumber);
    flex->add_option("--flex-calls", flex_calls, "flexibility calls per year")
        ->check(CLI::Range(0, 365));
    flex->add_option("--out", out_dir, "output directory");

    CLI::App* sweep_s = app.add_subcommand("sweep-sizing", "AMEP surface over PV/BES sizes");
    add_data_options(sweep_s, data);
    sweep_s->add_option("--scenario", scenario_spec, "present, longterm, both, or a scenario file");
    sweep_s->add_option("--pv-axis", pv_axis, "normalized PV axis start:stop:step");
    sweep_s->add_option("--bes-axis", bes_axis, "normalized BES axis start:stop:step");
    sweep_s->add_option("--flex-price", flex_price, "flexibility price in EUR/kWh")
        ->check(CLI::NonNegativeNumber);
    sweep_s->add_option("--flex-calls", flex_calls, "flexibility calls per year")
        ->check(CLI::Range(0, 365));
    sweep_s->add_option("--workers", workers, "worker thread count")->check(CLI::PositiveNumber);
    sweep_s->add_option("--out", out_dir, "output directory");

    CLI::App* sweep_f = app.add_subcommand("sweep-flex",
                                           "optimum AMEP over flexibility calls and price");
    add_data_options(sweep_f, data);
    sweep_f->add_option("--scenario", scenario_spec, "present, longterm, or a scenario file");
    sweep_f->add_option("--pv-axis", pv_axis, "normalized PV axis start:stop:step");
    sweep_f->add_option("--bes-axis", bes_axis, "normalized BES axis start:stop:step");
    sweep_f->add_option("--flex-calls", calls_axis, "calls axis start:stop:step");
    sweep_f->add_option("--flex-price", price_axis, "price axis start:stop:step");
    sweep_f->add_option("--workers", workers, "worker thread count")->check(CLI::PositiveNumber);
    sweep_f->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);

        data.demand_given = false;
        for (CLI::App* cmd : {dispatch, flex, sweep_s, sweep_f}) {
            if (cmd->parsed() && cmd->count("--demand") > 0) data.demand_given = true;
        }

        if (*gen) return run_gen_data(data, out_dir);
        if (*dispatch) {
            std::optional<int> day;
            if (dispatch->count("--day") > 0) day = day_index;
            return run_dispatch(data, devices, scenario_spec, day, out_dir);
        }
        if (*flex) {
            FlexRemuneration remun{flex_price, flex_calls};
            remun.validate();
            return run_flex(data, devices, scenario_spec, remun, out_dir);
        }
        if (*sweep_s) {
            SizingGrid grid{parse_axis(pv_axis), parse_axis(bes_axis)};
            FlexRemuneration remun{flex_price, flex_calls};
            remun.validate();
            SweepOptions options;
            options.workers = workers;
            return run_sweep_sizing(data, scenario_spec, grid, remun, options, out_dir);
        }
        if (*sweep_f) {
            SizingGrid grid{parse_axis(pv_axis), parse_axis(bes_axis)};
            FlexGrid fgrid;
            for (double v : parse_axis(calls_axis)) {
                fgrid.calls_axis.push_back(static_cast<int>(v + 0.5));
            }
            fgrid.price_axis = parse_axis(price_axis);
            SweepOptions options;
            options.workers = workers;
            return run_sweep_flex(data, scenario_spec, grid, fgrid, options, out_dir);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
