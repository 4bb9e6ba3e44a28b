// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. argv[1] is the path to the CLI binary (used by the determinism
// criterion); everything else runs in-process against the library.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pvflex/pvflex.hpp"

#include "test_support.hpp"

using namespace pvflex;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- criterion 1: oracle equivalence -----------------------------------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    testsup::Rng rng(42);
    double max_diff = 0.0;
    int branched = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const testsup::Instance ins = testsup::random_grid_instance(rng, trial % 3 == 2);
        const DaySchedule s = solve_day(ins.inputs(), ins.devices);
        const double oracle = testsup::oracle_best_cost(ins);
        max_diff = std::max(max_diff, std::fabs(s.objective_eur - oracle));
        if (!solve_lp_relaxation(ins.inputs(), ins.devices).noncomplementary_steps.empty()) {
            ++branched;
        }
    }
    const double elapsed = seconds_since(t0);
    report(1, max_diff <= 1e-6 && elapsed < 10.0,
           fmt("dispatch oracle equivalence: 200 instances, max |obj diff| %.2e EUR, "
               "%d needed branching, %.1f s (< 10 s)",
               max_diff, branched, elapsed));
}

// --- criterion 2: feasibility suite -------------------------------------------

void criterion_2(const SyntheticYear& year, const TimeSeries& price_present,
                 const TimeSeries& feed_in_present) {
    const auto t0 = std::chrono::steady_clock::now();
    testsup::Rng rng(7);
    double worst_balance = 0.0, worst_soc = 0.0, worst_box = 0.0;
    bool complementary = true;
    for (int k = 0; k < 5; ++k) {
        const double pv_kwp = rng.uniform(0.0, 10.0);
        const double bes_kwh = rng.uniform(0.0, 25.0);
        std::vector<double> pv_values = year.pv.values();
        for (double& v : pv_values) v *= pv_kwp / 3.0;
        const TimeSeries pv(pv_values, SeriesKind::power);
        const DeviceParams dev = DeviceParams::battery_1c(pv_kwp, bes_kwh);
        const AnnualSchedule annual =
            annual_dispatch(pv, year.load, price_present, feed_in_present, dev);
        double soc = 0.5 * dev.bes_capacity_kwh;
        for (int d = 0; d < pv.days(); ++d) {
            DayInputs in;
            in.pv = day(pv, d);
            in.demand = day(year.load, d);
            in.import_price = day(price_present, d);
            in.export_price = day(feed_in_present, d);
            in.initial_soc_kwh = soc;
            in.step_hours = 0.25;
            const auto rep = testsup::check_schedule(in, dev, annual.days[d]);
            worst_balance = std::max(worst_balance, rep.max_balance_residual);
            worst_soc = std::max(worst_soc, rep.max_soc_residual);
            worst_box = std::max(worst_box, rep.max_box_violation);
            complementary = complementary && rep.complementary;
            soc = std::clamp(annual.days[d].soc_kwh.back(), 0.0, dev.bes_capacity_kwh);
        }
    }
    const double elapsed = seconds_since(t0);
    report(2,
           worst_balance <= 1e-6 && worst_soc <= 1e-9 && worst_box <= 1e-6 && complementary &&
               elapsed < 60.0,
           fmt("feasibility suite: 5 sizings x 365 days, max balance %.1e kW, max SOC "
               "recursion %.1e kWh, max box violation %.1e, complementarity %s, %.1f s (< 60 s)",
               worst_balance, worst_soc, worst_box, complementary ? "exact" : "VIOLATED",
               elapsed));
}

// --- criterion 3: degenerate AMEP identity ------------------------------------

void criterion_3() {
    bool ok = true;
    std::string detail;
    for (const Scenario& scenario : {scenario_present(), scenario_longterm()}) {
        AnnualTotals totals;
        totals.e_demand_kwh = 4000.0;
        const AmepResult r = evaluate_amep(totals, DeviceParams{}, scenario, 0.0, {0.0, 0});
        const double err = std::fabs(r.amep_eur_per_kwh - scenario.mean_import_price);
        ok = ok && err <= 1e-12;
        detail += fmt("%s %.6f (err %.1e) ", scenario.name.c_str(), r.amep_eur_per_kwh, err);
    }
    report(3, ok, "degenerate AMEP equals the mean import price: " + detail);
}

// --- criterion 4: annuity ------------------------------------------------------

void criterion_4() {
    const double alpha = annuity_factor(0.035, 20);
    double pv = 0.0;
    for (int k = 1; k <= 20; ++k) pv += std::pow(1.035, -k);
    const double unit = alpha * pv;
    const bool ok = std::fabs(alpha - 0.0703611) <= 1e-6 && std::fabs(unit - 1.0) <= 1e-12;
    report(4, ok,
           fmt("annuity: alpha(0.035, 20) = %.7f (target 0.0703611 +- 1e-6), alpha x PV(20) "
               "= 1 %+.1e",
               alpha, unit - 1.0));
}

// --- criterion 5: flexibility invariants ---------------------------------------

void criterion_5(const SyntheticYear& year, const TimeSeries& price_present,
                 const TimeSeries& feed_in_present) {
    const auto t0 = std::chrono::steady_clock::now();
    const DeviceParams dev = DeviceParams::battery_1c(3.0, 8.0);
    const AnnualSchedule annual =
        annual_dispatch(year.pv, year.load, price_present, feed_in_present, dev);
    const FlexProfile profile = annual_flex(annual, year.pv, dev);

    bool soc_ok = true;
    for (std::size_t i = 0; i < profile.steps() && soc_ok; ++i) {
        const int d = static_cast<int>(i) / 96;
        const int t = static_cast<int>(i) % 96;
        for (const FlexSample* s : {&profile.bes_negative[i], &profile.bes_positive[i]}) {
            const double delta = s->sign == FlexSign::negative
                                     ? s->power_kw * dev.eta_ch * 0.25
                                     : -s->power_kw / dev.eta_dh * 0.25;
            for (int k = 1; k <= s->duration_steps; ++k) {
                const double soc = annual.days[d].soc_kwh[t + k - 1] + k * delta;
                if (soc < -1e-9 || soc > dev.bes_capacity_kwh + 1e-9) {
                    soc_ok = false;
                    break;
                }
            }
        }
    }

    testsup::Rng rng(99);
    bool minimal_ok = true;
    for (int n = 0; n < 10000 && minimal_ok; ++n) {
        const std::size_t i = rng.next() % profile.steps();
        const int d = static_cast<int>(i) / 96;
        const int t = static_cast<int>(i) % 96;
        const DaySchedule& sched = annual.days[d];
        for (const FlexSample* s : {&profile.bes_negative[i], &profile.bes_positive[i]}) {
            const int dur = s->duration_steps;
            if (t + dur >= 96) continue;
            const std::vector<double> trace = s->sign == FlexSign::negative
                                                  ? bes_negative_flex_power(sched, dev)
                                                  : bes_positive_flex_power(sched, dev);
            const bool power_violates = trace[t + dur] < trace[t] - 1e-9;
            const double delta = s->sign == FlexSign::negative
                                     ? s->power_kw * dev.eta_ch * 0.25
                                     : -s->power_kw / dev.eta_dh * 0.25;
            const double soc_next = sched.soc_kwh[t + dur] + (dur + 1) * delta;
            const bool soc_violates = soc_next < -1e-9 || soc_next > dev.bes_capacity_kwh + 1e-9;
            if (!power_violates && !soc_violates) minimal_ok = false;
        }
    }
    const double elapsed = seconds_since(t0);
    report(5, soc_ok && minimal_ok && elapsed < 30.0,
           fmt("flexibility invariants: SOC superposition %s, duration minimality on 10000 "
               "sampled steps %s, %.1f s (< 30 s)",
               soc_ok ? "within bounds" : "VIOLATED", minimal_ok ? "holds" : "VIOLATED",
               elapsed));
}

// --- criteria 6-9 share the two full sweeps ------------------------------------

struct SweepBundle {
    SweepResult present;
    SweepResult longterm;
    double present_seconds = 0.0;
};

SweepBundle run_sweeps(const SyntheticYear& year) {
    SweepBundle bundle;
    SweepOptions options;
    options.workers = 4;
    const SizingGrid grid = SizingGrid::regular(); // 11 x 11
    for (const Scenario& scenario : {scenario_present(), scenario_longterm()}) {
        SweepData data{year.pv, 3.0, year.load,
                       scale_price_to_mean(year.import_price, scenario.mean_import_price),
                       constant_series(scenario.feed_in_tariff, year.pv.days(),
                                       SeriesKind::price)};
        const auto t0 = std::chrono::steady_clock::now();
        SweepResult r = sweep_sizing(grid, scenario, data, FlexRemuneration{}, options);
        if (scenario.name == "present") bundle.present_seconds = seconds_since(t0);
        if (scenario.name == "present") bundle.present = std::move(r);
        else bundle.longterm = std::move(r);
    }
    return bundle;
}

void criterion_6(const SweepBundle& bundle) {
    const SweepResult& r = bundle.present;
    const std::size_t n_pv = r.grid.pv_axis.size();
    const std::size_t n_bes = r.grid.bes_axis.size();
    const double tol = 1e-3; // kWh; absorbs numerically flat tails
    int bes_violations = 0, pv_violations = 0;
    for (std::size_t ip = 0; ip < n_pv; ++ip) {
        for (std::size_t ib = 1; ib < n_bes; ++ib) {
            if (r.cell(ip, ib).flex_energy_kwh < r.cell(ip, ib - 1).flex_energy_kwh - tol) {
                ++bes_violations;
            }
        }
    }
    for (std::size_t ib = 1; ib < n_bes; ++ib) { // fixed BES > 0 rows
        for (std::size_t ip = 1; ip < n_pv; ++ip) {
            if (r.cell(ip, ib).flex_energy_kwh > r.cell(ip - 1, ib).flex_energy_kwh + tol) {
                ++pv_violations;
            }
        }
    }
    report(6, bes_violations == 0 && pv_violations == 0,
           fmt("flex-energy surface: non-decreasing in BES (%d violations), non-increasing in "
               "PV for BES > 0 (%d violations) on the 11x11 grid",
               bes_violations, pv_violations));
}

void criterion_7(const SweepBundle& bundle) {
    const FlexGrid fgrid = FlexGrid::regular();
    const FlexSweepResult r = sweep_flex(fgrid, bundle.present);
    const std::size_t np = fgrid.price_axis.size();
    int violations = 0;
    for (std::size_t c = 0; c < fgrid.calls_axis.size(); ++c) {
        for (std::size_t p = 0; p < np; ++p) {
            if (p > 0 && r.rows[c * np + p].optimum_amep > r.rows[c * np + p - 1].optimum_amep) {
                ++violations;
            }
            if (c > 0 && r.rows[c * np + p].optimum_amep > r.rows[(c - 1) * np + p].optimum_amep) {
                ++violations;
            }
        }
    }
    bool zero_row_constant = true;
    const double base = r.rows[0].optimum_amep;
    for (std::size_t p = 0; p < np; ++p) {
        if (r.rows[p].optimum_amep != base) zero_row_constant = false;
    }
    report(7, violations == 0 && zero_row_constant,
           fmt("flex-sensitivity matrix: optimum AMEP non-increasing along both axes "
               "(%d violations), zero-call row %s",
               violations, zero_row_constant ? "constant" : "NOT CONSTANT"));
}

void criterion_8(const SweepBundle& bundle) {
    const SweepCell& p = bundle.present.cells[bundle.present.optimum];
    const SweepCell& l = bundle.longterm.cells[bundle.longterm.optimum];
    const bool contrast = p.pv_norm > l.pv_norm && p.bes_norm <= l.bes_norm;
    const bool band = p.amep >= 0.15 && p.amep <= 0.30;
    report(8, contrast && band,
           fmt("scenario contrast: present optimum (pv %.2f, bes %.2f, amep %.4f) vs long-term "
               "(pv %.2f, bes %.2f, amep %.4f); pv strictly larger: %s, bes <=: %s, amep in "
               "[0.15, 0.30]: %s",
               p.pv_norm, p.bes_norm, p.amep, l.pv_norm, l.bes_norm, l.amep,
               p.pv_norm > l.pv_norm ? "yes" : "NO", p.bes_norm <= l.bes_norm ? "yes" : "NO",
               band ? "yes" : "NO"));
}

void criterion_9(const SweepBundle& bundle, const SyntheticYear& year,
                 const TimeSeries& price_present, const TimeSeries& feed_in_present) {
    // Single-day solve time: a midsummer day with a large PV-battery system.
    std::vector<double> pv_values = year.pv.values();
    for (double& v : pv_values) v *= 10.0 / 3.0;
    const TimeSeries pv(pv_values, SeriesKind::power);
    const DeviceParams dev = DeviceParams::battery_1c(10.0, 25.0);
    DayInputs in;
    in.pv = day(pv, 180);
    in.demand = day(year.load, 180);
    in.import_price = day(price_present, 180);
    in.export_price = day(feed_in_present, 180);
    in.initial_soc_kwh = 0.5 * dev.bes_capacity_kwh;
    in.step_hours = 0.25;
    double best_ms = 1e9;
    for (int rep = 0; rep < 5; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const DaySchedule s = solve_day(in, dev);
        best_ms = std::min(best_ms, seconds_since(t0) * 1000.0);
        if (s.status != ScheduleStatus::optimal) best_ms = 1e9;
    }
    report(9, best_ms <= 50.0 && bundle.present_seconds <= 300.0,
           fmt("performance: one 96-step day %.2f ms (<= 50 ms), 11x11 sizing sweep %.0f s on "
               "4 workers (<= 300 s)",
               best_ms, bundle.present_seconds));
}

// --- criterion 10: CLI determinism ---------------------------------------------

void criterion_10(const std::string& cli) {
    const fs::path base = fs::temp_directory_path() / "pvflex_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);
    const std::string null = " > /dev/null 2>&1";

    struct Run {
        std::string args;
        std::vector<std::string> files;
    };
    const std::vector<Run> runs = {
        {"gen-data --seed 11 --demand 4000 --pv-peak 3", {"pv.csv", "load.csv", "price.csv"}},
        {"dispatch --synthetic --seed 11 --scenario present --bes-capacity 6 --day 42",
         {"day_42.csv"}},
        {"sweep-sizing --synthetic --seed 11 --scenario present --pv-axis 0:1:0.5 "
         "--bes-axis 0:1:0.5 --workers 4",
         {"sizing_sweep.csv", "summary.txt"}},
    };
    bool all_ok = true;
    std::string detail;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const fs::path a = base / ("a" + std::to_string(i));
        const fs::path b = base / ("b" + std::to_string(i));
        for (const fs::path& dir : {a, b}) {
            const std::string cmd = cli + " " + runs[i].args + " --out " + dir.string() + null;
            if (std::system(cmd.c_str()) != 0) {
                all_ok = false;
                detail += fmt("run %zu failed; ", i);
            }
        }
        for (const std::string& f : runs[i].files) {
            const std::string bytes_a = file_bytes(a / f);
            if (bytes_a.empty() || bytes_a != file_bytes(b / f)) {
                all_ok = false;
                detail += fmt("%s differs; ", f.c_str());
            }
        }
    }
    report(10, all_ok,
           "CLI determinism: gen-data, dispatch, sweep-sizing byte-identical across reruns" +
               (detail.empty() ? "" : " -- " + detail));
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "./tools/pvflex";

    std::printf("acceptance suite (synthetic year, seed 1, 4 MWh demand, 3 kWp reference PV)\n");
    const SyntheticYear year = synthetic_year(1, 4000.0, 3.0);
    const TimeSeries price_present = scale_price_to_mean(year.import_price, 0.319);
    const TimeSeries feed_in_present = constant_series(0.068, 365, SeriesKind::price);

    criterion_1();
    criterion_2(year, price_present, feed_in_present);
    criterion_3();
    criterion_4();
    criterion_5(year, price_present, feed_in_present);

    std::printf("... running the two 11x11 sizing sweeps\n");
    std::fflush(stdout);
    const SweepBundle bundle = run_sweeps(year);
    criterion_6(bundle);
    criterion_7(bundle);
    criterion_8(bundle);
    criterion_9(bundle, year, price_present, feed_in_present);
    criterion_10(cli);

    std::printf("%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
