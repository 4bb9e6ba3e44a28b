#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pvflex/economics.hpp"
#include "pvflex/errors.hpp"
#include "pvflex/flexibility.hpp"
#include "pvflex/scheduler.hpp"
#include "pvflex/timeseries.hpp"

namespace pvflex {

// Runs fn(0..total-1) across `workers` threads. Work items are independent;
// results must be written to per-index slots. First exception wins and is
// rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t total, int workers, Fn&& fn) {
    if (workers <= 1 || total <= 1) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        std::size_t i;
        while ((i = next.fetch_add(1)) < total) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min<std::size_t>(static_cast<std::size_t>(workers), total);
    pool.reserve(count);
    for (int w = 0; w < count; ++w) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Normalized sizing axes: PV in kWp per MWh of annual demand, battery in kWh
// per kWh of daily mean demand. Both axes start at zero.
struct SizingGrid {
    std::vector<double> pv_axis;
    std::vector<double> bes_axis;

    static SizingGrid regular(double stop = 2.5, double step = 0.25) {
        SizingGrid g;
        for (double v = 0.0; v <= stop + 1e-9; v += step) {
            g.pv_axis.push_back(v);
            g.bes_axis.push_back(v);
        }
        return g;
    }

    void validate() const {
        for (const std::vector<double>* axis : {&pv_axis, &bes_axis}) {
            if (axis->empty()) throw ConfigError("sizing grid axis is empty");
            if (axis->front() != 0.0) throw ConfigError("sizing grid axes must include 0");
            for (std::size_t i = 0; i < axis->size(); ++i) {
                if ((*axis)[i] < 0.0) throw ConfigError("sizing grid axes must be non-negative");
                if (i > 0 && (*axis)[i] <= (*axis)[i - 1]) {
                    throw ConfigError("sizing grid axes must be strictly increasing");
                }
            }
        }
    }
};

inline constexpr double kMaxFlexPrice = 0.16; // EUR/kWh, gas-turbine LCOE ceiling

// Flexibility remuneration axes: calls per year and price per kWh.
struct FlexGrid {
    std::vector<int> calls_axis;
    std::vector<double> price_axis;

    static FlexGrid regular() {
        FlexGrid g;
        for (int c = 0; c <= 365; c += 73) g.calls_axis.push_back(c);
        for (double p = 0.0; p <= kMaxFlexPrice + 1e-9; p += 0.02) g.price_axis.push_back(p);
        return g;
    }

    void validate() const {
        if (calls_axis.empty() || price_axis.empty()) throw ConfigError("flex grid axis is empty");
        for (std::size_t i = 0; i < calls_axis.size(); ++i) {
            if (calls_axis[i] < 0 || calls_axis[i] > 365) {
                throw ConfigError("flexibility calls must lie in [0, 365]");
            }
            if (i > 0 && calls_axis[i] <= calls_axis[i - 1]) {
                throw ConfigError("flex grid axes must be strictly increasing");
            }
        }
        for (std::size_t i = 0; i < price_axis.size(); ++i) {
            if (price_axis[i] < 0.0 || price_axis[i] > kMaxFlexPrice + 1e-9) {
                throw ConfigError("flexibility price must lie in [0, 0.16]");
            }
            if (i > 0 && price_axis[i] <= price_axis[i - 1]) {
                throw ConfigError("flex grid axes must be strictly increasing");
            }
        }
    }
};

// Input year for the sweeps. pv is the generation trace of a reference
// installation rated pv_rated_kwp; cells rescale it linearly.
struct SweepData {
    TimeSeries pv;
    double pv_rated_kwp;
    TimeSeries demand;
    TimeSeries import_price;
    TimeSeries export_price;
};

enum class CellStatus { ok, optimum, error };

struct SweepCell {
    double pv_norm = 0.0;
    double bes_norm = 0.0;
    double pv_kwp = 0.0;
    double bes_kwh = 0.0;
    CellStatus status = CellStatus::error;
    std::string error;
    // results
    double amep = 0.0;
    double flex_energy_kwh = 0.0;
    double export_ratio = 0.0;
    double self_sufficiency = 0.0;
    // retained for flexibility re-pricing
    double capex_eur = 0.0;
    double import_cost_eur = 0.0;
    double pv_revenue_eur = 0.0;
    double lcoe = 0.0;
    double demand_kwh = 0.0;
};

struct SweepResult {
    std::string scenario_name;
    SizingGrid grid;
    FlexRemuneration remuneration;
    std::vector<SweepCell> cells; // pv-major: index = i_pv * bes_axis.size() + i_bes
    std::size_t optimum = 0;
    std::string generated_at; // metadata only, never written to output files

    const SweepCell& cell(std::size_t i_pv, std::size_t i_bes) const {
        return cells[i_pv * grid.bes_axis.size() + i_bes];
    }
};

struct SweepOptions {
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    double eta_ch = 0.95;
    double eta_dh = 0.95;
    BranchOptions branch;
};

// AMEP of a finished cell under a given remuneration. Offers below the cell's
// generation LCOE earn nothing (the prosumer would sell at a loss).
inline double cell_amep(const SweepCell& cell, const FlexRemuneration& remun) {
    const bool below_lcoe = cell.lcoe > 0.0 && remun.price_per_kwh < cell.lcoe;
    const double flex_rev = below_lcoe ? 0.0 : flexibility_revenue(cell.flex_energy_kwh, remun);
    return (cell.capex_eur + cell.import_cost_eur - cell.pv_revenue_eur - flex_rev) /
           cell.demand_kwh;
}

// Least-AMEP cell; ties resolve to lower capex, then lower PV, then lower BES.
// Kept generic so the flexibility sweep can re-price cells without re-solving.
template <typename AmepOf>
std::size_t argmin_cell(const std::vector<SweepCell>& cells, AmepOf&& amep_of) {
    std::size_t best = cells.size();
    double best_amep = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].status == CellStatus::error) continue;
        const double a = amep_of(cells[i]);
        if (best == cells.size() || a < best_amep ||
            (a == best_amep &&
             (cells[i].capex_eur < cells[best].capex_eur ||
              (cells[i].capex_eur == cells[best].capex_eur &&
               (cells[i].pv_norm < cells[best].pv_norm ||
                (cells[i].pv_norm == cells[best].pv_norm &&
                 cells[i].bes_norm < cells[best].bes_norm)))))) {
            best = i;
            best_amep = a;
        }
    }
    if (best == cells.size()) throw SolverError("sweep produced no valid cell");
    return best;
}

inline std::size_t find_optimum(const SweepResult& result) {
    return argmin_cell(result.cells,
                       [&](const SweepCell& c) { return cell_amep(c, result.remuneration); });
}

namespace detail {

inline std::string utc_now_string() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline SweepCell evaluate_cell(double pv_norm, double bes_norm, const Scenario& scenario,
                               const SweepData& data, const FlexRemuneration& remun,
                               const SweepOptions& opt) {
    SweepCell cell;
    cell.pv_norm = pv_norm;
    cell.bes_norm = bes_norm;
    const double demand_kwh = data.demand.energy_kwh();
    cell.demand_kwh = demand_kwh;
    cell.pv_kwp = pv_norm * demand_kwh / 1000.0; // axis is kWp per MWh of demand
    cell.bes_kwh = bes_norm * demand_kwh / 365.0; // axis is kWh per daily mean demand
    try {
        if (cell.pv_kwp > 0.0 && data.pv_rated_kwp <= 0.0) {
            throw ConfigError("sweep data must state the rated kWp of the PV trace");
        }
        std::vector<double> pv_values = data.pv.values();
        const double factor = data.pv_rated_kwp > 0.0 ? cell.pv_kwp / data.pv_rated_kwp : 0.0;
        for (double& v : pv_values) v *= factor;
        const TimeSeries pv(std::move(pv_values), SeriesKind::power, data.pv.step_minutes());
        const DeviceParams devices =
            DeviceParams::battery_1c(cell.pv_kwp, cell.bes_kwh, opt.eta_ch, opt.eta_dh);
        const AnnualSchedule annual = annual_dispatch(pv, data.demand, data.import_price,
                                                      data.export_price, devices, opt.branch);
        const FlexProfile flex = annual_flex(annual, pv, devices);
        cell.flex_energy_kwh = average_flex_energy(flex);
        const auto [f_e, f_s] = energy_ratios(annual.totals);
        cell.export_ratio = f_e;
        cell.self_sufficiency = f_s;
        cell.capex_eur = annualized_capex(devices.pv_peak_kw, scenario.pv_cost_per_kwp, scenario) +
                         annualized_capex(devices.bes_capacity_kwh, scenario.bes_cost_per_kwh,
                                          scenario);
        cell.import_cost_eur = import_cost(demand_kwh, scenario.mean_import_price, f_s);
        cell.pv_revenue_eur =
            feed_in_revenue(annual.totals.e_pv_kwh, scenario.feed_in_tariff, f_e);
        cell.lcoe = system_lcoe(cell.capex_eur, annual.totals.e_pv_kwh);
        cell.amep = cell_amep(cell, remun);
        cell.status = CellStatus::ok;
    } catch (const std::exception& e) {
        cell.status = CellStatus::error;
        cell.error = e.what();
    }
    return cell;
}

} // namespace detail

// AMEP/flexibility surface over the sizing grid. Cells run independently
// across the worker pool; assembly is order-independent.
inline SweepResult sweep_sizing(const SizingGrid& grid, const Scenario& scenario,
                                const SweepData& data, const FlexRemuneration& remun = {},
                                const SweepOptions& options = {}) {
    grid.validate();
    scenario.validate();
    remun.validate();
    SweepResult result;
    result.scenario_name = scenario.name;
    result.grid = grid;
    result.remuneration = remun;
    result.generated_at = detail::utc_now_string();
    const std::size_t n_pv = grid.pv_axis.size();
    const std::size_t n_bes = grid.bes_axis.size();
    result.cells.assign(n_pv * n_bes, SweepCell{});
    parallel_for(n_pv * n_bes, options.workers, [&](std::size_t i) {
        const double pv_norm = grid.pv_axis[i / n_bes];
        const double bes_norm = grid.bes_axis[i % n_bes];
        result.cells[i] = detail::evaluate_cell(pv_norm, bes_norm, scenario, data, remun, options);
    });
    result.optimum = find_optimum(result);
    result.cells[result.optimum].status = CellStatus::optimum;
    return result;
}

// Average flexibility energy per sizing cell (the Figure-3 style surface).
inline std::vector<double> flex_energy_surface(const SizingGrid& grid, const Scenario& scenario,
                                               const SweepData& data,
                                               const SweepOptions& options = {}) {
    const SweepResult result = sweep_sizing(grid, scenario, data, FlexRemuneration{}, options);
    std::vector<double> surface(result.cells.size());
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        if (result.cells[i].status == CellStatus::error) {
            throw SolverError("flex surface cell failed: " + result.cells[i].error);
        }
        surface[i] = result.cells[i].flex_energy_kwh;
    }
    return surface;
}

struct FlexSweepRow {
    int calls = 0;
    double price = 0.0;
    double optimum_amep = 0.0;
    double optimum_pv_kwp = 0.0;
    double optimum_bes_kwh = 0.0;
    std::size_t optimum_index = 0;
};

struct FlexSweepResult {
    SweepResult base; // the zero-remuneration sizing sweep all cells derive from
    FlexGrid grid;
    std::vector<FlexSweepRow> rows; // calls-major: index = i_calls * price_axis.size() + i_price
};

// Optimal sizing and AMEP per (calls, price) cell, derived from an existing
// zero-remuneration sizing sweep. The dispatch baseline does not depend on
// the remuneration, so each cell is re-priced through the same cell_amep used
// by sweep_sizing.
inline FlexSweepResult sweep_flex(const FlexGrid& flex_grid, SweepResult base) {
    flex_grid.validate();
    FlexSweepResult result;
    result.base = std::move(base);
    result.grid = flex_grid;
    result.rows.reserve(flex_grid.calls_axis.size() * flex_grid.price_axis.size());
    for (int calls : flex_grid.calls_axis) {
        for (double price : flex_grid.price_axis) {
            const FlexRemuneration remun{price, calls};
            const std::size_t best = argmin_cell(
                result.base.cells, [&](const SweepCell& c) { return cell_amep(c, remun); });
            FlexSweepRow row;
            row.calls = calls;
            row.price = price;
            row.optimum_amep = cell_amep(result.base.cells[best], remun);
            row.optimum_pv_kwp = result.base.cells[best].pv_kwp;
            row.optimum_bes_kwh = result.base.cells[best].bes_kwh;
            row.optimum_index = best;
            result.rows.push_back(row);
        }
    }
    return result;
}

inline FlexSweepResult sweep_flex(const FlexGrid& flex_grid, const SizingGrid& sizing_grid,
                                  const Scenario& scenario, const SweepData& data,
                                  const SweepOptions& options = {}) {
    return sweep_flex(flex_grid, sweep_sizing(sizing_grid, scenario, data, FlexRemuneration{},
                                              options));
}

// --- output files -------------------------------------------------------------

inline const char* to_string(CellStatus s) {
    switch (s) {
        case CellStatus::ok: return "ok";
        case CellStatus::optimum: return "optimum";
        default: return "error";
    }
}

inline void write_sizing_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write sweep file: " + path.string());
    out << "pv_norm,bes_norm,pv_kwp,bes_kwh,amep,f_e,f_s,flex_energy_kwh,status\n";
    char buf[256];
    for (const SweepCell& c : result.cells) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%s\n", c.pv_norm,
                      c.bes_norm, c.pv_kwp, c.bes_kwh, c.amep, c.export_ratio, c.self_sufficiency,
                      c.flex_energy_kwh, to_string(c.status));
        out << buf;
    }
    if (!out) throw DataError("write failed: " + path.string());
}

inline void write_flex_sweep_csv(const FlexSweepResult& result,
                                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write sweep file: " + path.string());
    out << "calls,flex_price,opt_amep,opt_pv_kwp,opt_bes_kwh\n";
    char buf[192];
    for (const FlexSweepRow& row : result.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", row.calls, row.price,
                      row.optimum_amep, row.optimum_pv_kwp, row.optimum_bes_kwh);
        out << buf;
    }
    if (!out) throw DataError("write failed: " + path.string());
}

// Optimum and profitability verdict per scenario sweep.
inline void write_summary(const std::vector<std::pair<const SweepResult*, const Scenario*>>& runs,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write summary file: " + path.string());
    char buf[512];
    for (const auto& [result, scenario] : runs) {
        const SweepCell& best = result->cells[result->optimum];
        std::snprintf(buf, sizeof(buf),
                      "scenario %s: optimum pv %.6f kWp (norm %.2f), bes %.6f kWh (norm %.2f), "
                      "amep %.6f EUR/kWh, f_e %.6f, f_s %.6f\n",
                      result->scenario_name.c_str(), best.pv_kwp, best.pv_norm, best.bes_kwh,
                      best.bes_norm, best.amep, best.export_ratio, best.self_sufficiency);
        out << buf;
        if (best.amep <= scenario->mean_import_price) {
            std::snprintf(buf, sizeof(buf),
                          "scenario %s: profitable (optimum amep %.6f <= import price %.6f)\n",
                          result->scenario_name.c_str(), best.amep, scenario->mean_import_price);
        } else {
            std::snprintf(buf, sizeof(buf),
                          "scenario %s: grid-only optimal (optimum amep %.6f > import price %.6f)\n",
                          result->scenario_name.c_str(), best.amep, scenario->mean_import_price);
        }
        out << buf;
    }
    if (!out) throw DataError("write failed: " + path.string());
}

} // namespace pvflex
