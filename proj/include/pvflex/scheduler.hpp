#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "pvflex/errors.hpp"
#include "pvflex/simplex.hpp"
#include "pvflex/timeseries.hpp"

namespace pvflex {

// PV rating plus battery limits. Efficiencies default to 0.95 per direction
// (~0.90 round trip); power ratings default to 1C via battery_1c().
struct DeviceParams {
    double pv_peak_kw = 0.0;
    double bes_capacity_kwh = 0.0;
    double bes_charge_kw = 0.0;
    double bes_discharge_kw = 0.0;
    double eta_ch = 0.95;
    double eta_dh = 0.95;

    void validate() const {
        if (pv_peak_kw < 0.0 || bes_capacity_kwh < 0.0 || bes_charge_kw < 0.0 ||
            bes_discharge_kw < 0.0) {
            throw DataError("device parameters must be non-negative");
        }
        if (eta_ch <= 0.0 || eta_ch > 1.0 || eta_dh <= 0.0 || eta_dh > 1.0) {
            throw DataError("efficiencies must lie in (0, 1]");
        }
        if (bes_capacity_kwh == 0.0 && (bes_charge_kw > 0.0 || bes_discharge_kw > 0.0)) {
            throw DataError("zero battery capacity implies zero power limits");
        }
    }

    static DeviceParams battery_1c(double pv_peak_kw, double capacity_kwh, double eta_ch = 0.95,
                                   double eta_dh = 0.95) {
        DeviceParams p;
        p.pv_peak_kw = pv_peak_kw;
        p.bes_capacity_kwh = capacity_kwh;
        p.bes_charge_kw = capacity_kwh; // 1C: full charge/discharge in one hour
        p.bes_discharge_kw = capacity_kwh;
        p.eta_ch = eta_ch;
        p.eta_dh = eta_dh;
        p.validate();
        return p;
    }
};

struct DayInputs {
    DayView pv;
    DayView demand;
    DayView import_price;
    DayView export_price;
    double initial_soc_kwh = 0.0;
    double step_hours = 0.25;

    int steps() const { return static_cast<int>(pv.values.size()); }

    void validate(const DeviceParams& devices) const {
        const std::size_t n = pv.values.size();
        if (n == 0 || demand.values.size() != n || import_price.values.size() != n ||
            export_price.values.size() != n) {
            throw DataError("day inputs must be non-empty and of equal length");
        }
        if (step_hours <= 0.0) throw DataError("step_hours must be positive");
        if (initial_soc_kwh < 0.0 || initial_soc_kwh > devices.bes_capacity_kwh + 1e-12) {
            throw DataError("initial SOC outside [0, capacity]");
        }
        for (double v : pv.values) {
            if (v < 0.0) throw DataError("negative PV sample");
            if (v > devices.pv_peak_kw + 1e-6) {
                throw DataError("PV sample exceeds the rated peak power");
            }
        }
        for (double v : demand.values) {
            if (v < 0.0) throw DataError("negative demand sample");
        }
    }
};

enum class ScheduleStatus { optimal, infeasible };

// Optimal dispatch of one day. soc_kwh[t] is the stored energy at the END of
// step t; the recursion soc[t] = soc[t-1] + (ch*eta_ch - dh/eta_dh)*dt holds
// exactly as written (soc[-1] = initial SOC).
struct DaySchedule {
    std::vector<double> import_kw;
    std::vector<double> export_kw;
    std::vector<double> charge_kw;
    std::vector<double> discharge_kw;
    std::vector<double> soc_kwh;
    double objective_eur = 0.0;
    ScheduleStatus status = ScheduleStatus::infeasible;
    // Steps where the relaxation charges and discharges simultaneously
    // (> 1e-9 kW each). Empty on branch-and-bound results.
    std::vector<int> noncomplementary_steps;
};

struct BranchOptions {
    long node_budget = 100000; // LP solves before giving up
};

inline constexpr double kComplementarityTol = 1e-9;

namespace detail {

// Column layout of the day LP: imp | exp | ch | dh | soc (T columns each).
struct DayLpLayout {
    int steps;
    int imp(int t) const { return t; }
    int exp(int t) const { return steps + t; }
    int ch(int t) const { return 2 * steps + t; }
    int dh(int t) const { return 3 * steps + t; }
    int soc(int t) const { return 4 * steps + t; }
    int cols() const { return 5 * steps; }
    int rows() const { return 2 * steps; }
};

// Balance row per step, SOC recursion row per step. Import and export carry
// their physical caps (demand + charge limit, PV + discharge limit); any
// import/export overlap the relaxation exploits stays inside device limits.
inline LinearProgram build_day_lp(const DayInputs& in, const DeviceParams& dev) {
    const DayLpLayout lay{in.steps()};
    const int T = lay.steps;
    const double dt = in.step_hours;
    LinearProgram lp;
    lp.rows = lay.rows();
    lp.cols = lay.cols();
    lp.a.assign(static_cast<std::size_t>(lp.rows) * lp.cols, 0.0);
    lp.b.assign(lp.rows, 0.0);
    lp.c.assign(lp.cols, 0.0);
    lp.lower.assign(lp.cols, 0.0);
    lp.upper.assign(lp.cols, 0.0);
    for (int t = 0; t < T; ++t) {
        const double pv = in.pv.values[t];
        const double d = in.demand.values[t];
        // balance: imp - exp - ch + dh = d - pv
        lp.at(t, lay.imp(t)) = 1.0;
        lp.at(t, lay.exp(t)) = -1.0;
        lp.at(t, lay.ch(t)) = -1.0;
        lp.at(t, lay.dh(t)) = 1.0;
        lp.b[t] = d - pv;
        // soc recursion: soc_t - soc_{t-1} - ch*eta_ch*dt + dh/eta_dh*dt = [soc0]
        const int r = T + t;
        lp.at(r, lay.soc(t)) = 1.0;
        if (t > 0) lp.at(r, lay.soc(t - 1)) = -1.0;
        lp.at(r, lay.ch(t)) = -dev.eta_ch * dt;
        lp.at(r, lay.dh(t)) = dt / dev.eta_dh;
        lp.b[r] = t == 0 ? in.initial_soc_kwh : 0.0;

        lp.c[lay.imp(t)] = in.import_price.values[t] * dt;
        lp.c[lay.exp(t)] = -in.export_price.values[t] * dt;

        lp.upper[lay.imp(t)] = d + dev.bes_charge_kw;
        lp.upper[lay.exp(t)] = pv + dev.bes_discharge_kw;
        lp.upper[lay.ch(t)] = dev.bes_charge_kw;
        lp.upper[lay.dh(t)] = dev.bes_discharge_kw;
        lp.upper[lay.soc(t)] = dev.bes_capacity_kwh;
    }
    return lp;
}

// Primal-feasible start: battery idle, grid covers the net load, SOC flat.
inline std::vector<int> natural_basis(const DayInputs& in) {
    const DayLpLayout lay{in.steps()};
    std::vector<int> hint(lay.rows());
    for (int t = 0; t < lay.steps; ++t) {
        const double net = in.demand.values[t] - in.pv.values[t];
        hint[t] = net >= 0.0 ? lay.imp(t) : lay.exp(t);
        hint[lay.steps + t] = lay.soc(t);
    }
    return hint;
}

// Rebuilds a DaySchedule from raw LP values: snaps charge/discharge dust to
// exact zeros (balance-preserving), replays the SOC recursion, and reconciles
// import/export with the balance while keeping any relaxation overlap.
inline DaySchedule polish_solution(const DayInputs& in, const DeviceParams& dev,
                                   const std::vector<double>& x) {
    const DayLpLayout lay{in.steps()};
    const int T = lay.steps;
    const double dt = in.step_hours;
    DaySchedule s;
    s.status = ScheduleStatus::optimal;
    s.import_kw.resize(T);
    s.export_kw.resize(T);
    s.charge_kw.resize(T);
    s.discharge_kw.resize(T);
    s.soc_kwh.resize(T);
    double soc = in.initial_soc_kwh;
    double objective = 0.0;
    for (int t = 0; t < T; ++t) {
        double ch = std::clamp(x[lay.ch(t)], 0.0, dev.bes_charge_kw);
        double dh = std::clamp(x[lay.dh(t)], 0.0, dev.bes_discharge_kw);
        const double overlap = std::min(ch, dh);
        if (overlap > 0.0 && overlap <= kComplementarityTol) {
            ch -= overlap; // same net balance, removes the numerical overlap
            dh -= overlap;
            if (ch < dh) ch = 0.0;
            else dh = 0.0;
        }
        if (std::min(ch, dh) > kComplementarityTol) {
            s.noncomplementary_steps.push_back(t);
        }
        const double net = in.demand.values[t] + ch - in.pv.values[t] - dh;
        double pump = std::min(x[lay.imp(t)], x[lay.exp(t)]);
        if (pump < 1e-12) pump = 0.0;
        const double imp = std::max(net, 0.0) + pump;
        const double exp = std::max(-net, 0.0) + pump;
        soc = soc + (ch * dev.eta_ch - dh / dev.eta_dh) * dt;
        s.import_kw[t] = imp;
        s.export_kw[t] = exp;
        s.charge_kw[t] = ch;
        s.discharge_kw[t] = dh;
        s.soc_kwh[t] = soc;
        objective += (in.import_price.values[t] * imp - in.export_price.values[t] * exp) * dt;
    }
    s.objective_eur = objective;
    return s;
}

inline std::vector<int> flag_noncomplementary(const DayLpLayout& lay,
                                              const std::vector<double>& x) {
    std::vector<int> flagged;
    for (int t = 0; t < lay.steps; ++t) {
        if (x[lay.ch(t)] > kComplementarityTol && x[lay.dh(t)] > kComplementarityTol) {
            flagged.push_back(t);
        }
    }
    return flagged;
}

} // namespace detail

// Exact optimum of the day problem without the charge/discharge exclusivity
// condition. Steps violating it are reported in noncomplementary_steps.
inline DaySchedule solve_lp_relaxation(const DayInputs& inputs, const DeviceParams& devices) {
    devices.validate();
    inputs.validate(devices);
    LinearProgram lp = detail::build_day_lp(inputs, devices);
    BoundedSimplex simplex;
    const LpSolution sol = simplex.solve_hinted(lp, detail::natural_basis(inputs));
    if (sol.status == LpStatus::iteration_limit) {
        throw SolverError("day LP did not converge (iteration limit)");
    }
    if (sol.status != LpStatus::optimal) {
        throw SolverError("day LP reported infeasible; inputs were validated, so this is a bug");
    }
    return detail::polish_solution(inputs, devices, sol.x);
}

// Best-first branch-and-bound over {charge-only, discharge-only} fixings of
// the steps the relaxation leaves non-complementary. Exact MILP optimum.
inline DaySchedule branch_on_complementarity(const DayInputs& inputs, const DeviceParams& devices,
                                             const DaySchedule& lp_relaxation,
                                             const BranchOptions& options = {}) {
    if (lp_relaxation.noncomplementary_steps.empty()) {
        return lp_relaxation;
    }
    const detail::DayLpLayout lay{inputs.steps()};
    LinearProgram lp = detail::build_day_lp(inputs, devices);
    const std::vector<int> hint = detail::natural_basis(inputs);
    BoundedSimplex simplex;

    struct Node {
        double bound;
        long seq;
        std::vector<int> fixed_cols; // upper bound pinned to zero
        std::vector<double> x;
        std::vector<int> flagged;
    };
    struct NodeOrder {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound > b.bound;
            return a.seq > b.seq; // earlier child first: prefers the charge-off branch
        }
    };
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long seq = 0;
    long solves = 0;

    // Root comes from the relaxation the caller already computed.
    {
        Node root;
        root.bound = lp_relaxation.objective_eur;
        root.seq = seq++;
        root.flagged = lp_relaxation.noncomplementary_steps;
        root.x.resize(lp.cols);
        for (int t = 0; t < lay.steps; ++t) {
            root.x[lay.imp(t)] = lp_relaxation.import_kw[t];
            root.x[lay.exp(t)] = lp_relaxation.export_kw[t];
            root.x[lay.ch(t)] = lp_relaxation.charge_kw[t];
            root.x[lay.dh(t)] = lp_relaxation.discharge_kw[t];
            root.x[lay.soc(t)] = lp_relaxation.soc_kwh[t];
        }
        open.push(std::move(root));
    }

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (node.flagged.empty()) {
            // Best-first: the first complementary node is the MILP optimum.
            return detail::polish_solution(inputs, devices, node.x);
        }
        const int t = node.flagged.front();
        for (const int fix_col : {lay.ch(t), lay.dh(t)}) {
            if (solves++ >= options.node_budget) {
                throw SolverError("branch-and-bound node budget exceeded");
            }
            std::vector<int> fixed = node.fixed_cols;
            fixed.push_back(fix_col);
            for (int col : fixed) lp.upper[col] = 0.0;
            const LpSolution child = simplex.solve_hinted(lp, hint);
            for (int col : fixed) {
                lp.upper[col] = col < 3 * lay.steps ? devices.bes_charge_kw
                                                    : devices.bes_discharge_kw;
            }
            if (child.status == LpStatus::iteration_limit) {
                throw SolverError("day LP did not converge (iteration limit)");
            }
            if (child.status != LpStatus::optimal) continue; // pruned: infeasible child
            Node n;
            n.bound = child.objective;
            n.seq = seq++;
            n.fixed_cols = std::move(fixed);
            n.flagged = detail::flag_noncomplementary(lay, child.x);
            n.x = std::move(child.x);
            open.push(std::move(n));
        }
    }
    throw SolverError("branch-and-bound exhausted all nodes without a feasible leaf");
}

// Cost-optimal dispatch with the exclusivity condition enforced.
inline DaySchedule solve_day(const DayInputs& inputs, const DeviceParams& devices,
                             const BranchOptions& options = {}) {
    DaySchedule relaxed = solve_lp_relaxation(inputs, devices);
    if (relaxed.noncomplementary_steps.empty()) {
        return relaxed;
    }
    return branch_on_complementarity(inputs, devices, relaxed, options);
}

struct AnnualTotals {
    double e_pv_kwh = 0.0;        // PV yield
    double e_pv_export_kwh = 0.0; // PV share of grid feed-in
    double e_demand_pv_kwh = 0.0; // demand covered directly by PV
    double e_demand_bes_kwh = 0.0; // demand covered from the battery
    double e_demand_kwh = 0.0;    // household demand
};

struct AnnualSchedule {
    std::vector<DaySchedule> days;
    AnnualTotals totals;
    double step_hours = 0.25;
};

// Solves the year day by day; day d+1 starts at day d's terminal SOC and day 0
// starts half full. Demand attribution per step: PV first, battery second,
// grid last; exports are attributed to PV up to its surplus.
inline AnnualSchedule annual_dispatch(const TimeSeries& pv, const TimeSeries& demand,
                                      const TimeSeries& import_price,
                                      const TimeSeries& export_price, const DeviceParams& devices,
                                      const BranchOptions& options = {}) {
    devices.validate();
    if (pv.size() != demand.size() || pv.size() != import_price.size() ||
        pv.size() != export_price.size()) {
        throw DataError("annual dispatch requires four series of equal length");
    }
    if (pv.step_minutes() != demand.step_minutes() ||
        pv.step_minutes() != import_price.step_minutes() ||
        pv.step_minutes() != export_price.step_minutes()) {
        throw DataError("annual dispatch requires a common step size");
    }
    if (pv.kind() != SeriesKind::power || demand.kind() != SeriesKind::power) {
        throw DataError("pv and demand must be power series");
    }

    const int n_days = pv.days();
    const double dt = pv.step_hours();
    AnnualSchedule annual;
    annual.step_hours = dt;
    annual.days.reserve(n_days);
    double soc = 0.5 * devices.bes_capacity_kwh;
    for (int d = 0; d < n_days; ++d) {
        DayInputs in;
        in.pv = day(pv, d);
        in.demand = day(demand, d);
        in.import_price = day(import_price, d);
        in.export_price = day(export_price, d);
        in.initial_soc_kwh = soc;
        in.step_hours = dt;
        DaySchedule sched = solve_day(in, devices, options);
        // The replayed recursion can leave the terminal SOC a few ulp outside
        // the box; clamp only the carried-over value, never the schedule.
        soc = std::clamp(sched.soc_kwh.back(), 0.0, devices.bes_capacity_kwh);

        for (int t = 0; t < in.steps(); ++t) {
            const double pv_t = in.pv.values[t];
            const double d_t = in.demand.values[t];
            const double pv_to_demand = std::min(pv_t, d_t);
            const double bes_to_demand = std::min(sched.discharge_kw[t], d_t - pv_to_demand);
            const double pv_to_export = std::min(pv_t - pv_to_demand, sched.export_kw[t]);
            annual.totals.e_pv_kwh += pv_t * dt;
            annual.totals.e_demand_kwh += d_t * dt;
            annual.totals.e_demand_pv_kwh += pv_to_demand * dt;
            annual.totals.e_demand_bes_kwh += bes_to_demand * dt;
            annual.totals.e_pv_export_kwh += pv_to_export * dt;
        }
        annual.days.push_back(std::move(sched));
    }
    return annual;
}

// CSV export, one row per step: step,import_kw,export_kw,charge_kw,discharge_kw,soc_kwh.
inline void write_schedule_csv(const std::vector<const DaySchedule*>& days,
                               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write schedule file: " + path.string());
    out << "step,import_kw,export_kw,charge_kw,discharge_kw,soc_kwh\n";
    long step = 0;
    char buf[160];
    for (const DaySchedule* sched : days) {
        for (std::size_t t = 0; t < sched->import_kw.size(); ++t, ++step) {
            std::snprintf(buf, sizeof(buf), "%ld,%.6f,%.6f,%.6f,%.6f,%.6f\n", step,
                          sched->import_kw[t], sched->export_kw[t], sched->charge_kw[t],
                          sched->discharge_kw[t], sched->soc_kwh[t]);
            out << buf;
        }
    }
    if (!out) throw DataError("write failed: " + path.string());
}

inline void write_schedule_csv(const DaySchedule& day_schedule,
                               const std::filesystem::path& path) {
    write_schedule_csv(std::vector<const DaySchedule*>{&day_schedule}, path);
}

inline void write_schedule_csv(const AnnualSchedule& annual, const std::filesystem::path& path) {
    std::vector<const DaySchedule*> ptrs;
    ptrs.reserve(annual.days.size());
    for (const DaySchedule& d : annual.days) ptrs.push_back(&d);
    write_schedule_csv(ptrs, path);
}

} // namespace pvflex
