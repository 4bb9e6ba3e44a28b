#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pvflex/errors.hpp"
#include "pvflex/scheduler.hpp"
#include "pvflex/timeseries.hpp"

namespace pvflex {

enum class FlexDevice { pv, bes };
enum class FlexSign { positive, negative };

inline const char* to_string(FlexDevice d) { return d == FlexDevice::pv ? "pv" : "bes"; }
inline const char* to_string(FlexSign s) { return s == FlexSign::positive ? "positive" : "negative"; }

// One device/sign offer at one step: a constant power block of
// duration_steps steps, energy = power * duration * dt.
struct FlexSample {
    FlexDevice device = FlexDevice::bes;
    FlexSign sign = FlexSign::negative;
    double power_kw = 0.0;
    int duration_steps = 0;
    double energy_kwh = 0.0;
};

// Per-step flexibility of a day or a year. PV offers curtailment only
// (negative sign); the battery offers both signs.
struct FlexProfile {
    double step_hours = 0.25;
    std::vector<FlexSample> pv_negative;
    std::vector<FlexSample> bes_negative;
    std::vector<FlexSample> bes_positive;

    std::size_t steps() const { return pv_negative.size(); }
};

// Curtailable PV feed-in: the whole generation trace.
inline std::vector<double> pv_negative_flex_power(const DaySchedule& schedule,
                                                  const DayView& pv) {
    if (schedule.import_kw.size() != pv.values.size()) {
        throw DataError("schedule and PV day have different lengths");
    }
    return std::vector<double>(pv.values.begin(), pv.values.end());
}

// Extra grid draw the battery could absorb: charge limit plus the cancelled
// discharge minus the charging already scheduled.
inline std::vector<double> bes_negative_flex_power(const DaySchedule& schedule,
                                                   const DeviceParams& devices) {
    std::vector<double> p(schedule.charge_kw.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        p[t] = devices.bes_charge_kw + schedule.discharge_kw[t] - schedule.charge_kw[t];
    }
    return p;
}

// Extra grid injection: discharge headroom plus the charging that can be withheld.
inline std::vector<double> bes_positive_flex_power(const DaySchedule& schedule,
                                                   const DeviceParams& devices) {
    std::vector<double> p(schedule.charge_kw.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        p[t] = devices.bes_discharge_kw - schedule.discharge_kw[t] + schedule.charge_kw[t];
    }
    return p;
}

// Longest block starting at t over which the instantaneous flex power stays at
// or above its value at t. A zero offer is sustainable to the horizon.
inline int flex_duration(std::span<const double> flex_power, int t) {
    const int n = static_cast<int>(flex_power.size());
    if (t < 0 || t >= n) throw DataError("flex_duration: step out of range");
    const double level = flex_power[t];
    int end = t + 1;
    while (end < n && flex_power[end] >= level - 1e-9) ++end;
    return end - t;
}

// Largest duration d' <= duration such that delivering `power` for d' steps on
// top of the baseline SOC trajectory stays within [0, capacity]. Charging adds
// power*eta_ch*dt per step, discharging removes power/eta_dh*dt.
inline int cap_by_soc(FlexDevice device, FlexSign sign, const DaySchedule& schedule,
                      const DeviceParams& devices, int t, double power, int duration,
                      double step_hours) {
    if (device == FlexDevice::pv) return duration; // curtailment does not touch the battery
    const double delta = sign == FlexSign::negative ? power * devices.eta_ch * step_hours
                                                    : -power / devices.eta_dh * step_hours;
    if (delta == 0.0) return duration;
    int ok = 0;
    for (int k = 1; k <= duration; ++k) {
        const double soc = schedule.soc_kwh[t + k - 1] + k * delta;
        if (soc < -1e-9 || soc > devices.bes_capacity_kwh + 1e-9) break;
        ok = k;
    }
    return ok;
}

inline double flex_energy(double power_kw, int duration_steps, double step_hours) {
    return power_kw * duration_steps * step_hours;
}

// Flexibility of one dispatched day against its unperturbed baseline.
inline FlexProfile compute_day_flex(const DaySchedule& schedule, const DayView& pv,
                                    const DeviceParams& devices, double step_hours) {
    const int T = static_cast<int>(schedule.import_kw.size());
    FlexProfile profile;
    profile.step_hours = step_hours;
    profile.pv_negative.reserve(T);
    profile.bes_negative.reserve(T);
    profile.bes_positive.reserve(T);

    const std::vector<double> pv_neg = pv_negative_flex_power(schedule, pv);
    const std::vector<double> bes_neg = bes_negative_flex_power(schedule, devices);
    const std::vector<double> bes_pos = bes_positive_flex_power(schedule, devices);
    for (int t = 0; t < T; ++t) {
        {
            const int dur = flex_duration(pv_neg, t);
            profile.pv_negative.push_back({FlexDevice::pv, FlexSign::negative, pv_neg[t], dur,
                                           flex_energy(pv_neg[t], dur, step_hours)});
        }
        {
            const int dur = cap_by_soc(FlexDevice::bes, FlexSign::negative, schedule, devices, t,
                                       bes_neg[t], flex_duration(bes_neg, t), step_hours);
            profile.bes_negative.push_back({FlexDevice::bes, FlexSign::negative, bes_neg[t], dur,
                                            flex_energy(bes_neg[t], dur, step_hours)});
        }
        {
            const int dur = cap_by_soc(FlexDevice::bes, FlexSign::positive, schedule, devices, t,
                                       bes_pos[t], flex_duration(bes_pos, t), step_hours);
            profile.bes_positive.push_back({FlexDevice::bes, FlexSign::positive, bes_pos[t], dur,
                                            flex_energy(bes_pos[t], dur, step_hours)});
        }
    }
    return profile;
}

// Year-long profile: per-day flexibility chained in day order.
inline FlexProfile annual_flex(const AnnualSchedule& annual, const TimeSeries& pv,
                               const DeviceParams& devices) {
    if (static_cast<int>(annual.days.size()) != pv.days()) {
        throw DataError("annual schedule and PV series cover different day counts");
    }
    FlexProfile profile;
    profile.step_hours = annual.step_hours;
    for (int d = 0; d < pv.days(); ++d) {
        FlexProfile day_profile =
            compute_day_flex(annual.days[d], day(pv, d), devices, annual.step_hours);
        profile.pv_negative.insert(profile.pv_negative.end(), day_profile.pv_negative.begin(),
                                   day_profile.pv_negative.end());
        profile.bes_negative.insert(profile.bes_negative.end(), day_profile.bes_negative.begin(),
                                    day_profile.bes_negative.end());
        profile.bes_positive.insert(profile.bes_positive.end(), day_profile.bes_positive.begin(),
                                    day_profile.bes_positive.end());
    }
    return profile;
}

// Mean energy of a battery flexibility bid: per-step positive and negative
// offer energies averaged over the year, then across the two signs (only one
// sign can be offered at a time). PV curtailment stays out of the bid-level
// aggregate: its always-on availability scales with installed power and would
// swamp the battery term that actually responds to the dispatch.
inline double average_flex_energy(const FlexProfile& profile) {
    const std::size_t n = profile.steps();
    if (n == 0) throw DataError("average_flex_energy: empty profile");
    double neg = 0.0;
    double pos = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        neg += profile.bes_negative[t].energy_kwh;
        pos += profile.bes_positive[t].energy_kwh;
    }
    return (neg / static_cast<double>(n) + pos / static_cast<double>(n)) / 2.0;
}

// CSV export: step,device,sign,power_kw,duration_steps,energy_kwh.
inline void write_flex_csv(const FlexProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write flexibility file: " + path.string());
    out << "step,device,sign,power_kw,duration_steps,energy_kwh\n";
    char buf[160];
    for (std::size_t t = 0; t < profile.steps(); ++t) {
        for (const FlexSample* s :
             {&profile.pv_negative[t], &profile.bes_negative[t], &profile.bes_positive[t]}) {
            std::snprintf(buf, sizeof(buf), "%zu,%s,%s,%.6f,%d,%.6f\n", t, to_string(s->device),
                          to_string(s->sign), s->power_kw, s->duration_steps, s->energy_kwh);
            out << buf;
        }
    }
    if (!out) throw DataError("write failed: " + path.string());
}

} // namespace pvflex
