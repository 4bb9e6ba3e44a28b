#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "pvflex/timeseries.hpp"

namespace pvflex {

namespace detail {

// splitmix64: tiny, seedable, identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double uniform(double lo, double hi) {
        const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

private:
    std::uint64_t state_;
};

} // namespace detail

struct SyntheticYear {
    TimeSeries pv;
    TimeSeries load;
    TimeSeries import_price;
};

// Clear-sky half-sine with a seasonal envelope, a day-scale clearness walk and
// step-scale cloud flicker. Samples never exceed peak_kw; a 1 kWp year lands
// near 1000 kWh of yield.
inline TimeSeries synthetic_pv(std::uint64_t seed, double peak_kw, int days = 365,
                               int step_minutes = 15) {
    detail::Rng rng(seed * 0x9e3779b97f4a7c15ull + 1);
    const int spd = kMinutesPerDay / step_minutes;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(days) * spd);
    double clearness = 0.65;
    for (int d = 0; d < days; ++d) {
        const double season = 2.0 * std::numbers::pi * (d - 172) / 365.0;
        const double envelope = 0.55 + 0.45 * std::cos(season);
        const double daylight_h = 12.0 + 4.0 * std::cos(season);
        const double rise = 12.0 - daylight_h / 2.0;
        clearness = std::clamp(clearness + rng.uniform(-0.175, 0.175), 0.3, 1.0);
        for (int t = 0; t < spd; ++t) {
            const double hour = (t + 0.5) * step_minutes / 60.0;
            double p = 0.0;
            if (hour > rise && hour < rise + daylight_h) {
                const double shape = std::sin(std::numbers::pi * (hour - rise) / daylight_h);
                const double flicker = rng.uniform(0.85, 1.0);
                p = peak_kw * envelope * shape * clearness * flicker;
            }
            values.push_back(p);
        }
    }
    return TimeSeries(std::move(values), SeriesKind::power, step_minutes);
}

// Two-peak household profile (morning and evening bumps over a baseload) with
// per-step noise and a mild winter surplus, scaled to the annual demand.
inline TimeSeries synthetic_load(std::uint64_t seed, double annual_demand_kwh, int days = 365,
                                 int step_minutes = 15) {
    detail::Rng rng(seed * 0x9e3779b97f4a7c15ull + 2);
    const int spd = kMinutesPerDay / step_minutes;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(days) * spd);
    auto bump = [](double hour, double center, double width) {
        const double z = (hour - center) / width;
        return std::exp(-0.5 * z * z);
    };
    for (int d = 0; d < days; ++d) {
        const double season = 1.0 + 0.15 * std::cos(2.0 * std::numbers::pi * (d - 15) / 365.0);
        for (int t = 0; t < spd; ++t) {
            const double hour = (t + 0.5) * step_minutes / 60.0;
            const double base =
                0.35 + 1.0 * bump(hour, 7.5, 1.5) + 1.6 * bump(hour, 19.5, 2.5);
            values.push_back(base * season * rng.uniform(0.7, 1.3));
        }
    }
    TimeSeries raw(std::move(values), SeriesKind::power, step_minutes);
    return scale_to_annual_energy(raw, annual_demand_kwh);
}

// Day-ahead-shaped import price: a retail tariff is a large fixed component
// (taxes, levies) plus the spot swing, so the intra-day spread is small in
// absolute terms (roughly +-0.015 EUR/kWh) -- too small for round-trip
// grid-to-grid arbitrage at typical battery efficiencies.
inline TimeSeries synthetic_import_price(std::uint64_t seed, double mean_eur_per_kwh = 0.31,
                                         int days = 365, int step_minutes = 15) {
    detail::Rng rng(seed * 0x9e3779b97f4a7c15ull + 3);
    const int spd = kMinutesPerDay / step_minutes;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(days) * spd);
    for (int d = 0; d < days; ++d) {
        const double drift = 0.008 * std::cos(2.0 * std::numbers::pi * (d - 20) / 365.0);
        for (int t = 0; t < spd; ++t) {
            const double hour = (t + 0.5) * step_minutes / 60.0;
            const double daily = 0.012 * std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0) +
                                 0.006 * std::sin(4.0 * std::numbers::pi * (hour - 6.0) / 24.0);
            values.push_back(mean_eur_per_kwh + daily + drift + rng.uniform(-0.004, 0.004));
        }
    }
    TimeSeries raw(std::move(values), SeriesKind::price, step_minutes);
    return scale_price_to_mean(raw, mean_eur_per_kwh);
}

inline SyntheticYear synthetic_year(std::uint64_t seed, double annual_demand_kwh,
                                    double pv_peak_kw, int days = 365, int step_minutes = 15) {
    return SyntheticYear{synthetic_pv(seed, pv_peak_kw, days, step_minutes),
                         synthetic_load(seed, annual_demand_kwh, days, step_minutes),
                         synthetic_import_price(seed, 0.31, days, step_minutes)};
}

} // namespace pvflex
