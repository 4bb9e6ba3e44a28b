#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pvflex/errors.hpp"

namespace pvflex {

inline constexpr int kMinutesPerDay = 1440;

enum class SeriesKind { power, price };

// Uniformly sampled series (kW for power, EUR/kWh for price) covering whole
// days. Immutable after construction; construction validates every invariant.
class TimeSeries {
public:
    TimeSeries(std::vector<double> values, SeriesKind kind, int step_minutes = 15)
        : values_(std::move(values)), kind_(kind), step_minutes_(step_minutes) {
        if (step_minutes_ <= 0 || kMinutesPerDay % step_minutes_ != 0) {
            throw DataError("step_minutes must be positive and divide 1440, got " +
                            std::to_string(step_minutes_));
        }
        const std::size_t spd = static_cast<std::size_t>(steps_per_day());
        if (values_.empty() || values_.size() % spd != 0) {
            throw DataError("series length " + std::to_string(values_.size()) +
                            " is not a positive multiple of " + std::to_string(spd) +
                            " steps per day");
        }
        if (days() > 365) {
            throw DataError("series covers " + std::to_string(days()) +
                            " days; at most one non-leap year (365 days) is supported");
        }
        if (kind_ == SeriesKind::power) {
            for (std::size_t i = 0; i < values_.size(); ++i) {
                if (values_[i] < 0.0) {
                    throw DataError("negative power sample " + std::to_string(values_[i]) +
                                    " at row " + std::to_string(i));
                }
            }
        }
    }

    const std::vector<double>& values() const { return values_; }
    SeriesKind kind() const { return kind_; }
    int step_minutes() const { return step_minutes_; }
    double step_hours() const { return step_minutes_ / 60.0; }
    int steps_per_day() const { return kMinutesPerDay / step_minutes_; }
    int days() const { return static_cast<int>(values_.size()) / steps_per_day(); }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    // Integral of the series over its horizon, in kWh (power series only).
    double energy_kwh() const {
        double sum = 0.0;
        for (double v : values_) sum += v;
        return sum * step_hours();
    }

    double mean() const {
        double sum = 0.0;
        for (double v : values_) sum += v;
        return sum / static_cast<double>(values_.size());
    }

private:
    std::vector<double> values_;
    SeriesKind kind_;
    int step_minutes_;
};

// One day's window into a series. Plain view; the parent series owns the data.
struct DayView {
    int day_index = 0;
    std::span<const double> values;
};

inline DayView day(const TimeSeries& series, int day_index) {
    if (day_index < 0 || day_index >= series.days()) {
        throw DataError("day index " + std::to_string(day_index) + " out of range [0, " +
                        std::to_string(series.days()) + ")");
    }
    const std::size_t spd = static_cast<std::size_t>(series.steps_per_day());
    return DayView{day_index,
                   std::span<const double>(series.values()).subspan(
                       static_cast<std::size_t>(day_index) * spd, spd)};
}

// Multiply by one scalar so the horizon integral equals target_kwh.
inline TimeSeries scale_to_annual_energy(const TimeSeries& series, double target_kwh) {
    if (series.kind() != SeriesKind::power) {
        throw DataError("scale_to_annual_energy expects a power series");
    }
    if (target_kwh <= 0.0) {
        throw DataError("target annual energy must be positive");
    }
    const double current = series.energy_kwh();
    if (current <= 0.0) {
        throw DataError("cannot rescale a series with zero annual energy");
    }
    const double factor = target_kwh / current;
    std::vector<double> scaled = series.values();
    for (double& v : scaled) v *= factor;
    return TimeSeries(std::move(scaled), series.kind(), series.step_minutes());
}

// Shift by one constant so the arithmetic mean equals target_mean. Additive on
// purpose: it keeps the intra-day spread that drives battery arbitrage.
inline TimeSeries scale_price_to_mean(const TimeSeries& series, double target_mean) {
    if (series.kind() != SeriesKind::price) {
        throw DataError("scale_price_to_mean expects a price series");
    }
    const double offset = target_mean - series.mean();
    std::vector<double> shifted = series.values();
    for (double& v : shifted) v += offset;
    return TimeSeries(std::move(shifted), series.kind(), series.step_minutes());
}

inline TimeSeries constant_series(double value, int days, SeriesKind kind, int step_minutes = 15) {
    const int spd = kMinutesPerDay / step_minutes;
    return TimeSeries(std::vector<double>(static_cast<std::size_t>(days) * spd, value), kind,
                      step_minutes);
}

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's algorithm).
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

// Parses "YYYY-MM-DD HH:MM[:SS]" (or with 'T') into seconds since epoch,
// treated as a naive calendar time. Ordering is what matters downstream.
inline std::int64_t parse_timestamp(const std::string& text, std::size_t row) {
    int y = 0, mo = 0, da = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    const int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &da, &sep, &h, &mi, &s);
    if (n < 6 || (sep != ' ' && sep != 'T') || mo < 1 || mo > 12 || da < 1 || da > 31 ||
        h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59) {
        throw DataError("row " + std::to_string(row) + ": cannot parse timestamp '" + text + "'");
    }
    return days_from_civil(y, mo, da) * 86400 + h * 3600 + mi * 60 + s;
}

inline std::string format_timestamp(std::int64_t seconds) {
    int y, m, d;
    civil_from_days(seconds / 86400, y, m, d);
    const int rem = static_cast<int>(seconds % 86400);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", y, m, d, rem / 3600,
                  (rem % 3600) / 60);
    return buf;
}

inline std::string format_double_exact(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

// Reads a `timestamp,value` CSV. Row count and ordering are authoritative;
// timestamps are only checked for uniform spacing at the declared step.
inline TimeSeries load_series(const std::filesystem::path& path, SeriesKind kind,
                              int step_minutes = 15) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open series file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty series file: " + path.string());
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,value") {
        throw DataError(path.string() + ": expected header 'timestamp,value', got '" + line + "'");
    }

    std::vector<double> values;
    std::int64_t prev_ts = 0;
    bool have_prev = false;
    const std::int64_t want_gap = static_cast<std::int64_t>(step_minutes) * 60;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": missing comma");
        }
        const std::int64_t ts = detail::parse_timestamp(line.substr(0, comma), row);
        const std::string value_text = line.substr(comma + 1);
        double v = 0.0;
        const char* first = value_text.data();
        const char* last = first + value_text.size();
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
            throw DataError(path.string() + ": row " + std::to_string(row) +
                            ": cannot parse value '" + value_text + "'");
        }
        if (have_prev) {
            const std::int64_t gap = ts - prev_ts;
            if (gap == 0) {
                throw DataError(path.string() + ": row " + std::to_string(row) +
                                ": duplicate timestamp");
            }
            if (gap != want_gap) {
                throw DataError(path.string() + ": row " + std::to_string(row) + ": spacing of " +
                                std::to_string(gap / 60) + " min does not match the declared " +
                                std::to_string(step_minutes) + " min step");
            }
        }
        prev_ts = ts;
        have_prev = true;
        values.push_back(v);
    }
    try {
        return TimeSeries(std::move(values), kind, step_minutes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

// Writes `timestamp,value` rows with shortest-round-trip values so that
// load_series(save_series(s)) reproduces s bit-identically. Timestamps are a
// nominal 2019 calendar; they carry no timezone semantics.
inline void save_series(const TimeSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write series file: " + path.string());
    }
    out << "timestamp,value\n";
    const std::int64_t start = detail::days_from_civil(2019, 1, 1) * 86400;
    const std::int64_t gap = static_cast<std::int64_t>(series.step_minutes()) * 60;
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << detail::format_timestamp(start + static_cast<std::int64_t>(i) * gap) << ','
            << detail::format_double_exact(series[i]) << '\n';
    }
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

} // namespace pvflex
