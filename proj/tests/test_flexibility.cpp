#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "pvflex/flexibility.hpp"
#include "pvflex/synthetic.hpp"

#include "test_support.hpp"

using namespace pvflex;

namespace {

// Hand-built schedule with given charge/discharge and a flat SOC trace.
DaySchedule fake_schedule(std::vector<double> charge, std::vector<double> discharge,
                          std::vector<double> soc) {
    DaySchedule s;
    const std::size_t n = charge.size();
    s.import_kw.assign(n, 0.0);
    s.export_kw.assign(n, 0.0);
    s.charge_kw = std::move(charge);
    s.discharge_kw = std::move(discharge);
    s.soc_kwh = std::move(soc);
    s.status = ScheduleStatus::optimal;
    return s;
}

DeviceParams battery(double p_ch, double p_dh, double cap, double eta = 1.0) {
    DeviceParams d;
    d.bes_capacity_kwh = cap;
    d.bes_charge_kw = p_ch;
    d.bes_discharge_kw = p_dh;
    d.eta_ch = eta;
    d.eta_dh = eta;
    return d;
}

} // namespace

TEST_CASE("PV curtailment potential is the generation trace itself") {
    const std::vector<double> pv_values{0.0, 1.0, 2.0, 0.5};
    const DayView pv{0, pv_values};
    const DaySchedule s = fake_schedule({0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0});
    REQUIRE(pv_negative_flex_power(s, pv) == pv_values);

    const std::vector<double> zeros{0.0, 0.0, 0.0, 0.0};
    REQUIRE(pv_negative_flex_power(s, DayView{0, zeros}) == zeros);
}

TEST_CASE("battery negative flex power follows the dispatch") {
    const DeviceParams dev = battery(1.0, 1.0, 4.0);
    SECTION("idle battery offers the full charge limit") {
        const DaySchedule s = fake_schedule({0}, {0}, {2});
        REQUIRE(bes_negative_flex_power(s, dev)[0] == 1.0);
    }
    SECTION("scheduled charging reduces the offer") {
        const DaySchedule s = fake_schedule({0.4}, {0.0}, {2});
        REQUIRE_THAT(bes_negative_flex_power(s, dev)[0],
                     Catch::Matchers::WithinAbs(0.6, 1e-12));
    }
    SECTION("cancelling a full discharge doubles the offer") {
        const DaySchedule s = fake_schedule({0.0}, {1.0}, {2});
        REQUIRE_THAT(bes_negative_flex_power(s, dev)[0],
                     Catch::Matchers::WithinAbs(2.0, 1e-12));
    }
}

TEST_CASE("battery positive flex power follows the dispatch") {
    const DeviceParams dev = battery(1.0, 1.0, 4.0);
    SECTION("idle battery offers the full discharge limit") {
        const DaySchedule s = fake_schedule({0}, {0}, {2});
        REQUIRE(bes_positive_flex_power(s, dev)[0] == 1.0);
    }
    SECTION("already discharging at the limit leaves nothing") {
        const DaySchedule s = fake_schedule({0.0}, {1.0}, {2});
        REQUIRE(bes_positive_flex_power(s, dev)[0] == 0.0);
    }
    SECTION("withholding scheduled charging adds to the offer") {
        const DaySchedule s = fake_schedule({0.5}, {0.0}, {2});
        REQUIRE_THAT(bes_positive_flex_power(s, dev)[0],
                     Catch::Matchers::WithinAbs(1.5, 1e-12));
    }
}

TEST_CASE("flex duration is the sustainable run from t") {
    const std::vector<double> a{2, 2, 2, 1};
    REQUIRE(flex_duration(a, 0) == 3);
    const std::vector<double> b{1, 2, 3};
    REQUIRE(flex_duration(b, 0) == 3);
    const std::vector<double> c{0, 5, 0, 0};
    REQUIRE(flex_duration(c, 0) == 4); // zero offer sustains to the horizon
    REQUIRE(flex_duration(c, 1) == 1);
    REQUIRE(flex_duration(c, 3) == 1);
    REQUIRE_THROWS_AS(flex_duration(c, 4), DataError);
}

TEST_CASE("SOC capping by superposition") {
    SECTION("full battery admits no extra charging") {
        const DeviceParams dev = battery(1.0, 1.0, 1.0);
        const DaySchedule s = fake_schedule({0, 0, 0, 0}, {0, 0, 0, 0}, {1, 1, 1, 1});
        REQUIRE(cap_by_soc(FlexDevice::bes, FlexSign::negative, s, dev, 0, 1.0, 4, 0.25) == 0);
    }
    SECTION("empty 1 kWh battery absorbs 1 kW for exactly 4 steps") {
        const DeviceParams dev = battery(1.0, 1.0, 1.0);
        const DaySchedule s = fake_schedule({0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0},
                                            {0, 0, 0, 0, 0, 0});
        REQUIRE(cap_by_soc(FlexDevice::bes, FlexSign::negative, s, dev, 0, 1.0, 6, 0.25) == 4);
    }
    SECTION("half-full battery sustains 1 kW discharge for 2 steps") {
        const DeviceParams dev = battery(1.0, 1.0, 1.0);
        const DaySchedule s = fake_schedule({0, 0, 0, 0}, {0, 0, 0, 0}, {0.5, 0.5, 0.5, 0.5});
        REQUIRE(cap_by_soc(FlexDevice::bes, FlexSign::positive, s, dev, 0, 1.0, 4, 0.25) == 2);
    }
    SECTION("zero power never caps") {
        const DeviceParams dev = battery(1.0, 1.0, 1.0);
        const DaySchedule s = fake_schedule({0, 0}, {0, 0}, {1, 1});
        REQUIRE(cap_by_soc(FlexDevice::bes, FlexSign::negative, s, dev, 0, 0.0, 2, 0.25) == 2);
    }
    SECTION("PV curtailment is never SOC-capped") {
        const DeviceParams dev = battery(1.0, 1.0, 1.0);
        const DaySchedule s = fake_schedule({0, 0}, {0, 0}, {1, 1});
        REQUIRE(cap_by_soc(FlexDevice::pv, FlexSign::negative, s, dev, 0, 5.0, 2, 0.25) == 2);
    }
}

TEST_CASE("flex energy is power times duration times step size") {
    REQUIRE(flex_energy(0.0, 7, 0.25) == 0.0);
    REQUIRE_THAT(flex_energy(2.0, 4, 0.25), Catch::Matchers::WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(flex_energy(0.6, 3, 0.25), Catch::Matchers::WithinAbs(0.45, 1e-12));
}

TEST_CASE("average flex energy") {
    SECTION("empty profile is an error") {
        FlexProfile p;
        REQUIRE_THROWS_AS(average_flex_energy(p), DataError);
    }
    SECTION("constant offers average across the signs") {
        FlexProfile p;
        for (int t = 0; t < 10; ++t) {
            p.pv_negative.push_back({FlexDevice::pv, FlexSign::negative, 0, 0, 0.0});
            p.bes_negative.push_back({FlexDevice::bes, FlexSign::negative, 0, 0, 4.0});
            p.bes_positive.push_back({FlexDevice::bes, FlexSign::positive, 0, 0, 2.0});
        }
        REQUIRE_THAT(average_flex_energy(p), Catch::Matchers::WithinAbs(3.0, 1e-12));
    }
    SECTION("matches an independent accumulation on a dispatched month") {
        const int days = 10;
        const SyntheticYear y{synthetic_pv(9, 3.0, days), synthetic_load(9, 110.0, days),
                              synthetic_import_price(9, 0.319, days)};
        const TimeSeries kexp = constant_series(0.068, days, SeriesKind::price);
        const DeviceParams dev = DeviceParams::battery_1c(3.0, 5.0);
        const AnnualSchedule ann = annual_dispatch(y.pv, y.load, y.import_price, kexp, dev);
        const FlexProfile p = annual_flex(ann, y.pv, dev);
        double neg = 0.0, pos = 0.0;
        for (std::size_t t = 0; t < p.steps(); ++t) {
            neg += p.bes_negative[t].energy_kwh;
            pos += p.bes_positive[t].energy_kwh;
        }
        const double expected = (neg + pos) / (2.0 * static_cast<double>(p.steps()));
        REQUIRE_THAT(average_flex_energy(p), Catch::Matchers::WithinRel(expected, 1e-12));
    }
}

TEST_CASE("flex profile invariants on a dispatched day") {
    const int days = 3;
    const SyntheticYear y{synthetic_pv(21, 3.0, days), synthetic_load(21, 33.0, days),
                          synthetic_import_price(21, 0.319, days)};
    const TimeSeries kexp = constant_series(0.068, days, SeriesKind::price);
    const DeviceParams dev = DeviceParams::battery_1c(3.0, 4.0);
    const AnnualSchedule ann = annual_dispatch(y.pv, y.load, y.import_price, kexp, dev);
    const FlexProfile p = annual_flex(ann, y.pv, dev);
    const double limit = dev.bes_charge_kw + dev.bes_discharge_kw;

    for (std::size_t i = 0; i < p.steps(); ++i) {
        const int d = static_cast<int>(i) / 96;
        const int t = static_cast<int>(i) % 96;
        const DaySchedule& sched = ann.days[d];

        // Eq-10 consistency and power bounds
        for (const FlexSample* s : {&p.pv_negative[i], &p.bes_negative[i], &p.bes_positive[i]}) {
            REQUIRE(s->power_kw >= 0.0);
            REQUIRE_THAT(s->energy_kwh,
                         Catch::Matchers::WithinAbs(
                             flex_energy(s->power_kw, s->duration_steps, 0.25), 1e-9));
        }
        REQUIRE(p.bes_negative[i].power_kw <= limit + 1e-9);
        REQUIRE(p.bes_positive[i].power_kw <= limit + 1e-9);

        // idle steps: the two signs complement to the full power envelope
        if (sched.charge_kw[t] == 0.0 && sched.discharge_kw[t] == 0.0) {
            REQUIRE_THAT(p.bes_negative[i].power_kw + p.bes_positive[i].power_kw,
                         Catch::Matchers::WithinAbs(limit, 1e-9));
        }

        // SOC superposition stays inside the box for the emitted duration
        for (const FlexSample* s : {&p.bes_negative[i], &p.bes_positive[i]}) {
            const double delta = s->sign == FlexSign::negative
                                     ? s->power_kw * dev.eta_ch * 0.25
                                     : -s->power_kw / dev.eta_dh * 0.25;
            for (int k = 1; k <= s->duration_steps; ++k) {
                const double soc = sched.soc_kwh[t + k - 1] + k * delta;
                REQUIRE(soc >= -1e-6);
                REQUIRE(soc <= dev.bes_capacity_kwh + 1e-6);
            }
        }
    }
}

TEST_CASE("capped durations are maximal: one more step violates something") {
    const int days = 2;
    const SyntheticYear y{synthetic_pv(22, 3.0, days), synthetic_load(22, 22.0, days),
                          synthetic_import_price(22, 0.319, days)};
    const TimeSeries kexp = constant_series(0.068, days, SeriesKind::price);
    const DeviceParams dev = DeviceParams::battery_1c(3.0, 4.0);
    const AnnualSchedule ann = annual_dispatch(y.pv, y.load, y.import_price, kexp, dev);
    const FlexProfile p = annual_flex(ann, y.pv, dev);

    for (std::size_t i = 0; i < p.steps(); ++i) {
        const int d = static_cast<int>(i) / 96;
        const int t = static_cast<int>(i) % 96;
        const DaySchedule& sched = ann.days[d];
        for (const FlexSample* s : {&p.bes_negative[i], &p.bes_positive[i]}) {
            const int dur = s->duration_steps;
            if (t + dur >= 96) continue; // horizon-limited is maximal by definition
            const std::vector<double> power_trace = s->sign == FlexSign::negative
                                                        ? bes_negative_flex_power(sched, dev)
                                                        : bes_positive_flex_power(sched, dev);
            const bool power_violates = power_trace[t + dur] < power_trace[t] - 1e-9;
            const double delta = s->sign == FlexSign::negative
                                     ? s->power_kw * dev.eta_ch * 0.25
                                     : -s->power_kw / dev.eta_dh * 0.25;
            const double soc_next = sched.soc_kwh[t + dur] + (dur + 1) * delta;
            const bool soc_violates =
                soc_next < -1e-9 || soc_next > dev.bes_capacity_kwh + 1e-9;
            CAPTURE(i, dur, s->power_kw);
            REQUIRE((power_violates || soc_violates));
        }
    }
}
