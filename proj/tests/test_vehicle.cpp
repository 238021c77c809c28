#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "platoonrl/platoon.hpp"
#include "platoonrl/scenario.hpp"
#include "platoonrl/vehicle.hpp"

using namespace prl;

TEST_CASE("step_vehicle: constant velocity") {
    VehicleState v;
    v.velocity = 10.0;
    const VehicleState out = step_vehicle(v, 0.0, 0.05);
    CHECK(out.position_x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.velocity == doctest::Approx(10.0));
}

TEST_CASE("step_vehicle: braking within the step") {
    VehicleState v;
    v.velocity = 1.0;
    const VehicleState out = step_vehicle(v, -7.5, 0.05);
    CHECK(out.velocity == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(out.position_x == doctest::Approx(0.040625).epsilon(1e-12));
}

TEST_CASE("step_vehicle: stop inside the step, no reverse") {
    VehicleState v;
    v.velocity = 0.1;
    const VehicleState out = step_vehicle(v, -7.5, 0.05);
    CHECK(out.velocity == 0.0);
    // closed form: travels v^2 / (2 |a|) up to the stop time
    CHECK(out.position_x == doctest::Approx(0.01 / 15.0).epsilon(1e-12));
}

TEST_CASE("step_vehicle: command clamped to the physical envelope") {
    VehicleState v;
    v.velocity = 10.0;
    const VehicleState hard = step_vehicle(v, -50.0, 0.05);
    CHECK(hard.acceleration == doctest::Approx(-7.5));
    const VehicleState fast = step_vehicle(v, 50.0, 0.05);
    CHECK(fast.acceleration == doctest::Approx(3.0));
}

TEST_CASE("step_vehicle: non-finite input rejected") {
    VehicleState v;
    CHECK_THROWS_AS(step_vehicle(v, std::nan(""), 0.05), std::domain_error);
    CHECK_THROWS_AS(step_vehicle(v, 0.0, 0.0), std::domain_error);
}

namespace {

Platoon three_vehicle_platoon(double x0, double x1, double x2) {
    ScenarioConfig cfg;
    cfg.lead_position = {x0, 0.0};
    cfg.mid_position = {x1, 0.0};
    cfg.rear_position = {x2, 0.0};
    return make_platoon(sample_scenario(cfg, 1));
}

}  // namespace

TEST_CASE("compute_gaps: bumper convention") {
    Platoon p = three_vehicle_platoon(36.0, 18.0, 0.0);
    auto [d_fm, d_mr] = compute_gaps(p, 1);
    CHECK(d_fm == doctest::Approx(14.0)); // 18 m centers, both lengths 4
    CHECK(d_mr == doctest::Approx(14.0));
}

TEST_CASE("compute_gaps: identical positions give a negative gap") {
    Platoon p = three_vehicle_platoon(36.0, 18.0, 0.0);
    p.vehicles[1].state.position_x = 36.0;
    auto [d_fm, d_mr] = compute_gaps(p, 1);
    CHECK(d_fm == doctest::Approx(-4.0));
    (void)d_mr;
}

TEST_CASE("compute_gaps: boundary roles get the +inf sentinel") {
    Platoon p = three_vehicle_platoon(36.0, 18.0, 0.0);
    auto [d_fm_first, d_mr_first] = compute_gaps(p, 0);
    CHECK(std::isinf(d_fm_first));
    CHECK(d_mr_first == doctest::Approx(14.0));
    auto [d_fm_last, d_mr_last] = compute_gaps(p, 2);
    CHECK(d_fm_last == doctest::Approx(14.0));
    CHECK(std::isinf(d_mr_last));
}

TEST_CASE("detect_collision: threshold and scan order") {
    Platoon p = three_vehicle_platoon(36.0, 18.0, 0.0);
    CHECK_FALSE(detect_collision(p, 2.0).occurred);

    // front gap 1.9 m
    p.vehicles[1].state.position_x = 36.0 - 4.0 - 1.9;
    CollisionReport rep = detect_collision(p, 2.0);
    CHECK(rep.occurred);
    CHECK(rep.front_index == 0);
    CHECK(rep.rear_index == 1);
    CHECK(rep.gap_at_event == doctest::Approx(1.9));

    // both gaps offending: the front-most pair is reported
    p.vehicles[2].state.position_x = p.vehicles[1].state.position_x - 4.0 - 1.99;
    rep = detect_collision(p, 2.0);
    CHECK(rep.front_index == 0);

    // only the rear pair offending
    p.vehicles[1].state.position_x = 18.0;
    p.vehicles[2].state.position_x = 18.0 - 4.0 - 1.99;
    rep = detect_collision(p, 2.0);
    CHECK(rep.occurred);
    CHECK(rep.front_index == 1);
    CHECK(rep.rear_index == 2);
}

TEST_CASE("sample_scenario: determinism and ordering") {
    ScenarioConfig cfg;
    const ScenarioInstance a = sample_scenario(cfg, 42);
    const ScenarioInstance b = sample_scenario(cfg, 42);
    CHECK(a.x_lead == b.x_lead);
    CHECK(a.x_mid == b.x_mid);
    CHECK(a.lead_brake_decel == b.lead_brake_decel);
    CHECK(a.lead_brake_step == b.lead_brake_step);
    CHECK(a.x_lead > a.x_mid);
    CHECK(a.x_mid > a.x_rear);

    for (int seed = 0; seed < 200; ++seed) {
        const ScenarioInstance s = sample_scenario(cfg, seed);
        CHECK(s.x_lead > s.x_mid);
        CHECK(s.x_mid > s.x_rear);
        CHECK(s.lead_brake_step >= 20); // t_f in [1.0, 1.5] s at dt = 0.05
        CHECK(s.lead_brake_step <= 30);
    }
}

TEST_CASE("sample_scenario: zero stds give exact means") {
    ScenarioConfig cfg;
    cfg.lead_position.std = 0.0;
    cfg.mid_position.std = 0.0;
    cfg.rear_position.std = 0.0;
    const ScenarioInstance s = sample_scenario(cfg, 7);
    CHECK(s.x_lead == doctest::Approx(36.0));
    CHECK(s.x_mid == doctest::Approx(18.0));
    CHECK(s.x_rear == doctest::Approx(0.0));
}

TEST_CASE("sample_scenario: impossible ordering errors after redraws") {
    ScenarioConfig cfg;
    cfg.lead_position = {0.0, 0.0};
    cfg.mid_position = {0.0, 0.0};
    cfg.rear_position = {0.0, 0.0};
    CHECK_THROWS_AS(sample_scenario(cfg, 1), std::domain_error);
}

TEST_CASE("step_platoon: pure coasting advances by v dt") {
    ScenarioConfig cfg;
    cfg.lead_position.std = cfg.mid_position.std = cfg.rear_position.std = 0.0;
    cfg.jitter_accel.std = 0.0;
    ScenarioInstance inst = sample_scenario(cfg, 3);
    inst.lead_brakes = false;
    Platoon p = make_platoon(inst);
    Rng jitter(inst.jitter_seed);
    const double cmd[1] = {0.0};
    step_platoon(p, inst, cmd, jitter);
    CHECK(p.vehicles[0].state.position_x == doctest::Approx(37.0));
    CHECK(p.vehicles[1].state.position_x == doctest::Approx(19.0));
    CHECK(p.vehicles[2].state.position_x == doctest::Approx(1.0));
    CHECK(p.time_step == 1);
}

TEST_CASE("step_platoon: lead brake event latches the sampled deceleration") {
    ScenarioConfig cfg;
    cfg.jitter_accel.std = 0.0;
    ScenarioInstance inst = sample_scenario(cfg, 5);
    Platoon p = make_platoon(inst);
    Rng jitter(inst.jitter_seed);
    std::vector<Event> events;
    const double cmd[1] = {0.0};
    bool saw_brake = false;
    for (int k = 0; k < inst.lead_brake_step + 5; ++k) {
        events.clear();
        step_platoon(p, inst, cmd, jitter, &events);
        for (const Event& e : events) {
            if (e.kind == EventKind::BrakeTriggered && e.vehicle_index == 0) {
                saw_brake = true;
                CHECK(p.time_step - 1 == inst.lead_brake_step);
                CHECK(e.value == doctest::Approx(inst.lead_brake_decel));
            }
        }
    }
    CHECK(saw_brake);
    // realized acceleration is the sampled decel clamped to the physical envelope
    const double expected = std::max(inst.lead_brake_decel, p.vehicles[0].state.max_decel);
    CHECK(p.vehicles[0].state.acceleration == doctest::Approx(expected));
}

TEST_CASE("step_platoon: cut-in inserts at the bracketing median and preserves other state") {
    ScenarioConfig cfg;
    cfg.lead_position.std = cfg.mid_position.std = cfg.rear_position.std = 0.0;
    cfg.jitter_accel.std = 0.0;
    cfg.cutin = CutInConfig{2, InsertRole::BecomesFollowing, VClass::Heavy};
    ScenarioInstance inst = sample_scenario(cfg, 9);
    inst.lead_brakes = false;
    Platoon p = make_platoon(inst);
    Rng jitter(inst.jitter_seed);
    const double cmd[1] = {0.0};
    step_platoon(p, inst, cmd, jitter);
    step_platoon(p, inst, cmd, jitter);
    CHECK(p.size() == 3);
    const double ego_x_before = p.vehicles[1].state.position_x;
    const double rear_x_before = p.vehicles[2].state.position_x;

    std::vector<Event> events;
    step_platoon(p, inst, cmd, jitter, &events); // trigger step
    REQUIRE(p.size() == 4);
    bool saw_cutin = false;
    for (const Event& e : events) saw_cutin |= e.kind == EventKind::CutIn;
    CHECK(saw_cutin);
    CHECK(p.ego_index() == 1);
    CHECK(p.vehicles[2].state.vclass == VClass::Heavy);
    // spawned at the median of ego and old follower, then advanced one step
    const double spawn_x = 0.5 * (ego_x_before + rear_x_before);
    CHECK(p.vehicles[2].state.position_x == doctest::Approx(spawn_x + 20.0 * 0.05));

    SUBCASE("cut-in ahead shifts the ego index") {
        ScenarioConfig cfg2 = cfg;
        cfg2.cutin = CutInConfig{1, InsertRole::BecomesLeading, VClass::Light};
        ScenarioInstance inst2 = sample_scenario(cfg2, 9);
        inst2.lead_brakes = false;
        Platoon q = make_platoon(inst2);
        Rng jitter2(inst2.jitter_seed);
        step_platoon(q, inst2, cmd, jitter2);
        step_platoon(q, inst2, cmd, jitter2);
        CHECK(q.size() == 4);
        CHECK(q.ego_index() == 2);
        CHECK(q.vehicles[1].state.vclass == VClass::Light);
    }
}

TEST_CASE("step_platoon: determinism over full episodes") {
    ScenarioConfig cfg;
    auto run = [&](std::uint64_t seed) {
        ScenarioInstance inst = sample_scenario(cfg, seed);
        Platoon p = make_platoon(inst);
        Rng jitter(inst.jitter_seed);
        const double cmd[1] = {-0.3};
        for (int k = 0; k < 400; ++k) step_platoon(p, inst, cmd, jitter);
        return p;
    };
    const Platoon a = run(11), b = run(11);
    for (int i = 0; i < a.size(); ++i) {
        CHECK(a.vehicles[i].state.position_x == b.vehicles[i].state.position_x);
        CHECK(a.vehicles[i].state.velocity == b.vehicles[i].state.velocity);
    }
}

TEST_CASE("platoon invariants: velocity floor, order preservation, energy sanity") {
    ScenarioConfig cfg;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ScenarioInstance inst = sample_scenario(cfg, seed);
        Platoon p = make_platoon(inst);
        Rng jitter(inst.jitter_seed);
        Rng action_rng(seed);
        bool gap_went_negative = false;
        for (int k = 0; k < 600; ++k) {
            const double cmd[1] = {action_rng.uniform(-7.5, 3.0)};
            step_platoon(p, inst, cmd, jitter);
            for (const auto& v : p.vehicles) CHECK(v.state.velocity >= 0.0);
            for (int i = 0; i + 1 < p.size(); ++i) {
                gap_went_negative |= bumper_gap(p, i, i + 1) < 0.0;
            }
            if (!gap_went_negative) {
                for (int i = 0; i + 1 < p.size(); ++i) {
                    CHECK(p.vehicles[i].state.position_x > p.vehicles[i + 1].state.position_x);
                }
            }
        }
    }

    // zero jitter, zero commands, no brake: kinetic state is constant
    ScenarioConfig quiet;
    quiet.jitter_accel.std = 0.0;
    ScenarioInstance inst = sample_scenario(quiet, 4);
    inst.lead_brakes = false;
    Platoon p = make_platoon(inst);
    Rng jitter(inst.jitter_seed);
    const double cmd[1] = {0.0};
    for (int k = 0; k < 200; ++k) step_platoon(p, inst, cmd, jitter);
    for (const auto& v : p.vehicles) CHECK(v.state.velocity == doctest::Approx(20.0));
}

TEST_CASE("observe: ground truth path and estimator path") {
    ScenarioConfig cfg;
    cfg.jitter_accel.std = 0.0;
    ScenarioInstance inst = sample_scenario(cfg, 8);
    inst.lead_brakes = false;
    Platoon p = make_platoon(inst);
    Rng jitter(inst.jitter_seed);

    EgoObserver truth;
    EnvState s = truth.observe(p, 1);
    CHECK(s.v_f == doctest::Approx(20.0));
    CHECK(s.v_m == doctest::Approx(20.0));
    CHECK(s.v_r == doctest::Approx(20.0));
    CHECK(s.a_f == doctest::Approx(0.0));

    // constant-velocity neighbors: Kalman velocity within 1% after warm-up
    EgoObserver est(true, 5.0, 0.04);
    const double cmd[1] = {0.0};
    EnvState se;
    for (int k = 0; k < 100; ++k) {
        se = est.observe(p, 1);
        step_platoon(p, inst, cmd, jitter);
    }
    se = est.observe(p, 1);
    CHECK(se.v_f == doctest::Approx(20.0).epsilon(0.01));
    CHECK(se.v_r == doctest::Approx(20.0).epsilon(0.01));

    // trailing ego keeps the +inf sentinel
    EgoObserver t2;
    const EnvState last = t2.observe(p, 2);
    CHECK(std::isinf(last.d_mr));
}
