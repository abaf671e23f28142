//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use airship::aero::{drag_coefficient, lift_coefficient, AeroKind, AeroPrimitive};
use airship::control::{correct_setpoint, SetpointCase};
use airship::environment::{DrydenState, WindConfig};
use airship::scenario::{preset, run, write_csv, Summary, TelemetryFrame, PRESETS};
use airship::vehicle::reference_blimp;
use nalgebra::{Isometry3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let o = f();
    (o, start.elapsed())
}

struct Runs {
    frames: BTreeMap<&'static str, Vec<TelemetryFrame>>,
    summaries: BTreeMap<&'static str, Summary>,
    csv: BTreeMap<&'static str, Vec<u8>>,
    wall: BTreeMap<&'static str, Duration>,
}

fn csv_bytes(frames: &[TelemetryFrame]) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(&mut out, frames).expect("csv");
    out
}

fn run_presets() -> Runs {
    let mut runs = Runs { frames: BTreeMap::new(), summaries: BTreeMap::new(), csv: BTreeMap::new(), wall: BTreeMap::new() };
    for name in PRESETS {
        let spec = preset(name).unwrap();
        let start = Instant::now();
        let out = run::<f64>(&spec, &reference_blimp()).expect("preset runs");
        runs.wall.insert(name, start.elapsed());
        runs.csv.insert(name, csv_bytes(&out.frames));
        runs.frames.insert(name, out.frames);
        runs.summaries.insert(name, out.summary);
    }
    runs
}

fn coefficient_oracle() -> Outcome {
    fn lift(cl0: f64, stall: f64, alpha: f64) -> f64 {
        let a = alpha.abs();
        if a <= stall {
            cl0 * a / stall
        } else {
            cl0 * (FRAC_PI_2 - a) / (FRAC_PI_2 - stall)
        }
    }
    fn drag(cd0: f64, cd1: f64, alpha: f64) -> f64 {
        cd0 + (cd1 - cd0) * alpha.abs() / FRAC_PI_2
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut endpoints_exact = true;
    for _ in 0..10_000 {
        let (cl0, cd0, cd1) = (rng.random_range(0.0..2.0), rng.random_range(0.0..1.0), rng.random_range(0.0..2.0));
        let stall = rng.random_range(0.01..FRAC_PI_2 - 0.01);
        let alpha = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let p = AeroPrimitive::new(AeroKind::QuasiPlanar, 1.0, cl0, cd0, cd1, stall).unwrap();
        worst = worst
            .max((lift_coefficient(alpha, &p) - lift(cl0, stall, alpha)).abs())
            .max((drag_coefficient(alpha, &p) - drag(cd0, cd1, alpha)).abs());
        endpoints_exact &= lift_coefficient(0.0, &p) == 0.0
            && lift_coefficient(stall, &p) == cl0
            && lift_coefficient(FRAC_PI_2, &p) == 0.0
            && lift_coefficient(-FRAC_PI_2, &p) == 0.0
            && drag_coefficient(0.0, &p) == cd0
            && drag_coefficient(FRAC_PI_2, &p) == cd1;
    }
    outcome(worst <= 1e-12 && endpoints_exact, format!("max error {worst:.1e}, endpoints exact: {endpoints_exact}"))
}

fn setpoint_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vec3 = |rng: &mut ChaCha8Rng, r: f64| {
        Vector3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
    };
    let mut worst: f64 = 0.0;
    let mut cases = [0usize; 5];
    for _ in 0..100_000 {
        let v = vec3(&mut rng, 3.0);
        let f = vec3(&mut rng, 3.0);
        let v_min = rng.random_range(0.2..2.0);
        let v_max = v_min + rng.random_range(0.1..3.0);
        let out = correct_setpoint(&v, &f, v_min, v_max, 0.0);
        let air = out.air_setpoint.norm();
        let err = match out.case {
            SetpointCase::Min => (air - v_min).abs(),
            SetpointCase::Max => (air - v_max).abs(),
            SetpointCase::Nominal => {
                (out.scale - 1.0).abs() + (v_min - air).max(0.0) + (air - v_max).max(0.0)
            }
            SetpointCase::Unreachable => (v_max - air).max(0.0),
            SetpointCase::Degenerate => 0.0,
        };
        cases[out.case as usize] += 1;
        let mut e = err;
        if out.scale > 0.0 {
            let ground = out.air_setpoint + f;
            e = e.max(ground.cross(&v).norm() / (v.norm() * v.norm()));
            if ground.dot(&v) < 0.0 {
                e = f64::INFINITY;
            }
        }
        worst = worst.max(e);
    }
    outcome(
        worst <= 1e-9,
        format!(
            "max violation {worst:.1e} over min/nominal/max/unreachable = {}/{}/{}/{}",
            cases[0], cases[1], cases[2], cases[3]
        ),
    )
}

fn dryden_statistics() -> Outcome {
    let (airspeed, altitude, dt, n) = (2.0, 50.0, 0.5, 1_000_000usize);
    let config = WindConfig { magnitude: 3.0, seed: 3, ..WindConfig::default() };

    let h_ft: f64 = altitude / 0.3048;
    let w20 = 3.0 * 3.0 * 1852.0 / 3600.0;
    let sigma_w = 0.1 * w20;
    let sigma_u = sigma_w / (0.177 + 0.000823 * h_ft).powf(0.4);
    let l_u = h_ft / (0.177 + 0.000823 * h_ft).powf(1.2) * 0.3048;
    let expected = [sigma_u, sigma_u, sigma_w];

    let mut state = DrydenState::<f64>::new(config.seed);
    let mut series: [Vec<f64>; 3] = Default::default();
    for _ in 0..n {
        let g = state.step(dt, airspeed, altitude, &config);
        for i in 0..3 {
            series[i].push(g[i]);
        }
    }

    let mut pass = true;
    let mut detail = Vec::new();
    for (i, x) in series.iter().enumerate() {
        let mean = x.iter().sum::<f64>() / n as f64;
        let sigma = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let ratio = sigma / expected[i];
        pass &= (ratio - 1.0).abs() <= 0.10 && mean.abs() < 0.05 * sigma;
        detail.push(format!("{}: sigma/expected {ratio:.3}, |mean|/sigma {:.3}", ["u", "v", "w"][i], mean.abs() / sigma));
    }

    let u = &series[0];
    let mean = u.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = u.iter().map(|v| v - mean).collect();
    let r0 = c.iter().map(|v| v * v).sum::<f64>();
    let target = (-1.0f64).exp();
    let mut prev = 1.0;
    let mut lag_time = f64::NAN;
    for lag in 1..n / 10 {
        let r = c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / r0;
        if r <= target {
            let frac = (prev - target) / (prev - r);
            lag_time = (lag as f64 - 1.0 + frac) * dt;
            break;
        }
        prev = r;
    }
    let expected_time = l_u / airspeed;
    let ratio = lag_time / expected_time;
    pass &= (ratio - 1.0).abs() <= 0.15;
    detail.push(format!("u correlation time {lag_time:.1} s vs {expected_time:.1} s"));
    outcome(pass, detail.join("; "))
}

fn conservation() -> Outcome {
    let mut v = airship::Vehicle::assemble(&reference_blimp(), Isometry3::identity()).unwrap();
    v.world.gravity = Vector3::zeros();
    let count = v.world.bodies().len();
    for i in 0..count {
        let k = i as f64;
        let s = v.world.state_mut(airship::multibody::BodyId(i));
        s.velocity = Vector3::new(1.0, 0.5, 0.2) + Vector3::new(k.sin(), k.cos(), (2.0 * k).sin()) * 0.05;
        s.angular_velocity = Vector3::new((3.0 * k).cos(), (5.0 * k).sin(), k.cos()) * 0.05;
    }
    let (p0, _) = v.world.total_momentum();
    let e0 = v.world.mechanical_energy();
    let mut energy = e0;
    let mut worst_rise: f64 = 0.0;
    for _ in 0..10_000 {
        v.world.step(0.001, &[]).unwrap();
        let e = v.world.mechanical_energy();
        worst_rise = worst_rise.max((e - energy) / e0);
        energy = e;
    }
    let drift = (v.world.total_momentum().0 - p0).norm() / p0.norm();
    let pass = drift < 1e-6 && worst_rise <= 1e-9;
    outcome(
        pass,
        format!(
            "momentum drift {drift:.1e}, largest step energy rise {worst_rise:.1e} of E0, energy {:.4} -> {:.4} J",
            e0, energy
        ),
    )
}

fn tail(frames: &[TelemetryFrame], seconds: f64) -> &[TelemetryFrame] {
    let end = frames.last().unwrap().t_s;
    let k = frames.iter().position(|f| f.t_s > end - seconds).unwrap();
    &frames[k..]
}

fn exp2(runs: &Runs) -> Outcome {
    let f = tail(&runs.frames["exp2-loiter"], 120.0);
    let n = f.len() as f64;
    let airspeed = f.iter().map(|f| f.airspeed_m_s).sum::<f64>() / n;
    let yaw_rate = f.iter().map(|f| f.hull_r_rad_s.abs()).sum::<f64>() / n;
    let limit = 10f64.to_radians();
    let wall = runs.wall["exp2-loiter"];
    let pass = (airspeed - 1.0).abs() <= 0.15 && (yaw_rate / limit - 1.0).abs() <= 0.15 && wall.as_secs_f64() < 120.0;
    outcome(
        pass,
        format!("mean airspeed {airspeed:.3} m/s, mean |yaw rate| {yaw_rate:.4} rad/s (limit {limit:.4}), wall {wall:.1?}"),
    )
}

fn exp3(runs: &Runs) -> Outcome {
    let frames = &runs.frames["exp3-path"];
    let summary = &runs.summaries["exp3-path"];
    let spec = preset("exp3-path").unwrap();
    let path = spec.path.unwrap();
    let n = path.waypoints.len();
    let transitions = &summary.waypoint_transitions;
    let laps = transitions.len() / n;
    let mut captured = true;
    for lap in 0..3 {
        for seg in 0..n {
            match transitions.get(lap * n + seg) {
                Some(t) => captured &= t.segment_index as usize == seg && t.miss_distance_m <= path.acceptance_radius,
                None => captured = false,
            }
        }
    }
    let worst_miss = transitions.iter().map(|t| t.miss_distance_m).fold(0.0, f64::max);
    let first_lap_end = transitions.get(n - 1).map_or(f64::INFINITY, |t| t.t_s);
    let after: Vec<f64> = frames.iter().filter(|f| f.t_s > first_lap_end).map(|f| f.cross_track_m).collect();
    let rms = if after.is_empty() {
        f64::INFINITY
    } else {
        (after.iter().map(|x| x * x).sum::<f64>() / after.len() as f64).sqrt()
    };
    outcome(
        rms < 5.0 && captured && laps >= 4,
        format!(
            "cross-track RMS after lap 1 (t > {first_lap_end:.0} s) {rms:.2} m, {laps} laps, worst capture distance {worst_miss:.2} m"
        ),
    )
}

fn exp4(runs: &Runs) -> Outcome {
    const EXCURSION_M: f64 = 2.0;
    const RETURN_M: f64 = 1.0;
    const END_MARGIN_S: f64 = 30.0;

    let frames = &runs.frames["exp4-wind-loiter"];
    let hold = preset("exp4-wind-loiter").unwrap().loiter.unwrap().hold;
    let end = frames.last().unwrap().t_s;
    let settled: Vec<&TelemetryFrame> = frames.iter().filter(|f| f.t_s >= end / 3.0).collect();
    let worst = settled.iter().map(|f| (f.position() - hold).xy().norm()).fold(0.0, f64::max);
    let worst_3d = settled.iter().map(|f| (f.position() - hold).norm()).fold(0.0, f64::max);

    // An excursion starts when the altitude error first exceeds the threshold
    // and ends when it is back within the return band.
    let mut excursions = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for f in frames {
        let e = (f.z_m - f.ref_z_m).abs();
        match open.as_mut() {
            None if e > EXCURSION_M => open = Some((f.t_s, e)),
            Some((_, peak)) if e > *peak => *peak = e,
            Some((start, peak)) if e <= RETURN_M => {
                excursions.push((*start, *peak, true));
                open = None;
            }
            _ => {}
        }
    }
    if let Some((start, peak)) = open {
        excursions.push((start, peak, false));
    }
    let judged: Vec<_> = excursions.iter().filter(|x| x.0 < end - END_MARGIN_S).collect();
    let returned = judged.iter().all(|x| x.2);
    let largest = excursions.iter().map(|x| x.1).fold(0.0, f64::max);

    let gust = |name: &str| -> Vec<[f64; 3]> {
        runs.frames[name].iter().map(|f| [f.wind_x_m_s, f.wind_y_m_s, f.wind_z_m_s]).collect()
    };
    let identical = gust("exp4-wind-loiter") == gust("exp4-wind-path");

    outcome(
        worst < 25.0 && !judged.is_empty() && largest >= 3.0 && returned && identical,
        format!(
            "max horizontal distance from hold point over final 2/3 {worst:.2} m ({worst_3d:.2} m in 3D); {} altitude excursions > {EXCURSION_M} m \
             (largest {largest:.1} m), all returned within {RETURN_M} m: {returned}; gust series identical: {identical}",
            judged.len()
        ),
    )
}

fn exp5(runs: &Runs) -> Outcome {
    let s = &runs.summaries["exp5-deflate-loiter"];
    let post = s.post.as_ref().expect("deflation recorded");
    let ratio = post.altitude_error_std_m / s.pre.altitude_error_std_m;
    let pitch = s.pitch_peak_rise_db.unwrap_or(f64::NEG_INFINITY);
    let yaw = s.yaw_hf_rise_db.unwrap_or(f64::NEG_INFINITY);
    outcome(
        ratio >= 1.5 && pitch >= 6.0 && yaw >= 6.0,
        format!(
            "altitude sigma {:.3} -> {:.3} m (x{ratio:.2}); pitch-rate peak at {:.3} Hz rises {pitch:.1} dB; \
             yaw HF power rises {yaw:.1} dB",
            s.pre.altitude_error_std_m,
            post.altitude_error_std_m,
            post.pitch_rate_peak_hz.unwrap_or(f64::NAN)
        ),
    )
}

fn determinism(runs: &Runs) -> Outcome {
    let mut differing = Vec::new();
    for name in PRESETS {
        let again = run::<f64>(&preset(name).unwrap(), &reference_blimp()).unwrap();
        if csv_bytes(&again.frames) != runs.csv[name] {
            differing.push(name);
        }
    }
    outcome(differing.is_empty(), format!("{} presets rerun, differing: {differing:?}", PRESETS.len()))
}

fn main() {
    let mut results: Vec<(&str, Outcome, Option<Duration>)> = Vec::new();
    let mut limited = |name: &'static str, limit: f64, f: fn() -> Outcome| {
        let (mut o, wall) = timed(f);
        if wall.as_secs_f64() >= limit {
            o.pass = false;
        }
        o.detail = format!("{}; wall {wall:.2?} (limit {limit} s)", o.detail);
        results.push((name, o, Some(wall)));
    };
    limited("coefficient curves match the closed form", 1.0, coefficient_oracle);
    limited("setpoint correction invariants", 5.0, setpoint_invariants);
    limited("Dryden turbulence statistics", 10.0, dryden_statistics);
    let (o, wall) = timed(conservation);
    results.push(("momentum and energy conservation", o, Some(wall)));

    let runs = run_presets();
    results.push(("loiter settles into a v_min orbit", exp2(&runs), None));
    results.push(("square path tracking", exp3(&runs), None));
    results.push(("station keeping in gusty wind", exp4(&runs), None));
    results.push(("deflation excites altitude, pitch and yaw oscillation", exp5(&runs), None));
    results.push(("seeded runs are byte-identical", determinism(&runs), None));

    let mut failed = 0;
    for (name, o, _) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
