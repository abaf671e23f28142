use super::*;
use crate::multibody::Shape;
use approx::assert_relative_eq;

fn blimp() -> Vehicle<f64> {
    Vehicle::assemble(&reference_blimp(), Isometry3::identity()).unwrap()
}

fn commands(pairs: &[(Channel, f64)]) -> ActuatorCommands<f64> {
    let mut c = ActuatorCommands::default();
    for (ch, v) in pairs {
        c.0[*ch as usize] = *v;
    }
    c
}

#[test]
fn reference_blimp_mass_and_size() {
    let cfg = reference_blimp();
    assert_relative_eq!(cfg.total_mass(), 10.0, epsilon = 1e-12);
    let (lo, hi) = cfg.bodies.iter().fold((f64::MAX, f64::MIN), |(lo, hi), b| {
        let half = match b.shape {
            Shape::Cylinder { length, .. } => length / 2.0,
            Shape::Box { size } => size[0] / 2.0,
            Shape::Ellipsoid { semi_axes } => semi_axes[0],
        };
        (lo.min(b.position[0] - half), hi.max(b.position[0] + half))
    });
    let length = hi - lo;
    assert!((length - 5.0).abs() < 0.5, "overall length {length}");
    assert_eq!(cfg.buoyancy.len(), 2);
}

#[test]
fn reference_blimp_is_trimmed_slightly_heavy() {
    let trim = blimp().trim_report();
    assert!((trim.buoyancy / trim.weight - LIFT_TRIM).abs() < 1e-9, "{trim:?}");
    assert!(trim.net_vertical_force < 0.0);
    assert!((trim.center_of_mass[0] - trim.center_of_buoyancy[0]).abs() < 1e-9);
    assert!(trim.center_of_mass[2] < trim.center_of_buoyancy[2], "bottom heavy");
}

#[test]
fn load_from_json_reports_trim() {
    let text = reference_blimp().to_json();
    let (vehicle, trim) = load_vehicle::<f64>(&text).unwrap();
    assert_eq!(vehicle.world.bodies().len(), 15);
    assert_relative_eq!(trim.mass, 10.0, epsilon = 1e-12);
}

#[test]
fn dangling_joint_reference_names_the_joint() {
    let mut cfg = reference_blimp();
    cfg.joints[3].child = "no_such_body".into();
    match cfg.validate() {
        Err(VehicleError::DanglingReference { item, name, .. }) => {
            assert!(item.contains(&cfg.joints[3].name), "{item}");
            assert_eq!(name, "no_such_body");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn empty_body_list_is_a_schema_error() {
    let mut cfg = reference_blimp();
    cfg.bodies.clear();
    assert!(matches!(cfg.validate(), Err(VehicleError::Schema { path, .. }) if path == "bodies"));
}

#[test]
fn non_positive_mass_rejected() {
    let mut cfg = reference_blimp();
    cfg.bodies[2].mass = 0.0;
    assert_eq!(cfg.validate(), Err(VehicleError::NonPositiveMass("gondola".into())));
}

#[test]
fn schema_errors_carry_field_paths() {
    let mut doc: serde_json::Value = serde_json::from_str(&reference_blimp().to_json()).unwrap();
    doc["bodies"][1]["mass"] = serde_json::json!("heavy");
    match VehicleConfig::from_json(&doc.to_string()) {
        Err(VehicleError::Schema { path, .. }) => assert_eq!(path, "bodies[1].mass"),
        other => panic!("unexpected {other:?}"),
    }
    let mut doc: serde_json::Value = serde_json::from_str(&reference_blimp().to_json()).unwrap();
    doc["joints"][0]["stiffnes"] = serde_json::json!(1.0);
    assert!(matches!(VehicleConfig::from_json(&doc.to_string()), Err(VehicleError::Schema { path, .. }) if path.starts_with("joints[0]")));
}

#[test]
fn single_hull_section_rejected() {
    let mut cfg = reference_blimp();
    cfg.buoyancy.truncate(1);
    assert!(matches!(cfg.validate(), Err(VehicleError::Schema { path, .. }) if path == "buoyancy"));
}

fn assert_configs_equivalent(a: &VehicleConfig, b: &VehicleConfig) {
    let va = serde_json::to_value(a).unwrap();
    let vb = serde_json::to_value(b).unwrap();
    fn walk(a: &serde_json::Value, b: &serde_json::Value, path: &str) {
        use serde_json::Value::*;
        match (a, b) {
            (Number(x), Number(y)) => {
                let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
                assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{path}: {x} vs {y}");
            }
            (Array(x), Array(y)) => {
                assert_eq!(x.len(), y.len(), "{path}");
                for (i, (p, q)) in x.iter().zip(y).enumerate() {
                    walk(p, q, &format!("{path}[{i}]"));
                }
            }
            (Object(x), Object(y)) => {
                assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>(), "{path}");
                for (k, p) in x {
                    walk(p, &y[k], &format!("{path}.{k}"));
                }
            }
            _ => assert_eq!(a, b, "{path}"),
        }
    }
    walk(&va, &vb, "");
}

#[test]
fn load_then_serialize_round_trips() {
    let cfg = reference_blimp();
    let (vehicle, _) = load_vehicle::<f64>(&cfg.to_json()).unwrap();
    assert_configs_equivalent(&cfg, &vehicle.to_config());
    let reparsed = VehicleConfig::from_json(&vehicle.to_config().to_json()).unwrap();
    assert_configs_equivalent(&cfg, &reparsed);
}

#[test]
fn round_trip_independent_of_placement() {
    let cfg = reference_blimp();
    let placement = Isometry3::new(Vector3::new(3.0, -4.0, 50.0), Vector3::new(0.0, 0.0, 0.7));
    let vehicle = Vehicle::<f64>::assemble(&cfg, placement).unwrap();
    assert_configs_equivalent(&cfg, &vehicle.to_config());
}

fn snapshot(v: &Vehicle<f64>) -> (Vec<JointSpec<f64>>, Vec<f64>) {
    (v.world.joints.clone(), v.buoyancy_sections().iter().map(|s| s.coefficient).collect())
}

#[test]
fn full_inflation_restores_nominal_bitwise() {
    let mut v = blimp();
    let nominal = snapshot(&v);
    v.set_inflation(0.3).unwrap();
    v.deflate(&Deflation { free_play_scale: 8.0, offset: 0.05, stiffness_scale: 0.2, buoyancy_scale: 0.95 }).unwrap();
    v.set_inflation(0.77).unwrap();
    assert_ne!(snapshot(&v), nominal);
    v.set_inflation(1.0).unwrap();
    let restored = snapshot(&v);
    for (a, b) in restored.0.iter().zip(&nominal.0) {
        for (x, y) in [
            (a.linear_stiffness, b.linear_stiffness),
            (a.linear_damping, b.linear_damping),
            (a.rotational_stiffness, b.rotational_stiffness),
            (a.rotational_damping, b.rotational_damping),
            (a.linear_free_play, b.linear_free_play),
            (a.rotational_free_play, b.rotational_free_play),
            (a.rest_offset, b.rest_offset),
        ] {
            for i in 0..3 {
                assert_eq!(x[i].to_bits(), y[i].to_bits(), "joint {}", a.name);
            }
        }
    }
    for (a, b) in restored.1.iter().zip(&nominal.1) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(v.inflation(), InflationState::default());
}

#[test]
fn deflation_scales_hull_attachments_and_buoyancy() {
    let mut v = blimp();
    let (joints, lift) = snapshot(&v);
    let d = Deflation { free_play_scale: 8.0, offset: 0.0, stiffness_scale: 0.2, buoyancy_scale: 0.95 };
    v.deflate(&d).unwrap();
    let once = snapshot(&v);
    v.deflate(&d).unwrap();
    assert_eq!(snapshot(&v), once, "idempotent");
    let hull: Vec<usize> = v.hull_attachments().collect();
    assert!(hull.len() >= 2);
    for (i, (now, before)) in once.0.iter().zip(&joints).enumerate() {
        if hull.contains(&i) {
            assert_relative_eq!(now.rotational_stiffness, before.rotational_stiffness * 0.2, max_relative = 1e-15);
            assert_relative_eq!(now.linear_damping, before.linear_damping * 0.2, max_relative = 1e-15);
            assert_relative_eq!(now.rotational_free_play, before.rotational_free_play * 8.0, max_relative = 1e-15);
        } else {
            assert_eq!(now, before, "joint {} is not a hull attachment", now.name);
        }
    }
    for (now, before) in once.1.iter().zip(&lift) {
        assert_relative_eq!(*now, before * 0.95, max_relative = 1e-15);
    }
}

#[test]
fn inflation_level_follows_scale_laws() {
    let mut v = blimp();
    let (joints, lift) = snapshot(&v);
    v.set_inflation(0.5).unwrap();
    let hull = v.hull_attachments().next().unwrap();
    assert_relative_eq!(v.world.joints[hull].linear_stiffness, joints[hull].linear_stiffness * 0.25, max_relative = 1e-15);
    assert_relative_eq!(v.world.joints[hull].rotational_free_play, joints[hull].rotational_free_play * 1.5, max_relative = 1e-15);
    assert_relative_eq!(v.buoyancy_sections()[0].coefficient, lift[0] * 0.5, max_relative = 1e-15);
    assert!(v.set_inflation(1.2).is_err());
    assert!(v.set_inflation(-0.1).is_err());
}

#[test]
fn inflation_scales_are_monotone() {
    let law = InflationLaw::default();
    let mut prev = law.scales(0.0f64);
    for i in 1..=100 {
        let s = law.scales(i as f64 / 100.0);
        assert!(s.stiffness_scale >= prev.stiffness_scale);
        assert!(s.buoyancy_scale >= prev.buoyancy_scale);
        assert!(s.free_play_scale <= prev.free_play_scale);
        prev = s;
    }
    let full = law.scales(1.0f64);
    assert_eq!((full.stiffness_scale, full.buoyancy_scale, full.free_play_scale), (1.0, 1.0, 1.0));
}

#[test]
fn zero_commands_give_zero_thrust() {
    let mut v = blimp();
    let wrenches = v.actuate(&ActuatorCommands::default(), 0.001);
    assert!(wrenches.iter().all(|w| w.force == Vector3::zeros()));
    assert!(v.servo_angles().iter().all(|(_, a)| *a == 0.0));
}

#[test]
fn full_main_thrust_is_max_thrust_per_thruster() {
    let mut cfg = reference_blimp();
    for a in &mut cfg.actuators {
        if let ActuatorConfig::Thruster { channel: Channel::LeftThruster | Channel::RightThruster, max_thrust, .. } = a {
            *max_thrust = 15.0;
        }
    }
    let mut v = Vehicle::<f64>::assemble(&cfg, Isometry3::identity()).unwrap();
    let w = v.actuate(&commands(&[(Channel::LeftThruster, 1.0), (Channel::RightThruster, 1.0)]), 0.001);
    let mains: Vec<_> = w.iter().filter(|w| w.force.norm() > 0.0).collect();
    assert_eq!(mains.len(), 2);
    for m in mains {
        assert_relative_eq!(m.force, Vector3::new(15.0, 0.0, 0.0), epsilon = 1e-12);
    }
}

#[test]
fn reverse_thrust_allowed() {
    let mut v = blimp();
    let w = v.actuate(&commands(&[(Channel::LeftThruster, -0.5)]), 0.001);
    assert!(w.iter().any(|w| w.force.x < 0.0));
}

#[test]
fn servo_slew_rate() {
    assert_relative_eq!(slew(0.0, 1.0, 2.0, 0.1), 0.2);
    assert_relative_eq!(slew(0.95, 1.0, 2.0, 0.1), 1.0);
    assert_relative_eq!(slew(0.0, -1.0, 2.0, 0.1), -0.2);
}

#[test]
fn servo_drives_joint_rest_angle() {
    let mut v = blimp();
    let cmd = commands(&[(Channel::LeftElevator, 1.0), (Channel::TopRudder, 1.0)]);
    for _ in 0..100 {
        v.actuate(&cmd, 0.001);
    }
    let angles: std::collections::HashMap<_, _> = v.servo_angles().into_iter().collect();
    assert_relative_eq!(angles[&Channel::LeftElevator], 0.2, epsilon = 1e-12);
    assert_relative_eq!(angles[&Channel::TopRudder], -0.2, epsilon = 1e-12);
    let hinge = v.world.joints.iter().find(|j| j.name == "elevator_left_hinge").unwrap();
    assert_relative_eq!(hinge.rest_rotation.y, 0.2, epsilon = 1e-12);
}

#[test]
fn thrust_vector_tilts_main_thrust_upward() {
    let mut v = blimp();
    let cmd = commands(&[(Channel::ThrustVector, 1.0), (Channel::LeftThruster, 1.0)]);
    let mut w = Vec::new();
    for _ in 0..2000 {
        w = v.actuate(&cmd, 0.001);
    }
    assert_relative_eq!(v.vector_angle(), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    let main = w.iter().find(|w| w.force.norm() > 0.0).unwrap();
    assert_relative_eq!(main.force, Vector3::new(0.0, 0.0, 4.0), epsilon = 1e-12);
}

#[test]
fn airspeed_sensor_can_be_disabled() {
    let mut v = blimp();
    assert!(v.read_sensors(&Vector3::zeros()).nav.airspeed.is_some());
    v.set_airspeed_enabled(false);
    assert!(v.read_sensors(&Vector3::zeros()).nav.airspeed.is_none());
}

#[test]
fn airspeed_is_forward_air_relative_speed() {
    let mut v = blimp();
    let id = v.world.body_id("hull_front").unwrap();
    v.world.state_mut(id).velocity = Vector3::new(2.0, 0.3, 0.0);
    let r = v.read_sensors(&Vector3::new(0.5, 0.0, 0.0));
    assert_relative_eq!(r.nav.airspeed.unwrap(), 1.5, epsilon = 1e-12);
}

#[test]
fn attitude_conventions() {
    let yaw = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.4);
    assert_relative_eq!(attitude(&yaw), Vector3::new(0.0, 0.0, 0.4), epsilon = 1e-12);
    // Nose up is a rotation about -y in a forward-left-up body frame.
    let nose_up = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -0.2);
    assert_relative_eq!(attitude(&nose_up), Vector3::new(0.0, 0.2, 0.0), epsilon = 1e-12);
    let fwd = nose_up * Vector3::x();
    assert!(fwd.z > 0.0);
}

/// Puts every body into rigid rotation at `rate` (rad/s) about the principal
/// axis of the assembly nearest to world z, through its centre of mass.
fn spin(v: &mut Vehicle<f64>, rate: f64) {
    let com = v.world.center_of_mass();
    let mut inertia = nalgebra::Matrix3::zeros();
    for b in v.world.bodies() {
        let r = b.state.position - com;
        let rot = b.state.orientation.to_rotation_matrix();
        let local = rot.matrix() * b.primitive.inertia * rot.matrix().transpose();
        inertia += local + (nalgebra::Matrix3::identity() * r.norm_squared() - r * r.transpose()) * b.primitive.mass;
    }
    let eig = inertia.symmetric_eigen();
    let axis = (0..3).map(|i| eig.eigenvectors.column(i).into_owned()).max_by(|a, b| a.z.abs().total_cmp(&b.z.abs())).unwrap();
    let omega = axis * (rate * axis.z.signum());
    for i in 0..v.world.bodies().len() {
        let s = v.world.state_mut(BodyId(i));
        s.velocity = omega.cross(&(s.position - com));
        s.angular_velocity = s.orientation.inverse() * omega;
    }
}

#[test]
fn rigid_turn_gyro_matches_hull_rate() {
    let mut cfg = reference_blimp();
    for j in &mut cfg.joints {
        j.rotational_free_play = [0.0; 3];
    }
    cfg.sensors.gyro_cutoff_hz = 0.0;
    let mut v = Vehicle::<f64>::assemble(&cfg, Isometry3::identity()).unwrap();
    v.world.gravity = Vector3::zeros();
    spin(&mut v, 10f64.to_radians());
    for _ in 0..1000 {
        v.world.step(0.001, &[]).unwrap();
    }
    v.filter_gyro(0.001);
    let r = v.read_sensors(&Vector3::zeros());
    let fin = v.world.state(v.world.body_id("fin_top").unwrap()).orientation;
    let gyro_world = fin * r.gyro;
    assert!((gyro_world - r.hull_rate).norm() < 1e-6, "{:?} vs {:?}", gyro_world, r.hull_rate);
}

#[test]
fn gyro_filter_is_first_order_lag() {
    let mut v = blimp();
    let id = v.world.body_id("fin_top").unwrap();
    let cutoff = reference_blimp().sensors.gyro_cutoff_hz;
    let dt = 0.001;
    let tau = 1.0 / (std::f64::consts::TAU * cutoff);
    let steps = (tau / dt).round() as usize;
    for _ in 0..steps {
        v.world.state_mut(id).angular_velocity = Vector3::new(0.0, 0.0, 1.0);
        v.filter_gyro(dt);
    }
    let z = v.read_sensors(&Vector3::zeros()).gyro.z;
    assert_relative_eq!(z, 1.0 - (-1.0f64).exp(), epsilon = 0.01);
}

#[test]
fn nominal_static_sag_below_half_degree() {
    let mut v = blimp();
    let dt = 0.001;
    for _ in 0..3000 {
        v.step(dt, &Vector3::zeros(), &ActuatorCommands::default()).unwrap();
    }
    let worst = v.joint_deflections().iter().map(|d| d.angular.amax()).fold(0.0, f64::max);
    assert!(worst < 0.5f64.to_radians(), "worst sag {} deg", worst.to_degrees());
    let worst_lin = v.joint_deflections().iter().map(|d| d.linear.amax()).fold(0.0, f64::max);
    assert!(worst_lin < 1e-3, "worst linear sag {worst_lin} m");
}

#[test]
fn neutral_blimp_hovers_in_still_air() {
    let mut cfg = reference_blimp();
    for b in &mut cfg.buoyancy {
        b.coefficient /= LIFT_TRIM;
    }
    let mut v = Vehicle::<f64>::assemble(&cfg, Isometry3::translation(0.0, 0.0, 50.0)).unwrap();
    for _ in 0..5000 {
        v.step(0.001, &Vector3::zeros(), &ActuatorCommands::default()).unwrap();
    }
    let r = v.read_sensors(&Vector3::zeros());
    assert!((r.position - Vector3::new(0.0, 0.0, 50.0)).norm() < 0.05, "{}", r.position);
    assert!(r.nav.attitude.norm() < 0.01, "{}", r.nav.attitude);
}

#[test]
fn assembles_in_single_precision() {
    let mut v = Vehicle::<f32>::assemble(&reference_blimp(), Isometry3::identity()).unwrap();
    for _ in 0..100 {
        v.step(0.001, &Vector3::zeros(), &ActuatorCommands::default()).unwrap();
    }
    assert!((v.trim_report().mass - 10.0).abs() < 1e-5);
}

