//! The reference blimp: a 5 m, 10 kg non-rigid airship with two hull
//! sections, a cruciform tail with four movable surfaces, a gondola with two
//! vectored main thrusters, and a lateral yaw thruster on the lower fin.

use std::f64::consts::{FRAC_PI_2, PI};

use super::config::*;
use crate::aero::{distribute_hull_drag, AeroKind, AIR_DENSITY};
use crate::control::{Channel, ControllerGains};
use crate::multibody::Shape;
use crate::GRAVITY;

const HULL_LENGTH: f64 = 5.0;
const HULL_RADIUS: f64 = 0.9;
const TOTAL_MASS: f64 = 10.0;
const HULL_DRAG: f64 = 0.06;
/// Buoyant lift over weight. The vectored thrust carries the rest.
pub const LIFT_TRIM: f64 = 0.97;
/// Natural frequency of the rigid joints, rad/s.
const RIGID_OMEGA: f64 = 120.0;
const RIGID_ZETA: f64 = 0.7;
/// Worst acceptable gravity sag of a rigid joint, rad.
const RIGID_SAG: f64 = 0.1 * PI / 180.0;
const HULL_FREE_PLAY: f64 = 0.2 * PI / 180.0;
const FIN_X: f64 = -2.1;
const SURFACE_CHORD: f64 = 0.35;
const FIN_CHORD: f64 = 0.6;
const FIN_SPAN: f64 = 0.7;

fn body(name: &str, mass: f64, shape: Shape, position: Vec3) -> BodyConfig {
    BodyConfig { name: name.into(), mass, inertia: shape.solid_inertia(mass), shape, position, rpy: [0.0; 3] }
}

/// Stiff, well damped joint sized from the child's mass properties about the
/// anchor and from the weight of everything it carries (`load`, which
/// includes the child).
fn rigid(name: &str, parent: &BodyConfig, child: &BodyConfig, anchor: Vec3, load: &[&BodyConfig]) -> JointConfig {
    let m = child.mass;
    let r: Vec3 = std::array::from_fn(|i| child.position[i] - anchor[i]);
    let r2: f64 = r.iter().map(|x| x * x).sum();
    let carried: f64 = load.iter().map(|b| b.mass).sum();
    let gravity_torque: f64 = load
        .iter()
        .map(|b| b.mass * GRAVITY * (b.position[0] - anchor[0]).hypot(b.position[1] - anchor[1]))
        .sum();
    let (w, z) = (RIGID_OMEGA, RIGID_ZETA);
    let mut k_rot = [0.0; 3];
    let mut c_rot = [0.0; 3];
    for i in 0..3 {
        let inertia = child.inertia[i] + m * (r2 - r[i] * r[i]);
        k_rot[i] = (inertia * w * w).max(gravity_torque / RIGID_SAG);
        c_rot[i] = 2.0 * z * (k_rot[i] * inertia).sqrt();
    }
    let k_lin = carried * w * w;
    JointConfig {
        name: name.into(),
        parent: parent.name.clone(),
        child: child.name.clone(),
        anchor,
        rpy: [0.0; 3],
        linear_stiffness: [k_lin; 3],
        linear_damping: [2.0 * z * (k_lin * m).sqrt(); 3],
        rotational_stiffness: k_rot,
        rotational_damping: c_rot,
        linear_free_play: [0.0; 3],
        rotational_free_play: [0.0; 3],
        hull_attachment: false,
    }
}

fn hull_joint(mut j: JointConfig) -> JointConfig {
    j.hull_attachment = true;
    j.rotational_free_play = [HULL_FREE_PLAY; 3];
    j
}

fn planar(name: &str, body: &str, area: f64, cl0: f64, vertical: bool) -> AeroConfig {
    AeroConfig {
        name: name.into(),
        body: body.into(),
        kind: AeroKind::QuasiPlanar,
        area,
        cl0,
        cd0: 0.02,
        cd1: 1.2,
        alpha_stall: 0.3,
        k_q: 0.5 * AIR_DENSITY,
        offset: [0.0; 3],
        rpy: if vertical { [FRAC_PI_2, 0.0, 0.0] } else { [0.0; 3] },
    }
}

/// Controller gains tuned on this vehicle in simulation.
pub fn reference_gains() -> ControllerGains<f64> {
    ControllerGains::default()
}

/// Builds the reference vehicle description.
pub fn reference_blimp() -> VehicleConfig {
    let half = HULL_LENGTH / 4.0;
    let hull_mass = 2.875;
    let hull_shape = Shape::Cylinder { radius: HULL_RADIUS, length: HULL_LENGTH / 2.0 };
    let hull_front = body("hull_front", hull_mass, hull_shape, [half, 0.0, 0.0]);
    let hull_rear = body("hull_rear", hull_mass, hull_shape, [-half, 0.0, 0.0]);

    let gondola_z = -1.0;
    let gondola = body("gondola", 0.8, Shape::Box { size: [0.6, 0.3, 0.25] }, [0.6, 0.0, gondola_z]);

    // Radius of the ellipsoidal envelope at the fin station.
    let root = HULL_RADIUS * (1.0 - (FIN_X / (HULL_LENGTH / 2.0)).powi(2)).sqrt();
    let mid = root + FIN_SPAN / 2.0;
    let hinge_x = FIN_X - FIN_CHORD / 4.0;
    let surface_x = hinge_x - SURFACE_CHORD / 2.0;
    let vertical_fin = Shape::Box { size: [FIN_CHORD, 0.02, FIN_SPAN] };
    let horizontal_fin = Shape::Box { size: [FIN_CHORD, FIN_SPAN, 0.02] };
    let vertical_surface = Shape::Box { size: [SURFACE_CHORD, 0.01, FIN_SPAN] };
    let horizontal_surface = Shape::Box { size: [SURFACE_CHORD, FIN_SPAN, 0.01] };

    let fin_top = body("fin_top", 0.25, vertical_fin, [FIN_X, 0.0, mid]);
    let fin_bottom = body("fin_bottom", 0.25, vertical_fin, [FIN_X, 0.0, -mid]);
    let fin_left = body("fin_left", 0.25, horizontal_fin, [FIN_X, mid, 0.0]);
    let fin_right = body("fin_right", 0.25, horizontal_fin, [FIN_X, -mid, 0.0]);
    let rudder_top = body("rudder_top", 0.1, vertical_surface, [surface_x, 0.0, mid]);
    let rudder_bottom = body("rudder_bottom", 0.1, vertical_surface, [surface_x, 0.0, -mid]);
    let elevator_left = body("elevator_left", 0.1, horizontal_surface, [surface_x, mid, 0.0]);
    let elevator_right = body("elevator_right", 0.1, horizontal_surface, [surface_x, -mid, 0.0]);

    let pod = Shape::Cylinder { radius: 0.08, length: 0.2 };
    let thruster_left = body("thruster_left", 0.25, pod, [0.6, 0.3, gondola_z]);
    let thruster_right = body("thruster_right", 0.25, pod, [0.6, -0.3, gondola_z]);
    let yaw_z = -(root + 0.1);
    let yaw_thruster = body("yaw_thruster", 0.15, Shape::Cylinder { radius: 0.05, length: 0.1 }, [FIN_X, 0.0, yaw_z]);

    let mut bodies = vec![
        hull_front,
        hull_rear,
        gondola,
        fin_top,
        fin_bottom,
        fin_left,
        fin_right,
        rudder_top,
        rudder_bottom,
        elevator_left,
        elevator_right,
        thruster_left,
        thruster_right,
        yaw_thruster,
    ];

    // Ballast in the nose brings the centre of mass over the centre of
    // buoyancy (the hull centre) and the total mass to the target.
    let partial: f64 = bodies.iter().map(|b| b.mass).sum();
    let ballast_mass = TOTAL_MASS - partial;
    let moment: f64 = bodies.iter().map(|b| b.mass * b.position[0]).sum();
    let ballast_x = -moment / ballast_mass;
    debug_assert!(ballast_mass > 0.0 && ballast_x.abs() < HULL_LENGTH / 2.0);
    let ballast = body("ballast", ballast_mass, Shape::Box { size: [0.2, 0.2, 0.1] }, [ballast_x, 0.0, -0.7]);
    bodies.push(ballast);

    let b = |name: &str| bodies.iter().find(|x| x.name == name).expect("reference body");
    let ballast_position = b("ballast").position;
    let layout: [(&str, &str, &str, Vec3, bool); 14] = [
        ("hull_bend", "hull_front", "hull_rear", [0.0; 3], true),
        ("gondola_mount", "hull_front", "gondola", [0.6, 0.0, gondola_z + 0.125], true),
        ("fin_top_mount", "hull_rear", "fin_top", [FIN_X, 0.0, root], true),
        ("fin_bottom_mount", "hull_rear", "fin_bottom", [FIN_X, 0.0, -root], true),
        ("fin_left_mount", "hull_rear", "fin_left", [FIN_X, root, 0.0], true),
        ("fin_right_mount", "hull_rear", "fin_right", [FIN_X, -root, 0.0], true),
        ("rudder_top_hinge", "fin_top", "rudder_top", [hinge_x, 0.0, mid], false),
        ("rudder_bottom_hinge", "fin_bottom", "rudder_bottom", [hinge_x, 0.0, -mid], false),
        ("elevator_left_hinge", "fin_left", "elevator_left", [hinge_x, mid, 0.0], false),
        ("elevator_right_hinge", "fin_right", "elevator_right", [hinge_x, -mid, 0.0], false),
        ("thruster_left_mount", "gondola", "thruster_left", [0.6, 0.3, gondola_z], false),
        ("thruster_right_mount", "gondola", "thruster_right", [0.6, -0.3, gondola_z], false),
        ("yaw_thruster_mount", "fin_bottom", "yaw_thruster", [FIN_X, 0.0, yaw_z], false),
        ("ballast_mount", "hull_front", "ballast", ballast_position, false),
    ];
    // Everything hanging below a body in the joint tree, the body included.
    // Buoyant bodies carry their own weight.
    fn subtree<'a>(root: &'a str, layout: &[(&str, &'a str, &'a str, Vec3, bool)], out: &mut Vec<&'a str>) {
        out.push(root);
        for (_, parent, child, _, _) in layout {
            if *parent == root {
                subtree(child, layout, out);
            }
        }
    }
    let joints = layout
        .iter()
        .map(|(name, parent, child, anchor, hull)| {
            let mut names = Vec::new();
            subtree(child, &layout, &mut names);
            let load: Vec<&BodyConfig> =
                names.iter().filter(|n| !n.starts_with("hull")).map(|n| b(n)).collect();
            let joint = rigid(name, b(parent), b(child), *anchor, &load);
            if *hull {
                hull_joint(joint)
            } else {
                joint
            }
        })
        .collect();

    let frontal = PI * HULL_RADIUS * HULL_RADIUS;
    let hull_cd = distribute_hull_drag(2, HULL_DRAG, &[1.0, 1.0]).expect("valid hull drag split");
    let hull_aero = |name: &str, cd0: f64| AeroConfig {
        name: name.into(),
        body: name.into(),
        kind: AeroKind::QuasiCylindrical,
        area: frontal,
        cl0: 0.5,
        cd0,
        cd1: 1.2,
        alpha_stall: 0.35,
        k_q: 0.5 * AIR_DENSITY,
        offset: [0.0; 3],
        rpy: [0.0; 3],
    };
    let fin_area = FIN_CHORD * FIN_SPAN;
    let surface_area = SURFACE_CHORD * FIN_SPAN;
    let aero = vec![
        hull_aero("hull_front", hull_cd[0]),
        hull_aero("hull_rear", hull_cd[1]),
        AeroConfig {
            name: "gondola".into(),
            body: "gondola".into(),
            kind: AeroKind::QuasiCylindrical,
            area: 0.3 * 0.25,
            cl0: 0.0,
            cd0: 0.8,
            cd1: 1.0,
            alpha_stall: 0.3,
            k_q: 0.5 * AIR_DENSITY,
            offset: [0.0; 3],
            rpy: [0.0; 3],
        },
        planar("fin_top", "fin_top", fin_area, 1.2, true),
        planar("fin_bottom", "fin_bottom", fin_area, 1.2, true),
        planar("fin_left", "fin_left", fin_area, 1.2, false),
        planar("fin_right", "fin_right", fin_area, 1.2, false),
        planar("rudder_top", "rudder_top", surface_area, 1.5, true),
        planar("rudder_bottom", "rudder_bottom", surface_area, 1.5, true),
        planar("elevator_left", "elevator_left", surface_area, 1.5, false),
        planar("elevator_right", "elevator_right", surface_area, 1.5, false),
    ];

    // Ellipsoidal envelope split evenly between the two sections, with the
    // lift coefficient trimmed slightly heavy.
    let volume = 4.0 / 3.0 * PI * (HULL_LENGTH / 2.0) * HULL_RADIUS * HULL_RADIUS;
    let coefficient = LIFT_TRIM * TOTAL_MASS / (volume * AIR_DENSITY);
    let buoyancy = vec![
        BuoyancyConfig { body: "hull_front".into(), volume: volume / 2.0, coefficient, center: [0.0; 3] },
        BuoyancyConfig { body: "hull_rear".into(), volume: volume / 2.0, coefficient, center: [0.0; 3] },
    ];

    let servo = |channel, joint: &str, axis, gain| ActuatorConfig::Servo {
        channel,
        joint: joint.into(),
        axis,
        max_angle: 0.45,
        rate_limit: 2.0,
        gain,
    };
    let main = |channel, body: &str| ActuatorConfig::Thruster {
        channel,
        body: body.into(),
        point: [0.0; 3],
        direction: [1.0, 0.0, 0.0],
        max_thrust: 4.0,
        vectored: true,
    };
    let actuators = vec![
        ActuatorConfig::Thruster {
            channel: Channel::YawThruster,
            body: "yaw_thruster".into(),
            point: [0.0; 3],
            direction: [0.0, -1.0, 0.0],
            max_thrust: 5.0,
            vectored: false,
        },
        servo(Channel::TopRudder, "rudder_top_hinge", 2, -1.0),
        servo(Channel::BottomRudder, "rudder_bottom_hinge", 2, -1.0),
        servo(Channel::LeftElevator, "elevator_left_hinge", 1, 1.0),
        servo(Channel::RightElevator, "elevator_right_hinge", 1, 1.0),
        ActuatorConfig::VectorServo { channel: Channel::ThrustVector, max_angle: FRAC_PI_2, rate_limit: 1.0 },
        main(Channel::LeftThruster, "thruster_left"),
        main(Channel::RightThruster, "thruster_right"),
    ];

    VehicleConfig {
        name: "reference_blimp".into(),
        bodies,
        joints,
        aero,
        buoyancy,
        actuators,
        sensors: SensorConfig {
            nav_body: "hull_front".into(),
            nav_offset: [-half, 0.0, 0.0],
            gyro_body: "fin_top".into(),
            gyro_cutoff_hz: 2.0,
            airspeed: AirspeedSensorConfig { body: "hull_front".into(), enabled: true },
        },
        gains: reference_gains(),
        inflation: InflationLaw::default(),
    }
}
