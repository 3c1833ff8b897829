//! Shared synthetic fixtures for the integration and acceptance suites.

use nalgebra::{Matrix3, Vector3};

use fsdf::{Primitive, RigidTransform, SceneSpec, Viewpoint};

pub fn axis_box(center: (f64, f64, f64), half: (f64, f64, f64)) -> Primitive {
    Primitive::Box {
        center: Vector3::new(center.0, center.1, center.2),
        half_extents: Vector3::new(half.0, half.1, half.2),
        rotation: Matrix3::identity(),
    }
}

pub fn sphere(center: (f64, f64, f64), radius: f64) -> Primitive {
    Primitive::Sphere {
        center: Vector3::new(center.0, center.1, center.2),
        radius,
    }
}

pub fn floor() -> Primitive {
    Primitive::Plane {
        point: Vector3::zeros(),
        normal: Vector3::z(),
    }
}

pub fn viewpoint(pos: (f64, f64, f64), yaw_deg: f64, extent: (f64, f64, f64)) -> Viewpoint {
    Viewpoint {
        pose: RigidTransform::from_euler(
            yaw_deg.to_radians(),
            0.0,
            0.0,
            Vector3::new(pos.0, pos.1, pos.2),
        ),
        extent: Vector3::new(extent.0, extent.1, extent.2),
    }
}

/// A cluttered desk-scale room: floor plane plus objects at several scales,
/// leaving structured free space between them.
pub fn rich_room_primitives() -> Vec<Primitive> {
    vec![
        floor(),
        axis_box((0.7, 0.3, 0.25), (0.3, 0.25, 0.25)),
        axis_box((-0.6, -0.5, 0.15), (0.2, 0.35, 0.15)),
        axis_box((-0.1, 0.75, 0.4), (0.35, 0.15, 0.4)),
        Primitive::Box {
            center: Vector3::new(0.15, 0.1, 0.65),
            half_extents: Vector3::new(0.12, 0.12, 0.12),
            rotation: RigidTransform::from_euler(0.5, 0.0, 0.0, Vector3::zeros()).rotation,
        },
        sphere((-0.55, 0.45, 0.3), 0.28),
        sphere((0.25, -0.55, 0.22), 0.2),
        sphere((0.9, -0.35, 0.45), 0.15),
        sphere((-0.9, -0.1, 0.5), 0.12),
        axis_box((1.3, -0.9, 0.3), (0.25, 0.2, 0.3)),
        axis_box((-1.25, 0.8, 0.2), (0.3, 0.2, 0.2)),
        axis_box((1.1, 1.2, 0.45), (0.2, 0.3, 0.45)),
        sphere((-1.2, -1.1, 0.35), 0.3),
        sphere((0.1, 1.35, 0.25), 0.22),
        Primitive::Box {
            center: Vector3::new(-0.15, -1.2, 0.5),
            half_extents: Vector3::new(0.3, 0.12, 0.2),
            rotation: RigidTransform::from_euler(-0.7, 0.0, 0.0, Vector3::zeros()).rotation,
        },
        sphere((1.45, 0.35, 0.18), 0.17),
    ]
}

/// Four well-separated rooms with distinct furniture, two overlapping
/// viewpoints each: 8 submaps, exactly 4 true-match pairs.
pub fn cluster_collection_spec(noise_sigma: f64, seed: u64) -> SceneSpec {
    let mut primitives = vec![floor()];
    let rooms: [(f64, f64); 4] = [(0.0, 0.0), (20.0, 0.0), (0.0, 20.0), (20.0, 20.0)];

    // Room 0: boxes of three sizes.
    primitives.extend([
        axis_box((0.6, 0.3, 0.25), (0.3, 0.22, 0.25)),
        axis_box((-0.55, -0.45, 0.15), (0.2, 0.3, 0.15)),
        axis_box((-0.2, 0.7, 0.45), (0.15, 0.15, 0.45)),
        sphere((0.4, -0.65, 0.3), 0.25),
    ]);
    // Room 1: sphere cluster.
    primitives.extend([
        sphere((20.5, 0.4, 0.35), 0.32),
        sphere((19.5, -0.4, 0.22), 0.2),
        sphere((20.1, -0.7, 0.5), 0.15),
        axis_box((19.4, 0.7, 0.2), (0.25, 0.18, 0.2)),
    ]);
    // Room 2: slab maze.
    primitives.extend([
        axis_box((0.0, 20.7, 0.4), (0.5, 0.12, 0.4)),
        axis_box((0.55, 19.45, 0.3), (0.12, 0.45, 0.3)),
        axis_box((-0.65, 19.7, 0.2), (0.18, 0.18, 0.2)),
        sphere((-0.1, 19.2, 0.28), 0.26),
    ]);
    // Room 3: mixed tall shapes.
    primitives.extend([
        axis_box((20.65, 20.5, 0.5), (0.2, 0.2, 0.5)),
        sphere((19.55, 20.55, 0.4), 0.3),
        axis_box((19.8, 19.3, 0.25), (0.35, 0.2, 0.25)),
        sphere((20.5, 19.5, 0.2), 0.18),
    ]);

    let mut spec = SceneSpec::new(primitives, 0.05);
    spec.bounds = Some((
        Vector3::new(-3.0, -3.0, -0.3),
        Vector3::new(23.0, 23.0, 1.6),
    ));
    spec.truncation = 0.3;
    spec.max_distance = 0.75;
    spec.noise_sigma = noise_sigma;
    spec.seed = seed;
    spec.viewpoints = rooms
        .iter()
        .flat_map(|(cx, cy)| {
            [
                viewpoint((cx + 0.0, cy + 0.0, 0.55), 0.0, (1.4, 1.4, 0.8)),
                viewpoint((cx + 0.35, cy + 0.2, 0.55), 20.0, (1.4, 1.4, 0.8)),
            ]
        })
        .collect();
    spec
}

/// A T-junction of smooth-walled corridors: the walls themselves carry
/// almost no curvature, so matching leans on free-space structure (the
/// junction and the pockets between each section's landmark and the
/// walls). Every viewpoint sees a distinct landmark.
pub fn corridor_junction_spec(noise_sigma: f64, seed: u64) -> SceneSpec {
    let primitives = vec![
        floor(),
        // Corridor along x, inner faces at y = ±0.6.
        axis_box((0.0, -0.75, 0.5), (3.4, 0.15, 0.5)),
        axis_box((-2.0, 0.75, 0.5), (1.4, 0.15, 0.5)),
        axis_box((2.0, 0.75, 0.5), (1.4, 0.15, 0.5)),
        // Branch along +y, inner faces at x = ±0.6.
        axis_box((-0.75, 2.0, 0.5), (0.15, 1.4, 0.5)),
        axis_box((0.75, 2.0, 0.5), (0.15, 1.4, 0.5)),
        // Boulders along the walls, aperiodically spaced and varied in
        // size: the smooth walls carry almost no curvature, the pocket
        // structure between boulders, walls and floor carries the
        // distinctive free-space geometry.
        sphere((-3.0, -0.35, 0.25), 0.25),
        sphere((-2.55, -0.1, 0.14), 0.14),
        sphere((-1.9, 0.3, 0.3), 0.3),
        sphere((-1.05, -0.3, 0.17), 0.17),
        sphere((-0.7, 0.25, 0.22), 0.22),
        sphere((0.05, 0.35, 0.27), 0.27),
        sphere((0.75, -0.2, 0.13), 0.13),
        sphere((1.0, 0.3, 0.2), 0.2),
        sphere((1.9, -0.35, 0.28), 0.28),
        sphere((2.7, 0.05, 0.16), 0.16),
        sphere((3.1, -0.3, 0.21), 0.21),
        sphere((-0.3, 1.05, 0.26), 0.26),
        sphere((0.25, 1.5, 0.13), 0.13),
        sphere((-0.28, 1.82, 0.2), 0.2),
        sphere((-0.2, 2.2, 0.3), 0.3),
        sphere((0.3, 2.75, 0.18), 0.18),
        sphere((-0.25, 3.1, 0.15), 0.15),
    ];
    let mut spec = SceneSpec::new(primitives, 0.05);
    spec.bounds = Some((Vector3::new(-3.8, -1.2, -0.3), Vector3::new(3.8, 3.8, 1.3)));
    spec.truncation = 0.3;
    spec.max_distance = 0.75;
    spec.noise_sigma = noise_sigma;
    spec.seed = seed;
    spec.viewpoints = vec![
        viewpoint((-2.3, 0.0, 0.5), 0.0, (1.5, 1.1, 0.7)),
        viewpoint((-1.4, 0.0, 0.5), 10.0, (1.5, 1.1, 0.7)),
        viewpoint((-0.5, 0.0, 0.5), -5.0, (1.5, 1.1, 0.7)),
        viewpoint((0.4, 0.1, 0.5), 5.0, (1.5, 1.3, 0.7)),
        viewpoint((1.3, 0.0, 0.5), -10.0, (1.5, 1.1, 0.7)),
        viewpoint((2.2, 0.0, 0.5), 0.0, (1.5, 1.1, 0.7)),
        viewpoint((0.1, 1.3, 0.5), 90.0, (1.1, 1.5, 0.7)),
        viewpoint((0.0, 2.2, 0.5), 85.0, (1.1, 1.5, 0.7)),
    ];
    spec
}

/// The standard registration fixture: two carved submaps of the rich room
/// with ≥30 % overlap and a known relative pose.
pub fn standard_pair_spec(noise_sigma: f64, seed: u64) -> SceneSpec {
    let mut spec = SceneSpec::new(rich_room_primitives(), 0.05);
    spec.bounds = Some((Vector3::new(-2.2, -2.2, -0.3), Vector3::new(2.4, 2.4, 1.5)));
    spec.truncation = 0.3;
    spec.max_distance = 0.75;
    spec.noise_sigma = noise_sigma;
    spec.seed = seed;
    spec.viewpoints = vec![
        viewpoint((0.0, 0.0, 0.55), 0.0, (1.75, 1.75, 0.8)),
        viewpoint((0.45, 0.3, 0.55), 30.0, (1.75, 1.75, 0.8)),
    ];
    spec
}
