use bscale_recog::bscale::{compute_wbs, HomogeneityParams};
use bscale_recog::eval::{orientation_error, translation_error};
use bscale_recog::pose::{euler_xyz, pc_from_points, rotation_from_euler_xyz, EulerXyz};
use bscale_recog::shape::{umeyama, SimilarityTransform};
use bscale_recog::volume::{Grid, Scene};
use bscale_recog::Config;
use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    (vec3(1.0), -3.1f64..3.1).prop_filter_map("axis", |(axis, angle)| {
        let n = axis.norm();
        (n > 1e-3).then(|| *Rotation3::from_scaled_axis(axis / n * angle).matrix())
    })
}

/// Points spread unevenly along x, y, z so principal axes are well separated.
fn anisotropic_cloud() -> impl Strategy<Value = Vec<Vector3<f64>>> {
    prop::collection::vec(vec3(1.0), 40..80).prop_map(|ps| ps.into_iter().map(|p| Vector3::new(30.0 * p.x, 12.0 * p.y, 4.0 * p.z)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_round_trip(h in -3.0f64..3.0, a in -1.4f64..1.4, b in -3.0f64..3.0) {
        let e = euler_xyz(&rotation_from_euler_xyz(EulerXyz { heading: h, attitude: a, bank: b }));
        prop_assert!((e.heading - h).abs() < 1e-9);
        prop_assert!((e.attitude - a).abs() < 1e-9);
        prop_assert!((e.bank - b).abs() < 1e-9);
    }

    #[test]
    fn euler_reconstructs_any_rotation(r in rotation()) {
        let back = rotation_from_euler_xyz(euler_xyz(&r));
        prop_assert!((back - r).norm() < 1e-9);
    }

    #[test]
    fn umeyama_inverts_similarity(pts in anisotropic_cloud(), r in rotation(), s in 0.2f64..5.0, t in vec3(100.0)) {
        let moved: Vec<_> = pts.iter().map(|p| r * p * s + t).collect();
        let back = umeyama(&moved, &pts).unwrap();
        prop_assert!((back.s - 1.0 / s).abs() < 1e-9 / s);
        for (m, p) in moved.iter().zip(&pts) {
            prop_assert!((back.apply(m) - p).norm() < 1e-7);
        }
    }

    #[test]
    fn similarity_inverse_composes_to_identity(r in rotation(), s in 0.2f64..5.0, t in vec3(50.0), x in vec3(50.0)) {
        let f = SimilarityTransform { s, r, t };
        let id = f.compose(&f.inverse());
        prop_assert!((id.apply(&x) - x).norm() < 1e-9);
    }

    #[test]
    fn pc_system_is_rigid_equivariant(pts in anisotropic_cloud(), r in rotation(), t in vec3(100.0)) {
        let a = pc_from_points(&pts).unwrap();
        let moved: Vec<_> = pts.iter().map(|p| r * p + t).collect();
        let b = pc_from_points(&moved).unwrap();
        prop_assert!((b.origin - (r * a.origin + t)).norm() < 1e-8);
        prop_assert!((b.eigenvalues - a.eigenvalues).norm() < 1e-8 * a.eigenvalues.norm());
        for i in 0..3 {
            // Axes follow the rotation up to the sign convention.
            prop_assert!((b.axis(i).dot(&(r * a.axis(i))).abs() - 1.0).abs() < 1e-8);
        }
        prop_assert!((b.axes.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn translation_error_is_a_metric(a in vec3(100.0), b in vec3(100.0), c in vec3(100.0)) {
        prop_assert_eq!(translation_error(&a, &a), 0.0);
        prop_assert_eq!(translation_error(&a, &b), translation_error(&b, &a));
        prop_assert!(translation_error(&a, &c) <= translation_error(&a, &b) + translation_error(&b, &c) + 1e-9);
    }

    #[test]
    fn orientation_error_vanishes_for_equal_rotations(r in rotation()) {
        let e = orientation_error(&r, &r);
        prop_assert!(e.degrees.iter().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn config_json_round_trip(ts in 0.01f64..0.99, kmax in 1usize..60, p in 1.0f64..99.0, sigma in prop::option::of(0.1f64..50.0)) {
        let cfg = Config { ts, kmax, threshold_percentile: p, sigma, ..Config::default() };
        let back: Config = serde_json::from_str(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

fn small_scene() -> impl Strategy<Value = Scene<f64>> {
    (4usize..9, 4usize..9, 4usize..9, 0u8..3).prop_flat_map(|(nx, ny, nz, sp)| {
        let spacing = [[1.0, 1.0, 1.0], [1.0, 1.0, 2.0], [0.5, 1.0, 1.0]][sp as usize];
        prop::collection::vec(prop::sample::select(vec![0.0, 1.0, 2.0, 50.0, 51.0, 200.0]), nx * ny * nz)
            .prop_map(move |data| Scene::scene(Grid::new([nx, ny, nz], spacing).unwrap(), data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weighted_scale_is_intensity_times_radius(scene in small_scene(), sigma in 0.5f64..20.0, ts in 0.5f64..0.99) {
        let params = HomogeneityParams::new(sigma, ts).unwrap();
        let (r, w) = compute_wbs(&scene, &params, 6).unwrap();
        for ((&f, &ri), &wi) in scene.data().iter().zip(r.data()).zip(w.data()) {
            prop_assert_eq!(wi.to_bits(), (f * ri as f64).to_bits());
            prop_assert!(ri as usize <= 6);
        }
    }

    #[test]
    fn radius_ignores_intensity_offset(scene in small_scene(), sigma in 0.5f64..20.0) {
        let params = HomogeneityParams::new(sigma, 0.85).unwrap();
        let shifted = Scene::scene(scene.grid().clone(), scene.data().iter().map(|v| v + 1000.0).collect()).unwrap();
        let (a, _) = compute_wbs(&scene, &params, 6).unwrap();
        let (b, _) = compute_wbs(&shifted, &params, 6).unwrap();
        prop_assert_eq!(a.data(), b.data());
    }

    #[test]
    fn constant_scene_reaches_the_cap(v in 0.0f64..500.0, n in 9usize..12) {
        let scene = Scene::scene(Grid::new([n; 3], [1.0; 3]).unwrap(), vec![v; n * n * n]).unwrap();
        let params = HomogeneityParams::new(1.0, 0.85).unwrap();
        let (r, _) = compute_wbs(&scene, &params, 4).unwrap();
        prop_assert!(r.data().iter().all(|&x| x == 4));
    }
}
