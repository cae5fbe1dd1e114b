use proptest::prelude::*;
use specular_link::materials::Material;
use specular_link::scene::{bistatic_angle, specular_path, BoxOccluder, RectReflector, Vec3};

fn unit(v: [f64; 3]) -> Option<Vec3> {
    let v = Vec3::new(v[0], v[1], v[2]);
    (v.norm() > 0.2).then(|| v.normalized()).flatten()
}

fn brute_force(r: &RectReflector, tx: Vec3, rx: Vec3, n: usize) -> (f64, Vec3) {
    let mut best = (f64::INFINITY, Vec3::ZERO);
    for i in 0..=n {
        for j in 0..=n {
            let p = r.point_at((i as f64 / n as f64 - 0.5) * r.width, (j as f64 / n as f64 - 0.5) * r.height);
            let d = tx.distance(p) + p.distance(rx);
            if d < best.0 {
                best = (d, p);
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn image_method_is_fermat_minimum(
        n in prop::array::uniform3(-1.0f64..1.0),
        t in prop::array::uniform3(-1.0f64..1.0),
        w in 0.3f64..2.0,
        h in 0.3f64..2.0,
        a in prop::array::uniform2(-0.6f64..0.6),
        b in prop::array::uniform2(-0.6f64..0.6),
        dist in prop::array::uniform2(0.5f64..5.0),
    ) {
        let Some(normal) = unit(n) else { return Ok(()) };
        let Some(u) = unit(t).and_then(|t| normal.cross(t).normalized()) else { return Ok(()) };
        let r = RectReflector::new(Vec3::new(0.5, -0.2, 1.0), normal, u, w, h, Material::pec("pec")).unwrap();
        let tx = r.point_at(a[0] * w, b[0] * h) + normal * dist[0];
        let rx = r.point_at(a[1] * w, b[1] * h) + normal * dist[1];
        let Some(path) = specular_path(tx, rx, &r, &[]).unwrap() else { return Ok(()) };

        let (brute, at) = brute_force(&r, tx, rx, 300);
        prop_assert!(path.length() <= brute + 1e-9);
        prop_assert!(brute - path.length() < 1e-3);
        prop_assert!(at.distance(path.reflection_point) < 0.1);
        prop_assert!((path.theta_i - path.beta / 2.0).abs() < 1e-9);
        prop_assert!((path.d1 - tx.distance(path.reflection_point)).abs() < 1e-12);
        prop_assert!((path.beta - bistatic_angle(tx, rx, path.reflection_point)).abs() < 1e-12);
    }

    #[test]
    fn path_is_symmetric(
        a in prop::array::uniform2(-0.4f64..0.4),
        dist in prop::array::uniform2(0.5f64..5.0),
    ) {
        let r = RectReflector::new(Vec3::ZERO, Vec3::Z, Vec3::X, 1.0, 1.0, Material::pec("pec")).unwrap();
        let tx = Vec3::new(a[0], -0.3, dist[0]);
        let rx = Vec3::new(a[1], 0.3, dist[1]);
        let fwd = specular_path(tx, rx, &r, &[]).unwrap().unwrap();
        let back = specular_path(rx, tx, &r, &[]).unwrap().unwrap();
        prop_assert!(fwd.reflection_point.distance(back.reflection_point) < 1e-12);
        prop_assert!((fwd.d1 - back.d2).abs() < 1e-12);
    }

    #[test]
    fn segment_inside_box_always_blocked(
        p in prop::array::uniform3(0.01f64..0.99),
        q in prop::array::uniform3(0.01f64..0.99),
    ) {
        let cube = BoxOccluder::new(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let (p, q) = (Vec3::new(p[0], p[1], p[2]), Vec3::new(q[0], q[1], q[2]));
        prop_assert!(cube.intersects_segment(p, q));
    }
}

#[test]
fn occluder_on_a_leg_removes_the_path() {
    let r = RectReflector::new(Vec3::ZERO, Vec3::Z, Vec3::X, 2.0, 2.0, Material::pec("pec")).unwrap();
    let tx = Vec3::new(-1.0, 0.0, 2.0);
    let rx = Vec3::new(1.0, 0.0, 2.0);
    assert!(specular_path(tx, rx, &r, &[]).unwrap().is_some());
    let wall = BoxOccluder::new(Vec3::new(0.4, -1.0, 0.5), Vec3::new(0.6, 1.0, 1.5)).unwrap();
    assert!(specular_path(tx, rx, &r, &[wall]).unwrap().is_none());
    // A box touching the leg only along a face does not block.
    let flush = BoxOccluder::new(Vec3::new(-1.0, 0.0, 0.5), Vec3::new(1.0, 1.0, 1.5)).unwrap();
    assert!(specular_path(tx, rx, &r, &[flush]).unwrap().is_some());
}

#[test]
fn point_outside_rectangle_has_no_path() {
    let r = RectReflector::new(Vec3::ZERO, Vec3::Z, Vec3::X, 1.0, 1.0, Material::pec("pec")).unwrap();
    let tx = Vec3::new(2.0, 0.0, 1.0);
    let rx = Vec3::new(4.0, 0.0, 1.0);
    assert!(specular_path(tx, rx, &r, &[]).unwrap().is_none());
}
