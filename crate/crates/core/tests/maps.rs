use proptest::prelude::*;

use phlab::{torus_dist, Family, MapFamily, Mat2Z, TorusPoint};

fn families(a: f64, b: f64) -> Vec<MapFamily> {
    vec![
        MapFamily::shub_wilkinson(a, b),
        MapFamily::bonatti_wilkinson(a, b),
        MapFamily::zq(2, a, b).unwrap(),
        MapFamily::zq(3, a, b).unwrap(),
        MapFamily::linear(Mat2Z::CAT).unwrap(),
    ]
}

fn point() -> impl Strategy<Value = TorusPoint> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(x, y, z)| TorusPoint::new(x, y, z).unwrap())
}

proptest! {
    #[test]
    fn inverse_undoes_the_map(p in point(), a in 0.0f64..0.1, b in 0.0f64..0.1) {
        for f in families(a, b) {
            let back = f.inverse().eval(&f.eval(&p));
            prop_assert!(torus_dist(&back, &p) < 1e-12, "{:?}", f.family());
        }
    }

    #[test]
    fn volume_is_preserved(p in point(), a in 0.0f64..0.1, b in 0.0f64..0.1) {
        for f in families(a, b) {
            prop_assert!((f.jacobian(&p).determinant() - 1.0).abs() < 1e-10);
            prop_assert!((f.inverse().jacobian(&p).determinant() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn orbits_compose(p in point(), n in 1i64..20, m in 1i64..20) {
        let f = MapFamily::shub_wilkinson(0.05, 0.05);
        let split = f.apply_n(&f.apply_n(&p, n), -m);
        prop_assert!(torus_dist(&split, &f.apply_n(&p, n - m)) < 1e-14 * 2.7f64.powi(n.max(m) as i32));
    }
}

#[test]
fn fiber_rotation_symmetry_of_the_variants() {
    let mut rng = phlab::rng::stream(3, "symmetry", 0);
    for q in [2, 3, 5] {
        let f = MapFamily::zq(q, 0.05, 0.05).unwrap();
        assert_eq!(f.family(), Family::ZqVariant { q });
        assert!(f.check_symmetry(&mut rng, 2000).unwrap().pass);
    }
    assert!(MapFamily::shub_wilkinson(0.05, 0.05).check_symmetry(&mut rng, 10).is_err());
}
