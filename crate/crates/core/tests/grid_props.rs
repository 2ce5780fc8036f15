use proptest::prelude::*;
use torus_psido::grid::bracket;
use torus_psido::{Complex64, TorusGrid};

fn field(n: usize, size: usize) -> impl Strategy<Value = (TorusGrid, Vec<Complex64>)> {
    let g = TorusGrid::new(n, size).unwrap();
    let len = g.points();
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(move |v| (g.clone(), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
}

fn any_field() -> impl Strategy<Value = (TorusGrid, Vec<Complex64>)> {
    prop_oneof![field(1, 8), field(1, 32), field(2, 8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parseval((g, u) in any_field()) {
        let hat = g.dft_forward(&u).unwrap();
        let lhs: f64 = u.iter().map(|v| v.norm_sqr()).sum();
        let rhs: f64 = hat.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.points() as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1e-300));
    }

    #[test]
    fn dft_round_trip((g, u) in any_field()) {
        let back = g.dft_inverse(&g.dft_forward(&u).unwrap()).unwrap();
        for (a, b) in u.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn derivative_is_i_eta_on_band_limited((g, u) in any_field(), axis in 0usize..2) {
        prop_assume!(axis < g.dim());
        // zero the unpaired edge mode so the input is exactly representable
        let mut hat = g.dft_forward(&u).unwrap();
        let nyq = -((g.size() / 2) as i64);
        for (e, v) in hat.iter_mut().enumerate() {
            if g.eta_int(e)[axis] == nyq {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        let band = g.dft_inverse(&hat).unwrap();
        let d = g.dft_forward(&g.spectral_derivative_x(&band, axis, 1).unwrap()).unwrap();
        for (e, v) in d.iter().enumerate() {
            let want = hat[e] * Complex64::new(0.0, g.eta_int(e)[axis] as f64);
            prop_assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn bessel_multipliers_invert(s in -3.0f64..3.0, size in prop::sample::select(vec![8usize, 16, 32])) {
        let g = TorusGrid::new(1, size).unwrap();
        let p = g.bessel_multiplier(s);
        let q = g.bessel_multiplier(-s);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a * b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn param_bessel_at_zero_is_bessel(k in prop::sample::select(vec![-2.0f64, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0])) {
        let g = TorusGrid::new(2, 8).unwrap();
        let p = g.param_bessel_multiplier(k, Complex64::new(0.0, 0.0)).unwrap();
        for (e, v) in p.iter().enumerate() {
            let want = bracket(&g.eta_point(e)).powf(k);
            prop_assert!((v - want).abs() <= 1e-14 * want);
        }
    }
}
