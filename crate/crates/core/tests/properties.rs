use halfslip::decomposition::{compute_decomposition, compute_u_p};
use halfslip::grid::{make_grid, FieldRef, Grid, ScalarField, Stencil, VectorField};
use halfslip::lagrangian::{flow_map, holder_regression, ladder_seeds, AnalyticField, FlowOptions};
use halfslip::norms::{hs_norm, inequality_check, lp_norm, modulus_seminorm, InequalityKind, ModulusKind, PairSampler};
use halfslip::potential::GreensKernel;
use halfslip::snapshot::{read_scalar, write_scalar};
use halfslip::solver::{advance, sigma, stability_bound, FluidState, Forcing, PhysicalParams};
use proptest::prelude::*;

fn grid() -> Grid {
    make_grid(8, 8, 6, 0.5).unwrap()
}

/// Smooth bump velocity with `u3 = 0` on the wall.
fn smooth_velocity(g: Grid, a: [f64; 3], c: [f64; 3], w: f64) -> VectorField {
    VectorField::from_fn(g, |x| {
        let e = (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)) / (w * w)).exp();
        [a[0] * e, a[1] * e, a[2] * e * x[2] / (1.0 + x[2])]
    })
}

fn smooth_density(g: Grid, amp: f64, c: [f64; 3], w: f64) -> ScalarField {
    ScalarField::from_fn(g, |x| {
        1.0 + amp * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)) / (w * w)).exp()
    })
}

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = [f64; 3]> {
    [lo..hi, lo..hi, lo..hi]
}

fn centre() -> impl Strategy<Value = [f64; 3]> {
    (1.0..3.0f64, 1.0..3.0f64, 0.5..2.0f64).prop_map(|(a, b, c)| [a, b, c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn greens_functions_are_symmetric_and_dirichlet_vanishes_on_wall(
        x in vec3(-3.0, 3.0), y in vec3(-3.0, 3.0), dz in 0.05..2.0f64
    ) {
        let (x, y) = ([x[0], x[1], x[2].abs() + dz], [y[0], y[1], y[2].abs() + 0.5 * dz]);
        for k in [GreensKernel::dirichlet(), GreensKernel::neumann()] {
            let (a, b) = (k.eval(x, y).unwrap(), k.eval(y, x).unwrap());
            prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(b.abs()));
        }
        let wall = [x[0], x[1], 0.0];
        prop_assert_eq!(GreensKernel::dirichlet().eval(wall, y).unwrap(), 0.0);
        prop_assert_eq!(GreensKernel::neumann().grad_x(wall, y).unwrap()[2], 0.0);
    }

    #[test]
    fn vorticity_is_antisymmetric_and_decomposition_reconstructs(
        a in vec3(-1.0, 1.0), c in centre(), w in 0.6..1.5f64, amp in -0.3..0.3f64
    ) {
        let g = grid();
        let p = PhysicalParams::default();
        let s = FluidState::new(smooth_density(g, amp, c, w), smooth_velocity(g, a, c, w), 0.0).unwrap();
        let d = compute_decomposition(&s, &p).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                for (x, y) in d.vorticity.comps[j][k].values.iter().zip(&d.vorticity.comps[k][j].values) {
                    prop_assert_eq!(*x, -*y);
                }
            }
        }
        let back = &d.u_p + &d.u_fw;
        let scale = s.u.max_abs().max(1e-300);
        for c in 0..3 {
            for (x, y) in back.comps[c].values.iter().zip(&s.u.comps[c].values) {
                prop_assert!((x - y).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn pressure_velocity_is_linear(c in centre(), w in 0.6..1.5f64, alpha in -3.0..3.0f64) {
        let g = grid();
        let p = PhysicalParams::default();
        let pe = smooth_density(g, 1.0, c, w).map(|v| v - 1.0);
        let one = compute_u_p(&pe, &p).u_p;
        let scaled = compute_u_p(&pe.scaled(alpha), &p).u_p;
        let tol = 1e-13 * one.max_abs() * alpha.abs().max(1.0);
        for k in 0..3 {
            for (x, y) in one.comps[k].values.iter().zip(&scaled.comps[k].values) {
                prop_assert!((alpha * x - y).abs() <= tol);
            }
        }
    }

    #[test]
    fn hs_norm_at_zero_matches_l2(values in proptest::collection::vec(-5.0..5.0f64, 8 * 8 * 6)) {
        let f = ScalarField::from_values(grid(), values).unwrap();
        let l2 = lp_norm(&f, 2.0).unwrap();
        prop_assert!((hs_norm(&f, 0.0).unwrap() - l2).abs() <= 1e-12 * l2.max(1e-300));
    }

    #[test]
    fn hs_norm_is_monotone_in_s(values in proptest::collection::vec(-1.0..1.0f64, 8 * 8 * 6), s in 0.0..0.9f64) {
        let f = ScalarField::from_values(grid(), values).unwrap();
        prop_assert!(hs_norm(&f, s).unwrap() <= hs_norm(&f, s + 0.1).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn log_lipschitz_never_exceeds_lipschitz(
        values in proptest::collection::vec(-1.0..1.0f64, 8 * 8 * 6), seed in 0u64..1000
    ) {
        let f = ScalarField::from_values(grid(), values).unwrap();
        let sampler = PairSampler { seed, random_pairs: 500, ..PairSampler::default() };
        let ll = modulus_seminorm(FieldRef::Scalar(&f), ModulusKind::LogLipschitz, &sampler);
        let lip = modulus_seminorm(FieldRef::Scalar(&f), ModulusKind::Lipschitz, &sampler);
        prop_assert!(ll.seminorm <= lip.seminorm);
        prop_assert_eq!(ll.sup_value, lip.sup_value);
    }

    #[test]
    fn interpolation_ratio_at_two_is_one(a in vec3(-1.0, 1.0), c in centre(), w in 0.5..1.5f64) {
        prop_assume!(a.iter().any(|v| v.abs() > 1e-3));
        let u = smooth_velocity(grid(), a, c, w);
        let r = inequality_check(FieldRef::Vector(&u), InequalityKind::Interp, 2.0).unwrap();
        prop_assert_eq!(r.ratio, Some(1.0));
    }

    #[test]
    fn one_step_conserves_mass(a in vec3(-0.5, 0.5), c in centre(), w in 0.6..1.5f64, amp in -0.3..0.3f64) {
        let g = grid();
        let p = PhysicalParams::default();
        let s = FluidState::new(smooth_density(g, amp, c, w), smooth_velocity(g, a, c, w), 0.0).unwrap();
        let next = advance(&s, &p, &Forcing::Zero, 0.5 * stability_bound(&s, &p)).unwrap();
        prop_assert!((next.mass() - s.mass()).abs() <= 1e-13 * s.mass());
        prop_assert!(next.rho.min() > 0.0);
    }

    #[test]
    fn sigma_weight_is_min_of_t_and_one(t in 0.0..5.0f64) {
        prop_assert_eq!(sigma(t).unwrap(), t.min(1.0));
    }

    #[test]
    fn holder_exponent_lies_in_unit_interval(k in 0.5..3.0f64, amp in 0.1..1.0f64, seed in 0u64..100) {
        let src = AnalyticField::new(
            move |x, _| [amp * (k * x[1]).sin(), amp * (k * x[0]).cos(), 0.0],
            (0.0, 1.0),
            amp * 1.5,
        );
        let seeds = ladder_seeds(&[[1.0, 1.0, 1.0], [2.0, 0.5, 2.0]], 8, seed);
        let fm = flow_map(&src, &seeds, 0.0, &[1.0], &FlowOptions::default()).unwrap();
        let fit = holder_regression(&fm, 0.0, 1.0).unwrap();
        prop_assert!(fit.exponent > 0.0 && fit.exponent <= 1.0);
    }

    #[test]
    fn snapshots_roundtrip_bitwise(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 8 * 8 * 6), t in 0.0..10.0f64) {
        let dir = tempfile::tempdir().unwrap();
        let f = ScalarField::from_values(grid(), values).unwrap();
        let path = dir.path().join("f.snap");
        write_scalar(&path, &f, "f", t).unwrap();
        let (back, header) = read_scalar(&path).unwrap();
        prop_assert_eq!(back, f);
        prop_assert_eq!(header.time.to_bits(), t.to_bits());
    }

    #[test]
    fn open_gradient_is_exact_on_affine_fields(b in vec3(-2.0, 2.0), c0 in -1.0..1.0f64) {
        let f = ScalarField::from_fn(grid(), |x| c0 + b[0] * x[0] + b[1] * x[1] + b[2] * x[2]);
        let gr = Stencil::open().gradient(&f);
        for k in 0..3 {
            for v in &gr.comps[k].values {
                prop_assert!((v - b[k]).abs() <= 1e-12);
            }
        }
    }
}
