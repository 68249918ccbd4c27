use alpha_lab::cusp::{mu_local_chart, slice_orders, substitute_u};
use alpha_lab::forms::group::EQUIVARIANCE_DISPLACEMENT;
use alpha_lab::forms::{expand_mu, random_sl2_displaced, GroupElement, ProjPoint};
use alpha_lab::green::{green_apply, smooth_noise, spectral_laplacian};
use alpha_lab::hyperbolic::HPoint;
use alpha_lab::lct::{pointwise_scaling_error, QuasiHomogSpec};
use alpha_lab::series::{int, BivariateSeries};
use alpha_lab::toric::{hexagon, symmetry_group, LatticePolytope};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn sl2() -> impl Strategy<Value = GroupElement<Complex64>> {
    (complex(), complex(), complex(), complex())
        .prop_filter_map("well-conditioned", |(a, b, c, d)| {
            let det = a * d - b * c;
            if det.norm() < 0.2 {
                return None;
            }
            GroupElement::normalize_det(a, b, c, d).ok()
        })
}

fn coords() -> impl Strategy<Value = [f64; 3]> {
    [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn orbit_map_is_equivariant(seed in any::<u64>(), a in complex(), b in complex()) {
        let g = random_sl2_displaced(&mut ChaCha8Rng::seed_from_u64(seed), EQUIVARIANCE_DISPLACEMENT);
        let (pa, pb) = (ProjPoint::affine(a), ProjPoint::affine(b));
        let lhs = expand_mu(&g.apply(&pa), &g.apply(&pb)).unwrap();
        let rhs = expand_mu(&pa, &pb).unwrap().act(&g);
        prop_assert!(lhs.projective_distance(&rhs) < 1e-9);
    }

    #[test]
    fn action_law(s1 in any::<u64>(), s2 in any::<u64>(), a in complex(), b in complex()) {
        let g = random_sl2_displaced(&mut ChaCha8Rng::seed_from_u64(s1), EQUIVARIANCE_DISPLACEMENT);
        let h = random_sl2_displaced(&mut ChaCha8Rng::seed_from_u64(s2), EQUIVARIANCE_DISPLACEMENT);
        let f = expand_mu(&ProjPoint::affine(a), &ProjPoint::affine(b)).unwrap();
        let lhs = f.act(&g.mul(&h));
        let rhs = f.act(&h).act(&g);
        prop_assert!(lhs.projective_distance(&rhs) < 1e-9);
    }

    #[test]
    fn hyperbolic_distance_is_invariant(g in sl2(), x in coords(), y in coords()) {
        let (p, q) = (HPoint::from_coords(x), HPoint::from_coords(y));
        let d = p.distance(&q);
        let moved = p.act(&g).distance(&q.act(&g));
        prop_assert!((moved - d).abs() < 1e-9 * (1.0 + d).powi(2));
    }

    #[test]
    fn hyperbolic_triangle_inequality(x in coords(), y in coords(), z in coords()) {
        let [a, b, c] = [x, y, z].map(HPoint::from_coords);
        prop_assert!(a.distance(&c) <= a.distance(&b) + b.distance(&c) + 1e-10);
    }

    #[test]
    fn dyadic_scaling_identity(seed in any::<u64>(), beta in 0.0f64..2.0) {
        for spec in [QuasiHomogSpec::cusp23(), QuasiHomogSpec::cusp25()] {
            prop_assert!(pointwise_scaling_error(&spec, beta, 50, seed) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn green_inverts_laplacian(seed in any::<u64>(), t in 0.02f64..0.3) {
        let f = smooth_noise(&mut ChaCha8Rng::seed_from_u64(seed), 32, t, 10.0);
        let u = green_apply(&spectral_laplacian(&f)).unwrap();
        let f0 = f.map(|v| v - f.mean());
        prop_assert!(u.max_abs_difference(&f0) < 1e-10);
    }

    #[test]
    fn conjugated_hexagon_keeps_its_group(a in -3i64..=3, b in -3i64..=3) {
        // [[1, a], [0, 1]] · [[1, 0], [b, 1]] is unimodular.
        let g = [[1 + a * b, a], [b, 1]];
        let vertices = hexagon()
            .vertices()
            .iter()
            .map(|v| vec![g[0][0] * v[0] + g[0][1] * v[1], g[1][0] * v[0] + g[1][1] * v[1]])
            .collect();
        let moved = LatticePolytope::new(2, vertices).unwrap();
        prop_assert_eq!(symmetry_group(&moved).unwrap().order(), 12);
    }
}

/// Random rational changes of chart coordinates `2..=12` that fix the first
/// coordinate and have determinant one.
fn unimodular_change() -> impl Strategy<Value = Vec<Vec<(i64, i64)>>> {
    proptest::collection::vec(proptest::collection::vec((-3i64..=3, 1i64..=4), 11), 11)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn slice_orders_survive_coordinate_changes(entries in unimodular_change()) {
        let chart = mu_local_chart(6).unwrap();
        let rest = &chart[1..];
        let q = |(n, d): (i64, i64)| BigRational::new(n.into(), d.into());
        // Lower unitriangular times upper unitriangular.
        let n = rest.len();
        let lower = |i: usize, j: usize| if i == j { int(1) } else if j < i { q(entries[i][j]) } else { BigRational::zero() };
        let upper = |i: usize, j: usize| if i == j { int(1) } else if j > i { q(entries[j][i]) } else { BigRational::zero() };
        let mut changed = vec![chart[0].clone()];
        for i in 0..n {
            let mut row = BivariateSeries::zero();
            for j in 0..n {
                let m = (0..n).fold(BigRational::zero(), |acc, k| acc + lower(i, k) * upper(k, j));
                row = row + rest[j].scale(&m);
            }
            changed.push(row);
        }
        let slice = slice_orders(&substitute_u(&changed).unwrap()).unwrap();
        prop_assert_eq!(slice.orders, (2, 3));
    }
}
