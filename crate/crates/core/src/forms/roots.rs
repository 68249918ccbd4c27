//! Numerical root extraction for binary forms.
//!
//! Floating forms go straight to simultaneous (Aberth–Ehrlich) iteration,
//! which is accurate for simple roots. Exact rational forms are first split
//! into square-free factors, so roots of high multiplicity, like the twelvefold
//! root on the rational normal curve, come back exactly as simple roots with
//! a multiplicity attached.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{BinaryForm, ProjPoint};

const MAX_ITERATIONS: usize = 500;

/// Roots of a floating form, with the point at infinity repeated according
/// to the number of vanishing leading coefficients.
pub fn roots(f: &BinaryForm<Complex64>) -> Vec<ProjPoint<Complex64>> {
    let scale = f.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let leading_zeros = f
        .coeffs()
        .iter()
        .take_while(|c| c.norm() <= 1e-14 * scale)
        .count();
    let mut out = vec![ProjPoint::infinity(); leading_zeros];
    // Dehomogenized polynomial in descending powers.
    let poly: Vec<Complex64> = f.coeffs()[leading_zeros..].to_vec();
    out.extend(polynomial_roots(&poly).into_iter().map(ProjPoint::affine));
    out
}

/// Roots of an exact rational form with multiplicities; affine roots are
/// computed from square-free factors.
pub fn roots_with_multiplicity(f: &BinaryForm<BigRational>) -> Vec<(ProjPoint<Complex64>, usize)> {
    let leading_zeros = f.coeffs().iter().take_while(|c| c.is_zero()).count();
    let mut out = Vec::new();
    if leading_zeros > 0 {
        out.push((ProjPoint::infinity(), leading_zeros));
    }
    // Ascending-power representation for the exact arithmetic below.
    let mut poly: Vec<BigRational> = f.coeffs()[leading_zeros..].to_vec();
    poly.reverse();
    for (factor, multiplicity) in square_free_decomposition(&poly) {
        let desc: Vec<Complex64> = factor
            .iter()
            .rev()
            .map(|c| Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0))
            .collect();
        for z in polynomial_roots(&desc) {
            out.push((ProjPoint::affine(z), multiplicity));
        }
    }
    out
}

/// Roots of `Σ c_k z^{n−k}` (descending powers, `c_0 ≠ 0`).
pub fn polynomial_roots(desc: &[Complex64]) -> Vec<Complex64> {
    let n = desc.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = desc[0];
    let monic: Vec<Complex64> = desc.iter().map(|c| c / lead).collect();
    if n == 1 {
        return vec![-monic[1]];
    }
    // Cauchy bound for the initial circle.
    let radius = 1.0 + monic[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut zs: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(radius.min(1e6), theta)
        })
        .collect();
    let deriv: Vec<Complex64> = monic[..n]
        .iter()
        .enumerate()
        .map(|(k, c)| c * (n - k) as f64)
        .collect();
    for _ in 0..MAX_ITERATIONS {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let z = zs[i];
            let p = horner(&monic, z);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / horner(&deriv, z);
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z - zs[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                zs[i] = z - step;
                max_step = max_step.max(step.norm() / (1.0 + z.norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // Newton polish.
    for z in &mut zs {
        for _ in 0..3 {
            let d = horner(&deriv, *z);
            if d.norm() == 0.0 {
                break;
            }
            let step = horner(&monic, *z) / d;
            if step.is_finite() {
                *z -= step;
            }
        }
    }
    zs
}

fn horner(desc: &[Complex64], z: Complex64) -> Complex64 {
    desc.iter().fold(Complex64::zero(), |acc, c| acc * z + c)
}

// --- exact univariate arithmetic, ascending powers ---

fn trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn degree(p: &[BigRational]) -> usize {
    p.len().saturating_sub(1)
}

fn derivative(p: &[BigRational]) -> Vec<BigRational> {
    if p.len() <= 1 {
        return vec![BigRational::zero()];
    }
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * BigRational::from_integer(k.into()))
            .collect(),
    )
}

fn div_rem(num: &[BigRational], den: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let den = trim(den.to_vec());
    let mut rem = trim(num.to_vec());
    if rem.len() < den.len() {
        return (vec![BigRational::zero()], rem);
    }
    let lead = den.last().cloned().expect("nonempty divisor");
    let mut quot = vec![BigRational::zero(); rem.len() - den.len() + 1];
    while rem.len() >= den.len() && !(rem.len() == 1 && rem[0].is_zero()) {
        let shift = rem.len() - den.len();
        let factor = rem.last().cloned().expect("nonempty remainder") / lead.clone();
        for (i, d) in den.iter().enumerate() {
            rem[i + shift] = rem[i + shift].clone() - factor.clone() * d;
        }
        quot[shift] = factor;
        rem.pop();
        rem = trim(rem);
        if rem.is_empty() {
            rem.push(BigRational::zero());
        }
    }
    (trim(quot), rem)
}

fn is_zero_poly(p: &[BigRational]) -> bool {
    p.iter().all(Zero::is_zero)
}

fn monic(p: Vec<BigRational>) -> Vec<BigRational> {
    let lead = p.last().cloned().expect("nonempty polynomial");
    p.into_iter().map(|c| c / lead.clone()).collect()
}

fn gcd(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut x = trim(a.to_vec());
    let mut y = trim(b.to_vec());
    while !is_zero_poly(&y) {
        let (_, r) = div_rem(&x, &y);
        x = y;
        y = r;
    }
    monic(x)
}

/// Yun's algorithm: `p = Π fᵢ^i` with square-free, pairwise coprime `fᵢ`.
fn square_free_decomposition(p: &[BigRational]) -> Vec<(Vec<BigRational>, usize)> {
    let p = trim(p.to_vec());
    if degree(&p) == 0 {
        return Vec::new();
    }
    let dp = derivative(&p);
    let a0 = gcd(&p, &dp);
    let mut b = div_rem(&p, &a0).0;
    let mut c = div_rem(&dp, &a0).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while degree(&b) > 0 {
        let a = gcd(&b, &d);
        if degree(&a) > 0 {
            out.push((a.clone(), i));
        }
        b = div_rem(&b, &a).0;
        c = div_rem(&d, &a).0;
        d = sub(&c, &derivative(&b));
        i += 1;
    }
    out
}

fn sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let zero = BigRational::zero();
    trim(
        (0..n)
            .map(|i| a.get(i).unwrap_or(&zero) - b.get(i).unwrap_or(&zero))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{expand_mu, expand_rnc, icosahedral_form, icosahedral_vertex_roots};
    use num_bigint::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn rnc_root_recovered_with_multiplicity_twelve() {
        for a in [1i64, 0, -3] {
            let f = expand_rnc(&ProjPoint::affine(q(a))).unwrap();
            let roots = roots_with_multiplicity(&f);
            assert_eq!(roots.len(), 1);
            let (p, m) = &roots[0];
            assert_eq!(*m, 12);
            let z = p.z1 / p.z2;
            assert!((z - Complex64::new(a as f64, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn mu_roots_split_eleven_and_one() {
        let f = expand_mu(&ProjPoint::affine(q(2)), &ProjPoint::affine(q(-5))).unwrap();
        let mut roots: Vec<(f64, usize)> = roots_with_multiplicity(&f)
            .into_iter()
            .map(|(p, m)| ((p.z1 / p.z2).re, m))
            .collect();
        roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 + 5.0).abs() < 1e-9 && roots[0].1 == 1);
        assert!((roots[1].0 - 2.0).abs() < 1e-9 && roots[1].1 == 11);
    }

    #[test]
    fn infinity_is_reported() {
        let f = expand_mu(&ProjPoint::<BigRational>::infinity(), &ProjPoint::affine(q(1))).unwrap();
        let roots = roots_with_multiplicity(&f);
        assert!(roots.iter().any(|(p, m)| p.z2 == Complex64::zero() && *m == 11));
    }

    #[test]
    fn icosahedral_roots_recovered() {
        let found = roots(&icosahedral_form());
        let expected = icosahedral_vertex_roots();
        assert_eq!(found.len(), 12);
        for e in &expected {
            let best = found
                .iter()
                .map(|p| p.chordal_distance(e))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10, "vertex missed by {best}");
        }
    }

    #[test]
    fn square_free_parts_of_repeated_product() {
        // (z − 1)^3 (z + 2)^2 z
        let f = BinaryForm::from_roots(&[
            ProjPoint::affine(q(1)),
            ProjPoint::affine(q(1)),
            ProjPoint::affine(q(1)),
            ProjPoint::affine(q(-2)),
            ProjPoint::affine(q(-2)),
            ProjPoint::affine(q(0)),
        ]);
        let mut mults: Vec<usize> = roots_with_multiplicity(&f).into_iter().map(|(_, m)| m).collect();
        mults.sort();
        assert_eq!(mults, vec![1, 2, 3]);
    }
}
