//! The local chart of the surface swept out by `(α, β) ↦ (z − α)^11 (z − β)`
//! near a point of the rational normal curve, and a certificate that its
//! transverse slice is the cusp `X³ = Y²`.
//!
//! Chart coordinates are the elementary symmetric functions `e_k` of the root
//! multiset `{α × 11, β}`, i.e. `(−1)^k` times the coefficient of `z^{12−k}`.
//! With this sign convention the first three coordinates read
//! `11α + β`, `55α² + 11αβ`, `165α³ + 55α²β`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::forms::{expand_mu, ProjPoint};
use crate::series::{BivariateSeries, EXACT};

pub const DEFAULT_TRUNCATION: u32 = 6;
pub const MIN_TRUNCATION: u32 = 3;

pub const CHART_VARS: [&str; 2] = ["α", "β"];
pub const SLICE_VARS: [&str; 2] = ["u", "α"];

/// The 12 affine chart coordinates `e_1, …, e_12` as series in `(α, β)`
/// truncated at total degree `n`.
pub fn mu_local_chart(n: u32) -> Result<Vec<BivariateSeries>> {
    if n < MIN_TRUNCATION {
        return Err(LabError::TruncationTooLow {
            got: n,
            min: MIN_TRUNCATION,
        });
    }
    let alpha = ProjPoint::affine(BivariateSeries::variable(0, CHART_VARS, n));
    let beta = ProjPoint::affine(BivariateSeries::variable(1, CHART_VARS, n));
    let form = expand_mu(&alpha, &beta)?;
    Ok(form
        .into_coeffs()
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| if k % 2 == 1 { -c } else { c })
        .map(|c| c.truncate(n).with_vars(CHART_VARS))
        .collect())
}

/// Rewrites the chart in variables `(u, α)` where `u` is the first chart
/// coordinate, eliminating `β`. The first output series is exactly `u`.
pub fn substitute_u(chart: &[BivariateSeries]) -> Result<Vec<BivariateSeries>> {
    let first = chart.first().ok_or(LabError::NotInvertible)?;
    let n = chart.iter().map(BivariateSeries::order).min().unwrap_or(EXACT);
    if !first.coefficient(0, 0).is_zero() {
        return Err(LabError::NotInvertible);
    }
    let a = first.coefficient(1, 0);
    let b = first.coefficient(0, 1);
    if b.is_zero() {
        return Err(LabError::NotInvertible);
    }
    let u = BivariateSeries::variable(0, SLICE_VARS, n);
    let alpha = BivariateSeries::variable(1, SLICE_VARS, n);
    // Nonlinear part of the first coordinate.
    let higher = first.clone()
        - BivariateSeries::variable(0, CHART_VARS, n).scale(&a)
        - BivariateSeries::variable(1, CHART_VARS, n).scale(&b);
    let inv_b = BigRational::one() / b;
    let linear = (u.clone() - alpha.scale(&a)).scale(&inv_b);
    // β = (u − aα − H(α, β)) / b; each pass fixes one more total degree.
    let mut beta = linear.clone();
    for _ in 0..n {
        let h = higher.compose(&alpha, &beta)?;
        beta = linear.clone() - h.scale(&inv_b);
    }
    chart
        .iter()
        .map(|s| s.compose(&alpha, &beta).map(|t| t.with_vars(SLICE_VARS)))
        .collect()
}

/// A plane curve germ extracted from a slice: the first two distinct orders
/// of the span of the slice coordinates and the reduced coordinates realizing
/// them.
#[derive(Clone, Debug)]
pub struct SliceCurve {
    pub orders: (u32, u32),
    pub leads: (BigRational, BigRational),
    /// Series in the second variable realizing `orders.0` and `orders.1`.
    pub first: BivariateSeries,
    pub second: BivariateSeries,
    pub truncation: u32,
}

/// Sets `u = 0` and row-reduces the coordinates by α-adic order; returns the
/// first two pivot orders and their leading coefficients.
///
/// Reducing the span rather than reading off coordinates makes the orders
/// independent of invertible linear changes of the ambient coordinates.
pub fn slice_orders(chart_u: &[BivariateSeries]) -> Result<SliceCurve> {
    let truncation = chart_u.iter().map(BivariateSeries::order).min().unwrap_or(EXACT);
    let rows: Vec<BivariateSeries> = chart_u
        .iter()
        .map(BivariateSeries::restrict_first_to_zero)
        .collect();
    let pivots = echelon_pivots(rows, 2);
    match pivots.as_slice() {
        [(o1, l1, s1), (o2, l2, s2), ..] => Ok(SliceCurve {
            orders: (*o1, *o2),
            leads: (l1.clone(), l2.clone()),
            first: s1.clone(),
            second: s2.clone(),
            truncation,
        }),
        _ => Err(LabError::VanishingSlice(truncation)),
    }
}

/// Slice of an explicit parametrized curve `t ↦ (x(t), y(t))`, for controls.
pub fn slice_from_curve(x: BivariateSeries, y: BivariateSeries) -> Result<SliceCurve> {
    let zero_u = BivariateSeries::zero();
    slice_orders(&[zero_u, x, y])
}

fn echelon_pivots(
    mut rows: Vec<BivariateSeries>,
    wanted: usize,
) -> Vec<(u32, BigRational, BivariateSeries)> {
    let mut pivots = Vec::new();
    loop {
        rows.retain(|r| !r.is_zero());
        if pivots.len() == wanted || rows.is_empty() {
            return pivots;
        }
        let (idx, (order, lead)) = rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.leading_in_second().map(|l| (i, l)))
            .min_by_key(|(i, (o, _))| (*o, *i))
            .expect("nonzero rows have a leading term");
        let pivot = rows.remove(idx);
        for row in rows.iter_mut() {
            let c = row.coefficient(0, order);
            if !c.is_zero() {
                *row = row.clone() - pivot.scale(&(c / lead.clone()));
            }
        }
        pivots.push((order, lead, pivot));
    }
}

/// Machine-readable evidence that a slice is a standard cusp.
#[derive(Clone, Debug, Serialize)]
pub struct CuspCertificate {
    pub orders: [u32; 2],
    pub lead2: String,
    pub lead3: String,
    /// Lowest α-order present in `X³ − Y²`, or `truncation + 1` when it
    /// vanishes to the truncation order.
    pub residual_order: u32,
    pub truncation: u32,
    pub pass: bool,
}

/// Scales the slice coordinates to `X = first / lead₂`, `Y = second / lead₃`
/// and checks that the orders are (2, 3) and `X³ − Y²` vanishes through
/// order 6 (or through the truncation order when that is smaller).
pub fn cusp_normal_form_check(slice: &SliceCurve) -> Result<CuspCertificate> {
    let (l2, l3) = &slice.leads;
    if l2.is_zero() || l3.is_zero() {
        return Err(LabError::VanishingLead);
    }
    let n = slice.truncation;
    let x = slice.first.scale(&(BigRational::one() / l2.clone())).truncate(n);
    let y = slice.second.scale(&(BigRational::one() / l3.clone())).truncate(n);
    let residual = x.pow(3) - y.pow(2);
    let residual_order = residual
        .leading_in_second()
        .map(|(o, _)| o)
        .unwrap_or(n.saturating_add(1));
    let required = (n.saturating_add(1)).min(7);
    let pass = slice.orders == (2, 3) && residual_order >= required;
    Ok(CuspCertificate {
        orders: [slice.orders.0, slice.orders.1],
        lead2: l2.to_string(),
        lead3: l3.to_string(),
        residual_order,
        truncation: n,
        pass,
    })
}

/// The full pipeline at truncation `n`: chart, elimination of β, slice at
/// `u = 0`, certificate.
pub fn cusp_certificate(n: u32) -> Result<CuspCertificate> {
    let chart = mu_local_chart(n)?;
    let chart_u = substitute_u(&chart)?;
    cusp_normal_form_check(&slice_orders(&chart_u)?)
}

/// The chart restricted to the diagonal `β = α`, as series in the second
/// slice variable.
pub fn diagonal_slice(chart: &[BivariateSeries]) -> Result<Vec<BivariateSeries>> {
    let n = chart.iter().map(BivariateSeries::order).min().unwrap_or(EXACT);
    let t = BivariateSeries::variable(1, SLICE_VARS, n);
    chart.iter().map(|s| s.compose(&t, &t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::int;

    fn binomial(n: i64, k: i64) -> i64 {
        if k < 0 || k > n {
            return 0;
        }
        (0..k).fold(1i64, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn truncation_below_three_is_rejected() {
        assert!(matches!(
            mu_local_chart(2),
            Err(LabError::TruncationTooLow { got: 2, min: 3 })
        ));
    }

    #[test]
    fn chart_matches_elementary_symmetric_oracle() {
        // e_k({α×11, β}) = C(11,k) α^k + C(11,k−1) α^{k−1} β
        let n = 8;
        let chart = mu_local_chart(n).unwrap();
        assert_eq!(chart.len(), 12);
        for (idx, s) in chart.iter().enumerate() {
            let k = idx as i64 + 1;
            for (&(i, j), c) in s.terms() {
                let expected = match (i as i64, j) {
                    (p, 0) if p == k => binomial(11, k),
                    (p, 1) if p == k - 1 => binomial(11, k - 1),
                    _ => 0,
                };
                assert_eq!(*c, int(expected), "e_{k} at α^{i} β^{j}");
            }
            if k <= n as i64 {
                assert_eq!(s.coefficient(k as u32, 0), int(binomial(11, k)));
            } else {
                assert!(s.is_zero());
            }
        }
        assert_eq!(chart[0].coefficient(1, 0), int(11));
        assert_eq!(chart[0].coefficient(0, 1), int(1));
        assert_eq!(chart[1].coefficient(2, 0), int(55));
        assert!(chart.iter().all(|s| s.coefficient(0, 0).is_zero()));
    }

    #[test]
    fn substitution_reproduces_displayed_coordinates() {
        // Elimination oracle: β = u − 11α gives
        // e_k = (C(11,k) − 11 C(11,k−1)) α^k + C(11,k−1) α^{k−1} u.
        let chart_u = substitute_u(&mu_local_chart(6).unwrap()).unwrap();
        assert_eq!(chart_u[0], BivariateSeries::variable(0, SLICE_VARS, 6));
        for k in 2..=6i64 {
            let s = &chart_u[(k - 1) as usize];
            let pure = binomial(11, k) - 11 * binomial(11, k - 1);
            assert_eq!(s.coefficient(0, k as u32), int(pure));
            assert_eq!(s.coefficient(1, (k - 1) as u32), int(binomial(11, k - 1)));
        }
        assert_eq!(chart_u[1].coefficient(0, 2), int(-66));
        assert_eq!(chart_u[1].coefficient(1, 1), int(11));
        assert_eq!(chart_u[2].coefficient(0, 3), int(-440));
        assert_eq!(chart_u[2].coefficient(1, 2), int(55));
    }

    #[test]
    fn slice_has_cusp_orders_and_leads() {
        let slice = slice_orders(&substitute_u(&mu_local_chart(6).unwrap()).unwrap()).unwrap();
        assert_eq!(slice.orders, (2, 3));
        assert_eq!(slice.leads, (int(-66), int(-440)));
    }

    #[test]
    fn certificate_passes_at_default_truncation() {
        let cert = cusp_certificate(DEFAULT_TRUNCATION).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.orders, [2, 3]);
        assert_eq!(cert.lead2, "-66");
        assert_eq!(cert.lead3, "-440");
        assert!(cert.residual_order >= 7);
    }

    #[test]
    fn certificate_at_minimal_and_large_truncation() {
        let c3 = cusp_certificate(3).unwrap();
        assert!(c3.pass);
        assert_eq!(c3.residual_order, 4);
        let c10 = cusp_certificate(10).unwrap();
        assert!(c10.pass);
        assert_eq!((c10.orders, c10.lead2.as_str(), c10.lead3.as_str()), ([2, 3], "-66", "-440"));
    }

    #[test]
    fn smooth_and_tacnode_controls_fail() {
        let n = 6;
        let t = BivariateSeries::variable(1, SLICE_VARS, n);
        let smooth = slice_from_curve(t.clone(), t.pow(2)).unwrap();
        let cert = cusp_normal_form_check(&smooth).unwrap();
        assert_eq!(cert.orders, [1, 2]);
        assert!(!cert.pass);

        let tacnode = slice_from_curve(t.pow(2), t.pow(4)).unwrap();
        let cert = cusp_normal_form_check(&tacnode).unwrap();
        assert_eq!(cert.orders, [2, 4]);
        assert!(!cert.pass);
    }

    #[test]
    fn vanishing_slice_is_an_error() {
        let zero = BivariateSeries::zero();
        assert!(matches!(
            slice_orders(&[zero.clone(), zero]),
            Err(LabError::VanishingSlice(_))
        ));
    }

    #[test]
    fn vanishing_lead_is_an_error() {
        let t = BivariateSeries::variable(1, SLICE_VARS, 6);
        let mut slice = slice_from_curve(t.pow(2), t.pow(3)).unwrap();
        slice.leads.0 = int(0);
        assert!(matches!(cusp_normal_form_check(&slice), Err(LabError::VanishingLead)));
    }

    #[test]
    fn diagonal_stays_on_rational_normal_curve() {
        // e_k({α × 12}) = C(12, k) α^k
        let n = 7;
        let diag = diagonal_slice(&mu_local_chart(n).unwrap()).unwrap();
        for (idx, s) in diag.iter().enumerate() {
            let k = idx as u32 + 1;
            let expected = if k <= n { binomial(12, k as i64) } else { 0 };
            assert_eq!(s.coefficient(0, k), int(expected));
            assert_eq!(s.terms().count(), usize::from(expected != 0));
        }
    }

    #[test]
    fn truncation_consistency() {
        for n in 3..=8 {
            let low = substitute_u(&mu_local_chart(n).unwrap()).unwrap();
            let high = substitute_u(&mu_local_chart(n + 2).unwrap()).unwrap();
            for (a, b) in low.iter().zip(&high) {
                assert_eq!(a.terms().collect::<Vec<_>>(), b.truncate(n).terms().collect::<Vec<_>>());
            }
        }
    }
}
