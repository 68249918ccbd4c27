//! Lattice polytopes, their unimodular symmetry groups, and fixed subspaces.
//!
//! Symmetries act linearly on `V = Rⁿ` and are determined by where they send
//! a basis of vertices. On the dual space `V*` an element `g` acts by `gᵀ`.
//! The origin of `V*` plays the role of the distinguished base point.

mod potential;

pub use potential::{
    euclidean_chord_margins, gradient_image_check, invariant_min_on_dual, random_symmetric_quadratic,
    sampled_argmin_dual, vertex_approach, LsePotential, SymmetricQuadratic,
};

use std::collections::BTreeSet;
use std::path::Path;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exact::{self, Matrix};

/// Largest vertex count accepted by the brute-force symmetry search.
pub const MAX_SYMMETRY_VERTICES: usize = 12;

pub type IntMatrix = Vec<Vec<i64>>;

/// A full-dimensional lattice polytope given by its vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolytope", into = "RawPolytope")]
pub struct LatticePolytope {
    dimension: usize,
    vertices: Vec<Vec<i64>>,
    facets: Vec<Facet>,
}

#[derive(Serialize, Deserialize)]
struct RawPolytope {
    dimension: usize,
    vertices: Vec<Vec<i64>>,
}

impl TryFrom<RawPolytope> for LatticePolytope {
    type Error = LabError;

    fn try_from(raw: RawPolytope) -> Result<Self> {
        Self::new(raw.dimension, raw.vertices)
    }
}

impl From<LatticePolytope> for RawPolytope {
    fn from(p: LatticePolytope) -> Self {
        Self {
            dimension: p.dimension,
            vertices: p.vertices,
        }
    }
}

/// A facet inequality `⟨normal, x⟩ ≤ offset` with a primitive integer normal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

impl Facet {
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset as f64 - dot_f(&self.normal, x)
    }

    /// Euclidean distance from `x` to the facet hyperplane, signed positive inside.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let norm = self.normal.iter().map(|&a| (a * a) as f64).sum::<f64>().sqrt();
        self.slack(x) / norm
    }

    fn slack_int(&self, v: &[i64]) -> i64 {
        self.offset - self.normal.iter().zip(v).map(|(a, b)| a * b).sum::<i64>()
    }
}

pub(crate) fn dot_f(a: &[i64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(&a, &x)| a as f64 * x).sum()
}

fn rational(x: i64) -> BigRational {
    BigRational::from_integer(x.into())
}

/// Scales a rational vector to the primitive integer vector with the same direction.
fn primitive(v: &[BigRational]) -> Vec<i64> {
    let lcm = v.iter().fold(num_bigint::BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<num_bigint::BigInt> = v.iter().map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints.iter().fold(num_bigint::BigInt::zero(), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| (x / &gcd).to_i64().expect("facet normal fits in i64"))
        .collect()
}

/// All facets of the hull of `points`, from hyperplanes through `n`-subsets.
fn facets_of(points: &[Vec<i64>], n: usize) -> Vec<Facet> {
    let mut found = BTreeSet::new();
    let mut subset: Vec<usize> = (0..n).collect();
    let m = points.len();
    if m < n {
        return Vec::new();
    }
    loop {
        let base = &points[subset[0]];
        let rows: Matrix = subset[1..]
            .iter()
            .map(|&i| points[i].iter().zip(base).map(|(a, b)| rational(a - b)).collect())
            .collect();
        let kernel = if rows.is_empty() {
            vec![vec![BigRational::one()]]
        } else {
            exact::kernel(&rows, n)
        };
        if kernel.len() == 1 {
            let normal = primitive(&kernel[0]);
            let offset: i64 = normal.iter().zip(base).map(|(a, b)| a * b).sum();
            let values: Vec<i64> = points.iter().map(|p| normal.iter().zip(p).map(|(a, b)| a * b).sum()).collect();
            if values.iter().all(|&v| v <= offset) {
                found.insert(Facet { normal, offset });
            } else if values.iter().all(|&v| v >= offset) {
                found.insert(Facet {
                    normal: normal.iter().map(|a| -a).collect(),
                    offset: -offset,
                });
            }
        }
        // Next n-subset in lexicographic order.
        let Some(i) = (0..n).rev().find(|&i| subset[i] < m - n + i) else {
            break;
        };
        subset[i] += 1;
        for j in i + 1..n {
            subset[j] = subset[j - 1] + 1;
        }
    }
    found.into_iter().collect()
}

impl LatticePolytope {
    /// Validates that the vertices are extreme points of a full-dimensional hull.
    pub fn new(dimension: usize, vertices: Vec<Vec<i64>>) -> Result<Self> {
        if dimension == 0 {
            return Err(LabError::InvalidPolytope("dimension must be positive".into()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != dimension) {
            return Err(LabError::InvalidPolytope(format!("vertex {v:?} is not in dimension {dimension}")));
        }
        let distinct: BTreeSet<&Vec<i64>> = vertices.iter().collect();
        if distinct.len() != vertices.len() {
            return Err(LabError::InvalidPolytope("repeated vertex".into()));
        }
        if vertices.len() <= dimension {
            return Err(LabError::InvalidPolytope("too few vertices for a full-dimensional hull".into()));
        }
        let diffs: Matrix = vertices[1..]
            .iter()
            .map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| rational(a - b)).collect())
            .collect();
        if exact::rank(&diffs) < dimension {
            return Err(LabError::InvalidPolytope("hull is not full-dimensional".into()));
        }
        let facets = facets_of(&vertices, dimension);
        for v in &vertices {
            let active: Matrix = facets
                .iter()
                .filter(|f| f.slack_int(v) == 0)
                .map(|f| f.normal.iter().map(|&a| rational(a)).collect())
                .collect();
            if exact::rank(&active) < dimension {
                return Err(LabError::InvalidPolytope(format!("{v:?} is not a vertex of the hull")));
            }
        }
        Ok(Self {
            dimension,
            vertices,
            facets,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("polytope serializes")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.facets.iter().all(|f| f.slack(x) >= 0.0)
    }

    /// Smallest distance from `x` to a facet hyperplane; positive in the interior.
    pub fn interior_margin(&self, x: &[f64]) -> f64 {
        self.facets.iter().map(|f| f.distance(x)).fold(f64::INFINITY, f64::min)
    }

    /// Facets through the vertex `v`.
    pub fn active_facets(&self, v: &[i64]) -> Vec<&Facet> {
        self.facets.iter().filter(|f| f.slack_int(v) == 0).collect()
    }

    /// Every lattice point of the polytope, sorted.
    pub fn lattice_points(&self) -> Vec<Vec<i64>> {
        let n = self.dimension;
        let lo: Vec<i64> = (0..n).map(|i| self.vertices.iter().map(|v| v[i]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..n).map(|i| self.vertices.iter().map(|v| v[i]).max().unwrap()).collect();
        let mut out = Vec::new();
        let mut p = lo.clone();
        loop {
            if self.facets.iter().all(|f| f.slack_int(&p) >= 0) {
                out.push(p.clone());
            }
            let Some(i) = (0..n).rev().find(|&i| p[i] < hi[i]) else {
                break;
            };
            p[i] += 1;
            p[i + 1..].clone_from_slice(&lo[i + 1..]);
        }
        out
    }

    /// Whether the linear map `g` permutes the vertex set.
    pub fn preserved_by(&self, g: &IntMatrix) -> bool {
        let set: BTreeSet<&Vec<i64>> = self.vertices.iter().collect();
        self.vertices.iter().all(|v| set.contains(&apply(g, v)))
    }
}

pub fn apply(g: &IntMatrix, v: &[i64]) -> Vec<i64> {
    g.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = b.len();
    a.iter()
        .map(|row| (0..b[0].len()).map(|j| (0..n).map(|k| row[k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &IntMatrix) -> IntMatrix {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

/// Determinant by Laplace expansion; matrices here are tiny.
pub fn determinant(a: &IntMatrix) -> i64 {
    if a.len() == 1 {
        return a[0][0];
    }
    (0..a.len())
        .map(|j| {
            let minor: IntMatrix = a[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect())
                .collect();
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * a[0][j] * determinant(&minor)
        })
        .sum()
}

/// A finite group of unimodular integer matrices, sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolytopeSymmetry {
    dimension: usize,
    elements: Vec<IntMatrix>,
}

impl PolytopeSymmetry {
    pub fn elements(&self) -> &[IntMatrix] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn contains(&self, g: &IntMatrix) -> bool {
        self.elements.binary_search(g).is_ok()
    }

    /// The group generated by `gens` under multiplication.
    pub fn generated_by(dimension: usize, gens: &[IntMatrix]) -> Self {
        let mut elements: BTreeSet<IntMatrix> = BTreeSet::from([identity(dimension)]);
        let mut frontier = vec![identity(dimension)];
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y = mat_mul(g, &x);
                if elements.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        Self {
            dimension,
            elements: elements.into_iter().collect(),
        }
    }

    /// A generating set chosen greedily in lexicographic order.
    pub fn generators(&self) -> Vec<IntMatrix> {
        let mut gens: Vec<IntMatrix> = Vec::new();
        let mut span = Self::generated_by(self.dimension, &gens);
        for g in &self.elements {
            if !span.contains(g) {
                gens.push(g.clone());
                span = Self::generated_by(self.dimension, &gens);
            }
        }
        gens
    }

    /// Closure under products and inverses, checked on the full table.
    pub fn is_group(&self) -> bool {
        let id = identity(self.dimension);
        self.contains(&id)
            && self.elements.iter().all(|a| {
                self.elements.iter().all(|b| self.contains(&mat_mul(a, b)))
                    && self.elements.iter().any(|b| mat_mul(a, b) == id)
            })
    }

    /// The subgroup generated by the given elements of this group.
    pub fn subgroup(&self, gens: &[IntMatrix]) -> Result<Self> {
        if let Some(g) = gens.iter().find(|g| !self.contains(g)) {
            return Err(LabError::Precondition(format!("{g:?} is not in the group")));
        }
        Ok(Self::generated_by(self.dimension, gens))
    }
}

/// All unimodular integer linear maps permuting the vertices of `p`.
///
/// A basis of vertices is fixed; every injective assignment of vertices to
/// the basis determines a rational matrix, kept when it is integral,
/// unimodular and permutes the vertex set.
pub fn symmetry_group(p: &LatticePolytope) -> Result<PolytopeSymmetry> {
    let n = p.dimension;
    if p.vertices.len() > MAX_SYMMETRY_VERTICES {
        return Err(LabError::Precondition(format!(
            "{} vertices exceeds the brute-force bound {MAX_SYMMETRY_VERTICES}",
            p.vertices.len()
        )));
    }
    let mut basis: Vec<usize> = Vec::new();
    for (i, v) in p.vertices.iter().enumerate() {
        let mut trial: Matrix = basis.iter().map(|&b| p.vertices[b].iter().map(|&x| rational(x)).collect()).collect();
        trial.push(v.iter().map(|&x| rational(x)).collect());
        if exact::rank(&trial) == trial.len() {
            basis.push(i);
        }
        if basis.len() == n {
            break;
        }
    }
    if basis.len() < n {
        return Err(LabError::InvalidPolytope("vertices do not span the lattice space".into()));
    }
    let b_cols: Matrix = (0..n).map(|r| basis.iter().map(|&i| rational(p.vertices[i][r])).collect()).collect();
    let b_inv = exact::inverse(&b_cols).expect("basis is invertible");
    let count = p.vertices.len();
    let tuples: Vec<Vec<usize>> = injective_tuples(count, n);
    let mut elements: Vec<IntMatrix> = tuples
        .par_iter()
        .filter_map(|images| {
            let w: Matrix = (0..n).map(|r| images.iter().map(|&i| rational(p.vertices[i][r])).collect()).collect();
            let g = exact::mul(&w, &b_inv);
            if !g.iter().flatten().all(|x| x.is_integer()) {
                return None;
            }
            let g: IntMatrix = g.iter().map(|r| r.iter().map(|x| x.to_integer().to_i64().unwrap()).collect()).collect();
            (determinant(&g).abs() == 1 && p.preserved_by(&g)).then_some(g)
        })
        .collect();
    elements.sort();
    elements.dedup();
    Ok(PolytopeSymmetry { dimension: n, elements })
}

fn injective_tuples(count: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t: Vec<usize>| {
                (0..count).filter(|i| !t.contains(i)).map(|i| {
                    let mut next = t.clone();
                    next.push(i);
                    next
                }).collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// The common fixed subspace of a group acting linearly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedSubspace {
    pub dimension: usize,
    /// Primitive integer basis of the subspace.
    pub basis: Vec<Vec<i64>>,
    /// Whether the only fixed point is the origin.
    pub unique: bool,
}

/// The kernel of the stacked `g − I` over the group.
pub fn fixed_points(group: &PolytopeSymmetry) -> FixedSubspace {
    let n = group.dimension;
    let rows: Matrix = group
        .elements
        .iter()
        .flat_map(|g| {
            (0..n).map(move |i| (0..n).map(|j| rational(g[i][j] - i64::from(i == j))).collect::<Vec<_>>())
        })
        .collect();
    let basis: Vec<Vec<i64>> = if rows.is_empty() {
        (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
    } else {
        exact::kernel(&rows, n).iter().map(|v| primitive(v)).collect()
    };
    FixedSubspace {
        dimension: basis.len(),
        unique: basis.is_empty(),
        basis,
    }
}

/// The JSON symmetry report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub order: usize,
    pub generators: Vec<IntMatrix>,
    pub fixed_point_unique: bool,
    pub fixed_point: Option<Vec<i64>>,
    pub fixed_dimension: usize,
}

pub fn symmetry_report(group: &PolytopeSymmetry) -> SymmetryReport {
    let fixed = fixed_points(group);
    SymmetryReport {
        order: group.order(),
        generators: group.generators(),
        fixed_point_unique: fixed.unique,
        fixed_point: fixed.unique.then(|| vec![0; group.dimension]),
        fixed_dimension: fixed.dimension,
    }
}

/// The hexagon with vertices `±(1,0), ±(0,1), ±(1,−1)`.
pub fn hexagon() -> LatticePolytope {
    LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, 1], vec![-1, 0], vec![0, -1], vec![1, -1]])
        .expect("hexagon is valid")
}

/// The square with vertices `±(1,0), ±(0,1)`.
pub fn square() -> LatticePolytope {
    LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]]).expect("square is valid")
}

/// A lattice triangle around the origin with no nontrivial symmetry.
pub fn asymmetric_triangle() -> LatticePolytope {
    LatticePolytope::new(2, vec![vec![-1, -1], vec![1, -1], vec![-1, 2]]).expect("triangle is valid")
}

/// The order-2 subgroup of the square's group generated by the reflection
/// swapping the coordinate axes; it fixes the diagonal line.
pub fn square_reflection_subgroup() -> PolytopeSymmetry {
    PolytopeSymmetry::generated_by(2, &[vec![vec![0, 1], vec![1, 0]]])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over all integer matrices with small entries.
    fn oracle_order(p: &LatticePolytope, bound: i64) -> usize {
        let mut count = 0;
        let range = -bound..=bound;
        for a in range.clone() {
            for b in range.clone() {
                for c in range.clone() {
                    for d in range.clone() {
                        let g = vec![vec![a, b], vec![c, d]];
                        if (a * d - b * c).abs() == 1 && p.preserved_by(&g) {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn group_orders_match_oracle() {
        for (p, order) in [(hexagon(), 12), (square(), 8), (asymmetric_triangle(), 1)] {
            let g = symmetry_group(&p).unwrap();
            assert_eq!(g.order(), order);
            assert_eq!(oracle_order(&p, 3), order);
            assert!(g.is_group());
            assert!(g.elements().iter().all(|m| determinant(m).abs() == 1));
            assert!(g.elements().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn three_dimensional_cube_has_order_48() {
        let mut vertices = Vec::new();
        for x in [-1, 1] {
            for y in [-1, 1] {
                for z in [-1, 1] {
                    vertices.push(vec![x, y, z]);
                }
            }
        }
        let cube = LatticePolytope::new(3, vertices).unwrap();
        assert_eq!(cube.facets().len(), 6);
        let g = symmetry_group(&cube).unwrap();
        assert_eq!(g.order(), 48);
        assert!(fixed_points(&g).unique);
    }

    #[test]
    fn validation() {
        assert!(LatticePolytope::new(2, vec![vec![0, 0], vec![1, 1], vec![2, 2]]).is_err());
        assert!(LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1], vec![0, 0]]).is_err());
        assert!(LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1, 2], vec![-1, 0]]).is_err());
        assert!(LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1]]).is_err());
        let h = hexagon();
        assert_eq!(h.facets().len(), 6);
        assert_eq!(h.lattice_points().len(), 7);
        assert_eq!(square().lattice_points().len(), 5);
    }

    #[test]
    fn json_round_trip() {
        let h = hexagon();
        let back = LatticePolytope::from_json(&h.to_json()).unwrap();
        assert_eq!(back, h);
        assert!(LatticePolytope::from_json(r#"{"dimension": 2, "vertices": [[0,0],[1,1],[2,2]]}"#).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let hex = symmetry_group(&hexagon()).unwrap();
        let report = symmetry_report(&hex);
        assert_eq!(report.order, 12);
        assert!(report.fixed_point_unique);
        assert_eq!(report.fixed_point, Some(vec![0, 0]));
        assert_eq!(PolytopeSymmetry::generated_by(2, &report.generators), hex);

        let trivial = symmetry_group(&asymmetric_triangle()).unwrap();
        let fixed = fixed_points(&trivial);
        assert_eq!(fixed.dimension, 2);
        assert!(!fixed.unique);

        let square_group = symmetry_group(&square()).unwrap();
        let reflection = square_reflection_subgroup();
        assert_eq!(square_group.subgroup(&[vec![vec![0, 1], vec![1, 0]]]).unwrap(), reflection);
        let fixed = fixed_points(&reflection);
        assert_eq!(fixed.dimension, 1);
        assert_eq!(fixed.basis, vec![vec![1, 1]]);
        assert!(!fixed.unique);
    }

    #[test]
    fn cyclic_subgroup_of_hexagon_has_unique_fixed_point() {
        let hex = symmetry_group(&hexagon()).unwrap();
        let rotation = vec![vec![0, -1], vec![1, 1]];
        let c6 = hex.subgroup(&[rotation]).unwrap();
        assert_eq!(c6.order(), 6);
        assert!(fixed_points(&c6).unique);
    }
}
