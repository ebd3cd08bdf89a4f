//! Box splines and the hat function, used as rendering bases `Φ₀`.
//!
//! `β(x, X_n) = ∫₀¹ β(x − t x_n, X_{n−1}) dt`, starting from the scaled
//! indicator of the parallelepiped spanned by the first `d` directions.
//! Between the crossings of the segment `x − t x_n` with the mesh planes of
//! `β(·, X_{n−1})` the integrand is a polynomial, so Gauss–Legendre on each
//! piece is exact up to rounding.

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridseq::{box_points, combinations, multi_indices_up_to, LatticeSequence};
use crate::lattice::{int_det, DilationMatrix, Point};
use crate::scalar::Scalar;

/// `Π max(0, 1 − |x_i|)`.
pub fn hat(x: &[f64]) -> f64 {
    x.iter().map(|v| (1.0 - v.abs()).max(0.0)).product()
}

/// Ordered direction list whose first `d` vectors form an invertible base.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionMatrix {
    vectors: Vec<Point>,
    dim: usize,
    base_det: i64,
}

fn rank_of(vectors: &[&Point], d: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    DMatrix::from_fn(d, vectors.len(), |i, j| vectors[j][i] as f64).rank(1e-9)
}

impl DirectionMatrix {
    pub fn new(vectors: Vec<Point>) -> Result<Self> {
        let dim = vectors.first().map(|v| v.len()).ok_or_else(|| Error::Precondition("no directions".into()))?;
        if dim == 0 {
            return Err(Error::Precondition("directions must have positive dimension".into()));
        }
        if vectors.len() < dim {
            return Err(Error::Precondition(format!("need at least {dim} directions, got {}", vectors.len())));
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().all(|&c| c == 0) {
                return Err(Error::Precondition("zero direction".into()));
            }
        }
        let base: Vec<Vec<i64>> = (0..dim).map(|i| (0..dim).map(|j| vectors[j][i]).collect()).collect();
        let det = int_det(&base);
        if det == 0 {
            return Err(Error::Precondition("the first d directions are linearly dependent".into()));
        }
        Ok(Self { vectors, dim, base_det: det.unsigned_abs() as i64 })
    }

    /// Like [`DirectionMatrix::new`], but first moves an independent subset
    /// to the front (keeping relative order otherwise).
    pub fn reordered(vectors: Vec<Point>) -> Result<Self> {
        let dim = vectors.first().map(|v| v.len()).ok_or_else(|| Error::Precondition("no directions".into()))?;
        let mut chosen: Vec<usize> = Vec::new();
        for i in 0..vectors.len() {
            let mut trial: Vec<&Point> = chosen.iter().map(|&c| &vectors[c]).collect();
            trial.push(&vectors[i]);
            if rank_of(&trial, dim) == trial.len() {
                chosen.push(i);
            }
            if chosen.len() == dim {
                break;
            }
        }
        if chosen.len() < dim {
            return Err(Error::NonSpanning(format!("directions do not span R^{dim}")));
        }
        let mut ordered: Vec<Point> = chosen.iter().map(|&c| vectors[c].clone()).collect();
        ordered.extend(vectors.iter().enumerate().filter(|(i, _)| !chosen.contains(i)).map(|(_, v)| v.clone()));
        Self::new(ordered)
    }

    /// Each direction repeated `n` times: `X, X, ..., X`.
    pub fn repeated(dirs: &[Point], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("repetition count must be positive".into()));
        }
        Self::reordered((0..n).flat_map(|_| dirs.iter().cloned()).collect())
    }

    /// Courant element `{e_1, e_2, e_1 + e_2}`.
    pub fn courant() -> Self {
        Self::new(vec![Point::from_slice(&[1, 0]), Point::from_slice(&[0, 1]), Point::from_slice(&[1, 1])])
            .expect("valid directions")
    }

    /// Unit vectors of `R^d`, whose box spline is the indicator of the unit cube.
    pub fn unit(d: usize) -> Self {
        Self::new((0..d).map(|i| crate::lattice::unit_point(d, i)).collect()).expect("valid directions")
    }

    pub fn vectors(&self) -> &[Point] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn base_det(&self) -> i64 {
        self.base_det
    }

    /// Directions with entry `r` removed; errors if the rest does not span.
    pub fn without(&self, r: usize) -> Result<Self> {
        if r >= self.vectors.len() {
            return Err(Error::Precondition(format!("direction index {r} out of range")));
        }
        let rest: Vec<Point> =
            self.vectors.iter().enumerate().filter(|(i, _)| *i != r).map(|(_, v)| v.clone()).collect();
        if rest.len() < self.dim || rank_of(&rest.iter().collect::<Vec<_>>(), self.dim) < self.dim {
            return Err(Error::NonSpanning(format!(
                "removing direction {:?} leaves a set that does not span R^{}",
                self.vectors[r].as_slice(),
                self.dim
            )));
        }
        Self::reordered(rest)
    }

    /// Bounding box of the support `[x_1 .. x_n][0,1]^n`.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![0.0; self.dim];
        let mut hi = vec![0.0; self.dim];
        for v in &self.vectors {
            for i in 0..self.dim {
                if v[i] < 0 {
                    lo[i] += v[i] as f64;
                } else {
                    hi[i] += v[i] as f64;
                }
            }
        }
        (lo, hi)
    }
}

/// Largest `r` such that removing any `r + 1` directions leaves a spanning
/// set; `−1` when removing a single direction can already break spanning.
pub fn smoothness_order(dirs: &DirectionMatrix) -> i64 {
    let n = dirs.len();
    let d = dirs.dim();
    for k in 0..=n {
        for del in combinations(n, k) {
            let rest: Vec<&Point> = (0..n).filter(|i| !del.contains(i)).map(|i| &dirs.vectors[i]).collect();
            if rank_of(&rest, d) < d {
                return k as i64 - 2;
            }
        }
    }
    n as i64 - 1
}

// 8-point Gauss–Legendre on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Per prefix length `k > d`: normals of the mesh planes of `β(·, X_{k−1})`
/// paired with the plane offsets.
#[derive(Debug, Clone)]
struct MeshPlanes {
    normals: Vec<(Vec<f64>, Vec<f64>)>,
}

fn hyperplane_normal(vectors: &[&Point], d: usize) -> Option<Vec<f64>> {
    // cofactor expansion of the d×d matrix whose last row is the unknown
    let mut normal = vec![0.0; d];
    for (i, n) in normal.iter_mut().enumerate() {
        let minor: Vec<Vec<i64>> =
            (0..d - 1).map(|r| (0..d).filter(|&c| c != i).map(|c| vectors[r][c]).collect()).collect();
        let det = if d == 1 { 1 } else { int_det(&minor) };
        *n = if (i + d - 1) % 2 == 0 { det as f64 } else { -(det as f64) };
    }
    normal.iter().any(|v| *v != 0.0).then_some(normal)
}

fn mesh_planes(prefix: &[Point], d: usize) -> MeshPlanes {
    let mut normals: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut seen: Vec<Vec<f64>> = Vec::new();
    for sub in combinations(prefix.len(), d - 1) {
        let vs: Vec<&Point> = sub.iter().map(|&i| &prefix[i]).collect();
        let Some(n) = hyperplane_normal(&vs, d) else { continue };
        let scale = n.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut n: Vec<f64> = n.iter().map(|v| v / scale).collect();
        if n.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0) {
            n.iter_mut().for_each(|v| *v = -*v);
        }
        if seen.iter().any(|m| m.iter().zip(&n).all(|(a, b)| (a - b).abs() < 1e-12)) {
            continue;
        }
        seen.push(n.clone());
        let dots: Vec<f64> = prefix.iter().map(|v| v.iter().zip(&n).map(|(a, b)| *a as f64 * b).sum()).collect();
        let mut offsets = vec![0.0];
        for dv in dots {
            let more: Vec<f64> = offsets.iter().map(|o| o + dv).collect();
            offsets.extend(more);
            offsets.sort_by(|a, b| a.total_cmp(b));
            offsets.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        }
        normals.push((n, offsets));
    }
    MeshPlanes { normals }
}

/// A box spline with its smoothness order and an evaluation cache.
#[derive(Debug)]
pub struct BoxSpline {
    dirs: DirectionMatrix,
    smoothness: i64,
    base_inverse: DMatrix<f64>,
    planes: Vec<MeshPlanes>,
    cache: RwLock<HashMap<Vec<i64>, f64>>,
}

impl Clone for BoxSpline {
    fn clone(&self) -> Self {
        Self::new(self.dirs.clone())
    }
}

impl PartialEq for BoxSpline {
    fn eq(&self, other: &Self) -> bool {
        self.dirs == other.dirs
    }
}

/// Query points whose coordinates are multiples of `2^-CACHE_BITS` are cached.
const CACHE_BITS: i32 = 24;

impl BoxSpline {
    pub fn new(dirs: DirectionMatrix) -> Self {
        let d = dirs.dim();
        let base = DMatrix::from_fn(d, d, |i, j| dirs.vectors[j][i] as f64);
        let base_inverse = base.try_inverse().expect("base is invertible by construction");
        let planes = (0..dirs.len()).map(|k| if k >= d { mesh_planes(&dirs.vectors[..k], d) } else { MeshPlanes { normals: Vec::new() } }).collect();
        Self { smoothness: smoothness_order(&dirs), dirs, base_inverse, planes, cache: RwLock::new(HashMap::new()) }
    }

    pub fn courant() -> Self {
        Self::new(DirectionMatrix::courant())
    }

    pub fn directions(&self) -> &DirectionMatrix {
        &self.dirs
    }

    pub fn smoothness(&self) -> i64 {
        self.smoothness
    }

    pub fn dim(&self) -> usize {
        self.dirs.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let scale = f64::powi(2.0, CACHE_BITS);
        let key: Option<Vec<i64>> = x
            .iter()
            .map(|v| {
                let s = v * scale;
                (s.fract() == 0.0 && s.abs() < 1e15).then_some(s as i64)
            })
            .collect();
        if let Some(k) = &key {
            if let Some(v) = self.cache.read().expect("cache lock").get(k) {
                return *v;
            }
        }
        let v = self.eval_prefix(x, self.dirs.len());
        if let Some(k) = key {
            self.cache.write().expect("cache lock").insert(k, v);
        }
        v
    }

    fn in_support_box(&self, x: &[f64], k: usize) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            let (mut lo, mut hi) = (0.0, 0.0);
            for v in &self.dirs.vectors[..k] {
                let c = v[i] as f64;
                if c < 0.0 {
                    lo += c;
                } else {
                    hi += c;
                }
            }
            x[i] >= lo - 1e-12 && x[i] <= hi + 1e-12
        })
    }

    /// `β(x, X_k)` for the first `k` directions.
    fn eval_prefix(&self, x: &[f64], k: usize) -> f64 {
        let d = self.dim();
        if !self.in_support_box(x, k) {
            return 0.0;
        }
        if k == d {
            let y = &self.base_inverse * DVector::from_column_slice(x);
            return if y.iter().all(|&t| (-1e-13..1.0 - 1e-13).contains(&t)) { 1.0 / self.dirs.base_det as f64 } else { 0.0 };
        }
        let dir: Vec<f64> = self.dirs.vectors[k - 1].iter().map(|&c| c as f64).collect();
        let mut breaks = vec![0.0, 1.0];
        for (n, offsets) in &self.planes[k - 1].normals {
            let nx: f64 = n.iter().zip(x).map(|(a, b)| a * b).sum();
            let nd: f64 = n.iter().zip(&dir).map(|(a, b)| a * b).sum();
            if nd.abs() < 1e-14 {
                continue;
            }
            for c in offsets {
                let t = (nx - c) / nd;
                if t > 0.0 && t < 1.0 {
                    breaks.push(t);
                }
            }
        }
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut total = 0.0;
        let mut y = vec![0.0; d];
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let t = mid + half * node;
                for i in 0..d {
                    y[i] = x[i] - t * dir[i];
                }
                total += weight * half * self.eval_prefix(&y, k - 1);
            }
        }
        total
    }

    /// `Σ_k c_k β(x − k)`.
    pub fn combine<T: Scalar>(&self, coeffs: &LatticeSequence<T>, x: &[f64]) -> f64 {
        let (lo, hi) = self.dirs.support_box();
        let klo: Vec<i64> = x.iter().zip(&hi).map(|(a, h)| (a - h).floor() as i64).collect();
        let khi: Vec<i64> = x.iter().zip(&lo).map(|(a, l)| (a - l).ceil() as i64).collect();
        let mut s = 0.0;
        for k in box_points(&klo, &khi) {
            let c = coeffs.get(&k).to_f64_lossy();
            if c != 0.0 {
                let y: Vec<f64> = x.iter().zip(&k).map(|(a, b)| a - *b as f64).collect();
                s += c * self.eval(&y);
            }
        }
        s
    }
}

/// `D_{x_r} Σ_k c_k β(x − k, X) = Σ_k (c_k − c_{k − x_r}) β(x − k, X \ x_r)`.
pub fn directional_derivative<T: Scalar>(
    coeffs: &LatticeSequence<T>,
    bs: &BoxSpline,
    r: usize,
    x: &[f64],
) -> Result<f64> {
    let reduced = BoxSpline::new(bs.directions().without(r)?);
    let xr = &bs.directions().vectors()[r];
    let mut diff: LatticeSequence<T> = LatticeSequence::zeros(coeffs.dim());
    for (k, c) in coeffs.iter() {
        diff.add_at(k, c.clone());
        let shifted: Point = k.iter().zip(xr).map(|(a, b)| a + b).collect();
        diff.add_at(&shifted, -c.clone());
    }
    Ok(reduced.combine(&diff, x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialReproduction {
    pub exponent: Vec<u32>,
    pub reproduced: bool,
    /// Fitted coefficient of the monomial itself.
    pub leading_coefficient: f64,
    /// Largest other top-degree coefficient.
    pub other_leading: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproductionReport {
    pub degree: u32,
    pub all_reproduced: bool,
    pub monomials: Vec<MonomialReproduction>,
}

/// For each monomial `c(i) = i^α` with `|α| <= degree`, checks that
/// `Σ c(i) β(x − i)` is a polynomial of degree `|α|` with leading part `x^α`,
/// by least-squares fit on sample points inside `[-window, window]^d`.
pub fn polynomial_reproduction_check(bs: &BoxSpline, degree: u32, window: i64) -> Result<ReproductionReport> {
    if i64::from(degree) > bs.smoothness() + 1 {
        return Err(Error::Precondition(format!(
            "degree {degree} exceeds smoothness + 1 = {}",
            bs.smoothness() + 1
        )));
    }
    let d = bs.dim();
    let (lo, hi) = bs.directions().support_box();
    let span: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let reach = window + span.ceil() as i64 + 1;
    let basis = multi_indices_up_to(d, degree);
    let samples = basis.len() + 5;
    // deterministic interior points, away from integer mesh planes
    let inner = (window as f64 - 1.0).max(0.5);
    let points: Vec<Vec<f64>> = (0..samples * 2)
        .map(|s| {
            (0..d)
                .map(|i| {
                    let u = ((s as f64 + 1.0) * (0.618_033_988_749_894_9 + 0.414_213_562_373_095 * i as f64)).fract();
                    -inner + 2.0 * inner * u
                })
                .collect()
        })
        .collect();
    let mut monomials = Vec::new();
    for alpha in &basis {
        let coeffs = LatticeSequence::from_fn(&vec![-reach; d], &vec![reach; d], |k: &[i64]| {
            k.iter().zip(alpha.iter()).map(|(a, &e)| (*a as f64).powi(e as i32)).product::<f64>()
        });
        let order: u32 = alpha.iter().sum();
        let fit_basis: Vec<&crate::gridseq::MultiIndex> = basis.iter().filter(|b| b.iter().sum::<u32>() <= order).collect();
        let a = DMatrix::from_fn(points.len(), fit_basis.len(), |r, c| {
            points[r].iter().zip(fit_basis[c].iter()).map(|(x, &e)| x.powi(e as i32)).product()
        });
        let b = DVector::from_iterator(points.len(), points.iter().map(|x| bs.combine(&coeffs, x)));
        let svd = a.clone().svd(true, true);
        let sol = svd.solve(&b, 1e-12).map_err(|e| Error::Precondition(e.to_string()))?;
        let residual = (&a * &sol - &b).amax();
        let mut lead = 0.0;
        let mut other: f64 = 0.0;
        for (c, beta) in fit_basis.iter().enumerate() {
            if beta.iter().sum::<u32>() == order {
                if beta.as_slice() == alpha.as_slice() {
                    lead = sol[c];
                } else {
                    other = other.max(sol[c].abs());
                }
            }
        }
        let reproduced = residual < 1e-8 && (lead - 1.0).abs() < 1e-8 && other < 1e-8;
        monomials.push(MonomialReproduction {
            exponent: alpha.to_vec(),
            reproduced,
            leading_coefficient: lead,
            other_leading: other,
            residual,
        });
    }
    Ok(ReproductionReport { degree, all_reproduced: monomials.iter().all(|m| m.reproduced), monomials })
}

/// Rendering basis `Φ₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    Hat,
    BoxSpline(BoxSpline),
}

impl Basis {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Basis::Hat => hat(x),
            Basis::BoxSpline(bs) => bs.eval(x),
        }
    }

    /// Bounding box of the support.
    pub fn support_box(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Basis::Hat => (vec![-1.0; d], vec![1.0; d]),
            Basis::BoxSpline(bs) => bs.directions().support_box(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Basis::Hat => "hat".into(),
            Basis::BoxSpline(bs) => {
                let dirs: Vec<String> = bs
                    .directions()
                    .vectors()
                    .iter()
                    .map(|v| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                format!("boxspline({})", dirs.join(";"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementMask {
    pub matrix: Vec<Vec<i64>>,
    pub mask: Vec<(Vec<i64>, f64)>,
    pub residual: f64,
    pub success: bool,
    pub message: String,
}

/// Least-squares fit of `Φ₀(x) = Σ_k g_k Φ₀(Mx − k)` for `‖k‖_∞ <= support_bound`,
/// sampled on a `grid^d` uniform grid over the support box. Succeeds iff the
/// sup-norm defect is below `1e-8`.
pub fn fit_refinement_mask(basis: &Basis, m: &DilationMatrix, support_bound: i64, grid: usize) -> Result<RefinementMask> {
    let d = m.dim();
    if grid < 2 {
        return Err(Error::Precondition("grid needs at least 2 points per axis".into()));
    }
    let ks = box_points(&vec![-support_bound; d], &vec![support_bound; d]);
    let (lo, hi) = basis.support_box(d);
    let axis: Vec<Vec<f64>> =
        (0..d).map(|i| (0..grid).map(|s| lo[i] + (hi[i] - lo[i]) * s as f64 / (grid - 1) as f64).collect()).collect();
    let total = grid.pow(d as u32);
    if total < ks.len() {
        return Err(Error::Precondition(format!("{total} samples for {} unknowns", ks.len())));
    }
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|i| {
                    let v = axis[i][idx % grid];
                    idx /= grid;
                    v
                })
                .collect()
        })
        .collect();
    let entries = m.entries();
    let a = DMatrix::from_fn(points.len(), ks.len(), |r, c| {
        let x = &points[r];
        let y: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| entries[i][j] as f64 * x[j]).sum::<f64>() - ks[c][i] as f64)
            .collect();
        basis.eval(&y)
    });
    let b = DVector::from_iterator(points.len(), points.iter().map(|x| basis.eval(x)));
    let sol = a.clone().svd(true, true).solve(&b, 1e-10).map_err(|e| Error::Precondition(e.to_string()))?;
    let residual = (&a * &sol - &b).amax();
    let mask = ks
        .iter()
        .zip(sol.iter())
        .filter(|(_, g)| g.abs() > 1e-12)
        .map(|(k, g)| (k.to_vec(), *g))
        .collect();
    let success = residual < 1e-8;
    Ok(RefinementMask {
        matrix: entries.to_vec(),
        mask,
        residual,
        success,
        message: if success {
            "refinable".into()
        } else {
            format!("not M-refinable at this support bound (residual {residual:.3e})")
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::point;
    use crate::scalar::rat_int;
    use crate::Rational;

    fn courant_closed_form(x: &[f64]) -> f64 {
        let (y1, y2) = (x[0] - 1.0, x[1] - 1.0);
        (1.0 - y1.abs().max(y2.abs()).max((y1 - y2).abs())).max(0.0)
    }

    #[test]
    fn indicator_and_support() {
        let bs = BoxSpline::new(DirectionMatrix::unit(2));
        assert_eq!(bs.eval(&[0.5, 0.5]), 1.0);
        assert_eq!(bs.eval(&[1.5, 0.5]), 0.0);
        assert_eq!(bs.smoothness(), -1);
    }

    #[test]
    fn courant_matches_closed_form() {
        let bs = BoxSpline::courant();
        assert_eq!(bs.smoothness(), 0);
        for &(a, b) in &[(1.0, 1.0), (0.3, 0.2), (1.7, 1.1), (0.5, 1.2), (1.9, 1.95), (2.5, 0.5)] {
            assert!((bs.eval(&[a, b]) - courant_closed_form(&[a, b])).abs() < 1e-12, "{a},{b}");
        }
    }

    #[test]
    fn partition_of_unity_for_higher_elements() {
        let dirs = DirectionMatrix::repeated(&[point(&[1, 0]), point(&[0, 1]), point(&[1, 1])], 2).unwrap();
        let bs = BoxSpline::new(dirs);
        assert_eq!(bs.smoothness(), 2);
        let ones = LatticeSequence::from_fn(&[-6, -6], &[6, 6], |_| rat_int(1));
        for x in [[0.13, 0.71], [0.5, 0.5], [-0.37, 0.02]] {
            assert!((bs.combine::<Rational>(&ones, &x) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn smoothness_is_permutation_invariant() {
        let a = DirectionMatrix::reordered(vec![point(&[1, 1]), point(&[1, 0]), point(&[0, 1]), point(&[1, 0])]).unwrap();
        let b = DirectionMatrix::reordered(vec![point(&[1, 0]), point(&[1, 0]), point(&[0, 1]), point(&[1, 1])]).unwrap();
        assert_eq!(smoothness_order(&a), smoothness_order(&b));
        assert_eq!(smoothness_order(&a), 0);
    }

    #[test]
    fn derivative_requires_spanning_remainder() {
        let bs = BoxSpline::new(DirectionMatrix::unit(2));
        let c = LatticeSequence::<f64>::delta(2, &[0, 0]);
        assert!(directional_derivative(&c, &bs, 0, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn hat_refinement_mask_in_one_dimension() {
        let m = DilationMatrix::scalar(1, 2).unwrap();
        let fit = fit_refinement_mask(&Basis::Hat, &m, 2, 33).unwrap();
        assert!(fit.success);
        let g: Vec<f64> = fit.mask.iter().map(|(_, g)| *g).collect();
        assert_eq!(g.len(), 3);
        assert!((g[0] - 0.5).abs() < 1e-10 && (g[1] - 1.0).abs() < 1e-10 && (g[2] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn indicator_reproduction_degree_is_out_of_range() {
        let bs = BoxSpline::new(DirectionMatrix::unit(2));
        assert!(polynomial_reproduction_check(&bs, 1, 3).is_err());
        let r = polynomial_reproduction_check(&bs, 0, 3).unwrap();
        assert!(r.all_reproduced);
    }
}
