//! Integer dilation matrices, coset decomposition of `Z^d` and isotropy
//! classification.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::{rat, Rational};

/// A point of `Z^d`.
pub type Point = SmallVec<[i64; 4]>;

/// Tolerance for eigenvalue-modulus comparisons.
pub const EIGEN_TOL: f64 = 1e-10;

/// Largest root-of-unity order tried when an eigenvalue sits on the unit circle.
const ROOT_OF_UNITY_MAX_ORDER: usize = 12;

pub fn point(coords: &[i64]) -> Point {
    Point::from_slice(coords)
}

pub fn zero_point(d: usize) -> Point {
    smallvec::smallvec![0; d]
}

pub fn unit_point(d: usize, i: usize) -> Point {
    let mut p = zero_point(d);
    p[i] = 1;
    p
}

pub fn add_points(a: &[i64], b: &[i64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub_points(a: &[i64], b: &[i64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn inf_norm_point(a: &[i64]) -> i64 {
    a.iter().map(|x| x.abs()).max().unwrap_or(0)
}

fn check_square(entries: &[Vec<i64>]) -> Result<usize> {
    let d = entries.len();
    if d == 0 {
        return Err(Error::NotSquare("empty matrix".into()));
    }
    if let Some(row) = entries.iter().find(|r| r.len() != d) {
        return Err(Error::NotSquare(format!("row of length {} in a {d}x{d} matrix", row.len())));
    }
    Ok(d)
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn int_det(entries: &[Vec<i64>]) -> i128 {
    let n = entries.len();
    let mut a: Vec<Vec<i128>> = entries.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn minor(entries: &[Vec<i64>], row: usize, col: usize) -> Vec<Vec<i64>> {
    entries
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, &x)| x).collect())
        .collect()
}

/// Adjugate matrix, so that `adj(A) A = det(A) I`.
pub fn int_adjugate(entries: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = entries.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0i64; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let c = int_det(&minor(entries, j, i)) as i64;
            *cell = if (i + j) % 2 == 0 { c } else { -c };
        }
    }
    adj
}

pub fn int_mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let p = b[0].len();
    (0..n)
        .map(|i| (0..p).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn int_mat_vec(a: &[Vec<i64>], v: &[i64]) -> Point {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn identity(d: usize) -> Vec<Vec<i64>> {
    (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect()
}

/// Moduli of the (complex) eigenvalues, sorted ascending.
pub fn eigenvalue_moduli(entries: &[Vec<i64>]) -> Vec<f64> {
    let d = entries.len();
    let m = DMatrix::from_fn(d, d, |i, j| entries[i][j] as f64);
    let eig = match nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 100_000) {
        Some(schur) => schur.complex_eigenvalues(),
        None => m.complex_eigenvalues(),
    };
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| a.total_cmp(b));
    moduli
}

/// Outcome of the expansion test for an integer matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Expansion {
    Expanding,
    NotExpanding(String),
}

/// Classifies an integer matrix as expanding or not.
///
/// Eigenvalue moduli within [`EIGEN_TOL`] of 1 are resolved exactly when the
/// matrix has a root-of-unity eigenvalue (`det(M^q - I) = 0` for a small `q`);
/// any other near-unit modulus is reported as indeterminate.
pub fn expansion(entries: &[Vec<i64>]) -> Result<Expansion> {
    let d = check_square(entries)?;
    if int_det(entries) == 0 {
        return Ok(Expansion::NotExpanding("singular matrix".into()));
    }
    let moduli = eigenvalue_moduli(entries);
    if let Some(&small) = moduli.iter().find(|&&r| r < 1.0 - EIGEN_TOL) {
        return Ok(Expansion::NotExpanding(format!("eigenvalue modulus {small:.6} < 1")));
    }
    if let Some(&near) = moduli.iter().find(|&&r| (r - 1.0).abs() <= EIGEN_TOL) {
        let ident = identity(d);
        let mut power = ident.clone();
        for q in 1..=ROOT_OF_UNITY_MAX_ORDER {
            power = int_mat_mul(&power, entries);
            let shifted: Vec<Vec<i64>> =
                power.iter().zip(&ident).map(|(r, e)| r.iter().zip(e).map(|(a, b)| a - b).collect()).collect();
            if int_det(&shifted) == 0 {
                let reason = if q == 1 {
                    "eigenvalue 1".to_string()
                } else if q == 2 && int_det(&add_identity(entries)) == 0 {
                    "eigenvalue -1".to_string()
                } else {
                    format!("eigenvalue on the unit circle (root of unity of order {q})")
                };
                return Ok(Expansion::NotExpanding(reason));
            }
        }
        return Err(Error::IndeterminateExpansion { modulus: near });
    }
    Ok(Expansion::Expanding)
}

fn add_identity(entries: &[Vec<i64>]) -> Vec<Vec<i64>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, &x)| x + i64::from(i == j)).collect())
        .collect()
}

/// `true` iff the integer matrix is a dilation matrix (nonsingular, all
/// eigenvalue moduli strictly above 1).
pub fn is_dilation(entries: &[Vec<i64>]) -> Result<bool> {
    Ok(expansion(entries)? == Expansion::Expanding)
}

/// Integer expanding matrix together with its exact inverse.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct DilationMatrix {
    entries: Vec<Vec<i64>>,
    det: i64,
    adjugate: Vec<Vec<i64>>,
}

impl fmt::Debug for DilationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DilationMatrix({:?})", self.entries)
    }
}

impl TryFrom<Vec<Vec<i64>>> for DilationMatrix {
    type Error = Error;
    fn try_from(entries: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<DilationMatrix> for Vec<Vec<i64>> {
    fn from(m: DilationMatrix) -> Self {
        m.entries
    }
}

impl DilationMatrix {
    pub fn new(entries: Vec<Vec<i64>>) -> Result<Self> {
        match expansion(&entries)? {
            Expansion::Expanding => {}
            Expansion::NotExpanding(reason) => return Err(Error::NotExpanding(reason)),
        }
        Ok(Self::new_unchecked(entries))
    }

    /// Builds from a matrix already known to be expanding (e.g. a power of one).
    fn new_unchecked(entries: Vec<Vec<i64>>) -> Self {
        let det = int_det(&entries) as i64;
        let adjugate = int_adjugate(&entries);
        Self { entries, det, adjugate }
    }

    /// `s I` in dimension `d`, `|s| >= 2`.
    pub fn scalar(d: usize, s: i64) -> Result<Self> {
        Self::new((0..d).map(|i| (0..d).map(|j| if i == j { s } else { 0 }).collect()).collect())
    }

    pub fn quincunx() -> Self {
        Self::new(vec![vec![-1, 1], vec![1, 1]]).expect("quincunx matrix is expanding")
    }

    pub fn hexagonal() -> Self {
        Self::new(vec![vec![2, 1], vec![0, -2]]).expect("hexagonal matrix is expanding")
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    /// `m = |det M|`, the number of cosets.
    pub fn m(&self) -> usize {
        self.det.unsigned_abs() as usize
    }

    pub fn adjugate(&self) -> &[Vec<i64>] {
        &self.adjugate
    }

    /// Exact inverse `adj(M) / det(M)`.
    pub fn inverse(&self) -> Vec<Vec<Rational>> {
        self.adjugate.iter().map(|r| r.iter().map(|&a| rat(a, self.det)).collect()).collect()
    }

    pub fn apply(&self, k: &[i64]) -> Point {
        int_mat_vec(&self.entries, k)
    }

    pub fn apply_inverse(&self, k: &[i64]) -> Vec<Rational> {
        int_mat_vec(&self.adjugate, k).iter().map(|&y| rat(y, self.det)).collect()
    }

    /// `(q, r)` with `k = M q + r` and `M^{-1} r ∈ [0,1)^d`.
    pub fn div_rem(&self, k: &[i64]) -> (Point, Point) {
        let y = int_mat_vec(&self.adjugate, k);
        let q: Point = y.iter().map(|&yi| Integer::div_floor(&yi, &self.det)).collect();
        let r = sub_points(k, &self.apply(&q));
        (q, r)
    }

    pub fn power(&self, j: u32) -> Self {
        let mut p = identity(self.dim());
        for _ in 0..j {
            p = int_mat_mul(&p, &self.entries);
        }
        if j == 0 {
            // The identity is not expanding but is still a valid lattice map here.
            return Self { det: 1, adjugate: p.clone(), entries: p };
        }
        Self::new_unchecked(p)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> i64 {
        matrix_inf_norm(&self.entries)
    }

    /// `‖M^{-1}‖_∞`, exact.
    pub fn inverse_inf_norm(&self) -> Rational {
        let best = self.adjugate.iter().map(|r| r.iter().map(|x| x.abs()).sum::<i64>()).max().unwrap_or(0);
        rat(best, self.det.abs())
    }

    pub fn eigenvalue_moduli(&self) -> Vec<f64> {
        eigenvalue_moduli(&self.entries)
    }

    pub fn cosets(&self) -> CosetSet {
        coset_representatives(self)
    }
}

/// Maximum absolute row sum of an integer matrix.
pub fn matrix_inf_norm(entries: &[Vec<i64>]) -> i64 {
    entries.iter().map(|r| r.iter().map(|x| x.abs()).sum::<i64>()).max().unwrap_or(0)
}

/// The canonical coset representatives of `Z^d / M Z^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetSet {
    representatives: Vec<Point>,
    index: HashMap<Point, usize>,
    parent: DilationMatrix,
}

impl CosetSet {
    pub fn representatives(&self) -> &[Point] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn parent(&self) -> &DilationMatrix {
        &self.parent
    }

    pub fn get(&self, i: usize) -> &Point {
        &self.representatives[i]
    }

    pub fn index_of(&self, eps: &[i64]) -> Option<usize> {
        self.index.get(eps).copied()
    }

    /// Writes `k = M n + ε_i` and returns `(n, i)`.
    pub fn decompose(&self, k: &[i64]) -> (Point, usize) {
        let (q, r) = self.parent.div_rem(k);
        let i = self.index[&r];
        (q, i)
    }

    /// `M n + ε_i`.
    pub fn compose(&self, n: &[i64], i: usize) -> Point {
        add_points(&self.parent.apply(n), &self.representatives[i])
    }
}

/// Canonical representatives `{k : M^{-1} k ∈ [0,1)^d}`.
///
/// Found by scanning the integer bounding box of `M [0,1)^d`. `ε_0 = 0` comes
/// first; the others are ordered colexicographically by their fractional
/// position `M^{-1} ε` (last coordinate most significant), which reproduces
/// the usual numbering for the quincunx and hexagonal lattices.
pub fn coset_representatives(m: &DilationMatrix) -> CosetSet {
    let d = m.dim();
    let det = m.det();
    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    for corner in 0..(1u32 << d) {
        let v: Point = (0..d).map(|i| i64::from((corner >> i) & 1)).collect();
        let img = m.apply(&v);
        for i in 0..d {
            lo[i] = lo[i].min(img[i]);
            hi[i] = hi[i].max(img[i]);
        }
    }
    let in_unit_cube = |k: &[i64]| {
        int_mat_vec(m.adjugate(), k).iter().all(|&y| {
            let s = y * det.signum();
            (0..det.abs()).contains(&s)
        })
    };
    let mut reps = Vec::with_capacity(m.m());
    let mut cur = lo.clone();
    loop {
        if in_unit_cube(&cur) {
            reps.push(Point::from_slice(&cur));
        }
        let mut axis = 0;
        loop {
            if axis == d {
                break;
            }
            if cur[axis] < hi[axis] {
                cur[axis] += 1;
                break;
            }
            cur[axis] = lo[axis];
            axis += 1;
        }
        if axis == d {
            break;
        }
    }
    debug_assert_eq!(reps.len(), m.m());
    let key = |k: &Point| {
        let mut frac = m.apply_inverse(k);
        frac.reverse();
        frac
    };
    reps.sort_by(|a, b| {
        let za = a.iter().all(|&x| x == 0);
        let zb = b.iter().all(|&x| x == 0);
        zb.cmp(&za).then_with(|| key(a).cmp(&key(b)))
    });
    let index = reps.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    CosetSet { representatives: reps, index, parent: m.clone() }
}

/// Isotropy class of a dilation matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum IsotropyKind {
    /// `M^q = λ I`. `directions` is a primitive direction set closed under `M`
    /// up to scaling: `M x_i = scales[i] x_{permutation[i]}`.
    Cyclic { q: u32, lambda: i64, directions: Vec<Point>, scales: Vec<i64>, permutation: Vec<usize> },
    Isotropic,
    Anisotropic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsotropyInfo {
    pub kind: IsotropyKind,
    /// `m^{1/d}` for isotropic (including cyclic) matrices.
    pub sigma: Option<f64>,
    pub moduli: Vec<f64>,
}

impl IsotropyInfo {
    pub fn is_isotropic(&self) -> bool {
        !matches!(self.kind, IsotropyKind::Anisotropic)
    }
}

pub const DEFAULT_Q_MAX: u32 = 8;

pub fn classify_isotropy(m: &DilationMatrix, q_max: u32) -> IsotropyInfo {
    let d = m.dim();
    let moduli = m.eigenvalue_moduli();
    let sigma = (m.m() as f64).powf(1.0 / d as f64);
    let mut power = identity(d);
    for q in 1..=q_max.max(1) {
        power = int_mat_mul(&power, m.entries());
        let lambda = power[0][0];
        let scalar =
            (0..d).all(|i| (0..d).all(|j| power[i][j] == if i == j { lambda } else { 0 }));
        if scalar {
            let (directions, scales, permutation) = cyclic_directions(m);
            return IsotropyInfo {
                kind: IsotropyKind::Cyclic { q, lambda, directions, scales, permutation },
                sigma: Some(sigma),
                moduli,
            };
        }
    }
    let equal = moduli.iter().all(|r| (r - sigma).abs() <= EIGEN_TOL * sigma.max(1.0));
    let kind = if equal { IsotropyKind::Isotropic } else { IsotropyKind::Anisotropic };
    IsotropyInfo { sigma: equal.then_some(sigma), kind, moduli }
}

fn primitive(v: &[i64]) -> (Point, i64) {
    let g = v.iter().fold(0i64, |g, &x| g.gcd(&x));
    (v.iter().map(|x| x / g).collect(), g)
}

/// Closes the canonical basis under `M` modulo scaling. Only terminates for
/// cyclic matrices, so callers check `M^q = λ I` first.
fn cyclic_directions(m: &DilationMatrix) -> (Vec<Point>, Vec<i64>, Vec<usize>) {
    let d = m.dim();
    let mut dirs: Vec<Point> = (0..d).map(|i| unit_point(d, i)).collect();
    let mut scales = Vec::new();
    let mut perm = Vec::new();
    let mut i = 0;
    while i < dirs.len() {
        let img = m.apply(&dirs[i]);
        let (p, g) = primitive(&img);
        let neg: Point = p.iter().map(|x| -x).collect();
        let (j, s) = if let Some(j) = dirs.iter().position(|x| *x == p) {
            (j, g)
        } else if let Some(j) = dirs.iter().position(|x| *x == neg) {
            (j, -g)
        } else {
            dirs.push(p);
            (dirs.len() - 1, g)
        };
        scales.push(s);
        perm.push(j);
        i += 1;
    }
    (dirs, scales, perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_examples() {
        assert!(is_dilation(&[vec![-1, 1], vec![1, 1]]).unwrap());
        assert!(is_dilation(&[vec![2, 1], vec![0, -2]]).unwrap());
        assert!(!is_dilation(&[vec![1, 0], vec![0, 1]]).unwrap());
        assert!(!is_dilation(&[vec![1, 0], vec![0, 2]]).unwrap());
        assert!(!is_dilation(&[vec![0, 0], vec![0, 2]]).unwrap());
        assert!(!is_dilation(&[vec![3, 0], vec![0, -1]]).unwrap());
        assert!(is_dilation(&[vec![1, -1], vec![1, 1]]).unwrap());
        assert!(matches!(is_dilation(&[vec![1, 2, 3], vec![1, 2]]), Err(Error::NotSquare(_))));
        let e = DilationMatrix::new(vec![vec![1, 0], vec![0, 2]]).unwrap_err();
        assert_eq!(e.to_string(), "not expanding: eigenvalue 1");
        // rotation by 90 degrees: eigenvalues ±i
        assert!(!is_dilation(&[vec![0, -1], vec![1, 0]]).unwrap());
    }

    #[test]
    fn determinant_and_inverse_are_exact() {
        let m = DilationMatrix::hexagonal();
        assert_eq!(m.det(), -4);
        assert_eq!(m.m(), 4);
        let inv = m.inverse();
        for i in 0..2 {
            for j in 0..2 {
                let s: Rational = (0..2).map(|k| &inv[i][k] * rat(m.entries()[k][j], 1)).sum();
                assert_eq!(s, rat(i64::from(i == j), 1));
            }
        }
        assert_eq!(int_det(&[vec![2, 0, 1], vec![1, 3, 0], vec![0, 1, 4]]), 25);
    }

    #[test]
    fn coset_examples() {
        let hex = coset_representatives(&DilationMatrix::hexagonal());
        let want: Vec<Point> = vec![point(&[0, 0]), point(&[1, 0]), point(&[1, -1]), point(&[2, -1])];
        assert_eq!(hex.representatives(), want.as_slice());
        let quin = coset_representatives(&DilationMatrix::quincunx());
        assert_eq!(quin.representatives(), &[point(&[0, 0]), point(&[0, 1])]);
        let two = coset_representatives(&DilationMatrix::scalar(1, 2).unwrap());
        assert_eq!(two.representatives(), &[point(&[0]), point(&[1])]);
    }

    #[test]
    fn hexagonal_fractional_positions() {
        let m = DilationMatrix::hexagonal();
        assert_eq!(m.apply_inverse(&[1, -1]), vec![rat(1, 4), rat(1, 2)]);
        assert_eq!(m.apply_inverse(&[2, -1]), vec![rat(3, 4), rat(1, 2)]);
    }

    #[test]
    fn cosets_partition_a_window() {
        for m in [DilationMatrix::hexagonal(), DilationMatrix::quincunx(), DilationMatrix::scalar(2, 3).unwrap()] {
            let cs = m.cosets();
            for a in -20..=20 {
                for b in -20..=20 {
                    let k = point(&[a, b]);
                    let hits: Vec<(Point, usize)> = (0..cs.len())
                        .filter_map(|i| {
                            let rest = sub_points(&k, cs.get(i));
                            let (q, r) = m.div_rem(&rest);
                            r.iter().all(|&x| x == 0).then_some((q, i))
                        })
                        .collect();
                    assert_eq!(hits.len(), 1, "point {k:?}");
                    let (n, i) = cs.decompose(&k);
                    assert_eq!((n.clone(), i), hits[0]);
                    assert_eq!(cs.compose(&n, i), k);
                }
            }
        }
    }

    #[test]
    fn isotropy_examples() {
        let q = classify_isotropy(&DilationMatrix::quincunx(), DEFAULT_Q_MAX);
        match &q.kind {
            IsotropyKind::Cyclic { q, lambda, directions, scales, permutation } => {
                assert_eq!((*q, *lambda), (2, 2));
                for (i, x) in directions.iter().enumerate() {
                    let img = DilationMatrix::quincunx().apply(x);
                    let want: Point = directions[permutation[i]].iter().map(|c| c * scales[i]).collect();
                    assert_eq!(img, want);
                }
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!((q.sigma.unwrap() - 2f64.sqrt()).abs() < 1e-12);

        let h = classify_isotropy(&DilationMatrix::hexagonal(), DEFAULT_Q_MAX);
        assert!(matches!(h.kind, IsotropyKind::Cyclic { q: 2, lambda: 4, .. }));
        assert!((h.sigma.unwrap() - 2.0).abs() < 1e-12);

        let a = DilationMatrix::new(vec![vec![2, 0], vec![0, 3]]).unwrap();
        assert_eq!(classify_isotropy(&a, DEFAULT_Q_MAX).kind, IsotropyKind::Anisotropic);

        // isotropic without a small cyclic power: [[1,-2],[2,1]] has |λ| = √5
        let r = DilationMatrix::new(vec![vec![1, -2], vec![2, 1]]).unwrap();
        assert_eq!(classify_isotropy(&r, DEFAULT_Q_MAX).kind, IsotropyKind::Isotropic);
    }

    #[test]
    fn inf_norms() {
        assert_eq!(DilationMatrix::hexagonal().inf_norm(), 3);
        assert_eq!(DilationMatrix::quincunx().inf_norm(), 2);
        assert_eq!(DilationMatrix::scalar(2, 2).unwrap().inf_norm(), 2);
        assert_eq!(DilationMatrix::hexagonal().inverse_inf_norm(), rat(3, 4));
    }
}
