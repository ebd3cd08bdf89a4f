//! Finitely supported sequences on `Z^d`, their norms and difference
//! operators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::lattice::{add_points, int_det, sub_points, unit_point, Point};
use crate::scalar::Scalar;

/// Exponent of a multi-index, `μ = (μ_1, ..., μ_d)`.
pub type MultiIndex = SmallVec<[u32; 4]>;

/// The `p` of an `ℓ^p` norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PNorm {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl PNorm {
    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            PNorm::One => 1.0,
            PNorm::Two => 0.5,
            PNorm::Inf => 0.0,
        }
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PNorm::One => "1",
            PNorm::Two => "2",
            PNorm::Inf => "inf",
        })
    }
}

impl FromStr for PNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(PNorm::One),
            "2" => Ok(PNorm::Two),
            "inf" | "∞" | "infinity" => Ok(PNorm::Inf),
            other => Err(Error::Parse(format!("p must be 1, 2 or inf, got {other:?}"))),
        }
    }
}

/// All multi-indices of dimension `d` and total order `l`, in descending
/// lexicographic order: `(l,0,..)` first, `(..,0,l)` last.
pub fn multi_indices(d: usize, l: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur: MultiIndex = smallvec::smallvec![0; d];
    fn rec(pos: usize, left: u32, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        let d = cur.len();
        if pos + 1 == d {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    if d > 0 {
        rec(0, l, &mut cur, &mut out);
    }
    out
}

/// All multi-indices of dimension `d` with total order `<= l`, by increasing order.
pub fn multi_indices_up_to(d: usize, l: u32) -> Vec<MultiIndex> {
    (0..=l).flat_map(|k| multi_indices(d, k)).collect()
}

pub fn order(mu: &[u32]) -> u32 {
    mu.iter().sum()
}

/// Number of multi-indices of order `l` in dimension `d`: `C(l+d-1, d-1)`.
pub fn block_size(d: usize, l: u32) -> usize {
    binomial((l as usize) + d - 1, d - 1)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// A finitely supported map `Z^d -> T`; points not stored are zero and zero
/// values are never stored.
#[derive(Clone, PartialEq)]
pub struct LatticeSequence<T> {
    dim: usize,
    values: BTreeMap<Point, T>,
}

impl<T: fmt::Debug> fmt::Debug for LatticeSequence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.values.iter().map(|(k, v)| (k.as_slice(), v))).finish()
    }
}

impl<T: Scalar> LatticeSequence<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, values: BTreeMap::new() }
    }

    /// `δ_k`.
    pub fn delta(dim: usize, at: &[i64]) -> Self {
        let mut s = Self::zeros(dim);
        s.set(at, T::one());
        s
    }

    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, T)>,
    {
        let mut s = Self::zeros(dim);
        for (k, v) in entries {
            if k.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: k.len() });
            }
            s.add_at(&k, v);
        }
        Ok(s)
    }

    /// Samples `f` on the box `lo <= k <= hi`.
    pub fn from_fn(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64]) -> T) -> Self {
        let mut s = Self::zeros(lo.len());
        for k in box_points(lo, hi) {
            let v = f(&k);
            s.set(&k, v);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: &[i64]) -> T {
        self.values.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn get_ref(&self, k: &[i64]) -> Option<&T> {
        self.values.get(k)
    }

    pub fn set(&mut self, k: &[i64], v: T) {
        debug_assert_eq!(k.len(), self.dim);
        if v.is_zero() {
            self.values.remove(k);
        } else {
            self.values.insert(Point::from_slice(k), v);
        }
    }

    pub fn add_at(&mut self, k: &[i64], v: T) {
        let cur = self.get(k);
        self.set(k, cur + v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &T)> {
        self.values.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.values.keys()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest box `lo <= k <= hi` containing the support.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let mut it = self.values.keys();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.clone(), first.clone());
        for k in it {
            for i in 0..self.dim {
                lo[i] = lo[i].min(k[i]);
                hi[i] = hi[i].max(k[i]);
            }
        }
        Some((lo, hi))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LatticeSequence<U> {
        let mut out = LatticeSequence::zeros(self.dim);
        for (k, v) in &self.values {
            out.set(k, f(v));
        }
        out
    }

    pub fn to_f64(&self) -> LatticeSequence<f64> {
        self.map(|v| v.to_f64_lossy())
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (k, v) in &other.values {
            out.add_at(k, v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (k, v) in &other.values {
            out.add_at(k, -v.clone());
        }
        Ok(out)
    }

    /// `u_k -> u_{k - shift}`.
    pub fn translate(&self, shift: &[i64]) -> Self {
        let mut out = Self::zeros(self.dim);
        for (k, v) in &self.values {
            out.values.insert(add_points(k, shift), v.clone());
        }
        out
    }

    /// Restriction to the box `lo <= k <= hi`.
    pub fn restrict(&self, lo: &[i64], hi: &[i64]) -> Self {
        let mut out = Self::zeros(self.dim);
        for (k, v) in &self.values {
            if in_box(k, lo, hi) {
                out.values.insert(k.clone(), v.clone());
            }
        }
        out
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    /// `sup_k |u_k|`, exact in the sequence's arithmetic.
    pub fn norm_inf(&self) -> T {
        self.values.values().map(|v| v.abs()).fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// `Σ_k |u_k|`, exact in the sequence's arithmetic.
    pub fn norm_1(&self) -> T {
        self.values.values().fold(T::zero(), |a, v| a + v.abs())
    }

    /// `ℓ^p` norm as a float. `p = 2` is always computed in double precision.
    pub fn lp_norm(&self, p: PNorm) -> f64 {
        match p {
            PNorm::One => self.norm_1().to_f64_lossy(),
            PNorm::Inf => self.norm_inf().to_f64_lossy(),
            PNorm::Two => self.values.values().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// `∇_x u_k = u_{k+x} - u_k`.
    pub fn shift_difference(&self, x: &[i64]) -> Self {
        let mut out = Self::zeros(self.dim);
        let mut candidates: BTreeSet<Point> = BTreeSet::new();
        for k in self.values.keys() {
            candidates.insert(k.clone());
            candidates.insert(sub_points(k, x));
        }
        for k in candidates {
            let v = self.get(&add_points(&k, x)) - self.get(&k);
            out.set(&k, v);
        }
        out
    }

    /// `∇^μ u` in the canonical directions.
    pub fn forward_difference(&self, mu: &[u32]) -> Result<Self> {
        forward_difference(self, mu)
    }
}

pub fn lp_norm<T: Scalar>(v: &LatticeSequence<T>, p: PNorm) -> f64 {
    v.lp_norm(p)
}

/// `∇^μ v = ∇_1^{μ_1} ... ∇_d^{μ_d} v`.
pub fn forward_difference<T: Scalar>(v: &LatticeSequence<T>, mu: &[u32]) -> Result<LatticeSequence<T>> {
    if mu.len() != v.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), got: mu.len() });
    }
    let mut out = v.clone();
    for (j, &times) in mu.iter().enumerate() {
        let e = unit_point(v.dim(), j);
        for _ in 0..times {
            out = out.shift_difference(&e);
        }
    }
    Ok(out)
}

/// All differences of order `l`: `Δ^l v = (∇^μ v)_{|μ| = l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceBlock<T> {
    pub order: u32,
    pub components: Vec<(MultiIndex, LatticeSequence<T>)>,
}

impl<T: Scalar> DifferenceBlock<T> {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, mu: &[u32]) -> Option<&LatticeSequence<T>> {
        self.components.iter().find(|(m, _)| m.as_slice() == mu).map(|(_, s)| s)
    }

    /// Max over components of the component norm.
    pub fn norm(&self, p: PNorm) -> f64 {
        self.components.iter().map(|(_, s)| s.lp_norm(p)).fold(0.0, f64::max)
    }

    /// Exact `max_μ ‖∇^μ v‖_∞`.
    pub fn norm_inf(&self) -> T {
        self.components.iter().map(|(_, s)| s.norm_inf()).fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|(_, s)| s.is_zero())
    }
}

pub fn delta_block<T: Scalar>(v: &LatticeSequence<T>, l: u32) -> Result<DifferenceBlock<T>> {
    if l == 0 {
        return Err(Error::Precondition("difference order must be at least 1".into()));
    }
    let components = multi_indices(v.dim(), l)
        .into_iter()
        .map(|mu| forward_difference(v, &mu).map(|s| (mu, s)))
        .collect::<Result<_>>()?;
    Ok(DifferenceBlock { order: l, components })
}

/// A list of integer directions `x_1..x_n` for directional differences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub vectors: Vec<Point>,
    pub spans_lattice: bool,
}

impl DirectionSet {
    pub fn new(vectors: Vec<Point>) -> Result<Self> {
        let d = vectors.first().map(|v| v.len()).ok_or_else(|| Error::NonSpanning("empty direction set".into()))?;
        if let Some(v) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        let spans_lattice = minors_gcd(&vectors, d) == 1;
        Ok(Self { vectors, spans_lattice })
    }

    pub fn canonical(d: usize) -> Self {
        Self { vectors: (0..d).map(|i| unit_point(d, i)).collect(), spans_lattice: true }
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn require_spanning(&self) -> Result<()> {
        if self.spans_lattice {
            Ok(())
        } else {
            let g = minors_gcd(&self.vectors, self.dim());
            Err(Error::NonSpanning(format!("gcd of the maximal minors is {g}")))
        }
    }
}

/// gcd of all `d x d` minors of the matrix with the given columns.
pub fn minors_gcd(vectors: &[Point], d: usize) -> i64 {
    let mut g = 0i64;
    for subset in combinations(vectors.len(), d) {
        let m: Vec<Vec<i64>> = (0..d).map(|r| subset.iter().map(|&c| vectors[c][r]).collect()).collect();
        g = g.gcd(&(int_det(&m) as i64));
        if g == 1 {
            break;
        }
    }
    g
}

/// All `k`-element subsets of `0..n`, each sorted ascending.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// `∇_{x_1}^{μ_1} ... ∇_{x_n}^{μ_n} v`.
pub fn directional_difference<T: Scalar>(
    v: &LatticeSequence<T>,
    dirs: &DirectionSet,
    mu: &[u32],
) -> Result<LatticeSequence<T>> {
    dirs.require_spanning()?;
    if mu.len() != dirs.len() {
        return Err(Error::DimensionMismatch { expected: dirs.len(), got: mu.len() });
    }
    if dirs.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), got: dirs.dim() });
    }
    let mut out = v.clone();
    for (x, &times) in dirs.vectors.iter().zip(mu) {
        for _ in 0..times {
            out = out.shift_difference(x);
        }
    }
    Ok(out)
}

/// All directional differences of order `l` over `dirs`.
pub fn directional_block<T: Scalar>(v: &LatticeSequence<T>, dirs: &DirectionSet, l: u32) -> Result<DifferenceBlock<T>> {
    let components = multi_indices(dirs.len(), l)
        .into_iter()
        .map(|mu| directional_difference(v, dirs, &mu).map(|s| (mu, s)))
        .collect::<Result<_>>()?;
    Ok(DifferenceBlock { order: l, components })
}

pub fn in_box(k: &[i64], lo: &[i64], hi: &[i64]) -> bool {
    k.iter().zip(lo).zip(hi).all(|((x, a), b)| a <= x && x <= b)
}

/// Every integer point of the box `lo <= k <= hi`, first coordinate fastest.
pub fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Point> {
    let d = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = Point::from_slice(lo);
    loop {
        out.push(cur.clone());
        let mut axis = 0;
        while axis < d {
            if cur[axis] < hi[axis] {
                cur[axis] += 1;
                break;
            }
            cur[axis] = lo[axis];
            axis += 1;
        }
        if axis == d {
            return out;
        }
    }
}

/// Reads `k_1,...,k_d,value` rows. Blank lines and lines starting with `#`
/// are skipped; the dimension comes from the first data row.
pub fn read_csv<T: Scalar, R: BufRead>(reader: R) -> Result<LatticeSequence<T>> {
    let mut seq: Option<LatticeSequence<T>> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse(format!("line {}: expected k_1,...,k_d,value", lineno + 1)));
        }
        let d = fields.len() - 1;
        let s = seq.get_or_insert_with(|| LatticeSequence::zeros(d));
        if s.dim() != d {
            return Err(Error::Parse(format!("line {}: expected {} coordinates, got {d}", lineno + 1, s.dim())));
        }
        let k: Point = fields[..d]
            .iter()
            .map(|f| f.parse::<i64>().map_err(|_| Error::Parse(format!("line {}: bad coordinate {f:?}", lineno + 1))))
            .collect::<Result<_>>()?;
        let v = T::parse_literal(fields[d]).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        s.add_at(&k, v);
    }
    seq.ok_or_else(|| Error::Parse("no data rows".into()))
}

pub fn write_csv<T: Scalar, W: Write>(seq: &LatticeSequence<T>, mut out: W) -> std::io::Result<()> {
    for (k, v) in seq.iter() {
        for c in k {
            write!(out, "{c},")?;
        }
        writeln!(out, "{}", v.to_literal())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::point;
    use crate::scalar::{rat, rat_int, Rational};
    use proptest::prelude::*;

    fn linear(lo: i64, hi: i64) -> LatticeSequence<Rational> {
        LatticeSequence::from_fn(&[lo, lo], &[hi, hi], |k| rat_int(k[0]))
    }

    #[test]
    fn difference_of_linear_is_constant_inside() {
        let v = linear(-5, 5);
        let d = forward_difference(&v, &[1, 0]).unwrap();
        for a in -5..5 {
            for b in -5..=5 {
                assert_eq!(d.get(&[a, b]), rat_int(1));
            }
        }
    }

    #[test]
    fn second_difference_of_delta() {
        let v = LatticeSequence::<Rational>::delta(1, &[0]);
        let d = forward_difference(&v, &[2]).unwrap();
        // direct expansion: u_{k+2} - 2u_{k+1} + u_k
        let want: BTreeMap<Point, Rational> = (-3..=1)
            .map(|k| {
                let f = |i: i64| if i == 0 { rat_int(1) } else { rat_int(0) };
                (point(&[k]), f(k + 2) - rat_int(2) * f(k + 1) + f(k))
            })
            .filter(|(_, v)| *v != rat_int(0))
            .collect();
        assert_eq!(d.values, want);
        assert_eq!(d.get(&[-2]), rat_int(1));
        assert_eq!(d.get(&[-1]), rat_int(-2));
        assert_eq!(d.get(&[0]), rat_int(1));
    }

    #[test]
    fn norms() {
        let d = LatticeSequence::<Rational>::delta(2, &[3, 4]);
        for p in [PNorm::One, PNorm::Two, PNorm::Inf] {
            assert_eq!(d.lp_norm(p), 1.0);
        }
        let v = LatticeSequence::from_entries(1, [(point(&[0]), rat_int(3)), (point(&[5]), rat_int(-4))]).unwrap();
        assert_eq!(v.norm_1(), rat_int(7));
        assert_eq!(v.norm_inf(), rat_int(4));
        assert_eq!(v.lp_norm(PNorm::Two), 5.0);
    }

    #[test]
    fn blocks() {
        let v = LatticeSequence::<Rational>::delta(2, &[0, 0]);
        assert_eq!(delta_block(&v, 1).unwrap().len(), 2);
        assert_eq!(delta_block(&v, 2).unwrap().len(), 3);
        assert_eq!(block_size(2, 2), 3);
        assert_eq!(block_size(3, 2), 6);
        let mus = multi_indices(2, 2);
        assert_eq!(mus, vec![MultiIndex::from_slice(&[2, 0]), MultiIndex::from_slice(&[1, 1]), MultiIndex::from_slice(&[0, 2])]);
        let c = LatticeSequence::<Rational>::zeros(2);
        assert!(delta_block(&c, 1).unwrap().is_zero());
    }

    #[test]
    fn directional() {
        let v = LatticeSequence::from_fn(&[-4, -4], &[4, 4], |k| rat_int(k[0] + k[1]));
        let diag = DirectionSet::new(vec![point(&[1, 1])]).unwrap();
        assert!(!diag.spans_lattice);
        assert!(matches!(directional_difference(&v, &diag, &[1]), Err(Error::NonSpanning(_))));
        let dirs = DirectionSet::new(vec![point(&[1, 0]), point(&[0, 1]), point(&[1, 1])]).unwrap();
        let d = directional_difference(&v, &dirs, &[0, 0, 1]).unwrap();
        for a in -4..4 {
            for b in -4..4 {
                assert_eq!(d.get(&[a, b]), rat_int(2));
            }
        }
        let bad = DirectionSet::new(vec![point(&[2, 0]), point(&[0, 2])]).unwrap();
        assert!(!bad.spans_lattice);
        assert!(directional_difference(&v, &bad, &[1, 0]).is_err());
        assert_eq!(minors_gcd(&bad.vectors, 2), 4);
    }

    #[test]
    fn canonical_directions_match_forward_difference() {
        let v = LatticeSequence::from_fn(&[0, 0], &[3, 2], |k| rat(k[0] * k[0] - 3 * k[1], 7));
        let c = DirectionSet::canonical(2);
        for mu in multi_indices_up_to(2, 3) {
            assert_eq!(directional_difference(&v, &c, &mu).unwrap(), forward_difference(&v, &mu).unwrap());
        }
    }

    /// Norm equivalence between canonical and extended first differences,
    /// with constants measured on small windows: the extended block is never
    /// more than twice the canonical one (`∇_{e1+e2} = ∇_1 + shifted ∇_2`)
    /// and never smaller.
    #[test]
    fn direction_set_norm_equivalence() {
        let dirs = DirectionSet::new(vec![point(&[1, 0]), point(&[0, 1]), point(&[1, 1])]).unwrap();
        let mut rng_state = 12345u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng_state >> 33) % 21) as i64 - 10
        };
        let (mut lo_c, mut hi_c) = (f64::INFINITY, 0.0f64);
        for _ in 0..200 {
            let v = LatticeSequence::from_fn(&[0, 0], &[2, 2], |_| rat_int(next()));
            let a = directional_block(&v, &dirs, 1).unwrap().norm(PNorm::Inf);
            let b = delta_block(&v, 1).unwrap().norm(PNorm::Inf);
            if b > 0.0 {
                lo_c = lo_c.min(a / b);
                hi_c = hi_c.max(a / b);
            }
        }
        assert!(lo_c >= 1.0 && hi_c <= 2.0, "{lo_c} {hi_c}");
    }

    #[test]
    fn csv_round_trip() {
        let v = LatticeSequence::from_entries(2, [(point(&[0, 1]), rat(3, 4)), (point(&[-2, 5]), rat_int(-1))]).unwrap();
        let mut buf = Vec::new();
        write_csv(&v, &mut buf).unwrap();
        let back: LatticeSequence<Rational> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, v);
        let f: LatticeSequence<f64> = read_csv("# header\n0,0,0.5\n1,0,1/4\n".as_bytes()).unwrap();
        assert_eq!(f.get(&[1, 0]), 0.25);
        assert!(read_csv::<f64, _>("0,0,1\n1,2\n".as_bytes()).is_err());
    }

    fn small_seq() -> impl Strategy<Value = LatticeSequence<Rational>> {
        proptest::collection::vec(((-3i64..3, -3i64..3), -20i64..20, 1i64..5), 0..12).prop_map(|entries| {
            LatticeSequence::from_entries(2, entries.into_iter().map(|((a, b), p, q)| (point(&[a, b]), rat(p, q)))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn differences_commute(v in small_seq()) {
            let a = v.shift_difference(&[1, 0]).shift_difference(&[0, 1]);
            let b = v.shift_difference(&[0, 1]).shift_difference(&[1, 0]);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn differences_annihilate_low_degree_polynomials(c in proptest::collection::vec(-5i64..5, 6)) {
            // degree-2 polynomial sampled on a box; third differences vanish inside
            let v = LatticeSequence::from_fn(&[-6, -6], &[6, 6], |k| {
                let (x, y) = (k[0], k[1]);
                rat_int(c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y)
            });
            for mu in multi_indices(2, 3) {
                let d = forward_difference(&v, &mu).unwrap();
                for k in box_points(&[-6, -6], &[3, 3]) {
                    prop_assert_eq!(d.get(&k), rat_int(0));
                }
            }
        }

        #[test]
        fn zero_values_are_never_stored(v in small_seq()) {
            let w = v.sub(&v).unwrap();
            prop_assert!(w.is_zero());
            prop_assert!(v.iter().all(|(_, x)| *x != rat_int(0)));
        }
    }
}
