//! Joint-spectral-radius bounds for schemes for the differences, and the
//! convergence and regularity certificates built on them.
//!
//! Upper bounds maximize the norm of `j`-fold products over every
//! assignment of rules to fine points, keeping each fine point's choice
//! consistent across the rows that touch it. Lower bounds take spectral radii
//! of finite products of transition matrices on an invariant window.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::RwLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diffscheme::{derive, DifferenceScheme};
use crate::error::{Error, Result};
use crate::gridseq::{box_points, multi_indices_up_to, PNorm};
use crate::lattice::{add_points, classify_isotropy, sub_points, DilationMatrix, Point, DEFAULT_Q_MAX};
use crate::lp::min_l1_solution;
use crate::scalar::{format_rational, rat_int, rational_pow, to_f64, Rational};
use crate::scheme::{choice_tuples, reproduction_degree, SchemeSpec};

/// Default wall-clock budget for one bound computation.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(60);

/// Environment variable overriding [`DEFAULT_BUDGET`], in milliseconds.
pub const BUDGET_ENV: &str = "LATSUB_BUDGET_MS";

/// Budget from `LATSUB_BUDGET_MS` if set and valid, else the default.
pub fn budget_from_env() -> Duration {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .map(Duration::from_millis)
        .unwrap_or(DEFAULT_BUDGET)
}

/// Default depth: 4 for rule families, 8 for linear schemes.
pub fn default_depth(ds: &DifferenceScheme) -> u32 {
    if ds.is_linear() {
        8
    } else {
        4
    }
}

/// `base^(1/root)`, kept exact for comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootValue {
    pub base: Rational,
    pub root: u32,
}

impl RootValue {
    pub fn exact(base: Rational) -> Self {
        Self { base, root: 1 }
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.base).powf(1.0 / f64::from(self.root))
    }

    /// `self < other`, exactly.
    pub fn lt(&self, other: &RootValue) -> bool {
        rational_pow(&self.base, i64::from(other.root)) < rational_pow(&other.base, i64::from(self.root))
    }

    /// `self < m^(num/den)` exactly, `den > 0`.
    pub fn lt_power(&self, m: u64, num: i64, den: i64) -> bool {
        debug_assert!(den > 0);
        let lhs = rational_pow(&self.base, den);
        let rhs = rational_pow(&rat_int(m as i64), num * i64::from(self.root));
        lhs < rhs
    }

    /// `sqrt(a · b)`.
    pub fn geometric_mean(a: &RootValue, b: &RootValue) -> RootValue {
        let base = rational_pow(&a.base, i64::from(b.root)) * rational_pow(&b.base, i64::from(a.root));
        RootValue { base, root: 2 * a.root * b.root }.simplified()
    }

    /// Takes exact roots where possible so `(9/16)^(1/2)` prints as `3/4`.
    pub fn simplified(mut self) -> Self {
        for k in (2..=self.root).rev() {
            if self.root % k != 0 {
                continue;
            }
            if let Some(b) = exact_root(&self.base, k) {
                self.base = b;
                self.root /= k;
                return self.simplified();
            }
        }
        self
    }

    pub fn is_exact_rational(&self) -> bool {
        self.root == 1
    }
}

impl fmt::Display for RootValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.root == 1 {
            f.write_str(&format_rational(&self.base))
        } else {
            write!(f, "({})^(1/{})", format_rational(&self.base), self.root)
        }
    }
}

fn exact_root(r: &Rational, k: u32) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().nth_root(k);
    let d = r.denom().nth_root(k);
    (num_traits::pow(n.clone(), k as usize) == *r.numer() && num_traits::pow(d.clone(), k as usize) == *r.denom())
        .then(|| Rational::new(n, d))
}

/// Certified bracket for `ρ_{p,l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusBound {
    pub order: u32,
    pub p: PNorm,
    pub upper: RootValue,
    pub lower: f64,
    /// Deepest product length used for the upper bound.
    pub depth: u32,
    /// `‖(S_l)^j‖^{1/j}` for each completed `j`.
    pub per_depth: Vec<(u32, RootValue)>,
    pub method: String,
    /// Set when the budget stopped the computation before the requested depth.
    pub truncated_at: Option<u32>,
}

impl RadiusBound {
    pub fn upper_f64(&self) -> f64 {
        self.upper.to_f64()
    }
}

/// Options for bound computations.
#[derive(Debug, Clone)]
pub struct BoundOptions {
    pub depth: u32,
    pub budget: Duration,
    pub seed: u64,
    /// Random products tried by the lower bound, per length.
    pub samples: usize,
}

impl BoundOptions {
    pub fn new(depth: u32) -> Self {
        Self { depth, budget: budget_from_env(), seed: 0, samples: 64 }
    }
}

// ---------------------------------------------------------------------------
// Upper bounds.

struct IntRow {
    involved: Vec<(Point, usize)>,
    variants: Vec<Vec<(usize, Point, i128)>>,
}

type StateKey = Vec<(Point, usize, i128)>;

/// Exhaustive product-norm enumerator over scaled integer coefficients:
/// every mask coefficient is an integer over the common denominator `denom`.
struct Enumerator<'a> {
    ds: &'a DifferenceScheme,
    rows: Vec<IntRow>,
    denom: i128,
    powers: Vec<DilationMatrix>,
    /// `‖(S_l)^t‖_∞ · denom^t` for computed `t`.
    scaled_bounds: Vec<i128>,
    memo: RwLock<HashMap<(u32, StateKey), i128>>,
    deadline: Instant,
}

fn overflow() -> Error {
    Error::Precondition("coefficient overflow in product enumeration".into())
}

impl<'a> Enumerator<'a> {
    fn new(ds: &'a DifferenceScheme, max_depth: u32, deadline: Instant) -> Result<Self> {
        let mut denom = num_bigint::BigInt::one();
        for row in ds.rows() {
            for v in &row.variants {
                for e in &v.entries {
                    denom = denom.lcm(e.coeff.denom());
                }
            }
        }
        let denom = denom.to_i128().ok_or_else(overflow)?;
        let rows = ds
            .rows()
            .iter()
            .map(|row| {
                let variants = row
                    .variants
                    .iter()
                    .map(|v| {
                        v.entries
                            .iter()
                            .map(|e| {
                                let scaled = &e.coeff * Rational::from_integer(denom.into());
                                Ok((e.component, e.offset.clone(), scaled.to_integer().to_i128().ok_or_else(overflow)?))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(IntRow { involved: row.involved.clone(), variants })
            })
            .collect::<Result<Vec<_>>>()?;
        let powers = (0..=max_depth).map(|t| ds.matrix().power(t)).collect();
        Ok(Self {
            ds,
            rows,
            denom,
            powers,
            scaled_bounds: vec![1],
            memo: RwLock::new(HashMap::new()),
            deadline,
        })
    }

    fn check_time(&self, depth: u32) -> Result<()> {
        if Instant::now() > self.deadline {
            return Err(Error::Budget { depth: depth as usize, feasible: depth.saturating_sub(1) as usize });
        }
        Ok(())
    }

    /// Normalizes a state: translate by `M^t Z^d`, divide by the gcd and fix
    /// the sign. Returns the key and the factor removed.
    fn normalize(&self, t: u32, state: &BTreeMap<(Point, usize), i128>) -> (StateKey, i128) {
        let first = state.keys().next().map(|(p, _)| p.clone()).unwrap_or_default();
        let (q, _) = self.powers[t as usize].div_rem(&first);
        let shift = self.powers[t as usize].apply(&q);
        let g = state.values().fold(0i128, |g, &c| g.gcd(&c)).max(1);
        let sign = if state.values().next().is_some_and(|&c| c < 0) { -1 } else { 1 };
        let key = state.iter().map(|((p, nu), c)| (sub_points(p, &shift), *nu, sign * c / g)).collect();
        (key, g)
    }

    /// Maximum over rule assignments of the final `ℓ^1` mass of a level-`t`
    /// combination, in units of (state scale) · `denom^t`.
    fn best(&self, t: u32, depth: u32, state: &BTreeMap<(Point, usize), i128>) -> Result<i128> {
        if t == 0 {
            return state.values().try_fold(0i128, |a, c| a.checked_add(c.abs()).ok_or_else(overflow));
        }
        if state.is_empty() {
            return Ok(0);
        }
        let (key, g) = self.normalize(t, state);
        if let Some(v) = self.memo.read().expect("memo lock").get(&(t, key.clone())) {
            return v.checked_mul(g).ok_or_else(overflow);
        }
        self.check_time(depth)?;
        let value = self.expand(t, depth, &key)?;
        self.memo.write().expect("memo lock").insert((t, key), value);
        value.checked_mul(g).ok_or_else(overflow)
    }

    fn expand(&self, t: u32, depth: u32, key: &StateKey) -> Result<i128> {
        let q = self.ds.block_size();
        let cosets = self.ds.cosets();
        // rows touched and the fine points they depend on
        let mut fine: Vec<Point> = Vec::new();
        let mut radices: Vec<usize> = Vec::new();
        let mut touched: Vec<(Point, &IntRow, Vec<usize>, i128)> = Vec::with_capacity(key.len());
        for (p, nu, c) in key {
            let (n, i) = cosets.decompose(p);
            let row = &self.rows[i * q + nu];
            let mut slots = Vec::with_capacity(row.involved.len());
            for (dn, fc) in &row.involved {
                let fp = cosets.compose(&add_points(&n, dn), *fc);
                let slot = match fine.iter().position(|x| *x == fp) {
                    Some(s) => s,
                    None => {
                        fine.push(fp);
                        radices.push(self.ds.rule_counts()[*fc]);
                        fine.len() - 1
                    }
                };
                slots.push(slot);
            }
            touched.push((n, row, slots, *c));
        }
        let prev_bound = self.scaled_bounds.get(t as usize - 1).copied();
        let mut best = 0i128;
        let mut assignment = vec![0usize; fine.len()];
        let mut visited = 0u32;
        loop {
            visited = visited.wrapping_add(1);
            if visited % 256 == 0 {
                self.check_time(depth)?;
            }
            let mut child: BTreeMap<(Point, usize), i128> = BTreeMap::new();
            for (n, row, slots, c) in &touched {
                let vi = slots.iter().fold(0usize, |acc, &s| acc * radices[s] + assignment[s]);
                for (nu, off, coef) in &row.variants[vi] {
                    let e = child.entry((add_points(n, off), *nu)).or_insert(0);
                    *e = e.checked_add(c.checked_mul(*coef).ok_or_else(overflow)?).ok_or_else(overflow)?;
                }
            }
            child.retain(|_, c| *c != 0);
            let mass: i128 = child.values().map(|c| c.abs()).sum();
            let bound = prev_bound.map(|b| mass.saturating_mul(b));
            if bound.map_or(true, |b| b > best) {
                best = best.max(self.best(t - 1, depth, &child)?);
            }
            // odometer
            let mut k = 0;
            while k < assignment.len() {
                assignment[k] += 1;
                if assignment[k] < radices[k] {
                    break;
                }
                assignment[k] = 0;
                k += 1;
            }
            if k == assignment.len() {
                break;
            }
        }
        Ok(best)
    }

    /// Representatives `K` of `Z^d / M^j Z^d`.
    fn top_points(&self, j: u32) -> Vec<Point> {
        let cosets = self.ds.cosets();
        let d = self.ds.dim();
        let mut pts = vec![crate::lattice::zero_point(d)];
        for _ in 0..j {
            pts = pts
                .iter()
                .flat_map(|p| (0..cosets.len()).map(move |i| cosets.compose(p, i)))
                .collect();
        }
        pts
    }

    /// `‖(S_l)^j‖_∞ · denom^j`.
    fn depth_bound(&self, j: u32) -> Result<i128> {
        let q = self.ds.block_size();
        let tops: Vec<(Point, usize)> =
            self.top_points(j).into_iter().flat_map(|k| (0..q).map(move |nu| (k.clone(), nu))).collect();
        let values: Vec<Result<i128>> = tops
            .par_iter()
            .map(|(k, nu)| {
                let state = BTreeMap::from([((k.clone(), *nu), 1i128)]);
                self.best(j, j, &state)
            })
            .collect();
        values.into_iter().try_fold(0i128, |a, v| Ok(a.max(v?)))
    }

    /// Column bound for `p = 1`: `max_ν Σ_{rows, r} max_assign |coef|`,
    /// scaled by `denom^j`.
    fn column_bound(&self, j: u32) -> Result<i128> {
        let q = self.ds.block_size();
        let mut per_component = vec![0i128; q];
        for k in self.top_points(j) {
            for nu in 0..q {
                let mut maxes: BTreeMap<(Point, usize), i128> = BTreeMap::new();
                let state = BTreeMap::from([((k.clone(), nu), 1i128)]);
                self.leaves(j, j, &state, &mut maxes)?;
                for ((_, comp), v) in maxes {
                    per_component[comp] = per_component[comp].checked_add(v).ok_or_else(overflow)?;
                }
            }
        }
        Ok(per_component.into_iter().max().unwrap_or(0))
    }

    fn leaves(
        &self,
        t: u32,
        depth: u32,
        state: &BTreeMap<(Point, usize), i128>,
        maxes: &mut BTreeMap<(Point, usize), i128>,
    ) -> Result<()> {
        if t == 0 {
            for (k, c) in state {
                let e = maxes.entry(k.clone()).or_insert(0);
                *e = (*e).max(c.abs());
            }
            return Ok(());
        }
        self.check_time(depth)?;
        let q = self.ds.block_size();
        let cosets = self.ds.cosets();
        let mut fine: Vec<Point> = Vec::new();
        let mut radices = Vec::new();
        let mut touched = Vec::new();
        for ((p, nu), c) in state {
            let (n, i) = cosets.decompose(p);
            let row = &self.rows[i * q + nu];
            let slots: Vec<usize> = row
                .involved
                .iter()
                .map(|(dn, fc)| {
                    let fp = cosets.compose(&add_points(&n, dn), *fc);
                    fine.iter().position(|x| *x == fp).unwrap_or_else(|| {
                        fine.push(fp);
                        radices.push(self.ds.rule_counts()[*fc]);
                        fine.len() - 1
                    })
                })
                .collect();
            touched.push((n, row, slots, *c));
        }
        for assignment in choice_tuples(&radices) {
            let mut child: BTreeMap<(Point, usize), i128> = BTreeMap::new();
            for (n, row, slots, c) in &touched {
                let vi = slots.iter().fold(0usize, |acc, &s| acc * radices[s] + assignment[s]);
                for (nu, off, coef) in &row.variants[vi] {
                    *child.entry((add_points(n, off), *nu)).or_insert(0) += c * coef;
                }
            }
            child.retain(|_, c| *c != 0);
            self.leaves(t - 1, depth, &child, maxes)?;
        }
        Ok(())
    }
}

fn scaled_to_root(scaled: i128, denom: i128, j: u32) -> RootValue {
    let base = Rational::new(scaled.into(), num_traits::pow(num_bigint::BigInt::from(denom), j as usize));
    RootValue { base, root: j }.simplified()
}

/// Certified upper bound on `ρ_{p,l}` from norms of products up to
/// `opts.depth`.
///
/// If the budget runs out before the first depth completes, a budget error
/// is returned; if it runs out later, the bound from the completed depths is
/// returned with `truncated_at` set.
pub fn jsr_upper(ds: &DifferenceScheme, p: PNorm, opts: &BoundOptions) -> Result<RadiusBound> {
    if opts.depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    match p {
        PNorm::Two => {
            let one = jsr_upper(ds, PNorm::One, opts)?;
            let inf = jsr_upper(ds, PNorm::Inf, opts)?;
            let per_depth = one
                .per_depth
                .iter()
                .zip(&inf.per_depth)
                .map(|((j, a), (_, b))| (*j, RootValue::geometric_mean(a, b)))
                .collect();
            return Ok(RadiusBound {
                order: ds.order(),
                p,
                upper: RootValue::geometric_mean(&one.upper, &inf.upper),
                lower: inf.lower.max(one.lower),
                depth: one.depth.min(inf.depth),
                per_depth,
                method: "interpolation sqrt(upper_1 * upper_inf)".into(),
                truncated_at: one.truncated_at.or(inf.truncated_at),
            });
        }
        PNorm::One | PNorm::Inf => {}
    }
    let deadline = Instant::now() + opts.budget;
    let mut en = Enumerator::new(ds, opts.depth, deadline)?;
    let mut per_depth: Vec<(u32, RootValue)> = Vec::new();
    let mut truncated_at = None;
    for j in 1..=opts.depth {
        let scaled = match p {
            PNorm::Inf => en.depth_bound(j),
            _ => en.column_bound(j),
        };
        match scaled {
            Ok(s) => {
                en.scaled_bounds.push(s);
                per_depth.push((j, scaled_to_root(s, en.denom, j)));
            }
            Err(e @ Error::Budget { .. }) => {
                if per_depth.is_empty() {
                    return Err(e);
                }
                truncated_at = Some(j);
                break;
            }
            Err(Error::Precondition(msg)) if msg.contains("overflow") && !per_depth.is_empty() => {
                truncated_at = Some(j);
                break;
            }
            Err(e) => return Err(e),
        }
        if p == PNorm::One {
            // column bounds ignore cancellation between rows, so they only
            // serve as pruning bounds for the row-sum enumerator
            continue;
        }
    }
    let upper = per_depth
        .iter()
        .map(|(_, r)| r.clone())
        .reduce(|a, b| if b.lt(&a) { b } else { a })
        .expect("at least one completed depth");
    let depth = per_depth.last().map_or(0, |(j, _)| *j);
    let method = match p {
        PNorm::Inf => "max row mass over consistent rule assignments, min_j ‖(S_l)^j‖^(1/j)",
        _ => "column mass with per-entry worst case, min_j ‖(S_l)^j‖^(1/j)",
    };
    Ok(RadiusBound {
        order: ds.order(),
        p,
        upper,
        lower: 0.0,
        depth,
        per_depth,
        method: method.into(),
        truncated_at,
    })
}

// ---------------------------------------------------------------------------
// Lower bounds.

/// Smallest window `Ω ⊇ {0,1}^d` such that the values of the fine data on
/// `M K + ε + Ω` depend only on coarse data on `K + Ω`, for every coset.
pub fn invariant_window(scheme: &SchemeSpec) -> Result<Vec<Point>> {
    const MAX_WINDOW: usize = 4096;
    let d = scheme.dim();
    let cosets = scheme.cosets();
    let mut window: BTreeSet<Point> = box_points(&vec![0; d], &vec![1; d]).into_iter().collect();
    loop {
        let mut grown = window.clone();
        for i in 0..cosets.len() {
            for w in &window {
                let (n, c) = cosets.decompose(&add_points(cosets.get(i), w));
                for rule in scheme.rules(c) {
                    for o in rule.offsets() {
                        grown.insert(add_points(&n, o));
                    }
                }
            }
        }
        if grown.len() > MAX_WINDOW {
            return Err(Error::Precondition("invariant window does not close".into()));
        }
        if grown == window {
            return Ok(window.into_iter().collect());
        }
        window = grown;
    }
}

/// Transition matrices on the invariant window, one per coset, with a rule
/// choice per window row.
struct WindowModel {
    window: Vec<Point>,
    /// `(coset, row) -> (fine coset, coarse anchor)` for each window row.
    rows: Vec<Vec<(usize, Point)>>,
    /// Basis of the complement of `P_{l-1}` and the inverse change of basis.
    change: DMatrix<f64>,
    change_inv: DMatrix<f64>,
    poly_dim: usize,
}

impl WindowModel {
    fn new(scheme: &SchemeSpec, l: u32) -> Result<Self> {
        let window = invariant_window(scheme)?;
        let cosets = scheme.cosets();
        let rows = (0..cosets.len())
            .map(|i| {
                window
                    .iter()
                    .map(|w| {
                        let (n, c) = cosets.decompose(&add_points(cosets.get(i), w));
                        (c, n)
                    })
                    .collect()
            })
            .collect();
        let n = window.len();
        let polys = if l == 0 { Vec::new() } else { multi_indices_up_to(scheme.dim(), l - 1) };
        let mut cols: Vec<Vec<f64>> = polys
            .iter()
            .map(|beta| {
                window.iter().map(|w| w.iter().zip(beta).map(|(x, &b)| (*x as f64).powi(b as i32)).product()).collect()
            })
            .collect();
        let poly_dim = cols.len();
        // complete with unit vectors, keeping those that raise the rank
        let mut rank = if cols.is_empty() { 0 } else { DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r]).rank(1e-9) };
        for k in 0..n {
            if cols.len() == n {
                break;
            }
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            cols.push(e);
            let r = DMatrix::from_fn(n, cols.len(), |rr, c| cols[c][rr]).rank(1e-9);
            if r > rank {
                rank = r;
            } else {
                cols.pop();
            }
        }
        let change = DMatrix::from_fn(n, n, |r, c| cols[c][r]);
        let change_inv =
            change.clone().try_inverse().ok_or_else(|| Error::Precondition("singular window basis".into()))?;
        Ok(Self { window, rows, change, change_inv, poly_dim })
    }

    fn matrix(&self, scheme: &SchemeSpec, coset: usize, choices: &[usize]) -> DMatrix<f64> {
        let n = self.window.len();
        let index: HashMap<&Point, usize> = self.window.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mut a = DMatrix::zeros(n, n);
        for (row, (c, anchor)) in self.rows[coset].iter().enumerate() {
            let family = scheme.rules(*c);
            let rule = &family[choices[row].min(family.len() - 1)];
            for (o, w) in rule.offsets().iter().zip(rule.weights()) {
                a[(row, index[&add_points(anchor, o)])] += to_f64(w);
            }
        }
        a
    }

    /// Rule choices the scheme's selector makes when refining `data` (window
    /// values) along `word`; falls back to the first rule for selectors that
    /// cannot refine.
    fn selected_choices(&self, scheme: &SchemeSpec, word: &[usize], data: &[f64]) -> Vec<Vec<usize>> {
        let mut current = data.to_vec();
        let mut out = Vec::with_capacity(word.len());
        for &coset in word {
            let seq = crate::gridseq::LatticeSequence::from_entries(
                scheme.dim(),
                self.window.iter().cloned().zip(current.iter().copied()),
            )
            .expect("window points share the dimension");
            let choices: Vec<usize> =
                self.rows[coset].iter().map(|(c, anchor)| scheme.select(&seq, anchor, *c).unwrap_or(0)).collect();
            let a = self.matrix(scheme, coset, &choices);
            current = (a * nalgebra::DVector::from_vec(current)).iter().copied().collect();
            out.push(choices);
        }
        out
    }

    /// Spectral radius of the product on the quotient by `P_{l-1}`.
    fn quotient_radius(&self, product: &DMatrix<f64>) -> f64 {
        let b = &self.change_inv * product * &self.change;
        let n = b.nrows();
        let k = self.poly_dim;
        if k == n {
            return 0.0;
        }
        let block = b.view((k, k), (n - k, n - k)).into_owned();
        spectral_radius(block).unwrap_or(0.0)
    }
}

/// Spectral radius from a real Schur form; `None` if the iteration does
/// not converge.
pub fn spectral_radius(a: DMatrix<f64>) -> Option<f64> {
    let schur = nalgebra::linalg::Schur::try_new(a, 1e-14, 10_000)?;
    Some(schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Lower bound on `ρ_{p,l}` (independent of `p`): the largest
/// `ρ(A_{ε_1} ... A_{ε_j})^{1/j}` over products of window transition
/// matrices, restricted to the quotient by polynomials of degree `< l`.
/// Short products are enumerated over all coset words with uniform rule
/// choices; random words and choices (seeded) cover the rest.
pub fn jsr_lower(scheme: &SchemeSpec, l: u32, opts: &BoundOptions) -> Result<f64> {
    let model = WindowModel::new(scheme, l)?;
    let m = scheme.cosets().len();
    let rows = model.window.len();
    let max_rules = scheme.all_rules().iter().map(|f| f.len()).max().unwrap_or(1);
    let deadline = Instant::now() + opts.budget;
    let mut best = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for j in 1..=opts.depth.max(1) {
        let words = (m as u64).checked_pow(j).unwrap_or(u64::MAX);
        let mut trials: Vec<(Vec<usize>, Vec<Vec<usize>>)> = Vec::new();
        if words <= 64 {
            let all: Vec<Vec<usize>> = choice_tuples(&vec![m; j as usize]);
            for word in all {
                for r in 0..max_rules {
                    trials.push((word.clone(), vec![vec![r; rows]; j as usize]));
                }
            }
        }
        // choices the selector makes along trajectories of unit and random data
        if !scheme.is_linear() {
            let starts: Vec<Vec<f64>> = (0..rows)
                .map(|r| (0..rows).map(|c| if c == r { 1.0 } else { 0.0 }).collect())
                .chain((0..opts.samples.min(16)).map(|_| (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect()))
                .collect();
            let words: Vec<Vec<usize>> = if words <= 64 {
                choice_tuples(&vec![m; j as usize])
            } else {
                (0..8).map(|_| (0..j).map(|_| rng.gen_range(0..m)).collect()).collect()
            };
            for word in &words {
                for start in &starts {
                    trials.push((word.clone(), model.selected_choices(scheme, word, start)));
                }
            }
        }
        for _ in 0..opts.samples {
            let word: Vec<usize> = (0..j).map(|_| rng.gen_range(0..m)).collect();
            let choices = (0..j).map(|_| (0..rows).map(|_| rng.gen_range(0..max_rules)).collect()).collect();
            trials.push((word, choices));
        }
        for (word, choices) in trials {
            if Instant::now() > deadline {
                return Ok(best);
            }
            let mut prod = DMatrix::<f64>::identity(rows, rows);
            for (coset, ch) in word.iter().zip(&choices) {
                prod = model.matrix(scheme, *coset, ch) * prod;
            }
            let r = model.quotient_radius(&prod).powf(1.0 / f64::from(j));
            best = best.max(r);
        }
    }
    Ok(best)
}

/// Upper and lower bound together; the lower bound is clamped to the upper.
pub fn radius_bound(scheme: &SchemeSpec, ds: &DifferenceScheme, p: PNorm, opts: &BoundOptions) -> Result<RadiusBound> {
    let mut b = jsr_upper(ds, p, opts)?;
    let lower = jsr_lower(scheme, ds.order(), opts)?;
    b.lower = lower.min(b.upper_f64());
    Ok(b)
}

// ---------------------------------------------------------------------------
// Certificates.

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpVerdict {
    pub p: String,
    pub convergent: bool,
    /// `m^{1/p} - upper`.
    pub margin: f64,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderCertificate {
    /// Certified exponent, capped below 1.
    pub s: f64,
    pub truncated: bool,
    pub bound: String,
    pub depth: u32,
    /// Exponent implied by each single depth `j`.
    pub per_depth: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevEntry {
    pub n: u32,
    pub p: String,
    pub certified: bool,
    /// `d (1/p - log_m upper)`.
    pub s_star: f64,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub scheme: String,
    pub m: usize,
    pub d: usize,
    pub reproduction_degree: i64,
    pub bounds: Vec<RadiusBound>,
    pub lp_convergent: Option<LpVerdict>,
    pub holder: Option<HolderCertificate>,
    pub sobolev: Vec<SobolevEntry>,
    pub notes: Vec<String>,
}

/// `-log(x) / log(m)`.
fn neg_log_m(x: f64, m: usize) -> f64 {
    -x.ln() / (m as f64).ln()
}

/// Assembles bounds and certificates for orders `1..=min(n_max+1, deg+1)`.
pub fn certify(scheme: &SchemeSpec, p: PNorm, n_max: u32, opts: &BoundOptions) -> Result<RegularityReport> {
    let m = scheme.matrix().m();
    let d = scheme.dim();
    let deg = reproduction_degree(scheme, n_max + 1, false).degree;
    let mut notes = Vec::new();
    if deg < 0 {
        notes.push("constants are not reproduced; no certificate applies".into());
        return Ok(RegularityReport {
            scheme: scheme.name().into(),
            m,
            d,
            reproduction_degree: deg,
            bounds: Vec::new(),
            lp_convergent: None,
            holder: None,
            sobolev: Vec::new(),
            notes,
        });
    }
    let max_order = (n_max + 1).min(deg as u32 + 1).max(1);
    let mut bounds = Vec::new();
    let mut inf_first: Option<RadiusBound> = None;
    for l in 1..=max_order {
        let ds = derive(scheme, l)?;
        let b = radius_bound(scheme, &ds, p, opts)?;
        if let Some(t) = b.truncated_at {
            notes.push(format!("order {l}, p = {p}: budget reached at depth {t}; bound uses depth {}", b.depth));
        }
        if l == 1 {
            inf_first = Some(if p == PNorm::Inf { b.clone() } else { radius_bound(scheme, &ds, PNorm::Inf, opts)? });
        }
        bounds.push(b);
    }

    let first = &bounds[0];
    let lp_convergent = {
        let (num, den) = match p {
            PNorm::One => (1, 1),
            PNorm::Two => (1, 2),
            PNorm::Inf => (0, 1),
        };
        let convergent = first.upper.lt_power(m as u64, num, den);
        let margin = (m as f64).powf(p.reciprocal()) - first.upper_f64();
        Some(LpVerdict {
            p: p.to_string(),
            convergent,
            margin,
            bound: format!("ρ_{{{p},1}} <= {} (depth {})", first.upper, first.depth),
        })
    };

    let holder = inf_first.as_ref().and_then(|b| {
        if !b.upper.lt_power(m as u64, 0, 1) {
            return None;
        }
        let raw = neg_log_m(b.upper_f64(), m);
        let truncated = raw >= 1.0;
        Some(HolderCertificate {
            s: if truncated { 1.0 - f64::EPSILON } else { raw },
            truncated,
            bound: format!("ρ_{{inf,1}} <= {} (depth {})", b.upper, b.depth),
            depth: b.depth,
            per_depth: b.per_depth.iter().map(|(j, r)| (*j, neg_log_m(r.to_f64(), m).min(1.0))).collect(),
        })
    });
    if holder.as_ref().is_some_and(|h| h.truncated) {
        notes.push("Hölder exponent reaches 1; use the Sobolev certificates for higher smoothness".into());
    }

    let iso = classify_isotropy(scheme.matrix(), DEFAULT_Q_MAX);
    let mut sobolev = Vec::new();
    if !iso.is_isotropic() {
        notes.push("Sobolev certificates: not applicable (anisotropic dilation)".into());
    } else {
        for n in 1..=n_max.min(max_order) {
            let b = &bounds[(n - 1) as usize];
            // upper < m^(1/p - n/d)  <=>  s* > n
            let (num, den) = match p {
                PNorm::One => (d as i64 - n as i64, d as i64),
                PNorm::Two => (d as i64 - 2 * n as i64, 2 * d as i64),
                PNorm::Inf => (-(n as i64), d as i64),
            };
            let certified = b.upper.lt_power(m as u64, num, den);
            let s_star = d as f64 * (p.reciprocal() - b.upper_f64().ln() / (m as f64).ln());
            sobolev.push(SobolevEntry {
                n,
                p: p.to_string(),
                certified,
                s_star,
                bound: format!("ρ_{{{p},{n}}} <= {} (depth {})", b.upper, b.depth),
            });
        }
    }
    Ok(RegularityReport {
        scheme: scheme.name().into(),
        m,
        d,
        reproduction_degree: deg,
        bounds,
        lp_convergent,
        holder,
        sobolev,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusInequality {
    pub n: u32,
    pub lower_n: f64,
    pub upper_next: f64,
    pub matrix_norm: i64,
    pub consistent: bool,
}

/// Checks `ρ_{p,n+1} >= ρ_{p,n} / ‖M‖_∞` against the certified brackets; only
/// `upper(n+1) < lower(n)/‖M‖_∞ - 1e-12` counts as a violation.
pub fn radius_inequality_check(scheme: &SchemeSpec, p: PNorm, n: u32, opts: &BoundOptions) -> Result<RadiusInequality> {
    let lower_n = jsr_lower(scheme, n, opts)?;
    let next = derive(scheme, n + 1)?;
    let upper_next = jsr_upper(&next, p, opts)?.upper_f64();
    let norm = scheme.matrix().inf_norm();
    let upper_n = jsr_upper(&derive(scheme, n)?, p, opts)?.upper_f64();
    let lower_n = lower_n.min(upper_n);
    let consistent = upper_next >= lower_n / norm as f64 - 1e-12;
    Ok(RadiusInequality { n, lower_n, upper_next, matrix_norm: norm, consistent })
}

// ---------------------------------------------------------------------------
// Two-level deviation constants.

/// Best constant `C` in `|v^j_{Mk+ε} - v^j_{Mk}| <= C ‖Δ^1 v^{ref}‖_∞` for one
/// coset, rule and class of `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoLevelConstant {
    /// Fine coset `ε` of the deviation.
    pub coset: Vec<i64>,
    pub rule: usize,
    /// Coset of `k` in the level `j-1` lattice.
    pub class: Vec<i64>,
    /// Against `‖Δ^1 v^{j-1}‖_∞`.
    pub vs_previous: String,
    /// Against `‖Δ^1 v^{j-2}‖_∞`, worst case over level `j-1` rule choices.
    pub vs_two_back: String,
    #[serde(skip)]
    pub vs_previous_exact: Rational,
    #[serde(skip)]
    pub vs_two_back_exact: Rational,
}

/// Exact `sup |g(w)| / ‖Δ^1 w‖_∞` for a functional annihilating constants:
/// the minimum `ℓ^1` mass of a first-difference decomposition over the
/// bounding box of its support.
pub fn first_difference_constant(g: &BTreeMap<Point, Rational>, d: usize) -> Result<Rational> {
    let g: Vec<(Point, Rational)> = g.iter().filter(|(_, v)| !v.is_zero()).map(|(k, v)| (k.clone(), v.clone())).collect();
    if g.is_empty() {
        return Ok(Rational::zero());
    }
    let mut lo = g[0].0.clone();
    let mut hi = g[0].0.clone();
    for (p, _) in &g {
        for j in 0..d {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    let points = box_points(&lo, &hi);
    let index: HashMap<&Point, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut cols: Vec<(usize, usize)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for j in 0..d {
            let mut q = p.clone();
            q[j] += 1;
            if let Some(&k) = index.get(&q) {
                cols.push((i, k));
            }
        }
    }
    let mut a = vec![vec![Rational::zero(); cols.len()]; points.len()];
    for (c, (from, to)) in cols.iter().enumerate() {
        a[*from][c] = rat_int(-1);
        a[*to][c] = rat_int(1);
    }
    let mut b = vec![Rational::zero(); points.len()];
    for (p, v) in &g {
        b[index[p]] = v.clone();
    }
    min_l1_solution(&a, &b)?
        .map(|s| s.objective)
        .ok_or_else(|| Error::Decomposition("functional does not annihilate constants".into()))
}

/// Best constants for the deviations `v^j_{Mk+ε_i} - v^j_{Mk}` under each
/// rule, split by the coset class of `k`, against first differences one and
/// two levels back. Exact enumeration of level `j-1` rule choices.
pub fn two_level_constants(scheme: &SchemeSpec) -> Result<Vec<TwoLevelConstant>> {
    let d = scheme.dim();
    let cosets = scheme.cosets();
    let mut out = Vec::new();
    for i in 1..cosets.len() {
        for (r, rule) in scheme.rules(i).iter().enumerate() {
            for class in 0..cosets.len() {
                // k = M k' + ε_class with k' = 0; g acts on level j-1 values near k
                let k = cosets.get(class).clone();
                let mut g: BTreeMap<Point, Rational> = BTreeMap::new();
                for (o, w) in rule.offsets().iter().zip(rule.weights()) {
                    *g.entry(add_points(&k, o)).or_insert_with(Rational::zero) += w;
                }
                *g.entry(k.clone()).or_insert_with(Rational::zero) -= Rational::one();
                let vs_previous = first_difference_constant(&g, d)?;

                // express level j-1 values through level j-2 values
                let support: Vec<(Point, Rational)> = g.iter().map(|(p, v)| (p.clone(), v.clone())).collect();
                let parts: Vec<(Point, usize, Rational)> = support
                    .iter()
                    .map(|(p, v)| {
                        let (n, c) = cosets.decompose(p);
                        (n, c, v.clone())
                    })
                    .collect();
                let slots: Vec<usize> = (0..parts.len()).filter(|&s| scheme.rules(parts[s].1).len() > 1).collect();
                let radices: Vec<usize> = slots.iter().map(|&s| scheme.rules(parts[s].1).len()).collect();
                let mut worst = Rational::zero();
                for choice in choice_tuples(&radices) {
                    let mut h: BTreeMap<Point, Rational> = BTreeMap::new();
                    for (s, (n, c, v)) in parts.iter().enumerate() {
                        let pick = slots.iter().position(|&x| x == s).map_or(0, |pos| choice[pos]);
                        let sub = &scheme.rules(*c)[pick];
                        for (o, w) in sub.offsets().iter().zip(sub.weights()) {
                            *h.entry(add_points(n, o)).or_insert_with(Rational::zero) += v * w;
                        }
                    }
                    let c = first_difference_constant(&h, d)?;
                    if c > worst {
                        worst = c;
                    }
                }
                out.push(TwoLevelConstant {
                    coset: cosets.get(i).to_vec(),
                    rule: r,
                    class: cosets.get(class).to_vec(),
                    vs_previous: format_rational(&vs_previous),
                    vs_two_back: format_rational(&worst),
                    vs_previous_exact: vs_previous,
                    vs_two_back_exact: worst,
                });
            }
        }
    }
    Ok(out)
}
