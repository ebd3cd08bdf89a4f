//! Schemes for the differences: the operator `S_l` with
//! `Δ^l S(v) w = S_l(v) Δ^l w`.
//!
//! For every coset `i`, output multi-index `μ` and choice of rules at the
//! fine points the row touches, the functional `w ↦ (∇^μ S w)_{Mn+ε_i}`
//! annihilates polynomials of degree `< l` and so decomposes over order-`l`
//! differences of `w`. The decomposition is not unique; we take the
//! minimum-`ℓ^1` one, found by an exact simplex over the bounding box of the
//! functional's support.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::gridseq::{box_points, multi_indices, DifferenceBlock, DirectionSet, LatticeSequence, MultiIndex};
use crate::lattice::{add_points, sub_points, zero_point, CosetSet, DilationMatrix, Point};
use crate::lp::min_l1_solution;
use crate::scalar::{rat_int, Rational, Scalar};
use crate::scheme::{choice_tuples, reproduction_degree, SchemeSpec};

/// How far the decomposition box is grown past the functional's support
/// before giving up.
const MAX_BOX_MARGIN: i64 = 2;

/// One coefficient of a row: `coeff · (∇^{ν} w)_{n + offset}`, `ν` given by
/// its index in the block's multi-index list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskEntry {
    pub component: usize,
    pub offset: Point,
    pub coeff: Rational,
}

/// A row for one assignment of rules at the involved fine points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowVariant {
    pub choices: Vec<usize>,
    pub entries: Vec<MaskEntry>,
    /// `Σ |coeff|`.
    pub mass: Rational,
}

/// The row computing output component `output` at fine points `M n + ε_coset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceRow {
    pub coset: usize,
    pub output: usize,
    /// Fine points `M (n + dn) + ε_c` whose rule choice the row depends on.
    pub involved: Vec<(Point, usize)>,
    /// Indexed by the mixed-radix encoding of `choices`.
    pub variants: Vec<RowVariant>,
}

/// Log entry for one solved decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRecord {
    pub coset: usize,
    pub output: MultiIndex,
    pub choices: Vec<usize>,
    pub unknowns: usize,
    pub equations: usize,
    /// `max |f - Σ_ν (∇^ν)^T c^ν|`, always zero for accepted systems.
    pub residual: Rational,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DerivationRecord {
    pub systems: Vec<SystemRecord>,
}

impl DerivationRecord {
    pub fn all_exact(&self) -> bool {
        self.systems.iter().all(|s| s.residual.is_zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceScheme {
    order: u32,
    dirs: DirectionSet,
    indices: Vec<MultiIndex>,
    cosets: CosetSet,
    rule_counts: Vec<usize>,
    rows: Vec<DifferenceRow>,
    record: DerivationRecord,
}

/// `∇_{x_1}^{μ_1} ... ∇_{x_n}^{μ_n}` as `Σ_β coef_β E^β`.
pub fn difference_stencil(dirs: &[Point], mu: &[u32]) -> Vec<(Point, i64)> {
    let d = dirs.first().map_or(0, |x| x.len());
    let mut acc: BTreeMap<Point, i64> = BTreeMap::from([(zero_point(d), 1)]);
    for (x, &times) in dirs.iter().zip(mu) {
        for _ in 0..times {
            let mut next: BTreeMap<Point, i64> = BTreeMap::new();
            for (p, c) in &acc {
                *next.entry(add_points(p, x)).or_default() += c;
                *next.entry(p.clone()).or_default() -= c;
            }
            next.retain(|_, c| *c != 0);
            acc = next;
        }
    }
    acc.into_iter().collect()
}

/// Derives `S_l` in the canonical directions.
pub fn derive(scheme: &SchemeSpec, l: u32) -> Result<DifferenceScheme> {
    derive_directional(scheme, &DirectionSet::canonical(scheme.dim()), l)
}

/// Derives `S̃_l` for differences along an arbitrary spanning direction set.
pub fn derive_directional(scheme: &SchemeSpec, dirs: &DirectionSet, l: u32) -> Result<DifferenceScheme> {
    dirs.require_spanning()?;
    if dirs.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch { expected: scheme.dim(), got: dirs.dim() });
    }
    if l > 0 {
        let cert = reproduction_degree(scheme, l - 1, false);
        if cert.degree < i64::from(l) - 1 {
            return Err(Error::NoDifferenceScheme { order: l as usize, degree: cert.degree });
        }
    }
    let indices = multi_indices(dirs.len(), l);
    let stencils: Vec<Vec<(Point, i64)>> = indices.iter().map(|nu| difference_stencil(&dirs.vectors, nu)).collect();
    let cosets = scheme.cosets().clone();
    let rule_counts: Vec<usize> = (0..cosets.len()).map(|i| scheme.rules(i).len()).collect();
    let mut cache: HashMap<Vec<(Point, Rational)>, (Vec<MaskEntry>, usize, usize)> = HashMap::new();
    let mut rows = Vec::new();
    let mut record = DerivationRecord::default();

    for i in 0..cosets.len() {
        for (out, mu) in indices.iter().enumerate() {
            let touched: Vec<(Point, usize, i64)> = stencils[out]
                .iter()
                .map(|(beta, c)| {
                    let (dn, fc) = cosets.decompose(&add_points(cosets.get(i), beta));
                    (dn, fc, *c)
                })
                .collect();
            let involved: Vec<(Point, usize)> = touched
                .iter()
                .filter(|(_, fc, _)| rule_counts[*fc] > 1)
                .map(|(dn, fc, _)| (dn.clone(), *fc))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let radices: Vec<usize> = involved.iter().map(|(_, c)| rule_counts[*c]).collect();
            let mut variants = Vec::new();
            for choices in choice_tuples(&radices) {
                let mut f: BTreeMap<Point, Rational> = BTreeMap::new();
                for (dn, fc, c) in &touched {
                    let r = involved.iter().position(|(p, q)| p == dn && q == fc).map_or(0, |pos| choices[pos]);
                    let rule = &scheme.rules(*fc)[r];
                    for (o, w) in rule.offsets().iter().zip(rule.weights()) {
                        *f.entry(add_points(dn, o)).or_insert_with(Rational::zero) += w * rat_int(*c);
                    }
                }
                f.retain(|_, v| !v.is_zero());
                let key: Vec<(Point, Rational)> = f.into_iter().collect();
                let (entries, unknowns, equations) = match cache.get(&key) {
                    Some(hit) => hit.clone(),
                    None => {
                        let solved = decompose(&key, &stencils, scheme.dim())?;
                        cache.insert(key.clone(), solved.clone());
                        solved
                    }
                };
                let residual = residual(&key, &entries, &stencils);
                if !residual.is_zero() {
                    return Err(Error::Decomposition(format!("nonzero residual {residual} at coset {i}, μ = {mu:?}")));
                }
                record.systems.push(SystemRecord {
                    coset: i,
                    output: mu.clone(),
                    choices: choices.clone(),
                    unknowns,
                    equations,
                    residual,
                });
                let mass = entries.iter().map(|e| e.coeff.abs()).sum();
                variants.push(RowVariant { choices, entries, mass });
            }
            rows.push(DifferenceRow { coset: i, output: out, involved, variants });
        }
    }
    Ok(DifferenceScheme { order: l, dirs: dirs.clone(), indices, cosets, rule_counts, rows, record })
}

/// Minimum-`ℓ^1` `c` with `f = Σ_ν Σ_r c^ν_r (∇^ν)^T δ_r`, unknowns restricted
/// to a box around `supp f`. Returns `(entries, unknowns, equations)`.
fn decompose(
    f: &[(Point, Rational)],
    stencils: &[Vec<(Point, i64)>],
    d: usize,
) -> Result<(Vec<MaskEntry>, usize, usize)> {
    if f.is_empty() {
        return Ok((Vec::new(), 0, 0));
    }
    let mut lo = f[0].0.clone();
    let mut hi = f[0].0.clone();
    for (p, _) in f {
        for j in 0..d {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    for margin in 0..=MAX_BOX_MARGIN {
        let blo: Point = lo.iter().map(|x| x - margin).collect();
        let bhi: Point = hi.iter().map(|x| x + margin).collect();
        let points = box_points(&blo, &bhi);
        let index: HashMap<&Point, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mut unknowns: Vec<(usize, Point)> = Vec::new();
        let mut columns: Vec<Vec<(usize, i64)>> = Vec::new();
        for (nu, st) in stencils.iter().enumerate() {
            // anchors r with r + g inside the box for every g in the stencil
            let min_reach: Point = (0..d).map(|j| st.iter().map(|(g, _)| g[j]).min().unwrap_or(0)).collect();
            let max_reach: Point = (0..d).map(|j| st.iter().map(|(g, _)| g[j]).max().unwrap_or(0)).collect();
            for r in box_points(&sub_points(&blo, &min_reach), &sub_points(&bhi, &max_reach)) {
                let rows = st.iter().map(|(g, c)| (index[&add_points(&r, g)], *c)).collect();
                unknowns.push((nu, r));
                columns.push(rows);
            }
        }
        let mut a = vec![vec![Rational::zero(); unknowns.len()]; points.len()];
        for (col, rows) in columns.iter().enumerate() {
            for &(row, c) in rows {
                a[row][col] += rat_int(c);
            }
        }
        let mut b = vec![Rational::zero(); points.len()];
        for (p, v) in f {
            b[index[p]] = v.clone();
        }
        if let Some(sol) = min_l1_solution(&a, &b)? {
            let entries = unknowns
                .iter()
                .zip(sol.x)
                .filter(|(_, c)| !c.is_zero())
                .map(|((nu, r), coeff)| MaskEntry { component: *nu, offset: r.clone(), coeff })
                .collect();
            return Ok((entries, unknowns.len(), points.len()));
        }
    }
    Err(Error::Decomposition("functional is not a combination of differences of the requested order".into()))
}

fn residual(f: &[(Point, Rational)], entries: &[MaskEntry], stencils: &[Vec<(Point, i64)>]) -> Rational {
    let mut acc: BTreeMap<Point, Rational> = f.iter().cloned().collect();
    for e in entries {
        for (g, c) in &stencils[e.component] {
            *acc.entry(add_points(&e.offset, g)).or_insert_with(Rational::zero) -= &e.coeff * rat_int(*c);
        }
    }
    acc.values().map(|v| v.abs()).max().unwrap_or_else(Rational::zero)
}

impl DifferenceScheme {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.dirs
    }

    /// Multi-indices of the block components, in row/column order.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Block size `q_l`.
    pub fn block_size(&self) -> usize {
        self.indices.len()
    }

    pub fn cosets(&self) -> &CosetSet {
        &self.cosets
    }

    pub fn matrix(&self) -> &DilationMatrix {
        self.cosets.parent()
    }

    pub fn dim(&self) -> usize {
        self.matrix().dim()
    }

    pub fn rule_counts(&self) -> &[usize] {
        &self.rule_counts
    }

    pub fn rows(&self) -> &[DifferenceRow] {
        &self.rows
    }

    /// Row for coset `i` and output component `out`.
    pub fn row(&self, i: usize, out: usize) -> &DifferenceRow {
        &self.rows[i * self.indices.len() + out]
    }

    pub fn record(&self) -> &DerivationRecord {
        &self.record
    }

    /// `true` when no row depends on a rule choice.
    pub fn is_linear(&self) -> bool {
        self.rows.iter().all(|r| r.variants.len() == 1)
    }

    /// Block max-row-sum norm: max over cosets, outputs and rule choices of
    /// the row's `ℓ^1` mass.
    pub fn operator_inf_norm(&self) -> Rational {
        self.rows.iter().flat_map(|r| r.variants.iter()).map(|v| v.mass.clone()).max().unwrap_or_else(Rational::zero)
    }

    /// Variant index for a choice tuple.
    pub fn variant_index(&self, row: &DifferenceRow, choices: &[usize]) -> usize {
        row.involved.iter().zip(choices).fold(0, |acc, ((_, c), &r)| acc * self.rule_counts[*c] + r)
    }

    /// `S_l` applied to a block with explicit rule choices per fine point
    /// `M n + ε_c`.
    pub fn apply_with<T: Scalar>(
        &self,
        block: &DifferenceBlock<T>,
        mut choose: impl FnMut(&[i64], usize) -> usize,
    ) -> Result<DifferenceBlock<T>> {
        if block.len() != self.indices.len() {
            return Err(Error::DimensionMismatch { expected: self.indices.len(), got: block.len() });
        }
        let d = self.dim();
        let mut outputs: Vec<LatticeSequence<T>> = vec![LatticeSequence::zeros(d); self.indices.len()];
        for row in &self.rows {
            let reach: BTreeSet<(usize, &Point)> =
                row.variants.iter().flat_map(|v| v.entries.iter().map(|e| (e.component, &e.offset))).collect();
            let mut coarse: BTreeSet<Point> = BTreeSet::new();
            for (comp, off) in &reach {
                for s in block.components[*comp].1.support() {
                    coarse.insert(sub_points(s, off));
                }
            }
            for n in coarse {
                let choices: Vec<usize> = row.involved.iter().map(|(dn, c)| choose(&add_points(&n, dn), *c)).collect();
                let variant = &row.variants[self.variant_index(row, &choices)];
                let mut acc = T::zero();
                for e in &variant.entries {
                    let x = block.components[e.component].1.get(&add_points(&n, &e.offset));
                    if !x.is_zero() {
                        acc = acc + T::from_rational(&e.coeff) * x;
                    }
                }
                outputs[row.output].set(&self.cosets.compose(&n, row.coset), acc);
            }
        }
        Ok(DifferenceBlock { order: self.order, components: self.indices.iter().cloned().zip(outputs).collect() })
    }

    /// `S_l(v)` applied to a block, with rules chosen by the scheme's selector
    /// looking at `v`.
    pub fn apply<T: Scalar>(
        &self,
        scheme: &SchemeSpec,
        v: &LatticeSequence<T>,
        block: &DifferenceBlock<T>,
    ) -> Result<DifferenceBlock<T>> {
        let mut err = None;
        let out = self.apply_with(block, |n, c| {
            scheme.select(v, n, c).unwrap_or_else(|e| {
                err.get_or_insert(e);
                0
            })
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// Differences of `w` of this scheme's order in its direction set.
    pub fn differences<T: Scalar>(&self, w: &LatticeSequence<T>) -> Result<DifferenceBlock<T>> {
        crate::gridseq::directional_block(w, &self.dirs, self.order)
    }
}

/// Checks `Δ^l S w = S_l Δ^l w` exactly for one rule-choice function.
pub fn identity_holds_with<T: Scalar>(
    scheme: &SchemeSpec,
    ds: &DifferenceScheme,
    w: &LatticeSequence<T>,
    choose: impl Fn(&[i64], usize) -> usize,
) -> Result<bool> {
    let lhs = ds.differences(&scheme.apply_with(w, &choose))?;
    let rhs = ds.apply_with(&ds.differences(w)?, &choose)?;
    Ok(lhs == rhs)
}

/// Checks `Δ^l S(v) w = S_l(v) Δ^l w` exactly with the scheme's selector.
pub fn identity_holds<T: Scalar>(
    scheme: &SchemeSpec,
    ds: &DifferenceScheme,
    v: &LatticeSequence<T>,
    w: &LatticeSequence<T>,
) -> Result<bool> {
    let lhs = ds.differences(&scheme.apply_to(v, w)?)?;
    let rhs = ds.apply(scheme, v, &ds.differences(w)?)?;
    Ok(lhs == rhs)
}
