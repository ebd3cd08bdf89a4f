//! Subdivision operators built from finitely many linear stencil rules per
//! coset, with a data-dependent selector choosing among them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridseq::{multi_indices, multi_indices_up_to, LatticeSequence};
use crate::lattice::{add_points, inf_norm_point, point, sub_points, zero_point, CosetSet, DilationMatrix, Point};
use crate::scalar::{format_rational, rat, Rational, Scalar};

/// One linear rule: `v'_{Mk+ε} = Σ_i weights[i] · v_{k + offsets[i]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StencilRule {
    offsets: Vec<Point>,
    weights: Vec<Rational>,
}

impl StencilRule {
    /// Validates lengths, dimensions and that the weights sum to one.
    pub fn new(offsets: Vec<Point>, weights: Vec<Rational>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::InvalidRule("empty stencil".into()));
        }
        if offsets.len() != weights.len() {
            return Err(Error::InvalidRule(format!("{} offsets but {} weights", offsets.len(), weights.len())));
        }
        let d = offsets[0].len();
        if let Some(o) = offsets.iter().find(|o| o.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: o.len() });
        }
        let distinct: BTreeSet<&Point> = offsets.iter().collect();
        if distinct.len() != offsets.len() {
            return Err(Error::InvalidRule("repeated offset".into()));
        }
        let sum: Rational = weights.iter().sum();
        if !sum.is_one() {
            return Err(Error::InvalidRule(format!("weights sum {} ≠ 1", format_rational(&sum))));
        }
        Ok(Self { offsets, weights })
    }

    /// The rule `v'_{Mk} = v_k`.
    pub fn identity(d: usize) -> Self {
        Self { offsets: vec![zero_point(d)], weights: vec![Rational::one()] }
    }

    pub fn from_ints(offsets: &[&[i64]], weights: &[(i64, i64)]) -> Result<Self> {
        Self::new(offsets.iter().map(|o| point(o)).collect(), weights.iter().map(|&(p, q)| rat(p, q)).collect())
    }

    pub fn offsets(&self) -> &[Point] {
        &self.offsets
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.offsets[0].len()
    }

    pub fn is_identity(&self) -> bool {
        self.offsets.len() == 1 && self.offsets[0].iter().all(|&x| x == 0) && self.weights[0].is_one()
    }

    /// `max_o ‖ε - M o‖_∞`: the fine-to-coarse reach of this rule at coset `ε`.
    pub fn locality(&self, m: &DilationMatrix, eps: &[i64]) -> i64 {
        self.offsets.iter().map(|o| inf_norm_point(&sub_points(eps, &m.apply(o)))).max().unwrap_or(0)
    }

    /// `Σ_o w_o (o - c)^β` for the shift `c`.
    pub fn moment(&self, beta: &[u32], center: &[Rational]) -> Rational {
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(o, w)| {
                let mut term = w.clone();
                for ((oi, ci), &b) in o.iter().zip(center).zip(beta) {
                    let x = Rational::from_integer((*oi).into()) - ci;
                    for _ in 0..b {
                        term *= &x;
                    }
                }
                term
            })
            .sum()
    }

    fn apply_at<T: Scalar>(&self, weights: &[T], v: &LatticeSequence<T>, n: &[i64]) -> T {
        let mut acc = T::zero();
        for (o, w) in self.offsets.iter().zip(weights) {
            if let Some(x) = v.get_ref(&add_points(n, o)) {
                acc = acc + w.clone() * x.clone();
            }
        }
        acc
    }
}

/// How a rule is chosen among a coset's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    /// Always the given rule index (cosets with a single rule use it).
    Fixed(usize),
    /// Least total oscillation `Σ_{p<q} |v_p - v_q|` over the stencil points;
    /// ties go to the lowest index.
    EnoMinDiff,
    /// Certification only: every rule choice is considered and single
    /// application is undefined.
    Exhaustive,
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Fixed(i) => write!(f, "fixed:{i}"),
            Selector::EnoMinDiff => f.write_str("eno-min-diff"),
            Selector::Exhaustive => f.write_str("exhaustive"),
        }
    }
}

impl FromStr for Selector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eno-min-diff" | "eno_min_diff" | "eno" => Ok(Selector::EnoMinDiff),
            "exhaustive" => Ok(Selector::Exhaustive),
            "fixed" => Ok(Selector::Fixed(0)),
            other => match other.strip_prefix("fixed:").or_else(|| other.strip_prefix("fixed(").and_then(|r| r.strip_suffix(')'))) {
                Some(i) => i.parse().map(Selector::Fixed).map_err(|_| Error::Parse(format!("bad rule index in selector {other:?}"))),
                None => Err(Error::Parse(format!("unknown selector {other:?}"))),
            },
        }
    }
}

impl Serialize for Selector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Selector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// ENO choice: index of the rule with least `Σ_{p<q} |v_p - v_q|` over its
/// stencil points `k + offsets`, lowest index on ties.
pub fn eno_select<T: Scalar>(v: &LatticeSequence<T>, k: &[i64], rules: &[StencilRule]) -> usize {
    let mut best = 0;
    let mut best_osc: Option<T> = None;
    for (idx, rule) in rules.iter().enumerate() {
        let vals: Vec<T> = rule.offsets.iter().map(|o| v.get(&add_points(k, o))).collect();
        let mut osc = T::zero();
        for a in 0..vals.len() {
            for b in a + 1..vals.len() {
                osc = osc + (vals[a].clone() - vals[b].clone()).abs();
            }
        }
        if best_osc.as_ref().map_or(true, |b| osc < *b) {
            best = idx;
            best_osc = Some(osc);
        }
    }
    best
}

/// A subdivision scheme: dilation, canonical cosets, a rule family per coset
/// and a selector.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    name: String,
    matrix: DilationMatrix,
    cosets: CosetSet,
    rules: Vec<Vec<StencilRule>>,
    selector: Selector,
    interpolatory: bool,
}

impl SchemeSpec {
    /// Builds a scheme from `(coset vector, rules)` pairs. Every coset except
    /// `ε_0` must be listed; `ε_0` may be omitted for interpolatory schemes.
    pub fn new(
        name: impl Into<String>,
        matrix: DilationMatrix,
        rules: Vec<(Point, Vec<StencilRule>)>,
        interpolatory: bool,
        selector: Selector,
    ) -> Result<Self> {
        let d = matrix.dim();
        let cosets = matrix.cosets();
        let mut table: Vec<Option<Vec<StencilRule>>> = vec![None; cosets.len()];
        for (eps, family) in rules {
            if eps.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: eps.len() });
            }
            let i = cosets.index_of(&eps).ok_or_else(|| {
                Error::InvalidScheme(format!(
                    "{eps:?} is not a canonical coset representative; expected one of {:?}",
                    cosets.representatives()
                ))
            })?;
            if table[i].is_some() {
                return Err(Error::InvalidScheme(format!("coset {eps:?} listed twice")));
            }
            if family.is_empty() {
                return Err(Error::InvalidScheme(format!("coset {eps:?} has no rules")));
            }
            if let Some(r) = family.iter().find(|r| r.dim() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: r.dim() });
            }
            table[i] = Some(family);
        }
        if interpolatory {
            match &table[0] {
                None => table[0] = Some(vec![StencilRule::identity(d)]),
                Some(f) if f.len() == 1 && f[0].is_identity() => {}
                Some(_) => {
                    return Err(Error::InvalidScheme("interpolatory scheme must use the identity rule at ε_0".into()))
                }
            }
        }
        let rules: Vec<Vec<StencilRule>> = table
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.ok_or_else(|| Error::InvalidScheme(format!("missing rule for coset {:?}", cosets.get(i)))))
            .collect::<Result<_>>()?;
        if let Selector::Fixed(idx) = selector {
            if let Some(f) = rules.iter().find(|f| f.len() > 1 && idx >= f.len()) {
                return Err(Error::Selector(format!("fixed index {idx} out of range for a family of {}", f.len())));
            }
        }
        Ok(Self { name: name.into(), matrix, cosets, rules, selector, interpolatory })
    }

    /// One of the bundled schemes, `"hexagonal"` or `"quincunx"`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "hexagonal" => Ok(hexagonal()),
            "quincunx" => Ok(quincunx()),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_selector(mut self, selector: Selector) -> Result<Self> {
        if let Selector::Fixed(idx) = selector {
            if self.rules.iter().any(|f| f.len() > 1 && idx >= f.len()) {
                return Err(Error::Selector(format!("fixed index {idx} out of range")));
            }
        }
        self.selector = selector;
        Ok(self)
    }

    pub fn matrix(&self) -> &DilationMatrix {
        &self.matrix
    }

    pub fn cosets(&self) -> &CosetSet {
        &self.cosets
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Rule family of coset `i`.
    pub fn rules(&self, i: usize) -> &[StencilRule] {
        &self.rules[i]
    }

    pub fn all_rules(&self) -> &[Vec<StencilRule>] {
        &self.rules
    }

    pub fn selector(&self) -> Selector {
        self.selector
    }

    pub fn interpolatory(&self) -> bool {
        self.interpolatory
    }

    /// `true` when every coset has a single rule.
    pub fn is_linear(&self) -> bool {
        self.rules.iter().all(|f| f.len() == 1)
    }

    /// Locality bound `K`: `a_{k-Ml} = 0` whenever `‖k - Ml‖_∞ > K`.
    pub fn locality(&self) -> i64 {
        self.rules
            .iter()
            .enumerate()
            .flat_map(|(i, f)| f.iter().map(move |r| (i, r)))
            .map(|(i, r)| r.locality(&self.matrix, self.cosets.get(i)))
            .max()
            .unwrap_or(0)
    }

    /// Coefficient bound `C = max |weight|`.
    pub fn coefficient_bound(&self) -> Rational {
        self.rules
            .iter()
            .flatten()
            .flat_map(|r| r.weights.iter())
            .map(|w| w.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Largest `‖offset‖_∞` over all rules.
    pub fn offset_radius(&self) -> i64 {
        self.rules.iter().flatten().flat_map(|r| r.offsets.iter()).map(|o| inf_norm_point(o)).max().unwrap_or(0)
    }

    /// Rule index the selector picks for fine point `M n + ε_i`, looking at `v`.
    pub fn select<T: Scalar>(&self, v: &LatticeSequence<T>, n: &[i64], i: usize) -> Result<usize> {
        let family = &self.rules[i];
        if family.len() == 1 {
            return Ok(0);
        }
        match self.selector {
            Selector::Fixed(idx) => Ok(idx),
            Selector::EnoMinDiff => Ok(eno_select(v, n, family)),
            Selector::Exhaustive => {
                Err(Error::Selector("the exhaustive selector is for certification only and cannot refine data".into()))
            }
        }
    }

    /// `S v = S(v) v`.
    pub fn apply<T: Scalar>(&self, v: &LatticeSequence<T>) -> Result<LatticeSequence<T>> {
        self.apply_to(v, v)
    }

    /// `S(v) w`: rules chosen by looking at `v`, applied to `w`.
    pub fn apply_to<T: Scalar>(&self, v: &LatticeSequence<T>, w: &LatticeSequence<T>) -> Result<LatticeSequence<T>> {
        if v.dim() != self.dim() || w.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.dim().max(w.dim()) });
        }
        if self.selector == Selector::Exhaustive && !self.is_linear() {
            return Err(Error::Selector("the exhaustive selector is for certification only and cannot refine data".into()));
        }
        // Selection never fails past the check above.
        Ok(self.apply_with(w, |n, i| self.select(v, n, i).unwrap_or(0)))
    }

    /// Applies the scheme to `w` with an explicit rule choice per fine point
    /// `M n + ε_i`.
    pub fn apply_with<T: Scalar>(
        &self,
        w: &LatticeSequence<T>,
        mut choose: impl FnMut(&[i64], usize) -> usize,
    ) -> LatticeSequence<T> {
        let weights: Vec<Vec<Vec<T>>> = self
            .rules
            .iter()
            .map(|f| f.iter().map(|r| r.weights.iter().map(T::from_rational).collect()).collect())
            .collect();
        let mut out = LatticeSequence::zeros(self.dim());
        for (i, family) in self.rules.iter().enumerate() {
            let offsets: BTreeSet<&Point> = family.iter().flat_map(|r| r.offsets.iter()).collect();
            let mut coarse: BTreeSet<Point> = BTreeSet::new();
            for s in w.support() {
                for o in &offsets {
                    coarse.insert(sub_points(s, o));
                }
            }
            for n in coarse {
                let r = if family.len() == 1 { 0 } else { choose(&n, i) };
                let val = family[r].apply_at(&weights[i][r], w, &n);
                out.set(&self.cosets.compose(&n, i), val);
            }
        }
        out
    }

    /// Moment vector centre `M^{-1} ε_i`.
    pub fn coset_center(&self, i: usize) -> Vec<Rational> {
        self.matrix.apply_inverse(self.cosets.get(i))
    }
}

/// Outcome for one monomial in a reproduction check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialWitness {
    pub nu: Vec<u32>,
    pub holds: bool,
    /// Output polynomial when reproduced, otherwise the offending rule and
    /// the nonzero residual.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionCertificate {
    /// Largest certified total degree, `-1` if even constants fail.
    pub degree: i64,
    /// Whether reproduction at `degree` is exact (`P̃ = P`).
    pub exact: bool,
    pub witness: Vec<MonomialWitness>,
}

/// Certifies polynomial reproduction rule by rule.
///
/// With `c_i = M^{-1} ε_i` and the moments `m_β = Σ_o w_o (o - c_i)^β` of a
/// rule, the output on samples of `x^ν` at coset `i` is the polynomial
/// `Σ_{β≤ν} C(ν,β) m_β x^{ν-β}` evaluated at `M^{-1}k`. Exact reproduction of
/// degree `N` holds iff `m_0 = 1` and `m_β = 0` for `0 < |β| <= N` in every
/// rule; plain reproduction holds iff every rule has `m_0 = 1` and the same
/// moments up to order `N`, so that one `P̃` serves every coset and choice.
pub fn reproduction_degree(scheme: &SchemeSpec, n_max: u32, require_exact: bool) -> ReproductionCertificate {
    let d = scheme.dim();
    let entries: Vec<(usize, usize, Vec<Rational>)> = (0..scheme.cosets.len())
        .flat_map(|i| {
            let c = scheme.coset_center(i);
            (0..scheme.rules(i).len()).map(move |r| (i, r, c.clone()))
        })
        .collect();
    let moments = |beta: &[u32]| -> Vec<Rational> {
        entries.iter().map(|(i, r, c)| scheme.rules(*i)[*r].moment(beta, c)).collect()
    };
    let describe = |idx: usize| {
        let (i, r, _) = &entries[idx];
        format!("coset {:?} rule {r}", scheme.cosets.get(*i))
    };

    let mut witness = Vec::new();
    let mut exact_ok = true;
    let mut plain_ok = true;
    let mut degree = -1i64;
    let mut exact_at_degree = false;
    for n in 0..=n_max {
        let mut exact_n = exact_ok;
        let mut plain_n = plain_ok;
        let mut failures = Vec::new();
        for beta in multi_indices(d, n) {
            let ms = moments(&beta);
            let target = if n == 0 { Rational::one() } else { Rational::zero() };
            if let Some(bad) = ms.iter().position(|m| *m != target) {
                exact_n = false;
                if n == 0 {
                    plain_n = false;
                }
                failures.push((beta.clone(), bad, ms[bad].clone(), "moment".to_string()));
            }
            if n > 0 {
                if let Some(bad) = ms.iter().position(|m| *m != ms[0]) {
                    plain_n = false;
                    failures.push((beta.clone(), bad, &ms[bad] - &ms[0], "moment mismatch".to_string()));
                }
            }
        }
        let ok = if require_exact { exact_n } else { plain_n };
        for nu in multi_indices(d, n) {
            let holds = ok;
            let detail = if holds {
                output_polynomial(&nu, |beta| {
                    let ms = moments(beta);
                    ms[0].clone()
                })
            } else {
                let mut related: Vec<String> = failures
                    .iter()
                    .filter(|(beta, _, _, _)| beta.iter().zip(&nu).all(|(b, v)| b <= v))
                    .map(|(beta, idx, val, what)| {
                        format!("{what} {beta:?} = {} at {}", format_rational(val), describe(*idx))
                    })
                    .collect();
                if related.is_empty() {
                    related.push("lower-degree reproduction already fails".into());
                }
                related.join("; ")
            };
            witness.push(MonomialWitness { nu: nu.to_vec(), holds, detail });
        }
        exact_ok = exact_n;
        plain_ok = plain_n;
        if ok {
            degree = n as i64;
            exact_at_degree = exact_n;
        } else {
            break;
        }
    }
    ReproductionCertificate { degree, exact: exact_at_degree, witness }
}

/// Formats `Σ_{β≤ν} C(ν,β) m_β x^{ν-β}`.
fn output_polynomial(nu: &[u32], moment: impl Fn(&[u32]) -> Rational) -> String {
    let mut terms = Vec::new();
    for beta in multi_indices_up_to(nu.len(), nu.iter().sum()) {
        if beta.iter().zip(nu).any(|(b, v)| b > v) {
            continue;
        }
        let mut coef = moment(&beta);
        for (b, v) in beta.iter().zip(nu) {
            coef *= rat(crate::gridseq::binomial(*v as usize, *b as usize) as i64, 1);
        }
        if coef.is_zero() {
            continue;
        }
        let mono: Vec<String> = nu
            .iter()
            .zip(&beta)
            .enumerate()
            .filter(|(_, (v, b))| *v > *b)
            .map(|(j, (v, b))| if v - b == 1 { format!("x{}", j + 1) } else { format!("x{}^{}", j + 1, v - b) })
            .collect();
        let c = format_rational(&coef);
        terms.push(match (mono.is_empty(), c.as_str()) {
            (true, _) => c,
            (false, "1") => mono.join("*"),
            (false, _) => format!("{c}*{}", mono.join("*")),
        });
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Evaluates `x^ν`.
pub fn monomial(x: &[Rational], nu: &[u32]) -> Rational {
    let mut acc = Rational::one();
    for (xi, &e) in x.iter().zip(nu) {
        for _ in 0..e {
            acc *= xi;
        }
    }
    acc
}

fn hexagonal() -> SchemeSpec {
    let r = |o: &[&[i64]], w: &[(i64, i64)]| StencilRule::from_ints(o, w).expect("valid built-in rule");
    let rules = vec![
        (point(&[1, 0]), vec![r(&[&[0, 0], &[1, 0]], &[(1, 2), (1, 2)])]),
        (
            point(&[1, -1]),
            vec![
                r(&[&[1, 0], &[0, 1], &[0, 0]], &[(1, 4), (1, 2), (1, 4)]),
                r(&[&[0, 0], &[0, 1], &[1, 1]], &[(1, 2), (1, 4), (1, 4)]),
            ],
        ),
        (
            point(&[2, -1]),
            vec![
                r(&[&[0, 1], &[1, 1], &[1, 0]], &[(1, 4), (1, 4), (1, 2)]),
                r(&[&[0, 0], &[1, 0], &[1, 1]], &[(1, 4), (1, 4), (1, 2)]),
            ],
        ),
    ];
    SchemeSpec::new("hexagonal", DilationMatrix::hexagonal(), rules, true, Selector::EnoMinDiff)
        .expect("valid built-in scheme")
}

fn quincunx() -> SchemeSpec {
    let r = |o: &[&[i64]], w: &[(i64, i64)]| StencilRule::from_ints(o, w).expect("valid built-in rule");
    let rules = vec![(
        point(&[0, 1]),
        vec![r(&[&[0, 0], &[1, 1]], &[(1, 2), (1, 2)]), r(&[&[1, 0], &[0, 1]], &[(1, 2), (1, 2)])],
    )];
    SchemeSpec::new("quincunx", DilationMatrix::quincunx(), rules, true, Selector::EnoMinDiff)
        .expect("valid built-in scheme")
}

/// Cartesian product of rule indices: every way to pick one rule per slot.
pub fn choice_tuples(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in counts {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |r| {
                    let mut p = prefix.clone();
                    p.push(r);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridseq::box_points;
    use crate::scalar::rat_int;

    #[test]
    fn rule_validation() {
        let e = StencilRule::from_ints(&[&[0, 0], &[1, 0]], &[(1, 3), (1, 3)]).unwrap_err();
        assert_eq!(e.to_string(), "invalid stencil rule: weights sum 2/3 ≠ 1");
        assert!(StencilRule::from_ints(&[&[0, 0], &[0, 0]], &[(1, 2), (1, 2)]).is_err());
        assert!(StencilRule::from_ints(&[&[0, 0]], &[(1, 2), (1, 2)]).is_err());
    }

    #[test]
    fn builtin_structure() {
        let h = SchemeSpec::builtin("hexagonal").unwrap();
        let reps: Vec<Point> = vec![point(&[0, 0]), point(&[1, 0]), point(&[1, -1]), point(&[2, -1])];
        assert_eq!(h.cosets().representatives(), reps.as_slice());
        assert!(h.interpolatory() && h.rules(0)[0].is_identity());
        assert_eq!(h.rules(2).len(), 2);
        let q = SchemeSpec::builtin("quincunx").unwrap();
        assert_eq!(q.rules(1).len(), 2);
        assert!(q.interpolatory() && q.rules(0)[0].is_identity());
        assert_eq!(q.coefficient_bound(), rat_int(1));
        assert!(matches!(SchemeSpec::builtin("nope"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn constant_is_reproduced_for_every_choice() {
        for s in [SchemeSpec::builtin("hexagonal").unwrap(), SchemeSpec::builtin("quincunx").unwrap()] {
            let v = LatticeSequence::from_fn(&[-6, -6], &[6, 6], |_| rat(5, 3));
            for pick in 0..2 {
                let out = s.apply_with(&v, |n, _| (n[0] + n[1] + pick).rem_euclid(2) as usize);
                // fine points whose stencils lie inside the data box
                for k in box_points(&[-3, -3], &[3, 3]) {
                    assert_eq!(out.get(&k), rat(5, 3));
                }
            }
        }
    }

    #[test]
    fn quincunx_delta_by_hand() {
        let s = SchemeSpec::builtin("quincunx").unwrap().with_selector(Selector::Fixed(0)).unwrap();
        let v = LatticeSequence::<Rational>::delta(2, &[0, 0]);
        let out = s.apply(&v).unwrap();
        // v'_{Mk} = v_k; v'_{Mk+ε1} = (v_k + v_{k+e1+e2})/2, nonzero for k = 0 and k = -(1,1)
        let m = DilationMatrix::quincunx();
        let mut want = LatticeSequence::<Rational>::zeros(2);
        want.set(&[0, 0], rat_int(1));
        want.set(&add_points(&m.apply(&[0, 0]), &[0, 1]), rat(1, 2));
        want.set(&add_points(&m.apply(&[-1, -1]), &[0, 1]), rat(1, 2));
        assert_eq!(out, want);
    }

    #[test]
    fn hexagonal_affine_data_lands_on_affine_interpolant() {
        let s = SchemeSpec::builtin("hexagonal").unwrap();
        let p = |x: &[Rational]| rat_int(2) * &x[0] - &x[1] + rat_int(3);
        let v = LatticeSequence::from_fn(&[-6, -6], &[6, 6], |k| p(&[rat_int(k[0]), rat_int(k[1])]));
        let out = s.apply(&v).unwrap();
        let m = DilationMatrix::hexagonal();
        for n in box_points(&[-4, -4], &[4, 4]) {
            for i in 0..4 {
                let k = s.cosets().compose(&n, i);
                assert_eq!(out.get(&k), p(&m.apply_inverse(&k)));
            }
        }
        // fine point M k + ε_2 receives P(k + (1/4, 1/2))
        let k = s.cosets().compose(&[1, 2], 2);
        assert_eq!(out.get(&k), p(&[rat(5, 4), rat(5, 2)]));
    }

    #[test]
    fn eno_examples() {
        let q = SchemeSpec::builtin("quincunx").unwrap();
        let affine = LatticeSequence::from_fn(&[-3, -3], &[3, 3], |k| rat_int(3 * k[0] + 7));
        assert_eq!(eno_select(&affine, &[0, 0], q.rules(1)), 0);
        // jump across the anti-diagonal k1 + k2 = 1: k is on one side, k + e1 + e2 on the other
        let jump = LatticeSequence::from_fn(&[-3, -3], &[3, 3], |k| rat_int(i64::from(k[0] + k[1] >= 1) * 10));
        assert_eq!(eno_select(&jump, &[0, 0], q.rules(1)), 1);
        assert_eq!(eno_select(&jump, &[0, 0], &q.rules(1)[..1]), 0);
    }

    #[test]
    fn exhaustive_selector_cannot_refine() {
        let s = SchemeSpec::builtin("quincunx").unwrap().with_selector(Selector::Exhaustive).unwrap();
        let v = LatticeSequence::<Rational>::delta(2, &[0, 0]);
        assert!(matches!(s.apply(&v), Err(Error::Selector(_))));
    }

    #[test]
    fn interpolation_and_locality() {
        let s = SchemeSpec::builtin("hexagonal").unwrap();
        let v = LatticeSequence::from_fn(&[-3, -3], &[3, 3], |k| rat(k[0] * k[0] - k[1], 3));
        let out = s.apply(&v).unwrap();
        for k in box_points(&[-3, -3], &[3, 3]) {
            assert_eq!(out.get(&s.matrix().apply(&k)), v.get(&k));
        }
        // ε_2 = (1,-1) with offset (1,1): ε - M(1,1) = (-2,1)
        assert_eq!(s.locality(), 2);
    }

    fn brute_force_exact(scheme: &SchemeSpec, nu: &[u32]) -> bool {
        let v = LatticeSequence::from_fn(&[-8, -8], &[8, 8], |k| monomial(&[rat_int(k[0]), rat_int(k[1])], nu));
        let counts: Vec<usize> = (0..scheme.cosets().len()).map(|i| scheme.rules(i).len()).collect();
        let max = counts.iter().copied().max().unwrap();
        (0..max).all(|pick| {
            let out = scheme.apply_with(&v, |_, i| pick.min(counts[i] - 1));
            box_points(&[-4, -4], &[4, 4]).iter().all(|n| {
                (0..scheme.cosets().len()).all(|i| {
                    let k = scheme.cosets().compose(n, i);
                    out.get(&k) == monomial(&scheme.matrix().apply_inverse(&k), nu)
                })
            })
        })
    }

    #[test]
    fn reproduction_of_builtins() {
        for name in ["hexagonal", "quincunx"] {
            let s = SchemeSpec::builtin(name).unwrap();
            let cert = reproduction_degree(&s, 3, true);
            assert_eq!(cert.degree, 1, "{name}");
            assert!(cert.exact);
            for nu in multi_indices_up_to(2, 2) {
                let want = nu.iter().sum::<u32>() <= 1;
                assert_eq!(brute_force_exact(&s, &nu), want, "{name} {nu:?}");
            }
            assert_eq!(reproduction_degree(&s, 3, false).degree, 1);
        }
    }

    #[test]
    fn one_third_two_thirds_reproduces_constants_only() {
        let m = DilationMatrix::scalar(2, 2).unwrap();
        let rule = StencilRule::from_ints(&[&[0, 0], &[1, 0]], &[(1, 3), (2, 3)]).unwrap();
        let rules = m.cosets().representatives().iter().map(|e| (e.clone(), vec![rule.clone()])).collect();
        let s = SchemeSpec::new("skew", m, rules, false, Selector::Fixed(0)).unwrap();
        let cert = reproduction_degree(&s, 2, true);
        assert_eq!(cert.degree, 0);
        assert_eq!(reproduction_degree(&s, 2, false).degree, 0);
        let failing = cert.witness.iter().find(|w| w.nu == vec![1, 0]).unwrap();
        assert!(!failing.holds);
        assert!(!brute_force_exact(&s, &[1, 0]));
        assert!(brute_force_exact(&s, &[0, 0]));
    }

    #[test]
    fn shifted_reproduction_is_not_exact() {
        // corner cutting: one P̃ = x^2 + x/2 + 1/4 serves both cosets for x^2,
        // so plain reproduction reaches degree 2 while exactness stops at 0
        let m = DilationMatrix::scalar(1, 2).unwrap();
        let r0 = StencilRule::from_ints(&[&[0], &[1]], &[(3, 4), (1, 4)]).unwrap();
        let r1 = StencilRule::from_ints(&[&[0], &[1]], &[(1, 4), (3, 4)]).unwrap();
        let s = SchemeSpec::new("shifted", m, vec![(point(&[0]), vec![r0]), (point(&[1]), vec![r1])], false, Selector::Fixed(0))
            .unwrap();
        let plain = reproduction_degree(&s, 3, false);
        assert_eq!(plain.degree, 2);
        assert!(!plain.exact);
        let sq = plain.witness.iter().find(|w| w.nu == vec![2]).unwrap();
        assert_eq!(sq.detail, "x1^2 + 1/2*x1 + 1/4");
        assert_eq!(reproduction_degree(&s, 3, true).degree, 0);
    }

    #[test]
    fn choice_tuple_enumeration() {
        assert_eq!(choice_tuples(&[2, 1, 3]).len(), 6);
        assert_eq!(choice_tuples(&[]), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn scheme_validation() {
        let m = DilationMatrix::quincunx();
        let r = StencilRule::from_ints(&[&[0, 0], &[1, 1]], &[(1, 2), (1, 2)]).unwrap();
        assert!(SchemeSpec::new("x", m.clone(), vec![], true, Selector::EnoMinDiff).is_err());
        assert!(SchemeSpec::new("x", m.clone(), vec![(point(&[1, 0]), vec![r.clone()])], true, Selector::EnoMinDiff).is_err());
        assert!(SchemeSpec::new("x", m.clone(), vec![(point(&[0, 1]), vec![r.clone()])], false, Selector::EnoMinDiff).is_err());
        assert!(SchemeSpec::new("x", m, vec![(point(&[0, 1]), vec![r.clone(), r])], true, Selector::Fixed(2)).is_err());
    }
}
