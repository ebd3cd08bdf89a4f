//! Cascade iteration, rendering of `v_j(x) = Σ v^j_k Φ₀(M^j x − k)`, and
//! empirical decay diagnostics to hold against the certified bounds.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::boxspline::{Basis, BoxSpline};
use crate::error::{Error, Result};
use crate::gridseq::{box_points, delta_block, forward_difference, LatticeSequence, MultiIndex, PNorm};
use crate::lattice::{classify_isotropy, unit_point, DilationMatrix, Point, DEFAULT_Q_MAX};
use crate::scalar::Scalar;
use crate::scheme::{reproduction_degree, SchemeSpec};

/// Default cap on the total number of stored values across all levels.
pub const DEFAULT_MAX_POINTS: usize = 20_000_000;

/// All levels `v^0, ..., v^J` of a cascade.
#[derive(Debug, Clone)]
pub struct CascadeState<T: Scalar> {
    matrix: DilationMatrix,
    levels: Vec<LatticeSequence<T>>,
}

impl<T: Scalar> CascadeState<T> {
    pub fn level(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn values(&self) -> &LatticeSequence<T> {
        self.levels.last().expect("at least level 0")
    }

    pub fn at(&self, j: u32) -> Option<&LatticeSequence<T>> {
        self.levels.get(j as usize)
    }

    pub fn levels(&self) -> &[LatticeSequence<T>] {
        &self.levels
    }

    pub fn matrix(&self) -> &DilationMatrix {
        &self.matrix
    }
}

/// `v^j = S(v^{j−1}) v^{j−1}` for `j = 1..=J`.
pub fn cascade<T: Scalar>(scheme: &SchemeSpec, v0: &LatticeSequence<T>, levels: u32) -> Result<CascadeState<T>> {
    cascade_with_budget(scheme, v0, levels, DEFAULT_MAX_POINTS)
}

pub fn cascade_with_budget<T: Scalar>(
    scheme: &SchemeSpec,
    v0: &LatticeSequence<T>,
    levels: u32,
    max_points: usize,
) -> Result<CascadeState<T>> {
    if v0.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch { expected: scheme.dim(), got: v0.dim() });
    }
    let m = scheme.matrix().m();
    let mut stored = v0.support_len();
    let mut out = vec![v0.clone()];
    for j in 1..=levels {
        let current = out.last().expect("nonempty");
        let estimate = predicted_support(current, scheme, m);
        if stored + estimate > max_points {
            return Err(Error::MemoryBudget { level: j as usize, feasible: (j - 1) as usize });
        }
        let next = scheme.apply(current)?;
        stored += next.support_len();
        out.push(next);
    }
    Ok(CascadeState { matrix: scheme.matrix().clone(), levels: out })
}

fn predicted_support<T: Scalar>(v: &LatticeSequence<T>, scheme: &SchemeSpec, m: usize) -> usize {
    let Some((lo, hi)) = v.bounding_box() else { return 0 };
    let r = scheme.offset_radius() + 1;
    let cells: usize = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1 + 2 * r) as usize).product();
    cells.saturating_mul(m)
}

/// Uniform sample grid over a box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: counts.len() });
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::Precondition("grid counts must be positive".into()));
        }
        Ok(Self { lo, hi, counts })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample point `idx` (first coordinate fastest).
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let n = self.counts[i];
                let s = idx % n;
                idx /= n;
                if n == 1 {
                    0.5 * (self.lo[i] + self.hi[i])
                } else {
                    self.lo[i] + (self.hi[i] - self.lo[i]) * s as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// Volume per sample, for discrete `L^p` norms.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim())
            .map(|i| if self.counts[i] > 1 { (self.hi[i] - self.lo[i]) / (self.counts[i] - 1) as f64 } else { 1.0 })
            .product()
    }

    /// Grid covering `M^{-j}` times the support box of `v` padded by the
    /// basis support.
    pub fn covering<T: Scalar>(v: &LatticeSequence<T>, m: &DilationMatrix, j: u32, basis: &Basis, counts: Vec<usize>) -> Result<Self> {
        let d = m.dim();
        let (lo, hi) = v.bounding_box().ok_or_else(|| Error::Precondition("empty data".into()))?;
        let (blo, bhi) = basis.support_box(d);
        let inv = DMatrix::from_fn(d, d, |a, b| m.power(j).entries()[a][b] as f64)
            .try_inverse()
            .ok_or_else(|| Error::Precondition("singular dilation".into()))?;
        let mut xlo = vec![f64::INFINITY; d];
        let mut xhi = vec![f64::NEG_INFINITY; d];
        // corners of the padded box in y = M^j x coordinates
        for corner in 0..(1usize << d) {
            let y: Vec<f64> = (0..d)
                .map(|i| if corner >> i & 1 == 1 { hi[i] as f64 - blo[i] } else { lo[i] as f64 - bhi[i] })
                .collect();
            let x = &inv * nalgebra::DVector::from_vec(y);
            for i in 0..d {
                xlo[i] = xlo[i].min(x[i]);
                xhi[i] = xhi[i].max(x[i]);
            }
        }
        Self::new(xlo, xhi, counts)
    }
}

/// Samples of a rendered function on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Field {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn norm(&self, p: PNorm) -> f64 {
        let vol = self.grid.cell_volume();
        match p {
            PNorm::Inf => self.max_abs(),
            PNorm::One => self.values.iter().map(|v| v.abs()).sum::<f64>() * vol,
            PNorm::Two => (self.values.iter().map(|v| v * v).sum::<f64>() * vol).sqrt(),
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::Precondition("fields sampled on different grids".into()));
        }
        Ok(Field { grid: self.grid.clone(), values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }

    /// `x_1,...,x_d,value` rows with full precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.grid.dim();
        let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(std::iter::once("value".into())).collect();
        writeln!(out, "{}", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            let cols: Vec<String> = p.iter().map(|c| format!("{c}")).chain(std::iter::once(format!("{v}"))).collect();
            writeln!(out, "{}", cols.join(","))?;
        }
        Ok(())
    }

    /// 8-bit binary PGM, min-max normalized; two-dimensional fields only.
    /// The first grid axis runs left to right, the second bottom to top.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        if self.grid.dim() != 2 {
            return Err(Error::Precondition("PGM output needs a two-dimensional field".into()));
        }
        let (w, h) = (self.grid.counts[0], self.grid.counts[1]);
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let io = |e: std::io::Error| Error::Precondition(e.to_string());
        write!(out, "P5\n{w} {h}\n255\n").map_err(io)?;
        let mut bytes = Vec::with_capacity(w * h);
        for row in (0..h).rev() {
            for col in 0..w {
                let v = self.values[row * w + col];
                bytes.push(((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        out.write_all(&bytes).map_err(io)
    }
}

/// Generic evaluator `Σ_k c_k f(M^j x − k)` over the support box of `f`.
fn render_with<T: Scalar, F>(v: &LatticeSequence<T>, m: &DilationMatrix, j: u32, grid: &GridSpec, support: (Vec<f64>, Vec<f64>), f: F) -> Field
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = m.dim();
    let mj = m.power(j);
    let entries: Vec<Vec<f64>> = mj.entries().iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect();
    let coeffs = v.to_f64();
    let (slo, shi) = support;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            let y: Vec<f64> = (0..d).map(|a| (0..d).map(|b| entries[a][b] * x[b]).sum()).collect();
            let klo: Vec<i64> = (0..d).map(|i| (y[i] - shi[i]).floor() as i64).collect();
            let khi: Vec<i64> = (0..d).map(|i| (y[i] - slo[i]).ceil() as i64).collect();
            let mut s = 0.0;
            for k in box_points(&klo, &khi) {
                if let Some(c) = coeffs.get_ref(&k) {
                    let z: Vec<f64> = y.iter().zip(&k).map(|(a, b)| a - *b as f64).collect();
                    s += c * f(&z);
                }
            }
            s
        })
        .collect();
    Field { grid: grid.clone(), values }
}

/// Samples `v_j(x) = Σ_k v^j_k Φ₀(M^j x − k)` at level `j` of the cascade.
pub fn render<T: Scalar>(state: &CascadeState<T>, j: u32, basis: &Basis, grid: &GridSpec) -> Result<Field> {
    let v = state.at(j).ok_or_else(|| Error::Precondition(format!("level {j} not computed")))?;
    if grid.dim() != state.matrix.dim() {
        return Err(Error::DimensionMismatch { expected: state.matrix.dim(), got: grid.dim() });
    }
    let d = state.matrix.dim();
    Ok(render_with(v, &state.matrix, j, grid, basis.support_box(d), |z| basis.eval(z)))
}

/// Per-level difference norms and the empirical decay fitted from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayDiagnostic {
    /// `‖Δ^1 v^j‖_∞` for `j = 0..=J`.
    pub norms: Vec<f64>,
    /// `‖Δ^1 v^{j+1}‖_∞ / ‖Δ^1 v^j‖_∞` when the denominator exceeds `1e-14`.
    pub ratios: Vec<Option<f64>>,
    /// Geometric mean of the ratios over the last `J/2` levels.
    pub rho_emp: Option<f64>,
    pub s_emp: Option<f64>,
    pub note: Option<String>,
}

fn first_difference_norm<T: Scalar>(v: &LatticeSequence<T>) -> Result<f64> {
    Ok(delta_block(v, 1)?.norm(PNorm::Inf))
}

/// Data that the scheme maps along polynomial samples: every difference of
/// order `n + 1` vanishes on the interior of the data box.
fn is_interior_polynomial<T: Scalar>(v: &LatticeSequence<T>, n: u32) -> Result<bool> {
    let d = v.dim();
    let Some((lo, hi)) = v.bounding_box() else { return Ok(true) };
    let order = n + 1;
    let ilo = lo.clone();
    let ihi: Vec<i64> = hi.iter().map(|h| h - i64::from(order)).collect();
    if ilo.iter().zip(&ihi).any(|(a, b)| a > b) {
        return Ok(false);
    }
    for mu in crate::gridseq::multi_indices(d, order) {
        let diff = forward_difference(v, &mu)?;
        if box_points(&ilo, &ihi).iter().any(|k| diff.get(k).to_f64_lossy().abs() > 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Observed contraction of first differences over a cascade of `J >= 4`
/// levels and the exponent `s_emp = −log ρ_emp / log m`.
pub fn empirical_holder<T: Scalar>(scheme: &SchemeSpec, v0: &LatticeSequence<T>, levels: u32) -> Result<DecayDiagnostic> {
    if levels < 4 {
        return Err(Error::Precondition(format!("need at least 4 levels, got {levels}")));
    }
    let deg = reproduction_degree(scheme, 2, false).degree;
    if deg >= 0 && first_difference_norm(v0)? <= 1e-14 {
        return Ok(DecayDiagnostic {
            norms: vec![0.0; levels as usize + 1],
            ratios: vec![None; levels as usize],
            rho_emp: None,
            s_emp: None,
            note: Some("exactly polynomial data".into()),
        });
    }
    if deg >= 1 && v0.support_len() > 1 && is_interior_polynomial(v0, deg.min(1) as u32)? {
        let state = cascade(scheme, v0, 1)?;
        let norms = vec![first_difference_norm(v0)?, first_difference_norm(state.values())?];
        return Ok(DecayDiagnostic {
            norms,
            ratios: Vec::new(),
            rho_emp: None,
            s_emp: None,
            note: Some("exactly polynomial data".into()),
        });
    }
    let state = cascade(scheme, v0, levels)?;
    let norms: Vec<f64> = state.levels().iter().map(first_difference_norm).collect::<Result<_>>()?;
    let ratios: Vec<Option<f64>> = norms.windows(2).map(|w| (w[0] > 1e-14).then(|| w[1] / w[0])).collect();
    let half = (levels / 2).max(1) as usize;
    let tail = &ratios[ratios.len() - half..];
    let rho_emp = if tail.iter().all(|r| r.is_some()) {
        let logs: f64 = tail.iter().map(|r| r.expect("checked").max(f64::MIN_POSITIVE).ln()).sum();
        Some((logs / half as f64).exp())
    } else {
        None
    };
    let m = scheme.matrix().m() as f64;
    Ok(DecayDiagnostic {
        norms,
        ratios,
        rho_emp,
        s_emp: rho_emp.map(|r| -r.ln() / m.ln()),
        note: rho_emp.is_none().then(|| "differences vanished within the fitted levels".into()),
    })
}

/// Measured `‖D^μ(v_{j+1} − v_j)‖_p` per level and the fitted growth rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevDecay {
    pub mu: Vec<u32>,
    pub p: String,
    /// `‖D^μ(v_{j+1} − v_j)‖_p` for `j = 0..J−1`.
    pub norms: Vec<f64>,
    /// Least-squares slope of `log_σ` of the norms against `j`.
    pub slope: Option<f64>,
    /// `σ = m^{1/d}`.
    pub sigma: f64,
}

impl SobolevDecay {
    /// Predicted slope `|μ| − s` for a certified exponent `s`.
    pub fn predicted_slope(&self, s: f64) -> f64 {
        self.mu.iter().sum::<u32>() as f64 - s
    }
}

/// Sequences of canonical axes whose derivatives combine into `D^μ` after
/// the chain rule through `M^j`: `D_{x_i} = Σ_a (M^j)_{a i} ∂_{y_a}`.
fn chain_terms(mj: &[Vec<i64>], mu: &[u32]) -> Vec<(Vec<usize>, f64)> {
    let d = mu.len();
    let mut terms: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
    for (i, &e) in mu.iter().enumerate() {
        for _ in 0..e {
            let mut next = Vec::new();
            for (seq, c) in &terms {
                for a in 0..d {
                    let w = mj[a][i] as f64;
                    if w != 0.0 {
                        let mut s = seq.clone();
                        s.push(a);
                        next.push((s, c * w));
                    }
                }
            }
            terms = next;
        }
    }
    terms
}

/// Evaluates `∂_{y_{a_1}} ... ∂_{y_{a_k}} Σ_k c_k β(y − k)` via coefficient
/// differences and direction removal.
fn derivative_field<T: Scalar>(
    v: &LatticeSequence<T>,
    m: &DilationMatrix,
    j: u32,
    bs: &BoxSpline,
    axes: &[usize],
    grid: &GridSpec,
) -> Result<Field> {
    let d = m.dim();
    let mut coeffs = v.to_f64();
    let mut dirs = bs.directions().clone();
    for &a in axes {
        let e = unit_point(d, a);
        let r = dirs
            .vectors()
            .iter()
            .position(|x| *x == e)
            .ok_or_else(|| Error::NotApplicable(format!("box spline has no direction e_{} left to differentiate", a + 1)))?;
        coeffs = coeffs.sub(&coeffs.translate(&e))?;
        dirs = dirs.without(r)?;
    }
    let reduced = BoxSpline::new(dirs);
    let support = reduced.directions().support_box();
    Ok(render_with(&coeffs, m, j, grid, support, |z| reduced.eval(z)))
}

/// `‖D^μ(v_{j+1} − v_j)‖_p` per level on one grid, with the slope of their
/// logarithm base `σ`. Requires an isotropic dilation; derivatives use box
/// spline coefficient differences, so `|μ| > 0` needs a box-spline basis
/// containing the canonical directions.
pub fn sobolev_decay<T: Scalar>(
    scheme: &SchemeSpec,
    v0: &LatticeSequence<T>,
    levels: u32,
    basis: &Basis,
    mu: &MultiIndex,
    p: PNorm,
    counts: Vec<usize>,
) -> Result<SobolevDecay> {
    let iso = classify_isotropy(scheme.matrix(), DEFAULT_Q_MAX);
    if !iso.is_isotropic() {
        return Err(Error::NotApplicable("Sobolev decay needs an isotropic dilation".into()));
    }
    let d = scheme.dim();
    if mu.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: mu.len() });
    }
    let state = cascade(scheme, v0, levels)?;
    let grid = GridSpec::covering(v0, scheme.matrix(), 0, basis, counts)?;
    let order: u32 = mu.iter().sum();
    let field_at = |j: u32| -> Result<Field> {
        if order == 0 {
            return render(&state, j, basis, &grid);
        }
        let Basis::BoxSpline(bs) = basis else {
            return Err(Error::NotApplicable("derivatives need a box-spline basis".into()));
        };
        let mj = scheme.matrix().power(j);
        let mut total: Option<Field> = None;
        for (axes, c) in chain_terms(mj.entries(), mu) {
            let f = derivative_field(state.at(j).expect("computed"), scheme.matrix(), j, bs, &axes, &grid)?;
            total = Some(match total {
                None => Field { grid: f.grid.clone(), values: f.values.iter().map(|v| c * v).collect() },
                Some(t) => Field { grid: t.grid.clone(), values: t.values.iter().zip(&f.values).map(|(a, b)| a + c * b).collect() },
            });
        }
        total.ok_or_else(|| Error::Precondition("empty derivative".into()))
    };
    let mut fields = Vec::with_capacity(levels as usize + 1);
    for j in 0..=levels {
        fields.push(field_at(j)?);
    }
    let norms: Vec<f64> = fields.windows(2).map(|w| w[1].sub(&w[0]).map(|f| f.norm(p))).collect::<Result<_>>()?;
    let sigma = (scheme.matrix().m() as f64).powf(1.0 / d as f64);
    let pts: Vec<(f64, f64)> =
        norms.iter().enumerate().filter(|(_, n)| **n > 1e-14).map(|(j, n)| (j as f64, n.ln() / sigma.ln())).collect();
    let slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(SobolevDecay { mu: mu.to_vec(), p: p.to_string(), norms, slope, sigma })
}

/// `M^{-j}k` in floating point, for locating samples.
pub fn fine_location(m: &DilationMatrix, j: u32, k: &Point) -> Vec<f64> {
    let mj = m.power(j);
    mj.apply_inverse(k).iter().map(crate::scalar::to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};
    use crate::Rational;

    #[test]
    fn zero_levels_is_identity() {
        let s = SchemeSpec::builtin("hexagonal").unwrap();
        let v = LatticeSequence::<Rational>::delta(2, &[0, 0]);
        let st = cascade(&s, &v, 0).unwrap();
        assert_eq!(st.values(), &v);
        assert_eq!(st.level(), 0);
    }

    #[test]
    fn interpolation_persists() {
        let s = SchemeSpec::builtin("hexagonal").unwrap();
        let v = LatticeSequence::from_fn(&[-2, -2], &[2, 2], |k: &[i64]| rat(k[0] * k[0] - 3 * k[1], 7));
        let st = cascade(&s, &v, 2).unwrap();
        let m2 = s.matrix().power(2);
        for (k, c) in v.iter() {
            assert_eq!(&st.values().get(&m2.apply(k)), c);
        }
    }

    #[test]
    fn memory_budget_names_feasible_level() {
        let s = SchemeSpec::builtin("hexagonal").unwrap();
        let v = LatticeSequence::from_fn(&[0, 0], &[2, 2], |k: &[i64]| (k[0] + 2 * k[1]) as f64 + 0.5);
        match cascade_with_budget(&s, &v, 30, 2_000) {
            Err(Error::MemoryBudget { level, feasible }) => assert_eq!(feasible + 1, level),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_data_renders_to_one() {
        let s = SchemeSpec::builtin("quincunx").unwrap();
        let v = LatticeSequence::from_fn(&[-8, -8], &[8, 8], |_| rat_int(1));
        let st = cascade(&s, &v, 2).unwrap();
        let grid = GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![9, 9]).unwrap();
        let f = render(&st, 2, &Basis::Hat, &grid).unwrap();
        assert!(f.values.iter().all(|x| (x - 1.0).abs() < 1e-8));
    }

    #[test]
    fn polynomial_data_is_degenerate() {
        let s = SchemeSpec::builtin("hexagonal").unwrap();
        let v = LatticeSequence::from_fn(&[-4, -4], &[4, 4], |k: &[i64]| (2 * k[0] - k[1]) as f64);
        let d = empirical_holder(&s, &v, 4).unwrap();
        assert_eq!(d.note.as_deref(), Some("exactly polynomial data"));
        let c = LatticeSequence::from_fn(&[-4, -4], &[4, 4], |_| 3.0);
        let d = empirical_holder(&s, &c.restrict(&[-4, -4], &[4, 4]), 4).unwrap();
        assert_eq!(d.note.as_deref(), Some("exactly polynomial data"));
    }

    #[test]
    fn chain_rule_terms() {
        let t = chain_terms(&[vec![2, 1], vec![0, -2]], &[0, 1].into_iter().collect::<Vec<u32>>());
        assert_eq!(t, vec![(vec![0], 1.0), (vec![1], -2.0)]);
    }
}
