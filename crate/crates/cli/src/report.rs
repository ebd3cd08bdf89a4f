//! Regularity reports: a serde struct with a plain-text rendering.
//!
//! The text is produced from the struct alone, so a report read back from
//! its JSON twin renders the same verdict lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use latsub_core::lattice::{classify_isotropy, IsotropyKind, DEFAULT_Q_MAX};
use latsub_core::limit::DecayDiagnostic;
use latsub_core::scalar::format_rational;
use latsub_core::spectral::{RadiusBound, RegularityReport, RootValue, TwoLevelConstant};
use latsub_core::{ReproductionCertificate, SchemeSpec};
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "latsub";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command and normalized options, embedded for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub command: String,
    pub options: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub name: String,
    pub dilation: Vec<Vec<i64>>,
    pub m: usize,
    pub cosets: Vec<Vec<i64>>,
    pub rules_per_coset: Vec<usize>,
    /// Locality `K`.
    pub locality: i64,
    /// Coefficient bound `C = max |weight|`.
    pub coefficient_bound: String,
    pub interpolatory: bool,
    pub selector: String,
    pub isotropy: String,
}

impl SchemeSummary {
    pub fn of(scheme: &SchemeSpec) -> Self {
        let cosets = scheme.cosets();
        let iso = classify_isotropy(scheme.matrix(), DEFAULT_Q_MAX);
        let isotropy = match (&iso.kind, iso.sigma) {
            (IsotropyKind::Cyclic { q, lambda, .. }, Some(s)) => format!("cyclic (M^{q} = {lambda} I), σ = {s:.6}"),
            (IsotropyKind::Cyclic { q, lambda, .. }, None) => format!("cyclic (M^{q} = {lambda} I)"),
            (IsotropyKind::Isotropic, Some(s)) => format!("isotropic, σ = {s:.6}"),
            _ => "anisotropic".to_string(),
        };
        Self {
            name: scheme.name().to_string(),
            dilation: scheme.matrix().entries().to_vec(),
            m: scheme.matrix().m(),
            cosets: cosets.representatives().iter().map(|c| c.to_vec()).collect(),
            rules_per_coset: scheme.all_rules().iter().map(Vec::len).collect(),
            locality: scheme.locality(),
            coefficient_bound: format_rational(&scheme.coefficient_bound()),
            interpolatory: scheme.interpolatory(),
            selector: scheme.selector().to_string(),
            isotropy,
        }
    }

    fn write(&self, out: &mut String) {
        let _ = writeln!(out, "scheme: {}", self.name);
        let _ = writeln!(out, "  dilation M = {:?}, m = |det M| = {}", self.dilation, self.m);
        let _ = writeln!(out, "  cosets: {:?}", self.cosets);
        let _ = writeln!(out, "  rules per coset: {:?}", self.rules_per_coset);
        let _ = writeln!(out, "  locality K = {}, coefficient bound C = {}", self.locality, self.coefficient_bound);
        let _ = writeln!(out, "  interpolatory: {}, selector: {}", self.interpolatory, self.selector);
        let _ = writeln!(out, "  isotropy: {}", self.isotropy);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionSummary {
    pub degree: i64,
    pub exact: bool,
    pub failing: Vec<String>,
}

impl ReproductionSummary {
    pub fn of(cert: &ReproductionCertificate) -> Self {
        Self {
            degree: cert.degree,
            exact: cert.exact,
            failing: cert.witness.iter().filter(|w| !w.holds).map(|w| format!("{:?}: {}", w.nu, w.detail)).collect(),
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: u32,
    pub upper: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub order: u32,
    pub p: String,
    pub upper: String,
    pub upper_value: f64,
    pub exact: bool,
    pub lower: f64,
    pub depth: u32,
    pub per_depth: Vec<DepthRow>,
    pub method: String,
    pub truncated_at: Option<u32>,
}

pub fn root_text(r: &RootValue) -> (String, bool) {
    let s = r.clone().simplified();
    (s.to_string(), s.is_exact_rational())
}

impl BoundRow {
    pub fn of(b: &RadiusBound) -> Self {
        let (upper, exact) = root_text(&b.upper);
        Self {
            order: b.order,
            p: b.p.to_string(),
            upper,
            upper_value: b.upper_f64(),
            exact,
            lower: b.lower,
            depth: b.depth,
            per_depth: b
                .per_depth
                .iter()
                .map(|(j, r)| DepthRow { depth: *j, upper: root_text(r).0, value: r.to_f64() })
                .collect(),
            method: b.method.clone(),
            truncated_at: b.truncated_at,
        }
    }

    /// `upper = 3/4 (exact)` or `upper = (3/16)^(1/4) ≈ 0.658037`.
    pub fn upper_line(&self) -> String {
        if self.exact {
            format!("upper = {} (exact)", self.upper)
        } else {
            format!("upper = {} ≈ {:.6}", self.upper, self.upper_value)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub p: String,
    pub convergent: bool,
    pub margin: f64,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub s: f64,
    pub truncated: bool,
    pub bound: String,
    pub depth: u32,
    pub per_depth: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevRow {
    pub n: u32,
    pub p: String,
    pub certified: bool,
    pub s_star: Option<f64>,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRow {
    pub seed: u64,
    pub levels: u32,
    pub norms: Vec<f64>,
    pub rho_emp: Option<f64>,
    pub s_emp: Option<f64>,
    pub note: Option<String>,
}

impl EmpiricalRow {
    pub fn of(seed: u64, levels: u32, d: &DecayDiagnostic) -> Self {
        Self {
            seed,
            levels,
            norms: d.norms.clone(),
            rho_emp: d.rho_emp.and_then(finite),
            s_emp: d.s_emp.and_then(finite),
            note: d.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelRow {
    pub coset: Vec<i64>,
    pub rule: usize,
    /// Residue classes of `k` sharing these constants.
    pub classes: Vec<Vec<i64>>,
    pub vs_previous: String,
    pub vs_two_back: String,
}

impl TwoLevelRow {
    /// One row per coset, rule and pair of constants.
    pub fn group(constants: &[TwoLevelConstant]) -> Vec<Self> {
        let mut rows: Vec<Self> = Vec::new();
        for c in constants {
            match rows.iter_mut().find(|r| {
                r.coset == c.coset && r.rule == c.rule && r.vs_previous == c.vs_previous && r.vs_two_back == c.vs_two_back
            }) {
                Some(r) => r.classes.push(c.class.clone()),
                None => rows.push(Self {
                    coset: c.coset.clone(),
                    rule: c.rule,
                    classes: vec![c.class.clone()],
                    vs_previous: c.vs_previous.clone(),
                    vs_two_back: c.vs_two_back.clone(),
                }),
            }
        }
        rows
    }
}

/// Full output of `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub request: RequestRecord,
    pub scheme: SchemeSummary,
    pub reproduction: ReproductionSummary,
    pub bounds: Vec<BoundRow>,
    pub lp_convergence: Option<LpRow>,
    pub holder: Option<HolderRow>,
    pub sobolev: Vec<SobolevRow>,
    pub empirical: Option<EmpiricalRow>,
    pub two_level: Vec<TwoLevelRow>,
    pub notes: Vec<String>,
    /// `L^p` convergence was certified.
    pub certified: bool,
}

impl AnalysisReport {
    pub fn new(
        request: RequestRecord,
        scheme: &SchemeSpec,
        reproduction: &ReproductionCertificate,
        reg: &RegularityReport,
    ) -> Self {
        let lp_convergence = reg.lp_convergent.as_ref().map(|v| LpRow {
            p: v.p.clone(),
            convergent: v.convergent,
            margin: v.margin,
            bound: v.bound.clone(),
        });
        let holder = reg.holder.as_ref().map(|h| HolderRow {
            s: h.s,
            truncated: h.truncated,
            bound: h.bound.clone(),
            depth: h.depth,
            per_depth: h.per_depth.clone(),
        });
        let sobolev = reg
            .sobolev
            .iter()
            .map(|e| SobolevRow { n: e.n, p: e.p.clone(), certified: e.certified, s_star: finite(e.s_star), bound: e.bound.clone() })
            .collect();
        let certified = lp_convergence.as_ref().is_some_and(|l| l.convergent);
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            request,
            scheme: SchemeSummary::of(scheme),
            reproduction: ReproductionSummary::of(reproduction),
            bounds: reg.bounds.iter().map(BoundRow::of).collect(),
            lp_convergence,
            holder,
            sobolev,
            empirical: None,
            two_level: Vec::new(),
            notes: reg.notes.clone(),
            certified,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Verdict lines only; these are what the JSON twin must reproduce.
    pub fn verdict_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        match &self.lp_convergence {
            Some(l) => lines.push(format!(
                "L^{} convergence: {} (from {}; margin {:.6})",
                l.p,
                if l.convergent { "certified" } else { "not certified" },
                l.bound,
                l.margin
            )),
            None => lines.push("L^p convergence: no certificate".into()),
        }
        match &self.holder {
            Some(h) => {
                lines.push(format!(
                    "Hölder s = {:.4}{} (from {})",
                    h.s,
                    if h.truncated { " (truncated below 1)" } else { "" },
                    h.bound
                ));
                for (j, s) in &h.per_depth {
                    lines.push(format!("  depth {j}: Hölder s = {s:.4}"));
                }
            }
            None => lines.push("Hölder: no certificate (ρ_{inf,1} not below 1)".into()),
        }
        for e in &self.sobolev {
            let s_star = e.s_star.map_or("unbounded".to_string(), |s| format!("{s:.4}"));
            lines.push(format!(
                "Sobolev W_{}^{}: {} (s* = {}, from {})",
                e.n,
                e.p,
                if e.certified { "certified" } else { "not certified" },
                s_star,
                e.bound
            ));
        }
        lines
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} regularity report", self.tool, self.version);
        let opts: Vec<String> = self.request.options.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "request: {} {}", self.request.command, opts.join(" "));
        out.push('\n');
        self.scheme.write(&mut out);
        out.push('\n');
        let r = &self.reproduction;
        let _ = writeln!(
            out,
            "polynomial reproduction: degree {} ({})",
            r.degree,
            if r.exact { "exact" } else { "up to lower-degree terms" }
        );
        for f in &r.failing {
            let _ = writeln!(out, "  not reproduced: {f}");
        }
        out.push('\n');
        let _ = writeln!(out, "joint spectral radius bounds:");
        for b in &self.bounds {
            let _ = writeln!(
                out,
                "  ρ_{{{},{}}}: {}, lower = {:.6}, depth {}{}",
                b.p,
                b.order,
                b.upper_line(),
                b.lower,
                b.depth,
                b.truncated_at.map_or(String::new(), |t| format!(" (budget reached at depth {t})"))
            );
            for row in &b.per_depth {
                let _ = writeln!(out, "    depth {}: {} ≈ {:.6}", row.depth, row.upper, row.value);
            }
            let _ = writeln!(out, "    method: {}", b.method);
        }
        out.push('\n');
        let _ = writeln!(out, "verdicts:");
        for line in self.verdict_lines() {
            let _ = writeln!(out, "  {line}");
        }
        out.push('\n');
        let _ = writeln!(out, "diagnostics:");
        if let Some(e) = &self.empirical {
            let norms: Vec<String> = e.norms.iter().map(|x| format!("{x:.6e}")).collect();
            let _ = writeln!(out, "  empirical decay (seed {}, {} levels): ‖Δv^j‖_∞ = [{}]", e.seed, e.levels, norms.join(", "));
            match (e.rho_emp, e.s_emp) {
                (Some(r), Some(s)) => {
                    let _ = writeln!(out, "    ρ_emp = {r:.6}, s_emp = {s:.4}");
                }
                _ => {
                    let _ = writeln!(out, "    no decay estimate");
                }
            }
            if let Some(n) = &e.note {
                let _ = writeln!(out, "    note: {n}");
            }
        }
        if !self.two_level.is_empty() {
            let _ = writeln!(out, "  two-level deviation constants (|v^j_(Mk+ε) - v^j_(Mk)| <= C ‖Δv‖_∞):");
            for t in &self.two_level {
                let _ = writeln!(
                    out,
                    "    coset {:?}, rule {}, classes {:?}: C = {} vs level j-1, {} vs level j-2",
                    t.coset, t.rule, t.classes, t.vs_previous, t.vs_two_back
                );
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}
