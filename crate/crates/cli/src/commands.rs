//! Subcommand implementations. Each returns the process exit code.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use latsub_core::boxspline::{Basis, BoxSpline, DirectionMatrix};
use latsub_core::diffscheme::{derive, identity_holds, identity_holds_with, DifferenceScheme};
use latsub_core::gridseq::box_points;
use latsub_core::lattice::{inf_norm_point, point};
use latsub_core::limit::{cascade, empirical_holder, render, Field, GridSpec};
use latsub_core::scalar::{format_rational, rat};
use latsub_core::scheme::{choice_tuples, reproduction_degree};
use latsub_core::spectral::{certify, default_depth, radius_bound, two_level_constants, BoundOptions};
use latsub_core::{LatticeSequence, PNorm, Point, Rational, SchemeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::report::{AnalysisReport, BoundRow, EmpiricalRow, RequestRecord, TwoLevelRow, TOOL, VERSION};
use crate::schemefile::{parse_scheme, serialize_scheme};
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub seed: u64,
    pub budget_ms: Option<u64>,
}

impl Globals {
    fn bound_options(&self, depth: u32) -> BoundOptions {
        let mut opts = BoundOptions::new(depth);
        if let Some(ms) = self.budget_ms {
            opts.budget = std::time::Duration::from_millis(ms);
        }
        opts.seed = self.seed;
        opts
    }

    fn record(&self, options: &mut BTreeMap<String, String>) {
        options.insert("seed".into(), self.seed.to_string());
        if let Some(ms) = self.budget_ms {
            options.insert("budget-ms".into(), ms.to_string());
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io { path: path.display().to_string(), source: e };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn load(path: &Path) -> Result<SchemeSpec, CliError> {
    Ok(parse_scheme(path)?)
}

// ---------------------------------------------------------------------------
// analyze

pub struct AnalyzeArgs {
    pub scheme: PathBuf,
    pub p: PNorm,
    pub max_order: u32,
    pub depth: Option<u32>,
    pub report: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

/// Empirical first-difference decay on seeded random data, when the cascade
/// stays small.
fn empirical(scheme: &SchemeSpec, seed: u64) -> Option<EmpiricalRow> {
    let m = scheme.matrix().m() as f64;
    let d = scheme.dim();
    let base = 4f64.powi(d as i32);
    let levels = ((2e6 / base).ln() / m.ln()).floor().min(6.0);
    if levels < 4.0 {
        return None;
    }
    let levels = levels as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v0 = LatticeSequence::from_fn(&vec![0; d], &vec![3; d], |_| rng.gen_range(-1.0..1.0));
    empirical_holder(scheme, &v0, levels).ok().map(|diag| EmpiricalRow::of(seed, levels, &diag))
}

pub fn analyze(args: &AnalyzeArgs, g: Globals) -> Result<i32, CliError> {
    let scheme = load(&args.scheme)?;
    let depth = match args.depth {
        Some(dp) => dp,
        None => derive(&scheme, 1).map(|ds| default_depth(&ds)).unwrap_or(4),
    };
    let opts = g.bound_options(depth);
    let mut options = BTreeMap::new();
    options.insert("scheme".into(), args.scheme.display().to_string());
    options.insert("p".into(), args.p.to_string());
    options.insert("max-order".into(), args.max_order.to_string());
    options.insert("depth".into(), depth.to_string());
    g.record(&mut options);

    let cert = reproduction_degree(&scheme, args.max_order + 1, true);
    let reg = certify(&scheme, args.p, args.max_order, &opts)?;
    let mut report = AnalysisReport::new(RequestRecord { command: "analyze".into(), options }, &scheme, &cert, &reg);
    report.empirical = empirical(&scheme, g.seed);
    if let Ok(rows) = two_level_constants(&scheme) {
        report.two_level = TwoLevelRow::group(&rows);
    }

    let text = report.to_text();
    match &args.report {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            let twin = args.json.clone().unwrap_or_else(|| json_twin_path(path));
            write_atomic(&twin, report.to_json().as_bytes())?;
            for line in report.verdict_lines() {
                println!("{line}");
            }
            println!("report written to {} (JSON twin {})", path.display(), twin.display());
        }
        None => {
            print!("{text}");
            if let Some(json) = &args.json {
                write_atomic(json, report.to_json().as_bytes())?;
            }
        }
    }
    Ok(if report.certified { EXIT_OK } else { EXIT_UNCERTIFIED })
}

pub fn json_twin_path(report: &Path) -> PathBuf {
    let twin = report.with_extension("json");
    if twin == report {
        let mut name = report.as_os_str().to_owned();
        name.push(".twin.json");
        PathBuf::from(name)
    } else {
        twin
    }
}

// ---------------------------------------------------------------------------
// verify

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn suite(name: &str, outcome: Result<String, String>) -> SuiteResult {
    match outcome {
        Ok(detail) => SuiteResult { name: name.into(), passed: true, detail },
        Err(detail) => SuiteResult { name: name.into(), passed: false, detail },
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    rat(rng.gen_range(-20..=20), rng.gen_range(1..=6))
}

fn random_data(rng: &mut ChaCha8Rng, d: usize, r: i64) -> LatticeSequence<Rational> {
    LatticeSequence::from_fn(&vec![-r; d], &vec![r; d], |_| random_rational(rng))
}

/// Fine points `M n + ε_i` for `n` in the box `[-r, r]^d`, as `(n, i)`.
fn fine_points(scheme: &SchemeSpec, r: i64) -> Vec<(Point, usize)> {
    let d = scheme.dim();
    box_points(&vec![-r; d], &vec![r; d])
        .into_iter()
        .flat_map(|n| (0..scheme.cosets().len()).map(move |i| (n.clone(), i)))
        .collect()
}

fn check_cosets(scheme: &SchemeSpec) -> Result<String, String> {
    let cosets = scheme.cosets();
    if cosets.len() != scheme.matrix().m() {
        return Err(format!("{} representatives for |det M| = {}", cosets.len(), scheme.matrix().m()));
    }
    for (i, eps) in cosets.representatives().iter().enumerate() {
        let (n, j) = cosets.decompose(eps);
        if j != i || n.iter().any(|&c| c != 0) {
            return Err(format!("{eps:?} is not its own canonical representative"));
        }
        let y = scheme.matrix().apply_inverse(eps);
        if y.iter().any(|c| *c < Rational::from_integer(0.into()) || *c >= Rational::from_integer(1.into())) {
            return Err(format!("M^-1 {eps:?} lies outside [0,1)^d"));
        }
    }
    Ok(format!("{} distinct representatives", cosets.len()))
}

fn check_constants(scheme: &SchemeSpec, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let d = scheme.dim();
    let r = scheme.offset_radius() + 3;
    let one = Rational::from_integer(1.into());
    let ones = LatticeSequence::from_fn(&vec![-r; d], &vec![r; d], |_| one.clone());
    let counts: Vec<usize> = scheme.all_rules().iter().map(Vec::len).collect();
    let inner = r - scheme.offset_radius();
    let check = |out: &LatticeSequence<Rational>| {
        fine_points(scheme, inner).iter().all(|(n, i)| out.get(&scheme.cosets().compose(n, *i)) == one)
    };
    let tuples = choice_tuples(&counts);
    for t in &tuples {
        if !check(&scheme.apply_with(&ones, |_, i| t[i])) {
            return Err(format!("rule choice {t:?} does not map constants to constants"));
        }
    }
    for trial in 0..20 {
        let picks: BTreeMap<(Point, usize), usize> =
            fine_points(scheme, r).into_iter().map(|(n, i)| ((n, i), rng.gen_range(0..counts[i]))).collect();
        if !check(&scheme.apply_with(&ones, |n, i| picks.get(&(point(n), i)).copied().unwrap_or(0))) {
            return Err(format!("mixed rule choice (trial {trial}) does not map constants to constants"));
        }
    }
    Ok(format!("{} uniform and 20 mixed rule choices", tuples.len()))
}

fn check_interpolation(scheme: &SchemeSpec, rng: &mut ChaCha8Rng) -> Result<String, String> {
    if !scheme.interpolatory() {
        return Ok("not interpolatory; nothing to check".into());
    }
    let d = scheme.dim();
    for _ in 0..10 {
        let v = random_data(rng, d, 3);
        let out = scheme.apply(&v).map_err(|e| e.to_string())?;
        for k in v.support() {
            if out.get(&scheme.matrix().apply(k)) != v.get(k) {
                return Err(format!("(Sv)_(Mk) differs from v_k at k = {k:?}"));
            }
        }
    }
    Ok("(Sv)_(Mk) = v_k on 10 random data sets".into())
}

fn check_reproduction(scheme: &SchemeSpec) -> Result<String, String> {
    let cert = reproduction_degree(scheme, 3, true);
    if cert.degree < 0 {
        let bad: Vec<String> = cert.witness.iter().filter(|w| !w.holds).map(|w| w.detail.clone()).collect();
        return Err(format!("constants are not reproduced: {}", bad.join("; ")));
    }
    Ok(format!("exact reproduction up to degree {}", cert.degree))
}

fn check_difference_identity(scheme: &SchemeSpec, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let deg = reproduction_degree(scheme, 2, false).degree;
    if deg < 0 {
        return Err("no difference scheme without constant reproduction".into());
    }
    let d = scheme.dim();
    let counts: Vec<usize> = scheme.all_rules().iter().map(Vec::len).collect();
    let tuples = choice_tuples(&counts);
    let max_order = (deg as u32 + 1).min(2);
    let mut checked = 0;
    for l in 1..=max_order {
        let ds: DifferenceScheme = derive(scheme, l).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let v = random_data(rng, d, 3);
            let w = random_data(rng, d, 3);
            for t in &tuples {
                if !identity_holds_with(scheme, &ds, &w, |_, i| t[i]).map_err(|e| e.to_string())? {
                    return Err(format!("order {l}: identity fails for rule choice {t:?}"));
                }
                checked += 1;
            }
            if scheme.selector() != latsub_core::Selector::Exhaustive || scheme.is_linear() {
                if !identity_holds(scheme, &ds, &v, &w).map_err(|e| e.to_string())? {
                    return Err(format!("order {l}: identity fails for the selector on random data"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("orders 1..={max_order}, {checked} exact checks"))
}

fn check_locality(scheme: &SchemeSpec, rng: &mut ChaCha8Rng) -> Result<String, String> {
    if scheme.selector() == latsub_core::Selector::Exhaustive && !scheme.is_linear() {
        return Ok("exhaustive selector cannot refine data; skipped".into());
    }
    let d = scheme.dim();
    let reach = scheme.offset_radius();
    let big = 3 + 2 * reach;
    let radius = 2 + reach;
    let v = random_data(rng, d, big);
    let mut w = v.clone();
    for k in box_points(&vec![-big; d], &vec![big; d]) {
        if inf_norm_point(&k) > radius {
            w.set(&k, random_rational(rng));
        }
    }
    let (sv, sw) = (scheme.apply(&v).map_err(|e| e.to_string())?, scheme.apply(&w).map_err(|e| e.to_string())?);
    for (n, i) in fine_points(scheme, radius - reach) {
        let k = scheme.cosets().compose(&n, i);
        if sv.get(&k) != sw.get(&k) {
            return Err(format!("value at {k:?} depends on data more than {reach} coarse steps away"));
        }
    }
    Ok(format!("fine values depend only on coarse data within {reach} steps"))
}

fn check_round_trip(scheme: &SchemeSpec) -> Result<String, String> {
    let text = serialize_scheme(scheme);
    let back = crate::schemefile::parse_scheme_str(&text, scheme.name()).map_err(|e| e.to_string())?;
    if back != *scheme {
        return Err("serialized scheme parses to a different scheme".into());
    }
    Ok("serialize then parse gives an identical scheme".into())
}

pub fn verify_suites(scheme: &SchemeSpec, seed: u64) -> Vec<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        suite("coset representatives", check_cosets(scheme)),
        suite("constant reproduction", check_constants(scheme, &mut rng)),
        suite("interpolation", check_interpolation(scheme, &mut rng)),
        suite("polynomial reproduction", check_reproduction(scheme)),
        suite("difference identity", check_difference_identity(scheme, &mut rng)),
        suite("locality", check_locality(scheme, &mut rng)),
        suite("file round trip", check_round_trip(scheme)),
    ]
}

pub fn verify(scheme_path: &Path, g: Globals) -> Result<i32, CliError> {
    let scheme = load(scheme_path)?;
    let results = verify_suites(&scheme, g.seed);
    println!("{TOOL} {VERSION} verify {} (seed {})", scheme.name(), g.seed);
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} suites passed", results.len() - failed, results.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_ERROR })
}

// ---------------------------------------------------------------------------
// jsr

pub struct JsrArgs {
    pub scheme: PathBuf,
    pub order: u32,
    pub p: PNorm,
    pub depth: Option<u32>,
}

pub fn jsr(args: &JsrArgs, g: Globals) -> Result<i32, CliError> {
    let scheme = load(&args.scheme)?;
    let ds = derive(&scheme, args.order)?;
    let depth = args.depth.unwrap_or_else(|| default_depth(&ds));
    let b = radius_bound(&scheme, &ds, args.p, &g.bound_options(depth))?;
    let row = BoundRow::of(&b);
    println!("scheme {}: ρ_{{{},{}}}, depth {}", scheme.name(), row.p, row.order, row.depth);
    println!("{}", row.upper_line());
    println!("lower = {:.6}", row.lower);
    for r in &row.per_depth {
        println!("  depth {}: {} ≈ {:.6}", r.depth, r.upper, r.value);
    }
    if let Some(t) = row.truncated_at {
        println!("budget reached at depth {t}");
    }
    println!("method: {}", row.method);
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// derive-diff

#[derive(Debug, Serialize)]
struct DiffEntryOut {
    component: Vec<u32>,
    offset: Vec<i64>,
    coeff: String,
}

#[derive(Debug, Serialize)]
struct DiffVariantOut {
    choices: Vec<usize>,
    mass: String,
    entries: Vec<DiffEntryOut>,
}

#[derive(Debug, Serialize)]
struct InvolvedOut {
    shift: Vec<i64>,
    coset: Vec<i64>,
}

#[derive(Debug, Serialize)]
struct DiffRowOut {
    coset: Vec<i64>,
    output: Vec<u32>,
    involved: Vec<InvolvedOut>,
    variants: Vec<DiffVariantOut>,
}

#[derive(Debug, Serialize)]
struct DiffSchemeOut {
    tool: String,
    version: String,
    scheme: String,
    order: u32,
    dilation: Vec<Vec<i64>>,
    cosets: Vec<Vec<i64>>,
    components: Vec<Vec<u32>>,
    operator_inf_norm: String,
    exact: bool,
    rows: Vec<DiffRowOut>,
}

pub fn difference_scheme_json(scheme: &SchemeSpec, ds: &DifferenceScheme) -> String {
    let idx = ds.indices();
    let cosets = ds.cosets();
    let out = DiffSchemeOut {
        tool: TOOL.into(),
        version: VERSION.into(),
        scheme: scheme.name().into(),
        order: ds.order(),
        dilation: ds.matrix().entries().to_vec(),
        cosets: cosets.representatives().iter().map(|c| c.to_vec()).collect(),
        components: idx.iter().map(|m| m.to_vec()).collect(),
        operator_inf_norm: format_rational(&ds.operator_inf_norm()),
        exact: ds.record().all_exact(),
        rows: ds
            .rows()
            .iter()
            .map(|row| DiffRowOut {
                coset: cosets.get(row.coset).to_vec(),
                output: idx[row.output].to_vec(),
                involved: row
                    .involved
                    .iter()
                    .map(|(s, c)| InvolvedOut { shift: s.to_vec(), coset: cosets.get(*c).to_vec() })
                    .collect(),
                variants: row
                    .variants
                    .iter()
                    .map(|v| DiffVariantOut {
                        choices: v.choices.clone(),
                        mass: format_rational(&v.mass),
                        entries: v
                            .entries
                            .iter()
                            .map(|e| DiffEntryOut {
                                component: idx[e.component].to_vec(),
                                offset: e.offset.to_vec(),
                                coeff: format_rational(&e.coeff),
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("difference scheme serializes");
    s.push('\n');
    s
}

pub fn derive_diff(scheme_path: &Path, order: u32, out: Option<&Path>) -> Result<i32, CliError> {
    let scheme = load(scheme_path)?;
    let ds = derive(&scheme, order)?;
    let json = difference_scheme_json(&scheme, &ds);
    match out {
        Some(path) => {
            write_atomic(path, json.as_bytes())?;
            println!(
                "order {order} difference scheme of {}: {} rows, ‖S_{order}‖_∞ = {}; written to {}",
                scheme.name(),
                ds.rows().len(),
                format_rational(&ds.operator_inf_norm()),
                path.display()
            );
        }
        None => print!("{json}"),
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// render and boxspline

/// `hat`, `courant`, or `boxspline:1,0;0,1;1,1`.
pub fn parse_basis(s: &str, d: usize) -> Result<Basis, CliError> {
    let bad = |m: String| CliError::Usage(format!("--basis {s:?}: {m}"));
    match s.trim() {
        "hat" => Ok(Basis::Hat),
        "courant" if d == 2 => Ok(Basis::BoxSpline(BoxSpline::courant())),
        "courant" => Err(bad("the Courant element is two-dimensional".into())),
        other => {
            let dirs = other.strip_prefix("boxspline:").ok_or_else(|| bad("expected hat, courant or boxspline:<dirs>".into()))?;
            let dm = parse_directions(dirs).map_err(|e| bad(e.to_string()))?;
            if dm.dim() != d {
                return Err(bad(format!("directions are {}-dimensional, data is {d}-dimensional", dm.dim())));
            }
            Ok(Basis::BoxSpline(BoxSpline::new(dm)))
        }
    }
}

/// Semicolon-separated integer vectors, e.g. `1,0;0,1;1,1`.
pub fn parse_directions(s: &str) -> Result<DirectionMatrix, CliError> {
    let vectors = s
        .split(';')
        .map(|v| {
            v.split(',')
                .map(|c| c.trim().parse::<i64>().map_err(|_| CliError::Usage(format!("bad direction component {c:?}"))))
                .collect::<Result<Vec<i64>, _>>()
                .map(|c| point(&c))
        })
        .collect::<Result<Vec<Point>, _>>()?;
    Ok(DirectionMatrix::reordered(vectors)?)
}

/// `256x256`, or a single count used on every axis.
pub fn parse_grid(s: &str, d: usize) -> Result<Vec<usize>, CliError> {
    let counts = s
        .split('x')
        .map(|c| c.trim().parse::<usize>().ok().filter(|&n| n >= 2))
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| CliError::Usage(format!("--grid {s:?}: expected counts >= 2 such as 256x256")))?;
    match counts.len() {
        1 => Ok(vec![counts[0]; d]),
        n if n == d => Ok(counts),
        n => Err(CliError::Usage(format!("--grid {s:?} has {n} axes, expected {d}"))),
    }
}

/// Rows `k_1,...,k_d,value`; blank lines, `#` comments and a header line are
/// skipped.
pub fn parse_data_csv(text: &str, d: usize) -> Result<LatticeSequence<f64>, CliError> {
    let mut entries = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |m: &str| CliError::Usage(format!("input line {}: {m}", ln + 1));
        if fields.len() != d + 1 {
            if entries.is_empty() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            return Err(bad(&format!("expected {} fields, got {}", d + 1, fields.len())));
        }
        let k: Option<Vec<i64>> = fields[..d].iter().map(|f| f.parse().ok()).collect();
        let value: Option<f64> = fields[d].parse().ok().filter(|x: &f64| x.is_finite());
        match (k, value) {
            (Some(k), Some(v)) => entries.push((point(&k), v)),
            _ if entries.is_empty() && ln == 0 => continue,
            _ => return Err(bad("expected integer indices and a finite value")),
        }
    }
    if entries.is_empty() {
        return Err(CliError::Usage("input has no data rows".into()));
    }
    Ok(LatticeSequence::from_entries(d, entries)?)
}

fn write_field(field: &Field, out: &Path) -> Result<(), CliError> {
    let mut buf = Vec::new();
    if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        field.write_pgm(&mut buf)?;
    } else {
        field.write_csv(&mut buf).map_err(|e| CliError::Io { path: out.display().to_string(), source: e })?;
    }
    write_atomic(out, &buf)
}

pub struct RenderArgs {
    pub scheme: PathBuf,
    pub input: PathBuf,
    pub levels: u32,
    pub basis: String,
    pub grid: String,
    pub out: PathBuf,
}

pub fn render_cmd(args: &RenderArgs) -> Result<i32, CliError> {
    let scheme = load(&args.scheme)?;
    let d = scheme.dim();
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Io { path: args.input.display().to_string(), source: e })?;
    let v0 = parse_data_csv(&text, d)?;
    let basis = parse_basis(&args.basis, d)?;
    let counts = parse_grid(&args.grid, d)?;
    let state = cascade(&scheme, &v0, args.levels)?;
    let top = state.at(args.levels).expect("cascade has every level");
    let grid = GridSpec::covering(top, scheme.matrix(), args.levels, &basis, counts)?;
    let field = render(&state, args.levels, &basis, &grid)?;
    write_field(&field, &args.out)?;
    println!(
        "rendered level {} of {} with the {} basis on {:?} samples; max |v| = {:.6}; written to {}",
        args.levels,
        scheme.name(),
        basis.name(),
        grid.counts,
        field.max_abs(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

pub fn boxspline_cmd(directions: &str, grid: usize, out: &Path) -> Result<i32, CliError> {
    if grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    let dm = parse_directions(directions)?;
    let d = dm.dim();
    let (lo, hi) = dm.support_box();
    let bs = BoxSpline::new(dm);
    let spec = GridSpec::new(lo, hi, vec![grid; d])?;
    let values = (0..spec.len()).map(|i| bs.eval(&spec.point(i))).collect();
    let field = Field { grid: spec, values };
    write_field(&field, out)?;
    println!(
        "box spline with {} directions in dimension {d}: smoothness C^{}; {} samples written to {}",
        bs.directions().len(),
        bs.smoothness(),
        field.values.len(),
        out.display()
    );
    Ok(EXIT_OK)
}
