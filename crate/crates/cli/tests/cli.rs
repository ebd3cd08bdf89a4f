use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use latsub_cli::report::AnalysisReport;
use latsub_cli::{parse_scheme, parse_scheme_str, serialize_scheme, SchemeFileError};
use latsub_core::SchemeSpec;
use proptest::prelude::*;

fn schemes_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemes")
}

fn bundled(name: &str) -> PathBuf {
    schemes_dir().join(format!("{name}.json"))
}

fn latsub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latsub")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TWO_D_HEADER: &str = r#""dimension": 2, "dilation": [[2, 1], [0, -2]], "interpolatory": true"#;

fn hex_with(rules: &str) -> String {
    format!("{{ {TWO_D_HEADER}, \"rules\": [{rules}] }}")
}

#[test]
fn bundled_files_match_builtins() {
    for name in ["hexagonal", "quincunx"] {
        let parsed = parse_scheme(&bundled(name)).unwrap();
        assert_eq!(parsed, SchemeSpec::builtin(name).unwrap(), "{name}");
    }
}

#[test]
fn weights_not_summing_to_one_are_rejected() {
    let text = r#"{ "dimension": 1, "dilation": [[2]], "interpolatory": true,
        "rules": [ { "coset": [1], "stencils": [ { "offsets": [[0], [1]], "weights": ["1/3", "1/3"] } ] } ] }"#;
    let err = parse_scheme_str(text, "x").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("weights sum 2/3 ≠ 1"), "{msg}");
    assert!(msg.contains("/rules/0/stencils/0/weights"), "{msg}");
}

#[test]
fn non_expanding_dilation_is_rejected() {
    let text = r#"{ "dimension": 2, "dilation": [[1, 0], [0, 2]], "interpolatory": true, "rules": [] }"#;
    let msg = parse_scheme_str(text, "x").unwrap_err().to_string();
    assert!(msg.contains("not expanding: eigenvalue 1"), "{msg}");
    assert!(msg.starts_with("/dilation"), "{msg}");
}

#[test]
fn missing_coset_rule_is_rejected() {
    let text = hex_with(r#"{ "coset": [1, 0], "stencils": [ { "offsets": [[0, 0], [1, 0]], "weights": ["1/2", "1/2"] } ] }"#);
    let msg = parse_scheme_str(&text, "x").unwrap_err().to_string();
    assert!(msg.contains("missing rule for coset"), "{msg}");
}

#[test]
fn non_canonical_coset_is_rejected() {
    let text = hex_with(r#"{ "coset": [3, 0], "stencils": [ { "offsets": [[0, 0]], "weights": ["1"] } ] }"#);
    let msg = parse_scheme_str(&text, "x").unwrap_err().to_string();
    assert!(msg.contains("not a canonical coset representative"), "{msg}");
}

#[test]
fn decimal_weights_are_rejected() {
    let text = r#"{ "dimension": 1, "dilation": [[2]], "interpolatory": true,
        "rules": [ { "coset": [1], "stencils": [ { "offsets": [[0], [1]], "weights": ["0.5", "1/2"] } ] } ] }"#;
    let msg = parse_scheme_str(text, "x").unwrap_err().to_string();
    assert!(msg.contains("/rules/0/stencils/0/weights/0"), "{msg}");
}

#[test]
fn malformed_json_reports_a_line() {
    let text = "{\n  \"dimension\": 2,\n  \"dilation\": [[2, 1], [0, -2]],\n  \"interpolatory\": @\n}";
    match parse_scheme_str(text, "x").unwrap_err() {
        SchemeFileError::Syntax { line, .. } => assert_eq!(line, 4),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let text = r#"{ "dimension": 1, "dilation": [[2]], "interpolatory": true, "colour": "red",
        "rules": [ { "coset": [1], "stencils": [ { "offsets": [[0], [1]], "weights": ["1/2", "1/2"] } ] } ] }"#;
    assert!(matches!(parse_scheme_str(text, "x"), Err(SchemeFileError::Syntax { .. })));
}

fn small_rational() -> impl Strategy<Value = (i64, i64)> {
    (-9i64..=9, 1i64..=8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Random one-dimensional dyadic schemes survive serialize then parse.
    #[test]
    fn serialize_parse_round_trip(
        free in prop::collection::vec(small_rational(), 1..4),
        interpolatory in any::<bool>(),
    ) {
        let mut weights: Vec<String> = free.iter().map(|(p, q)| format!("{p}/{q}")).collect();
        let sum: latsub_core::Rational = free.iter().map(|&(p, q)| latsub_core::scalar::rat(p, q)).sum();
        let last = latsub_core::Rational::from_integer(1.into()) - sum;
        weights.push(latsub_core::scalar::format_rational(&last));
        let offsets: Vec<String> = (0..weights.len()).map(|i| format!("[{}]", i as i64 - 1)).collect();
        let quoted: Vec<String> = weights.iter().map(|w| format!("\"{w}\"")).collect();
        let odd = format!(
            r#"{{ "coset": [1], "stencils": [ {{ "offsets": [{}], "weights": [{}] }} ] }}"#,
            offsets.join(","),
            quoted.join(",")
        );
        let even = r#"{ "coset": [0], "stencils": [ { "offsets": [[0], [1]], "weights": ["3/4", "1/4"] } ] }"#;
        let rules = if interpolatory { odd } else { format!("{even}, {odd}") };
        let text = format!(r#"{{ "dimension": 1, "dilation": [[2]], "interpolatory": {interpolatory}, "rules": [{rules}] }}"#);
        let scheme = parse_scheme_str(&text, "random").unwrap();
        let back = parse_scheme_str(&serialize_scheme(&scheme), "other").unwrap();
        prop_assert_eq!(&back, &scheme);
        prop_assert_eq!(serialize_scheme(&back), serialize_scheme(&scheme));
    }
}

#[test]
fn analyze_hexagonal_reports_the_one_step_holder_exponent() {
    let o = latsub(&["analyze", bundled("hexagonal").to_str().unwrap(), "--p", "inf"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}{}", stderr(&o));
    assert!(out.contains("Hölder s = 0.2075"), "{out}");
    assert!(out.contains("L^inf convergence: certified"), "{out}");
    assert!(out.contains("latsub 0.1.0"), "{out}");
}

#[test]
fn analyze_quincunx_is_not_certified() {
    let o = latsub(&["analyze", bundled("quincunx").to_str().unwrap(), "--depth", "2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("L^inf convergence: not certified"));
}

#[test]
fn verify_bundled_schemes() {
    for name in ["quincunx", "hexagonal"] {
        let o = latsub(&["verify", bundled(name).to_str().unwrap()]);
        let out = stdout(&o);
        assert_eq!(o.status.code(), Some(0), "{out}");
        assert!(!out.contains("FAIL"), "{out}");
        assert_eq!(out.matches("PASS").count(), 7, "{out}");
    }
}

#[test]
fn verify_reports_degree_zero_for_skewed_rules() {
    // rules reproduce constants but not linear data
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("skew.json");
    let text = r#"{ "dimension": 1, "dilation": [[2]], "interpolatory": false,
        "rules": [ { "coset": [0], "stencils": [ { "offsets": [[0], [1]], "weights": ["1/3", "2/3"] } ] },
                   { "coset": [1], "stencils": [ { "offsets": [[0], [1]], "weights": ["1/3", "2/3"] } ] } ] }"#;
    std::fs::write(&path, text).unwrap();
    let o = latsub(&["verify", path.to_str().unwrap()]);
    let out = stdout(&o);
    assert!(out.contains("PASS polynomial reproduction: exact reproduction up to degree 0"), "{out}");
}

#[test]
fn jsr_hexagonal_depth_one_is_exact() {
    let o = latsub(&["jsr", bundled("hexagonal").to_str().unwrap(), "--order", "1", "--p", "inf", "--depth", "1"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.contains("upper = 3/4 (exact)"), "{out}");
    assert!(out.contains("lower = 0.500000"), "{out}");
}

#[test]
fn builtin_names_are_accepted_in_place_of_files() {
    let o = latsub(&["jsr", "hexagonal", "--depth", "1"]);
    assert!(stdout(&o).contains("upper = 3/4 (exact)"));
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scheme = bundled("hexagonal");
    let mut texts = Vec::new();
    for tag in ["a", "b"] {
        let report = dir.path().join(format!("{tag}.txt"));
        let o = latsub(&["--seed", "7", "analyze", scheme.to_str().unwrap(), "--depth", "3", "--report", report.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = std::fs::read_to_string(&report).unwrap();
        let json = std::fs::read_to_string(report.with_extension("json")).unwrap();
        texts.push((text, json));
    }
    assert_eq!(texts[0], texts[1]);
    let (text, json) = &texts[0];
    let parsed = AnalysisReport::from_json(json).unwrap();
    assert_eq!(&parsed.to_text(), text);
    assert_eq!(&parsed.to_json(), json);
    assert_eq!(parsed.request.options.get("seed").map(String::as_str), Some("7"));
    assert_eq!(parsed.version, env!("CARGO_PKG_VERSION"));
    assert!(parsed.verdict_lines().iter().any(|l| l.contains("from ρ_{inf,1} <=")));
}

#[test]
fn derive_diff_writes_rational_masks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("diff.json");
    let o = latsub(&["derive-diff", bundled("hexagonal").to_str().unwrap(), "--order", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["operator_inf_norm"], "3/4");
    assert_eq!(v["exact"], true);
    let coeffs: Vec<&str> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r["variants"].as_array().unwrap())
        .flat_map(|var| var["entries"].as_array().unwrap())
        .map(|e| e["coeff"].as_str().unwrap())
        .collect();
    assert!(!coeffs.is_empty());
    assert!(coeffs.iter().all(|c| latsub_core::scalar::parse_rational(c).is_ok() && !c.contains('.')));
}

#[test]
fn render_writes_csv_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    std::fs::write(&input, "k1,k2,value\n0,0,1\n1,0,0\n0,1,0\n1,1,1\n").unwrap();
    let pgm = dir.path().join("field.pgm");
    let o = latsub(&[
        "render",
        bundled("quincunx").to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--levels",
        "4",
        "--basis",
        "boxspline:1,0;0,1;1,1",
        "--grid",
        "32x24",
        "--out",
        pgm.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n32 24\n255\n"));
    assert_eq!(bytes.len(), b"P5\n32 24\n255\n".len() + 32 * 24);

    let csv = dir.path().join("field.csv");
    let o = latsub(&[
        "render",
        bundled("hexagonal").to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--levels",
        "3",
        "--grid",
        "16",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,value"));
    assert_eq!(text.lines().count(), 1 + 16 * 16);
}

#[test]
fn boxspline_samples_sum_like_a_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bs.csv");
    let o = latsub(&["boxspline", "--directions", "1,0;0,1;1,1", "--grid", "64", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("smoothness C^0"));
    let text = std::fs::read_to_string(&out).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 64 * 64);
    // Courant element: piecewise linear on [0,2]^2 with peak 1 at (1,1)
    let peak = values.iter().cloned().fold(0.0, f64::max);
    assert!(peak <= 1.0 + 1e-12 && peak > 0.9, "{peak}");
}

#[test]
fn usage_errors_exit_with_one() {
    let hex = bundled("hexagonal");
    let hex = hex.to_str().unwrap();
    for args in [
        vec!["analyze", hex, "--bogus"],
        vec!["analyze", hex, "--p", "3"],
        vec!["jsr", hex, "--depth", "0"],
        vec!["analyze", "/nonexistent/scheme.json"],
        vec!["render", hex, "--input", "/nonexistent.csv", "--out", "x.csv"],
    ] {
        let o = latsub(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(latsub_cli::run(["latsub", "--help"]), 0);
}

#[test]
fn budget_flag_is_recorded() {
    let o = latsub(&["--budget-ms", "30000", "analyze", bundled("hexagonal").to_str().unwrap(), "--depth", "2"]);
    assert!(stdout(&o).contains("budget-ms=30000"));
}
