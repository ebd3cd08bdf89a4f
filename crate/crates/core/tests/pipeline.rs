//! End-to-end use of the public API: derive, bound, certify and render.

use std::time::Duration;

use latsub_core::boxspline::{Basis, BoxSpline};
use latsub_core::diffscheme::derive;
use latsub_core::limit::{cascade, cascade_with_budget, render, sobolev_decay, GridSpec};
use latsub_core::scalar::{rat, rat_int};
use latsub_core::scheme::reproduction_degree;
use latsub_core::spectral::{certify, jsr_upper, radius_inequality_check, BoundOptions};
use latsub_core::{
    DilationMatrix, Error, ExactSequence, Float32Sequence, FloatSequence, LatticeSequence, MultiIndex, PNorm, SchemeSpec,
    Selector, StencilRule,
};

fn opts(depth: u32) -> BoundOptions {
    let mut o = BoundOptions::new(depth);
    o.budget = Duration::from_secs(60);
    o
}

#[test]
fn hexagonal_bounds_tighten_with_depth() {
    let s = SchemeSpec::builtin("hexagonal").unwrap();
    let b = jsr_upper(&derive(&s, 1).unwrap(), PNorm::Inf, &opts(3)).unwrap();
    let values: Vec<f64> = b.per_depth.iter().map(|(_, r)| r.to_f64()).collect();
    assert_eq!(b.per_depth[0].1.base, rat(3, 4));
    assert_eq!(b.per_depth[1].1.base, rat(1, 2));
    assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{values:?}");
    assert!(b.lower <= b.upper_f64() + 1e-12);
}

#[test]
fn certificates_for_both_builtins() {
    let hex = certify(&SchemeSpec::builtin("hexagonal").unwrap(), PNorm::Inf, 1, &opts(2)).unwrap();
    assert!(hex.lp_convergent.as_ref().unwrap().convergent);
    assert!((hex.holder.as_ref().unwrap().s - 0.25).abs() < 1e-12);

    let quin = certify(&SchemeSpec::builtin("quincunx").unwrap(), PNorm::Inf, 1, &opts(2)).unwrap();
    assert!(!quin.lp_convergent.as_ref().unwrap().convergent);
    assert!(quin.holder.is_none());

    // L^1 convergence compares against m = 2
    let quin1 = certify(&SchemeSpec::builtin("quincunx").unwrap(), PNorm::One, 1, &opts(2)).unwrap();
    let verdict = quin1.lp_convergent.as_ref().unwrap();
    assert_eq!(verdict.convergent, verdict.margin > 0.0, "{verdict:?}");
}

#[test]
fn radius_inequality_holds_for_builtins() {
    for name in ["hexagonal", "quincunx"] {
        let s = SchemeSpec::builtin(name).unwrap();
        let r = radius_inequality_check(&s, PNorm::Inf, 1, &opts(2)).unwrap();
        assert!(r.consistent, "{name}: {r:?}");
    }
}

#[test]
fn no_difference_scheme_beyond_reproduction() {
    let m = DilationMatrix::scalar(2, 2).unwrap();
    let rule = StencilRule::from_ints(&[&[0, 0], &[1, 0]], &[(1, 3), (2, 3)]).unwrap();
    let s = SchemeSpec::new(
        "skew",
        m.clone(),
        m.cosets().representatives().iter().map(|e| (e.clone(), vec![rule.clone()])).collect(),
        false,
        Selector::EnoMinDiff,
    )
    .unwrap();
    assert_eq!(reproduction_degree(&s, 2, true).degree, 0);
    assert!(derive(&s, 1).is_ok());
    assert!(matches!(derive(&s, 3), Err(Error::NoDifferenceScheme { .. })));
}

#[test]
fn scalar_types_agree() {
    let s = SchemeSpec::builtin("hexagonal").unwrap();
    let exact: ExactSequence = LatticeSequence::from_fn(&[0, 0], &[2, 2], |k| rat(k[0] * 3 - k[1], 4));
    let double: FloatSequence = exact.to_f64();
    let single: Float32Sequence = exact.map(|x| latsub_core::scalar::to_f64(x) as f32);
    let (a, b, c) = (s.apply(&exact).unwrap(), s.apply(&double).unwrap(), s.apply(&single).unwrap());
    for (k, x) in a.iter() {
        let x = latsub_core::scalar::to_f64(x);
        assert!((b.get(k) - x).abs() < 1e-12);
        assert!((f64::from(c.get(k)) - x).abs() < 1e-5);
    }
}

#[test]
fn rendering_constant_data_gives_one() {
    let s = SchemeSpec::builtin("quincunx").unwrap();
    let v0: FloatSequence = LatticeSequence::from_fn(&[-6, -6], &[6, 6], |_| 1.0);
    let state = cascade(&s, &v0, 3).unwrap();
    for basis in [Basis::Hat, Basis::BoxSpline(BoxSpline::courant())] {
        let grid = GridSpec::new(vec![-0.5, -0.5], vec![0.5, 0.5], vec![9, 9]).unwrap();
        let field = render(&state, 3, &basis, &grid).unwrap();
        assert!(field.values.iter().all(|v| (v - 1.0).abs() < 1e-9), "{}", basis.name());
    }
}

#[test]
fn cascade_respects_memory_budget() {
    let s = SchemeSpec::builtin("hexagonal").unwrap();
    let v0: ExactSequence = LatticeSequence::from_fn(&[0, 0], &[3, 3], |_| rat_int(1));
    match cascade_with_budget(&s, &v0, 8, 5_000) {
        Err(Error::MemoryBudget { level, feasible }) => assert_eq!(feasible + 1, level),
        other => panic!("expected a memory budget error, got {other:?}"),
    }
}

#[test]
fn sobolev_decay_needs_isotropy() {
    let m = DilationMatrix::new(vec![vec![2, 0], vec![0, 3]]).unwrap();
    let rule = StencilRule::identity(2);
    let s = SchemeSpec::new(
        "aniso",
        m.clone(),
        m.cosets().representatives().iter().map(|e| (e.clone(), vec![rule.clone()])).collect(),
        false,
        Selector::EnoMinDiff,
    )
    .unwrap();
    let v0: FloatSequence = LatticeSequence::delta(2, &[0, 0]);
    let mu: MultiIndex = [0u32, 0].into_iter().collect();
    let r = sobolev_decay(&s, &v0, 2, &Basis::Hat, &mu, PNorm::Two, vec![8, 8]);
    assert!(matches!(r, Err(Error::NotApplicable(_))));
}
