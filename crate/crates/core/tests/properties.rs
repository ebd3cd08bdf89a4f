//! Invariants checked on random data.

use latsub_core::diffscheme::{derive, identity_holds_with};
use latsub_core::gridseq::box_points;
use latsub_core::lattice::{classify_isotropy, inf_norm_point, point, DEFAULT_Q_MAX};
use latsub_core::scalar::{rat, rat_int};
use latsub_core::scheme::eno_select;
use latsub_core::{DilationMatrix, LatticeSequence, Rational, SchemeSpec};
use proptest::prelude::*;

type Seq = LatticeSequence<Rational>;

fn scheme_name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("hexagonal"), Just("quincunx")]
}

fn data(r: i64) -> impl Strategy<Value = Seq> {
    let side = (2 * r + 1) as usize;
    proptest::collection::vec((-12i64..=12, 1i64..=5), side * side).prop_map(move |vals| {
        let pts = box_points(&[-r, -r], &[r, r]);
        LatticeSequence::from_entries(2, pts.into_iter().zip(vals).map(|(k, (p, q))| (k, rat(p, q)))).unwrap()
    })
}

fn dilation() -> impl Strategy<Value = DilationMatrix> {
    proptest::collection::vec(-3i64..=3, 4)
        .prop_filter_map("not a dilation", |e| DilationMatrix::new(vec![vec![e[0], e[1]], vec![e[2], e[3]]]).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cosets_partition_the_lattice(m in dilation(), k in proptest::collection::vec(-20i64..20, 2)) {
        let cosets = m.cosets();
        prop_assert_eq!(cosets.len() as i64, m.det().abs());
        let (n, i) = cosets.decompose(&k);
        prop_assert_eq!(cosets.compose(&n, i).to_vec(), k);
    }

    #[test]
    fn cyclic_class_is_exact(m in dilation()) {
        let info = classify_isotropy(&m, DEFAULT_Q_MAX);
        if let latsub_core::IsotropyKind::Cyclic { q, lambda, .. } = info.kind {
            let p = m.power(q);
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert_eq!(p.entries()[i][j], if i == j { lambda } else { 0 });
                }
            }
        }
    }

    #[test]
    fn constants_are_reproduced(name in scheme_name(), c in (-50i64..50, 1i64..9)) {
        let s = SchemeSpec::builtin(name).unwrap();
        let value = rat(c.0, c.1);
        let v = LatticeSequence::from_fn(&[-5, -5], &[5, 5], |_| value.clone());
        let out = s.apply(&v).unwrap();
        for n in box_points(&[-3, -3], &[3, 3]) {
            for i in 0..s.cosets().len() {
                prop_assert_eq!(out.get(&s.cosets().compose(&n, i)), value.clone());
            }
        }
    }

    #[test]
    fn interpolatory_schemes_keep_coarse_values(name in scheme_name(), v in data(3)) {
        let s = SchemeSpec::builtin(name).unwrap();
        let out = s.apply(&v).unwrap();
        for k in box_points(&[-3, -3], &[3, 3]) {
            prop_assert_eq!(out.get(&s.matrix().apply(&k)), v.get(&k));
        }
    }

    #[test]
    fn refinement_is_local(name in scheme_name(), v in data(6), w in data(6)) {
        let s = SchemeSpec::builtin(name).unwrap();
        let reach = s.offset_radius();
        let radius = 3;
        // w agrees with v on the ball of radius 3 and is arbitrary outside
        let mut mixed = v.clone();
        for k in box_points(&[-6, -6], &[6, 6]) {
            if inf_norm_point(&k) > radius {
                mixed.set(&k, w.get(&k));
            }
        }
        let (a, b) = (s.apply(&v).unwrap(), s.apply(&mixed).unwrap());
        for n in box_points(&[-(radius - reach); 2], &[radius - reach; 2]) {
            for i in 0..s.cosets().len() {
                let x = s.cosets().compose(&n, i);
                prop_assert_eq!(a.get(&x), b.get(&x));
            }
        }
    }

    #[test]
    fn difference_identity_for_random_choices(
        name in scheme_name(),
        w in data(3),
        l in 1u32..=2,
        salt in any::<u64>(),
    ) {
        let s = SchemeSpec::builtin(name).unwrap();
        let ds = derive(&s, l).unwrap();
        let counts: Vec<usize> = s.all_rules().iter().map(Vec::len).collect();
        let choose = |n: &[i64], i: usize| {
            let h = n.iter().fold(salt ^ (i as u64), |h, &c| h.rotate_left(17) ^ (c as u64).wrapping_mul(0x100_0000_01b3));
            (h % counts[i] as u64) as usize
        };
        prop_assert!(identity_holds_with(&s, &ds, &w, choose).unwrap());
    }

    // integer data keeps the ENO comparisons exact in floating point, so both pick the same rules
    #[test]
    fn float_and_exact_refinement_agree(name in scheme_name(), v in data(3)) {
        let v = v.map(|x| Rational::from_integer(x.to_integer()));
        let s = SchemeSpec::builtin(name).unwrap();
        let exact = s.apply(&v).unwrap();
        let float = s.apply(&v.to_f64()).unwrap();
        for (k, x) in exact.iter() {
            let x = latsub_core::scalar::to_f64(x);
            prop_assert!((float.get(k) - x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn eno_avoids_a_diagonal_jump() {
    let s = SchemeSpec::builtin("quincunx").unwrap();
    // jump across the anti-diagonal: k_1 + k_2 >= 1 has value 10
    let v = LatticeSequence::from_fn(&[-3, -3], &[3, 3], |k| if k[0] + k[1] >= 1 { rat_int(10) } else { rat_int(0) });
    assert_eq!(eno_select(&v, &[0, 0], s.rules(1)), 1);
    assert_eq!(s.select(&v, &point(&[0, 0]), 1).unwrap(), 1);
    // affine data ties and keeps the first rule
    let affine = LatticeSequence::from_fn(&[-3, -3], &[3, 3], |k| rat_int(2 * k[0] - k[1]));
    assert_eq!(eno_select(&affine, &[0, 0], s.rules(1)), 0);
}
