//! Structural invariants that must hold across modules: probability
//! identities, information-theoretic orderings, quadrature stability, and
//! decoder threshold semantics.

use fpcap::capacity::{arcsine_expectation_n, joint_mi_rate, simple_mi};
use fpcap::channels::{AttackKind, CollusionChannel};
use fpcap::decode::{accuse_simple, joint_tuple_score, simple_llr_table, ScoreModel};
use fpcap::encode::{generate_code, BiasModel};
use fpcap::prob::{binary_entropy, kl_div};
use fpcap::sim::innocent_mgf_exact;
use fpcap::{Probability, RngStream};
use proptest::prelude::*;

fn p(v: f64) -> Probability {
    Probability::new(v).unwrap()
}

/// An arbitrary channel with the forced endpoints theta_0 = 0, theta_c = 1.
fn marking_channel(c: usize, interior: &[f64]) -> CollusionChannel {
    let mut thetas = Vec::with_capacity(c + 1);
    thetas.push(0.0);
    thetas.extend_from_slice(&interior[..c - 1]);
    thetas.push(1.0);
    CollusionChannel::custom(c, &thetas).unwrap()
}

proptest! {
    // The single-user conditionals must average back to the output marginal.
    #[test]
    fn marginal_identity_holds(
        c in 1usize..=8,
        interior in proptest::collection::vec(0.0f64..=1.0, 7),
        pv in 0.01f64..0.99,
    ) {
        let channel = marking_channel(c, &interior);
        let m = channel.marginals(p(pv)).unwrap();
        let recomposed = pv * m.a1.value() + (1.0 - pv) * m.a0.value();
        prop_assert!((m.a.value() - recomposed).abs() <= 1e-12,
            "a = {}, p*a1 + q*a0 = {}", m.a.value(), recomposed);
    }

    // The coalition jointly reveals at least as much as any single member.
    #[test]
    fn joint_rate_dominates_simple_rate(
        c in 1usize..=8,
        interior in proptest::collection::vec(0.0f64..=1.0, 7),
        pv in 0.01f64..0.99,
    ) {
        let channel = marking_channel(c, &interior);
        let single = simple_mi(&channel, p(pv)).unwrap();
        let joint = joint_mi_rate(&channel, p(pv)).unwrap();
        prop_assert!(c as f64 * joint >= single - 1e-10,
            "c*joint = {} < simple = {}", c as f64 * joint, single);
    }

    #[test]
    fn kl_divergence_is_nonnegative(q in 0.0f64..=1.0, r in 0.001f64..0.999) {
        prop_assert!(kl_div(p(q), p(r)) >= 0.0);
    }

    // Away from the edges the entropy is symmetric up to one rounding step
    // of 1 - x.
    #[test]
    fn entropy_complement_symmetry(x in 0.25f64..=0.75) {
        let diff = (binary_entropy(p(x)) - binary_entropy(p(1.0 - x))).abs();
        prop_assert!(diff <= 3e-16, "h({x}) differs by {diff}");
    }

    // Strictly-above-threshold semantics, exactly.
    #[test]
    fn accusation_threshold_is_strict(
        scores in proptest::collection::vec(-50.0f64..50.0, 1..40),
        eta in -50.0f64..50.0,
    ) {
        let res = accuse_simple(scores.clone(), eta);
        let expected: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter_map(|(j, &s)| (s > eta).then_some(j))
            .collect();
        prop_assert_eq!(res.accused, expected);
    }

    // An innocent user's exponentiated score has unit mean under any true
    // channel, for the universal score and for any matched likelihood score.
    #[test]
    fn innocent_score_mgf_is_unit(
        c in 2usize..=6,
        interior in proptest::collection::vec(0.0f64..=1.0, 5),
        true_interior in proptest::collection::vec(0.0f64..=1.0, 5),
        pv in 0.05f64..0.95,
    ) {
        let assumed = marking_channel(c, &interior);
        let truth = marking_channel(c, &true_interior);
        let m = innocent_mgf_exact(&ScoreModel::UniversalG { c }, &truth, p(pv)).unwrap();
        prop_assert!((m - 1.0).abs() <= 1e-12, "universal mgf = {m}");
        // The informed score table needs an interior assumed marginal.
        if assumed.marginals(p(pv)).unwrap().a.is_interior() {
            let m = innocent_mgf_exact(&ScoreModel::InformedLlr(assumed), &truth, p(pv)).unwrap();
            prop_assert!((m - 1.0).abs() <= 1e-12, "llr mgf = {m}");
        }
    }
}

#[test]
fn entropy_complement_exact_on_dyadic_inputs() {
    // 1 - k/2^20 is exact in binary floating point, so both entropy calls
    // see exactly complementary arguments and must agree bitwise.
    for k in (1u32..1 << 20).step_by(4097) {
        let x = f64::from(k) / f64::from(1u32 << 20);
        assert_eq!(
            binary_entropy(p(x)).to_bits(),
            binary_entropy(p(1.0 - x)).to_bits(),
            "x = {x}"
        );
    }
}

#[test]
fn symmetric_attacks_have_symmetric_information() {
    let cases: &[(AttackKind, &[usize])] = &[
        (AttackKind::Interleaving, &[2, 5, 8]),
        (AttackKind::CoinFlip, &[2, 5, 8]),
        (AttackKind::Majority, &[3, 5, 7]),
        (AttackKind::Minority, &[3, 5, 7]),
    ];
    for &(kind, cs) in cases {
        for &c in cs {
            let channel = CollusionChannel::attack(kind, c).unwrap();
            for &pv in &[0.07f64, 0.23, 0.4, 0.48] {
                let i_lo = simple_mi(&channel, p(pv)).unwrap();
                let i_hi = simple_mi(&channel, p(1.0 - pv)).unwrap();
                assert!((i_lo - i_hi).abs() <= 1e-12, "{kind} c={c} p={pv}: {i_lo} vs {i_hi}");
                let r_lo = joint_mi_rate(&channel, p(pv)).unwrap();
                let r_hi = joint_mi_rate(&channel, p(1.0 - pv)).unwrap();
                assert!((r_lo - r_hi).abs() <= 1e-12, "{kind} c={c} p={pv}: {r_lo} vs {r_hi}");
            }
        }
    }
}

#[test]
fn interleaving_information_approaches_its_limit_monotonically() {
    // |2 c^2 ln2 I(1/2) - 1| shrinks as c grows.
    let mut last = f64::INFINITY;
    for c in [10usize, 30, 100, 300] {
        let channel = CollusionChannel::attack(AttackKind::Interleaving, c).unwrap();
        let i = simple_mi(&channel, p(0.5)).unwrap();
        let dev = (2.0 * (c * c) as f64 * std::f64::consts::LN_2 * i - 1.0).abs();
        assert!(dev < last, "c={c}: deviation {dev} did not shrink from {last}");
        last = dev;
    }
}

#[test]
fn guilty_mean_score_equals_information_in_nats() {
    // For the matched likelihood score, E[g | guilty] is the per-user mutual
    // information converted to nats. Cells with zero conditional mass do not
    // contribute.
    let cases: &[(AttackKind, usize)] = &[
        (AttackKind::Interleaving, 2),
        (AttackKind::Interleaving, 7),
        (AttackKind::All1, 4),
        (AttackKind::Majority, 5),
        (AttackKind::Minority, 5),
        (AttackKind::CoinFlip, 3),
    ];
    for &(kind, c) in cases {
        let channel = CollusionChannel::attack(kind, c).unwrap();
        for &pv in &[0.15f64, 0.5, 0.81] {
            let m = channel.marginals(p(pv)).unwrap();
            let table = simple_llr_table(&channel, p(pv)).unwrap();
            let mut mean = 0.0;
            for (x, px, ay) in [(false, 1.0 - pv, m.a0.value()), (true, pv, m.a1.value())] {
                for (y, py) in [(false, 1.0 - ay), (true, ay)] {
                    if py > 0.0 {
                        mean += px * py * table.get(x, y);
                    }
                }
            }
            let info_nats = simple_mi(&channel, p(pv)).unwrap() * std::f64::consts::LN_2;
            assert!(
                (mean - info_nats).abs() <= 1e-10,
                "{kind} c={c} p={pv}: mean {mean} vs {info_nats}"
            );
        }
    }
}

#[test]
fn tuple_scores_ignore_member_order() {
    let biases: Vec<Probability> = [0.3, 0.62, 0.5, 0.41]
        .iter()
        .map(|&v| p(v))
        .collect();
    let code = generate_code(6, &biases, RngStream::new(77).substream(1)).unwrap();
    let y = vec![1u8, 0, 1, 1];
    let channel = CollusionChannel::attack(AttackKind::Interleaving, 3).unwrap();
    for model in [
        ScoreModel::JointLlr(channel),
        ScoreModel::JointUniversal { c: 3 },
    ] {
        let reference = joint_tuple_score(&code, &[0, 2, 5], &y, &model).unwrap();
        for perm in [[2usize, 0, 5], [5, 2, 0], [0, 5, 2]] {
            let s = joint_tuple_score(&code, &perm, &y, &model).unwrap();
            assert_eq!(s.to_bits(), reference.to_bits(), "{model:?} perm {perm:?}");
        }
    }
}

#[test]
fn bias_model_validation_rejects_degenerate_cutoffs() {
    assert!(BiasModel::ArcsineCutoff { delta: 0.0 }.validate().is_err());
    assert!(BiasModel::ArcsineCutoff { delta: 0.5 }.validate().is_err());
    assert!(BiasModel::ArcsineCutoff { delta: 1e-4 }.validate().is_ok());
}

fn quadrature_relative_shift(channel: &CollusionChannel, joint: bool) -> f64 {
    let payoff = |pv: Probability| {
        if joint {
            joint_mi_rate(channel, pv)
        } else {
            simple_mi(channel, pv)
        }
    };
    let coarse = arcsine_expectation_n(payoff, 2000).unwrap();
    let fine = arcsine_expectation_n(payoff, 4000).unwrap();
    ((coarse - fine) / fine).abs()
}

#[test]
fn quadrature_is_stable_under_doubling_small_c() {
    for kind in AttackKind::ALL {
        for (c, tol) in [(11usize, 1e-8), (101, 5e-7)] {
            let channel = CollusionChannel::attack(kind, c).unwrap();
            for joint in [false, true] {
                let shift = quadrature_relative_shift(&channel, joint);
                assert!(shift <= tol, "{kind} c={c} joint={joint}: shift {shift}");
            }
        }
    }
}

#[test]
fn quadrature_is_stable_under_doubling_large_c() {
    for kind in AttackKind::ALL {
        let channel = CollusionChannel::attack(kind, 1001).unwrap();
        for joint in [false, true] {
            let shift = quadrature_relative_shift(&channel, joint);
            assert!(shift <= 1e-5, "{kind} c=1001 joint={joint}: shift {shift}");
        }
    }
    // Even coalition sizes for the attacks that allow them.
    for kind in [AttackKind::Interleaving, AttackKind::All1, AttackKind::CoinFlip] {
        let channel = CollusionChannel::attack(kind, 1000).unwrap();
        for joint in [false, true] {
            let shift = quadrature_relative_shift(&channel, joint);
            assert!(shift <= 1e-5, "{kind} c=1000 joint={joint}: shift {shift}");
        }
    }
}
