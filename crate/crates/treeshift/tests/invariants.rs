//! Property tests for the algebraic invariants of the measure and
//! moment machinery.

mod common;

use proptest::prelude::*;
use treeshift::measure::Atom;
use treeshift::moments::{hankel_check, is_stieltjes_prefix, theta_lower_bound, MomentPrefix};
use treeshift::{Measure, Scalar};

/// Strategy: an exact atomic probability measure with `n` atoms at
/// distinct positive rational points.
fn atomic_probability(allow_zero: bool) -> impl Strategy<Value = Measure> {
    let point = (1i64..=40, 1i64..=8).prop_map(|(p, q)| (p, q));
    proptest::collection::btree_map(point, 1i64..=9, 1..=4).prop_map(move |m| {
        let total: i64 = m.values().sum();
        let mut atoms: Vec<Atom> = m
            .into_iter()
            .map(|((p, q), w)| Atom { point: Scalar::ratio(p, q), mass: Scalar::ratio(w, total) })
            .collect();
        if allow_zero && atoms.len() > 1 {
            atoms[0].point = Scalar::zero();
        }
        // distinct keys in the map can still collide as rationals; the
        // constructor keeps them separate, canonicalization merges them
        Measure::new(atoms, vec![]).unwrap().canonicalized(0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every measure in the class generates a prefix passing the
    /// Stieltjes test exactly.
    #[test]
    fn representing_measures_pass_stieltjes(mu in atomic_probability(true)) {
        let prefix = MomentPrefix::new(
            (0..=8).map(|n| mu.moment(n).finite().unwrap().clone()).collect(),
        )
        .unwrap();
        prop_assert!(is_stieltjes_prefix(&prefix, 0.0).unwrap().pass);
    }

    /// Moment shift: moments of the forward map are the shifted moments.
    /// The n = -1 case needs no mass at 0, since the forward map drops
    /// the origin atom that still counts toward the 0-th moment.
    #[test]
    fn forward_map_shifts_moments(nu in atomic_probability(true)) {
        let mapped = nu.forward_map();
        for n in 0..=6 {
            prop_assert_eq!(mapped.moment(n), nu.moment(n + 1));
        }
        if nu.mass_at_zero().is_zero() {
            prop_assert_eq!(mapped.moment(-1), nu.moment(0));
        }
    }

    /// Backward extension is a bijection onto measures of total mass
    /// theta with the deficit identity.
    #[test]
    fn backward_extension_bijection(mu in atomic_probability(false), extra in 0i64..=5, den in 1i64..=4) {
        let recip = mu.moment(-1).finite().unwrap().clone();
        let theta = &recip + &Scalar::ratio(extra, den);
        let nu = mu.backward_extend(&theta).unwrap();
        prop_assert_eq!(nu.total_mass(), theta.clone());
        prop_assert!(nu.forward_map().equal_to(&mu, 0.0));
        prop_assert_eq!(nu.mass_at_zero().is_zero(), extra == 0);

        // converse direction: normalizing the forward map and extending
        // by the matching theta recovers nu exactly, up to the shared
        // normalization
        let recovered = nu.forward_map();
        let t0 = recovered.total_mass();
        let renormalized = recovered.scaled(&t0.recip());
        let nu2 = renormalized.backward_extend(&(&theta / &t0)).unwrap();
        prop_assert!(nu2.equal_to(&nu.scaled(&t0.recip()), 0.0));
    }

    /// The theta lower bound never exceeds the reciprocal integral.
    #[test]
    fn theta_bound_below_integral(mu in atomic_probability(false)) {
        let prefix = MomentPrefix::new(
            (0..=9).map(|n| mu.moment(n).finite().unwrap().clone()).collect(),
        )
        .unwrap();
        let bound = theta_lower_bound(&prefix).unwrap();
        prop_assert!(bound <= mu.moment(-1));
    }

    /// Scaling covariance: replacing t_n by c^n t_n preserves both
    /// Hankel verdicts (diagonal congruence).
    #[test]
    fn hankel_scaling_covariance(
        values in proptest::collection::vec(0i64..=20, 1..=7),
        c_num in 1i64..=5,
        c_den in 1i64..=5,
    ) {
        let t = MomentPrefix::new(values.iter().map(|&v| Scalar::from_int(v)).collect()).unwrap();
        let c = Scalar::ratio(c_num, c_den);
        let scaled = MomentPrefix::new(
            values
                .iter()
                .enumerate()
                .map(|(n, &v)| &Scalar::from_int(v) * &c.powi(n as i32))
                .collect(),
        )
        .unwrap();
        for shift in 0..=1usize {
            if t.order() < shift {
                continue;
            }
            let a = hankel_check(&t, shift, 0.0).unwrap().passed();
            let b = hankel_check(&scaled, shift, 0.0).unwrap().passed();
            prop_assert_eq!(a, b);
        }
    }

    /// Shift necessity: a prefix passing both ladders has a shifted
    /// prefix passing at shift 0 with one order less.
    #[test]
    fn shift_necessity(mu in atomic_probability(true)) {
        let prefix = MomentPrefix::new(
            (0..=7).map(|n| mu.moment(n).finite().unwrap().clone()).collect(),
        )
        .unwrap();
        if is_stieltjes_prefix(&prefix, 0.0).unwrap().pass {
            let shifted = prefix.shifted().unwrap();
            prop_assert!(hankel_check(&shifted, 0, 0.0).unwrap().passed());
        }
    }

    /// Restricted mass grows monotonically to 1 and reaches it past the
    /// largest support point.
    #[test]
    fn restriction_mass_monotone(mu in atomic_probability(true)) {
        let mut last = Scalar::zero();
        for i in 0..=45 {
            let cut = Scalar::ratio(i, 1);
            let (_, mass) = mu.restrict_normalized(&cut);
            prop_assert!(mass >= last);
            last = mass;
        }
        prop_assert_eq!(last, Scalar::one());
    }
}
