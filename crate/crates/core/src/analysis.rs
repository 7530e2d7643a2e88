//! Closed-form growth of simple scalar butterflies, the monotone angle
//! normal form, the growth-factor distribution, and the GECP permutation
//! alignment experiment.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::butterfly::{build, reduce_angle, sample, AngleVector, ButterflyKind};
use crate::elimination::{
    factorize, factorize_traced, gecp_candidates, growth_factor_max, is_monotone, PivotStrategy,
    EPS_MACHINE,
};
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::trial_rng;

fn check_angles(theta: &AngleVector) -> Result<()> {
    if theta.kind() != ButterflyKind::ScalarSimple {
        return Err(Error::Argument(format!(
            "expected a scalar_simple angle vector, got {}",
            theta.kind()
        )));
    }
    for (index, &angle) in theta.angles().iter().enumerate() {
        let (s, c) = angle.sin_cos();
        if s.abs() < EPS_MACHINE || c.abs() < EPS_MACHINE {
            return Err(Error::DegenerateAngle { index, angle });
        }
    }
    Ok(())
}

/// GEPP (and GERP) growth factor of `B(θ)`:
/// `∏ (1 + min(|tan θ_j|, |cot θ_j|)²)`.
pub fn predicted_growth(theta: &AngleVector) -> Result<f64> {
    check_angles(theta)?;
    Ok(theta
        .angles()
        .iter()
        .map(|a| {
            let t = a.tan().abs();
            let m = t.min(1.0 / t);
            1.0 + m * m
        })
        .product())
}

/// `θ` if `|tan θ| <= 1`, else `π/2 - θ` reduced into `[0, 2π)`.
pub fn fold_angle(theta: f64) -> f64 {
    if theta.tan().abs() <= 1.0 {
        theta
    } else {
        reduce_angle(FRAC_PI_2 - theta)
    }
}

/// Folds every angle to `|tan| <= 1` and sorts by `|tan|` descending, so that
/// `|tan θ̃_(j+1)| <= |tan θ̃_j| <= 1`.
pub fn monotone_reorder(theta: &AngleVector) -> Result<AngleVector> {
    check_angles(theta)?;
    let mut folded: Vec<f64> = theta.angles().iter().map(|&a| fold_angle(a)).collect();
    folded.sort_by(|a, b| b.tan().abs().total_cmp(&a.tan().abs()));
    AngleVector::scalar_simple(folded)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LawScheme {
    Genp,
    GeppOrGerp,
}

/// Law of `∏_{j=1}^{n} (1 + Y_j²)`: `Y_j ~ |Cauchy(1)|` for GENP and
/// `|Cauchy(1)|` conditioned on `Y_j <= 1` for GEPP/GERP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthLaw {
    pub scheme: LawScheme,
    pub n: u32,
}

pub fn sample_growth_law<R: Rng + ?Sized>(law: GrowthLaw, rng: &mut R) -> f64 {
    (0..law.n)
        .map(|_| {
            let y = loop {
                let y = rng.gen_range(-FRAC_PI_2..FRAC_PI_2).tan().abs();
                if law.scheme == LawScheme::Genp || y <= 1.0 {
                    break y;
                }
            };
            1.0 + y * y
        })
        .product()
}

/// `v` with `v_l = θ̃_σ(l)`.
pub fn rearrange(theta_tilde: &AngleVector, sigma: &Permutation) -> Result<AngleVector> {
    let n = theta_tilde.angles().len();
    if sigma.size() != n || theta_tilde.kind() != ButterflyKind::ScalarSimple {
        return Err(Error::Dimension(format!(
            "rearrangement of size {} for {} scalar_simple angles",
            sigma.size(),
            n
        )));
    }
    AngleVector::scalar_simple(
        (0..n)
            .map(|l| theta_tilde.angles()[sigma.apply(l)])
            .collect(),
    )
}

/// Index permutation `f` moving bit `l` to bit `σ(l)`, so that
/// `P_f B(rearrange(θ̃, σ)) P_fᵀ = B(θ̃)`. It is a product of layer shuffles
/// `I ⊗ Q_2 ⊗ I`.
pub fn rearrangement_shuffle(sigma: &Permutation) -> Permutation {
    let n = sigma.size();
    let map = (0..1usize << n)
        .map(|i| {
            (0..n)
                .filter(|&l| i >> l & 1 == 1)
                .fold(0, |acc, l| acc | 1 << sigma.apply(l))
        })
        .collect();
    Permutation::from_map(map).expect("bit relabelling is a bijection")
}

/// Predicted GECP factors of `B(rearrange(θ̃, σ))`: `P = P_B̃ ∘ f` and
/// `Q = f⁻¹`, where `P_B̃` is the GEPP row permutation of `B(θ̃)`.
pub fn predicted_gecp_permutations(
    theta_tilde: &AngleVector,
    sigma: &Permutation,
) -> Result<(Permutation, Permutation)> {
    check_angles(theta_tilde)?;
    if !is_monotone(theta_tilde, 1e-12) {
        return Err(Error::Argument(
            "θ̃ must satisfy |tan θ̃_(j+1)| <= |tan θ̃_j| <= 1".into(),
        ));
    }
    if sigma.size() != theta_tilde.angles().len() {
        return Err(Error::Dimension(format!(
            "rearrangement of size {} for {} angles",
            sigma.size(),
            theta_tilde.angles().len()
        )));
    }
    let f = rearrangement_shuffle(sigma);
    let p_b = factorize(&build(theta_tilde), PivotStrategy::gepp())?.p;
    Ok((p_b.compose(&f)?, f.inverse()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentRecord {
    pub trial: usize,
    pub n: u32,
    pub sigma: Permutation,
    pub p_matches_shuffle: bool,
    pub q_matches_shuffle: bool,
    /// First 1-based GECP step whose row or column transposition differs
    /// from the prediction.
    pub first_divergence: Option<usize>,
    /// Whether `ρ^GECP(B(σ(θ̃))) = ρ^GEPP(B(θ̃))` within `1e-10` relative.
    pub growth_matches: bool,
}

impl AlignmentRecord {
    pub fn matches(&self) -> bool {
        self.p_matches_shuffle && self.q_matches_shuffle
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentSummary {
    pub n: u32,
    pub rearrangements: usize,
    pub trials: usize,
    /// Rearrangements that mismatch in at least one trial.
    pub mismatch_count: usize,
    pub percent: f64,
    /// Mismatching (trial, rearrangement) pairs.
    pub mismatch_runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub records: Vec<AlignmentRecord>,
    pub summary: AlignmentSummary,
}

/// Outcome of GECP on one rearrangement of a monotone angle vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentCase {
    pub p: Permutation,
    pub q: Permutation,
    pub predicted_p: Permutation,
    pub predicted_q: Permutation,
    pub first_divergence: Option<usize>,
    /// 1-based `(row, col)` candidates at the first divergent step.
    pub divergence_candidates: Vec<(usize, usize)>,
    pub growth_gecp: f64,
    pub growth_gepp: f64,
}

/// Runs GECP with candidate tolerance `tol_mult` on `B(rearrange(θ̃, σ))` and
/// compares with [`predicted_gecp_permutations`].
pub fn alignment_case(
    theta_tilde: &AngleVector,
    sigma: &Permutation,
    tol_mult: Option<f64>,
) -> Result<AlignmentCase> {
    let (predicted_p, predicted_q) = predicted_gecp_permutations(theta_tilde, sigma)?;
    let v = rearrange(theta_tilde, sigma)?;
    let b = build(&v);
    let strategy = PivotStrategy::new(crate::elimination::PivotScheme::Gecp, tol_mult)?;
    let fact = factorize_traced(&b, strategy)?;
    let row_pred = predicted_p.swaps();
    let col_pred = predicted_q.inverse().swaps();
    let first = fact
        .pivot_log
        .iter()
        .zip(row_pred.iter().zip(&col_pred))
        .position(|(s, (&r, &c))| s.row_swap != r + 1 || s.col_swap != c + 1);
    let divergence_candidates = match (first, fact.trace.as_ref()) {
        (Some(k), Some(trace)) => gecp_candidates(&trace[k], k, tol_mult)
            .into_iter()
            .map(|(r, c)| (r + 1, c + 1))
            .collect(),
        _ => Vec::new(),
    };
    let bt = build(theta_tilde);
    let growth_gepp = growth_factor_max(&factorize(&bt, PivotStrategy::gepp())?, &bt);
    Ok(AlignmentCase {
        growth_gecp: growth_factor_max(&fact, &b),
        p: fact.p,
        q: fact.q,
        predicted_p,
        predicted_q,
        first_divergence: first.map(|k| k + 1),
        divergence_candidates,
        growth_gepp,
    })
}

fn monotone_sample(n: u32, seed: u64, trial: usize) -> AngleVector {
    let mut rng = trial_rng(seed, trial as u64);
    loop {
        if let Ok(t) = monotone_reorder(&sample(ButterflyKind::ScalarSimple, n, &mut rng)) {
            return t;
        }
    }
}

/// For each trial, samples `θ`, forms the monotone `θ̃`, and runs GECP on
/// every rearrangement `σ(θ̃)`. Trials run in parallel on independent
/// streams of `seed`.
pub fn alignment_experiment(
    n: u32,
    trials: usize,
    tol_mult: Option<f64>,
    seed: u64,
) -> Result<AlignmentReport> {
    if !(1..=7).contains(&n) {
        return Err(Error::Argument(format!(
            "alignment experiment needs 1 <= n <= 7, got {n}"
        )));
    }
    let sigmas = Permutation::all(n as usize);
    let per_trial: Vec<Vec<AlignmentRecord>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let theta_tilde = monotone_sample(n, seed, trial);
            sigmas
                .iter()
                .map(|sigma| {
                    let case = alignment_case(&theta_tilde, sigma, tol_mult)?;
                    Ok(AlignmentRecord {
                        trial,
                        n,
                        sigma: sigma.clone(),
                        p_matches_shuffle: case.p == case.predicted_p,
                        q_matches_shuffle: case.q == case.predicted_q,
                        first_divergence: case.first_divergence,
                        growth_matches: (case.growth_gecp - case.growth_gepp).abs()
                            <= 1e-10 * case.growth_gepp,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<AlignmentRecord> = per_trial.into_iter().flatten().collect();
    let mismatching: std::collections::BTreeSet<Vec<usize>> = records
        .iter()
        .filter(|r| !r.matches())
        .map(|r| r.sigma.map().to_vec())
        .collect();
    let mismatch_count = mismatching.len();
    let summary = AlignmentSummary {
        n,
        rearrangements: sigmas.len(),
        trials,
        mismatch_count,
        percent: 100.0 * mismatch_count as f64 / sigmas.len() as f64,
        mismatch_runs: records.iter().filter(|r| !r.matches()).count(),
    };
    Ok(AlignmentReport { records, summary })
}

/// Monotone angles with prescribed `|tan θ̃_j| = t_j` (descending in
/// `(0, 1]`) and random quadrant signs.
pub fn monotone_from_tangents<R: Rng + ?Sized>(
    tangents: &[f64],
    rng: &mut R,
) -> Result<AngleVector> {
    if tangents.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Argument("tangents must lie in (0, 1]".into()));
    }
    let angles = tangents
        .iter()
        .map(|&t| {
            let a = t.atan();
            match rng.gen_range(0..4) {
                0 => a,
                1 => PI - a,
                2 => PI + a,
                _ => -a,
            }
        })
        .collect();
    AngleVector::scalar_simple(angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elimination::{growth_factor_max, is_completely_pivoted};
    use crate::perm::{apply_permutations, perfect_shuffle};
    use crate::stats::ks_two_sample;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn equal_angles_give_order() {
        for n in 1..=8 {
            let theta = AngleVector::scalar_simple(vec![FRAC_PI_4; n]).unwrap();
            assert!((predicted_growth(&theta).unwrap() - (1u64 << n) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn sixth_turn_matches_gepp() {
        let theta = AngleVector::scalar_simple(vec![FRAC_PI_6]).unwrap();
        let b = build(&theta);
        let rho = growth_factor_max(&factorize(&b, PivotStrategy::gepp()).unwrap(), &b);
        assert!((predicted_growth(&theta).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((rho - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_angles_are_rejected() {
        for a in [0.0, FRAC_PI_2, PI] {
            let theta = AngleVector::scalar_simple(vec![0.3, a]).unwrap();
            assert!(matches!(
                predicted_growth(&theta),
                Err(Error::DegenerateAngle { index: 1, .. })
            ));
        }
    }

    #[test]
    fn prediction_matches_gepp_on_haar_butterflies() {
        let mut rng = trial_rng(20, 0);
        for n in 1..=8 {
            for _ in 0..10 {
                let theta = sample(ButterflyKind::ScalarSimple, n, &mut rng);
                let b = build(&theta);
                let rho = growth_factor_max(&factorize(&b, PivotStrategy::gepp()).unwrap(), &b);
                let p = predicted_growth(&theta).unwrap();
                assert!((rho - p).abs() <= 1e-10 * p, "n={n} {rho} vs {p}");
            }
        }
    }

    #[test]
    fn reorder_examples() {
        let t = AngleVector::scalar_simple(vec![FRAC_PI_4, FRAC_PI_6]).unwrap();
        assert_eq!(monotone_reorder(&t).unwrap(), t);
        let t = AngleVector::scalar_simple(vec![FRAC_PI_3]).unwrap();
        let r = monotone_reorder(&t).unwrap();
        assert!((r.angles()[0] - FRAC_PI_6).abs() < 1e-15);
        let t = AngleVector::scalar_simple(vec![FRAC_PI_6, FRAC_PI_4]).unwrap();
        let r = monotone_reorder(&t).unwrap();
        assert!((r.angles()[0] - FRAC_PI_4).abs() < 1e-15);
        assert!(monotone_reorder(&AngleVector::scalar_simple(vec![0.0]).unwrap()).is_err());
    }

    #[test]
    fn reordered_butterflies_are_completely_pivoted() {
        let mut rng = trial_rng(21, 0);
        for i in 0..200 {
            let n = 1 + i % 6;
            let theta = sample(ButterflyKind::ScalarSimple, n, &mut rng);
            let tilde = monotone_reorder(&theta).unwrap();
            assert!(is_monotone(&tilde, 0.0));
            let mins: Vec<f64> = tilde
                .angles()
                .iter()
                .map(|a| a.tan().abs().min(1.0 / a.tan().abs()))
                .collect();
            assert!(mins.windows(2).all(|w| w[1] <= w[0]));
            assert!(is_completely_pivoted(&build(&tilde), 1e3 * EPS_MACHINE));
            let p = predicted_growth(&theta).unwrap();
            assert!((predicted_growth(&tilde).unwrap() - p).abs() <= 1e-12 * p);
        }
    }

    #[test]
    fn law_support() {
        let mut rng = trial_rng(22, 0);
        assert_eq!(
            sample_growth_law(
                GrowthLaw {
                    scheme: LawScheme::Genp,
                    n: 0
                },
                &mut rng
            ),
            1.0
        );
        let mut max_genp = 0.0_f64;
        for _ in 0..2000 {
            let g = sample_growth_law(
                GrowthLaw {
                    scheme: LawScheme::GeppOrGerp,
                    n: 6,
                },
                &mut rng,
            );
            assert!((1.0..=64.0).contains(&g));
            let h = sample_growth_law(
                GrowthLaw {
                    scheme: LawScheme::Genp,
                    n: 6,
                },
                &mut rng,
            );
            assert!(h >= 1.0);
            max_genp = max_genp.max(h);
        }
        assert!(max_genp > 64.0);
    }

    #[test]
    fn law_matches_empirical_gepp() {
        let trials = 2000;
        let law = GrowthLaw {
            scheme: LawScheme::GeppOrGerp,
            n: 4,
        };
        let empirical: Vec<f64> = (0..trials)
            .map(|t| {
                let b = build(&sample(
                    ButterflyKind::ScalarSimple,
                    4,
                    &mut trial_rng(23, t),
                ));
                growth_factor_max(&factorize(&b, PivotStrategy::gepp()).unwrap(), &b)
            })
            .collect();
        let mut rng = trial_rng(24, 0);
        let draws: Vec<f64> = (0..trials)
            .map(|_| sample_growth_law(law, &mut rng))
            .collect();
        assert!(ks_two_sample(&empirical, &draws).unwrap().p_value > 0.01);
    }

    #[test]
    fn shuffle_conjugates_rearrangement() {
        let mut rng = trial_rng(25, 0);
        for n in 1..=5usize {
            let tilde =
                monotone_reorder(&sample(ButterflyKind::ScalarSimple, n as u32, &mut rng)).unwrap();
            for sigma in Permutation::all(n).iter().take(30) {
                let f = rearrangement_shuffle(sigma);
                let v = rearrange(&tilde, sigma).unwrap();
                let conj = apply_permutations(&f, &build(&v), &f.inverse()).unwrap();
                assert!(conj.max_abs_diff(&build(&tilde)).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn two_factor_swap_is_q2() {
        let swap = Permutation::from_map(vec![1, 0]).unwrap();
        let f = rearrangement_shuffle(&swap);
        assert_eq!(f.cycle_form(), "(2 3)");
        assert_eq!(f, perfect_shuffle(2, 4).unwrap());
        let tilde = AngleVector::scalar_simple(vec![0.7, 0.3]).unwrap();
        let (p, q) = predicted_gecp_permutations(&tilde, &swap).unwrap();
        assert_eq!(p.cycle_form(), "(2 3)");
        assert_eq!(q.cycle_form(), "(2 3)");
    }

    #[test]
    fn identity_rearrangement_predicts_gepp() {
        let tilde = AngleVector::scalar_simple(vec![0.7, 0.5, 0.2]).unwrap();
        let (p, q) = predicted_gecp_permutations(&tilde, &Permutation::identity(3)).unwrap();
        assert!(p.is_identity() && q.is_identity());
        let steep = AngleVector::scalar_simple(vec![0.2, 0.7]).unwrap();
        assert!(predicted_gecp_permutations(&steep, &Permutation::identity(2)).is_err());
    }

    #[test]
    fn small_orders_always_align() {
        for n in 1..=3 {
            let report = alignment_experiment(n, 5, Some(1e3), 2024).unwrap();
            assert_eq!(report.summary.mismatch_count, 0, "n={n}");
            assert!(report.records.iter().all(|r| r.growth_matches));
        }
        assert!(alignment_experiment(0, 1, None, 0).is_err());
    }

    #[test]
    fn order_sixteen_divergence_instance() {
        let sigma1 = "(12 14)(10 15)(8 10)(7 9)(6 14)(5 6)(4 13)(3 5)(2 9)";
        let rho = "(14 15)(12 15)(10 11)(8 14)(7 10)(6 10)(5 9)(4 13)(3 5)(2 9)";
        let sigma = Permutation::from_one_based(&[3, 4, 2, 1]).unwrap();
        assert_eq!(rearrangement_shuffle(&sigma).cycle_form(), rho);
        let mut rng = trial_rng(26, 0);
        for tangents in [
            [0.9, 0.6, 0.4, 0.2],
            [0.99, 0.8, 0.3, 0.05],
            [0.5, 0.45, 0.4, 0.35],
        ] {
            let tilde = monotone_from_tangents(&tangents, &mut rng).unwrap();
            let case = alignment_case(&tilde, &sigma, Some(1e3)).unwrap();
            assert_eq!(case.p.cycle_form(), sigma1);
            assert_eq!(case.q.inverse().cycle_form(), sigma1);
            assert_eq!(case.predicted_p.cycle_form(), rho);
            assert_eq!(case.first_divergence, Some(5));
            assert!(case.divergence_candidates.contains(&(6, 6)));
            assert!(case.divergence_candidates.contains(&(9, 9)));
            assert!((case.growth_gecp - case.growth_gepp).abs() <= 1e-10 * case.growth_gepp);
        }
    }

    proptest! {
        #[test]
        fn growth_is_symmetric(angles in proptest::collection::vec(0.01f64..6.27, 1..7), seed in 0u64..1000) {
            prop_assume!(angles.iter().all(|a| (a / FRAC_PI_2 - (a / FRAC_PI_2).round()).abs() > 1e-3));
            let theta = AngleVector::scalar_simple(angles.clone()).unwrap();
            let mut shuffled = angles;
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut trial_rng(seed, 0));
            let other = AngleVector::scalar_simple(shuffled).unwrap();
            let a = predicted_growth(&theta).unwrap();
            let b = predicted_growth(&other).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
    }
}
