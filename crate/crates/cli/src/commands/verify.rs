use bfly_core::analysis::{alignment_experiment, monotone_reorder, predicted_growth};
use bfly_core::butterfly::{build, fast_apply, sample};
use bfly_core::elimination::{
    factorize, factorize_traced, growth_factor_max, intermediate_oracle, verify_gecp_inequality,
    DEFAULT_PIVOT_TOL_MULT,
};
use bfly_core::hadamard::{butterfly_hadamard, count_hadamard, enumerate_hadamard};
use bfly_core::rng::trial_rng;
use bfly_core::{AngleVector, ButterflyKind, DenseMatrix, PivotScheme, PivotStrategy};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::experiments::lipschitz_rows;
use super::Context;
use crate::cli::VerifyArgs;
use crate::config::{pick, TolMult};
use crate::output::write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// A documented disagreement with a closed-form count; fails only in strict mode.
    KnownDiscrepancy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Property {
    pub name: String,
    pub status: Status,
    pub samples: usize,
    pub failures: usize,
    pub detail: String,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub trials: usize,
    pub tol_mult: Option<f64>,
    pub strict: bool,
    pub passed: bool,
    pub properties: Vec<Property>,
}

fn property(name: &str, samples: usize, failures: usize, detail: String) -> Property {
    let warnings = if samples == 0 {
        vec!["zero samples: property holds vacuously".to_string()]
    } else {
        Vec::new()
    };
    Property {
        name: name.into(),
        status: if failures == 0 {
            Status::Pass
        } else {
            Status::Fail
        },
        samples,
        failures,
        detail,
        warnings,
    }
}

/// Runs `check` on every trial; each returns whether it held and a deviation.
fn sweep<F>(name: &str, trials: usize, label: &str, check: F) -> Property
where
    F: Fn(u64) -> bfly_core::Result<(bool, f64)> + Sync,
{
    let results: Vec<bfly_core::Result<(bool, f64)>> =
        (0..trials as u64).into_par_iter().map(&check).collect();
    let mut failures = 0;
    let mut worst = 0.0_f64;
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok((held, dev)) => {
                failures += usize::from(!held);
                worst = worst.max(dev);
            }
            Err(e) => {
                failures += 1;
                errors.push(e.to_string());
            }
        }
    }
    let mut p = property(name, trials, failures, format!("{label} {worst:.3e}"));
    errors.truncate(3);
    p.warnings.extend(errors);
    p
}

fn monotone(n: u32, seed: u64, trial: u64) -> AngleVector {
    let mut rng = trial_rng(seed, trial);
    loop {
        if let Ok(t) = monotone_reorder(&sample(ButterflyKind::ScalarSimple, n, &mut rng)) {
            return t;
        }
    }
}

fn kind_for(t: u64) -> ButterflyKind {
    ButterflyKind::ALL[(t % 4) as usize]
}

pub fn run_verify(ctx: &Context, args: &VerifyArgs) -> anyhow::Result<Report> {
    let trials = pick(args.trials, ctx.file.trials, 200);
    let tol = pick(
        args.tol_mult,
        ctx.file.tol_mult,
        TolMult::Mult(DEFAULT_PIVOT_TOL_MULT),
    )
    .get();
    let strict = args.strict || ctx.file.strict.unwrap_or(false);
    let seed = ctx.seed;
    let gecp = PivotStrategy::new(PivotScheme::Gecp, tol)?;
    let mut props = Vec::new();

    props.push(sweep("orthogonality", trials, "max |BᵀB - I| =", |t| {
        let theta = sample(kind_for(t), 1 + (t % 6) as u32, &mut trial_rng(seed, t));
        let b = build(&theta);
        let dev = b
            .transpose()
            .matmul(&b)?
            .max_abs_diff(&DenseMatrix::identity(b.rows()))?;
        Ok((dev <= 1e-12, dev))
    }));

    props.push(sweep("fast_apply", trials, "max |fast - dense| =", |t| {
        let mut rng = trial_rng(seed.wrapping_add(1), t);
        let theta = sample(kind_for(t), 1 + (t % 8) as u32, &mut rng);
        let x: Vec<f64> = (0..theta.order())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let fast = fast_apply(&theta, &x)?;
        let dense = build(&theta).mul_vec(&x)?;
        let dev = fast
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((dev <= 1e-12, dev))
    }));

    props.push(sweep(
        "closed_form_growth",
        trials,
        "max relative error",
        |t| {
            let theta = sample(
                ButterflyKind::ScalarSimple,
                1 + (t % 8) as u32,
                &mut trial_rng(seed.wrapping_add(2), t),
            );
            let b = build(&theta);
            let predicted = predicted_growth(&theta)?;
            let rel = (growth_factor_max(&factorize(&b, PivotStrategy::gepp())?, &b) - predicted)
                .abs()
                / predicted;
            Ok((rel <= 1e-10, rel))
        },
    ));

    props.push(sweep(
        "completely_pivoted_monotone",
        trials,
        "max |LU - LU_genp| =",
        |t| {
            let b = build(&monotone(2 + (t % 7) as u32, seed.wrapping_add(3), t));
            let cp = factorize(&b, gecp)?;
            let np = factorize(&b, PivotStrategy::genp())?;
            let dev = cp.l.max_abs_diff(&np.l)?.max(cp.u.max_abs_diff(&np.u)?);
            Ok((
                cp.p.is_identity() && cp.q.is_identity() && dev <= 1e-10,
                dev,
            ))
        },
    ));

    props.push(sweep("oracle_match", trials, "max deviation", |t| {
        let theta = monotone(1 + (t % 5) as u32, seed.wrapping_add(4), t);
        let f = factorize_traced(&build(&theta), PivotStrategy::genp())?;
        let mut dev = 0.0_f64;
        for (k, w) in f.trace.unwrap_or_default().iter().enumerate() {
            dev = dev.max(intermediate_oracle(&theta, k + 1)?.max_abs_diff(w)?);
        }
        Ok((dev <= 1e-12, dev))
    }));

    props.push(sweep(
        "gecp_inequality",
        trials,
        "max violation / ‖B‖ =",
        |t| {
            let theta = monotone(1 + (t % 5) as u32, seed.wrapping_add(5), t);
            let mut rng = trial_rng(seed.wrapping_add(6), t);
            let eta = rng.gen_range(-4.0..4.0);
            let eps = rng.gen_range(0.0..=1.0) * eta / 2.0;
            let k = rng.gen_range(1..=theta.order());
            let r = verify_gecp_inequality(&theta, eta, eps, k)?;
            let violation = ((r.lhs - r.rhs) / build(&theta).max_norm()).max(0.0);
            Ok((violation <= 1e-12, violation))
        },
    ));

    {
        let mut samples = 0;
        let mut failures = 0;
        let mut worst = 0.0_f64;
        for kind in ButterflyKind::ALL {
            let rows = lipschitz_rows(kind, 5, trials, seed)?;
            samples += rows.len();
            failures += rows.iter().filter(|r| !r.holds).count();
            worst = rows
                .iter()
                .filter(|r| r.rhs > 0.0)
                .fold(worst, |m, r| m.max(r.lhs / r.rhs));
        }
        props.push(property(
            "lipschitz",
            samples,
            failures,
            format!("max lhs/rhs {worst:.4}"),
        ));
    }

    {
        let mut failures = 0;
        for n in 1..=6usize {
            let h = butterfly_hadamard(&AngleVector::scalar_simple(
                vec![std::f64::consts::FRAC_PI_4; n],
            )?)?;
            let a = h.to_dense();
            let rho = growth_factor_max(&factorize(&a, gecp)?, &a);
            failures += usize::from(!(h.verify() && rho == (1u64 << n) as f64));
        }
        props.push(property(
            "maximal_growth_hadamard",
            6,
            failures,
            "ρ^GECP = N for n <= 6".into(),
        ));
    }

    {
        let runs = trials.min(5);
        let mut samples = 0;
        let mut failures = 0;
        let mut parts = Vec::new();
        for n in 1..=3 {
            let r = alignment_experiment(n, runs, tol, seed)?;
            samples += r.records.len();
            failures += r.summary.mismatch_runs;
            parts.push(format!("n={n}: {} mismatching", r.summary.mismatch_count));
        }
        props.push(property(
            "alignment_small_orders",
            samples,
            failures,
            parts.join(", "),
        ));
    }

    {
        let cases = ButterflyKind::ALL.iter().map(|&k| (k, 2)).chain([
            (ButterflyKind::ScalarSimple, 3),
            (ButterflyKind::ScalarNonsimple, 3),
            (ButterflyKind::DiagonalSimple, 3),
        ]);
        let mut samples = 0;
        let mut inexact = 0;
        let mut discrepancies = Vec::new();
        let mut count_failures = 0;
        for (kind, n) in cases {
            let set = enumerate_hadamard(kind, n)?;
            samples += set.len();
            inexact += set.iter().filter(|h| !h.verify()).count();
            let formula = count_hadamard(kind, n).to_string();
            if formula != set.len().to_string() {
                discrepancies.push(format!(
                    "{kind} n={n}: enumerated {} vs formula {formula}",
                    set.len()
                ));
                if !kind.is_diagonal() {
                    count_failures += 1;
                }
            }
        }
        let mut p = property(
            "hadamard_enumeration",
            samples,
            inexact + count_failures,
            format!(
                "{} inexact matrices; {}",
                inexact,
                if discrepancies.is_empty() {
                    "all counts match".to_string()
                } else {
                    discrepancies.join("; ")
                }
            ),
        );
        if p.status == Status::Pass && !discrepancies.is_empty() {
            p.status = Status::KnownDiscrepancy;
            p.warnings.push(
                "diagonal-kind counts disagree with the closed-form formula; enumeration is exact"
                    .into(),
            );
        }
        props.push(p);
    }

    let passed = props.iter().all(|p| match p.status {
        Status::Pass => true,
        Status::KnownDiscrepancy => !strict,
        Status::Fail => false,
    });
    let report = Report {
        seed,
        trials,
        tol_mult: tol,
        strict,
        passed,
        properties: props,
    };
    for p in &report.properties {
        let status = match p.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::KnownDiscrepancy if strict => "FAIL",
            Status::KnownDiscrepancy => "KNOWN",
        };
        println!(
            "{status} {} ({} samples, {} failures): {}",
            p.name, p.samples, p.failures, p.detail
        );
        for w in &p.warnings {
            println!("     warning: {w}");
        }
    }
    write(
        &ctx.out,
        "report.json",
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    println!("verify: {}", if passed { "passed" } else { "failed" });
    Ok(report)
}
