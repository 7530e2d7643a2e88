use std::path::PathBuf;

use anyhow::{bail, Context as _};
use bfly_core::analysis::{alignment_experiment, monotone_reorder, AlignmentReport};
use bfly_core::butterfly::{build, lipschitz_check, sample};
use bfly_core::elimination::{
    factorize, growth_factor_inf, growth_factor_max, DEFAULT_PIVOT_TOL_MULT,
    DEFAULT_SPARSITY_TOL_MULT, EPS_MACHINE,
};
use bfly_core::rng::trial_rng;
use bfly_core::{ButterflyKind, DenseMatrix, GeFactorization, PivotScheme, PivotStrategy};
use rand::Rng;
use rayon::prelude::*;

use super::Context;
use crate::cli::{AlignArgs, ButterflyArgs, GrowthArgs, LipschitzArgs, SparsityArgs, Table1Args};
use crate::config::{check_n, pick, TolMult};
use crate::output::{flag, g, write, Csv};
use crate::{pbm, svg};

const DEFAULT_TOL: TolMult = TolMult::Mult(DEFAULT_PIVOT_TOL_MULT);

fn lehmer_digits(code: &[usize]) -> String {
    code.iter().map(|d| d.to_string()).collect()
}

fn table1_row(csv: &mut Csv, report: &AlignmentReport) {
    let s = &report.summary;
    csv.row(&[
        s.n.to_string(),
        s.rearrangements.to_string(),
        s.mismatch_count.to_string(),
        g(s.percent),
    ]);
}

const TABLE1_COLUMNS: [&str; 4] = ["n", "n_factorial", "mismatch_count", "percent"];

pub fn run_align(ctx: &Context, args: &AlignArgs) -> anyhow::Result<AlignmentReport> {
    let n = check_n(pick(args.n, ctx.file.n, 4), 1, 7, "align")?;
    let trials = pick(args.trials, ctx.file.trials, 5);
    let tol = pick(args.tol_mult, ctx.file.tol_mult, DEFAULT_TOL);
    let report = alignment_experiment(n, trials, tol.get(), ctx.seed)?;
    let mut csv = Csv::new(
        "table1-alignment",
        &["trial", "sigma_lehmer_code", "p_match", "q_match"],
    );
    for r in &report.records {
        csv.row(&[
            (r.trial + 1).to_string(),
            lehmer_digits(&r.sigma.lehmer_code()),
            flag(r.p_matches_shuffle).into(),
            flag(r.q_matches_shuffle).into(),
        ]);
    }
    write(&ctx.out, "align.csv", csv.into_string())?;
    let mut summary = Csv::new("table1", &TABLE1_COLUMNS);
    table1_row(&mut summary, &report);
    write(&ctx.out, "align_summary.csv", summary.into_string())?;
    let s = &report.summary;
    println!(
        "n={} rearrangements={} trials={} mismatching={} ({:.1}%) mismatching runs={}",
        s.n, s.rearrangements, s.trials, s.mismatch_count, s.percent, s.mismatch_runs
    );
    Ok(report)
}

pub fn run_table1(ctx: &Context, args: &Table1Args) -> anyhow::Result<Vec<AlignmentReport>> {
    let max_n = check_n(pick(args.max_n, ctx.file.max_n, 5), 1, 6, "table1")?;
    let trials = pick(args.trials, ctx.file.trials, 5);
    let tol = pick(args.tol_mult, ctx.file.tol_mult, DEFAULT_TOL);
    let mut csv = Csv::new("table1", &TABLE1_COLUMNS);
    let mut reports = Vec::new();
    for n in 1..=max_n {
        let report = alignment_experiment(n, trials, tol.get(), ctx.seed)?;
        table1_row(&mut csv, &report);
        println!(
            "n={n}: {} of {} rearrangements mismatch ({:.1}%)",
            report.summary.mismatch_count, report.summary.rearrangements, report.summary.percent
        );
        reports.push(report);
    }
    write(&ctx.out, "table1.csv", csv.into_string())?;
    Ok(reports)
}

/// A pivoting scheme as named on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NamedStrategy {
    pub label: &'static str,
    pub strategy: PivotStrategy,
}

pub fn parse_strategies(list: &str, tol: TolMult) -> anyhow::Result<Vec<NamedStrategy>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let named = match name.to_ascii_lowercase().as_str() {
            "gecp-notol" | "gecp_notol" => NamedStrategy {
                label: "gecp_notol",
                strategy: PivotStrategy::gecp(),
            },
            "gecp" | "gecp-tol" | "gecp_tol" => NamedStrategy {
                label: "gecp_tol",
                strategy: PivotStrategy::new(PivotScheme::Gecp, tol.get())?,
            },
            other => {
                let scheme: PivotScheme = other.parse()?;
                NamedStrategy {
                    label: scheme.as_str(),
                    strategy: PivotStrategy::plain(scheme),
                }
            }
        };
        if out.iter().any(|s: &NamedStrategy| s.label == named.label) {
            bail!("strategy {name} listed twice");
        }
        out.push(named);
    }
    if out.is_empty() {
        bail!("no strategies given");
    }
    Ok(out)
}

/// Per-trial growth factors; `rho[t][s]` and `rho_inf[t][s]` follow the strategy order.
pub struct GrowthTable {
    pub strategies: Vec<NamedStrategy>,
    pub rho: Vec<Vec<f64>>,
    pub rho_inf: Vec<Vec<f64>>,
}

impl GrowthTable {
    pub fn column(&self, s: usize, inf: bool) -> Vec<f64> {
        let rows = if inf { &self.rho_inf } else { &self.rho };
        rows.iter().map(|r| r[s]).collect()
    }
}

pub fn run_growth_hist(ctx: &Context, args: &GrowthArgs) -> anyhow::Result<GrowthTable> {
    let n = check_n(pick(args.n, ctx.file.n, 6), 1, 10, "growth-hist")?;
    let trials = pick(args.trials, ctx.file.trials, 500);
    let kind = pick(args.kind, ctx.file.kind, ButterflyKind::ScalarSimple);
    let tol = pick(args.tol_mult, ctx.file.tol_mult, DEFAULT_TOL);
    let list = pick(
        args.strategies.clone(),
        ctx.file.strategies.clone(),
        "gepp,gecp,gecp-notol".into(),
    );
    let strategies = parse_strategies(&list, tol)?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let b = build(&sample(kind, n, &mut trial_rng(ctx.seed, t as u64)));
            strategies
                .iter()
                .map(|s| match factorize(&b, s.strategy) {
                    Ok(f) => (growth_factor_max(&f, &b), growth_factor_inf(&f, &b)),
                    Err(_) => (f64::NAN, f64::NAN),
                })
                .unzip()
        })
        .collect();
    let (rho, rho_inf): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let table = GrowthTable {
        strategies,
        rho,
        rho_inf,
    };

    let mut columns = vec!["trial".to_string()];
    columns.extend(table.strategies.iter().map(|s| format!("rho_{}", s.label)));
    columns.extend(
        table
            .strategies
            .iter()
            .map(|s| format!("rhoinf_{}", s.label)),
    );
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut csv = Csv::new("fig-compare-hist", &refs);
    for t in 0..trials {
        let mut row = vec![(t + 1).to_string()];
        row.extend(table.rho[t].iter().map(|&v| g(v)));
        row.extend(table.rho_inf[t].iter().map(|&v| g(v)));
        csv.row(&row);
    }
    write(&ctx.out, "growth.csv", csv.into_string())?;
    for (inf, name, label) in [
        (false, "rho_hist.svg", "max-norm growth factor"),
        (true, "rho_inf_hist.svg", "infinity-norm growth factor"),
    ] {
        let cols: Vec<Vec<f64>> = (0..table.strategies.len())
            .map(|s| table.column(s, inf))
            .collect();
        let series: Vec<(&str, &[f64])> = table
            .strategies
            .iter()
            .zip(&cols)
            .map(|(s, c)| (s.label, c.as_slice()))
            .collect();
        let title = format!("{label}, {} {kind} trials, N = {}", trials, 1usize << n);
        write(&ctx.out, name, svg::histogram(&title, label, &series))?;
    }
    println!(
        "wrote growth.csv, rho_hist.svg, rho_inf_hist.svg ({trials} trials, N = {})",
        1usize << n
    );
    Ok(table)
}

/// Sparsity classification of one GECP run.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityRun {
    pub mode: &'static str,
    pub factorization: GeFactorization,
    pub lu_pattern: Vec<bool>,
}

impl SparsityRun {
    pub fn set_pixels(&self) -> usize {
        self.lu_pattern.iter().filter(|&&b| b).count()
    }
}

fn lu_pattern(f: &GeFactorization, threshold: f64) -> Vec<bool> {
    let n = f.size();
    (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let v = if i > j { f.l.get(i, j) } else { f.u.get(i, j) };
            v.abs() > threshold
        })
        .collect()
}

fn count_above(m: &DenseMatrix, threshold: f64, keep: impl Fn(usize, usize) -> bool) -> usize {
    (0..m.rows())
        .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
        .filter(|&(i, j)| keep(i, j) && m.get(i, j).abs() > threshold)
        .count()
}

pub fn run_sparsity(ctx: &Context, args: &SparsityArgs) -> anyhow::Result<Vec<SparsityRun>> {
    let mut theta = ctx.angles(&args.source, 6, 12)?;
    if args.monotone || ctx.file.monotone.unwrap_or(false) {
        theta = monotone_reorder(&theta)?;
    }
    let pivot_tol = pick(
        args.tol_mult,
        ctx.file.tol_mult.and_then(TolMult::get),
        DEFAULT_PIVOT_TOL_MULT,
    );
    let sparsity_tol = pick(
        args.sparsity_tol_mult,
        ctx.file.sparsity_tol_mult,
        DEFAULT_SPARSITY_TOL_MULT,
    );
    if !(sparsity_tol.is_finite() && sparsity_tol >= 0.0) {
        bail!("sparsity tolerance must be finite and non-negative");
    }
    let threshold = sparsity_tol * EPS_MACHINE;
    let b = build(&theta);
    let order = b.rows();
    let mut runs = Vec::new();
    for (mode, strategy) in [
        (
            "tol",
            PivotStrategy::new(PivotScheme::Gecp, Some(pivot_tol))?,
        ),
        ("notol", PivotStrategy::gecp()),
    ] {
        let f = factorize(&b, strategy)?;
        let dir: PathBuf = ctx.out.join(mode);
        let pattern = lu_pattern(&f, threshold);
        write(
            &dir,
            "LU.pbm",
            pbm::encode(order, order, |i, j| pattern[i * order + j]),
        )?;
        for (name, p) in [("P.pbm", &f.p), ("Q.pbm", &f.q)] {
            let m = p.to_matrix();
            write(
                &dir,
                name,
                pbm::encode(order, order, |i, j| m.get(i, j) != 0.0),
            )?;
        }
        let nnz_l = count_above(&f.l, threshold, |i, j| i > j);
        let nnz_u = count_above(&f.u, threshold, |i, j| i <= j);
        let symmetric = (0..order).all(|i| {
            (0..i).all(|j| (f.l.get(i, j).abs() > threshold) == (f.u.get(j, i).abs() > threshold))
        });
        let mut csv = Csv::new(
            "fig-sparsity",
            &[
                "mode",
                "order",
                "pivot_tol_mult",
                "sparsity_tol_mult",
                "nnz_l",
                "nnz_u",
                "nnz_lu",
                "p_identity",
                "q_identity",
                "l_ut_pattern_symmetric",
                "rho",
            ],
        );
        csv.row(&[
            mode.to_string(),
            order.to_string(),
            if mode == "tol" {
                g(pivot_tol)
            } else {
                "none".into()
            },
            g(sparsity_tol),
            nnz_l.to_string(),
            nnz_u.to_string(),
            (nnz_l + nnz_u).to_string(),
            flag(f.p.is_identity()).into(),
            flag(f.q.is_identity()).into(),
            flag(symmetric).into(),
            g(growth_factor_max(&f, &b)),
        ]);
        write(&dir, "factors.csv", csv.into_string())?;
        println!(
            "{mode}: N = {order}, {} nonzeros in L+U, P identity {}, Q identity {}",
            nnz_l + nnz_u,
            f.p.is_identity(),
            f.q.is_identity()
        );
        runs.push(SparsityRun {
            mode,
            factorization: f,
            lu_pattern: pattern,
        });
    }
    Ok(runs)
}

/// One Lipschitz trial: `‖B(θ) - B(θ+ε)‖_F` against `C‖ε‖₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzRow {
    pub kind: ButterflyKind,
    pub n: u32,
    pub eps_norm: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn lipschitz_rows(
    kind: ButterflyKind,
    max_n: u32,
    trials: usize,
    seed: u64,
) -> anyhow::Result<Vec<LipschitzRow>> {
    let stream_base = (kind as u64) << 32;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, stream_base + t as u64);
            let n = 1 + (t as u32 % max_n);
            let theta = sample(kind, n, &mut rng);
            let scale = 10f64.powf(rng.gen_range(-6.0..1.0));
            let eps: Vec<f64> = (0..theta.angles().len())
                .map(|_| scale * rng.gen_range(-1.0..1.0))
                .collect();
            let r = lipschitz_check(&theta, &eps)?;
            Ok(LipschitzRow {
                kind,
                n,
                eps_norm: eps.iter().map(|e| e * e).sum::<f64>().sqrt(),
                lhs: r.lhs,
                rhs: r.rhs,
                holds: r.holds,
            })
        })
        .collect()
}

pub fn run_lipschitz(ctx: &Context, args: &LipschitzArgs) -> anyhow::Result<bool> {
    let max_n = check_n(pick(args.n, ctx.file.n, 5), 1, 8, "lipschitz")?;
    let trials = pick(args.trials, ctx.file.trials, 1000);
    let kinds: Vec<ButterflyKind> = match args.kind.or(ctx.file.kind) {
        Some(k) => vec![k],
        None => ButterflyKind::ALL.to_vec(),
    };
    let mut csv = Csv::new(
        "lipschitz",
        &["trial", "kind", "n", "eps_norm", "lhs", "rhs", "holds"],
    );
    let mut all_hold = true;
    for kind in kinds {
        let rows = lipschitz_rows(kind, max_n, trials, ctx.seed)?;
        let violations = rows.iter().filter(|r| !r.holds).count();
        all_hold &= violations == 0;
        for (t, r) in rows.iter().enumerate() {
            csv.row(&[
                (t + 1).to_string(),
                kind.to_string(),
                r.n.to_string(),
                g(r.eps_norm),
                g(r.lhs),
                g(r.rhs),
                flag(r.holds).into(),
            ]);
        }
        println!("{kind}: {violations} violations in {trials} trials");
    }
    write(&ctx.out, "lipschitz.csv", csv.into_string())?;
    Ok(all_hold)
}

pub fn run_butterfly(ctx: &Context, args: &ButterflyArgs) -> anyhow::Result<PathBuf> {
    let theta = ctx.angles(&args.source, 3, 12)?;
    let json = serde_json::to_string_pretty(&theta).context("serializing angles")?;
    let path = write(&ctx.out, "theta.json", json + "\n")?;
    if args.matrix {
        let mut text = String::from("# butterfly\n");
        text.push_str(&build(&theta).to_csv());
        write(&ctx.out, "butterfly.csv", text)?;
    }
    println!(
        "{} butterfly of order {} written to {}",
        theta.kind(),
        theta.order(),
        path.display()
    );
    Ok(path)
}
