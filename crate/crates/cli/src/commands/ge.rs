use std::fs;

use anyhow::Context as _;
use bfly_core::butterfly::build;
use bfly_core::elimination::{
    factorize, growth_factor_inf, growth_factor_max, DEFAULT_PIVOT_TOL_MULT,
};
use bfly_core::{DenseMatrix, GeFactorization, PivotScheme, PivotStrategy};

use super::Context;
use crate::cli::{Emit, GeArgs};
use crate::config::{pick, TolMult};
use crate::output::{g, Csv};

/// Factors the input and returns the requested emission as text.
pub fn run_ge(ctx: &Context, args: &GeArgs) -> anyhow::Result<String> {
    let a = match &args.input {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            DenseMatrix::from_csv(&text)?
        }
        None => build(&ctx.angles(&args.source, 3, 10)?),
    };
    let scheme: PivotScheme = pick(
        args.strategy.clone(),
        ctx.file.strategy.clone(),
        "gecp".into(),
    )
    .parse()?;
    let default_tol = if scheme == PivotScheme::Gecp {
        TolMult::Mult(DEFAULT_PIVOT_TOL_MULT)
    } else {
        TolMult::Off
    };
    let tol = pick(args.tol_mult, ctx.file.tol_mult, default_tol);
    let strategy = PivotStrategy::new(scheme, tol.get())?;
    let fact = factorize(&a, strategy)?;
    Ok(match pick(args.emit, ctx.file.emit, Emit::Growth) {
        Emit::Factors => factors_csv(&fact),
        Emit::Pivots => pivots_jsonl(&fact)?,
        Emit::Growth => {
            let mut csv = Csv::new(
                "ge-growth",
                &["strategy", "tol_mult", "order", "rho", "rho_inf"],
            );
            csv.row(&[
                scheme.to_string(),
                tol.to_string(),
                a.rows().to_string(),
                g(growth_factor_max(&fact, &a)),
                g(growth_factor_inf(&fact, &a)),
            ]);
            csv.into_string()
        }
    })
}

/// Long-form `P A Q = L U`: permutations as `(i, σ(i))` entries, then every
/// entry of `L` and `U`. Indices are 1-based.
pub fn factors_csv(fact: &GeFactorization) -> String {
    let mut csv = Csv::new("ge-factors", &["factor", "row", "col", "value"]);
    for (name, p) in [("P", &fact.p), ("Q", &fact.q)] {
        let m = p.to_matrix();
        for i in 0..m.rows() {
            for j in (0..m.cols()).filter(|&j| m.get(i, j) != 0.0) {
                csv.row(&[
                    name.to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    "1".into(),
                ]);
            }
        }
    }
    for (name, m) in [("L", &fact.l), ("U", &fact.u)] {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                csv.row(&[
                    name.to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    g(m.get(i, j)),
                ]);
            }
        }
    }
    csv.into_string()
}

pub fn pivots_jsonl(fact: &GeFactorization) -> anyhow::Result<String> {
    let mut out = String::new();
    for step in &fact.pivot_log {
        out.push_str(&serde_json::to_string(step)?);
        out.push('\n');
    }
    Ok(out)
}
