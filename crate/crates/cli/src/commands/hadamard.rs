use std::fs;

use anyhow::{bail, Context as _};
use bfly_core::hadamard::{count_hadamard, enumerate_hadamard, sample_hadamard, HadamardMatrix};
use bfly_core::rng::trial_rng;
use bfly_core::{ButterflyKind, Error};

use super::Context;
use crate::cli::{HadamardAction, HadamardArgs};
use crate::config::{check_n, pick};
use crate::output::{flag, write, Csv};

pub fn run_hadamard(ctx: &Context, args: &HadamardArgs) -> anyhow::Result<bool> {
    match &args.action {
        HadamardAction::Sample { kind, n } => {
            let kind = pick(*kind, ctx.file.kind, ButterflyKind::ScalarSimple);
            let n = check_n(pick(*n, ctx.file.n, 3), 1, 12, "hadamard sample")?;
            let h = sample_hadamard(kind, n, &mut trial_rng(ctx.seed, 0));
            print!("{}", h.to_text());
            Ok(true)
        }
        HadamardAction::Enumerate {
            kind,
            n,
            write: dump,
        } => {
            let kind = pick(*kind, ctx.file.kind, ButterflyKind::ScalarSimple);
            let n = check_n(pick(*n, ctx.file.n, 2), 1, 12, "hadamard enumerate")?;
            let set = enumerate_hadamard(kind, n)?;
            let formula = count_hadamard(kind, n);
            let exact = set.iter().all(|h| h.verify());
            let mut csv = Csv::new(
                "hadamard-count",
                &[
                    "kind",
                    "n",
                    "inputs",
                    "distinct",
                    "formula",
                    "matches_formula",
                    "all_exact",
                ],
            );
            csv.row(&[
                kind.to_string(),
                n.to_string(),
                set.inputs().to_string(),
                set.len().to_string(),
                formula.to_string(),
                flag(formula.to_string() == set.len().to_string()).into(),
                flag(exact).into(),
            ]);
            print!("{}", csv.into_string());
            if *dump {
                let text: Vec<String> = set.iter().map(|h| h.to_text()).collect();
                write(
                    &ctx.out,
                    &format!("hadamard_{kind}_n{n}.txt"),
                    text.join("\n"),
                )?;
            }
            Ok(exact)
        }
        HadamardAction::Verify { input, kind } => {
            let text = fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))?;
            let h = match HadamardMatrix::from_text(&text) {
                Ok(h) => h,
                Err(Error::Argument(reason)) => {
                    println!("H Hᵀ = N I fails: {reason}");
                    return Ok(false);
                }
                Err(e) => return Err(e.into()),
            };
            println!("order {}: H Hᵀ = N I holds", h.order());
            let mut ok = h.verify();
            if let Some(kind) = kind.or(ctx.file.kind) {
                let order = h.order();
                if !order.is_power_of_two() || order < 2 {
                    bail!("order {order} is not a power of two of at least 2");
                }
                let set = enumerate_hadamard(kind, order.trailing_zeros())?;
                let member = set.contains(&h);
                println!("member of the {kind} family: {member}");
                ok &= member;
            }
            Ok(ok)
        }
    }
}
