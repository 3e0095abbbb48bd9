use clap::{Args, Subcommand};
use serde_json::json;

use finiteqp::linalg::C64;
use finiteqp::minunc::{scalar_relation_residuals, solve_minunc, verify_parallelism};

use crate::config::{ensure, pick, CliError};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct MinuncArgs {
    #[command(subcommand)]
    cmd: MinuncCmd,
}

#[derive(Debug, Subcommand)]
enum MinuncCmd {
    /// Eigenstates of lambda*A + i*B
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Dimension d [default: 3]
    #[arg(long)]
    dim: Option<usize>,
    /// First observable [default: Q]
    #[arg(long = "a-op")]
    a_op: Option<String>,
    /// Second observable [default: P]
    #[arg(long = "b-op")]
    b_op: Option<String>,
    /// Re(lambda), must be positive [default: 1]
    #[arg(long = "lambda-re", allow_negative_numbers = true)]
    lambda_re: Option<f64>,
    /// Im(lambda) [default: 0]
    #[arg(long = "lambda-im", allow_negative_numbers = true)]
    lambda_im: Option<f64>,
}

pub fn run(ctx: &Ctx, args: MinuncArgs) -> Result<Outcome, CliError> {
    let MinuncCmd::Solve(args) = args.cmd;
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let a_name = pick(args.a_op, ctx.file.a_op.clone(), "Q".into());
    let b_name = pick(args.b_op, ctx.file.b_op.clone(), "P".into());
    let a = super::named_operator(&pair, &a_name)?;
    let b = super::named_operator(&pair, &b_name)?;
    let lambda = C64::new(
        pick(args.lambda_re, ctx.file.lambda_re, 1.0),
        pick(args.lambda_im, ctx.file.lambda_im, 0.0),
    );
    ensure(
        lambda.re > 0.0,
        "lambda-re",
        "must be positive; eigenstates of A and of B cover the boundary cases",
    )?;
    let report = solve_minunc(&a, &b, lambda)?;
    let mut value = serde_json::to_value(report.to_json()).map_err(anyhow::Error::from)?;
    let checks = report
        .solutions
        .iter()
        .map(|s| {
            let (r1, r2) = scalar_relation_residuals(s);
            Ok(json!({
                "parallelism_residual": verify_parallelism(s, &a, &b)?,
                "scalar_relation_residuals": [r1, r2],
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    value["checks"] = json!(checks);
    let config = json!({
        "command": "minunc solve",
        "dim": d,
        "a_op": a_name,
        "b_op": b_name,
        "lambda_re": lambda.re,
        "lambda_im": lambda.im,
    });
    ctx.sink.emit_json(&value, &config)?;
    Ok(Outcome { converged: true })
}
