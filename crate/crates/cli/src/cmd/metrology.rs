use clap::{Args, Subcommand};
use serde_json::json;

use finiteqp::metrology::{accuracy_scan, mom_simulate_single, mom_simulate_split, optimize_a_d};
use finiteqp::states::{vacuum_d3, QuantumState};

use crate::config::{check_dim, ensure, pick, CliError};
use crate::output::{num, Table};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct MetrologyArgs {
    #[command(subcommand)]
    cmd: MetrologyCmd,
}

#[derive(Debug, Subcommand)]
enum MetrologyCmd {
    /// A_d, A_d^c and A_d^M over a range of dimensions
    Scan(ScanArgs),
    /// Method-of-moments Monte Carlo against error propagation
    Sim(SimArgs),
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Smallest dimension [default: 3]
    #[arg(long = "d-min")]
    d_min: Option<usize>,
    /// Largest dimension [default: 12]
    #[arg(long = "d-max")]
    d_max: Option<usize>,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Dimension d [default: 3]
    #[arg(long)]
    dim: Option<usize>,
    /// Probe: `vacuum` (d = 3 only) or `optimal` (the A_d minimizer) [default: vacuum]
    #[arg(long)]
    probe: Option<String>,
    /// Shots per trial [default: 100000]
    #[arg(long)]
    nu: Option<u64>,
    /// Monte Carlo trials [default: 200]
    #[arg(long)]
    trials: Option<usize>,
    /// True parameter value [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Estimate both displacements, measuring Q on half of the shots and P on the rest
    #[arg(long)]
    split: bool,
}

pub fn run(ctx: &Ctx, args: MetrologyArgs) -> Result<Outcome, CliError> {
    match args.cmd {
        MetrologyCmd::Scan(a) => scan(ctx, a),
        MetrologyCmd::Sim(a) => sim(ctx, a),
    }
}

fn scan(ctx: &Ctx, args: ScanArgs) -> Result<Outcome, CliError> {
    let lo = pick(args.d_min, ctx.file.d_min, 3);
    let hi = pick(args.d_max, ctx.file.d_max, 12);
    check_dim(lo)?;
    check_dim(hi)?;
    ensure(lo <= hi, "d-max", "must not be below d-min")?;
    let dims: Vec<usize> = (lo..=hi).collect();
    let scan = accuracy_scan(&dims, ctx.restarts, ctx.seed)?;
    let slope = scan.slope.map(num).unwrap_or_default();
    let mut table = Table::new(&["d", "a_d", "a_d_c", "a_d_m", "delta", "slope", "saturability_residual", "converged"]);
    for r in &scan.reports {
        table.push(vec![
            r.dim.to_string(),
            num(r.a_d),
            num(r.a_d_c),
            num(r.a_d_m),
            num(r.gap_delta),
            slope.clone(),
            num(r.saturability_residual),
            r.converged.to_string(),
        ]);
    }
    let config = json!({
        "command": "metrology scan",
        "d_min": lo,
        "d_max": hi,
        "restarts": ctx.restarts,
        "seed": ctx.seed,
    });
    ctx.sink.emit_table(&table, &config)?;
    Ok(Outcome {
        converged: scan.reports.iter().all(|r| r.converged),
    })
}

fn sim(ctx: &Ctx, args: SimArgs) -> Result<Outcome, CliError> {
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let probe_name = pick(args.probe, ctx.file.probe.clone(), "vacuum".into());
    let nu = pick(args.nu, ctx.file.nu, 100_000);
    let trials = pick(args.trials, ctx.file.trials, 200);
    let theta = pick(args.theta, ctx.file.theta, 0.0);
    ensure(nu >= 4, "nu", "must be at least 4")?;
    ensure(trials >= 2, "trials", "must be at least 2")?;
    let (probe, converged): (QuantumState, bool) = match probe_name.as_str() {
        "vacuum" => {
            ensure(d == 3, "probe", "`vacuum` is defined for d = 3 only")?;
            (vacuum_d3(), true)
        }
        "optimal" => {
            let opt = optimize_a_d(&pair, ctx.restarts, ctx.seed, false)?;
            (opt.state, opt.converged)
        }
        other => {
            return Err(CliError::Validation(format!(
                "field `probe`: expected `vacuum` or `optimal`, got {other:?}"
            )))
        }
    };
    let res = if args.split {
        mom_simulate_split(&probe, [pair.q(), pair.p()], [pair.q(), pair.p()], [theta, theta], nu, trials, ctx.seed)?
    } else {
        mom_simulate_single(&probe, pair.q(), pair.p(), theta, nu, trials, ctx.seed)?
    };
    let mut table = Table::new(&["d", "nu", "trials", "empirical_mse", "predicted_mse", "ratio", "clamped"]);
    table.push(vec![
        d.to_string(),
        res.nu.to_string(),
        res.trials.to_string(),
        num(res.empirical_mse),
        num(res.predicted_mse),
        num(res.ratio),
        res.clamped.to_string(),
    ]);
    let config = json!({
        "command": "metrology sim",
        "dim": d,
        "probe": probe_name,
        "measured": "Q",
        "generator": "P",
        "split": args.split,
        "nu": nu,
        "trials": trials,
        "theta": theta,
        "seed": ctx.seed,
    });
    ctx.sink.emit_table(&table, &config)?;
    Ok(Outcome { converged })
}
