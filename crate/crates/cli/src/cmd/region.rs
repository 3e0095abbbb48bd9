use clap::{Args, Subcommand};
use serde_json::json;

use finiteqp::regions::{max_sum_variances, min_sum_variances, RegionSolver};

use crate::config::{ensure, pick, CliError};
use crate::output::{num, Table};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
pub struct RegionArgs {
    #[command(subcommand)]
    cmd: Option<RegionCmd>,
    /// Same as `region trace-det`
    #[command(flatten)]
    trace_det: TraceDetArgs,
}

#[derive(Debug, Subcommand)]
enum RegionCmd {
    /// Min- and max-det samples along the trace axis (the default)
    TraceDet(TraceDetArgs),
    /// Extremal sums of variances and their optimal shifts
    Extremes(ExtremesArgs),
}

#[derive(Debug, Args)]
struct TraceDetArgs {
    /// Dimension d [default: 3]
    #[arg(long)]
    dim: Option<usize>,
    /// Factor rank, 1 for pure states, d for all states [default: 1]
    #[arg(long)]
    rank: Option<usize>,
    /// Number of trace values on [tau_min, tau_max] [default: 40]
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct ExtremesArgs {
    /// Dimension d [default: 3]
    #[arg(long)]
    dim: Option<usize>,
}

pub fn run(ctx: &Ctx, args: RegionArgs) -> Result<Outcome, CliError> {
    match args.cmd {
        Some(RegionCmd::TraceDet(a)) => trace_det(ctx, a),
        Some(RegionCmd::Extremes(a)) => extremes(ctx, a),
        None => trace_det(ctx, args.trace_det),
    }
}

fn trace_det(ctx: &Ctx, args: TraceDetArgs) -> Result<Outcome, CliError> {
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let rank = pick(args.rank, ctx.file.rank, 1);
    let samples = pick(args.samples, ctx.file.samples, 40);
    ensure((1..=d).contains(&rank), "rank", format!("must be in 1..={d}"))?;
    ensure(samples >= 2, "samples", "must be at least 2")?;
    let solver = RegionSolver::new(&pair)?;
    let rows = solver.trace_det_region(samples, rank, ctx.restarts, ctx.seed)?;
    let mut table = Table::new(&["d", "rank", "t_target", "trace", "det", "direction", "converged", "restarts_used"]);
    for s in &rows {
        table.push(vec![
            s.dim.to_string(),
            s.rank.to_string(),
            num(s.t_target),
            num(s.trace),
            num(s.det),
            s.direction.as_str().into(),
            s.converged.to_string(),
            s.restarts_used.to_string(),
        ]);
    }
    let config = json!({
        "command": "region trace-det",
        "dim": d,
        "rank": rank,
        "samples": samples,
        "restarts": ctx.restarts,
        "seed": ctx.seed,
        "tau_min": solver.bounds().min,
        "tau_max": solver.bounds().max,
    });
    ctx.sink.emit_table(&table, &config)?;
    Ok(Outcome {
        converged: rows.iter().all(|s| s.converged),
    })
}

fn extremes(ctx: &Ctx, args: ExtremesArgs) -> Result<Outcome, CliError> {
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let lo = min_sum_variances(&pair, 64, 1e-12)?;
    let hi = max_sum_variances(&pair)?;
    let mut table = Table::new(&["d", "kind", "orbit_index", "value", "q_center", "p_center", "converged"]);
    for (kind, ext) in [("min", &lo), ("max", &hi)] {
        for (i, o) in ext.orbit.iter().enumerate() {
            table.push(vec![
                d.to_string(),
                kind.into(),
                i.to_string(),
                num(ext.value),
                num(o.centers.0),
                num(o.centers.1),
                ext.converged.to_string(),
            ]);
        }
    }
    let config = json!({ "command": "region extremes", "dim": d, "grid": 64, "refine_tol": 1e-12 });
    ctx.sink.emit_table(&table, &config)?;
    Ok(Outcome {
        converged: lo.converged,
    })
}
