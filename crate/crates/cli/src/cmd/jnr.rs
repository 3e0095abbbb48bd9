use clap::{Args, Subcommand};
use serde_json::json;

use finiteqp::regions::{jnr_cross_section, jnr_support};
use finiteqp::rng;

use crate::config::{ensure, pick, CliError};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct JnrArgs {
    #[command(subcommand)]
    cmd: JnrCmd,
}

#[derive(Debug, Subcommand)]
enum JnrCmd {
    /// Supporting points of the joint numerical range in random directions
    Support(SupportArgs),
    /// Cross-section of (<G1>, <G2>, <G3>) at fixed <T> with <Q> = <P> = 0
    Cross(CrossArgs),
}

#[derive(Debug, Args)]
struct SupportArgs {
    /// Dimension d [default: 3]
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated operator names (Q, P, Q2, P2, T, G1, G2, G3, K, C) [default: Q,P,T]
    #[arg(long)]
    operators: Option<String>,
    /// Number of random directions [default: 500]
    #[arg(long)]
    directions: Option<usize>,
}

#[derive(Debug, Args)]
struct CrossArgs {
    /// Dimension d [default: 3]
    #[arg(long)]
    dim: Option<usize>,
    /// Value t of <T> = Var(Q) + Var(P) on the slice
    #[arg(long)]
    trace: Option<f64>,
    /// Number of directions, at least 20 [default: 100]
    #[arg(long)]
    directions: Option<usize>,
}

pub fn run(ctx: &Ctx, args: JnrArgs) -> Result<Outcome, CliError> {
    match args.cmd {
        JnrCmd::Support(a) => support(ctx, a),
        JnrCmd::Cross(a) => cross(ctx, a),
    }
}

fn support(ctx: &Ctx, args: SupportArgs) -> Result<Outcome, CliError> {
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let names_raw = pick(args.operators, ctx.file.operators.clone(), "Q,P,T".to_string());
    let names: Vec<&str> = names_raw.split(',').map(str::trim).collect();
    let n = pick(args.directions, ctx.file.directions, 500);
    ensure(n >= 1, "directions", "must be at least 1")?;
    let ops = names
        .iter()
        .map(|s| super::named_operator(&pair, s))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<_> = ops.iter().collect();
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = rng::stream(ctx.seed, i as u64);
        let dir = rng::random_direction(&mut r, refs.len());
        let p = jnr_support(&refs, &dir)?;
        points.push(json!({
            "direction": p.direction,
            "point": p.point,
            "support_value": p.support_value,
            "degenerate": p.degenerate,
        }));
    }
    let value = json!({ "dim": d, "operators": names, "points": points });
    let config = json!({ "command": "jnr support", "dim": d, "operators": names_raw, "directions": n, "seed": ctx.seed });
    ctx.sink.emit_json(&value, &config)?;
    Ok(Outcome { converged: true })
}

fn cross(ctx: &Ctx, args: CrossArgs) -> Result<Outcome, CliError> {
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let t = args
        .trace
        .or(ctx.file.trace)
        .ok_or_else(|| CliError::Validation("field `trace`: required".into()))?;
    ensure(t.is_finite(), "trace", "must be finite")?;
    let n = pick(args.directions, ctx.file.directions, 100);
    ensure(n >= 20, "directions", "must be at least 20")?;
    let cs = jnr_cross_section(&pair, t, n, ctx.seed)?;
    let points: Vec<_> = cs
        .points
        .iter()
        .map(|p| json!({ "direction": p.direction, "g": p.g, "radius": p.radius, "det": p.det }))
        .collect();
    let value = json!({
        "dim": d,
        "t": t,
        "det_min": cs.det_min,
        "det_max": cs.det_max,
        "origin_inside": cs.origin_inside,
        "sampled_directions": n,
        "points": points,
    });
    let config = json!({ "command": "jnr cross", "dim": d, "trace": t, "directions": n, "seed": ctx.seed });
    ctx.sink.emit_json(&value, &config)?;
    Ok(Outcome {
        converged: cs.points.len() == n,
    })
}
