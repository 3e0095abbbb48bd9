use clap::{Args, Subcommand};
use serde_json::json;

use finiteqp::entanglement::{squeezing_scan, thermal_scan, DuanWitness, TemperatureGrid};
use finiteqp::states::{max_entangled, two_mode_squeezed, vacuum_d3, QuantumState};

use crate::config::{ensure, pick, CliError};
use crate::output::{num, Table};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct EntangleArgs {
    #[command(subcommand)]
    cmd: EntangleCmd,
}

#[derive(Debug, Subcommand)]
enum EntangleCmd {
    /// Evaluate Var(Q1-Q2) + Var(P1+P2) - 2U on a named state
    Witness(WitnessArgs),
    /// Largest grid temperature at which the thermal state is detected
    Thermal(ThermalArgs),
}

#[derive(Debug, Args)]
struct WitnessArgs {
    /// Dimension d of each subsystem [default: 3]
    #[arg(long)]
    dim: Option<usize>,
    /// `max-entangled`, `vacuum-product` (d = 3) or `two-mode-squeezed` [default: max-entangled]
    #[arg(long)]
    state: Option<String>,
    /// Squeezing parameter a [default: 4]
    #[arg(long)]
    a: Option<f64>,
    /// Squeezing parameter b, or the start of the scan with --b-max [default: 2]
    #[arg(long)]
    b: Option<f64>,
    /// End of a uniform scan over b
    #[arg(long = "b-max")]
    b_max: Option<f64>,
    /// Number of b values in the scan [default: 50]
    #[arg(long = "b-steps")]
    b_steps: Option<usize>,
}

#[derive(Debug, Args)]
struct ThermalArgs {
    /// Dimension d of each subsystem [default: 3]
    #[arg(long)]
    dim: Option<usize>,
    /// First grid temperature [default: 0.05]
    #[arg(long = "t-min")]
    t_min: Option<f64>,
    /// Last grid temperature [default: 3]
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Grid spacing [default: 0.05]
    #[arg(long)]
    step: Option<f64>,
}

pub fn run(ctx: &Ctx, args: EntangleArgs) -> Result<Outcome, CliError> {
    match args.cmd {
        EntangleCmd::Witness(a) => witness(ctx, a),
        EntangleCmd::Thermal(a) => thermal(ctx, a),
    }
}

fn witness(ctx: &Ctx, args: WitnessArgs) -> Result<Outcome, CliError> {
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let state_name = pick(args.state, ctx.file.state.clone(), "max-entangled".into());
    let a = pick(args.a, ctx.file.a, 4.0);
    let b = pick(args.b, ctx.file.b, 2.0);
    let b_max = args.b_max.or(ctx.file.b_max);
    let steps = pick(args.b_steps, ctx.file.b_steps, 50);
    let w = DuanWitness::new(&pair)?;
    let mut config = json!({ "command": "entangle witness", "dim": d, "state": state_name, "u": w.u() });

    if let Some(b_max) = b_max {
        ensure(state_name == "two-mode-squeezed", "b-max", "only applies to `two-mode-squeezed`")?;
        ensure(steps >= 2, "b-steps", "must be at least 2")?;
        ensure(b_max > b, "b-max", "must exceed b")?;
        let bs: Vec<f64> = (0..steps).map(|i| b + (b_max - b) * i as f64 / (steps - 1) as f64).collect();
        let rows = squeezing_scan(&w, a, &bs)?;
        let mut table = Table::new(&["d", "a", "b", "delta_tilde"]);
        for r in rows {
            table.push(vec![d.to_string(), num(r.a), num(r.b), num(r.delta_tilde)]);
        }
        config["a"] = json!(a);
        config["b"] = json!(b);
        config["b_max"] = json!(b_max);
        config["b_steps"] = json!(steps);
        ctx.sink.emit_table(&table, &config)?;
        return Ok(Outcome { converged: true });
    }

    let state: QuantumState = match state_name.as_str() {
        "max-entangled" => max_entangled(d)?,
        "vacuum-product" => {
            ensure(d == 3, "state", "`vacuum-product` is defined for d = 3 only")?;
            QuantumState::product(&vacuum_d3(), &vacuum_d3())?
        }
        "two-mode-squeezed" => {
            config["a"] = json!(a);
            config["b"] = json!(b);
            two_mode_squeezed(d, a, b)?
        }
        other => {
            return Err(CliError::Validation(format!(
                "field `state`: expected max-entangled, vacuum-product or two-mode-squeezed, got {other:?}"
            )))
        }
    };
    let r = w.evaluate(&state)?;
    let mut table = Table::new(&["d", "state", "lhs", "bound", "delta_tilde", "verdict"]);
    table.push(vec![
        d.to_string(),
        state_name,
        num(r.lhs),
        num(r.bound),
        num(r.delta_tilde),
        r.verdict.as_str().into(),
    ]);
    ctx.sink.emit_table(&table, &config)?;
    Ok(Outcome { converged: true })
}

fn thermal(ctx: &Ctx, args: ThermalArgs) -> Result<Outcome, CliError> {
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let defaults = TemperatureGrid::default();
    let grid = TemperatureGrid {
        t_min: pick(args.t_min, ctx.file.t_min, defaults.t_min),
        t_max: pick(args.t_max, ctx.file.t_max, defaults.t_max),
        step: pick(args.step, ctx.file.step, defaults.step),
    };
    ensure(grid.step > 0.0, "step", "must be positive")?;
    ensure(grid.t_min > 0.0, "t-min", "must be positive")?;
    ensure(grid.t_max >= grid.t_min, "t-max", "must not be below t-min")?;
    let w = DuanWitness::new(&pair)?;
    let scan = thermal_scan(&w, &grid)?;
    match scan.threshold {
        Some(t) => eprintln!("threshold {t}"),
        None => eprintln!("threshold none detected"),
    }
    let config = json!({
        "command": "entangle thermal",
        "dim": d,
        "t_min": grid.t_min,
        "t_max": grid.t_max,
        "step": grid.step,
        "u": w.u(),
        "threshold": scan.threshold,
    });
    if ctx.sink.out.is_some() {
        let mut table = Table::new(&["d", "temperature", "delta_tilde", "verdict"]);
        for p in &scan.points {
            table.push(vec![
                d.to_string(),
                num(p.temperature),
                num(p.delta_tilde),
                p.verdict.as_str().into(),
            ]);
        }
        ctx.sink.emit_table(&table, &config)?;
    } else {
        let line = match scan.threshold {
            Some(t) => format!("{t}\n"),
            None => "none detected\n".into(),
        };
        ctx.sink.emit(line.as_bytes(), &config)?;
    }
    Ok(Outcome { converged: true })
}
