use clap::Args;
use serde_json::json;

use finiteqp::linalg;
use finiteqp::operators::{commutator_closed_form, commutator_qp, momentum_closed_form};

use crate::config::{pick, CliError};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct OpsArgs {
    /// Dimension d [default: 3]
    #[arg(long)]
    dim: Option<usize>,
    /// Print the Q, P and F matrices
    #[arg(long)]
    dump: bool,
}

pub fn run(ctx: &Ctx, args: OpsArgs) -> Result<Outcome, CliError> {
    let d = pick(args.dim, ctx.file.dim, 3);
    let pair = super::pair_for(d)?;
    let f = pair.fourier().matrix();
    let mub = f.iter().map(|z| (z.norm_sqr() - 1.0 / d as f64).abs()).fold(0.0, f64::max);
    let p_spec = pair.p().eigen().values;
    let spectrum_defect = p_spec
        .iter()
        .zip(pair.labels())
        .map(|(v, n)| (v - pair.scale() * n).abs())
        .fold(0.0, f64::max);
    let mut value = json!({
        "dim": d,
        "labels": pair.labels(),
        "checks": {
            "momentum_closed_form": linalg::max_abs(&(pair.p().matrix() - momentum_closed_form(d))),
            "commutator_closed_form": linalg::max_abs(&(commutator_qp(&pair).matrix() * linalg::I - commutator_closed_form(d))),
            "fourier_unitarity": pair.fourier().unitarity_defect(),
            "mub_overlap": mub,
            "momentum_spectrum": spectrum_defect,
        },
    });
    if args.dump {
        value["q"] = serde_json::to_value(pair.q().to_json()).map_err(anyhow::Error::from)?;
        value["p"] = serde_json::to_value(pair.p().to_json()).map_err(anyhow::Error::from)?;
        value["fourier"] = serde_json::to_value(pair.fourier().to_json()).map_err(anyhow::Error::from)?;
    }
    let config = json!({ "command": "ops", "dim": d, "dump": args.dump });
    ctx.sink.emit_json(&value, &config)?;
    Ok(Outcome { converged: true })
}
