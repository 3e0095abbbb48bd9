pub mod entangle;
pub mod jnr;
pub mod metrology;
pub mod minunc;
pub mod ops;
pub mod region;

use finiteqp::operators::{build_quadratics, CanonicalPair, HermitianOperator};

use crate::config::CliError;

/// Observables addressable by name on the command line.
pub const OPERATOR_NAMES: &str = "Q, P, Q2, P2, T, G1, G2, G3, K, C";

pub fn named_operator(pair: &CanonicalPair, name: &str) -> Result<HermitianOperator, CliError> {
    let q = pair.q();
    let p = pair.p();
    Ok(match name.trim() {
        "Q" => q.clone(),
        "P" => p.clone(),
        "Q2" => q.square(),
        "P2" => p.square(),
        "T" => build_quadratics(pair).t,
        "G1" => build_quadratics(pair).g1,
        "G2" => build_quadratics(pair).g2,
        "G3" => build_quadratics(pair).g3,
        "K" => &q.anticommutator(p) * 0.5,
        "C" => &q.commutator_i(p) * 0.5,
        other => {
            return Err(CliError::Validation(format!(
                "unknown operator {other:?}; expected one of {OPERATOR_NAMES}"
            )))
        }
    })
}

pub fn pair_for(d: usize) -> Result<CanonicalPair, CliError> {
    crate::config::check_dim(d)?;
    Ok(CanonicalPair::new(d)?)
}
