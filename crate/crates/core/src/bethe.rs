//! Bethe free energy of a BP message set, in nats per variable node.

use crate::bp::MessageSet;
use crate::tanner::TannerGraph;
use crate::{Error, Result};

/// `ln(2 cosh x)` without overflow.
pub fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `F_a = ln ½(1 + Π_{i∈∂a} tanh η_{i→a}) + Σ_{i∈∂a} ln 2cosh η_{i→a}`.
pub fn check_term(g: &TannerGraph, a: usize, msgs: &MessageSet) -> Result<f64> {
    let edges = g.check_edges(a);
    let prod: f64 = edges.iter().map(|&e| msgs.eta[e].tanh()).product();
    if prod <= -1.0 {
        return Err(Error::Singular(format!(
            "check {a}: product of tanh messages equals -1"
        )));
    }
    let cosh: f64 = edges.iter().map(|&e| ln_2cosh(msgs.eta[e])).sum();
    Ok(prod.ln_1p() - std::f64::consts::LN_2 + cosh)
}

/// `F_i = ln 2cosh(h_i + Σ_{a∈∂i} η̂_{a→i})`.
pub fn variable_term(g: &TannerGraph, i: usize, field: f64, msgs: &MessageSet) -> f64 {
    let total: f64 = g.var_edges(i).iter().map(|&e| msgs.eta_hat[e]).sum();
    ln_2cosh(field + total)
}

/// `F_ia = ln 2cosh(η_{i→a} + η̂_{a→i})` for edge id `e`.
pub fn edge_term(e: usize, msgs: &MessageSet) -> f64 {
    ln_2cosh(msgs.eta[e] + msgs.eta_hat[e])
}

/// `f = (1/n)(Σ_a F_a + Σ_i F_i − Σ_{(i,a)} F_ia)`, summed in node-index order.
pub fn bethe_free_energy(g: &TannerGraph, fields: &[f64], msgs: &MessageSet) -> Result<f64> {
    msgs.check_shape(g)?;
    if fields.len() != g.num_vars() {
        return Err(Error::invalid("field vector length differs from n"));
    }
    let mut checks = 0.0;
    for a in 0..g.num_checks() {
        checks += check_term(g, a, msgs)?;
    }
    let vars: f64 = (0..g.num_vars())
        .map(|i| variable_term(g, i, fields[i], msgs))
        .sum();
    let edges: f64 = (0..g.num_edges()).map(|e| edge_term(e, msgs)).sum();
    Ok((checks + vars - edges) / g.num_vars() as f64)
}
