//! Belief propagation in the half-log-likelihood parametrization.
//!
//! For every edge `(i, a)` two messages are kept: `η_{i→a}` (variable to
//! check) and `η̂_{a→i}` (check to variable). A fixed point satisfies
//!
//! ```text
//! η_{i→a}  = h_i + Σ_{b∈∂i∖a} η̂_{b→i}
//! η̂_{a→i} = atanh( Π_{j∈∂a∖i} tanh η_{j→a} )
//! ```
//!
//! Messages are stored in edge-id order of the [`TannerGraph`].

use serde::{Deserialize, Serialize};

use crate::tanner::TannerGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageSet {
    /// `η_{i→a}` per edge id.
    pub eta: Vec<f64>,
    /// `η̂_{a→i}` per edge id.
    pub eta_hat: Vec<f64>,
}

impl MessageSet {
    pub fn zeros(edges: usize) -> Self {
        Self {
            eta: vec![0.0; edges],
            eta_hat: vec![0.0; edges],
        }
    }

    /// The default starting point `η_{i→a} = h_i`, `η̂ = 0`.
    pub fn initial(g: &TannerGraph, fields: &[f64]) -> Self {
        Self {
            eta: g.edges().iter().map(|&(i, _)| fields[i]).collect(),
            eta_hat: vec![0.0; g.num_edges()],
        }
    }

    /// Uniform messages `(η, η̂)` on every edge.
    pub fn uniform(edges: usize, eta: f64, eta_hat: f64) -> Self {
        Self {
            eta: vec![eta; edges],
            eta_hat: vec![eta_hat; edges],
        }
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Sup-norm distance over both message families.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.eta
            .iter()
            .zip(&other.eta)
            .chain(self.eta_hat.iter().zip(&other.eta_hat))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn negated(&self) -> Self {
        Self {
            eta: self.eta.iter().map(|x| -x).collect(),
            eta_hat: self.eta_hat.iter().map(|x| -x).collect(),
        }
    }

    pub(crate) fn check_shape(&self, g: &TannerGraph) -> Result<()> {
        if self.eta.len() != g.num_edges() || self.eta_hat.len() != g.num_edges() {
            return Err(Error::invalid(format!(
                "message set has {} / {} entries, graph has {} edges",
                self.eta.len(),
                self.eta_hat.len(),
                g.num_edges()
            )));
        }
        if self.eta.iter().chain(&self.eta_hat).any(|x| !x.is_finite()) {
            return Err(Error::invalid("messages must be finite"));
        }
        Ok(())
    }
}

/// A BP state: either finite messages or the trivial solution
/// `tanh η = tanh η̂ = 1`, which has no finite representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BpState {
    Trivial,
    Finite(MessageSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Products of tanh values are clamped to `±(1 - clamp)`.
    pub clamp: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 0.5,
            clamp: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpUpdate {
    pub messages: MessageSet,
    /// True if some check product reached the clamp, i.e. the iteration drifts
    /// toward the trivial solution.
    pub clamped: bool,
}

fn check_fields(g: &TannerGraph, fields: &[f64]) -> Result<()> {
    if fields.len() != g.num_vars() {
        return Err(Error::invalid(format!(
            "{} fields for {} variables",
            fields.len(),
            g.num_vars()
        )));
    }
    if fields.iter().any(|h| !h.is_finite()) {
        return Err(Error::invalid("fields must be finite"));
    }
    Ok(())
}

/// One damped flooding sweep: all variable-to-check messages from the old
/// `η̂`, then all check-to-variable messages from the new `η`. Each family is
/// mixed as `new·(1-damping) + old·damping`.
pub fn bp_update(
    g: &TannerGraph,
    fields: &[f64],
    msgs: &MessageSet,
    damping: f64,
    clamp: f64,
) -> Result<BpUpdate> {
    check_fields(g, fields)?;
    msgs.check_shape(g)?;
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::invalid(format!("damping={damping} outside [0,1)")));
    }
    let keep = damping;
    let take = 1.0 - damping;

    let mut eta = vec![0.0; g.num_edges()];
    for i in 0..g.num_vars() {
        let edges = g.var_edges(i);
        for &e in edges {
            let others: f64 = edges
                .iter()
                .filter(|&&b| b != e)
                .map(|&b| msgs.eta_hat[b])
                .sum();
            eta[e] = take * (fields[i] + others) + keep * msgs.eta[e];
        }
    }

    let limit = 1.0 - clamp;
    let mut clamped = false;
    let mut eta_hat = vec![0.0; g.num_edges()];
    for a in 0..g.num_checks() {
        let edges = g.check_edges(a);
        let tanhs: Vec<f64> = edges.iter().map(|&e| eta[e].tanh()).collect();
        for (k, &e) in edges.iter().enumerate() {
            let mut prod: f64 = tanhs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, t)| t)
                .product();
            if prod.abs() >= limit {
                prod = prod.signum() * limit;
                clamped = true;
            }
            eta_hat[e] = take * prod.atanh() + keep * msgs.eta_hat[e];
        }
    }
    Ok(BpUpdate {
        messages: MessageSet { eta, eta_hat },
        clamped,
    })
}

/// [`bp_update`] lifted to [`BpState`]; the trivial solution maps to itself.
pub fn bp_update_state(
    g: &TannerGraph,
    fields: &[f64],
    state: &BpState,
    damping: f64,
    clamp: f64,
) -> Result<BpState> {
    match state {
        BpState::Trivial => Ok(BpState::Trivial),
        BpState::Finite(m) => Ok(BpState::Finite(
            bp_update(g, fields, m, damping, clamp)?.messages,
        )),
    }
}

/// Sup-norm violation of the undamped BP equations at `msgs`.
pub fn fixed_point_residual(g: &TannerGraph, fields: &[f64], msgs: &MessageSet) -> Result<f64> {
    let next = bp_update(g, fields, msgs, 0.0, 0.0)?;
    Ok(next.messages.sup_distance(msgs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpSolution {
    pub messages: MessageSet,
    pub iterations: usize,
    pub converged: bool,
    pub clamped: bool,
}

/// Iterates [`bp_update`] from [`MessageSet::initial`] until one sweep moves
/// the messages by less than `tol` in sup-norm, or `max_iter` sweeps ran.
/// Non-convergence is reported in the status, not as an error.
pub fn bp_solve(g: &TannerGraph, fields: &[f64], opts: &BpOptions) -> Result<BpSolution> {
    check_fields(g, fields)?;
    let mut msgs = MessageSet::initial(g, fields);
    let mut clamped = false;
    for it in 1..=opts.max_iter {
        let step = bp_update(g, fields, &msgs, opts.damping, opts.clamp)?;
        clamped |= step.clamped;
        let change = step.messages.sup_distance(&msgs);
        msgs = step.messages;
        if change < opts.tol {
            return Ok(BpSolution {
                messages: msgs,
                iterations: it,
                converged: true,
                clamped,
            });
        }
    }
    Ok(BpSolution {
        messages: msgs,
        iterations: opts.max_iter,
        converged: false,
        clamped,
    })
}

/// Whether a state obeys the high-noise magnitude bounds
/// `|η| ≤ h + (l-1)h^{r-1} + C h^r` and `|η̂| ≤ h^{r-1} + C h^r`.
pub fn check_high_noise(state: &BpState, h: f64, l: usize, r: usize, slack: f64) -> bool {
    let BpState::Finite(m) = state else {
        return false;
    };
    let h = h.abs();
    let hr1 = h.powi(r as i32 - 1);
    let extra = slack * h.powi(r as i32);
    let eta_bound = h + (l as f64 - 1.0) * hr1 + extra;
    let hat_bound = hr1 + extra;
    m.eta.iter().all(|x| x.abs() <= eta_bound) && m.eta_hat.iter().all(|x| x.abs() <= hat_bound)
}
