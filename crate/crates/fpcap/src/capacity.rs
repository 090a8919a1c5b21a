//! Achievable-rate payoffs, bias optimization, and capacity tables.
//!
//! Two payoffs per channel: the per-user rate [`simple_mi`] and the
//! coalition rate [`joint_mi_rate`], both in bits. The fully informed
//! capacity maximizes a payoff over the bias p; the partially informed value
//! averages it against the arcsine density.

use crate::channels::{AttackKind, CollusionChannel};
use crate::error::{Error, Result};
use crate::prob::{binary_entropy, kl_div, log_binom_pmf, CompensatedSum, Probability};
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Simple,
    Joint,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simple => "simple",
            Mode::Joint => "joint",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Mode::Simple),
            "joint" => Ok(Mode::Joint),
            other => Err(Error::InvalidInput(format!(
                "unknown mode '{other}' (expected simple|joint)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Decoder knows the attack and picks the best fixed bias.
    Full,
    /// Bias is averaged over the arcsine density.
    Partial,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Full => "full",
            Side::Partial => "partial",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Side::Full),
            "partial" => Ok(Side::Partial),
            other => Err(Error::InvalidInput(format!(
                "unknown side '{other}' (expected full|partial)"
            ))),
        }
    }
}

/// How a capacity number was produced.
#[derive(Clone, Copy, Debug)]
pub enum Diagnostics {
    Optimizer { iterations: u32, bracket_width: f64 },
    Quadrature { nodes: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct CapacityResult {
    /// Achievable rate in bits per code position.
    pub capacity_bits: f64,
    /// Maximizing bias; absent for partially informed averages.
    pub optimal_p: Option<Probability>,
    /// Code-length constant 1/(capacity * ln 2); infinite when capacity is 0.
    pub length_constant_l: f64,
    /// Set when the payoff vanished on the whole scan grid.
    pub degenerate: bool,
    pub diagnostics: Diagnostics,
}

impl CapacityResult {
    fn from_capacity(capacity_bits: f64, optimal_p: Option<Probability>, diagnostics: Diagnostics) -> Self {
        let degenerate = capacity_bits <= 0.0;
        CapacityResult {
            capacity_bits,
            optimal_p,
            length_constant_l: if degenerate {
                f64::INFINITY
            } else {
                1.0 / (capacity_bits * LN_2)
            },
            degenerate,
            diagnostics,
        }
    }
}

/// Mutual information in bits between one colluder's symbol and the attack
/// output at bias p: p d(a1||a) + (1-p) d(a0||a).
pub fn simple_mi(theta: &CollusionChannel, p: Probability) -> Result<f64> {
    let pv = p.require_interior("bias p")?;
    let m = theta.marginals(p)?;
    if !m.a.is_interior() {
        return Ok(0.0);
    }
    Ok(pv * kl_div(m.a1, m.a) + (1.0 - pv) * kl_div(m.a0, m.a))
}

/// Mutual information rate in bits between the coalition's symbol count and
/// the attack output at bias p: (h(a) - E_z[h(theta_z)]) / c.
pub fn joint_mi_rate(theta: &CollusionChannel, p: Probability) -> Result<f64> {
    p.require_interior("bias p")?;
    let c = theta.c();
    let mut a = CompensatedSum::default();
    let mut a_h = CompensatedSum::default();
    for z in 0..=c {
        let w = log_binom_pmf(c as u64, z as u64, p)?.exp();
        if w > 0.0 {
            a.add(w * theta.theta(z));
            a_h.add(w * binary_entropy(theta.thetas()[z]));
        }
    }
    let a = Probability::clamped(a.total());
    Ok(((binary_entropy(a) - a_h.total()) / c as f64).max(0.0))
}

/// Golden-ratio shrink factor for section search.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes a payoff over p in [1e-3/c, 1 - 1e-3/c].
///
/// A 255-node coarse grid, log-spaced toward both endpoints, locates the
/// best bracket (ties resolve toward smaller p); golden-section search then
/// shrinks the bracket below 1e-11, giving the maximizer to 1e-10 absolute
/// and the value to 1e-9 relative for the unimodal payoffs used here.
pub fn maximize_over_p<F>(payoff: F, c: u64) -> Result<CapacityResult>
where
    F: Fn(Probability) -> Result<f64>,
{
    if c == 0 {
        return Err(Error::InvalidInput(
            "coalition size must be at least 1".into(),
        ));
    }
    let lo = 1e-3 / c as f64;
    let hi = 1.0 - lo;
    let half = 128usize;
    let mut grid = Vec::with_capacity(2 * half - 1);
    let step = (0.5f64.ln() - lo.ln()) / (half as f64 - 1.0);
    for i in 0..half {
        grid.push((lo.ln() + step * i as f64).exp());
    }
    for i in (0..half - 1).rev() {
        grid.push(1.0 - grid[i]);
    }

    let eval = |x: f64| payoff(Probability::clamped(x));
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    let mut all_zero = true;
    for (i, &x) in grid.iter().enumerate() {
        let v = eval(x)?;
        if v != 0.0 {
            all_zero = false;
        }
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    if all_zero {
        return Ok(CapacityResult {
            capacity_bits: 0.0,
            optimal_p: None,
            length_constant_l: f64::INFINITY,
            degenerate: true,
            diagnostics: Diagnostics::Optimizer {
                iterations: 0,
                bracket_width: hi - lo,
            },
        });
    }

    let mut a = if best_i == 0 { lo } else { grid[best_i - 1] };
    let mut b = if best_i + 1 == grid.len() {
        hi
    } else {
        grid[best_i + 1]
    };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    let mut iterations = 0u32;
    while b - a > 1e-11 && iterations < 200 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
        }
        iterations += 1;
    }
    let (mut px, mut pf) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if best_v > pf {
        px = grid[best_i];
        pf = best_v;
    }
    Ok(CapacityResult::from_capacity(
        pf,
        Some(Probability::clamped(px)),
        Diagnostics::Optimizer {
            iterations,
            bracket_width: b - a,
        },
    ))
}

pub const DEFAULT_QUADRATURE_NODES: usize = 2000;

/// Expectation of a payoff under the arcsine bias density, using N-node
/// first-kind Gauss-Chebyshev quadrature: nodes sin^2(pi (2k-1) / (4N)),
/// uniform weights 1/N, accumulated with compensated summation.
pub fn arcsine_expectation_n<F>(payoff: F, nodes: usize) -> Result<f64>
where
    F: Fn(Probability) -> Result<f64>,
{
    if nodes == 0 {
        return Err(Error::InvalidInput("quadrature needs at least 1 node".into()));
    }
    let mut acc = CompensatedSum::default();
    for k in 1..=nodes {
        let angle = PI * (2 * k - 1) as f64 / (4.0 * nodes as f64);
        let s = angle.sin();
        acc.add(payoff(Probability::clamped(s * s))?);
    }
    Ok(acc.total() / nodes as f64)
}

/// [`arcsine_expectation_n`] at the default 2000 nodes.
pub fn arcsine_expectation<F>(payoff: F) -> Result<f64>
where
    F: Fn(Probability) -> Result<f64>,
{
    arcsine_expectation_n(payoff, DEFAULT_QUADRATURE_NODES)
}

/// Power of c used to normalize capacities and length constants for an
/// attack: interleaving scales like c^-2, the other named attacks like c^-1
/// fully informed and c^-3/2 partially informed.
pub fn scaling_exponent(attack: AttackKind, side: Side) -> f64 {
    match (attack, side) {
        (AttackKind::Interleaving, _) => 2.0,
        (_, Side::Full) => 1.0,
        (_, Side::Partial) => 1.5,
    }
}

#[derive(Clone, Debug)]
pub struct CapacityTableRow {
    pub attack: AttackKind,
    pub mode: Mode,
    pub side: Side,
    pub c: usize,
    pub result: CapacityResult,
    pub scaling_exponent: f64,
    /// capacity_bits * c^scaling_exponent.
    pub scaled_constant: f64,
    /// length_constant_l / c^scaling_exponent.
    pub l_normalized: f64,
}

/// Computes one table row for a named attack.
pub fn capacity_row(
    attack: AttackKind,
    c: usize,
    mode: Mode,
    side: Side,
    nodes: usize,
) -> Result<CapacityTableRow> {
    let channel = CollusionChannel::attack(attack, c)?;
    let payoff = |p: Probability| match mode {
        Mode::Simple => simple_mi(&channel, p),
        Mode::Joint => joint_mi_rate(&channel, p),
    };
    let result = match side {
        Side::Full => maximize_over_p(payoff, c as u64)?,
        Side::Partial => {
            let cap = arcsine_expectation_n(payoff, nodes)?;
            CapacityResult::from_capacity(cap, None, Diagnostics::Quadrature { nodes })
        }
    };
    let e = scaling_exponent(attack, side);
    let ce = (c as f64).powf(e);
    Ok(CapacityTableRow {
        attack,
        mode,
        side,
        c,
        scaling_exponent: e,
        scaled_constant: result.capacity_bits * ce,
        l_normalized: result.length_constant_l / ce,
        result,
    })
}

/// Computes rows for several attacks at one (c, mode, side). Failures are
/// reported per attack so one bad row never hides the rest.
pub fn capacity_table(
    attacks: &[AttackKind],
    c: usize,
    mode: Mode,
    side: Side,
    nodes: usize,
) -> Vec<(AttackKind, Result<CapacityTableRow>)> {
    attacks
        .iter()
        .map(|&a| (a, capacity_row(a, c, mode, side, nodes)))
        .collect()
}
