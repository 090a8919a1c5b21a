//! Per-position score functions and per-user score accumulation.

use super::ScoreModel;
use crate::channels::CollusionChannel;
use crate::encode::Code;
use crate::error::{Error, Result};
use crate::prob::{ExtendedScore, Probability};

/// Per-position score table indexed by (user symbol x, attack output y).
#[derive(Clone, Copy, Debug)]
pub struct ScoreTable {
    entries: [[ExtendedScore; 2]; 2],
}

impl ScoreTable {
    pub fn from_fn(f: impl Fn(bool, bool) -> Result<ExtendedScore>) -> Result<Self> {
        Ok(Self {
            entries: [
                [f(false, false)?, f(false, true)?],
                [f(true, false)?, f(true, true)?],
            ],
        })
    }

    pub fn get(&self, x: bool, y: bool) -> ExtendedScore {
        self.entries[usize::from(x)][usize::from(y)]
    }
}

/// ln(num/den) with the zero-numerator convention NEG_INFINITY. `den` must
/// be positive.
fn log_ratio(num: f64, den: f64) -> ExtendedScore {
    debug_assert!(den > 0.0 && num >= 0.0);
    if num == 0.0 {
        f64::NEG_INFINITY
    } else {
        (num / den).ln()
    }
}

/// Log-likelihood-ratio table in nats for a known channel at bias p:
/// ln of (symbol-conditioned output law) over (unconditioned output law).
/// Cells the guilty law cannot produce score NEG_INFINITY. Channels whose
/// output marginal is deterministic at this bias are rejected.
pub fn simple_llr_table(theta: &CollusionChannel, p: Probability) -> Result<ScoreTable> {
    p.require_interior("bias p")?;
    let m = theta.marginals(p)?;
    if !m.a.is_interior() {
        return Err(Error::InvalidInput(format!(
            "log-likelihood scores need an interior output marginal, got a = {}",
            m.a.value()
        )));
    }
    let (a, a0, a1) = (m.a.value(), m.a0.value(), m.a1.value());
    Ok(ScoreTable {
        entries: [
            [log_ratio(1.0 - a0, 1.0 - a), log_ratio(a0, a)],
            [log_ratio(1.0 - a1, 1.0 - a), log_ratio(a1, a)],
        ],
    })
}

/// Channel-independent per-user score in nats, defined for c >= 2:
/// matches score ln(1 + (1-p)/(c p)) on (1,1), ln(1 + p/(c (1-p))) on (0,0),
/// mismatches score ln(1 - 1/c).
pub fn universal_score(x: bool, y: bool, p: Probability, c: usize) -> Result<ExtendedScore> {
    if c < 2 {
        return Err(Error::InvalidInput(
            "universal score needs coalition size at least 2".into(),
        ));
    }
    let pv = p.require_interior("bias p")?;
    let cf = c as f64;
    Ok(match (x, y) {
        (true, true) => ((1.0 - pv) / (cf * pv)).ln_1p(),
        (false, false) => (pv / (cf * (1.0 - pv))).ln_1p(),
        _ => (-1.0 / cf).ln_1p(),
    })
}

/// Centered linear score: (1-p)/p on (1,1), p/(1-p) on (0,0), -1 on
/// mismatches. Zero mean for an innocent user at every bias.
pub fn oosterwijk_score(x: bool, y: bool, p: Probability) -> Result<ExtendedScore> {
    let pv = p.require_interior("bias p")?;
    Ok(match (x, y) {
        (true, true) => (1.0 - pv) / pv,
        (false, false) => pv / (1.0 - pv),
        _ => -1.0,
    })
}

/// Blown-up-codebook score for n users: ln(1 + h/n) with h the centered
/// linear score. Needs n >= 2.
pub fn bayesian_score(x: bool, y: bool, p: Probability, n: usize) -> Result<ExtendedScore> {
    if n < 2 {
        return Err(Error::InvalidInput(
            "blown-up-codebook score needs at least 2 users".into(),
        ));
    }
    Ok((oosterwijk_score(x, y, p)? / n as f64).ln_1p())
}

/// Sums the per-position score of every user against output y under a
/// per-user score model. NEG_INFINITY absorbs: one excluded cell pins the
/// user's total at the bottom.
pub fn user_scores(code: &Code, y: &[u8], model: &ScoreModel) -> Result<Vec<ExtendedScore>> {
    if !model.is_simple() {
        return Err(Error::InvalidInput(
            "user_scores needs a per-user score model, not a tuple model".into(),
        ));
    }
    model.validate()?;
    if y.len() != code.ell() {
        return Err(Error::InvalidInput(format!(
            "attack output has length {}, code has {} positions",
            y.len(),
            code.ell()
        )));
    }
    let tables: Vec<ScoreTable> = code
        .biases()
        .iter()
        .map(|&b| match model {
            ScoreModel::InformedLlr(ch) => simple_llr_table(ch, b),
            ScoreModel::UniversalG { c } => {
                ScoreTable::from_fn(|x, yy| universal_score(x, yy, b, *c))
            }
            ScoreModel::OosterwijkH => ScoreTable::from_fn(|x, yy| oosterwijk_score(x, yy, b)),
            ScoreModel::BayesianM { n, .. } => {
                ScoreTable::from_fn(|x, yy| bayesian_score(x, yy, b, *n))
            }
            _ => unreachable!("joint models rejected above"),
        })
        .collect::<Result<_>>()?;
    Ok((0..code.n())
        .map(|user| {
            let row = code.row(user);
            let mut total = 0.0;
            for (i, table) in tables.iter().enumerate() {
                total += table.get(row[i] != 0, y[i] != 0);
            }
            total
        })
        .collect())
}
