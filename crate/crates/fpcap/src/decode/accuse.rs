//! Thresholding of per-user scores and exhaustive tuple accusation.

use crate::channels::CollusionChannel;
use crate::decode::ScoreModel;
use crate::encode::Code;
use crate::error::{Error, Result};
use crate::prob::ExtendedScore;

/// Per-user accusation outcome: indices with score strictly above the
/// threshold, in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct AccusationResult {
    pub accused: Vec<usize>,
    pub scores: Vec<ExtendedScore>,
    pub threshold: f64,
}

/// Accuse every user whose score exceeds eta. Equality does not accuse.
pub fn accuse_simple(scores: Vec<ExtendedScore>, eta: f64) -> AccusationResult {
    let accused = scores
        .iter()
        .enumerate()
        .filter_map(|(j, &s)| (s > eta).then_some(j))
        .collect();
    AccusationResult {
        accused,
        scores,
        threshold: eta,
    }
}

/// Cap on exhaustive tuple enumeration. The tuple count C(n, c) grows too
/// fast to scan blindly; callers must raise the cap deliberately.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointBudget {
    pub max_n: usize,
    pub max_c: usize,
}

impl Default for JointBudget {
    fn default() -> Self {
        JointBudget { max_n: 40, max_c: 4 }
    }
}

/// Outcome of scoring every c-subset of users. The ground-truth flags are
/// populated only when the caller supplied the actual coalition.
#[derive(Clone, Debug, PartialEq)]
pub struct JointAccusationResult {
    /// Tuples with score strictly above the threshold, each ascending.
    pub over_threshold: Vec<Vec<usize>>,
    pub tuples_scored: u64,
    /// Whether the true coalition itself was flagged.
    pub all_guilty_flagged: Option<bool>,
    /// Whether any flagged tuple contains no guilty user at all.
    pub any_all_innocent_flagged: Option<bool>,
}

enum TupleScorer<'a> {
    Llr {
        channel: &'a CollusionChannel,
        // Output marginal a_i per position, precomputed once.
        marg: Vec<f64>,
    },
    Universal {
        c: usize,
    },
}

impl<'a> TupleScorer<'a> {
    fn new(code: &Code, model: &'a ScoreModel) -> Result<Self> {
        match model {
            ScoreModel::JointLlr(channel) => {
                let marg = code
                    .biases()
                    .iter()
                    .map(|&p| channel.marginals(p).map(|m| m.a.value()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TupleScorer::Llr { channel, marg })
            }
            ScoreModel::JointUniversal { c } => Ok(TupleScorer::Universal { c: *c }),
            _ => Err(Error::InvalidInput(format!(
                "{} is not a tuple score model",
                model.name()
            ))),
        }
    }

    fn score(&self, code: &Code, tuple: &[usize], y: &[u8]) -> ExtendedScore {
        let mut total = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            let z = tuple.iter().filter(|&&j| code.symbol(j, i) != 0).count();
            let term = match self {
                TupleScorer::Llr { channel, marg } => {
                    let th = channel.theta(z);
                    let a = marg[i];
                    if yi != 0 {
                        log_ratio(th, a)
                    } else {
                        log_ratio(1.0 - th, 1.0 - a)
                    }
                }
                TupleScorer::Universal { c } => {
                    let c = *c as f64;
                    let p = code.biases()[i].value();
                    if yi != 0 {
                        if z == 0 {
                            f64::NEG_INFINITY
                        } else {
                            (z as f64 / c).ln() - p.ln()
                        }
                    } else if z == self.c() {
                        f64::NEG_INFINITY
                    } else {
                        (1.0 - z as f64 / c).ln() - (1.0 - p).ln()
                    }
                }
            };
            if term == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            total += term;
        }
        total
    }

    fn c(&self) -> usize {
        match self {
            TupleScorer::Llr { channel, .. } => channel.c(),
            TupleScorer::Universal { c } => *c,
        }
    }
}

fn log_ratio(num: f64, den: f64) -> ExtendedScore {
    if num == 0.0 {
        f64::NEG_INFINITY
    } else {
        (num / den).ln()
    }
}

fn validate_tuple(tuple: &[usize], n: usize, c: usize) -> Result<()> {
    if tuple.len() != c {
        return Err(Error::InvalidInput(format!(
            "tuple has {} members but the score model expects {c}",
            tuple.len()
        )));
    }
    for (k, &j) in tuple.iter().enumerate() {
        if j >= n {
            return Err(Error::InvalidInput(format!(
                "tuple member {j} is out of range for {n} users"
            )));
        }
        if tuple[..k].contains(&j) {
            return Err(Error::InvalidInput(format!("tuple repeats user {j}")));
        }
    }
    Ok(())
}

/// Score a single tuple of users against the pirate output.
pub fn joint_tuple_score(
    code: &Code,
    tuple: &[usize],
    y: &[u8],
    model: &ScoreModel,
) -> Result<ExtendedScore> {
    model.validate()?;
    let scorer = TupleScorer::new(code, model)?;
    validate_tuple(tuple, code.n(), scorer.c())?;
    if y.len() != code.ell() {
        return Err(Error::InvalidInput(format!(
            "pirate output has {} positions but the code has {}",
            y.len(),
            code.ell()
        )));
    }
    Ok(scorer.score(code, tuple, y))
}

fn binomial_count(n: usize, c: usize) -> u128 {
    let mut acc: u128 = 1;
    for k in 0..c {
        acc = acc.saturating_mul((n - k) as u128) / (k as u128 + 1);
    }
    acc
}

/// Score every c-subset of the n users and flag those above eta.
///
/// When `ground_truth` names the coalition, the result also reports whether
/// the coalition itself was flagged and whether any flagged tuple is fully
/// innocent. Enumeration refuses to start past `budget`.
pub fn accuse_joint(
    code: &Code,
    y: &[u8],
    model: &ScoreModel,
    eta: f64,
    ground_truth: Option<&[usize]>,
    budget: JointBudget,
) -> Result<JointAccusationResult> {
    model.validate()?;
    let scorer = TupleScorer::new(code, model)?;
    let (n, c) = (code.n(), scorer.c());
    if c > n {
        return Err(Error::InvalidInput(format!(
            "coalition size {c} exceeds the number of users {n}"
        )));
    }
    if n > budget.max_n || c > budget.max_c {
        return Err(Error::TupleBudget {
            required: binomial_count(n, c),
            max_n: budget.max_n,
            max_c: budget.max_c,
        });
    }
    if y.len() != code.ell() {
        return Err(Error::InvalidInput(format!(
            "pirate output has {} positions but the code has {}",
            y.len(),
            code.ell()
        )));
    }
    if let Some(gt) = ground_truth {
        validate_tuple(gt, n, c)?;
    }

    let mut over_threshold = Vec::new();
    let mut tuples_scored: u64 = 0;
    let mut all_guilty = false;
    let mut any_all_innocent = false;

    let mut tuple: Vec<usize> = (0..c).collect();
    loop {
        tuples_scored += 1;
        if scorer.score(code, &tuple, y) > eta {
            if let Some(gt) = ground_truth {
                let guilty = tuple.iter().filter(|j| gt.contains(j)).count();
                if guilty == c {
                    all_guilty = true;
                }
                if guilty == 0 {
                    any_all_innocent = true;
                }
            }
            over_threshold.push(tuple.clone());
        }
        // Advance to the next combination in lexicographic order.
        let mut k = c;
        loop {
            if k == 0 {
                return Ok(JointAccusationResult {
                    over_threshold,
                    tuples_scored,
                    all_guilty_flagged: ground_truth.map(|_| all_guilty),
                    any_all_innocent_flagged: ground_truth.map(|_| any_all_innocent),
                });
            }
            k -= 1;
            if tuple[k] != n - c + k {
                break;
            }
        }
        tuple[k] += 1;
        for i in k + 1..c {
            tuple[i] = tuple[i - 1] + 1;
        }
    }
}
