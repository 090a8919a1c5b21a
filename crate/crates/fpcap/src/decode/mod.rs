//! Score functions, threshold/length calculators, and accusation procedures.

mod accuse;
mod params;
mod scores;

pub use accuse::{
    accuse_joint, accuse_simple, joint_tuple_score, AccusationResult, JointAccusationResult,
    JointBudget,
};
pub use params::{
    joint_moment_fn, moment_fn, scheme_params_joint, scheme_params_simple, SchemeParams,
};
pub use scores::{
    bayesian_score, oosterwijk_score, simple_llr_table, universal_score, user_scores, ScoreTable,
};

use crate::channels::CollusionChannel;
use crate::error::{Error, Result};

/// Which score a decoder accumulates.
#[derive(Clone, Debug)]
pub enum ScoreModel {
    /// Per-user log-likelihood ratio matched to a known channel.
    InformedLlr(CollusionChannel),
    /// Channel-independent per-user score for coalitions up to size c.
    UniversalG { c: usize },
    /// Centered linear per-user score; needs no coalition size.
    OosterwijkH,
    /// Blown-up-codebook per-user score for n users, coalitions of size c.
    BayesianM { c: usize, n: usize },
    /// Tuple log-likelihood ratio matched to a known channel.
    JointLlr(CollusionChannel),
    /// Channel-independent tuple score for coalitions of size c.
    JointUniversal { c: usize },
}

impl ScoreModel {
    pub fn is_joint(&self) -> bool {
        matches!(
            self,
            ScoreModel::JointLlr(_) | ScoreModel::JointUniversal { .. }
        )
    }

    pub fn is_simple(&self) -> bool {
        !self.is_joint()
    }

    /// Coalition size the model is tuned for, when it has one.
    pub fn coalition_size(&self) -> Option<usize> {
        match self {
            ScoreModel::InformedLlr(ch) | ScoreModel::JointLlr(ch) => Some(ch.c()),
            ScoreModel::UniversalG { c }
            | ScoreModel::BayesianM { c, .. }
            | ScoreModel::JointUniversal { c } => Some(*c),
            ScoreModel::OosterwijkH => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScoreModel::UniversalG { c } if *c < 2 => Err(Error::InvalidInput(
                "universal score needs coalition size at least 2".into(),
            )),
            ScoreModel::BayesianM { n, .. } if *n < 2 => Err(Error::InvalidInput(
                "blown-up-codebook score needs at least 2 users".into(),
            )),
            ScoreModel::BayesianM { c, .. } | ScoreModel::JointUniversal { c } if *c < 1 => Err(
                Error::InvalidInput("coalition size must be at least 1".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoreModel::InformedLlr(_) => "informed-llr",
            ScoreModel::UniversalG { .. } => "universal",
            ScoreModel::OosterwijkH => "oosterwijk",
            ScoreModel::BayesianM { .. } => "bayesian",
            ScoreModel::JointLlr(_) => "joint-llr",
            ScoreModel::JointUniversal { .. } => "joint-universal",
        }
    }
}
