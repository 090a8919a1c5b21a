//! Seeded end-to-end trials: embed a code, attack it, decode, and count
//! false positives and false negatives over many independent repetitions.

use rayon::prelude::*;

use crate::channels::CollusionChannel;
use crate::decode::{
    accuse_joint, accuse_simple, bayesian_score, oosterwijk_score, scheme_params_simple,
    simple_llr_table, universal_score, user_scores, JointBudget, ScoreModel, SchemeParams,
};
use crate::encode::{draw_biases, generate_code, BiasModel, Code};
use crate::error::{Error, Result};
use crate::prob::{CompensatedSum, ExtendedScore, Probability};
use crate::rng::RngStream;

/// A fully specified experiment: everything a trial needs except the seed.
#[derive(Clone, Debug)]
pub struct Scenario {
    n: usize,
    c: usize,
    attack: CollusionChannel,
    bias_model: BiasModel,
    score_model: ScoreModel,
    eta: f64,
    ell: usize,
}

impl Scenario {
    pub fn new(
        n: usize,
        c: usize,
        attack: CollusionChannel,
        bias_model: BiasModel,
        score_model: ScoreModel,
        eta: f64,
        ell: usize,
    ) -> Result<Self> {
        if c == 0 || c > n {
            return Err(Error::InvalidInput(format!(
                "coalition size {c} must satisfy 1 <= c <= n (n = {n})"
            )));
        }
        if attack.c() != c {
            return Err(Error::InvalidInput(format!(
                "attack channel is for c = {} but the scenario has c = {c}",
                attack.c()
            )));
        }
        bias_model.validate()?;
        score_model.validate()?;
        if let Some(mc) = score_model.coalition_size() {
            if mc != c {
                return Err(Error::InvalidInput(format!(
                    "score model {} assumes c = {mc} but the scenario has c = {c}",
                    score_model.name()
                )));
            }
        }
        if let ScoreModel::BayesianM { n: model_n, .. } = score_model {
            if model_n != n {
                return Err(Error::InvalidInput(format!(
                    "bayesian score assumes n = {model_n} but the scenario has n = {n}"
                )));
            }
        }
        if ell == 0 {
            return Err(Error::InvalidInput("code length must be positive".into()));
        }
        if eta.is_nan() {
            return Err(Error::InvalidInput("threshold must not be NaN".into()));
        }
        Ok(Scenario {
            n,
            c,
            attack,
            bias_model,
            score_model,
            eta,
            ell,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn attack(&self) -> &CollusionChannel {
        &self.attack
    }

    pub fn score_model(&self) -> &ScoreModel {
        &self.score_model
    }

    pub fn is_joint(&self) -> bool {
        self.score_model.is_joint()
    }
}

/// What happened in one trial. `seed` is the trial's derived stream index,
/// enough to replay the trial on its own.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub fp_occurred: bool,
    pub fn_occurred: bool,
    /// Guilty users accused; for tuple decoding, c when the coalition's own
    /// tuple clears the threshold and 0 otherwise.
    pub accused_guilty_count: usize,
    pub seed: u64,
}

// Fixed substream roles within a trial; new roles append, never reorder.
const SUB_COALITION: u64 = 0;
const SUB_BIASES: u64 = 1;
const SUB_CODE: u64 = 2;
const SUB_ATTACK: u64 = 3;

fn trial_inputs(
    scenario: &Scenario,
    trial_index: u64,
    master: RngStream,
) -> Result<(RngStream, Vec<usize>, Code)> {
    let trial = master.substream(trial_index);
    let mut coalition = rand::seq::index::sample(
        &mut trial.substream(SUB_COALITION).rng(),
        scenario.n,
        scenario.c,
    )
    .into_vec();
    coalition.sort_unstable();
    let biases = draw_biases(scenario.bias_model, scenario.ell, trial.substream(SUB_BIASES))?;
    let code = generate_code(scenario.n, &biases, trial.substream(SUB_CODE))?;
    Ok((trial, coalition, code))
}

/// The code an indexed trial embeds, without running the decoder.
pub fn trial_code(scenario: &Scenario, trial_index: u64, master: RngStream) -> Result<Code> {
    trial_inputs(scenario, trial_index, master).map(|(_, _, code)| code)
}

/// Run one complete trial: pick a coalition, embed, attack, decode.
pub fn run_trial(scenario: &Scenario, trial_index: u64, master: RngStream) -> Result<TrialOutcome> {
    let (trial, coalition, code) = trial_inputs(scenario, trial_index, master)?;
    let rows: Vec<&[u8]> = coalition.iter().map(|&j| code.row(j)).collect();
    let y = scenario.attack.pirate_output(&rows, trial.substream(SUB_ATTACK))?;

    let (fp_occurred, fn_occurred, accused_guilty_count) = if scenario.is_joint() {
        let res = accuse_joint(
            &code,
            &y,
            &scenario.score_model,
            scenario.eta,
            Some(&coalition),
            JointBudget::default(),
        )?;
        let caught = res.all_guilty_flagged.expect("ground truth was supplied");
        let fp = res
            .any_all_innocent_flagged
            .expect("ground truth was supplied");
        (fp, !caught, if caught { scenario.c } else { 0 })
    } else {
        let scores = user_scores(&code, &y, &scenario.score_model)?;
        let res = accuse_simple(scores, scenario.eta);
        let guilty = res
            .accused
            .iter()
            .filter(|j| coalition.binary_search(j).is_ok())
            .count();
        let fp = res.accused.len() > guilty;
        (fp, guilty == 0, guilty)
    };

    Ok(TrialOutcome {
        fp_occurred,
        fn_occurred,
        accused_guilty_count,
        seed: trial.stream_index,
    })
}

/// Aggregated error rates with two-sided 95% score intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub trials: usize,
    pub fp_count: usize,
    pub fn_count: usize,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub fp_ci: (f64, f64),
    pub fn_ci: (f64, f64),
    pub master_seed: u64,
}

/// 97.5% standard normal quantile for the 95% interval.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials` at 95% coverage.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let t = trials as f64;
    let ph = successes as f64 / t;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / t;
    let center = (ph + z2 / (2.0 * t)) / denom;
    let half = WILSON_Z * (ph * (1.0 - ph) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    // The endpoints are exact at the boundary counts; rounding in the sqrt
    // must not leak past them.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Summarize raw trial outcomes into rate estimates.
pub fn summarize_outcomes(outcomes: &[TrialOutcome], master_seed: u64) -> ErrorEstimate {
    let trials = outcomes.len();
    let fp_count = outcomes.iter().filter(|o| o.fp_occurred).count();
    let fn_count = outcomes.iter().filter(|o| o.fn_occurred).count();
    let t = trials.max(1) as f64;
    ErrorEstimate {
        trials,
        fp_count,
        fn_count,
        fp_rate: fp_count as f64 / t,
        fn_rate: fn_count as f64 / t,
        fp_ci: wilson_interval(fp_count, trials),
        fn_ci: wilson_interval(fn_count, trials),
        master_seed,
    }
}

/// Run trials 0..trials in parallel. Outcomes come back in trial order
/// regardless of scheduling, so results are reproducible across thread
/// counts.
pub fn run_trials(scenario: &Scenario, trials: usize, master: RngStream) -> Result<Vec<TrialOutcome>> {
    if trials == 0 {
        return Err(Error::InvalidInput("trial count must be positive".into()));
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(scenario, i, master))
        .collect()
}

/// Run trials and summarize.
pub fn estimate_error_rates(
    scenario: &Scenario,
    trials: usize,
    master: RngStream,
) -> Result<ErrorEstimate> {
    let outcomes = run_trials(scenario, trials, master)?;
    Ok(summarize_outcomes(&outcomes, master.master_seed))
}

/// A group-testing style experiment against the all-1 attack with the
/// matched decoder at the deterministic design bias 1 - 2^(-1/c).
#[derive(Clone, Debug, PartialEq)]
pub struct GroupTestingReport {
    pub estimate: ErrorEstimate,
    pub params: SchemeParams,
    pub p: Probability,
    /// ell / (c * eta); approaches a constant as eps2 -> 1.
    pub ratio_eta_normalized: f64,
    /// ell / (c * ln n), the same length against the bare user count.
    pub ratio_log_n: f64,
}

pub fn group_testing_run(
    n: usize,
    c: usize,
    eps1: Probability,
    eps2: Probability,
    trials: usize,
    master: RngStream,
) -> Result<GroupTestingReport> {
    let channel = CollusionChannel::attack(crate::channels::AttackKind::All1, c)?;
    // 1 - 2^(-1/c), written to avoid cancellation for large c.
    let p = Probability::new(-(-std::f64::consts::LN_2 / c as f64).exp_m1())?;
    let params = scheme_params_simple(n, eps1, eps2, &channel, p)?;
    let scenario = Scenario::new(
        n,
        c,
        channel.clone(),
        BiasModel::Fixed(p),
        ScoreModel::InformedLlr(channel),
        params.eta,
        params.ell as usize,
    )?;
    let estimate = estimate_error_rates(&scenario, trials, master)?;
    let denom = c as f64;
    Ok(GroupTestingReport {
        estimate,
        params,
        p,
        ratio_eta_normalized: params.ell as f64 / (denom * params.eta),
        ratio_log_n: params.ell as f64 / (denom * (n as f64).ln()),
    })
}

fn score_cell(model: &ScoreModel, x: bool, y: bool, p: Probability) -> Result<ExtendedScore> {
    match model {
        ScoreModel::InformedLlr(channel) => Ok(simple_llr_table(channel, p)?.get(x, y)),
        ScoreModel::UniversalG { c } => universal_score(x, y, p, *c),
        ScoreModel::OosterwijkH => oosterwijk_score(x, y, p),
        ScoreModel::BayesianM { n, .. } => bayesian_score(x, y, p, *n),
        other => Err(Error::InvalidInput(format!(
            "{} has no per-user score cells",
            other.name()
        ))),
    }
}

/// E[exp(score)] for an innocent user at one position: the symbol is
/// Bernoulli(p) independent of the output, whose law Bernoulli(a) comes
/// from the true channel. exp(-inf) contributes zero mass.
pub fn innocent_mgf_exact(
    model: &ScoreModel,
    true_channel: &CollusionChannel,
    p: Probability,
) -> Result<f64> {
    let a = true_channel.marginals(p)?.a.value();
    let pv = p.require_interior("bias p")?;
    let mut acc = CompensatedSum::default();
    for (x, px) in [(false, 1.0 - pv), (true, pv)] {
        for (y, py) in [(false, 1.0 - a), (true, a)] {
            let g = score_cell(model, x, y, p)?;
            acc.add(px * py * g.exp());
        }
    }
    Ok(acc.total())
}

/// Monte Carlo probe of the same expectation, for catching table/sampling
/// mismatches rather than for precision.
pub fn innocent_mgf_probe(
    model: &ScoreModel,
    true_channel: &CollusionChannel,
    p: Probability,
    samples: u64,
    stream: RngStream,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let a = true_channel.marginals(p)?.a.value();
    let pv = p.require_interior("bias p")?;
    let table = [
        [score_cell(model, false, false, p)?, score_cell(model, false, true, p)?],
        [score_cell(model, true, false, p)?, score_cell(model, true, true, p)?],
    ];
    let mut rng = stream.rng();
    let mut acc = CompensatedSum::default();
    for _ in 0..samples {
        let x = rand::Rng::random::<f64>(&mut rng) < pv;
        let y = rand::Rng::random::<f64>(&mut rng) < a;
        acc.add(table[usize::from(x)][usize::from(y)].exp());
    }
    Ok(acc.total() / samples as f64)
}
