use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use fpcap::capacity::{self, CapacityTableRow, Mode, Side};
use fpcap::channels::{AttackKind, CollusionChannel};
use fpcap::decode::{scheme_params_joint, scheme_params_simple, SchemeParams, ScoreModel};
use fpcap::encode::BiasModel;
use fpcap::sim::{self, Scenario};
use fpcap::{Error, Probability, Result, RngStream};

use crate::args::{
    BiasArg, CapacityOpts, Cli, Command, DecoderArg, GrouptestOpts, ModeArg, PArg, ParamsOpts,
    ScanOpts, SideArg, SimulateOpts, TableOpts,
};
use crate::output::{self, csv_num, sig12, Report};
use crate::scan;

pub fn main_entry() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => match dispatch(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                if e.is_refusal() {
                    2
                } else {
                    1
                }
            }
        },
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            0
        }
        Err(e) => {
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("invalid arguments"));
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        // Errors only if a pool already exists, which is fine to keep.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let seed = resolve_seed(cli.seed)?;
    let report = match cli.command {
        Command::Capacity(o) => capacity_cmd(&o)?,
        Command::Table(o) => table_cmd(&o)?,
        Command::Params(o) => params_cmd(&o)?,
        Command::Simulate(o) => simulate_cmd(&o, seed)?,
        Command::Grouptest(o) => grouptest_cmd(&o, seed)?,
        Command::ScanScorefns(o) => scan_cmd(&o)?,
    };
    output::emit(&report, cli.format, cli.out.as_deref())
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("FPCAP_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::InvalidInput(format!("FPCAP_SEED must be an unsigned integer, got {v:?}"))
        }),
        Err(_) => Ok(0),
    }
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Simple => Mode::Simple,
            ModeArg::Joint => Mode::Joint,
        }
    }
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Full => Side::Full,
            SideArg::Partial => Side::Partial,
        }
    }
}

fn prob(v: f64, what: &str) -> Result<Probability> {
    Probability::new(v)
        .map_err(|_| Error::InvalidInput(format!("{what} must lie in [0, 1], got {v}")))
}

/// Channel from a named attack (needs --c) or from a description file.
fn resolve_channel(
    attack: Option<&str>,
    file: Option<&Path>,
    c: Option<usize>,
) -> Result<(CollusionChannel, Option<AttackKind>)> {
    match (attack, file) {
        (Some(name), None) => {
            let kind = AttackKind::parse(name)?;
            let c = c.ok_or_else(|| Error::InvalidInput("--c is required with --attack".into()))?;
            Ok((CollusionChannel::attack(kind, c)?, Some(kind)))
        }
        (None, Some(path)) => {
            let channel = CollusionChannel::from_text_file(path)?;
            if let Some(cv) = c {
                if cv != channel.c() {
                    return Err(Error::InvalidInput(format!(
                        "--c {cv} does not match the channel file's c = {}",
                        channel.c()
                    )));
                }
            }
            Ok((channel, None))
        }
        (None, None) => Err(Error::InvalidInput(
            "one of --attack or --channel-file is required".into(),
        )),
        (Some(_), Some(_)) => unreachable!("the parser rejects the combination"),
    }
}

fn attack_label(kind: Option<AttackKind>) -> &'static str {
    kind.map(AttackKind::name).unwrap_or("custom")
}

/// Bias maximizing the payoff the decoder is designed around.
fn optimal_bias(channel: &CollusionChannel, mode: Mode) -> Result<Probability> {
    let payoff = |p: Probability| match mode {
        Mode::Simple => capacity::simple_mi(channel, p),
        Mode::Joint => capacity::joint_mi_rate(channel, p),
    };
    let res = capacity::maximize_over_p(payoff, channel.c() as u64)?;
    res.optimal_p.ok_or_else(|| {
        Error::InvalidInput("the payoff has no interior maximizing bias".into())
    })
}

const TABLE_CSV_HEADER: &str = "attack,mode,side,c,capacity_bits,optimal_p,L,scaled_constant\n";

fn table_csv_line(row: &CapacityTableRow) -> String {
    let p_cell = row
        .result
        .optimal_p
        .map(|p| csv_num(p.value()))
        .unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{}\n",
        row.attack.name(),
        row.mode.name(),
        row.side.name(),
        row.c,
        csv_num(row.result.capacity_bits),
        p_cell,
        csv_num(row.l_normalized),
        csv_num(row.scaled_constant),
    )
}

fn row_json(row: &CapacityTableRow) -> Value {
    json!({
        "attack": row.attack.name(),
        "mode": row.mode.name(),
        "side": row.side.name(),
        "c": row.c,
        "capacity_bits": sig12(row.result.capacity_bits),
        "optimal_p": row.result.optimal_p.map_or(Value::Null, |p| sig12(p.value())),
        "length_constant_l": sig12(row.result.length_constant_l),
        "scaling_exponent": row.scaling_exponent,
        "scaled_constant": sig12(row.scaled_constant),
        "l_normalized": sig12(row.l_normalized),
        "degenerate": row.result.degenerate,
    })
}

fn capacity_units() -> Value {
    json!({
        "capacity_bits": "bits per code position",
        "length_constant_l": "code positions",
        "L": "length_constant_l / c^scaling_exponent",
        "scaled_constant": "capacity_bits * c^scaling_exponent",
    })
}

fn capacity_cmd(o: &CapacityOpts) -> Result<Report> {
    let kind = AttackKind::parse(&o.attack)?;
    let row = capacity::capacity_row(kind, o.c, o.mode.into(), o.side.into(), o.nodes)?;
    let inputs = json!({
        "attack": kind.name(),
        "c": o.c,
        "mode": Mode::from(o.mode).name(),
        "side": Side::from(o.side).name(),
        "nodes": o.nodes,
    });
    let csv = format!("{TABLE_CSV_HEADER}{}", table_csv_line(&row));
    Ok(Report {
        json: output::envelope("capacity", inputs, None, row_json(&row), capacity_units()),
        csv,
    })
}

fn table_cmd(o: &TableOpts) -> Result<Report> {
    let kinds: Vec<AttackKind> = if o.attack.iter().any(|a| a.eq_ignore_ascii_case("all")) {
        AttackKind::ALL.to_vec()
    } else {
        o.attack
            .iter()
            .map(|a| AttackKind::parse(a))
            .collect::<Result<_>>()?
    };
    if o.c.is_empty() {
        return Err(Error::InvalidInput("--c needs at least one value".into()));
    }
    let mode = Mode::from(o.mode);
    let side = Side::from(o.side);
    let mut rows = Vec::new();
    let mut csv = String::from(TABLE_CSV_HEADER);
    for &cv in &o.c {
        for (kind, res) in capacity::capacity_table(&kinds, cv, mode, side, o.nodes) {
            match res {
                Ok(row) => {
                    csv.push_str(&table_csv_line(&row));
                    rows.push(row_json(&row));
                }
                // A bad (attack, c) pair turns into an error row so the
                // rest of the table still comes out.
                Err(e) => rows.push(json!({
                    "attack": kind.name(),
                    "c": cv,
                    "error": e.to_string(),
                })),
            }
        }
    }
    let inputs = json!({
        "attack": kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "c": o.c,
        "mode": mode.name(),
        "side": side.name(),
        "nodes": o.nodes,
    });
    Ok(Report {
        json: output::envelope("table", inputs, None, json!({ "rows": rows }), capacity_units()),
        csv,
    })
}

fn scheme_json(params: &SchemeParams) -> Value {
    json!({
        "eta": sig12(params.eta),
        "gamma": sig12(params.gamma),
        "m_at_point": sig12(params.m_at_point),
        "ell_raw": sig12(params.ell_raw),
        "ell": params.ell,
    })
}

fn params_cmd(o: &ParamsOpts) -> Result<Report> {
    let (channel, kind) = resolve_channel(o.attack.as_deref(), o.channel_file.as_deref(), o.c)?;
    let e1 = prob(o.eps1, "eps1")?;
    let e2 = prob(o.eps2, "eps2")?;
    let mode = Mode::from(o.mode);
    let (p_used, p_source) = match o.p {
        PArg::Value(v) => (prob(v, "p")?, "given"),
        PArg::Auto => (optimal_bias(&channel, mode)?, "optimized"),
    };
    let params = match mode {
        Mode::Simple => scheme_params_simple(o.n, e1, e2, &channel, p_used)?,
        Mode::Joint => scheme_params_joint(o.n, channel.c(), e1, e2, &channel, p_used)?,
    };
    let inputs = json!({
        "n": o.n,
        "eps1": o.eps1,
        "eps2": o.eps2,
        "attack": attack_label(kind),
        "c": channel.c(),
        "p": match o.p { PArg::Auto => json!("auto"), PArg::Value(v) => json!(v) },
        "mode": mode.name(),
    });
    let mut results = scheme_json(&params);
    results["p"] = sig12(p_used.value());
    results["p_source"] = json!(p_source);
    let csv = format!(
        "n,c,mode,attack,p,eps1,eps2,eta,gamma,m_at_point,ell_raw,ell\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        o.n,
        channel.c(),
        mode.name(),
        attack_label(kind),
        csv_num(p_used.value()),
        csv_num(o.eps1),
        csv_num(o.eps2),
        csv_num(params.eta),
        csv_num(params.gamma),
        csv_num(params.m_at_point),
        csv_num(params.ell_raw),
        params.ell,
    );
    let units = json!({ "eta": "nats", "ell": "code positions" });
    Ok(Report {
        json: output::envelope("params", inputs, None, results, units),
        csv,
    })
}

fn score_model_for(decoder: DecoderArg, channel: &CollusionChannel, n: usize) -> ScoreModel {
    let c = channel.c();
    match decoder {
        DecoderArg::Informed => ScoreModel::InformedLlr(channel.clone()),
        DecoderArg::Universal => ScoreModel::UniversalG { c },
        DecoderArg::Oosterwijk => ScoreModel::OosterwijkH,
        DecoderArg::Bayesian => ScoreModel::BayesianM { c, n },
        DecoderArg::Joint => ScoreModel::JointLlr(channel.clone()),
        DecoderArg::JointUniversal => ScoreModel::JointUniversal { c },
    }
}

fn simulate_cmd(o: &SimulateOpts, seed: u64) -> Result<Report> {
    let (channel, kind) = resolve_channel(o.attack.as_deref(), o.channel_file.as_deref(), o.c)?;
    let c = channel.c();
    let e1 = prob(o.eps1, "eps1")?;
    let e2 = prob(o.eps2, "eps2")?;
    let matched = matches!(o.decoder, DecoderArg::Informed | DecoderArg::Joint);
    let mode = match o.decoder {
        DecoderArg::Joint | DecoderArg::JointUniversal => Mode::Joint,
        _ => Mode::Simple,
    };
    let p_resolved = match o.p {
        PArg::Value(v) => Some(prob(v, "p")?),
        PArg::Auto if matched => Some(optimal_bias(&channel, mode)?),
        PArg::Auto => None,
    };
    if o.delta.is_some() && o.bias != BiasArg::Cutoff {
        return Err(Error::InvalidInput(
            "--delta only applies to --bias cutoff".into(),
        ));
    }
    let bias_model = match o.bias {
        BiasArg::Auto => match p_resolved {
            Some(p) => BiasModel::Fixed(p),
            None => BiasModel::Arcsine,
        },
        BiasArg::Fixed => BiasModel::Fixed(p_resolved.ok_or_else(|| {
            Error::InvalidInput("--bias fixed needs --p <number> or a matched decoder".into())
        })?),
        BiasArg::Arcsine => BiasModel::Arcsine,
        BiasArg::Cutoff => BiasModel::ArcsineCutoff {
            delta: o.delta.unwrap_or_else(|| BiasModel::default_cutoff_delta(c)),
        },
    };
    // Scheme parameters back the eta/ell defaults when the decoder is the
    // matched one the construction assumes and the bias is a single number.
    let scheme = match (matched, bias_model) {
        _ if o.eta.is_some() && o.ell.is_some() => None,
        (true, BiasModel::Fixed(p)) => Some(match mode {
            Mode::Simple => scheme_params_simple(o.n, e1, e2, &channel, p)?,
            Mode::Joint => scheme_params_joint(o.n, c, e1, e2, &channel, p)?,
        }),
        _ => None,
    };
    let eta = o.eta.unwrap_or_else(|| match &scheme {
        Some(s) => s.eta,
        None => match mode {
            Mode::Simple => (o.n as f64 / o.eps1).ln(),
            Mode::Joint => c as f64 * (o.n as f64).ln() + (1.0 / o.eps1).ln(),
        },
    });
    let ell = match o.ell {
        Some(l) => l,
        None => match &scheme {
            Some(s) => s.ell as usize,
            None => (4.0 * (c as f64).powi(2) * (o.n as f64).ln()).ceil() as usize,
        },
    };
    if (ell as u128) * (o.n as u128) > 1 << 31 {
        return Err(Error::InvalidInput(format!(
            "a {} x {ell} code matrix is too large to simulate; lower --n or pass --ell",
            o.n
        )));
    }
    let score_model = score_model_for(o.decoder, &channel, o.n);
    let scenario = Scenario::new(o.n, c, channel, bias_model, score_model, eta, ell)?;
    let master = RngStream::new(seed);
    let outcomes = sim::run_trials(&scenario, o.trials, master)?;
    let est = sim::summarize_outcomes(&outcomes, seed);

    if let Some(path) = &o.per_trial_out {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(b"trial,seed,fp,fn,accused_guilty_count\n")?;
        for (i, t) in outcomes.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{},{},{}",
                t.seed,
                u8::from(t.fp_occurred),
                u8::from(t.fn_occurred),
                t.accused_guilty_count
            )?;
        }
        w.flush()?;
    }
    if let Some(path) = &o.save_code {
        let code = sim::trial_code(&scenario, 0, master)?;
        let mut w = BufWriter::new(File::create(path)?);
        code.write_binary(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &o.dump_code {
        let code = sim::trial_code(&scenario, 0, master)?;
        let mut w = BufWriter::new(File::create(path)?);
        code.debug_dump(&mut w)?;
        w.flush()?;
    }

    let bias_name = match bias_model {
        BiasModel::Fixed(_) => "fixed",
        BiasModel::Arcsine => "arcsine",
        BiasModel::ArcsineCutoff { .. } => "cutoff",
    };
    let delta_used = match bias_model {
        BiasModel::ArcsineCutoff { delta } => Some(delta),
        _ => None,
    };
    let inputs = json!({
        "decoder": o.decoder.name(),
        "attack": attack_label(kind),
        "n": o.n,
        "c": c,
        "trials": o.trials,
        "eps1": o.eps1,
        "eps2": o.eps2,
        "p": match o.p { PArg::Auto => json!("auto"), PArg::Value(v) => json!(v) },
        "bias": bias_name,
    });
    let results = json!({
        "p": p_resolved.map_or(Value::Null, |p| sig12(p.value())),
        "bias": bias_name,
        "delta": delta_used.map_or(Value::Null, sig12),
        "eta": sig12(eta),
        "ell": ell,
        "scheme": scheme.as_ref().map_or(Value::Null, scheme_json),
        "trials": est.trials,
        "fp_count": est.fp_count,
        "fn_count": est.fn_count,
        "fp_rate": sig12(est.fp_rate),
        "fn_rate": sig12(est.fn_rate),
        "fp_ci": [sig12(est.fp_ci.0), sig12(est.fp_ci.1)],
        "fn_ci": [sig12(est.fn_ci.0), sig12(est.fn_ci.1)],
    });
    let csv = format!(
        "decoder,attack,n,c,trials,p,eta,ell,fp_count,fn_count,fp_rate,fn_rate,fp_ci_lo,fp_ci_hi,fn_ci_lo,fn_ci_hi,master_seed\n\
         {},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        o.decoder.name(),
        attack_label(kind),
        o.n,
        c,
        est.trials,
        p_resolved.map(|p| csv_num(p.value())).unwrap_or_default(),
        csv_num(eta),
        ell,
        est.fp_count,
        est.fn_count,
        csv_num(est.fp_rate),
        csv_num(est.fn_rate),
        csv_num(est.fp_ci.0),
        csv_num(est.fp_ci.1),
        csv_num(est.fn_ci.0),
        csv_num(est.fn_ci.1),
        seed,
    );
    let units = json!({
        "eta": "nats",
        "ell": "code positions",
        "rates": "fraction of trials, with 95% Wilson intervals",
    });
    Ok(Report {
        json: output::envelope("simulate", inputs, Some(seed), results, units),
        csv,
    })
}

fn grouptest_cmd(o: &GrouptestOpts, seed: u64) -> Result<Report> {
    let e1 = prob(o.eps1, "eps1")?;
    let e2 = prob(o.eps2, "eps2")?;
    let report = sim::group_testing_run(o.n, o.c, e1, e2, o.trials, RngStream::new(seed))?;
    let est = &report.estimate;
    let inputs = json!({
        "n": o.n,
        "c": o.c,
        "eps1": o.eps1,
        "eps2": o.eps2,
        "trials": o.trials,
    });
    let mut results = scheme_json(&report.params);
    results["p"] = sig12(report.p.value());
    results["ratio_eta_normalized"] = sig12(report.ratio_eta_normalized);
    results["ratio_log_n"] = sig12(report.ratio_log_n);
    results["trials"] = json!(est.trials);
    results["fp_count"] = json!(est.fp_count);
    results["fn_count"] = json!(est.fn_count);
    results["fp_rate"] = sig12(est.fp_rate);
    results["fn_rate"] = sig12(est.fn_rate);
    let csv = format!(
        "n,c,eps1,eps2,trials,p,eta,ell,ratio_eta_normalized,ratio_log_n,fp_rate,fn_rate\n\
         {},{},{},{},{},{},{},{},{},{},{},{}\n",
        o.n,
        o.c,
        csv_num(o.eps1),
        csv_num(o.eps2),
        est.trials,
        csv_num(report.p.value()),
        csv_num(report.params.eta),
        report.params.ell,
        csv_num(report.ratio_eta_normalized),
        csv_num(report.ratio_log_n),
        csv_num(est.fp_rate),
        csv_num(est.fn_rate),
    );
    let units = json!({
        "eta": "nats",
        "ell": "code positions",
        "ratio_eta_normalized": "ell / (c * eta)",
        "ratio_log_n": "ell / (c * ln n)",
    });
    Ok(Report {
        json: output::envelope("grouptest", inputs, Some(seed), results, units),
        csv,
    })
}

fn scan_cmd(o: &ScanOpts) -> Result<Report> {
    let report = scan::scan_scorefns(o.c, o.n, o.p_min, o.p_max, o.p_step)?;
    let inputs = json!({
        "c": o.c,
        "n": o.n,
        "p_min": o.p_min,
        "p_max": o.p_max,
        "p_step": o.p_step,
    });
    let cell_json = |s: &scan::CellScan| {
        json!({
            "cell": s.cell,
            "max_abs_universal": sig12(s.max_abs_universal),
            "max_rel_universal": sig12(s.max_rel_universal),
            "max_abs_bayesian": sig12(s.max_abs_bayesian),
        })
    };
    let results = json!({
        "points": report.points,
        "cells": report.cells.iter().map(cell_json).collect::<Vec<_>>(),
        "max_abs_universal": sig12(report.max_abs_universal()),
        "max_rel_universal": sig12(report.max_rel_universal()),
        "max_abs_bayesian": sig12(report.max_abs_bayesian()),
    });
    let mut csv =
        String::from("cell,points,max_abs_universal,max_rel_universal,max_abs_bayesian\n");
    for s in &report.cells {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            s.cell,
            report.points,
            csv_num(s.max_abs_universal),
            csv_num(s.max_rel_universal),
            csv_num(s.max_abs_bayesian),
        ));
    }
    csv.push_str(&format!(
        "all,{},{},{},{}\n",
        report.points,
        csv_num(report.max_abs_universal()),
        csv_num(report.max_rel_universal()),
        csv_num(report.max_abs_bayesian()),
    ));
    let units = json!({
        "max_abs_universal": "score units, c * universal minus linear",
        "max_rel_universal": "relative to the linear score",
        "max_abs_bayesian": "score units, n * bayesian minus linear",
    });
    Ok(Report {
        json: output::envelope("scan-scorefns", inputs, None, results, units),
        csv,
    })
}
