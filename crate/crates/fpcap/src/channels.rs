//! Colluder-symmetric attack channels.
//!
//! A channel for coalition size c is the vector theta[0..=c], where theta[z]
//! is the probability the attack emits 1 when z of the c colluders hold a 1.
//! Marking is enforced at construction: theta[0] = 0 and theta[c] = 1.

use crate::error::{Error, Result};
use crate::prob::{log_binom_pmf, CompensatedSum, Probability};
use crate::rng::RngStream;
use rand::Rng;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttackKind {
    /// Copy a uniformly random colluder's symbol: theta[z] = z/c.
    Interleaving,
    /// Emit 1 whenever any colluder holds a 1.
    All1,
    /// Emit the majority symbol (odd c only).
    Majority,
    /// Emit the minority symbol where marking allows (odd c only).
    Minority,
    /// Fair coin wherever marking does not force the output.
    CoinFlip,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::Interleaving,
        AttackKind::All1,
        AttackKind::Majority,
        AttackKind::Minority,
        AttackKind::CoinFlip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Interleaving => "interleaving",
            AttackKind::All1 => "all1",
            AttackKind::Majority => "majority",
            AttackKind::Minority => "minority",
            AttackKind::CoinFlip => "coinflip",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "interleaving" => Ok(AttackKind::Interleaving),
            "all1" => Ok(AttackKind::All1),
            "majority" => Ok(AttackKind::Majority),
            "minority" => Ok(AttackKind::Minority),
            "coinflip" => Ok(AttackKind::CoinFlip),
            other => Err(Error::InvalidInput(format!(
                "unknown attack '{other}' \
                 (expected interleaving|all1|majority|minority|coinflip)"
            ))),
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackKind::parse(s)
    }
}

/// Output marginals of a channel under i.i.d. Bernoulli(p) colluder symbols:
/// `a` unconditioned, `a0`/`a1` conditioned on one designated colluder
/// holding 0 / 1.
#[derive(Clone, Copy, Debug)]
pub struct ChannelMarginals {
    pub p: Probability,
    pub a: Probability,
    pub a0: Probability,
    pub a1: Probability,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollusionChannel {
    c: usize,
    thetas: Vec<Probability>,
}

impl CollusionChannel {
    /// Builds one of the named attacks for coalition size c.
    pub fn attack(kind: AttackKind, c: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidInput(
                "coalition size must be at least 1".into(),
            ));
        }
        if matches!(kind, AttackKind::Majority | AttackKind::Minority) && c % 2 == 0 {
            return Err(Error::EvenCoalition {
                attack: kind.name(),
                c,
            });
        }
        let thetas: Vec<f64> = (0..=c)
            .map(|z| match kind {
                AttackKind::Interleaving => z as f64 / c as f64,
                AttackKind::All1 => f64::from(z > 0),
                AttackKind::Majority => f64::from(2 * z > c),
                AttackKind::Minority => {
                    if z == 0 {
                        0.0
                    } else if z == c {
                        1.0
                    } else {
                        f64::from(2 * z < c)
                    }
                }
                AttackKind::CoinFlip => {
                    if z == 0 {
                        0.0
                    } else if z == c {
                        1.0
                    } else {
                        0.5
                    }
                }
            })
            .collect();
        Self::custom(c, &thetas)
    }

    /// Builds a channel from explicit theta entries, enforcing marking.
    pub fn custom(c: usize, thetas: &[f64]) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidInput(
                "coalition size must be at least 1".into(),
            ));
        }
        if thetas.len() != c + 1 {
            return Err(Error::InvalidInput(format!(
                "channel for c = {c} needs {} entries, got {}",
                c + 1,
                thetas.len()
            )));
        }
        if thetas[0] != 0.0 {
            return Err(Error::Marking(format!(
                "theta[0] must be exactly 0, got {}",
                thetas[0]
            )));
        }
        if thetas[c] != 1.0 {
            return Err(Error::Marking(format!(
                "theta[c] must be exactly 1, got {}",
                thetas[c]
            )));
        }
        let thetas = thetas
            .iter()
            .map(|&t| Probability::new(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { c, thetas })
    }

    /// Parses the two-line text form: first line c, second line the c+1
    /// whitespace-separated theta values.
    pub fn from_text(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::FileFormat("missing coalition-size line".into()))??;
        let c: usize = first
            .trim()
            .parse()
            .map_err(|_| Error::FileFormat(format!("bad coalition size '{}'", first.trim())))?;
        let second = lines
            .next()
            .ok_or_else(|| Error::FileFormat("missing theta line".into()))??;
        let thetas = second
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::FileFormat(format!("bad theta value '{tok}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::custom(c, &thetas)
    }

    pub fn from_text_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_text(std::io::BufReader::new(file))
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn thetas(&self) -> &[Probability] {
        &self.thetas
    }

    pub fn theta(&self, z: usize) -> f64 {
        self.thetas[z].value()
    }

    /// True when theta[c-z] = 1 - theta[z] for all z (up to roundoff).
    pub fn is_symmetric(&self) -> bool {
        (0..=self.c).all(|z| (self.theta(self.c - z) - (1.0 - self.theta(z))).abs() <= 1e-12)
    }

    /// Output marginals under i.i.d. Bernoulli(p) colluder symbols.
    ///
    /// `a` is accumulated over the full c-trial binomial, `a0`/`a1` over the
    /// (c-1)-trial binomial of the remaining colluders, so the consistency
    /// identity a = p a1 + (1-p) a0 is a real cross-check rather than a
    /// restatement. Endpoint p gives the natural limit values.
    pub fn marginals(&self, p: Probability) -> Result<ChannelMarginals> {
        let c = self.c as u64;
        let mut a = CompensatedSum::default();
        for z in 0..=self.c {
            let w = log_binom_pmf(c, z as u64, p)?.exp();
            if w > 0.0 {
                a.add(w * self.theta(z));
            }
        }
        let mut a0 = CompensatedSum::default();
        for z in 0..self.c {
            let w = log_binom_pmf(c - 1, z as u64, p)?.exp();
            if w > 0.0 {
                a0.add(w * self.theta(z));
            }
        }
        let mut a1 = CompensatedSum::default();
        for z in 1..=self.c {
            let w = log_binom_pmf(c - 1, (z - 1) as u64, p)?.exp();
            if w > 0.0 {
                a1.add(w * self.theta(z));
            }
        }
        // When every reachable theta is 1 the true marginal is exactly 1, but
        // the weighted sum can land an ulp short. Snap so the complement of a
        // forced output is exactly zero; fractional powers and log ratios of
        // the residue would otherwise be wildly off scale. Compensated sums of
        // nonnegative terms bounded by 1 err by at most a couple ulps, and a
        // genuine marginal this close to 1 needs a theta within ulps of 1, a
        // distinction nothing downstream can use. Sums of nonnegative terms
        // reach the bottom endpoint exactly, so only the top needs help.
        fn snap_high(total: f64) -> f64 {
            if total >= 1.0 - 4.0 * f64::EPSILON {
                1.0
            } else {
                total
            }
        }
        Ok(ChannelMarginals {
            p,
            a: Probability::clamped(snap_high(a.total())),
            a0: Probability::clamped(snap_high(a0.total())),
            a1: Probability::clamped(snap_high(a1.total())),
        })
    }

    /// Applies the attack to the coalition's code rows, drawing one output
    /// symbol per position. Rows must all share one length; nonzero bytes
    /// count as symbol 1. Randomness comes only from `rng`, so concurrent
    /// trials with disjoint streams never interact.
    pub fn pirate_output(&self, coalition_rows: &[&[u8]], rng: RngStream) -> Result<Vec<u8>> {
        if coalition_rows.len() != self.c {
            return Err(Error::InvalidInput(format!(
                "coalition has {} rows but the channel expects c = {}",
                coalition_rows.len(),
                self.c
            )));
        }
        let ell = coalition_rows[0].len();
        if coalition_rows.iter().any(|r| r.len() != ell) {
            return Err(Error::InvalidInput(
                "coalition rows must all share one length".into(),
            ));
        }
        let mut r = rng.rng();
        Ok((0..ell)
            .map(|i| {
                let z = coalition_rows.iter().filter(|row| row[i] != 0).count();
                u8::from(r.random::<f64>() < self.theta(z))
            })
            .collect())
    }
}
