//! Bias sampling, code-matrix generation, and the code file format.
//!
//! A code is an n-by-ell binary matrix plus the per-position biases it was
//! drawn from. Column i uses its own derived substream, so generation order
//! (or concurrency) cannot change the matrix.

use crate::error::{Error, Result};
use crate::prob::{arcsine_cdf, arcsine_sample, Probability};
use crate::rng::RngStream;
use rand::Rng;
use std::io::{Read, Write};

/// How per-position biases are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BiasModel {
    /// Every position uses the same bias, strictly inside (0, 1).
    Fixed(Probability),
    /// Arcsine density on (0, 1).
    Arcsine,
    /// Arcsine density restricted and renormalized to [delta, 1 - delta].
    ArcsineCutoff { delta: f64 },
}

impl BiasModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BiasModel::Fixed(p) => {
                p.require_interior("fixed bias")?;
            }
            BiasModel::Arcsine => {}
            BiasModel::ArcsineCutoff { delta } => {
                if !(delta > 0.0 && delta < 0.5) {
                    return Err(Error::InvalidInput(format!(
                        "cutoff delta must lie strictly inside (0, 1/2), got {delta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Default cutoff width for coalition size c.
    pub fn default_cutoff_delta(c: usize) -> f64 {
        1.0 / (720.0 * c as f64)
    }
}

/// Draws per-position biases. Position i always uses substream i of `rng`,
/// so chunked or concurrent generation reproduces the sequential result.
pub fn draw_biases(model: BiasModel, ell: usize, rng: RngStream) -> Result<Vec<Probability>> {
    model.validate()?;
    if ell == 0 {
        return Err(Error::InvalidInput("code length must be at least 1".into()));
    }
    match model {
        BiasModel::Fixed(p) => Ok(vec![p; ell]),
        BiasModel::Arcsine => (0..ell)
            .map(|i| arcsine_sample(Probability::clamped(open01(rng.substream(i as u64)))))
            .collect(),
        BiasModel::ArcsineCutoff { delta } => {
            // Inverse-CDF on the restricted, renormalized interval.
            let f_lo = arcsine_cdf(Probability::new(delta)?)?.value();
            let f_hi = arcsine_cdf(Probability::new(1.0 - delta)?)?.value();
            (0..ell)
                .map(|i| {
                    let u = open01(rng.substream(i as u64));
                    arcsine_sample(Probability::clamped(f_lo + u * (f_hi - f_lo)))
                })
                .collect()
        }
    }
}

fn open01(stream: RngStream) -> f64 {
    stream.rng().sample(rand::distr::Open01)
}

/// An n-user code: per-position biases and the n-by-ell symbol matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Code {
    n: usize,
    ell: usize,
    biases: Vec<Probability>,
    matrix: Vec<u8>,
}

impl Code {
    /// Assembles a code from raw parts. `matrix` is row-major with one byte
    /// per symbol; entries must be 0 or 1 and biases strictly interior.
    pub fn from_parts(
        n: usize,
        ell: usize,
        biases: Vec<Probability>,
        matrix: Vec<u8>,
    ) -> Result<Self> {
        if biases.len() != ell {
            return Err(Error::InvalidInput(format!(
                "expected {ell} biases, got {}",
                biases.len()
            )));
        }
        if matrix.len() != n * ell {
            return Err(Error::InvalidInput(format!(
                "matrix has {} entries, expected n * ell = {}",
                matrix.len(),
                n * ell
            )));
        }
        for b in &biases {
            b.require_interior("code bias")?;
        }
        if matrix.iter().any(|&s| s > 1) {
            return Err(Error::InvalidInput("matrix entries must be 0 or 1".into()));
        }
        Ok(Self {
            n,
            ell,
            biases,
            matrix,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn biases(&self) -> &[Probability] {
        &self.biases
    }

    pub fn row(&self, user: usize) -> &[u8] {
        &self.matrix[user * self.ell..(user + 1) * self.ell]
    }

    pub fn symbol(&self, user: usize, position: usize) -> u8 {
        self.matrix[user * self.ell + position]
    }

    /// Binary file format: magic "FPCD", little-endian u32 version, u64 n,
    /// u64 ell, ell f64 biases, then n rows bit-packed MSB-first with each
    /// row padded to a whole byte.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.ell as u64).to_le_bytes())?;
        for b in &self.biases {
            w.write_all(&b.value().to_le_bytes())?;
        }
        let stride = (self.ell + 7) / 8;
        let mut packed = vec![0u8; stride];
        for user in 0..self.n {
            packed.fill(0);
            let row = self.row(user);
            for (i, &s) in row.iter().enumerate() {
                if s != 0 {
                    packed[i / 8] |= 1 << (7 - i % 8);
                }
            }
            w.write_all(&packed)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::FileFormat("bad magic bytes".into()));
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)?;
        let version = u32::from_le_bytes(buf4);
        if version != VERSION {
            return Err(Error::FileFormat(format!(
                "unsupported code file version {version}"
            )));
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let n = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8)?;
        let ell = u64::from_le_bytes(buf8) as usize;
        if n == 0 || ell == 0 || n.saturating_mul(ell) > (1 << 32) {
            return Err(Error::FileFormat(format!(
                "implausible dimensions n = {n}, ell = {ell}"
            )));
        }
        let mut biases = Vec::with_capacity(ell);
        for _ in 0..ell {
            r.read_exact(&mut buf8)?;
            let v = f64::from_le_bytes(buf8);
            biases.push(
                Probability::new(v).map_err(|_| {
                    Error::FileFormat(format!("bias {v} outside [0, 1] in code file"))
                })?,
            );
        }
        let stride = (ell + 7) / 8;
        let mut matrix = vec![0u8; n * ell];
        let mut packed = vec![0u8; stride];
        for user in 0..n {
            r.read_exact(&mut packed)?;
            for i in 0..ell {
                matrix[user * ell + i] = (packed[i / 8] >> (7 - i % 8)) & 1;
            }
        }
        Self::from_parts(n, ell, biases, matrix)
    }

    /// Human-readable dump: header, biases, then one 0/1 string per user.
    pub fn debug_dump<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "code n={} ell={}", self.n, self.ell)?;
        let biases: Vec<String> = self.biases.iter().map(|b| b.value().to_string()).collect();
        writeln!(w, "biases {}", biases.join(" "))?;
        for user in 0..self.n {
            let row: String = self
                .row(user)
                .iter()
                .map(|&s| if s == 0 { '0' } else { '1' })
                .collect();
            writeln!(w, "user {user} {row}")?;
        }
        Ok(())
    }
}

const MAGIC: &[u8; 4] = b"FPCD";
const VERSION: u32 = 1;

/// Draws the n-by-ell matrix with independent Bernoulli(bias[i]) symbols per
/// column. Column i uses substream i, making column order irrelevant.
pub fn generate_code(n: usize, biases: &[Probability], rng: RngStream) -> Result<Code> {
    if n == 0 {
        return Err(Error::InvalidInput("user count must be at least 1".into()));
    }
    if biases.is_empty() {
        return Err(Error::InvalidInput("code length must be at least 1".into()));
    }
    let ell = biases.len();
    let mut matrix = vec![0u8; n * ell];
    for (i, b) in biases.iter().enumerate() {
        let pv = b.require_interior("code bias")?;
        let mut r = rng.substream(i as u64).rng();
        for row in matrix.chunks_exact_mut(ell) {
            row[i] = u8::from(r.random::<f64>() < pv);
        }
    }
    Code::from_parts(n, ell, biases.to_vec(), matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::arcsine_cdf;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn bias_model_validation() {
        assert!(BiasModel::Fixed(p(0.5)).validate().is_ok());
        assert!(BiasModel::Fixed(p(1.0)).validate().is_err());
        assert!(BiasModel::ArcsineCutoff { delta: 0.0 }.validate().is_err());
        assert!(BiasModel::ArcsineCutoff { delta: 0.5 }.validate().is_err());
        assert!(BiasModel::ArcsineCutoff { delta: 1e-6 }.validate().is_ok());
        let d = BiasModel::default_cutoff_delta(3);
        assert!((d - 1.0 / 2160.0).abs() < 1e-18);
    }

    #[test]
    fn draw_biases_fixed_and_cutoff_ranges() {
        let b = draw_biases(BiasModel::Fixed(p(0.3)), 5, RngStream::new(1)).unwrap();
        assert_eq!(b.len(), 5);
        assert!(b.iter().all(|x| x.value() == 0.3));

        let b = draw_biases(
            BiasModel::ArcsineCutoff { delta: 0.1 },
            2000,
            RngStream::new(2),
        )
        .unwrap();
        assert!(b.iter().all(|x| x.value() >= 0.1 && x.value() <= 0.9));

        assert!(draw_biases(BiasModel::Arcsine, 0, RngStream::new(3)).is_err());
    }

    #[test]
    fn draw_biases_is_chunking_independent() {
        // Per-position substreams: the prefix of a longer draw matches.
        let long = draw_biases(BiasModel::Arcsine, 64, RngStream::new(9)).unwrap();
        let short = draw_biases(BiasModel::Arcsine, 16, RngStream::new(9)).unwrap();
        assert_eq!(&long[..16], &short[..]);
    }

    #[test]
    fn arcsine_draws_match_cdf() {
        // Empirical CDF at 1/4 vs arcsine CDF 1/3, 1e5 samples.
        let n = 100_000usize;
        let b = draw_biases(BiasModel::Arcsine, n, RngStream::new(4)).unwrap();
        let below = b.iter().filter(|x| x.value() <= 0.25).count() as f64 / n as f64;
        let se = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        assert!((below - 1.0 / 3.0).abs() < 4.0 * se, "{below}");

        // Tight cutoff barely shifts the law: KS distance < 0.01 at delta 1e-6.
        let bc = draw_biases(
            BiasModel::ArcsineCutoff { delta: 1e-6 },
            n,
            RngStream::new(4),
        )
        .unwrap();
        let mut ks = 0.0f64;
        for &q in &[0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
            let emp = bc.iter().filter(|x| x.value() <= q).count() as f64 / n as f64;
            let theory = arcsine_cdf(p(q)).unwrap().value();
            ks = ks.max((emp - theory).abs());
        }
        assert!(ks < 0.01, "KS {ks}");
    }

    #[test]
    fn generated_columns_match_bias() {
        let n = 10_000usize;
        let code = generate_code(n, &[p(0.3), p(0.8)], RngStream::new(6)).unwrap();
        for (i, &target) in [0.3f64, 0.8].iter().enumerate() {
            let mean = (0..n).map(|j| f64::from(code.symbol(j, i))).sum::<f64>() / n as f64;
            let se = (target * (1.0 - target) / n as f64).sqrt();
            assert!((mean - target).abs() < 4.0 * se, "col {i}: {mean}");
        }
    }

    #[test]
    fn generated_symbols_are_uncorrelated_across_positions() {
        let n = 10_000usize;
        let code = generate_code(n, &[p(0.5), p(0.5)], RngStream::new(7)).unwrap();
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m01 = 0.0;
        for j in 0..n {
            let x0 = f64::from(code.symbol(j, 0));
            let x1 = f64::from(code.symbol(j, 1));
            m0 += x0;
            m1 += x1;
            m01 += x0 * x1;
        }
        m0 /= n as f64;
        m1 /= n as f64;
        m01 /= n as f64;
        let corr = (m01 - m0 * m1) / (m0 * (1.0 - m0) * m1 * (1.0 - m1)).sqrt();
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn binary_format_round_trips() {
        let biases = draw_biases(BiasModel::Arcsine, 13, RngStream::new(8)).unwrap();
        let code = generate_code(7, &biases, RngStream::new(8)).unwrap();
        let mut buf = Vec::new();
        code.write_binary(&mut buf).unwrap();
        let back = Code::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(code, back);

        let mut dump = Vec::new();
        code.debug_dump(&mut dump).unwrap();
        let text = String::from_utf8(dump).unwrap();
        assert!(text.starts_with("code n=7 ell=13\n"));
        assert_eq!(text.lines().count(), 2 + 7);
    }

    #[test]
    fn binary_format_rejects_corruption() {
        let code = generate_code(3, &[p(0.5); 4], RngStream::new(8)).unwrap();
        let mut buf = Vec::new();
        code.write_binary(&mut buf).unwrap();
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(Code::read_binary(&mut bad_magic.as_slice()).is_err());
        let truncated = &buf[..buf.len() - 1];
        assert!(Code::read_binary(&mut &truncated[..]).is_err());
    }

    #[test]
    fn from_parts_validates_shape() {
        assert!(Code::from_parts(2, 2, vec![p(0.5); 2], vec![0, 1, 1, 0]).is_ok());
        assert!(Code::from_parts(2, 2, vec![p(0.5)], vec![0, 1, 1, 0]).is_err());
        assert!(Code::from_parts(2, 2, vec![p(0.5); 2], vec![0, 1, 2, 0]).is_err());
        // Zero-length codes are representable for edge-case scoring.
        let empty = Code::from_parts(3, 0, vec![], vec![]).unwrap();
        assert_eq!(empty.row(1).len(), 0);
    }
}
