use fpcap::decode::{bayesian_score, oosterwijk_score, universal_score};
use fpcap::{Error, Probability, Result};

/// Worst deviations seen in one (x, y) cell over the bias grid.
#[derive(Clone, Copy, Debug)]
pub struct CellScan {
    pub cell: &'static str,
    /// max |c * universal - linear|
    pub max_abs_universal: f64,
    /// max |c * universal - linear| / |linear|
    pub max_rel_universal: f64,
    /// max |n * bayesian - linear|
    pub max_abs_bayesian: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ScanReport {
    pub points: usize,
    /// Cells in the order match1, match0, mismatch. The two mismatch cells
    /// carry identical scores for all three functions, so one row covers both.
    pub cells: [CellScan; 3],
}

impl ScanReport {
    pub fn max_abs_universal(&self) -> f64 {
        self.cells.iter().fold(0.0, |m, c| m.max(c.max_abs_universal))
    }

    pub fn max_rel_universal(&self) -> f64 {
        self.cells.iter().fold(0.0, |m, c| m.max(c.max_rel_universal))
    }

    pub fn max_abs_bayesian(&self) -> f64 {
        self.cells.iter().fold(0.0, |m, c| m.max(c.max_abs_bayesian))
    }
}

pub fn scan_scorefns(
    c: usize,
    n: usize,
    p_min: f64,
    p_max: f64,
    p_step: f64,
) -> Result<ScanReport> {
    if !(p_min > 0.0 && p_max < 1.0 && p_min <= p_max) {
        return Err(Error::InvalidInput(format!(
            "bias grid [{p_min}, {p_max}] must sit inside (0, 1)"
        )));
    }
    if !(p_step > 0.0) {
        return Err(Error::InvalidInput("p-step must be positive".into()));
    }
    let layout: [(&'static str, bool, bool); 3] = [
        ("match1", true, true),
        ("match0", false, false),
        ("mismatch", true, false),
    ];
    let mut cells = layout.map(|(name, _, _)| CellScan {
        cell: name,
        max_abs_universal: 0.0,
        max_rel_universal: 0.0,
        max_abs_bayesian: 0.0,
    });
    let mut points = 0usize;
    for k in 0u64.. {
        let pv = p_min + k as f64 * p_step;
        // Tolerance keeps the intended endpoint when it lands 1 ulp high.
        if pv > p_max + 1e-6 * p_step {
            break;
        }
        let p = Probability::new(pv)?;
        for (slot, &(_, x, y)) in cells.iter_mut().zip(layout.iter()) {
            let g = universal_score(x, y, p, c)?;
            let h = oosterwijk_score(x, y, p)?;
            let m = bayesian_score(x, y, p, n)?;
            let dev_u = (c as f64 * g - h).abs();
            slot.max_abs_universal = slot.max_abs_universal.max(dev_u);
            slot.max_rel_universal = slot.max_rel_universal.max(dev_u / h.abs());
            slot.max_abs_bayesian = slot.max_abs_bayesian.max((n as f64 * m - h).abs());
        }
        points += 1;
    }
    Ok(ScanReport { points, cells })
}
