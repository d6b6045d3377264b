//! Convergence-table assembly and CSV emission. Errors and mesh sizes are
//! printed in scientific notation with 4 significant digits; the headline
//! rate of a column is the final pairwise rate, matching the table footers
//! of the least-squares fit printed separately.

use anyhow::{bail, Result};
use vem::analysis::{fitted_rate, pairwise_rates};

/// One mesh level: mesh size, DoF count, and one error per norm.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub h: f64,
    pub dofs: usize,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EocTable {
    /// Norm labels, one per error column (e.g. "L2", "H1").
    pub norms: Vec<String>,
    pub rows: Vec<ErrorReport>,
}

impl EocTable {
    pub fn new(norms: &[&str], rows: Vec<ErrorReport>) -> Result<EocTable> {
        if rows.is_empty() {
            bail!("no error reports to tabulate");
        }
        for r in &rows {
            if r.errors.len() != norms.len() {
                bail!(
                    "report has {} errors for {} norms",
                    r.errors.len(),
                    norms.len()
                );
            }
        }
        Ok(EocTable {
            norms: norms.iter().map(|s| s.to_string()).collect(),
            rows,
        })
    }

    fn column(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let h: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
        let e: Vec<f64> = self.rows.iter().map(|r| r.errors[j]).collect();
        (h, e)
    }

    /// Pairwise rates of norm column `j`; entry i is the rate between levels
    /// i and i+1.
    pub fn pairwise(&self, j: usize) -> Vec<f64> {
        let (h, e) = self.column(j);
        pairwise_rates(&h, &e)
    }

    /// Least-squares slope of norm column `j`.
    pub fn fitted(&self, j: usize) -> f64 {
        let (h, e) = self.column(j);
        fitted_rate(&h, &e)
    }

    /// Final pairwise rate per norm, the headline convergence order.
    pub fn final_rates(&self) -> Vec<f64> {
        (0..self.norms.len())
            .map(|j| self.pairwise(j).last().copied().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,dofs");
        for n in &self.norms {
            out.push_str(&format!(",{n},rate_{n}"));
        }
        out.push('\n');
        let rates: Vec<Vec<f64>> = (0..self.norms.len()).map(|j| self.pairwise(j)).collect();
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(&format!("{:.3e},{}", r.h, r.dofs));
            for (j, e) in r.errors.iter().enumerate() {
                if i == 0 {
                    out.push_str(&format!(",{e:.3e},"));
                } else {
                    out.push_str(&format!(",{e:.3e},{:.3}", rates[j][i - 1]));
                }
            }
            out.push('\n');
        }
        if self.rows.len() >= 2 {
            out.push_str("fitted,");
            for j in 0..self.norms.len() {
                out.push_str(&format!(",,{:.3}", self.fitted(j)));
            }
            out.push('\n');
        }
        out
    }
}

/// Renders reports as a CSV table; the spec-level entry point.
pub fn emit_tables(reports: &[ErrorReport], norms: &[&str]) -> Result<String> {
    Ok(EocTable::new(norms, reports.to_vec())?.to_csv())
}
