//! Potential files and tabular CSV/JSON emission.
//!
//! Every numeric cell is written with 17 significant digits in CSV and as a
//! round-trip float in JSON, so both forms parse to the same `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::finitegap::ConvergenceTable;
use crate::fourier::Potential;
use crate::genfun::SpectralFunctionals;
use crate::spectrum::SpectralData;

use num_complex::Complex64;

/// Output encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

/// `x` with 17 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Named numeric columns plus run metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, Value>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    /// Metadata as `# key=value` lines, then a header and one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// `{"metadata": {...}, "columns": [...], "rows": [{column: value}]}`.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, &x) in self.columns.iter().zip(r) {
                    m.insert(c.clone(), number(x));
                }
                Value::Object(m)
            })
            .collect();
        let doc = json!({
            "metadata": self.metadata,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("tables serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Parse the numeric rows of [`Table::to_csv`] output.
pub fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|e| Error::Schema(format!("bad number '{c}': {e}")))
                })
                .collect()
        })
        .collect()
}

fn run_metadata(table: &mut Table, data: &SpectralData) {
    table.meta("K", data.lax.dim());
    table.meta("M", data.options.nodes);
    table.meta("method", data.spectrum.method.as_str());
    table.meta("potential_hash", data.potential.content_hash());
    table.meta("n_max", data.n_max());
    table.meta("s", data.params.s());
}

/// `n, Re λ, Im λ, Re γ, Im γ, residual`; `γ_0` is written as zero.
pub fn spectrum_table(data: &SpectralData) -> Table {
    let mut t = Table::new(&[
        "n",
        "re_lambda",
        "im_lambda",
        "re_gamma",
        "im_gamma",
        "residual",
    ]);
    run_metadata(&mut t, data);
    for n in 0..=data.n_max() {
        let l = data.lambda(n);
        let g = if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            data.gamma(n)
        };
        t.push(vec![
            n as f64,
            l.re,
            l.im,
            g.re,
            g.im,
            data.spectrum.residuals[n],
        ]);
    }
    t
}

/// `n, Re γ, Im γ, |γ|, cumulative Σ|γ_k|` with the weighted norm in the metadata.
pub fn gaps_table(data: &SpectralData) -> Table {
    let mut t = Table::new(&["n", "re_gamma", "im_gamma", "abs_gamma", "partial_sum"]);
    run_metadata(&mut t, data);
    t.meta("weighted_norm", data.gaps.weighted_norm);
    for n in 1..=data.n_max() {
        let g = data.gamma(n);
        t.push(vec![
            n as f64,
            g.re,
            g.im,
            g.norm(),
            data.gaps.partial_sums[n - 1],
        ]);
    }
    t
}

fn split(z: Option<Complex64>) -> [f64; 2] {
    z.map_or([f64::NAN; 2], |z| [z.re, z.im])
}

pub fn functionals_table(data: &SpectralData, f: &SpectralFunctionals) -> Table {
    let mut t = Table::new(&[
        "n",
        "re_f",
        "im_f",
        "re_kappa",
        "im_kappa",
        "re_mu",
        "im_mu",
        "f_discrepancy",
        "kappa_discrepancy",
        "mu_discrepancy",
        "flagged",
    ]);
    run_metadata(&mut t, data);
    t.meta("summability", f.summability);
    t.meta("methods", f.methods.join(" "));
    for r in &f.rows {
        let [mr, mi] = split(r.mu_product);
        t.push(vec![
            r.n as f64,
            r.f_contour.re,
            r.f_contour.im,
            r.kappa_product.re,
            r.kappa_product.im,
            mr,
            mi,
            r.f_discrepancy,
            r.kappa_discrepancy,
            r.mu_discrepancy.unwrap_or(f64::NAN),
            if r.flagged { 1.0 } else { 0.0 },
        ]);
    }
    t
}

/// `λ_re, λ_im, H_re, H_im`.
pub fn h_grid_table(samples: &[(Complex64, Complex64)]) -> Table {
    let mut t = Table::new(&["lambda_re", "lambda_im", "h_re", "h_im"]);
    for (l, h) in samples {
        t.push(vec![l.re, l.im, h.re, h.im]);
    }
    t
}

pub fn convergence_table(data: &SpectralData, c: &ConvergenceTable) -> Table {
    let mut t = Table::new(&["n", "to_limit", "step", "mu_defect", "step_bound_holds"]);
    run_metadata(&mut t, data);
    t.meta("tau", c.tau);
    t.meta("fit_exponent", c.fit_exponent.map_or(Value::Null, number));
    for r in &c.rows {
        t.push(vec![
            r.n as f64,
            r.to_limit.unwrap_or(f64::NAN),
            r.step.unwrap_or(f64::NAN),
            r.mu_defect.unwrap_or(f64::NAN),
            if r.step_bound_holds { 1.0 } else { 0.0 },
        ]);
    }
    t
}

pub fn read_potential(path: &Path) -> Result<Potential> {
    Potential::from_json(&fs::read_to_string(path)?)
}

pub fn write_potential(path: &Path, u: &Potential) -> Result<()> {
    fs::write(path, u.to_json())?;
    Ok(())
}
