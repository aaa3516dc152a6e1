//! Result rows and CSV output.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Repeat(usize),
    Mean,
    Std,
}

impl RowKind {
    fn label(self) -> (String, &'static str) {
        match self {
            RowKind::Repeat(r) => (r.to_string(), "repeat"),
            RowKind::Mean => (String::new(), "mean"),
            RowKind::Std => (String::new(), "std"),
        }
    }
}

/// Tuning point of one group of repeats.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridPoint {
    pub lambda_scale: Option<f64>,
    /// Raker step size after division by √T.
    pub eta: Option<f64>,
    pub reg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub dataset: String,
    pub rounds: usize,
    pub algorithm: String,
    pub loss: String,
    pub budget: usize,
    pub reservoir: usize,
    pub radius: f64,
    pub grid: GridPoint,
    pub seed: u64,
    pub kind: RowKind,
    /// Set on the mean and std rows of the grid point with the lowest mean AMR.
    pub best: bool,
    /// "ok", or the failure message of the repeat.
    pub status: String,
    pub amr_percent: f64,
    pub cum_loss: f64,
    /// min_i of the per-kernel alignment proxy; hinge learner only.
    pub alignment_proxy_min: Option<f64>,
    pub removals: Vec<f64>,
    pub removal_bound: Vec<f64>,
    pub archive_size: f64,
    pub wall_time_s: f64,
    /// Rounds after which some budget or norm invariant was broken.
    pub invariant_violations: f64,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    /// Dataset source, echoed in every CSV row.
    pub provenance: String,
    /// Compact JSON of the configuration, echoed in every CSV row.
    pub config_json: String,
    /// Stream length used to size the reservoir archive.
    pub horizon: u64,
}

pub const HEADER: [&str; 25] = [
    "dataset",
    "T",
    "algorithm",
    "loss",
    "B",
    "M",
    "U",
    "lambda_scale",
    "eta",
    "reg",
    "seed",
    "repeat",
    "row",
    "best",
    "status",
    "AMR_percent",
    "cum_loss",
    "alignment_proxy_min",
    "removals_per_kernel",
    "removal_bound",
    "archive_size",
    "wall_time_s",
    "invariant_violations",
    "provenance",
    "config",
];

impl Report {
    pub fn repeats(&self) -> impl Iterator<Item = &Row> {
        self.rows
            .iter()
            .filter(|r| matches!(r.kind, RowKind::Repeat(_)))
    }

    /// Mean row of the best grid point.
    pub fn best(&self) -> Option<&Row> {
        self.rows.iter().find(|r| r.best && r.kind == RowKind::Mean)
    }

    /// Repeat rows belonging to the grid point of `row`.
    pub fn repeats_of(&self, grid: GridPoint) -> impl Iterator<Item = &Row> {
        self.repeats().filter(move |r| r.grid == grid)
    }

    pub fn failures(&self) -> usize {
        self.repeats().filter(|r| !r.is_ok()).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(HEADER)?;
        for r in &self.rows {
            let (repeat, kind) = r.kind.label();
            out.write_record([
                r.dataset.clone(),
                r.rounds.to_string(),
                r.algorithm.clone(),
                r.loss.clone(),
                r.budget.to_string(),
                r.reservoir.to_string(),
                fmt_g(r.radius),
                opt(r.grid.lambda_scale),
                opt(r.grid.eta),
                opt(r.grid.reg),
                r.seed.to_string(),
                repeat,
                kind.to_string(),
                r.best.to_string(),
                r.status.clone(),
                fmt_g(r.amr_percent),
                fmt_g(r.cum_loss),
                opt(r.alignment_proxy_min),
                join(&r.removals),
                join(&r.removal_bound),
                fmt_g(r.archive_size),
                fmt_g(r.wall_time_s),
                fmt_g(r.invariant_violations),
                self.provenance.clone(),
                self.config_json.clone(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_g).unwrap_or_default()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_g(*x)).collect::<Vec<_>>().join(";")
}

/// Six significant digits, printf `%g` style.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!(
            "{}e{}{:02}",
            trim(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Sample mean and standard deviation (n − 1 denominator; 0 for n < 2).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
