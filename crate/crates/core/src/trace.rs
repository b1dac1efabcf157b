//! Run results and the per-iteration trace shared by every optimizer.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::space::Solution;

/// Header of every trace CSV.
pub const TRACE_HEADER: &str = "iteration,evaluations,best_cost,A,B,G_mean,clusters";

/// One row of a run trace. The adaptive columns are empty for optimizers that
/// have no observer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub evaluations: usize,
    pub best_cost: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub g_mean: Option<f64>,
    pub clusters: Option<usize>,
}

impl TraceRecord {
    pub fn plain(iteration: usize, evaluations: usize, best_cost: f64) -> Self {
        Self {
            iteration,
            evaluations,
            best_cost,
            a: None,
            b: None,
            g_mean: None,
            clusters: None,
        }
    }

    pub fn to_csv_row(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{}",
            self.iteration,
            self.evaluations,
            self.best_cost,
            opt(&self.a),
            opt(&self.b),
            opt(&self.g_mean),
            opt(&self.clusters)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: String,
    pub seed: u64,
    pub best: Solution,
    pub evaluations: usize,
    pub trace: Vec<TraceRecord>,
}

impl RunResult {
    pub fn final_cost(&self) -> f64 {
        self.best.cost
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for rec in &self.trace {
            writeln!(out, "{}", rec.to_csv_row())?;
        }
        Ok(())
    }

    pub fn trace_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_trace_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }

    /// True when `best_cost` never increases down the trace.
    pub fn trace_is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost)
    }
}
