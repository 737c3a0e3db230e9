//! Experiment reports: per-trial records, aggregates, labeled bounds and
//! verdicts, serialized as JSON or long-format CSV.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use mclab_core::concentration::{mean_sd, wilson_interval, Interval};

use crate::error::Result;
use crate::params::{ParamValue, Params};

/// Version of the report layout, written as the top-level `spec_version`.
pub const REPORT_VERSION: &str = "1.0";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub experiment: String,
    pub params: Params,
    pub seed: u64,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: u64,
    pub values: BTreeMap<String, f64>,
}

impl TrialRecord {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// Standard error of the mean.
    pub se: f64,
    pub min: f64,
    pub max: f64,
}

/// Empirical `P{X >= threshold}` with a 95% Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub name: String,
    pub threshold: f64,
    pub exceed: usize,
    pub n: usize,
    pub fraction: f64,
    pub wilson: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRecord {
    pub name: String,
    pub value: f64,
    /// The statement the value comes from.
    pub anchor: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A non-gating diagnostic that did not hold.
    Flag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    fn holds(self, observed: f64, limit: f64) -> bool {
        match self {
            Self::AtMost => observed <= limit,
            Self::AtLeast => observed >= limit,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::AtMost => "<=",
            Self::AtLeast => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub observed: f64,
    pub relation: Relation,
    pub limit: f64,
    pub gating: bool,
    pub detail: String,
}

/// Everything an experiment contributes to its report.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportBody {
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
    pub tails: Vec<TailEstimate>,
    pub bounds: Vec<BoundRecord>,
    pub verdicts: Vec<Verdict>,
}

impl ReportBody {
    /// Appends trial rows; row `k` gets index `k`.
    pub fn push_trials<K: Into<String>>(&mut self, rows: Vec<Vec<(K, f64)>>) {
        let base = self.trials.len() as u64;
        for (k, row) in rows.into_iter().enumerate() {
            self.trials.push(TrialRecord {
                index: base + k as u64,
                values: row.into_iter().map(|(n, v)| (n.into(), v)).collect(),
            });
        }
    }

    /// Column `key` over all trials that recorded it, in index order.
    pub fn column(&self, key: &str) -> Vec<f64> {
        self.trials.iter().filter_map(|t| t.get(key)).collect()
    }

    pub fn aggregate(&mut self, name: &str, xs: &[f64]) -> Aggregate {
        let a = if xs.is_empty() {
            Aggregate {
                name: name.into(),
                n: 0,
                mean: f64::NAN,
                sd: f64::NAN,
                se: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            }
        } else {
            let (mean, sd) = mean_sd(xs);
            Aggregate {
                name: name.into(),
                n: xs.len(),
                mean,
                sd,
                se: sd / (xs.len() as f64).sqrt(),
                min: xs.iter().copied().fold(f64::INFINITY, f64::min),
                max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        };
        self.aggregates.push(a.clone());
        a
    }

    pub fn tail(&mut self, name: &str, xs: &[f64], threshold: f64) -> TailEstimate {
        let exceed = xs.iter().filter(|&&x| x >= threshold).count();
        self.tail_count(name, exceed, xs.len(), threshold)
    }

    pub fn tail_count(&mut self, name: &str, exceed: usize, n: usize, threshold: f64) -> TailEstimate {
        let t = TailEstimate {
            name: name.into(),
            threshold,
            exceed,
            n,
            fraction: if n == 0 { f64::NAN } else { exceed as f64 / n as f64 },
            wilson: wilson_interval(exceed, n, 1.96),
        };
        self.tails.push(t.clone());
        t
    }

    pub fn bound(&mut self, name: &str, value: f64, anchor: &str) -> f64 {
        self.bounds.push(BoundRecord {
            name: name.into(),
            value,
            anchor: anchor.into(),
        });
        value
    }

    /// A gating comparison: `Pass` if it holds, `Fail` otherwise (NaN fails).
    pub fn check(&mut self, name: &str, observed: f64, relation: Relation, limit: f64, detail: &str) -> bool {
        self.verdict(name, observed, relation, limit, detail, true)
    }

    /// A diagnostic comparison: `Flag` instead of `Fail`.
    pub fn diagnose(&mut self, name: &str, observed: f64, relation: Relation, limit: f64, detail: &str) -> bool {
        self.verdict(name, observed, relation, limit, detail, false)
    }

    fn verdict(&mut self, name: &str, observed: f64, relation: Relation, limit: f64, detail: &str, gating: bool) -> bool {
        let ok = relation.holds(observed, limit);
        let status = match (ok, gating) {
            (true, _) => Status::Pass,
            (false, true) => Status::Fail,
            (false, false) => Status::Flag,
        };
        self.verdicts.push(Verdict {
            name: name.into(),
            status,
            observed,
            relation,
            limit,
            gating,
            detail: detail.into(),
        });
        ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec_version: &'static str,
    pub config: ConfigEcho,
    pub anchor: String,
    #[serde(flatten)]
    pub body: ReportBody,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl ExperimentReport {
    /// No gating verdict failed.
    pub fn passed(&self) -> bool {
        self.body.verdicts.iter().all(|v| v.status != Status::Fail)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.body.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Long format: `section,name,trial,value,detail`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["section", "name", "trial", "value", "detail"])?;
        let num = |x: f64| format!("{x}");
        w.write_record(["meta", "spec_version", "", self.spec_version, ""])?;
        w.write_record(["meta", "experiment", "", &self.config.experiment, &self.anchor])?;
        w.write_record(["meta", "seed", "", &self.config.seed.to_string(), ""])?;
        w.write_record(["meta", "trials", "", &self.config.trials.to_string(), ""])?;
        for (k, v) in self.config.params.iter() {
            let text = match v {
                ParamValue::Int(i) => i.to_string(),
                ParamValue::Real(x) => num(*x),
                ParamValue::Text(s) => s.clone(),
            };
            w.write_record(["param", k, "", &text, ""])?;
        }
        for t in &self.body.trials {
            for (k, v) in &t.values {
                w.write_record(["trial", k, &t.index.to_string(), &num(*v), ""])?;
            }
        }
        for a in &self.body.aggregates {
            let detail = format!("n={} sd={} se={} min={} max={}", a.n, a.sd, a.se, a.min, a.max);
            w.write_record(["aggregate", &a.name, "", &num(a.mean), &detail])?;
        }
        for t in &self.body.tails {
            let detail = format!(
                "threshold={} exceed={} n={} wilson=[{}, {}]",
                t.threshold, t.exceed, t.n, t.wilson.lo, t.wilson.hi
            );
            w.write_record(["tail", &t.name, "", &num(t.fraction), &detail])?;
        }
        for b in &self.body.bounds {
            w.write_record(["bound", &b.name, "", &num(b.value), &b.anchor])?;
        }
        for v in &self.body.verdicts {
            let status = match v.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Flag => "flag",
            };
            let detail = format!("{status}: observed {} {} {}; {}", v.observed, v.relation.symbol(), v.limit, v.detail);
            w.write_record(["verdict", &v.name, "", &num(v.observed), &detail])?;
        }
        if let Some(s) = self.wall_clock_seconds {
            w.write_record(["meta", "wall_clock_seconds", "", &num(s), ""])?;
        }
        w.flush()?;
        Ok(())
    }
}
