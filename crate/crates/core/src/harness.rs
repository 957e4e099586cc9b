//! Experiment driver: instance generation, relaxation comparisons, ablations,
//! the worked example and single-network verification.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use crate::formulations::{
    ablate, build_0sos, build_qc, build_sdr, build_triangle_sdr, ConicProgram, ConstraintClass,
};
use crate::network::{
    case_study_network, propagate_bounds, random_network, InputBox, InputPolytope, OutputHalfspace, ReluNetwork,
};
use crate::oracle::exact_verify;
use crate::recovery::{certify, Certificate, CertifyConfig, Verdict};
use crate::solver::{solve, SolveStatus, SolverConfig};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "seed,formulation,exact,value,rel_error,status,millis";

/// `|relaxed − exact| / max(|exact|, 1e-9)`.
pub fn relative_error(relaxed: f64, exact: f64) -> f64 {
    (relaxed - exact).abs() / exact.abs().max(1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    ZeroSos,
    Sdr,
    Qc,
    TriangleSdr,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [Self::ZeroSos, Self::Sdr, Self::Qc, Self::TriangleSdr];

    pub fn name(self) -> &'static str {
        match self {
            Self::ZeroSos => "0SOS",
            Self::Sdr => "SDR",
            Self::Qc => "QC",
            Self::TriangleSdr => "TRIANGLE_SDR",
        }
    }

    pub fn build(
        self,
        net: &ReluNetwork,
        input: &InputPolytope,
        output: &OutputHalfspace,
    ) -> Result<ConicProgram> {
        match self {
            Self::ZeroSos => build_0sos(net, input, output),
            Self::Qc => build_qc(net, input, output),
            Self::Sdr | Self::TriangleSdr => {
                let bounds = propagate_bounds(net, input.bounding_box())?;
                if self == Self::Sdr {
                    build_sdr(net, input, output, &bounds)
                } else {
                    build_triangle_sdr(net, input, output, &bounds)
                }
            }
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|f| f.name() == key || (key == "0_SOS" && *f == Self::ZeroSos))
            .ok_or_else(|| Error::Config(format!("unknown formulation `{s}`")))
    }
}

/// Classes the ablation study may remove.
pub const ABLATIONS: [ConstraintClass; 5] = [
    ConstraintClass::InputLin,
    ConstraintClass::InputSelfQuad,
    ConstraintClass::NwLin,
    ConstraintClass::NwSelfQuad,
    ConstraintClass::NonnegMatrix,
];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub num_instances: usize,
    pub seed: u64,
    pub input: InputBox,
    pub output: OutputHalfspace,
    pub solver: SolverConfig,
    pub formulations: Vec<Formulation>,
    pub ablations: Vec<ConstraintClass>,
    /// Record wall time; off gives byte-identical CSVs across runs.
    pub timing: bool,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut solver = SolverConfig::with_tolerance(1e-6);
        solver.max_iter = 50_000;
        Self {
            dims: vec![2, 10, 1],
            num_instances: 20,
            seed: 0,
            input: InputBox::uniform(2, -1.0, 0.1).expect("valid default box"),
            output: OutputHalfspace::new(vec![1.0], 0.0).expect("valid default output"),
            solver,
            formulations: Formulation::ALL.to_vec(),
            ablations: ABLATIONS.to_vec(),
            timing: true,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_instances == 0 {
            return Err(Error::Config("at least one instance is required".into()));
        }
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return Err(Error::Config(format!("bad dims {:?}", self.dims)));
        }
        if self.input.dim() != self.dims[0] {
            return Err(Error::DimensionMismatch { expected: self.dims[0], got: self.input.dim() });
        }
        if self.output.c.len() != *self.dims.last().expect("non-empty") {
            return Err(Error::DimensionMismatch { expected: self.dims[self.dims.len() - 1], got: self.output.c.len() });
        }
        self.solver.validate()
    }

    pub fn instance_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

/// Parses `lo,hi` (broadcast to `dim`) or `lo,hi,lo,hi,…` (one pair per input).
pub fn parse_box(text: &str, dim: usize) -> Result<InputBox> {
    let values = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad box value `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    match values.len() {
        2 => InputBox::uniform(dim, values[0], values[1]),
        n if n == 2 * dim => {
            let (lo, hi) = values.chunks(2).map(|p| (p[0], p[1])).unzip();
            InputBox::new(lo, hi)
        }
        n => Err(Error::Config(format!("box needs 2 or {} values, got {n}", 2 * dim))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Solved(SolveStatus),
    Error,
}

impl RowStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solved(s) => s.name(),
            Self::Error => "ERROR",
        }
    }

    pub fn is_failure(self) -> bool {
        self != Self::Solved(SolveStatus::Optimal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub label: String,
    pub value: f64,
    pub rel_error: f64,
    pub status: RowStatus,
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub index: usize,
    pub seed: u64,
    pub exact: f64,
    pub entries: Vec<Entry>,
}

impl InstanceRecord {
    pub fn entry(&self, label: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.label == label)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub records: Vec<InstanceRecord>,
}

impl Table {
    /// Labels in first-seen order.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in self.records.iter().flat_map(|r| &r.entries) {
            if !out.contains(&e.label) {
                out.push(e.label.clone());
            }
        }
        out
    }

    /// Median relative error for `label`, ignoring rows without a value.
    pub fn median_error(&self, label: &str) -> Option<f64> {
        let values: Vec<f64> = self
            .records
            .iter()
            .filter_map(|r| r.entry(label))
            .map(|e| e.rel_error)
            .filter(|v| !v.is_nan())
            .collect();
        median(values)
    }

    fn median_millis(&self, label: &str) -> u128 {
        let mut ms: Vec<u128> = self.records.iter().filter_map(|r| r.entry(label)).map(|e| e.millis).collect();
        ms.sort_unstable();
        ms.get(ms.len() / 2).copied().unwrap_or(0)
    }

    pub fn failures(&self) -> usize {
        self.records.iter().flat_map(|r| &r.entries).filter(|e| e.status.is_failure()).count()
    }

    pub fn write_csv(&self, mut out: impl Write, timing: bool) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            for e in &r.entries {
                let ms = if timing { e.millis } else { 0 };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.seed,
                    e.label,
                    fmt_float(r.exact),
                    fmt_float(e.value),
                    fmt_float(e.rel_error),
                    e.status.name(),
                    ms
                )?;
            }
        }
        for label in self.labels() {
            let med = self.median_error(&label).unwrap_or(f64::NAN);
            let ms = if timing { self.median_millis(&label) } else { 0 };
            writeln!(out, "median,{label},,,{},SUMMARY,{ms}", fmt_float(med))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, timing).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

/// Twelve significant digits.
fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

/// One labelled program per row of an instance.
type Variant = (String, Box<dyn Fn(&ReluNetwork, &InputPolytope, &OutputHalfspace) -> Result<ConicProgram> + Sync>);

fn comparison_variants(cfg: &ExperimentConfig) -> Vec<Variant> {
    cfg.formulations
        .iter()
        .map(|&f| -> Variant { (f.name().to_string(), Box::new(move |n, i, o| f.build(n, i, o))) })
        .collect()
}

fn ablation_variants(cfg: &ExperimentConfig) -> Vec<Variant> {
    let mut out: Vec<Variant> = vec![("0SOS".to_string(), Box::new(build_0sos))];
    for &class in &cfg.ablations {
        out.push((
            format!("-{}", class.name()),
            Box::new(move |n, i, o| ablate(&build_0sos(n, i, o)?, class)),
        ));
    }
    out
}

fn run_variant(variant: &Variant, net: &ReluNetwork, input: &InputPolytope, cfg: &ExperimentConfig, exact: f64) -> Entry {
    let start = Instant::now();
    let outcome = (variant.1)(net, input, &cfg.output).and_then(|p| solve(&p, &cfg.solver));
    let millis = start.elapsed().as_millis();
    match outcome {
        Ok(res) => Entry {
            label: variant.0.clone(),
            value: res.objective,
            rel_error: relative_error(res.objective, exact),
            status: RowStatus::Solved(res.status),
            millis,
        },
        Err(_) => Entry { label: variant.0.clone(), value: f64::NAN, rel_error: f64::NAN, status: RowStatus::Error, millis },
    }
}

fn run_instance(cfg: &ExperimentConfig, variants: &[Variant], index: usize) -> InstanceRecord {
    let seed = cfg.instance_seed(index);
    let input = InputPolytope::from_box(&cfg.input);
    let setup = random_network(&cfg.dims, seed).and_then(|net| {
        let exact = exact_verify(&net, &input, &cfg.output)?.opt;
        Ok((net, exact))
    });
    let entries = match &setup {
        Ok((net, exact)) => variants.iter().map(|v| run_variant(v, net, &input, cfg, *exact)).collect(),
        Err(_) => variants
            .iter()
            .map(|v| Entry { label: v.0.clone(), value: f64::NAN, rel_error: f64::NAN, status: RowStatus::Error, millis: 0 })
            .collect(),
    };
    let exact = setup.as_ref().map_or(f64::NAN, |s| s.1);
    InstanceRecord { index, seed, exact, entries }
}

fn run_table(cfg: &ExperimentConfig, variants: &[Variant]) -> Result<Table> {
    cfg.validate()?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<InstanceRecord>>> = Mutex::new(vec![None; cfg.num_instances]);
    let workers = cfg.workers.clamp(1, cfg.num_instances);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= cfg.num_instances {
                    break;
                }
                let record = run_instance(cfg, variants, index);
                slots.lock().expect("no worker panicked")[index] = Some(record);
            });
        }
    });
    let records = slots.into_inner().expect("no worker panicked").into_iter().flatten().collect();
    Ok(Table { records })
}

/// Every configured formulation on every instance.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<Table> {
    run_table(cfg, &comparison_variants(cfg))
}

/// Full 0-SOS plus one row per removed constraint class.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Table> {
    if let Some(bad) = cfg.ablations.iter().find(|c| !ABLATIONS.contains(c)) {
        return Err(Error::Config(format!("{bad} is not an ablation class")));
    }
    run_table(cfg, &ablation_variants(cfg))
}

pub const PLOT_STUB: &str = r#"import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

rows = defaultdict(list)
with open(sys.argv[1]) as f:
    for r in csv.DictReader(f):
        if r["status"] != "SUMMARY" and r["rel_error"] not in ("NaN", "inf"):
            rows[r["formulation"]].append(max(float(r["rel_error"]), 1e-12))

labels = list(rows)
plt.boxplot([rows[k] for k in labels], labels=labels)
plt.yscale("log")
plt.ylabel("relative error")
plt.savefig(sys.argv[1].rsplit(".", 1)[0] + ".png", dpi=150)
"#;

/// Writes `<name>.csv` and the plot stub into `dir`.
pub fn write_table(dir: &Path, name: &str, table: &Table, timing: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{name}.csv")), table.to_csv_string(timing))?;
    fs::write(dir.join("plot.py"), PLOT_STUB)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseStudyReport {
    pub relaxation_value: f64,
    pub solver_status: String,
    pub exact: f64,
    pub iterations: usize,
    pub millis: u128,
    pub certificate: Certificate,
}

pub fn case_study_input() -> InputPolytope {
    InputPolytope::from_box(&InputBox::uniform(2, -1.0, 1.0).expect("valid box"))
}

/// Solves and certifies the two-input worked example; writes
/// `certificate.json` and `inputs.csv` when `out` is given.
pub fn run_case_study(solver: &SolverConfig, out: Option<&Path>) -> Result<CaseStudyReport> {
    let net = case_study_network();
    let input = case_study_input();
    let output = OutputHalfspace::new(vec![1.0], 0.0)?;
    let start = Instant::now();
    let prog = build_0sos(&net, &input, &output)?;
    let res = solve(&prog, solver)?;
    let millis = start.elapsed().as_millis();
    let layout = prog.layout.as_ref().expect("0-SOS carries a layout");
    let certificate = certify(&net, &res, layout, &input, &output, 1..=6, &CertifyConfig::default());
    let exact = exact_verify(&net, &input, &output)?.opt;
    let report = CaseStudyReport {
        relaxation_value: res.objective,
        solver_status: res.status.name().to_string(),
        exact,
        iterations: res.iterations,
        millis,
        certificate,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("certificate.json"), report.certificate.to_json())?;
        fs::write(dir.join("inputs.csv"), inputs_csv(&report.certificate, &input))?;
    }
    Ok(report)
}

/// Recovered inputs next to their nearest box corner.
fn inputs_csv(cert: &Certificate, input: &InputPolytope) -> String {
    let corners = input.bounding_box().corners();
    let mut s = String::from("factor,xi,x0,x1,corner0,corner1,distance,objective\n");
    for w in &cert.witnesses {
        let x = DVector::from_vec(w.raw_input.clone());
        let (corner, dist) = corners
            .iter()
            .map(|c| (c, (c - &x).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("a box has corners");
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            w.factor,
            fmt_float(w.xi),
            fmt_float(x[0]),
            fmt_float(x[1]),
            fmt_float(corner[0]),
            fmt_float(corner[1]),
            fmt_float(dist),
            fmt_float(w.objective)
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub relaxation_value: f64,
    pub solver_status: String,
    /// `SAFE` when the relaxation proves the output bound, else `UNKNOWN`.
    pub verdict: String,
    pub exact: Option<f64>,
    pub certificate: Certificate,
}

/// 0-SOS verification of a single network over `input`.
pub fn verify_network(
    net: &ReluNetwork,
    input: &InputBox,
    output: &OutputHalfspace,
    solver: &SolverConfig,
) -> Result<VerifyReport> {
    let poly = InputPolytope::from_box(input);
    let prog = build_0sos(net, &poly, output)?;
    let res = solve(&prog, solver)?;
    let layout = prog.layout.as_ref().expect("0-SOS carries a layout");
    let certificate = certify(net, &res, layout, &poly, output, 1..=6, &CertifyConfig::default());
    let safe = res.status == SolveStatus::Optimal && res.objective >= output.d;
    let exact = if net.hidden_count() <= 22 { Some(exact_verify(net, &poly, output)?.opt) } else { None };
    Ok(VerifyReport {
        relaxation_value: res.objective,
        solver_status: res.status.name().to_string(),
        verdict: if safe { "SAFE" } else { "UNKNOWN" }.to_string(),
        exact,
        certificate,
    })
}

impl VerifyReport {
    pub fn exact_certified(&self) -> bool {
        self.certificate.verdict == Verdict::Exact
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_examples() {
        assert!((relative_error(-2.0002, -2.0) - 1.0e-4).abs() < 1e-12);
        assert_eq!(relative_error(0.7, 0.7), 0.0);
        assert!(relative_error(1e-3, 0.0).is_finite());
    }

    #[test]
    fn formulation_names_round_trip() {
        for f in Formulation::ALL {
            assert_eq!(f.name().parse::<Formulation>().unwrap(), f);
        }
        assert!("LP".parse::<Formulation>().is_err());
    }

    #[test]
    fn box_parsing() {
        let b = parse_box("-1,0.1", 2).unwrap();
        assert_eq!(b, InputBox::uniform(2, -1.0, 0.1).unwrap());
        let b = parse_box("-1,1,0,2", 2).unwrap();
        assert_eq!(b, InputBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap());
        assert!(parse_box("1,0", 2).is_err());
        assert!(parse_box("0,1,2", 2).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        cfg.num_instances = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.dims = vec![3, 4, 1];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn median_and_summary_rows() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
        let entry = |v: f64| Entry { label: "A".into(), value: v, rel_error: v, status: RowStatus::Solved(SolveStatus::Optimal), millis: 5 };
        let table = Table {
            records: vec![
                InstanceRecord { index: 0, seed: 7, exact: 1.0, entries: vec![entry(0.5)] },
                InstanceRecord { index: 1, seed: 8, exact: 1.0, entries: vec![entry(0.25)] },
            ],
        };
        let csv = table.to_csv_string(false);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "7,A,1.00000000000e0,5.00000000000e-1,5.00000000000e-1,OPTIMAL,0");
        assert_eq!(lines[3], "median,A,,,3.75000000000e-1,SUMMARY,0");
        assert_eq!(table.failures(), 0);
    }

    #[test]
    fn small_comparison_is_deterministic() {
        let cfg = ExperimentConfig {
            dims: vec![2, 3, 1],
            num_instances: 2,
            formulations: vec![Formulation::ZeroSos, Formulation::Sdr],
            timing: false,
            workers: 2,
            ..ExperimentConfig::default()
        };
        let a = run_comparison(&cfg).unwrap().to_csv_string(false);
        let b = run_comparison(&ExperimentConfig { workers: 1, ..cfg }).unwrap().to_csv_string(false);
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 4 + 2);
    }
}
