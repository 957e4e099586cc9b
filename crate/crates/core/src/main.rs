use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relucert::formulations::ConstraintClass;
use relucert::harness::{
    parse_box, run_ablation, run_case_study, run_comparison, verify_network, write_table, ExperimentConfig,
    Formulation, Table,
};
use relucert::network::{OutputHalfspace, ReluNetwork};
use relucert::recovery::Verdict;
use relucert::solver::SolveStatus;

#[derive(Parser)]
#[command(name = "relucert", version, about = "Convex relaxations for ReLU network verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare 0-SOS against SDR, QC and triangle-SDR on random networks.
    Compare(Common),
    /// Remove one constraint class at a time from 0-SOS.
    Ablate(Common),
    /// Solve and certify the two-input worked example.
    CaseStudy(Common),
    /// Verify one network given as JSON.
    Verify {
        network: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Layer widths, e.g. 2,10,1.
    #[arg(long, value_delimiter = ',', default_value = "2,10,1")]
    dims: Vec<usize>,
    /// `lo,hi` for every input or one `lo,hi` pair per input.
    #[arg(long = "box", allow_hyphen_values = true)]
    input_box: Option<String>,
    #[arg(long, value_delimiter = ',')]
    formulations: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    ablations: Option<Vec<String>>,
    /// Solver residual tolerance (absolute and relative).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Write 0 in the millis column so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn config(&self, input_dim: usize, output_dim: usize) -> relucert::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        cfg.dims = self.dims.clone();
        cfg.num_instances = self.instances;
        cfg.seed = self.seed;
        cfg.input = parse_box(self.input_box.as_deref().unwrap_or("-1,0.1"), input_dim)?;
        cfg.output = OutputHalfspace::new(vec![1.0; output_dim], 0.0)?;
        cfg.solver.eps_abs = self.tol;
        cfg.solver.eps_rel = self.tol;
        if let Some(m) = self.max_iter {
            cfg.solver.max_iter = m;
        }
        if let Some(names) = &self.formulations {
            cfg.formulations = names.iter().map(|n| n.parse::<Formulation>()).collect::<relucert::Result<_>>()?;
        }
        if let Some(names) = &self.ablations {
            cfg.ablations = names.iter().map(|n| n.parse::<ConstraintClass>()).collect::<relucert::Result<_>>()?;
        }
        cfg.timing = !self.no_timing;
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        Ok(cfg)
    }

    fn experiment(&self) -> relucert::Result<ExperimentConfig> {
        let first = *self.dims.first().unwrap_or(&0);
        let last = *self.dims.last().unwrap_or(&0);
        let cfg = self.config(first, last)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Usage(String),
    Solver,
}

impl From<relucert::Error> for Failure {
    fn from(e: relucert::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn report(table: &Table, name: &str, cfg: &ExperimentConfig, out: &PathBuf) -> Result<(), Failure> {
    write_table(out, name, table, cfg.timing)?;
    for label in table.labels() {
        let med = table.median_error(&label).unwrap_or(f64::NAN);
        println!("{label:>16}  median rel. error {med:.3e}");
    }
    println!("wrote {}", out.join(format!("{name}.csv")).display());
    if table.failures() > 0 {
        eprintln!("{} rows did not reach OPTIMAL", table.failures());
        return Err(Failure::Solver);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compare(common) => {
            let cfg = common.experiment()?;
            report(&run_comparison(&cfg)?, "compare", &cfg, &common.out)
        }
        Command::Ablate(common) => {
            let cfg = common.experiment()?;
            report(&run_ablation(&cfg)?, "ablate", &cfg, &common.out)
        }
        Command::CaseStudy(common) => {
            let cfg = common.config(2, 1)?;
            let rep = run_case_study(&cfg.solver, Some(&common.out))?;
            let cert = &rep.certificate;
            println!("relaxation value {:.7} ({}, {} iterations, {} ms)", rep.relaxation_value, rep.solver_status, rep.iterations, rep.millis);
            println!("exact value      {:.7}", rep.exact);
            println!("certificate      {:?} rank {:?} residual {:.3e}", cert.verdict, cert.rank, cert.residual);
            for w in &cert.witnesses {
                println!("  input ({:+.4}, {:+.4})  objective {:.6}", w.raw_input[0], w.raw_input[1], w.objective);
            }
            println!("wrote {}", common.out.display());
            if rep.solver_status != SolveStatus::Optimal.name() {
                return Err(Failure::Solver);
            }
            Ok(())
        }
        Command::Verify { network, common } => {
            let net = ReluNetwork::load(&network)?;
            let cfg = common.config(net.input_dim(), net.output_dim())?;
            let rep = verify_network(&net, &cfg.input, &cfg.output, &cfg.solver).map_err(Failure::from)?;
            println!("relaxation value {:.7} ({})", rep.relaxation_value, rep.solver_status);
            if let Some(exact) = rep.exact {
                println!("exact value      {exact:.7}");
            }
            println!("verdict          {}", rep.verdict);
            let tight = if rep.certificate.verdict == Verdict::Exact { "EXACT" } else { "INCONCLUSIVE" };
            println!("certificate      {tight}");
            if rep.solver_status != SolveStatus::Optimal.name() {
                return Err(Failure::Solver);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Solver) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
