use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mmtsp::alloc::AllocationMethod;
use mmtsp::experiment::{generate_instance, run_experiment, ExperimentConfig};
use mmtsp::heuristic::{solve, RadiusMode, SolverConfig, StageTrace};
use mmtsp::model::{validate_solution, Instance};
use mmtsp::render::render_tours;
use mmtsp::report::write_report;
use mmtsp::{Error, TourMode};

/// Heuristic and exact solvers for the min-max heterogeneous multi-depot TSP.
#[derive(Parser, Debug)]
#[command(name = "mmtsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance with the three-stage heuristic.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Heuristic)]
        tour_mode: Mode,
        #[arg(long, value_enum, default_value_t = Radius::Verbatim)]
        radius: Radius,
        #[arg(long, value_enum, default_value_t = Alloc::Transportation)]
        allocation: Alloc,
        /// Per-stage objectives and wall times as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Writes PREFIX_init.svg, PREFIX_local_search.svg and PREFIX_final.svg.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Final solution as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a seeded benchmark and write per-instance rows as CSV.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        scenario: u32,
        #[arg(long)]
        n_targets: usize,
        #[arg(long, default_value_t = 0.0)]
        assign_frac: f64,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compare against the exact oracle where it fits the budget.
        #[arg(long)]
        oracle: bool,
        /// Defaults to exact for up to 12 targets, heuristic above.
        #[arg(long, value_enum)]
        tour_mode: Option<Mode>,
        #[arg(long, value_enum, default_value_t = Radius::Verbatim)]
        radius: Radius,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a random instance file.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        scenario: u32,
        #[arg(long, default_value_t = 30)]
        n_targets: usize,
        #[arg(long, default_value_t = 0.0)]
        assign_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Heuristic,
    Exact,
}

impl From<Mode> for TourMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Heuristic => TourMode::Heuristic,
            Mode::Exact => TourMode::Exact,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Radius {
    Verbatim,
    SpeedScaled,
}

impl From<Radius> for RadiusMode {
    fn from(r: Radius) -> Self {
        match r {
            Radius::Verbatim => RadiusMode::Verbatim,
            Radius::SpeedScaled => RadiusMode::SpeedScaled,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Alloc {
    Transportation,
    LpRounding,
}

impl From<Alloc> for AllocationMethod {
    fn from(a: Alloc) -> Self {
        match a {
            Alloc::Transportation => AllocationMethod::Transportation,
            Alloc::LpRounding => AllocationMethod::LpRounding,
        }
    }
}

const EXIT_INVALID: u8 = 1;
const EXIT_IO: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                ExitCode::from(EXIT_IO)
            } else {
                ExitCode::from(EXIT_INVALID)
            }
        }
    }
}

fn write_file(path: &PathBuf, text: &str) -> mmtsp::Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })
}

fn trace_csv(t: &StageTrace) -> String {
    let mut out = String::from("stage,objective,wall_s\n");
    let _ = writeln!(out, "init,{},{:.3}", t.after_init, t.init_secs);
    let _ = writeln!(
        out,
        "local_search,{},{:.3}",
        t.after_local_search, t.local_search_secs
    );
    let _ = writeln!(
        out,
        "perturbation,{},{:.3}",
        t.after_perturbation, t.perturbation_secs
    );
    let _ = writeln!(out, "# iterations,{}", t.iterations);
    let _ = writeln!(out, "# accepted_perturbations,{}", t.accepted_perturbations);
    out
}

fn scenario_config(
    scenario: u32,
    n_targets: usize,
    assign_frac: f64,
    seed: u64,
) -> mmtsp::Result<ExperimentConfig> {
    let cfg = ExperimentConfig {
        n_targets,
        assign_fraction: assign_frac,
        seed,
        ..ExperimentConfig::scenario(scenario)?
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command) -> mmtsp::Result<()> {
    match command {
        Command::Solve {
            instance,
            seed,
            tour_mode,
            radius,
            allocation,
            trace,
            svg,
            json,
        } => {
            let inst = Instance::load(&instance)?;
            let cfg = SolverConfig {
                seed,
                tour_mode: tour_mode.into(),
                radius: radius.into(),
                allocation: allocation.into(),
                ..SolverConfig::default()
            };
            let out = solve(&inst, &cfg)?;
            if let Some(v) = validate_solution(&inst, &out.best).first() {
                return Err(Error::InvariantViolation(v.to_string()));
            }
            let t = &out.trace;
            println!("init          {:.6}", t.after_init);
            println!("local search  {:.6}", t.after_local_search);
            println!(
                "perturbation  {:.6}  ({} rounds)",
                t.after_perturbation, t.iterations
            );
            for tour in &out.best.tours {
                println!(
                    "vehicle {} [{:.6}]: {:?}",
                    tour.vehicle, tour.duration, tour.order
                );
            }
            if let Some(path) = trace {
                write_file(&path, &trace_csv(t))?;
            }
            if let Some(prefix) = svg {
                render_tours(
                    &inst,
                    &[
                        ("init", &out.init),
                        ("local_search", &out.local_search),
                        ("final", &out.best),
                    ],
                    &prefix,
                )?;
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&out.best).expect("solution serializes");
                write_file(&path, &text)?;
            }
            Ok(())
        }
        Command::Bench {
            scenario,
            n_targets,
            assign_frac,
            instances,
            seed,
            oracle,
            tour_mode,
            radius,
            out,
        } => {
            let mut cfg = scenario_config(scenario, n_targets, assign_frac, seed)?;
            cfg.n_instances = instances;
            cfg.oracle = oracle;
            cfg.solver.tour_mode = match tour_mode {
                Some(m) => m.into(),
                None if n_targets <= 12 => TourMode::Exact,
                None => TourMode::Heuristic,
            };
            cfg.solver.radius = radius.into();
            let report = run_experiment(&cfg)?;
            write_report(&report, &out)?;
            let a = report.aggregates();
            let show = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
            println!("instances            {}", a.rows);
            println!("without oracle       {}", a.no_oracle_rows);
            println!("mean gap init %      {}", show(a.mean_gap_init_pct));
            println!("mean gap local %     {}", show(a.mean_gap_ls_pct));
            println!("mean gap final %     {}", show(a.mean_gap_final_pct));
            println!("max gap final %      {}", show(a.max_gap_final_pct));
            println!("final within 2%      {}", a.within_2pct);
            println!("mean heuristic s     {}", show(a.mean_t_heuristic_s));
            println!("mean oracle s        {}", show(a.mean_t_oracle_s));
            Ok(())
        }
        Command::Gen {
            scenario,
            n_targets,
            assign_frac,
            seed,
            index,
            out,
        } => {
            let cfg = scenario_config(scenario, n_targets, assign_frac, seed)?;
            generate_instance(&cfg, index)?.save(&out)
        }
    }
}
