use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use spinmc::config::RunConfig;
use spinmc::report::{report_rows, simulation_rows, write_csv, Row};
use spinmc::{mrmc, pipeline, Error};

/// Spinlock DTMC builder, steady-state solver and long-run analyser.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Explore the reachable state space and report its size.
    Build,
    /// Solve for the long-run state probabilities.
    Steady,
    /// Write the chain as MRMC `.tra` / `.lab` files.
    Export,
    /// Compute the long-run spinlock properties.
    Analyze,
    /// Estimate the properties by simulating the full model.
    Simulate,
    /// Build, solve and analyse for every n in the range.
    Sweep,
}

/// Every flag mirrors a key of the `--config` file and overrides it.
#[derive(Args)]
struct Flags {
    /// `key = value` file with defaults for the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// full | reduced
    #[arg(long, global = true)]
    model: Option<String>,
    /// Process count or inclusive range such as 2..20.
    #[arg(long, global = true)]
    n: Option<String>,
    /// Non-critical duration, value:prob[,value:prob...].
    #[arg(long, global = true)]
    nu: Option<String>,
    /// Critical duration after an immediate acquisition.
    #[arg(long, global = true)]
    gamma0: Option<String>,
    /// Critical duration after spinning.
    #[arg(long, global = true)]
    gamma1: Option<String>,
    /// multinomial | uniform
    #[arg(long, global = true)]
    initial: Option<String>,
    #[arg(long, global = true)]
    eps: Option<String>,
    #[arg(long, global = true)]
    max_iter: Option<String>,
    #[arg(long, global = true)]
    max_states: Option<String>,
    /// Base path of the MRMC files.
    #[arg(long, global = true)]
    mrmc: Option<PathBuf>,
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Steady-state vector (`state prob` lines) to analyse instead of solving.
    #[arg(long, global = true)]
    steady: Option<PathBuf>,
    /// File for the vector computed by `steady`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    ticks: Option<String>,
    #[arg(long, global = true)]
    warmup: Option<String>,
    /// Exploration threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<String>,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            cfg.apply_file(&text)?;
        }
        let path = |p: Option<PathBuf>| p.map(|p| p.to_string_lossy().into_owned());
        let pairs = [
            ("model", self.model),
            ("n", self.n),
            ("nu", self.nu),
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
            ("initial", self.initial),
            ("eps", self.eps),
            ("max_iter", self.max_iter),
            ("max_states", self.max_states),
            ("mrmc", path(self.mrmc)),
            ("csv", path(self.csv)),
            ("steady", path(self.steady)),
            ("output", path(self.output)),
            ("seed", self.seed),
            ("ticks", self.ticks),
            ("warmup", self.warmup),
            ("threads", self.threads),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        Ok(cfg)
    }
}

/// An error tagged with the pipeline phase it came from.
struct Failure {
    phase: &'static str,
    error: Error,
}

trait Phase<T> {
    fn phase(self, phase: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> Phase<T> for Result<T, E> {
    fn phase(self, phase: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { phase, error: e.into() })
    }
}

fn time(phase: &str, n: u32, d: Duration) {
    println!("time[{phase}] n={n} {:.3} s", d.as_secs_f64());
}

fn print_rows(rows: &[Row]) {
    for r in rows {
        if r.key.is_empty() {
            println!("n={} {} = {}", r.n, r.property, r.value);
        } else {
            println!("n={} {}[{}] = {}", r.n, r.property, r.key, r.value);
        }
    }
}

fn run(command: Command, cfg: RunConfig) -> Result<(), Failure> {
    let mut csv_rows: Vec<Row> = Vec::new();
    for n in cfg.n.iter() {
        if let Command::Simulate = command {
            let sim = pipeline::simulate(&cfg, n).phase("simulate")?;
            time("simulate", n, sim.elapsed);
            let rows = simulation_rows(n, &sim.value);
            println!("n={n} observed ticks {}, P1 wait visits {}", sim.value.observed_ticks, sim.value.wait_visits);
            print_rows(&rows);
            csv_rows.extend(rows);
            continue;
        }

        let built = pipeline::build(&cfg, n).phase("explore")?;
        let d = &built.value;
        println!("model {} n={n}: {} states, {} transitions", cfg.model, d.num_states, d.num_transitions());
        time("explore", n, built.elapsed);

        match command {
            Command::Build | Command::Simulate => {}
            Command::Export => {
                let base = cfg.mrmc.clone().unwrap_or_else(|| PathBuf::from(format!("spinlock_{}_{n}", cfg.model)));
                let base =
                    if cfg.n.start == cfg.n.end { base } else { PathBuf::from(format!("{}_{n}", base.display())) };
                let start = std::time::Instant::now();
                let (tra, lab) = mrmc::export_mrmc(d, &base).phase("export")?;
                println!("wrote {} and {}", tra.display(), lab.display());
                time("export", n, start.elapsed());
            }
            Command::Steady => {
                let s = pipeline::steady(&cfg, d).phase("steady")?;
                let st = &s.value;
                println!(
                    "BSCCs {}, transient states {}, sweeps {}, residual {:e}",
                    st.decomposition.bsccs.len(),
                    st.decomposition.transient.len(),
                    st.iterations,
                    st.residual
                );
                time("steady", n, s.elapsed);
                if let Some(out) = &cfg.output {
                    let f = std::fs::File::create(out)
                        .map_err(|source| Error::Io { path: out.clone(), source })
                        .phase("steady")?;
                    mrmc::write_steady(&st.pi, BufWriter::new(f))
                        .map_err(|source| Error::Io { path: out.clone(), source })
                        .phase("steady")?;
                    println!("wrote {}", out.display());
                }
            }
            Command::Analyze | Command::Sweep => {
                let pi = match &cfg.steady {
                    Some(path) => {
                        let start = std::time::Instant::now();
                        let pi = mrmc::import_steady(path, d.num_states).phase("import")?;
                        println!(
                            "imported steady vector {} (residual {:e})",
                            path.display(),
                            spinmc_core::solve::residual(d, &pi)
                        );
                        time("import", n, start.elapsed());
                        pi
                    }
                    None => {
                        let s = pipeline::steady(&cfg, d).phase("steady")?;
                        println!("residual {:e} after {} sweeps", s.value.residual, s.value.iterations);
                        time("steady", n, s.elapsed);
                        s.value.pi
                    }
                };
                let report = pipeline::analyze(d, &pi, n).phase("analyze")?;
                let rows = report_rows(&report.value);
                if let Command::Analyze = command {
                    print_rows(&rows);
                } else {
                    let r = &report.value;
                    println!(
                        "n={n} p1_spinning={} any_spinning={} p_acquire_no_wait={} expected_wait={:?} wait_quantile_95={:?}",
                        r.p1_spinning, r.any_spinning, r.p_acquire_no_wait, r.expected_wait, r.wait_quantile_95
                    );
                }
                time("properties", n, report.elapsed);
                csv_rows.extend(rows);
            }
        }
    }
    if let Some(path) = &cfg.csv {
        if !csv_rows.is_empty() {
            write_csv(&csv_rows, path).phase("csv")?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPINMC_LOG", "warn")).init();
    let cli = Cli::parse();
    let cfg = match cli.flags.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[config]: {e}");
            return ExitCode::FAILURE;
        }
    };
    match run(cli.command, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { phase, error }) => {
            eprintln!("error[{phase}]: {error}");
            ExitCode::FAILURE
        }
    }
}
