use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robustbf_bench::acceptance::{run_criterion, run_exact_model_check, CRITERIA};
use robustbf_bench::experiment::summarize;
use robustbf_bench::{emit_csv, emit_svg_lines, run_experiment, ExperimentConfig, Metric};

#[derive(Parser)]
#[command(version, about = "Robust beamforming experiments")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// SINR plot; the CPU-time plot goes next to it with a `_cpu` suffix
        /// unless the config names one.
        #[arg(long)]
        out_svg: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Run the acceptance checks; exits nonzero if any fails.
    Selftest {
        /// Directory for the protocol artifacts.
        #[arg(long, default_value = "selftest_out")]
        out_dir: PathBuf,
        /// Criteria to run, e.g. `--only 1 --only 4`; all by default.
        #[arg(long)]
        only: Vec<u8>,
    },
}

fn cpu_path(svg: &std::path::Path) -> PathBuf {
    let stem = svg.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    svg.with_file_name(format!("{stem}_cpu.svg"))
}

fn run(
    config: PathBuf,
    out_csv: Option<PathBuf>,
    out_svg: Option<PathBuf>,
    seed: Option<u64>,
    runs: Option<usize>,
) -> Result<(), String> {
    let mut cfg = ExperimentConfig::load(&config).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = runs {
        cfg.runs = r;
    }
    if out_csv.is_some() {
        cfg.output.csv = out_csv;
    }
    if out_svg.is_some() {
        cfg.output.svg = out_svg;
    }
    if cfg.output.cpu_svg.is_none() {
        cfg.output.cpu_svg = cfg.output.svg.as_deref().map(cpu_path);
    }
    cfg.validate().map_err(|e| e.to_string())?;
    // Fail on unwritable paths before spending time on the sweep.
    for p in [&cfg.output.csv, &cfg.output.svg, &cfg.output.cpu_svg]
        .into_iter()
        .flatten()
    {
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .map_err(|e| format!("{}: {e}", p.display()))?;
    }

    let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
    if let Some(p) = &cfg.output.csv {
        emit_csv(&rows, p).map_err(|e| e.to_string())?;
        log::info!("wrote {}", p.display());
    }
    if let Some(p) = &cfg.output.svg {
        emit_svg_lines(&rows, Metric::SinrDb, p).map_err(|e| e.to_string())?;
        log::info!("wrote {}", p.display());
    }
    if let Some(p) = &cfg.output.cpu_svg {
        emit_svg_lines(&rows, Metric::CpuMs, p).map_err(|e| e.to_string())?;
        log::info!("wrote {}", p.display());
    }
    println!("snr_db\tp\tq\tmean_sinr_db\topt_bound_db\tmean_cpu_ms\tmean_iterations");
    for s in summarize(&rows) {
        println!(
            "{}\t{}\t{}\t{:.3}\t{:.3}\t{:.2}\t{:.2}",
            s.snr_db, s.p, s.q, s.mean_sinr_db, s.opt_bound_db, s.mean_cpu_ms, s.mean_iterations
        );
    }
    Ok(())
}

fn selftest(out_dir: PathBuf, only: Vec<u8>) -> Result<bool, String> {
    std::fs::create_dir_all(&out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let mut all_passed = true;
    for (id, _) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let outcome = run_criterion(id, &out_dir);
        println!("{outcome}");
        all_passed &= outcome.passed;
    }
    if only.is_empty() {
        let outcome = run_exact_model_check();
        println!("{outcome}");
        all_passed &= outcome.passed;
    }
    Ok(all_passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run {
            config,
            out_csv,
            out_svg,
            seed,
            runs,
        } => run(config, out_csv, out_svg, seed, runs).map(|()| true),
        Command::Selftest { out_dir, only } => selftest(out_dir, only),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
