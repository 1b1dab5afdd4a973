use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crossstack::config::{parse_config, parse_config_str, RunConfig};
use crossstack::engine::{analog_targets, program, read_currents, WriteParams};
use crossstack::experiments::{run_selected, write_outputs, EXPERIMENTS};
use crossstack::fabric::{ideal_mvm, Fabric, FabricGeometry};
use crossstack::io::{num, read_matrix_csv, write_atomic, CsvTable};
use crossstack::pipeline::{plan, speedup};
use crossstack::{Error, Mode};

#[derive(Parser, Debug)]
#[command(name = "crossstack", version, about = "Stacked memristor crossbar simulator")]
struct Cli {
    /// Run configuration (TOML). Every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Falls back to $CROSSTACK_OUT, then the config, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `section.key=value`, applied after the config file. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment, or `all`.
    Experiment { name: String },
    /// Program a weight matrix and read input vectors through it.
    Mvm {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        mode: Mode,
    },
    /// Schedule L network layers and compare against the sequential baseline.
    Plan {
        #[arg(long)]
        layers: usize,
        #[arg(long)]
        mode: Mode,
    },
    /// Parse and check the configuration, then echo it.
    ValidateConfig,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Comparison,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = match &cli.config {
        Some(p) => parse_config(p, &overrides)?,
        None => parse_config_str("", &overrides)?,
    };
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("CROSSTACK_OUT").map(PathBuf::from))
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, &cfg);
    match &cli.command {
        Command::ValidateConfig => {
            let text = cfg.to_toml()?;
            write_atomic(&dir.join("config.toml"), text.as_bytes())?;
            print!("{text}");
            eprintln!("config OK");
            Ok(())
        }
        Command::Experiment { name } => {
            if name != "all" && !EXPERIMENTS.contains(&name.as_str()) {
                return Err(Failure::Usage(format!(
                    "unknown experiment `{name}`; choose one of: {}, all",
                    EXPERIMENTS.join(", ")
                )));
            }
            let reports = run_selected(name, &cfg)?;
            let summary = write_outputs(&dir, &reports, &cfg)?;
            for r in &reports {
                println!("{:<18} {}", r.name, if r.pass { "PASS" } else { "FAIL" });
                for m in r.measurements.iter().filter(|m| m.pass == Some(false)) {
                    println!("  {} = {} {} ({:?})", m.name, m.value, m.unit, m.check);
                }
            }
            println!("outputs in {}", dir.display());
            if summary.pass {
                Ok(())
            } else {
                Err(Failure::Comparison)
            }
        }
        Command::Plan { layers, mode } => {
            let tl = plan(*mode, *layers, &cfg.timing)?;
            tl.check_legal()?;
            let base = plan(Mode::Expansion, *layers, &cfg.timing)?;
            write_atomic(&dir.join("plan.timeline.csv"), tl.to_csv().as_bytes())?;
            println!("mode {mode:?}, {layers} layer(s)");
            println!("total     {:.3} ns", tl.total() * 1e9);
            println!("baseline  {:.3} ns", base.total() * 1e9);
            println!("speedup   {:.4}", speedup(&tl, &base)?);
            Ok(())
        }
        Command::Mvm { weights, inputs, mode } => mvm(&cfg, &dir, weights, inputs, *mode),
    }
}

fn mvm(cfg: &RunConfig, dir: &Path, weights: &Path, inputs: &Path, mode: Mode) -> Result<(), Failure> {
    let w = read_matrix_csv(weights)?;
    let v = read_matrix_csv(inputs)?;
    let rows = w.len();
    let cols = w[0].len();
    let (n, read_layers, programmed_re): (usize, Vec<usize>, Vec<Vec<bool>>) = match mode {
        Mode::Planar => (rows, vec![0], vec![vec![false]]),
        Mode::DeepNet => (rows, vec![0], vec![vec![false, true]]),
        Mode::Expansion => {
            if rows % 2 != 0 {
                return Err(Failure::Usage(format!("expansion mode splits rows over two layers; {rows} rows is odd")));
            }
            (rows / 2, vec![0, 1], vec![vec![false, false]])
        }
    };
    if let Some(k) = v.iter().position(|r| r.len() != rows) {
        return Err(Failure::Usage(format!("input vector {k} has {} entries, weights have {rows} rows", v[k].len())));
    }
    let geom = FabricGeometry::new(mode, n, cols, cfg.fabric.r_wire_per_cell);
    let read_re: Vec<bool> = (0..mode.layers()).map(|l| read_layers.contains(&l)).collect();
    let mut fab = Fabric::uniform(geom, cfg.device, cfg.transistor, 0.0, programmed_re[0].clone())?;
    let targets = analog_targets(&w, &cfg.device)?;
    let wp = WriteParams::from_device(&cfg.device);
    for (k, &layer) in read_layers.iter().enumerate() {
        program(&mut fab, layer, &targets[k * n..(k + 1) * n], &wp)?;
    }
    fab.set_re(read_re)?;
    let g: Vec<Vec<f64>> = read_layers.iter().flat_map(|&l| fab.conductance_matrix(l)).collect();

    let mut csv = CsvTable::new(&["vector", "column", "i_A", "i_ideal_A"]);
    let mut worst = 0.0f64;
    for (k, vk) in v.iter().enumerate() {
        let res = read_currents(&fab, vk, &cfg.adc)?;
        let ideal = ideal_mvm(vk, &g)?;
        for (j, (i, i0)) in res.column_currents.iter().zip(&ideal).enumerate() {
            if *i0 != 0.0 {
                worst = worst.max(((i - i0) / i0).abs());
            }
            println!("{k},{j},{i:e},{i0:e}");
            csv.push(vec![k.to_string(), j.to_string(), num(*i), num(*i0)]);
        }
    }
    write_atomic(&dir.join("mvm.currents.csv"), csv.render().as_bytes())?;
    eprintln!("max relative deviation from the ideal product: {worst:e}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Comparison) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
