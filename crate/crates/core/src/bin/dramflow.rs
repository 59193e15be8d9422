use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dramflow::dse::{ScheduleMode, SearchSteps};
use dramflow::pipeline::{self, Experiment, PlansFile, SweepAxis};
use dramflow::{BurstMode, HardwareConfig, Mode, NetworkModel, Result};

#[derive(Parser)]
#[command(name = "dramflow", version, about = "Tiling search and DRAM evaluation for CNN accelerators")]
struct Cli {
    /// Bundled network name (alexnet, vgg16, mobilenet, mobilenet-amc, toy) or a JSON file.
    #[arg(long, global = true, default_value = "alexnet")]
    net: String,
    /// Hardware JSON file; the bundled defaults when omitted.
    #[arg(long, global = true)]
    hw: Option<PathBuf>,
    /// Traffic and mapping model; both when omitted.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true, default_value = "on")]
    burst: Switch,
    /// Search steps: `auto`, `n`, or `th,tw,tj`.
    #[arg(long, global = true, default_value = "auto")]
    steps: SearchSteps,
    #[arg(long, global = true, default_value = "priority6")]
    schedules: ScheduleMode,
    /// Start each layer's ifmap region at the previous layer's ofmap region.
    #[arg(long, global = true)]
    alias: bool,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Search tilings and schedules; writes plans_<net>_<mode>.{json,csv}.
    Dse,
    /// Write the DRAM request trace as text.
    Trace {
        /// Plans file from `dse`; searched afresh when omitted.
        #[arg(long)]
        plans: Option<PathBuf>,
        /// Layer indices to include; all when omitted.
        #[arg(long, value_delimiter = ',')]
        layer: Vec<usize>,
    },
    /// Simulate and write per-layer statistics and energy.
    Sim {
        #[arg(long)]
        plans: Option<PathBuf>,
    },
    /// Run both modes and write per-layer and total deltas.
    Compare,
    /// Repeat the comparison along one axis.
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values (KB for `buffer`).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u32>,
    },
    /// Summarise the compare CSVs found in the output directory.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_network(arg: &str) -> Result<NetworkModel> {
    if Path::new(arg).exists() {
        NetworkModel::load(arg)
    } else {
        NetworkModel::bundled(arg)
    }
}

fn experiment(cli: &Cli) -> Result<Experiment> {
    let hardware = match &cli.hw {
        Some(p) => HardwareConfig::load(p)?,
        None => HardwareConfig::bundled(),
    };
    Ok(Experiment {
        steps: cli.steps,
        schedule_mode: cli.schedules,
        alias_handoff: cli.alias,
        ..Experiment::new(load_network(&cli.net)?, hardware)
    })
}

fn modes(cli: &Cli) -> Vec<Mode> {
    cli.mode.map_or(Mode::ALL.to_vec(), |m| vec![m])
}

fn burst(cli: &Cli) -> BurstMode {
    match cli.burst {
        Switch::On => BurstMode::Burst,
        Switch::Off => BurstMode::NonBurst,
    }
}

/// Plans from a file, or one search per selected mode.
fn plans(cli: &Cli, file: &Option<PathBuf>) -> Result<Vec<PlansFile>> {
    match file {
        Some(p) => Ok(vec![PlansFile::load(p)?]),
        None => {
            let exp = experiment(cli)?;
            modes(cli).into_iter().map(|m| pipeline::run_dse(&exp, m)).collect()
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let out = &cli.out;
    match &cli.command {
        Command::Dse => {
            let exp = experiment(cli)?;
            for mode in modes(cli) {
                let plans = pipeline::run_dse(&exp, mode)?;
                let stem = format!("plans_{}_{mode}", plans.network);
                std::fs::create_dir_all(out)?;
                plans.save(out.join(format!("{stem}.json")))?;
                pipeline::write_plans_csv(pipeline::create_file(out, &format!("{stem}.csv"))?, &plans)?;
                let total: u64 = plans.layers.iter().map(|l| l.min_accesses.total()).sum();
                println!(
                    "{mode}: {} layers, {total} words -> {}",
                    plans.layers.len(),
                    out.join(stem).display()
                );
            }
        }
        Command::Trace { plans: file, layer } => {
            for plans in plans(cli, file)? {
                let name = format!("trace_{}_{}_{}.txt", plans.network, plans.mode, burst(cli));
                pipeline::write_trace(&plans, burst(cli), cli.alias, layer, pipeline::create_file(out, &name)?)?;
                println!("{}", out.join(name).display());
            }
        }
        Command::Sim { plans: file } => {
            for plans in plans(cli, file)? {
                let run = pipeline::simulate_plans(&plans, burst(cli), cli.alias)?;
                let name = format!("stats_{}_{}_{}.csv", run.network, run.mode, run.burst);
                pipeline::write_stats_csv(pipeline::create_file(out, &name)?, &run)?;
                let s = run.stats();
                println!(
                    "{}: {} requests, {} conflicts+misses, {} cycles, {:.3e} pJ -> {}",
                    run.mode,
                    s.requests(),
                    s.conflicts_and_misses(),
                    s.total_cycles,
                    run.energy().total(),
                    out.join(name).display()
                );
            }
        }
        Command::Compare => {
            let cmp = pipeline::run_compare(&experiment(cli)?, burst(cli))?;
            for m in cmp.summary() {
                let reference = m.reference_pct.map_or(String::new(), |r| format!(" (reference {r:.1}%)"));
                println!("{:<17} {:>7.2}%{reference}", m.metric, m.reduction_pct);
            }
            for path in pipeline::write_comparison(out, &cmp)? {
                println!("{}", path.display());
            }
        }
        Command::Sweep { axis, values } => {
            let exp = experiment(cli)?;
            let rows = pipeline::run_sweep(&exp, *axis, values, burst(cli))?;
            let name = format!(
                "sweep_{}_{}.csv",
                exp.network.name,
                axis.to_possible_value().expect("named").get_name()
            );
            pipeline::write_sweep_csv(pipeline::create_file(out, &name)?, &rows)?;
            println!("{}", out.join(name).display());
        }
        Command::Report => {
            let text = pipeline::render_report(out)?;
            std::fs::write(out.join("report.txt"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}
