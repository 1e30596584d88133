//! Command-line front end: analytic modeling, digit-accurate simulation,
//! design comparison and roofline data emission.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dslr_sim::config::{BaselineConfig, LayerConfig, TileConfig, TilesForm};
use dslr_sim::perf::{
    build_report, dslr_cycles_with_form, format_decimal, ReportParams, TrafficModel,
};
use dslr_sim::sim::{
    estimated_mult_steps, reference_conv, resolve_threads, run_layer_opts, SimOptions,
};
use dslr_sim::tensor::TensorFx;
use dslr_sim::zoo::{builtin, load_config, NetworkDef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;

/// Hard ceiling on multiplier steps for a digit-accurate run.
const SIM_STEP_GUARD: u128 = 1 << 28;

#[derive(Parser)]
#[command(name = "dslr", version, about = "Left-to-right signed-digit CNN accelerator model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic performance report for a network
    Model(ModelArgs),
    /// Digit-accurate simulation of one layer, checked against the golden model
    Simulate(SimulateArgs),
    /// Side-by-side design comparison with speedups
    Compare(CompareArgs),
    /// Operational-intensity / performance points for roofline plotting
    Roofline(RooflineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TilesFormArg {
    Product,
    Percoord,
}

impl From<TilesFormArg> for TilesForm {
    fn from(v: TilesFormArg) -> Self {
        match v {
            TilesFormArg::Product => TilesForm::Product,
            TilesFormArg::Percoord => TilesForm::PerCoord,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TrafficArg {
    Unique,
    Rewrites,
}

impl From<TrafficArg> for TrafficModel {
    fn from(v: TrafficArg) -> Self {
        match v {
            TrafficArg::Unique => TrafficModel::Unique,
            TrafficArg::Rewrites => TrafficModel::Rewrites,
        }
    }
}

#[derive(Args)]
struct CommonModelArgs {
    /// Built-in network name (alexnet, vgg16, resnet18)
    #[arg(long)]
    network: Option<String>,
    /// JSON configuration file (network + tile + hardware)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the clock for both designs, in MHz
    #[arg(long, value_name = "MHZ")]
    freq: Option<f64>,
    /// Override the design power, in mW
    #[arg(long, value_name = "MW")]
    power: Option<f64>,
    /// Override the design area, in um^2
    #[arg(long, value_name = "UM2")]
    area: Option<f64>,
    /// Spatial tile count form
    #[arg(long, value_enum, default_value = "product")]
    tiles_form: TilesFormArg,
    /// Use the literal baseline constants (n = input precision)
    #[arg(long)]
    eq5_literal: bool,
    /// Traffic model for operational intensity
    #[arg(long, value_enum, default_value = "unique")]
    traffic: TrafficArg,
}

impl CommonModelArgs {
    fn resolve(&self) -> Result<(NetworkDef, ReportParams)> {
        let mut params = ReportParams::default();
        let network = match (&self.network, &self.config) {
            (Some(name), None) => builtin(name)?,
            (None, Some(path)) => {
                let loaded = load_config(path)?;
                for w in &loaded.warnings {
                    eprintln!("warning: {w}");
                }
                params.tile = loaded.tile;
                params.dslr_profile = loaded.dslr_profile;
                params.baseline_profile = loaded.baseline_profile;
                loaded.network
            }
            (Some(_), Some(_)) => bail!("pass either --network or --config, not both"),
            (None, None) => bail!("one of --network or --config is required"),
        };
        params.baseline_cfg = if self.eq5_literal {
            BaselineConfig::literal_reading(params.tile.p_i)
        } else {
            BaselineConfig::table_reading(params.tile.p_i)
        };
        params.tiles_form = self.tiles_form.into();
        params.traffic = self.traffic.into();
        if let Some(freq) = self.freq {
            if freq <= 0.0 {
                bail!("--freq must be positive");
            }
            params.dslr_profile.clock_mhz = freq;
            params.baseline_profile.clock_mhz = freq;
            params.tile.clock_mhz = freq;
        }
        if let Some(power) = self.power {
            params.dslr_profile.power_mw = power;
        }
        if let Some(area) = self.area {
            params.dslr_profile.area_um2 = area;
        }
        Ok((network, params))
    }
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    /// Include the bit-serial baseline and speedups
    #[arg(long)]
    baseline: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration file; the first layer is simulated
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Layer dimensions for an ad-hoc run
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 8)]
    r: usize,
    #[arg(long, default_value_t = 8)]
    c: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = 0)]
    padding: usize,
    /// RNG seed for the generated tensors
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input activations file (generated from the seed when absent)
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Weights file (generated from the seed when absent)
    #[arg(long, value_name = "PATH")]
    weights: Option<PathBuf>,
    /// Write the simulated outputs to a tensor file
    #[arg(long, value_name = "PATH")]
    dump_output: Option<PathBuf>,
    /// Test hook: corrupt one reduction-tree digit per engine
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    /// Comma-separated networks (default: the three built-ins)
    #[arg(long, value_delimiter = ',')]
    networks: Vec<String>,
    /// Compare against the baseline or the design itself
    #[arg(long, value_enum, default_value = "baseline")]
    against: Against,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Against {
    Baseline,
    #[value(name = "self")]
    SelfSame,
}

#[derive(Args)]
struct RooflineArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    /// Emit the baseline series as well
    #[arg(long)]
    baseline: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[cfg(unix)]
fn reset_sigpipe() {
    // die quietly when a pager/head closes the pipe
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Model(args) => cmd_model(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Roofline(args) => cmd_roofline(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_model(args: ModelArgs) -> Result<ExitCode> {
    let (network, params) = args.common.resolve()?;
    let report = build_report(&network, &params, args.baseline)?;
    match args.format {
        Format::Csv => print!("{}", report.to_csv()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let (layer, tile) = match &args.config {
        Some(path) => {
            let loaded = load_config(path)?;
            for w in &loaded.warnings {
                eprintln!("warning: {w}");
            }
            let layer = loaded
                .network
                .layers
                .first()
                .cloned()
                .ok_or_else(|| anyhow!("config has no layers"))?;
            (layer, loaded.tile)
        }
        None => {
            let layer = LayerConfig::new("adhoc", args.n, args.m, args.r, args.c, args.k)
                .with_geometry(args.stride, args.padding);
            (layer, TileConfig::default())
        }
    };
    layer.validate()?;
    tile.validate()?;

    let steps = estimated_mult_steps(&layer, &tile);
    if steps > SIM_STEP_GUARD {
        eprintln!(
            "refusing digit-accurate run: ~{steps} multiplier steps exceed the {SIM_STEP_GUARD} guard; \
             shrink the layer or tile"
        );
        return Ok(ExitCode::FAILURE);
    }

    let (h_in, w_in) = layer.input_size();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let inputs = match &args.input {
        Some(path) => TensorFx::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => TensorFx::random(&[layer.n, h_in, w_in], tile.p_i, &mut rng),
    };
    let weights = match &args.weights {
        Some(path) => TensorFx::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => TensorFx::random(&[layer.m, layer.n, layer.k, layer.k], tile.p_i, &mut rng),
    };

    let opts = SimOptions {
        threads: Some(resolve_threads()),
        inject_fault: args.inject_fault,
    };
    let sim = run_layer_opts(&layer, &tile, &inputs, &weights, &opts)?;
    let golden = reference_conv(&layer, &tile, &inputs, &weights)?;
    let predicted = dslr_cycles_with_form(&layer, &tile, TilesForm::Product);

    let oracle_ok = sim.outputs == golden;
    let cycles_ok = sim.measured_cycles == predicted;
    println!(
        "layer {}: n={} m={} r={} c={} k={} stride={} padding={} (seed {})",
        layer.name, layer.n, layer.m, layer.r, layer.c, layer.k, layer.stride, layer.padding,
        args.seed
    );
    println!(
        "oracle equivalence: {} ({} output words)",
        pass_fail(oracle_ok),
        golden.len()
    );
    println!(
        "cycle model agreement: {} (measured {}, predicted {}, {} cycles/pass x {} passes)",
        pass_fail(cycles_ok),
        sim.measured_cycles,
        predicted,
        sim.per_pass_cycles,
        sim.passes
    );
    if let Some(path) = &args.dump_output {
        sim.outputs
            .save(path)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("outputs written to {}", path.display());
    }
    Ok(if oracle_ok && cycles_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode> {
    if args.common.config.is_some() && !args.networks.is_empty() {
        bail!("pass either --config or --networks, not both");
    }
    let sources: Vec<(Option<String>, Option<PathBuf>)> = if args.common.config.is_some() {
        vec![(None, args.common.config.clone())]
    } else if args.networks.is_empty() {
        ["alexnet", "vgg16", "resnet18"]
            .iter()
            .map(|n| (Some(n.to_string()), None))
            .collect()
    } else {
        args.networks.iter().map(|n| (Some(n.clone()), None)).collect()
    };
    let mut rows = Vec::new();
    for (name, config) in sources {
        let (network, params) = CommonModelArgs {
            network: name,
            config,
            freq: args.common.freq,
            power: args.common.power,
            area: args.common.area,
            tiles_form: args.common.tiles_form,
            eq5_literal: args.common.eq5_literal,
            traffic: args.common.traffic,
        }
        .resolve()?;
        let report = build_report(&network, &params, true)?;
        let base = report.baseline.as_ref().expect("baseline requested");
        let (base_total, base_mean, base_peak, speedup) = match args.against {
            Against::Baseline => (
                base.aggregate.total_duration_ms,
                base.aggregate.mean_duration_ms,
                base.aggregate.peak_gops,
                report.speedup.as_ref().expect("speedup present").aggregate,
            ),
            Against::SelfSame => (
                report.dslr.aggregate.total_duration_ms,
                report.dslr.aggregate.mean_duration_ms,
                report.dslr.aggregate.peak_gops,
                1.0,
            ),
        };
        rows.push(serde_json::json!({
            "network": network.name,
            "layers": network.layers.len(),
            "dslr_total_ms": report.dslr.aggregate.total_duration_ms,
            "dslr_mean_ms": report.dslr.aggregate.mean_duration_ms,
            "dslr_peak_gops": report.dslr.aggregate.peak_gops,
            "ref_total_ms": base_total,
            "ref_mean_ms": base_mean,
            "ref_peak_gops": base_peak,
            "speedup": speedup,
        }));
    }
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
        Format::Csv => {
            println!(
                "network,layers,dslr_total_ms,dslr_mean_ms,dslr_peak_gops,ref_total_ms,ref_mean_ms,ref_peak_gops,speedup"
            );
            for row in &rows {
                println!(
                    "{},{},{},{},{},{},{},{},{}",
                    row["network"].as_str().unwrap(),
                    row["layers"],
                    format_decimal(row["dslr_total_ms"].as_f64().unwrap()),
                    format_decimal(row["dslr_mean_ms"].as_f64().unwrap()),
                    format_decimal(row["dslr_peak_gops"].as_f64().unwrap()),
                    format_decimal(row["ref_total_ms"].as_f64().unwrap()),
                    format_decimal(row["ref_mean_ms"].as_f64().unwrap()),
                    format_decimal(row["ref_peak_gops"].as_f64().unwrap()),
                    format_decimal(row["speedup"].as_f64().unwrap()),
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_roofline(args: RooflineArgs) -> Result<ExitCode> {
    let (network, params) = args.common.resolve()?;
    let report = build_report(&network, &params, args.baseline)?;
    let mut points = Vec::new();
    for l in &report.dslr.layers {
        points.push(("dslr", l.layer.clone(), l.op_intensity, l.gops));
    }
    if let Some(base) = &report.baseline {
        for l in &base.layers {
            points.push(("baseline", l.layer.clone(), l.op_intensity, l.gops));
        }
    }
    match args.format {
        Format::Csv => {
            println!("design,layer,ops_per_byte,gops");
            for (design, layer, oi, gops) in &points {
                println!(
                    "{design},{layer},{},{}",
                    format_decimal(*oi),
                    format_decimal(*gops)
                );
            }
        }
        Format::Json => {
            let rows: Vec<_> = points
                .iter()
                .map(|(design, layer, oi, gops)| {
                    serde_json::json!({
                        "design": design,
                        "layer": layer,
                        "ops_per_byte": oi,
                        "gops": gops,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&rows)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
