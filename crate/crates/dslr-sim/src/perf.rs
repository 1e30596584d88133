//! Analytic cycle, latency, throughput, efficiency and operational-intensity
//! model for both designs, and the report generator built on it.

use crate::baseline::baseline_cycles;
use crate::config::{BaselineConfig, HwProfile, LayerConfig, TileConfig, TilesForm};
use crate::online::ceil_log2;
use crate::zoo::NetworkDef;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PerfError {
    #[error("duration must be positive, got {0}")]
    ZeroDuration(f64),
    #[error("network has no layers")]
    EmptyNetwork,
}

/// Per-pass cycles of the left-to-right design: pipeline fill (the online
/// delays through the multiplier and both reduction stages) plus the output
/// digits `p_i + ceil(log2 k^2) + ceil(log2 t_n)`.
pub fn dslr_per_pass(layer: &LayerConfig, tile: &TileConfig) -> u64 {
    let dw = ceil_log2(layer.k * layer.k) as u64;
    let dc = ceil_log2(tile.t_n) as u64;
    tile.delta_mult as u64
        + tile.delta_add as u64 * dw
        + tile.delta_add as u64 * dc
        + tile.p_i as u64
        + dw
        + dc
}

/// Total cycles for a layer under the product tile form.
pub fn dslr_cycles(layer: &LayerConfig, tile: &TileConfig) -> u64 {
    dslr_cycles_with_form(layer, tile, TilesForm::Product)
}

pub fn dslr_cycles_with_form(layer: &LayerConfig, tile: &TileConfig, form: TilesForm) -> u64 {
    let spatial = form.spatial_tiles(layer, tile);
    let m_tiles = (layer.m as u64).div_ceil(tile.t_m as u64);
    let n_tiles = (layer.n as u64).div_ceil(tile.t_n as u64);
    dslr_per_pass(layer, tile) * spatial * m_tiles * n_tiles
}

/// Operation count of a convolution layer: `2 * M * N * R * C * K * K`
/// (one multiply and one add per kernel element).
pub fn layer_ops(layer: &LayerConfig) -> u64 {
    2 * layer.m as u64
        * layer.n as u64
        * layer.r as u64
        * layer.c as u64
        * (layer.k * layer.k) as u64
}

/// Cycles at a clock in MHz, expressed in milliseconds.
pub fn duration_ms(cycles: u64, clock_mhz: f64) -> f64 {
    cycles as f64 / (clock_mhz * 1000.0)
}

/// Throughput in GOPS from an operation count and a duration in ms.
pub fn performance_gops(ops: u64, duration_ms: f64) -> Result<f64, PerfError> {
    if duration_ms <= 0.0 {
        return Err(PerfError::ZeroDuration(duration_ms));
    }
    Ok(ops as f64 / (duration_ms * 1e6))
}

/// Energy efficiency (TOPS/W) and area efficiency (GOPS/mm^2).
pub fn efficiency(perf_gops: f64, profile: &HwProfile) -> (f64, f64) {
    let tops_per_w = perf_gops / profile.effective_power_mw();
    let gops_per_mm2 = perf_gops / profile.area_mm2();
    (tops_per_w, gops_per_mm2)
}

/// Memory-traffic model for operational intensity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficModel {
    /// each input, weight and output word moves once
    Unique,
    /// partial sums are re-read and re-written once per extra
    /// input-channel tile
    Rewrites,
}

/// Bytes moved for one layer under a traffic model.
pub fn traffic_bytes(
    layer: &LayerConfig,
    tile: &TileConfig,
    precision_bytes: u64,
    model: TrafficModel,
) -> u64 {
    let (h_in, w_in) = layer.input_size();
    let inputs = layer.n as u64 * h_in as u64 * w_in as u64;
    let weights = layer.m as u64 * layer.n as u64 * (layer.k * layer.k) as u64;
    let outputs = layer.m as u64 * layer.r as u64 * layer.c as u64;
    let output_moves = match model {
        TrafficModel::Unique => outputs,
        TrafficModel::Rewrites => {
            let n_tiles = (layer.n as u64).div_ceil(tile.t_n as u64);
            outputs * (2 * n_tiles - 1)
        }
    };
    precision_bytes * (inputs + weights + output_moves)
}

/// Operations per byte of memory traffic.
pub fn op_intensity(
    layer: &LayerConfig,
    tile: &TileConfig,
    precision_bytes: u64,
    model: TrafficModel,
) -> f64 {
    layer_ops(layer) as f64 / traffic_bytes(layer, tile, precision_bytes, model) as f64
}

/// Per-layer performance record.
#[derive(Clone, Debug, Serialize)]
pub struct LayerPerf {
    pub layer: String,
    pub cycles: u64,
    pub duration_ms: f64,
    pub ops: u64,
    pub gops: f64,
    pub tops_per_w: f64,
    pub gops_per_mm2: f64,
    pub op_intensity: f64,
}

/// Aggregates over a network.
#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub total_cycles: u64,
    pub total_duration_ms: f64,
    pub mean_duration_ms: f64,
    pub peak_gops: f64,
    pub peak_tops_per_w: f64,
    pub peak_gops_per_mm2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignReport {
    pub profile: String,
    pub clock_mhz: f64,
    pub layers: Vec<LayerPerf>,
    pub aggregate: Aggregate,
}

/// Full report: the left-to-right design, optionally the baseline, and
/// per-layer plus aggregate speedups when both are present.
#[derive(Clone, Debug, Serialize)]
pub struct PerfReport {
    pub network: String,
    pub dslr: DesignReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<DesignReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speedup: Option<SpeedupReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeedupReport {
    pub per_layer: Vec<f64>,
    pub aggregate: f64,
}

/// Everything the report builder needs beyond the network itself.
#[derive(Clone, Debug)]
pub struct ReportParams {
    pub tile: TileConfig,
    pub dslr_profile: HwProfile,
    pub baseline_profile: HwProfile,
    pub tiles_form: TilesForm,
    pub baseline_cfg: BaselineConfig,
    pub traffic: TrafficModel,
    pub precision_bytes: u64,
}

impl Default for ReportParams {
    fn default() -> Self {
        let tile = TileConfig::default();
        let baseline_cfg = BaselineConfig::table_reading(tile.p_i);
        ReportParams {
            tile,
            dslr_profile: HwProfile::dslr_default(),
            baseline_profile: HwProfile::baseline_default(),
            tiles_form: TilesForm::Product,
            baseline_cfg,
            traffic: TrafficModel::Unique,
            precision_bytes: 2,
        }
    }
}

fn design_report<F>(
    network: &NetworkDef,
    params: &ReportParams,
    profile: &HwProfile,
    cycles_of: F,
) -> Result<DesignReport, PerfError>
where
    F: Fn(&LayerConfig) -> u64,
{
    let clock = profile.effective_clock_mhz();
    let mut layers = Vec::with_capacity(network.layers.len());
    for layer in &network.layers {
        let cycles = cycles_of(layer);
        let d = duration_ms(cycles, clock);
        let ops = layer_ops(layer);
        let gops = performance_gops(ops, d)?;
        let (tops_per_w, gops_per_mm2) = efficiency(gops, profile);
        layers.push(LayerPerf {
            layer: layer.name.clone(),
            cycles,
            duration_ms: d,
            ops,
            gops,
            tops_per_w,
            gops_per_mm2,
            op_intensity: op_intensity(layer, &params.tile, params.precision_bytes, params.traffic),
        });
    }
    let total_cycles = layers.iter().map(|l| l.cycles).sum();
    let total_duration_ms: f64 = layers.iter().map(|l| l.duration_ms).sum();
    let peak_gops = layers.iter().map(|l| l.gops).fold(0.0, f64::max);
    let (peak_tops_per_w, peak_gops_per_mm2) = efficiency(peak_gops, profile);
    Ok(DesignReport {
        profile: profile.label.clone(),
        clock_mhz: clock,
        aggregate: Aggregate {
            total_cycles,
            total_duration_ms,
            mean_duration_ms: total_duration_ms / layers.len() as f64,
            peak_gops,
            peak_tops_per_w,
            peak_gops_per_mm2,
        },
        layers,
    })
}

/// Build the full per-layer and aggregate report for a network.
pub fn build_report(
    network: &NetworkDef,
    params: &ReportParams,
    include_baseline: bool,
) -> Result<PerfReport, PerfError> {
    if network.layers.is_empty() {
        return Err(PerfError::EmptyNetwork);
    }
    let dslr = design_report(network, params, &params.dslr_profile, |layer| {
        dslr_cycles_with_form(layer, &params.tile, params.tiles_form)
    })?;
    let baseline = if include_baseline {
        let mut cfg = params.baseline_cfg.clone();
        cfg.tiles_form = params.tiles_form;
        Some(design_report(network, params, &params.baseline_profile, |layer| {
            baseline_cycles(layer, &params.tile, &cfg)
        })?)
    } else {
        None
    };
    let speedup = baseline.as_ref().map(|b| SpeedupReport {
        per_layer: b
            .layers
            .iter()
            .zip(&dslr.layers)
            .map(|(bl, dl)| bl.duration_ms / dl.duration_ms)
            .collect(),
        aggregate: b.aggregate.total_duration_ms / dslr.aggregate.total_duration_ms,
    });
    Ok(PerfReport {
        network: network.name.clone(),
        dslr,
        baseline,
        speedup,
    })
}

/// Plain decimal with at least six significant digits (no exponent form).
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.6}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (5 - mag).clamp(0, 18) as usize;
    format!("{x:.decimals$}")
}

impl PerfReport {
    /// One CSV row per layer per design, then an aggregate block.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(
            "design,layer,cycles,duration_ms,ops,gops,tops_per_w,gops_per_mm2,oi,speedup\n",
        );
        let mut push_rows = |design: &str, rep: &DesignReport, speed: Option<&[f64]>| {
            for (i, l) in rep.layers.iter().enumerate() {
                let speedup = speed
                    .and_then(|s| s.get(i))
                    .map(|v| format_decimal(*v))
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{design},{},{},{},{},{},{},{},{},{speedup}\n",
                    l.layer,
                    l.cycles,
                    format_decimal(l.duration_ms),
                    l.ops,
                    format_decimal(l.gops),
                    format_decimal(l.tops_per_w),
                    format_decimal(l.gops_per_mm2),
                    format_decimal(l.op_intensity),
                ));
            }
        };
        push_rows("dslr", &self.dslr, self.speedup.as_ref().map(|s| s.per_layer.as_slice()));
        if let Some(b) = &self.baseline {
            push_rows("baseline", b, None);
        }
        out.push_str("aggregate,design,total_cycles,total_duration_ms,mean_duration_ms,peak_gops,peak_tops_per_w,peak_gops_per_mm2,speedup\n");
        let mut push_agg = |design: &str, a: &Aggregate, speedup: Option<f64>| {
            out.push_str(&format!(
                "aggregate,{design},{},{},{},{},{},{},{}\n",
                a.total_cycles,
                format_decimal(a.total_duration_ms),
                format_decimal(a.mean_duration_ms),
                format_decimal(a.peak_gops),
                format_decimal(a.peak_tops_per_w),
                format_decimal(a.peak_gops_per_mm2),
                speedup.map(format_decimal).unwrap_or_default(),
            ));
        };
        push_agg(
            "dslr",
            &self.dslr.aggregate,
            self.speedup.as_ref().map(|s| s.aggregate),
        );
        if let Some(b) = &self.baseline {
            push_agg("baseline", &b.aggregate, None);
        }
        out
    }
}
