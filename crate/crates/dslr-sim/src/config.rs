//! Layer, tile, baseline and hardware-profile configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
}

/// One convolution layer's dimensions. `r` and `c` are the output feature
/// map height and width.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub name: String,
    /// input channels
    pub n: usize,
    /// output channels (number of kernels)
    pub m: usize,
    /// output rows
    pub r: usize,
    /// output columns
    pub c: usize,
    /// kernel side
    pub k: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub padding: usize,
    /// input feature map height/width; derived from the output when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_hw: Option<(usize, usize)>,
}

fn one() -> usize {
    1
}

impl LayerConfig {
    pub fn new(name: &str, n: usize, m: usize, r: usize, c: usize, k: usize) -> Self {
        LayerConfig {
            name: name.to_string(),
            n,
            m,
            r,
            c,
            k,
            stride: 1,
            padding: 0,
            input_hw: None,
        }
    }

    pub fn with_geometry(mut self, stride: usize, padding: usize) -> Self {
        self.stride = stride;
        self.padding = padding;
        self
    }

    pub fn with_input(mut self, h: usize, w: usize) -> Self {
        self.input_hw = Some((h, w));
        self
    }

    /// Input height/width, derived as `(out - 1) * stride + k - 2 * padding`
    /// when not given explicitly.
    pub fn input_size(&self) -> (usize, usize) {
        self.input_hw.unwrap_or_else(|| {
            let h = ((self.r - 1) * self.stride + self.k).saturating_sub(2 * self.padding);
            let w = ((self.c - 1) * self.stride + self.k).saturating_sub(2 * self.padding);
            (h, w)
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        for (what, v) in [
            ("n", self.n),
            ("m", self.m),
            ("r", self.r),
            ("c", self.c),
            ("k", self.k),
            ("stride", self.stride),
        ] {
            if v < 1 {
                problems.push(format!("layer {}: {what} must be >= 1", self.name));
            }
        }
        if let Some((h, w)) = self.input_hw {
            if self.stride >= 1 {
                let rr = (h + 2 * self.padding).saturating_sub(self.k) / self.stride + 1;
                let cc = (w + 2 * self.padding).saturating_sub(self.k) / self.stride + 1;
                if rr != self.r || cc != self.c {
                    problems.push(format!(
                        "layer {}: output {}x{} inconsistent with input {h}x{w}, k={}, stride={}, padding={} (expected {rr}x{cc})",
                        self.name, self.r, self.c, self.k, self.stride, self.padding
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(problems))
        }
    }
}

/// Accelerator tile geometry and timing constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TileConfig {
    /// input-channel tiling
    pub t_n: usize,
    /// output-channel tiling
    pub t_m: usize,
    /// row tiling
    pub t_r: usize,
    /// column tiling
    pub t_c: usize,
    /// kernel-pixel engines per window
    pub pe_window: usize,
    /// spatial engines (t_r * t_c)
    pub pe_spatial: usize,
    pub delta_mult: u32,
    pub delta_add: u32,
    /// input precision in bits
    pub p_i: u32,
    pub clock_mhz: f64,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            t_n: 16,
            t_m: 8,
            t_r: 8,
            t_c: 8,
            pe_window: 9,
            pe_spatial: 64,
            delta_mult: 2,
            delta_add: 2,
            p_i: 16,
            clock_mhz: 500.0,
        }
    }
}

impl TileConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        for (what, v) in [
            ("t_n", self.t_n),
            ("t_m", self.t_m),
            ("t_r", self.t_r),
            ("t_c", self.t_c),
            ("pe_window", self.pe_window),
            ("pe_spatial", self.pe_spatial),
        ] {
            if v < 1 {
                problems.push(format!("tile: {what} must be >= 1"));
            }
        }
        if self.t_r * self.t_c != self.pe_spatial {
            problems.push(format!(
                "tile: t_r * t_c = {} does not match pe_spatial = {}",
                self.t_r * self.t_c,
                self.pe_spatial
            ));
        }
        if !(2..=16).contains(&self.p_i) {
            problems.push(format!("tile: p_i = {} outside 2..=16", self.p_i));
        }
        if self.clock_mhz <= 0.0 {
            problems.push("tile: clock_mhz must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(problems))
        }
    }
}

/// How the spatial tile count is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TilesForm {
    /// `ceil(R*C / (T_r*T_c))` — reproduces the published totals
    #[default]
    Product,
    /// `ceil(R/T_r) * ceil(C/T_c)`
    PerCoord,
}

impl TilesForm {
    pub fn spatial_tiles(self, layer: &LayerConfig, tile: &TileConfig) -> u64 {
        match self {
            TilesForm::Product => {
                div_ceil(layer.r as u64 * layer.c as u64, (tile.t_r * tile.t_c) as u64)
            }
            TilesForm::PerCoord => {
                div_ceil(layer.r as u64, tile.t_r as u64)
                    * div_ceil(layer.c as u64, tile.t_c as u64)
            }
        }
    }
}

/// Bit-serial baseline timing constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub n_bits: u32,
    pub mult_phases: u64,
    pub acc_phases: u64,
    /// cycles per multiply/accumulate phase
    pub n_cycles: u64,
    #[serde(default)]
    pub tiles_form: TilesForm,
}

impl BaselineConfig {
    /// The reading that reproduces the published baseline totals: one
    /// multiply phase plus one accumulate phase, each lasting the full
    /// product width of `2 * p_i - 1` cycles.
    pub fn table_reading(p_i: u32) -> Self {
        BaselineConfig {
            n_bits: p_i,
            mult_phases: 1,
            acc_phases: 1,
            n_cycles: 2 * p_i as u64 - 1,
            tiles_form: TilesForm::Product,
        }
    }

    /// The literal reading with `n` equal to the input precision.
    pub fn literal_reading(p_i: u32) -> Self {
        BaselineConfig {
            n_bits: p_i,
            mult_phases: 1,
            acc_phases: 1,
            n_cycles: p_i as u64,
            tiles_form: TilesForm::PerCoord,
        }
    }
}

/// Synthesis operating point: power, area and clock, plus pass-through
/// scale factors for re-expressing the numbers at another technology node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HwProfile {
    pub label: String,
    pub power_mw: f64,
    pub area_um2: f64,
    pub clock_mhz: f64,
    #[serde(default = "one_f64")]
    pub freq_scale: f64,
    #[serde(default = "one_f64")]
    pub power_scale: f64,
}

fn one_f64() -> f64 {
    1.0
}

impl HwProfile {
    /// 45nm synthesis point of the left-to-right design.
    pub fn dslr_default() -> Self {
        HwProfile {
            label: "dslr-45nm".into(),
            power_mw: 1249.42,
            area_um2: 84_046_898.0,
            clock_mhz: 500.0,
            freq_scale: 1.0,
            power_scale: 1.0,
        }
    }

    /// 45nm synthesis point of the conventional bit-serial baseline.
    pub fn baseline_default() -> Self {
        HwProfile {
            label: "baseline-45nm".into(),
            power_mw: 795.21,
            area_um2: 54_206_087.0,
            clock_mhz: 500.0,
            freq_scale: 1.0,
            power_scale: 1.0,
        }
    }

    pub fn effective_clock_mhz(&self) -> f64 {
        self.clock_mhz * self.freq_scale
    }

    pub fn effective_power_mw(&self) -> f64 {
        self.power_mw * self.power_scale
    }

    pub fn area_mm2(&self) -> f64 {
        self.area_um2 / 1e6
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if self.power_mw <= 0.0 {
            problems.push(format!("profile {}: power must be positive", self.label));
        }
        if self.area_um2 <= 0.0 {
            problems.push(format!("profile {}: area must be positive", self.label));
        }
        if self.clock_mhz <= 0.0 {
            problems.push(format!("profile {}: clock must be positive", self.label));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(problems))
        }
    }
}

/// Measured critical-path delays of the synthesized designs, kept as
/// reference constants; nothing in the model computes them.
pub const DSLR_CRITICAL_PATH_NS: f64 = 1.07;
pub const BASELINE_CRITICAL_PATH_NS: f64 = 1.92;

pub(crate) fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}
