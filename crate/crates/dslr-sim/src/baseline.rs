//! Functional and analytic model of the conventional bit-serial baseline:
//! AND-array partial products into an accumulator, then adder trees.

use crate::config::{BaselineConfig, LayerConfig, TileConfig};
use crate::dyadic::Dyadic;
use crate::online::ceil_log2;
use crate::sd::Fixed;

/// Shift-add partial-product multiplication: one AND-array row per set bit
/// of the serial operand's magnitude. Exact.
pub fn baseline_mult(x: Fixed, y: Fixed) -> Dyadic {
    let sign = (x.raw() < 0) ^ (y.raw() < 0);
    let xm = x.raw().unsigned_abs() as u128;
    let ym = y.raw().unsigned_abs() as u128;
    let mut acc: u128 = 0;
    for bit in 0..y.width() {
        if (ym >> bit) & 1 == 1 {
            acc += xm << bit;
        }
    }
    let num = if sign { -(acc as i128) } else { acc as i128 };
    Dyadic::from_scaled(num, (x.width() - 1) + (y.width() - 1))
}

/// Per-pass cycles of the baseline: multiply and accumulate phases of
/// `n_cycles` each, plus the channel and window adder-tree stages.
pub fn baseline_per_pass(layer: &LayerConfig, tile: &TileConfig, cfg: &BaselineConfig) -> u64 {
    (cfg.mult_phases + cfg.acc_phases) * cfg.n_cycles
        + ceil_log2(tile.t_n) as u64
        + ceil_log2(layer.k * layer.k) as u64
}

/// Total baseline cycles for a layer.
pub fn baseline_cycles(layer: &LayerConfig, tile: &TileConfig, cfg: &BaselineConfig) -> u64 {
    let spatial = cfg.tiles_form.spatial_tiles(layer, tile);
    let m_tiles = (layer.m as u64).div_ceil(tile.t_m as u64);
    let n_tiles = (layer.n as u64).div_ceil(tile.t_n as u64);
    baseline_per_pass(layer, tile, cfg) * spatial * m_tiles * n_tiles
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TilesForm;

    fn fx(raw: i64, width: u32) -> Fixed {
        Fixed::new(raw, width).unwrap()
    }

    #[test]
    fn mult_examples() {
        let half = fx(64, 8);
        assert_eq!(baseline_mult(half, half), Dyadic::from_scaled(1, 2));
        assert!(baseline_mult(fx(-77, 8), fx(0, 8)).is_zero());
    }

    #[test]
    fn mult_exhaustive_width8() {
        for rx in -128i64..128 {
            for ry in -128i64..128 {
                let got = baseline_mult(fx(rx, 8), fx(ry, 8));
                assert_eq!(got, Dyadic::from_scaled((rx * ry) as i128, 14));
            }
        }
    }

    #[test]
    fn per_pass_values() {
        let tile = TileConfig::default();
        let cfg = BaselineConfig::table_reading(tile.p_i);
        assert_eq!(cfg.n_cycles, 31);
        let c1 = LayerConfig::new("c1", 3, 96, 55, 55, 11);
        assert_eq!(baseline_per_pass(&c1, &tile, &cfg), 62 + 4 + 7);
        assert_eq!(baseline_cycles(&c1, &tile, &cfg), 73 * 48 * 12);
        let any3 = LayerConfig::new("x", 16, 8, 8, 8, 3);
        assert_eq!(baseline_per_pass(&any3, &tile, &cfg), 70);
    }

    #[test]
    fn degenerate_log_terms() {
        let tile = TileConfig {
            t_n: 1,
            t_m: 8,
            t_r: 1,
            t_c: 1,
            pe_spatial: 1,
            ..TileConfig::default()
        };
        let cfg = BaselineConfig::table_reading(tile.p_i);
        let layer = LayerConfig::new("k1", 1, 8, 1, 1, 1);
        assert_eq!(baseline_cycles(&layer, &tile, &cfg), 62);
    }

    #[test]
    fn tiles_form_flag_changes_count() {
        let tile = TileConfig::default();
        let mut cfg = BaselineConfig::table_reading(tile.p_i);
        let c1 = LayerConfig::new("c1", 3, 96, 55, 55, 11);
        let product = baseline_cycles(&c1, &tile, &cfg);
        cfg.tiles_form = TilesForm::PerCoord;
        let percoord = baseline_cycles(&c1, &tile, &cfg);
        assert_eq!(product / 73 / 12, 48);
        assert_eq!(percoord / 73 / 12, 49);
    }
}
