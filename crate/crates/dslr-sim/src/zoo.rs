//! Built-in convolution layer tables (AlexNet, VGG-16, ResNet-18) and
//! JSON configuration ingestion.
//!
//! The tables pin kernel size, output channels and output feature map per
//! layer; input channels, stride and padding follow the standard
//! architectures (AlexNet is treated as ungrouped).

use crate::config::{ConfigError, HwProfile, LayerConfig, TileConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("unknown network {0:?} (expected alexnet, vgg16 or resnet18)")]
    UnknownNetwork(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// An ordered list of convolution layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDef {
    pub name: String,
    pub layers: Vec<LayerConfig>,
}

impl NetworkDef {
    /// Validates every layer; returns channel-chaining warnings (layer i
    /// output channels feeding layer i+1 input channels) without failing,
    /// since branching architectures legitimately break the chain.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        if self.layers.is_empty() {
            return Err(ConfigError::Validation(vec![format!(
                "network {}: no layers",
                self.name
            )]));
        }
        let mut problems = Vec::new();
        for layer in &self.layers {
            if let Err(ConfigError::Validation(p)) = layer.validate() {
                problems.extend(p);
            }
        }
        if !problems.is_empty() {
            return Err(ConfigError::Validation(problems));
        }
        let mut warnings = Vec::new();
        for pair in self.layers.windows(2) {
            if pair[1].n != pair[0].m {
                warnings.push(format!(
                    "layer {} consumes {} channels but {} produces {}",
                    pair[1].name, pair[1].n, pair[0].name, pair[0].m
                ));
            }
        }
        Ok(warnings)
    }
}

#[allow(clippy::too_many_arguments)]
fn layer(
    name: &str,
    n: usize,
    m: usize,
    rc: usize,
    k: usize,
    stride: usize,
    padding: usize,
    input: usize,
) -> LayerConfig {
    LayerConfig::new(name, n, m, rc, rc, k)
        .with_geometry(stride, padding)
        .with_input(input, input)
}

/// The built-in layer tables.
pub fn builtin(name: &str) -> Result<NetworkDef, ZooError> {
    let layers = match name.to_ascii_lowercase().as_str() {
        "alexnet" => vec![
            layer("c1", 3, 96, 55, 11, 4, 0, 227),
            layer("c2", 96, 256, 27, 5, 1, 2, 27),
            layer("c3", 256, 384, 13, 3, 1, 1, 13),
            layer("c4", 384, 384, 13, 3, 1, 1, 13),
            layer("c5", 384, 256, 13, 3, 1, 1, 13),
        ],
        "vgg16" => {
            let table: [(usize, usize, usize); 13] = [
                (3, 64, 224),
                (64, 64, 224),
                (64, 128, 112),
                (128, 128, 112),
                (128, 256, 56),
                (256, 256, 56),
                (256, 256, 56),
                (256, 512, 28),
                (512, 512, 28),
                (512, 512, 28),
                (512, 512, 14),
                (512, 512, 14),
                (512, 512, 14),
            ];
            table.iter()
                .enumerate()
                .map(|(i, &(n, m, rc))| layer(&format!("c{}", i + 1), n, m, rc, 3, 1, 1, rc))
                .collect()
        }
        "resnet18" => {
            let mut l = vec![layer("c1", 3, 64, 112, 7, 2, 3, 224)];
            // four stages of four 3x3 layers; each stage halves the map and
            // doubles the channels through its first (strided) layer
            let stages: [(usize, usize, usize); 4] =
                [(64, 64, 56), (64, 128, 28), (128, 256, 14), (256, 512, 7)];
            let mut idx = 2;
            for (stage, &(n_in, ch, rc)) in stages.iter().enumerate() {
                for i in 0..4 {
                    let (n, stride, input) = if i == 0 && stage > 0 {
                        (n_in, 2, rc * 2)
                    } else if i == 0 {
                        (n_in, 1, rc)
                    } else {
                        (ch, 1, rc)
                    };
                    l.push(layer(&format!("c{idx}"), n, ch, rc, 3, stride, 1, input));
                    idx += 1;
                }
            }
            l
        }
        other => return Err(ZooError::UnknownNetwork(other.to_string())),
    };
    let net = NetworkDef {
        name: name.to_ascii_lowercase(),
        layers,
    };
    debug_assert!(net.validate().is_ok());
    Ok(net)
}

/// Hardware section of a configuration file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HardwareSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dslr: Option<HwProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<HwProfile>,
}

/// Top-level configuration file: a network, optional tile geometry and
/// optional hardware profiles. Omitted tile fields take the defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigFile {
    pub network: NetworkDef,
    #[serde(default)]
    pub tile: TileConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardware: Option<HardwareSection>,
}

/// A fully loaded and validated configuration.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub network: NetworkDef,
    pub tile: TileConfig,
    pub dslr_profile: HwProfile,
    pub baseline_profile: HwProfile,
    pub warnings: Vec<String>,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, ZooError> {
    let text = std::fs::read_to_string(path).map_err(|source| ZooError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ConfigFile = serde_json::from_str(&text).map_err(|source| ZooError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    let warnings = file.network.validate()?;
    file.tile.validate()?;
    let hardware = file.hardware.unwrap_or_default();
    let dslr_profile = hardware.dslr.unwrap_or_else(HwProfile::dslr_default);
    let baseline_profile = hardware.baseline.unwrap_or_else(HwProfile::baseline_default);
    dslr_profile.validate()?;
    baseline_profile.validate()?;
    Ok(LoadedConfig {
        network: file.network,
        tile: file.tile,
        dslr_profile,
        baseline_profile,
        warnings,
    })
}

/// Serialize a network (with tile and profiles) as a configuration file.
pub fn emit_config(network: &NetworkDef, tile: &TileConfig) -> String {
    let file = ConfigFile {
        network: network.clone(),
        tile: tile.clone(),
        hardware: Some(HardwareSection {
            dslr: Some(HwProfile::dslr_default()),
            baseline: Some(HwProfile::baseline_default()),
        }),
    };
    serde_json::to_string_pretty(&file).expect("config serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tables_match_published_dims() {
        let alex = builtin("alexnet").unwrap();
        assert_eq!(alex.layers.len(), 5);
        assert_eq!(
            alex.layers.iter().map(|l| l.k).collect::<Vec<_>>(),
            [11, 5, 3, 3, 3]
        );
        assert_eq!(
            alex.layers.iter().map(|l| l.m).collect::<Vec<_>>(),
            [96, 256, 384, 384, 256]
        );
        assert_eq!(
            alex.layers.iter().map(|l| l.r).collect::<Vec<_>>(),
            [55, 27, 13, 13, 13]
        );
        assert_eq!(
            alex.layers.iter().map(|l| l.n).collect::<Vec<_>>(),
            [3, 96, 256, 384, 384]
        );

        let vgg = builtin("vgg16").unwrap();
        assert_eq!(vgg.layers.len(), 13);
        assert!(vgg.layers.iter().all(|l| l.k == 3));
        assert_eq!(
            vgg.layers.iter().map(|l| l.m).collect::<Vec<_>>(),
            [64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512]
        );
        assert_eq!(
            vgg.layers.iter().map(|l| l.r).collect::<Vec<_>>(),
            [224, 224, 112, 112, 56, 56, 56, 28, 28, 28, 14, 14, 14]
        );

        let resnet = builtin("resnet18").unwrap();
        assert_eq!(resnet.layers.len(), 17);
        assert_eq!(resnet.layers[0].k, 7);
        assert_eq!(resnet.layers[0].m, 64);
        assert_eq!(resnet.layers[0].r, 112);
        assert!(resnet.layers[1..].iter().all(|l| l.k == 3));
        assert_eq!(
            resnet.layers.iter().map(|l| l.r).collect::<Vec<_>>(),
            [112, 56, 56, 56, 56, 28, 28, 28, 28, 14, 14, 14, 14, 7, 7, 7, 7]
        );
        assert_eq!(
            resnet.layers.iter().map(|l| l.m).collect::<Vec<_>>(),
            [64, 64, 64, 64, 64, 128, 128, 128, 128, 256, 256, 256, 256, 512, 512, 512, 512]
        );
    }

    #[test]
    fn builtin_chains_cleanly() {
        for name in ["alexnet", "vgg16", "resnet18"] {
            let net = builtin(name).unwrap();
            assert!(net.validate().unwrap().is_empty(), "{name} chain warnings");
        }
    }

    #[test]
    fn unknown_network_rejected() {
        assert!(matches!(builtin("lenet"), Err(ZooError::UnknownNetwork(_))));
    }

    #[test]
    fn config_roundtrip() {
        let net = builtin("alexnet").unwrap();
        let tile = TileConfig::default();
        let text = emit_config(&net, &tile);
        let dir = std::env::temp_dir().join("dslr-zoo-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("alexnet.json");
        std::fs::write(&path, &text).unwrap();
        let loaded = load_config(&path).unwrap();
        assert_eq!(loaded.network, net);
        assert_eq!(loaded.tile, tile);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = std::env::temp_dir().join("dslr-zoo-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("minimal.json");
        std::fs::write(
            &path,
            r#"{"network": {"name": "tiny", "layers": [{"name": "c1", "n": 16, "m": 8, "r": 8, "c": 8, "k": 3}]}}"#,
        )
        .unwrap();
        let loaded = load_config(&path).unwrap();
        assert_eq!(loaded.tile, TileConfig::default());
        assert_eq!(loaded.network.layers[0].stride, 1);
        assert_eq!(loaded.dslr_profile, HwProfile::dslr_default());
    }

    #[test]
    fn invalid_tile_rejected_with_diagnostics() {
        let dir = std::env::temp_dir().join("dslr-zoo-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("badtile.json");
        std::fs::write(
            &path,
            r#"{"network": {"name": "tiny", "layers": [{"name": "c1", "n": 16, "m": 8, "r": 8, "c": 8, "k": 3}]},
               "tile": {"t_r": 4}}"#,
        )
        .unwrap();
        let err = load_config(&path).unwrap_err();
        assert!(err.to_string().contains("pe_spatial"), "{err}");
    }

    #[test]
    fn parse_error_carries_position() {
        let dir = std::env::temp_dir().join("dslr-zoo-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("broken.json");
        std::fs::write(&path, "{ not json").unwrap();
        let err = load_config(&path).unwrap_err();
        assert!(matches!(err, ZooError::Parse { .. }));
        assert!(err.to_string().contains("line"), "{err}");
    }
}
