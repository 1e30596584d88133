//! Digit-accurate simulation of one accelerator tile: a weight-stationary
//! array of sum-of-products engines, the control schedule that sequences
//! tile passes, and the nested-loop golden model it is checked against.
//!
//! Functional results and cycle accounting are deliberately decoupled: the
//! engines run their digit pipelines long enough to drain exact values,
//! while the per-pass cycle count follows the hardware's output precision
//! of `p_i + ceil(log2 k^2) + ceil(log2 t_n)` digits after pipeline fill.

use crate::config::{ConfigError, LayerConfig, TileConfig};
use crate::dyadic::Dyadic;
use crate::online::{ceil_log2, OnlineMultiplier, ReductionTree, DELTA_ADD, DELTA_MULT};
use crate::sd::{DigitStream, Fixed, SignedDigit};
use crate::tensor::{TensorFx, TensorError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("tensor shape mismatch: expected {expect}, got {got:?}")]
    ShapeMismatch { expect: String, got: Vec<usize> },
    #[error("tensor width {got} does not match the configured input precision {want}")]
    WidthMismatch { got: u32, want: u32 },
    #[error("the digit-stepped units have online delay 2; configured delta_mult={0}, delta_add={1}")]
    UnsupportedTiming(u32, u32),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// One pass of the control schedule: a spatial block convolved against one
/// output-channel tile and one input-channel tile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilePass {
    pub spatial_idx: usize,
    pub m_idx: usize,
    pub n_idx: usize,
    pub events: Vec<BufferEvent>,
}

/// Buffer traffic attached to a pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BufferEvent {
    /// kernel buffer write for output channels `m0..m1` x input `n0..n1`
    LoadWeights {
        m0: usize,
        m1: usize,
        n0: usize,
        n1: usize,
    },
    /// input buffer write for output pixels `pixel0..pixel1`, channels `n0..n1`
    LoadWindows {
        pixel0: usize,
        pixel1: usize,
        n0: usize,
        n1: usize,
    },
    /// output buffer update; `last` marks the final input-channel tile
    StoreOutputs {
        pixel0: usize,
        pixel1: usize,
        m0: usize,
        m1: usize,
        last: bool,
    },
}

/// The ordered tile passes for a layer: spatial blocks outermost, then
/// output-channel tiles, then input-channel tiles.
pub fn control_schedule(layer: &LayerConfig, tile: &TileConfig) -> Vec<TilePass> {
    let pixels = layer.r * layer.c;
    let block = tile.t_r * tile.t_c;
    let spatial_tiles = pixels.div_ceil(block);
    let m_tiles = layer.m.div_ceil(tile.t_m);
    let n_tiles = layer.n.div_ceil(tile.t_n);
    let mut passes = Vec::with_capacity(spatial_tiles * m_tiles * n_tiles);
    for s in 0..spatial_tiles {
        let pixel0 = s * block;
        let pixel1 = (pixel0 + block).min(pixels);
        for mi in 0..m_tiles {
            let m0 = mi * tile.t_m;
            let m1 = (m0 + tile.t_m).min(layer.m);
            for ni in 0..n_tiles {
                let n0 = ni * tile.t_n;
                let n1 = (n0 + tile.t_n).min(layer.n);
                passes.push(TilePass {
                    spatial_idx: s,
                    m_idx: mi,
                    n_idx: ni,
                    events: vec![
                        BufferEvent::LoadWeights { m0, m1, n0, n1 },
                        BufferEvent::LoadWindows {
                            pixel0,
                            pixel1,
                            n0,
                            n1,
                        },
                        BufferEvent::StoreOutputs {
                            pixel0,
                            pixel1,
                            m0,
                            m1,
                            last: ni == n_tiles - 1,
                        },
                    ],
                });
            }
        }
    }
    passes
}

/// Output tensor convention for a layer at input precision `p_i`:
/// a shared scale of `ceil(log2(n * k^2)) + 1` keeps every exact
/// accumulated sum strictly inside [-1, 1), and the width carries all
/// `2 * (p_i - 1)` product fraction bits.
pub fn output_convention(layer: &LayerConfig, p_i: u32) -> (u32, i32) {
    let scale = ceil_log2(layer.n * layer.k * layer.k) as i32 + 1;
    let width = scale as u32 + 2 * (p_i - 1) + 1;
    (width, scale)
}

/// One sum-of-products engine: `t_n * k^2` serial-parallel multipliers,
/// a window reduction tree per channel, and a channel reduction tree.
struct SopEngine {
    mults: Vec<OnlineMultiplier>,
    serial: Vec<DigitStream>,
    window_trees: Vec<ReductionTree>,
    channel_tree: ReductionTree,
    k2: usize,
    t_n: usize,
    corrupt_digit: bool,
}

struct EngineRun {
    value: Dyadic,
    first_digit_step: u32,
    accounted_cycles: u32,
}

impl SopEngine {
    /// `weights[lane]` parallel operands and `acts[lane]` serial operands,
    /// lane = channel * k2 + window position.
    fn new(
        weights: &[Fixed],
        acts: &[Fixed],
        k2: usize,
        t_n: usize,
        corrupt_digit: bool,
    ) -> Self {
        debug_assert_eq!(weights.len(), k2 * t_n);
        debug_assert_eq!(acts.len(), k2 * t_n);
        SopEngine {
            mults: weights.iter().map(|&w| OnlineMultiplier::new(w)).collect(),
            serial: acts.iter().map(|&a| a.to_serial_stream()).collect(),
            window_trees: (0..t_n)
                .map(|_| ReductionTree::new(k2).expect("k2 >= 1"))
                .collect(),
            channel_tree: ReductionTree::new(t_n).expect("t_n >= 1"),
            k2,
            t_n,
            corrupt_digit,
        }
    }

    /// Step the whole pipeline until the exact sum has drained.
    /// `accounted_digits` is the hardware output precision used for cycle
    /// accounting; the run continues past it for exactness.
    fn run(&mut self, p_i: u32, accounted_digits: u32) -> EngineRun {
        let dw = ceil_log2(self.k2.max(1));
        let dc = ceil_log2(self.t_n.max(1));
        let exact_digits = (2 * p_i - 1) + dw + dc;
        let scale = 1 + (dw + dc) as i32;
        let mut out = DigitStream::new(Vec::with_capacity(exact_digits as usize), scale);
        let mut first_digit_step = 0u32;
        let mut accounted_cycles = 0u32;
        let mut products: Vec<Option<SignedDigit>> = vec![None; self.mults.len()];
        let mut wouts: Vec<Option<SignedDigit>> = vec![None; self.t_n];
        let mut step = 0u32;
        while (out.len() as u32) < exact_digits {
            step += 1;
            debug_assert!(step < 4 * exact_digits + 32, "engine failed to drain");
            for (i, m) in self.mults.iter_mut().enumerate() {
                products[i] = m
                    .step(self.serial[i].digit_or_zero(step as usize))
                    .expect("engine never steps a finalized unit");
            }
            for (ch, tree) in self.window_trees.iter_mut().enumerate() {
                wouts[ch] = tree.step(&products[ch * self.k2..(ch + 1) * self.k2]);
            }
            if let Some(mut z) = self.channel_tree.step(&wouts) {
                if out.is_empty() {
                    first_digit_step = step;
                }
                // fault hook: flip one mid-stream digit; low enough in
                // significance that the result stays in range but wrong
                if self.corrupt_digit && out.len() + 1 == p_i as usize {
                    z = if z == SignedDigit::ZERO {
                        SignedDigit::PLUS_ONE
                    } else {
                        z.negated()
                    };
                }
                out.push(z);
                if out.len() as u32 == accounted_digits {
                    accounted_cycles = step;
                }
            }
        }
        EngineRun {
            value: out.value(),
            first_digit_step,
            accounted_cycles,
        }
    }
}

/// First output digit of a `k2`-window, `t_n`-channel engine, counting the
/// step its first serial digits enter as step 1.
pub fn sop_first_digit_step(k2: usize, t_n: usize) -> u32 {
    DELTA_MULT + DELTA_ADD * (ceil_log2(k2) + ceil_log2(t_n)) + 1
}

/// Build one engine with seeded random operands, step it, and report the
/// step its first output digit actually appeared on.
pub fn measured_sop_first_digit_step(k2: usize, t_n: usize, p_i: u32, seed: u64) -> u32 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let hi = 1i64 << (p_i - 1);
    let rand_fx = |rng: &mut rand_chacha::ChaCha8Rng| {
        Fixed::new(rng.gen_range(-hi..hi), p_i).expect("in range")
    };
    let weights: Vec<Fixed> = (0..k2 * t_n).map(|_| rand_fx(&mut rng)).collect();
    let acts: Vec<Fixed> = (0..k2 * t_n).map(|_| rand_fx(&mut rng)).collect();
    let mut engine = SopEngine::new(&weights, &acts, k2, t_n, false);
    let run = engine.run(p_i, p_i);
    debug_assert_eq!(
        run.value,
        weights
            .iter()
            .zip(&acts)
            .fold(Dyadic::ZERO, |acc, (w, a)| acc + w.value() * a.value())
    );
    run.first_digit_step
}

/// Options for a simulation run.
#[derive(Clone, Debug, Default)]
pub struct SimOptions {
    /// worker threads; `None` resolves from `DSLR_SIM_THREADS` and the
    /// machine's parallelism
    pub threads: Option<usize>,
    /// test hook: corrupt one reduction-tree digit in every engine
    pub inject_fault: bool,
}

/// Simulation result: exact outputs plus measured cycle counts.
#[derive(Clone, Debug)]
pub struct SimOutput {
    pub outputs: TensorFx,
    pub measured_cycles: u64,
    pub per_pass_cycles: u64,
    pub passes: u64,
}

pub fn resolve_threads() -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("DSLR_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(n) if n >= 1 => n.min(hw),
        _ => hw,
    }
}

/// Digit-accurate layer execution. Outputs are exact (bit-identical to
/// [`reference_conv`]); measured cycles follow the hardware output
/// precision per pass.
pub fn run_layer(
    layer: &LayerConfig,
    tile: &TileConfig,
    inputs: &TensorFx,
    weights: &TensorFx,
) -> Result<SimOutput, SimError> {
    run_layer_opts(layer, tile, inputs, weights, &SimOptions::default())
}

pub fn run_layer_opts(
    layer: &LayerConfig,
    tile: &TileConfig,
    inputs: &TensorFx,
    weights: &TensorFx,
    opts: &SimOptions,
) -> Result<SimOutput, SimError> {
    layer.validate()?;
    tile.validate()?;
    if tile.delta_mult != DELTA_MULT || tile.delta_add != DELTA_ADD {
        return Err(SimError::UnsupportedTiming(tile.delta_mult, tile.delta_add));
    }
    check_shapes(layer, tile, inputs, weights)?;

    let k2 = layer.k * layer.k;
    let dw = ceil_log2(k2);
    let dc = ceil_log2(tile.t_n);
    let accounted_digits = tile.p_i + dw + dc;
    let passes = control_schedule(layer, tile);
    let threads = opts.threads.unwrap_or_else(resolve_threads).max(1);

    // one pass yields exact output contributions and its cycle count
    type PassResult = (Vec<(usize, i128)>, u64);

    let run_pass = |pass: &TilePass| -> PassResult {
        let mut contributions = Vec::new();
        let mut cycles = 0u64;
        let block = tile.t_r * tile.t_c;
        let pixel0 = pass.spatial_idx * block;
        let pixel1 = (pixel0 + block).min(layer.r * layer.c);
        let m0 = pass.m_idx * tile.t_m;
        let m1 = (m0 + tile.t_m).min(layer.m);
        let n0 = pass.n_idx * tile.t_n;
        let mut acts = vec![Fixed::zero(tile.p_i); tile.t_n * k2];
        let mut lane_weights = vec![Fixed::zero(tile.p_i); tile.t_n * k2];
        let mut pass_cycles_recorded = false;
        for pixel in pixel0..pixel1 {
            let (r, c) = (pixel / layer.c, pixel % layer.c);
            fill_window(layer, tile, inputs, r, c, n0, &mut acts);
            for m in m0..m1 {
                fill_weights(layer, tile, weights, m, n0, &mut lane_weights);
                let mut engine =
                    SopEngine::new(&lane_weights, &acts, k2, tile.t_n, opts.inject_fault);
                let run = engine.run(tile.p_i, accounted_digits);
                debug_assert_eq!(run.first_digit_step, sop_first_digit_step(k2, tile.t_n));
                if !pass_cycles_recorded {
                    cycles = run.accounted_cycles as u64;
                    pass_cycles_recorded = true;
                }
                debug_assert_eq!(cycles, run.accounted_cycles as u64);
                let num = run
                    .value
                    .to_scaled_int(2 * (tile.p_i - 1))
                    .expect("engine sums sit on the product grid");
                contributions.push((pixel * layer.m + m, num));
            }
        }
        debug_assert!(pass_cycles_recorded);
        (contributions, cycles)
    };

    // Passes are independent; exact accumulation is order-insensitive, so
    // results are bit-identical for any thread count.
    let results: Vec<PassResult> = if threads <= 1 || passes.len() <= 1 {
        passes.iter().map(run_pass).collect()
    } else {
        let mut results: Vec<Option<PassResult>> = vec![None; passes.len()];
        let chunk = passes.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = passes
                .chunks(chunk)
                .zip(results.chunks_mut(chunk))
                .map(|(ps, slot)| {
                    scope.spawn(move || {
                        for (p, s) in ps.iter().zip(slot.iter_mut()) {
                            *s = Some(run_pass(p));
                        }
                    })
                })
                .collect();
            for h in handles {
                h.join().expect("simulation worker panicked");
            }
        });
        results.into_iter().map(|r| r.expect("all passes ran")).collect()
    };

    let mut acc = vec![0i128; layer.m * layer.r * layer.c];
    let mut measured_cycles = 0u64;
    let mut per_pass_cycles = 0u64;
    for (contributions, cycles) in results {
        measured_cycles += cycles;
        per_pass_cycles = cycles;
        for (flat, num) in contributions {
            let (pixel, m) = (flat / layer.m, flat % layer.m);
            acc[(m * layer.r * layer.c) + pixel] += num;
        }
    }

    let outputs = materialize(layer, tile.p_i, &acc)?;
    Ok(SimOutput {
        outputs,
        measured_cycles,
        per_pass_cycles,
        passes: passes.len() as u64,
    })
}

/// Direct nested-loop convolution in exact scaled-integer arithmetic; the
/// simulator's golden model. Produces the same output convention.
pub fn reference_conv(
    layer: &LayerConfig,
    tile: &TileConfig,
    inputs: &TensorFx,
    weights: &TensorFx,
) -> Result<TensorFx, SimError> {
    layer.validate()?;
    check_shapes(layer, tile, inputs, weights)?;
    let (h_in, w_in) = layer.input_size();
    let mut acc = vec![0i128; layer.m * layer.r * layer.c];
    for m in 0..layer.m {
        for r in 0..layer.r {
            for c in 0..layer.c {
                let mut sum = 0i128;
                for n in 0..layer.n {
                    for ky in 0..layer.k {
                        for kx in 0..layer.k {
                            let y = (r * layer.stride + ky) as isize - layer.padding as isize;
                            let x = (c * layer.stride + kx) as isize - layer.padding as isize;
                            if y < 0 || x < 0 || y as usize >= h_in || x as usize >= w_in {
                                continue;
                            }
                            let a = inputs.get(&[n, y as usize, x as usize]) as i128;
                            let w = weights.get(&[m, n, ky, kx]) as i128;
                            sum += a * w;
                        }
                    }
                }
                acc[(m * layer.r + r) * layer.c + c] = sum;
            }
        }
    }
    materialize(layer, tile.p_i, &acc)
}

/// Multiplier-step estimate for the resource guard of the CLI.
pub fn estimated_mult_steps(layer: &LayerConfig, tile: &TileConfig) -> u128 {
    let k2 = (layer.k * layer.k) as u128;
    let lanes = k2 * tile.t_n as u128;
    let depth = (ceil_log2(layer.k * layer.k) + ceil_log2(tile.t_n)) as u128;
    let steps = 2 * tile.p_i as u128 + 3 * depth + 8;
    let passes = control_schedule(layer, tile).len() as u128;
    let engines_per_pass = (tile.t_r * tile.t_c * tile.t_m) as u128;
    passes * engines_per_pass * lanes * steps
}

fn check_shapes(
    layer: &LayerConfig,
    tile: &TileConfig,
    inputs: &TensorFx,
    weights: &TensorFx,
) -> Result<(), SimError> {
    let (h_in, w_in) = layer.input_size();
    if inputs.dims() != [layer.n, h_in, w_in] {
        return Err(SimError::ShapeMismatch {
            expect: format!("inputs [{}, {h_in}, {w_in}]", layer.n),
            got: inputs.dims().to_vec(),
        });
    }
    if weights.dims() != [layer.m, layer.n, layer.k, layer.k] {
        return Err(SimError::ShapeMismatch {
            expect: format!(
                "weights [{}, {}, {}, {}]",
                layer.m, layer.n, layer.k, layer.k
            ),
            got: weights.dims().to_vec(),
        });
    }
    for (t, what) in [(inputs, "inputs"), (weights, "weights")] {
        if t.width() != tile.p_i {
            let _ = what;
            return Err(SimError::WidthMismatch {
                got: t.width(),
                want: tile.p_i,
            });
        }
    }
    Ok(())
}

fn fill_window(
    layer: &LayerConfig,
    tile: &TileConfig,
    inputs: &TensorFx,
    r: usize,
    c: usize,
    n0: usize,
    acts: &mut [Fixed],
) {
    let (h_in, w_in) = layer.input_size();
    let k2 = layer.k * layer.k;
    for lane_n in 0..tile.t_n {
        let n = n0 + lane_n;
        for ky in 0..layer.k {
            for kx in 0..layer.k {
                let idx = lane_n * k2 + ky * layer.k + kx;
                let y = (r * layer.stride + ky) as isize - layer.padding as isize;
                let x = (c * layer.stride + kx) as isize - layer.padding as isize;
                acts[idx] = if n >= layer.n
                    || y < 0
                    || x < 0
                    || y as usize >= h_in
                    || x as usize >= w_in
                {
                    // padding and masked channel lanes stream zeros
                    Fixed::zero(tile.p_i)
                } else {
                    Fixed::new(inputs.get(&[n, y as usize, x as usize]), tile.p_i)
                        .expect("tensor invariant")
                };
            }
        }
    }
}

fn fill_weights(
    layer: &LayerConfig,
    tile: &TileConfig,
    weights: &TensorFx,
    m: usize,
    n0: usize,
    lane_weights: &mut [Fixed],
) {
    let k2 = layer.k * layer.k;
    for lane_n in 0..tile.t_n {
        let n = n0 + lane_n;
        for pos in 0..k2 {
            lane_weights[lane_n * k2 + pos] = if n >= layer.n {
                Fixed::zero(tile.p_i)
            } else {
                Fixed::new(
                    weights.get(&[m, n, pos / layer.k, pos % layer.k]),
                    tile.p_i,
                )
                .expect("tensor invariant")
            };
        }
    }
}

fn materialize(layer: &LayerConfig, p_i: u32, acc: &[i128]) -> Result<TensorFx, SimError> {
    let (width, scale) = output_convention(layer, p_i);
    let raw: Vec<i64> = acc.iter().map(|&v| v as i64).collect();
    let mut t = TensorFx::from_raw(&[layer.m, layer.r, layer.c], width, 0, raw)?;
    t.set_scale_exp(scale);
    Ok(t)
}
