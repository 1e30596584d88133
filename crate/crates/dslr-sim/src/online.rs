//! Cycle-stepped online (left-to-right, MSDF) arithmetic units.
//!
//! Three state machines live here: the radix-2 serial-parallel multiplier,
//! the radix-2 online adder, and digit-pipelined reduction trees built from
//! adders. Each consumes one digit per step and, after its online delay,
//! emits one digit per step. Values are exact at every point.

use crate::dyadic::Dyadic;
use crate::sd::{DigitStream, Fixed, SignedDigit};
use thiserror::Error;

/// Online delay of the serial-parallel multiplier.
pub const DELTA_MULT: u32 = 2;
/// Online delay of the online adder.
pub const DELTA_ADD: u32 = 2;

/// Fractional bits kept in the residual estimate fed to [`selm`].
///
/// Three bits keep the residual within 5/8 in steady state, which is what
/// makes the (7/8)*2^-j prefix-error bound hold at every step; a two-bit
/// estimate lets the residual reach 3/4 and breaks the bound on a handful
/// of operand pairs.
pub const SELM_FRAC_BITS: u32 = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OnlineError {
    #[error("unit stepped after finalization")]
    Finalized,
    #[error("reduction over an empty input list")]
    EmptyReduction,
}

/// Output-digit selection from a truncated residual estimate: +1 at or
/// above 1/2, -1 at or below -1/2, 0 between.
pub fn selm(v_hat: Dyadic) -> SignedDigit {
    let half = Dyadic::from_scaled(1, 1);
    if v_hat >= half {
        SignedDigit::PLUS_ONE
    } else if v_hat <= -half {
        SignedDigit::MINUS_ONE
    } else {
        SignedDigit::ZERO
    }
}

/// Radix-2 left-to-right serial-parallel multiplier.
///
/// The parallel operand `X` is a fixed-point fraction; the other operand
/// arrives one signed digit per step, most significant first. Two
/// initialization steps absorb digits without output; from the third step
/// the recurrence `v = 2w + (X * y) * 2^-2` emits one product digit per
/// step, selected by [`selm`] on the estimate of `v`.
#[derive(Clone, Debug)]
pub struct OnlineMultiplier {
    x: Dyadic,
    residual: Dyadic,
    step_idx: u32,
    finished: bool,
}

impl OnlineMultiplier {
    pub fn new(x: Fixed) -> Self {
        OnlineMultiplier {
            x: x.value(),
            residual: Dyadic::ZERO,
            step_idx: 0,
            finished: false,
        }
    }

    pub fn from_value(x: Dyadic) -> Self {
        OnlineMultiplier {
            x,
            residual: Dyadic::ZERO,
            step_idx: 0,
            finished: false,
        }
    }

    /// Consume one serial digit; emits `Some` from step `DELTA_MULT + 1`.
    pub fn step(&mut self, y: SignedDigit) -> Result<Option<SignedDigit>, OnlineError> {
        if self.finished {
            return Err(OnlineError::Finalized);
        }
        self.step_idx += 1;
        let term = (self.x * Dyadic::from_int(y.value() as i128)).mul_pow2(-2);
        let v = self.residual.mul_pow2(1) + term;
        if self.step_idx <= DELTA_MULT {
            self.residual = v;
            return Ok(None);
        }
        let p = selm(v.floor_to_frac_bits(SELM_FRAC_BITS));
        self.residual = v - Dyadic::from_int(p.value() as i128);
        debug_assert!(
            self.residual.abs() <= Dyadic::from_scaled(7, 3),
            "residual bound violated: {:?}",
            self.residual
        );
        Ok(Some(p))
    }

    /// Marks the unit drained; stepping afterwards is an error.
    pub fn finalize(&mut self) {
        self.finished = true;
    }

    pub fn residual(&self) -> Dyadic {
        self.residual
    }

    pub fn steps_taken(&self) -> u32 {
        self.step_idx
    }
}

/// Drive a full multiplication: all serial digits, then zero flushing until
/// the residual drains. The emitted stream carries the serial operand's
/// scale and its value equals `X * value(y)` exactly.
pub fn multiply(x: Fixed, y: &DigitStream) -> DigitStream {
    let mut unit = OnlineMultiplier::new(x);
    let mut out = DigitStream::new(Vec::new(), y.scale_exp());
    let total = 2 * y.len() as u32 + x.width() + 4;
    for s in 1..=total as usize {
        let d = y.digit_or_zero(s);
        if let Some(p) = unit.step(d).expect("not finalized") {
            out.push(p);
        }
    }
    debug_assert!(unit.residual().is_zero());
    unit.finalize();
    out
}

/// Radix-2 online adder: two rows of full adders over the (plus, minus)
/// digit encodings, delay 2.
///
/// Using `-b = (1-b) - 1`, the digit sum decomposes per position as
/// `x + y = 2g + h - 1 - x_minus` with `(g, h)` a full-adder output of
/// `(x_plus, y_plus, !y_minus)`; a second full adder combines
/// `(h, !x_minus, g_next)` into `(e, f)` and the output digit is
/// `f + e_next - 1`, always in {-1, 0, 1}. The first emitted digit is the
/// boundary digit `g_1 + e_1 - 1`; the output stream therefore carries the
/// inputs' scale plus one and conserves the exact sum for every signed-digit
/// input pair.
#[derive(Clone, Debug, Default)]
pub struct OnlineAdder {
    step_idx: u32,
    h_prev: bool,
    xminus_prev: bool,
    g_first: bool,
    f_prev: bool,
    pending: Option<SignedDigit>,
}

impl OnlineAdder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Consume one aligned digit pair; emits `Some` from step
    /// `DELTA_ADD + 1`.
    pub fn step(&mut self, x: SignedDigit, y: SignedDigit) -> Option<SignedDigit> {
        self.step_idx += 1;
        let out = self.pending.take();

        // row 1: x+ + y+ + !y-
        let s1 = x.plus_bit() as u8 + y.plus_bit() as u8 + !y.minus_bit() as u8;
        let (g, h) = (s1 >= 2, s1 & 1 == 1);

        if self.step_idx == 1 {
            self.g_first = g;
        } else {
            // row 2 for the previous position: h + !x- + g
            let s2 = self.h_prev as u8 + !self.xminus_prev as u8 + g as u8;
            let (e, f) = (s2 >= 2, s2 & 1 == 1);
            let z = if self.step_idx == 2 {
                self.g_first as i8 + e as i8 - 1
            } else {
                self.f_prev as i8 + e as i8 - 1
            };
            self.pending = Some(SignedDigit::from_value(z).expect("two-row sum digit"));
            self.f_prev = f;
        }
        self.h_prev = h;
        self.xminus_prev = x.minus_bit();
        out
    }

    pub fn steps_taken(&self) -> u32 {
        self.step_idx
    }
}

/// Add two aligned streams. Inputs are brought to a common scale; the
/// output stream has that scale plus one and its value is exactly the sum.
pub fn add_streams(a: &DigitStream, b: &DigitStream) -> DigitStream {
    let scale = a.scale_exp().max(b.scale_exp());
    let (a, b) = (a.rescaled(scale), b.rescaled(scale));
    let len = a.len().max(b.len());
    let mut adder = OnlineAdder::new();
    let mut out = DigitStream::new(Vec::new(), scale + 1);
    for s in 1..=len + 3 {
        let z = adder.step(a.digit_or_zero(s), b.digit_or_zero(s));
        if let Some(z) = z {
            out.push(z);
        }
    }
    out
}

/// A balanced binary tree of online adders over `m` synchronized digit
/// sources. Depth is `ceil(log2 m)`; missing leaves are zero streams. The
/// first output digit appears `DELTA_ADD * depth` steps after the first
/// input digits and the output scale grows by the depth.
pub struct ReductionTree {
    // levels[l] holds the adders at level l; level 0 consumes leaves
    levels: Vec<Vec<OnlineAdder>>,
    leaves: usize,
    started: bool,
}

impl ReductionTree {
    pub fn new(inputs: usize) -> Result<Self, OnlineError> {
        if inputs == 0 {
            return Err(OnlineError::EmptyReduction);
        }
        let depth = ceil_log2(inputs);
        let leaves = 1usize << depth;
        let levels = (0..depth)
            .map(|l| vec![OnlineAdder::new(); leaves >> (l + 1)])
            .collect();
        Ok(ReductionTree {
            levels,
            leaves,
            started: false,
        })
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }

    /// Feed one digit per input (None until a source has started emitting;
    /// all sources must start on the same step). Returns the root digit
    /// once the pipeline has filled.
    pub fn step(&mut self, digits: &[Option<SignedDigit>]) -> Option<SignedDigit> {
        debug_assert!(digits.len() <= self.leaves);
        if !self.started {
            if digits.iter().all(|d| d.is_none()) {
                return None;
            }
            debug_assert!(
                digits.iter().all(|d| d.is_some()),
                "tree inputs must start in lockstep"
            );
            self.started = true;
        }
        let mut level_in: Vec<SignedDigit> = (0..self.leaves)
            .map(|i| digits.get(i).copied().flatten().unwrap_or(SignedDigit::ZERO))
            .collect();
        for adders in &mut self.levels {
            // every adder of a level steps every cycle once its inputs flow
            let emitted: Vec<Option<SignedDigit>> = adders
                .iter_mut()
                .enumerate()
                .map(|(i, adder)| adder.step(level_in[2 * i], level_in[2 * i + 1]))
                .collect();
            if emitted[0].is_none() {
                debug_assert!(emitted.iter().all(|z| z.is_none()));
                return None;
            }
            level_in = emitted.into_iter().map(|z| z.unwrap()).collect();
        }
        Some(level_in[0])
    }
}

/// Reduce `m` streams to one: value is conserved exactly and the output
/// scale is the common input scale plus the tree depth.
pub fn tree_reduce(streams: &[DigitStream]) -> Result<DigitStream, OnlineError> {
    if streams.is_empty() {
        return Err(OnlineError::EmptyReduction);
    }
    if streams.len() == 1 {
        return Ok(streams[0].clone());
    }
    let scale = streams.iter().map(|s| s.scale_exp()).max().unwrap();
    let aligned: Vec<DigitStream> = streams.iter().map(|s| s.rescaled(scale)).collect();
    let len = aligned.iter().map(|s| s.len()).max().unwrap();
    let mut tree = ReductionTree::new(aligned.len())?;
    let depth = tree.depth();
    let want = len + depth as usize;
    let mut out = DigitStream::new(Vec::new(), scale + depth as i32);
    let mut step = 0usize;
    while out.len() < want {
        step += 1;
        debug_assert!(step < want + 4 * depth as usize + 8, "tree failed to drain");
        let feed: Vec<Option<SignedDigit>> =
            aligned.iter().map(|s| Some(s.digit_or_zero(step))).collect();
        if let Some(z) = tree.step(&feed) {
            out.push(z);
        }
    }
    Ok(out)
}

pub(crate) fn ceil_log2(n: usize) -> u32 {
    debug_assert!(n >= 1);
    (n as u64).next_power_of_two().trailing_zeros()
}
