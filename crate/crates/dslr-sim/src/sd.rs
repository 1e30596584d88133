//! Radix-2 redundant signed-digit number representation.
//!
//! Values travel most-significant-digit-first as streams of digits in
//! {-1, 0, +1}, each encoded as a (plus, minus) bit pair. A stream carries
//! a scale exponent so that reduction stages can shift without widening the
//! digit set. All value computations are exact dyadic arithmetic.

use crate::dyadic::Dyadic;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SdError {
    #[error("the (plus, minus) = (1, 1) digit encoding is invalid")]
    BothBitsSet,
    #[error("digit value {0} outside {{-1, 0, 1}}")]
    DigitOutOfRange(i8),
    #[error("fixed-point width {0} unsupported (need 2..=62)")]
    BadWidth(u32),
    #[error("raw value {raw} does not fit width {width}")]
    RawOutOfRange { raw: i64, width: u32 },
    #[error("stream value {0} overflows the fixed-point range [-1, 1)")]
    Overflow(f64),
}

/// One radix-2 signed digit, encoded as a (plus, minus) bit pair with
/// numeric value `plus - minus`. The (1, 1) encoding is rejected.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SignedDigit {
    plus: bool,
    minus: bool,
}

impl SignedDigit {
    pub const ZERO: SignedDigit = SignedDigit {
        plus: false,
        minus: false,
    };
    pub const PLUS_ONE: SignedDigit = SignedDigit {
        plus: true,
        minus: false,
    };
    pub const MINUS_ONE: SignedDigit = SignedDigit {
        plus: false,
        minus: true,
    };

    pub fn from_bits(plus: bool, minus: bool) -> Result<Self, SdError> {
        if plus && minus {
            return Err(SdError::BothBitsSet);
        }
        Ok(SignedDigit { plus, minus })
    }

    pub fn from_value(v: i8) -> Result<Self, SdError> {
        match v {
            0 => Ok(Self::ZERO),
            1 => Ok(Self::PLUS_ONE),
            -1 => Ok(Self::MINUS_ONE),
            other => Err(SdError::DigitOutOfRange(other)),
        }
    }

    pub fn value(self) -> i8 {
        self.plus as i8 - self.minus as i8
    }

    pub fn plus_bit(self) -> bool {
        self.plus
    }

    pub fn minus_bit(self) -> bool {
        self.minus
    }

    pub fn negated(self) -> Self {
        SignedDigit {
            plus: self.minus,
            minus: self.plus,
        }
    }
}

/// An MSDF digit sequence with a scale exponent.
///
/// Digit `i` (1-based) has weight `2^-i`; the stream value is
/// `2^scale_exp * sum(d_i * 2^-i)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DigitStream {
    digits: Vec<SignedDigit>,
    scale_exp: i32,
}

impl DigitStream {
    pub fn new(digits: Vec<SignedDigit>, scale_exp: i32) -> Self {
        DigitStream { digits, scale_exp }
    }

    pub fn zero(len: usize, scale_exp: i32) -> Self {
        DigitStream {
            digits: vec![SignedDigit::ZERO; len],
            scale_exp,
        }
    }

    pub fn from_values(values: &[i8], scale_exp: i32) -> Result<Self, SdError> {
        let digits = values
            .iter()
            .map(|&v| SignedDigit::from_value(v))
            .collect::<Result<_, _>>()?;
        Ok(DigitStream { digits, scale_exp })
    }

    pub fn digits(&self) -> &[SignedDigit] {
        &self.digits
    }

    pub fn scale_exp(&self) -> i32 {
        self.scale_exp
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn push(&mut self, d: SignedDigit) {
        self.digits.push(d);
    }

    /// Digit at 1-based position `i`, zero beyond the end. This is the
    /// serial feeding convention: units drain on implicit zero padding.
    pub fn digit_or_zero(&self, i: usize) -> SignedDigit {
        debug_assert!(i >= 1);
        self.digits.get(i - 1).copied().unwrap_or(SignedDigit::ZERO)
    }

    /// Exact stream value `2^scale_exp * sum(d_i * 2^-i)`.
    pub fn value(&self) -> Dyadic {
        self.prefix_value(self.digits.len())
    }

    /// Exact value of the first `j` digits.
    pub fn prefix_value(&self, j: usize) -> Dyadic {
        let j = j.min(self.digits.len());
        let mut acc: i128 = 0;
        for d in &self.digits[..j] {
            acc = (acc << 1) + d.value() as i128;
        }
        Dyadic::new(acc, self.scale_exp - j as i32)
    }

    /// Same value re-expressed at a larger scale exponent by prepending
    /// zero digits.
    pub fn rescaled(&self, scale_exp: i32) -> Self {
        assert!(scale_exp >= self.scale_exp);
        let pad = (scale_exp - self.scale_exp) as usize;
        let mut digits = vec![SignedDigit::ZERO; pad];
        digits.extend_from_slice(&self.digits);
        DigitStream { digits, scale_exp }
    }
}

/// A two's-complement fraction: `value = raw / 2^(width-1)` in [-1, 1).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Fixed {
    raw: i64,
    width: u32,
}

impl Fixed {
    pub fn new(raw: i64, width: u32) -> Result<Self, SdError> {
        if !(2..=62).contains(&width) {
            return Err(SdError::BadWidth(width));
        }
        let hi = 1i64 << (width - 1);
        if raw < -hi || raw >= hi {
            return Err(SdError::RawOutOfRange { raw, width });
        }
        Ok(Fixed { raw, width })
    }

    pub fn zero(width: u32) -> Self {
        Fixed { raw: 0, width }
    }

    pub fn raw(self) -> i64 {
        self.raw
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn value(self) -> Dyadic {
        Dyadic::from_scaled(self.raw as i128, self.width - 1)
    }

    /// Truncate an exact value toward zero at `2^-(width-1)` granularity.
    /// Exact when the value is already a multiple of that granularity.
    /// The domain is the representable range [-1, 1).
    pub fn from_dyadic_trunc(v: Dyadic, width: u32) -> Result<Self, SdError> {
        if !(2..=62).contains(&width) {
            return Err(SdError::BadWidth(width));
        }
        if v >= Dyadic::ONE || v < -Dyadic::ONE {
            return Err(SdError::Overflow(v.to_f64()));
        }
        let frac = width - 1;
        let raw = match v.to_scaled_int(frac) {
            Some(n) => n,
            None => {
                // floor, then adjust negatives upward for truncation toward zero
                let floored = v.floor_to_frac_bits(frac);
                let mut n = floored.to_scaled_int(frac).expect("floored to grid");
                if v.signum() < 0 && floored != v {
                    n += 1;
                }
                n
            }
        };
        Ok(Fixed {
            raw: raw as i64,
            width,
        })
    }

    /// Sign-magnitude digitization: digit `i` is `sign(x)` times bit `i` of
    /// `|x|`, one digit per fractional position, `width` digits at scale 0.
    /// The single value -1 (minimum raw) needs the unit position and is
    /// emitted as [-1, 0, ...] at scale 1.
    pub fn to_stream(self) -> DigitStream {
        let w = self.width;
        let hi = 1i64 << (w - 1);
        if self.raw == -hi {
            let mut digits = vec![SignedDigit::ZERO; w as usize];
            digits[0] = SignedDigit::MINUS_ONE;
            return DigitStream::new(digits, 1);
        }
        let sign = if self.raw < 0 {
            SignedDigit::MINUS_ONE
        } else {
            SignedDigit::PLUS_ONE
        };
        let mag = self.raw.unsigned_abs();
        let mut digits = Vec::with_capacity(w as usize);
        for i in 1..=w {
            // bit i of |x| = |raw| / 2^(w-1) is bit (w-1-i) of |raw|
            let bit = if i < w {
                (mag >> (w - 1 - i)) & 1
            } else {
                0
            };
            digits.push(if bit == 1 { sign } else { SignedDigit::ZERO });
        }
        DigitStream::new(digits, 0)
    }

    /// Serial-operand digitization used by the datapath: the digits of
    /// `x / 2` at scale 1, `width` digits. Uniform over the entire
    /// two's-complement range including the minimum raw, so every lane of
    /// a tile streams with one shared scale.
    pub fn to_serial_stream(self) -> DigitStream {
        let w = self.width;
        let sign = if self.raw < 0 {
            SignedDigit::MINUS_ONE
        } else {
            SignedDigit::PLUS_ONE
        };
        let mag = self.raw.unsigned_abs();
        let mut digits = Vec::with_capacity(w as usize);
        for i in 1..=w {
            let bit = (mag >> (w - i)) & 1;
            digits.push(if bit == 1 { sign } else { SignedDigit::ZERO });
        }
        DigitStream::new(digits, 1)
    }
}

/// Exact stream evaluation (the defining sum).
pub fn stream_value(s: &DigitStream) -> Dyadic {
    s.value()
}

/// See [`Fixed::to_stream`].
pub fn fixed_to_stream(x: Fixed) -> DigitStream {
    x.to_stream()
}

/// Materialize a stream into a fixed-point word; truncation toward zero.
pub fn stream_to_fixed(s: &DigitStream, width: u32) -> Result<Fixed, SdError> {
    Fixed::from_dyadic_trunc(s.value(), width)
}
