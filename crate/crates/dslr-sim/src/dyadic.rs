//! Exact dyadic rationals: values of the form `num * 2^exp`.
//!
//! Every value that moves through the signed-digit datapath is a dyadic
//! rational, so this is all the exact arithmetic the crate needs. No
//! floating point is involved anywhere in value semantics; floats only
//! appear at the reporting layer.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// An exact dyadic rational `num * 2^exp`, kept normalized so that `num`
/// is odd (or zero with `exp == 0`).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i128,
    exp: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: i128, exp: i32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let tz = num.trailing_zeros() as i32;
        Dyadic {
            num: num >> tz,
            exp: exp + tz,
        }
    }

    pub fn from_int(n: i128) -> Self {
        Self::new(n, 0)
    }

    /// `num / 2^frac_bits`.
    pub fn from_scaled(num: i128, frac_bits: u32) -> Self {
        Self::new(num, -(frac_bits as i32))
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    pub fn exp(&self) -> i32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn signum(&self) -> i32 {
        self.num.signum() as i32
    }

    pub fn abs(self) -> Self {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    /// Multiply by `2^k`.
    pub fn mul_pow2(self, k: i32) -> Self {
        if self.num == 0 {
            return self;
        }
        Dyadic {
            num: self.num,
            exp: self.exp + k,
        }
    }

    /// Largest multiple of `2^-frac_bits` that is `<= self` (floor, toward
    /// negative infinity).
    pub fn floor_to_frac_bits(self, frac_bits: u32) -> Self {
        let t = frac_bits as i32;
        if self.exp + t >= 0 {
            return self;
        }
        let shift = (-(self.exp + t)) as u32;
        debug_assert!(shift < 127);
        // arithmetic shift right floors toward negative infinity
        Self::new(self.num >> shift, -t)
    }

    /// Exact `self * 2^frac_bits` as an integer, if it is one.
    pub fn to_scaled_int(self, frac_bits: u32) -> Option<i128> {
        if self.num == 0 {
            return Some(0);
        }
        let e = self.exp + frac_bits as i32;
        if e < 0 {
            return None;
        }
        Some(shift_up(self.num, e))
    }

    /// Lossy conversion for reporting only.
    pub fn to_f64(self) -> f64 {
        self.num as f64 * (self.exp as f64).exp2()
    }
}

fn shift_up(num: i128, by: i32) -> i128 {
    debug_assert!((0..127).contains(&by), "dyadic shift out of range: {by}");
    num << by
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, other: Self) -> Self {
        if self.num == 0 {
            return other;
        }
        if other.num == 0 {
            return self;
        }
        let e = self.exp.min(other.exp);
        let a = shift_up(self.num, self.exp - e);
        let b = shift_up(other.num, other.exp - e);
        Self::new(a + b, e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;

    fn sub(self, other: Self) -> Self {
        self + (-other)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, other: Self) -> Self {
        Self::new(self.num * other.num, self.exp + other.exp)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Self {
        Dyadic {
            num: -self.num,
            exp: self.exp,
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        (*self - *other).num.cmp(&0)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.num, self.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exp {
            0 => write!(f, "{}", self.num),
            e if e > 0 => write!(f, "{}*2^{}", self.num, e),
            e => write!(f, "{}/2^{}", self.num, -e),
        }
    }
}
