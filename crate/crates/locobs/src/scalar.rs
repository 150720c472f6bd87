//! Scalar abstraction for probability values. The library computes with
//! exact rationals (`Rat`) throughout; the metric layer is generic so the
//! same code runs over `f64` where approximate values suffice.

use crate::Rat;
use num_bigint::BigInt;
use num_traits::{Num, Signed};

pub trait Scalar: Num + Signed + Clone + PartialOrd {
    fn from_ratio(num: u64, den: u64) -> Self;
}

impl Scalar for Rat {
    fn from_ratio(num: u64, den: u64) -> Self {
        Rat::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Scalar for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
}
