//! Exact-arithmetic oracle for FP16 and BFloat16.
//!
//! Operands are decoded straight from their bit patterns into integers
//! scaled by `2^scale`, so sums and products are exact. The exact result is
//! rounded by searching the sorted table of every non-negative finite value
//! of the format, with the infinity pattern standing in as the next value
//! above the maximum. Nothing here calls into the library's rounding code.

#![allow(dead_code)]

use num::bigint::BigInt;
use num::{Signed, Zero};

pub struct Oracle {
    exp_bits: u32,
    mant_bits: u32,
    /// Exponent shift so that the smallest subnormal is an integer.
    scale: u32,
    /// `table[b]` is the value of pattern `b` for `b` in `0..=inf_bits`,
    /// scaled by `2^(2·scale)` so products fit as well.
    table: Vec<BigInt>,
}

impl Oracle {
    pub fn new(exp_bits: u32, mant_bits: u32) -> Self {
        let bias = (1i32 << (exp_bits - 1)) - 1;
        // smallest subnormal is 2^(1 - bias - mant_bits)
        let scale = (bias - 1 + mant_bits as i32) as u32;
        let inf_bits = ((1u32 << exp_bits) - 1) << mant_bits;
        let mut oracle = Oracle { exp_bits, mant_bits, scale, table: Vec::new() };
        oracle.table = (0..=inf_bits)
            .map(|b| {
                if b == inf_bits {
                    // 2^(emax + 1), the value the rounding step would reach
                    let emax = bias;
                    BigInt::from(1) << (emax + 1 + 2 * scale as i32) as usize
                } else {
                    oracle.scaled(b) << scale as usize
                }
            })
            .collect();
        oracle
    }

    pub fn fp16() -> Self {
        Oracle::new(5, 10)
    }

    pub fn bf16() -> Self {
        Oracle::new(8, 7)
    }

    fn sign_bit(&self) -> u32 {
        1 << (self.exp_bits + self.mant_bits)
    }

    fn inf_bits(&self) -> u32 {
        ((1u32 << self.exp_bits) - 1) << self.mant_bits
    }

    pub fn is_finite(&self, bits: u32) -> bool {
        bits & !self.sign_bit() < self.inf_bits()
    }

    /// Value times `2^scale`, exact, for a finite pattern.
    fn scaled(&self, bits: u32) -> BigInt {
        let mag = bits & !self.sign_bit();
        let field = mag & ((1 << self.mant_bits) - 1);
        let biased = mag >> self.mant_bits;
        let v = if biased == 0 {
            BigInt::from(field)
        } else {
            BigInt::from(field | (1 << self.mant_bits)) << (biased - 1) as usize
        };
        if bits & self.sign_bit() != 0 {
            -v
        } else {
            v
        }
    }

    fn negative(&self, bits: u32) -> bool {
        bits & self.sign_bit() != 0
    }

    /// Round `v · 2^-(2·scale)` to the nearest pattern, ties to even.
    fn round(&self, v: &BigInt, zero_negative: bool) -> u32 {
        if v.is_zero() {
            return if zero_negative { self.sign_bit() } else { 0 };
        }
        let mag = v.abs();
        // largest index with table[i] <= mag
        let i = self.table.partition_point(|t| t <= &mag) - 1;
        let pattern = if self.table[i] == mag || i + 1 == self.table.len() {
            i
        } else {
            let twice: BigInt = &mag << 1usize;
            let mid = &self.table[i] + &self.table[i + 1];
            if twice < mid {
                i
            } else if twice > mid {
                i + 1
            } else if i % 2 == 0 {
                i
            } else {
                i + 1
            }
        } as u32;
        if v.is_negative() {
            pattern | self.sign_bit()
        } else {
            pattern
        }
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let sum = (self.scaled(a) + self.scaled(b)) << self.scale as usize;
        // exact zero sums are +0 unless both operands are −0
        self.round(&sum, self.negative(a) && self.negative(b))
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let prod = self.scaled(a) * self.scaled(b);
        self.round(&prod, self.negative(a) != self.negative(b))
    }
}
