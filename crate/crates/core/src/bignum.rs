//! Arbitrary-precision complex arithmetic on top of `astro-float`.
//!
//! Every value carries its mantissa precision in bits. The working precisions
//! used by the solvers form the escalation ladder [`PREC_LADDER`]; binary
//! operations compute at the larger of the two operand precisions. Rounding
//! is always to nearest-even.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_complex::Complex64;
use std::cell::RefCell;

use crate::{Error, Result};

/// Mantissa-bit precisions tried in order when residuals fail tolerance.
pub const PREC_LADDER: [u32; 4] = [53, 128, 256, 512];

const RM: RoundingMode = RoundingMode::ToEven;

/// Arbitrary-precision real number (re-export of the backing float type).
pub type BigReal = BigFloat;

thread_local! {
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("constants cache allocation"));
}

/// Convert a big real to the nearest f64, saturating to +/-inf out of range.
pub fn real_to_f64(x: &BigReal) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let (words, _bits, sign, exp, _inexact) = x.as_raw_parts().expect("finite raw parts");
    // Words are little-endian; the value is 0.m * 2^exp with the mantissa's
    // most significant bit in the last word.
    let nw = words.len();
    let hi = words[nw - 1] as f64;
    let lo = if nw >= 2 { words[nw - 2] as f64 } else { 0.0 };
    let frac = hi * 2f64.powi(-64) + lo * 2f64.powi(-128);
    let mag = frac * 2f64.powi(exp);
    match sign {
        Sign::Neg => -mag,
        Sign::Pos => mag,
    }
}

/// Parse a decimal string at the given precision.
pub fn real_from_str(s: &str, prec: u32) -> Result<BigReal> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::parse("empty number literal"));
    }
    let v = CONSTS.with(|cc| BigFloat::parse(t, Radix::Dec, prec as usize, RM, &mut cc.borrow_mut()));
    if v.is_nan() {
        return Err(Error::parse(format!("invalid number literal: {t:?}")));
    }
    Ok(v)
}

pub fn real_from_f64(x: f64, prec: u32) -> BigReal {
    BigFloat::from_f64(x, prec as usize)
}

/// Complex number with arbitrary-precision real and imaginary parts.
#[derive(Clone, Debug)]
pub struct BigComplex {
    re: BigFloat,
    im: BigFloat,
    prec: u32,
}

impl BigComplex {
    pub fn new(re: BigFloat, im: BigFloat, prec: u32) -> Self {
        BigComplex { re, im, prec }
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_f64s(0.0, 0.0, prec)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_f64s(1.0, 0.0, prec)
    }

    pub fn from_f64s(re: f64, im: f64, prec: u32) -> Self {
        BigComplex {
            re: BigFloat::from_f64(re, prec as usize),
            im: BigFloat::from_f64(im, prec as usize),
            prec,
        }
    }

    pub fn from_c64(z: Complex64, prec: u32) -> Self {
        Self::from_f64s(z.re, z.im, prec)
    }

    /// Parse from decimal strings for the real and imaginary parts.
    pub fn parse_parts(re: &str, im: &str, prec: u32) -> Result<Self> {
        Ok(BigComplex {
            re: real_from_str(re, prec)?,
            im: real_from_str(im, prec)?,
            prec,
        })
    }

    pub fn re(&self) -> &BigFloat {
        &self.re
    }

    pub fn im(&self) -> &BigFloat {
        &self.im
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    fn p(&self, rhs: &Self) -> usize {
        self.prec.max(rhs.prec) as usize
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(real_to_f64(&self.re), real_to_f64(&self.im))
    }

    pub fn is_finite(&self) -> bool {
        !(self.re.is_nan() || self.im.is_nan() || self.re.is_inf() || self.im.is_inf())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let p = self.p(rhs);
        BigComplex {
            re: self.re.add(&rhs.re, p, RM),
            im: self.im.add(&rhs.im, p, RM),
            prec: p as u32,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let p = self.p(rhs);
        BigComplex {
            re: self.re.sub(&rhs.re, p, RM),
            im: self.im.sub(&rhs.im, p, RM),
            prec: p as u32,
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let p = self.p(rhs);
        let ac = self.re.mul(&rhs.re, p, RM);
        let bd = self.im.mul(&rhs.im, p, RM);
        let ad = self.re.mul(&rhs.im, p, RM);
        let bc = self.im.mul(&rhs.re, p, RM);
        BigComplex {
            re: ac.sub(&bd, p, RM),
            im: ad.add(&bc, p, RM),
            prec: p as u32,
        }
    }

    pub fn div(&self, rhs: &Self) -> Self {
        let p = self.p(rhs);
        let den = rhs.abs_sq();
        let ac = self.re.mul(&rhs.re, p, RM);
        let bd = self.im.mul(&rhs.im, p, RM);
        let bc = self.im.mul(&rhs.re, p, RM);
        let ad = self.re.mul(&rhs.im, p, RM);
        BigComplex {
            re: ac.add(&bd, p, RM).div(&den, p, RM),
            im: bc.sub(&ad, p, RM).div(&den, p, RM),
            prec: p as u32,
        }
    }

    pub fn neg(&self) -> Self {
        BigComplex {
            re: self.re.neg(),
            im: self.im.neg(),
            prec: self.prec,
        }
    }

    pub fn conj(&self) -> Self {
        BigComplex {
            re: self.re.clone(),
            im: self.im.neg(),
            prec: self.prec,
        }
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        let p = self.prec as usize;
        let f = BigFloat::from_f64(s, p);
        BigComplex {
            re: self.re.mul(&f, p, RM),
            im: self.im.mul(&f, p, RM),
            prec: self.prec,
        }
    }

    /// |z|^2 as a big real.
    pub fn abs_sq(&self) -> BigFloat {
        let p = self.prec as usize;
        let rr = self.re.mul(&self.re, p, RM);
        let ii = self.im.mul(&self.im, p, RM);
        rr.add(&ii, p, RM)
    }

    /// |z| as a big real.
    pub fn abs(&self) -> BigFloat {
        self.abs_sq().sqrt(self.prec as usize, RM)
    }

    pub fn abs_f64(&self) -> f64 {
        // Computed from the parts to avoid overflow in the squared form.
        let r = real_to_f64(&self.re);
        let i = real_to_f64(&self.im);
        r.hypot(i)
    }

    /// z^k by binary exponentiation.
    pub fn powi(&self, mut k: u64) -> Self {
        let mut acc = Self::one(self.prec);
        if k == 0 {
            return acc;
        }
        let mut base = self.clone();
        while k > 1 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc.mul(&base)
    }

    pub fn recip(&self) -> Self {
        Self::one(self.prec).div(self)
    }

    /// Round-trip to a new precision (widening keeps the value exact).
    pub fn with_prec(&self, prec: u32) -> Self {
        let p = prec as usize;
        BigComplex {
            re: self.re.add(&BigFloat::from_f64(0.0, p), p, RM),
            im: self.im.add(&BigFloat::from_f64(0.0, p), p, RM),
            prec,
        }
    }

    /// Exact equality of both parts.
    pub fn eq_exact(&self, rhs: &Self) -> bool {
        self.re == rhs.re && self.im == rhs.im
    }
}

impl PartialEq for BigComplex {
    fn eq(&self, other: &Self) -> bool {
        self.eq_exact(other)
    }
}

impl std::fmt::Display for BigComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({} + {}i)", self.re, self.im)
    }
}
