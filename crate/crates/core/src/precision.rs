//! Working precision.
//!
//! Every solver in this crate is generic over [`Real`], which is implemented
//! for native `f64` and for [`ExtendedReal`], an unevaluated pair of doubles
//! (`hi + lo`) carrying roughly 31 significant decimal digits. Runs in
//! [`PrecisionMode::Extended`] stand in for exact arithmetic.
//!
//! The pair arithmetic uses the error-free transformations TwoSum and
//! TwoProd (via fused multiply-add) and renormalizes after every operation,
//! so `hi` is always the double nearest to the represented value.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unit roundoff of IEEE double precision, `2^-53`.
pub const NATIVE_UNIT_ROUNDOFF: f64 = 1.1102230246251565e-16;
/// Unit roundoff of pair arithmetic, `4 * 2^-106 = 2^-104`.
pub const EXTENDED_UNIT_ROUNDOFF: f64 = 4.930380657631324e-32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    Native,
    Extended,
}

impl PrecisionMode {
    pub fn unit_roundoff(self) -> f64 {
        match self {
            PrecisionMode::Native => NATIVE_UNIT_ROUNDOFF,
            PrecisionMode::Extended => EXTENDED_UNIT_ROUNDOFF,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrecisionMode::Native => "native",
            PrecisionMode::Extended => "extended",
        }
    }
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PrecisionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(PrecisionMode::Native),
            "extended" => Ok(PrecisionMode::Extended),
            other => Err(format!("unknown precision mode '{other}' (expected native or extended)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrecisionError {
    #[error("non-finite operand")]
    NonFiniteOperand,
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0:e}")]
    NegativeSqrt(f64),
    #[error("result overflowed to {0}")]
    Overflow(f64),
    #[error("result underflowed to zero")]
    Underflow,
    #[error("NaN encountered in {0}")]
    NaN(String),
}

/// Knuth's TwoSum: `s + e == a + b` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

/// Dekker's Fast2Sum, valid when `|a| >= |b|` (or `a == 0`).
#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// `p + e == a * b` exactly (barring overflow/underflow).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// A real number stored as the unevaluated sum `hi + lo` of two doubles,
/// with `hi` the double nearest to `hi + lo`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct ExtendedReal {
    hi: f64,
    lo: f64,
}

impl ExtendedReal {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    /// Builds the pair from two arbitrary doubles, renormalizing.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn is_negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Pair times double.
    #[inline]
    pub fn mul_f64(self, y: f64) -> Self {
        let (ch, cl1) = two_prod(self.hi, y);
        if !ch.is_finite() {
            return Self { hi: ch, lo: 0.0 };
        }
        let cl3 = self.lo.mul_add(y, cl1);
        let (hi, lo) = fast_two_sum(ch, cl3);
        Self { hi, lo }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Self::ZERO } else { Self { hi: f64::NAN, lo: f64::NAN } };
        }
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let diff = self - Self { hi: p, lo: e };
        let t = diff.hi / (2.0 * s);
        let (hi, lo) = fast_two_sum(s, t);
        Self { hi, lo }
    }

    /// Integer power by repeated squaring.
    pub fn powi(self, n: i32) -> Self {
        if n < 0 {
            return Self::ONE / self.powi(-n);
        }
        let mut base = self;
        let mut acc = Self::ONE;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Debug for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtendedReal({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.hi)
    }
}

impl From<f64> for ExtendedReal {
    #[inline]
    fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for ExtendedReal {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for ExtendedReal {
    type Output = Self;
    #[inline]
    fn add(self, y: Self) -> Self {
        let (sh, sl) = two_sum(self.hi, y.hi);
        if !sh.is_finite() {
            return Self { hi: sh, lo: 0.0 };
        }
        let (th, tl) = two_sum(self.lo, y.lo);
        let c = sl + th;
        let (vh, vl) = fast_two_sum(sh, c);
        let w = tl + vl;
        let (hi, lo) = fast_two_sum(vh, w);
        Self { hi, lo }
    }
}

impl Sub for ExtendedReal {
    type Output = Self;
    #[inline]
    fn sub(self, y: Self) -> Self {
        self + (-y)
    }
}

impl Mul for ExtendedReal {
    type Output = Self;
    #[inline]
    fn mul(self, y: Self) -> Self {
        let (ch, cl1) = two_prod(self.hi, y.hi);
        if !ch.is_finite() {
            return Self { hi: ch, lo: 0.0 };
        }
        let tl0 = self.lo * y.lo;
        let tl1 = self.hi.mul_add(y.lo, tl0);
        let cl2 = self.lo.mul_add(y.hi, tl1);
        let cl3 = cl1 + cl2;
        let (hi, lo) = fast_two_sum(ch, cl3);
        Self { hi, lo }
    }
}

impl Div for ExtendedReal {
    type Output = Self;
    #[inline]
    fn div(self, y: Self) -> Self {
        let q1 = self.hi / y.hi;
        if !q1.is_finite() || q1 == 0.0 && self.hi == 0.0 {
            return Self { hi: q1, lo: 0.0 };
        }
        let r = self - y.mul_f64(q1);
        let q2 = r.hi / y.hi;
        let r = r - y.mul_f64(q2);
        let q3 = r.hi / y.hi;
        let (q1, q2) = fast_two_sum(q1, q2);
        Self { hi: q1, lo: q2 } + Self::from(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for ExtendedReal {
            #[inline]
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl Sum for ExtendedReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
}

/// Checked pair arithmetic. `b` is ignored for [`ArithOp::Sqrt`].
pub fn extended_arithmetic(a: ExtendedReal, b: ExtendedReal, op: ArithOp) -> Result<ExtendedReal, PrecisionError> {
    if !a.is_finite() || (op != ArithOp::Sqrt && !b.is_finite()) {
        return Err(PrecisionError::NonFiniteOperand);
    }
    let zero = |v: ExtendedReal| v.hi == 0.0;
    let r = match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => {
            let r = a * b;
            if zero(r) && !zero(a) && !zero(b) {
                return Err(PrecisionError::Underflow);
            }
            r
        }
        ArithOp::Div => {
            if zero(b) {
                return Err(PrecisionError::DivisionByZero);
            }
            let r = a / b;
            if zero(r) && !zero(a) {
                return Err(PrecisionError::Underflow);
            }
            r
        }
        ArithOp::Sqrt => {
            if a.is_negative() {
                return Err(PrecisionError::NegativeSqrt(a.hi));
            }
            a.sqrt()
        }
    };
    if !r.is_finite() {
        return Err(if r.hi.is_nan() {
            PrecisionError::NaN("extended arithmetic".into())
        } else {
            PrecisionError::Overflow(r.hi)
        });
    }
    Ok(r)
}

/// Scalar type a solver runs in.
pub trait Real:
    Copy
    + Default
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
{
    const MODE: PrecisionMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    /// Rounds an extended value to this precision.
    fn from_ext(v: ExtendedReal) -> Self;
    fn to_f64(self) -> f64;
    fn to_ext(self) -> ExtendedReal;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;
    fn mul_f64(self, a: f64) -> Self;

    fn unit_roundoff() -> f64 {
        Self::MODE.unit_roundoff()
    }
}

impl Real for f64 {
    const MODE: PrecisionMode = PrecisionMode::Native;

    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn from_ext(v: ExtendedReal) -> Self {
        v.hi
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn to_ext(self) -> ExtendedReal {
        ExtendedReal::from(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn mul_f64(self, a: f64) -> Self {
        self * a
    }
}

impl Real for ExtendedReal {
    const MODE: PrecisionMode = PrecisionMode::Extended;

    #[inline]
    fn zero() -> Self {
        Self::ZERO
    }
    #[inline]
    fn one() -> Self {
        Self::ONE
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        Self::from(v)
    }
    #[inline]
    fn from_ext(v: ExtendedReal) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.hi
    }
    #[inline]
    fn to_ext(self) -> ExtendedReal {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        ExtendedReal::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        ExtendedReal::abs(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        ExtendedReal::is_finite(self)
    }
    #[inline]
    fn mul_f64(self, a: f64) -> Self {
        ExtendedReal::mul_f64(self, a)
    }
}

/// Fails with [`PrecisionError::NaN`] if any entry is not finite.
pub fn check_finite<T: Real>(values: &[T], context: &str) -> Result<(), PrecisionError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PrecisionError::NaN(context.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ext(v: f64) -> ExtendedReal {
        ExtendedReal::from(v)
    }

    #[test]
    fn tiny_offset_survives_cancellation() {
        let tiny = 2f64.powi(-80);
        let a = ExtendedReal::new(1.0, tiny);
        let d = a - ExtendedReal::ONE;
        assert_eq!(d.hi(), tiny);
        assert_eq!(d.lo(), 0.0);
    }

    #[test]
    fn low_part_recovered() {
        let big = ext(1e16);
        let d = (big + ExtendedReal::ONE) - big;
        assert_eq!(d, ExtendedReal::ONE);
    }

    #[test]
    fn sqrt_two_squared() {
        let s = ext(2.0).sqrt();
        let err = ((s * s) - ext(2.0)).abs().to_f64() / 2.0;
        assert!(err <= 1e-31, "relative error {err:e}");
    }

    #[test]
    fn unit_roundoff_relation() {
        let u = PrecisionMode::Native.unit_roundoff();
        assert!(PrecisionMode::Extended.unit_roundoff() <= 4.0 * u * u);
        assert_eq!(u, 2f64.powi(-53));
    }

    #[test]
    fn checked_errors() {
        assert_eq!(
            extended_arithmetic(ExtendedReal::ONE, ExtendedReal::ZERO, ArithOp::Div),
            Err(PrecisionError::DivisionByZero)
        );
        assert!(matches!(
            extended_arithmetic(ext(-1.0), ExtendedReal::ZERO, ArithOp::Sqrt),
            Err(PrecisionError::NegativeSqrt(_))
        ));
        assert!(matches!(extended_arithmetic(ext(1e300), ext(1e300), ArithOp::Mul), Err(PrecisionError::Overflow(_))));
        assert_eq!(extended_arithmetic(ext(1e-300), ext(1e-300), ArithOp::Mul), Err(PrecisionError::Underflow));
        assert_eq!(
            extended_arithmetic(ext(f64::NAN), ExtendedReal::ONE, ArithOp::Add),
            Err(PrecisionError::NonFiniteOperand)
        );
        assert_eq!(extended_arithmetic(ext(3.0), ext(4.0), ArithOp::Add).unwrap(), ext(7.0));
    }

    #[test]
    fn division_examples() {
        let third = ExtendedReal::ONE / ext(3.0);
        let back = third * ext(3.0) - ExtendedReal::ONE;
        assert!(back.abs().to_f64() < 1e-31);
        assert_eq!(ExtendedReal::ZERO / ext(5.0), ExtendedReal::ZERO);
    }

    #[test]
    fn powi_matches_repeated_multiplication() {
        let x = ext(1.1);
        let mut acc = ExtendedReal::ONE;
        for _ in 0..13 {
            acc *= x;
        }
        let rel = ((x.powi(13) - acc) / acc).abs().to_f64();
        assert!(rel < 1e-30);
        assert_eq!(x.powi(0), ExtendedReal::ONE);
    }

    #[test]
    fn ordering_uses_low_part() {
        let a = ExtendedReal::new(1.0, 1e-20);
        let b = ExtendedReal::new(1.0, 2e-20);
        assert!(a < b);
        assert!(-b < -a);
    }
}
