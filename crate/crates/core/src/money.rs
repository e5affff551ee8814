//! Fixed-point currency.
//!
//! Amounts are held as integer nano-units so that budget arithmetic is exact:
//! 1000 impressions at CPM 50 spend exactly 50.

use core::fmt;
use core::ops::{Add, Sub};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

const NANOS_PER_UNIT: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_nanos(nanos: u64) -> Self {
        Money(nanos)
    }

    pub const fn nanos(self) -> u64 {
        self.0
    }

    pub const fn from_units(units: u64) -> Self {
        Money(units * NANOS_PER_UNIT)
    }

    /// Converts a decimal currency amount, rounding to the nearest nano-unit.
    /// Returns `None` for negative, non-finite, or out-of-range values.
    pub fn from_f64(units: f64) -> Option<Self> {
        if !units.is_finite() || units < 0.0 {
            return None;
        }
        let nanos = libm::round(units * NANOS_PER_UNIT as f64);
        if nanos > u64::MAX as f64 {
            return None;
        }
        Some(Money(nanos as u64))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_UNIT as f64
    }

    pub fn checked_add(self, rhs: Money) -> Option<Money> {
        self.0.checked_add(rhs.0).map(Money)
    }

    pub fn checked_sub(self, rhs: Money) -> Option<Money> {
        self.0.checked_sub(rhs.0).map(Money)
    }

    pub fn saturating_sub(self, rhs: Money) -> Money {
        Money(self.0.saturating_sub(rhs.0))
    }

    /// Scales by a non-negative rate, rounding to the nearest nano-unit.
    pub fn scale(self, rate: f64) -> Money {
        if rate.is_nan() || rate <= 0.0 {
            return Money::ZERO;
        }
        let v = libm::round(self.0 as f64 * rate);
        if v >= u64::MAX as f64 {
            Money(u64::MAX)
        } else {
            Money(v as u64)
        }
    }

    /// Integer division truncating toward zero.
    pub const fn div_floor(self, divisor: u64) -> Money {
        Money(self.0 / divisor)
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / NANOS_PER_UNIT;
        let frac = self.0 % NANOS_PER_UNIT;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let mut digits = [0u8; 9];
            let mut rem = frac;
            for d in digits.iter_mut().rev() {
                *d = b'0' + (rem % 10) as u8;
                rem /= 10;
            }
            let mut end = 9;
            while digits[end - 1] == b'0' {
                end -= 1;
            }
            // digits are ASCII by construction
            let s = core::str::from_utf8(&digits[..end]).unwrap_or("0");
            write!(f, "{whole}.{s}")
        }
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        Money::from_f64(v).ok_or_else(|| {
            de::Error::invalid_value(de::Unexpected::Float(v), &"a non-negative currency amount")
        })
    }
}
