//! Exact decimal scalars for reward coefficients and score grids.
//!
//! All scoring constants in this crate (coefficient weights, judge score
//! grids, format reward levels) are short decimal fractions. Storing them
//! as binary floats makes exact-equality tests on reward branch outputs
//! fragile, so they are kept as integer thousandths and only converted to
//! `f64` at the point of arithmetic.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// A non-negative-or-negative decimal with three fractional digits,
/// stored as integer thousandths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Dec(i64);

impl Dec {
    pub const ZERO: Dec = Dec(0);
    pub const ONE: Dec = Dec(1000);

    /// Builds a value from integer thousandths, e.g. `Dec::thousandths(50)` is 0.05.
    pub const fn thousandths(n: i64) -> Self {
        Dec(n)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Converts a float that is expected to lie on the thousandths grid.
    /// Returns `None` when the value is further than 1e-6 from any
    /// representable decimal.
    pub fn try_from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let scaled = x * 1000.0;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-6 * 1000.0_f64.max(scaled.abs()) {
            return None;
        }
        Some(Dec(rounded as i64))
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Snaps to the nearest value in `grid` (which must be non-empty).
    /// Ties resolve toward the smaller grid value.
    pub fn snap_to_grid(self, grid: &[Dec]) -> Dec {
        debug_assert!(!grid.is_empty());
        let mut best = grid[0];
        let mut best_dist = (self.0 - grid[0].0).abs();
        for &g in &grid[1..] {
            let d = (self.0 - g.0).abs();
            if d < best_dist || (d == best_dist && g.0 < best.0) {
                best = g;
                best_dist = d;
            }
        }
        best
    }
}

/// Parse error for decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal `{0}`: expected a number with at most three fractional digits")]
pub struct DecParseError(pub String);

impl FromStr for Dec {
    type Err = DecParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || DecParseError(s.to_string());
        let (neg, t) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        if t.is_empty() {
            return Err(err());
        }
        let (int_part, frac_part) = match t.split_once('.') {
            Some((i, f)) => (i, f),
            None => (t, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if frac_part.len() > 3 {
            return Err(err());
        }
        let int: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| err())?
        };
        let mut frac: i64 = 0;
        if !frac_part.is_empty() {
            frac = frac_part.parse().map_err(|_| err())?;
            for _ in frac_part.len()..3 {
                frac *= 10;
            }
        }
        let magnitude = int
            .checked_mul(1000)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Dec(if neg { -magnitude } else { magnitude }))
    }
}

impl fmt::Display for Dec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = abs / 1000;
        let frac = abs % 1000;
        if frac == 0 {
            write!(f, "{sign}{int}")
        } else {
            let s = format!("{frac:03}");
            write!(f, "{sign}{int}.{}", s.trim_end_matches('0'))
        }
    }
}

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(deserializer)?;
        Dec::try_from_f64(x)
            .ok_or_else(|| serde::de::Error::custom(format!("{x} is not a thousandths decimal")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["0", "0.05", "0.1", "0.3", "0.6", "0.8", "1", "1.2", "-0.1", "12.345"] {
            let d: Dec = s.parse().unwrap();
            let back: Dec = d.to_string().parse().unwrap();
            assert_eq!(d, back, "{s}");
        }
        assert_eq!("0.05".parse::<Dec>().unwrap(), Dec::thousandths(50));
        assert_eq!("1.2".parse::<Dec>().unwrap(), Dec::thousandths(1200));
    }

    #[test]
    fn rejects_over_precise_and_garbage() {
        assert!("0.0001".parse::<Dec>().is_err());
        assert!("abc".parse::<Dec>().is_err());
        assert!("".parse::<Dec>().is_err());
        assert!(".".parse::<Dec>().is_err());
    }

    #[test]
    fn f64_round_trip_on_grid_values() {
        for n in [0, 50, 100, 200, 300, 500, 600, 800, 1000, 1200] {
            let d = Dec::thousandths(n);
            assert_eq!(Dec::try_from_f64(d.to_f64()), Some(d));
        }
        assert_eq!(Dec::try_from_f64(1.0 / 3.0), None);
    }

    #[test]
    fn snapping_ties_go_low() {
        let grid = [
            Dec::thousandths(200),
            Dec::thousandths(600),
            Dec::thousandths(1000),
            Dec::thousandths(1200),
        ];
        assert_eq!("0.9".parse::<Dec>().unwrap().snap_to_grid(&grid), Dec::thousandths(1000));
        // 0.4 is equidistant from 0.2 and 0.6.
        assert_eq!("0.4".parse::<Dec>().unwrap().snap_to_grid(&grid), Dec::thousandths(200));
        assert_eq!("1.2".parse::<Dec>().unwrap().snap_to_grid(&grid), Dec::thousandths(1200));
    }
}
