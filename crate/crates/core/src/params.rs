//! The class-count parameters `S` and `S'` and the logarithm convention they
//! depend on.

use core::fmt;
use core::str::FromStr;

/// Base used for the unsubscripted `log` in the class-count formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => libm::log(x),
            LogBase::Two => libm::log2(x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Natural => "natural",
            LogBase::Two => "2",
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LogBase {
    type Err = &'static str;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural" | "e" | "ln" => Ok(LogBase::Natural),
            "2" | "two" | "log2" => Ok(LogBase::Two),
            _ => Err("log base must be `natural` or `2`"),
        }
    }
}

/// Smallest integer not below `x`, with a small tolerance so that values a
/// rounding error above an integer do not jump to the next one.
fn ceil_tolerant(x: f64) -> i64 {
    let r = libm::round(x);
    if libm::fabs(x - r) < 1e-9 {
        r as i64
    } else {
        libm::ceil(x) as i64
    }
}

/// `S = ceil(2d / (9 log d))`, the largest class of the consecutive family.
pub fn class_bound_s(d: usize, base: LogBase) -> i64 {
    if d < 2 {
        return 0;
    }
    let d = d as f64;
    ceil_tolerant(2.0 * d / (9.0 * base.log(d)))
}

/// `S' = ceil(log2 d - log2 log d - 3)`; `base` is used for the inner `log d`.
/// Returns `None` when `log d <= 0`.
pub fn class_bound_s_prime(d: usize, base: LogBase) -> Option<i64> {
    if d < 2 {
        return None;
    }
    let df = d as f64;
    let inner = base.log(df);
    if inner <= 0.0 {
        return None;
    }
    Some(ceil_tolerant(libm::log2(df) - libm::log2(inner) - 3.0))
}

/// `d / (5 log d)`: the weight target of the consecutive construction.
pub fn lemma_a_target(d: usize, base: LogBase) -> f64 {
    let df = d as f64;
    df / (5.0 * base.log(df))
}
