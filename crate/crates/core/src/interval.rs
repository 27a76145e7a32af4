use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{LaaksoError, Result};
use crate::rational::{is_unit_interval, serde_rational, Rational};

/// Closed height interval `[a, b]` with `0 <= a <= b <= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HeightInterval {
    #[serde(with = "serde_rational")]
    a: Rational,
    #[serde(with = "serde_rational")]
    b: Rational,
}

impl HeightInterval {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if a > b {
            return Err(LaaksoError::InvalidWindow {
                a: a.to_string(),
                b: b.to_string(),
            });
        }
        if !is_unit_interval(&a) || !is_unit_interval(&b) {
            return Err(LaaksoError::OutOfRange(format!(
                "window [{a}, {b}] is not inside [0,1]"
            )));
        }
        Ok(HeightInterval { a, b })
    }

    pub fn unit() -> Self {
        HeightInterval {
            a: Rational::zero(),
            b: num_traits::One::one(),
        }
    }

    pub fn point(h: Rational) -> Self {
        HeightInterval { a: h.clone(), b: h }
    }

    pub fn lo(&self) -> &Rational {
        &self.a
    }

    pub fn hi(&self) -> &Rational {
        &self.b
    }

    pub fn length(&self) -> Rational {
        &self.b - &self.a
    }

    pub fn contains(&self, t: &Rational) -> bool {
        &self.a <= t && t <= &self.b
    }
}

impl fmt::Display for HeightInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}
