use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::address::CantorAddress;
use crate::error::{LaaksoError, Result};
use crate::rational::{parse_rational, Rational};
use crate::wormhole::{check_height, wormhole_order};

/// A point `[x1, x2]` of Laakso space: a height and a finite Cantor address.
///
/// Equality, hashing and ordering are those of the equivalence class: the
/// two representatives of a wormhole compare equal, as do addresses that
/// differ only by trailing zeros. [`canonicalize`](Self::canonicalize)
/// picks the representative with the wormhole bit cleared.
#[derive(Clone)]
pub struct LaaksoPoint {
    height: Rational,
    address: CantorAddress,
}

impl LaaksoPoint {
    pub fn new(height: Rational, address: CantorAddress) -> Result<Self> {
        check_height(&height)?;
        Ok(LaaksoPoint { height, address })
    }

    /// Parses the `"h:bits"` syntax, e.g. `"1/2:01"`; the bit string may be empty.
    pub fn parse(s: &str) -> Result<Self> {
        let (h, bits) = s
            .split_once(':')
            .ok_or_else(|| LaaksoError::Parse(format!("expected \"h:bits\", got {s:?}")))?;
        LaaksoPoint::new(parse_rational(h)?, CantorAddress::parse(bits.trim())?)
    }

    pub fn height(&self) -> &Rational {
        &self.height
    }

    pub fn address(&self) -> &CantorAddress {
        &self.address
    }

    /// Same address at another height.
    pub fn at_height(&self, height: Rational) -> Result<Self> {
        LaaksoPoint::new(height, self.address.clone())
    }

    pub fn with_address(&self, address: CantorAddress) -> Self {
        LaaksoPoint {
            height: self.height.clone(),
            address,
        }
    }

    /// Order `n` of the wormhole level through this height, if any.
    pub fn wormhole_order(&self) -> Option<u32> {
        wormhole_order(&self.height)
    }

    pub fn is_wormhole(&self) -> bool {
        self.wormhole_order().is_some()
    }

    /// Representative with bit `n` cleared when the height lies in `J_n`.
    pub fn canonicalize(&self) -> LaaksoPoint {
        match self.wormhole_order() {
            Some(n) if self.address.bit(n) => LaaksoPoint {
                height: self.height.clone(),
                address: self.address.with_bit(n, false),
            },
            _ => self.clone(),
        }
    }

    /// Both representatives (canonical first) for a wormhole, otherwise just the point.
    pub fn representatives(&self) -> Vec<CantorAddress> {
        let canon = self.canonicalize().address;
        match self.wormhole_order() {
            Some(n) => {
                let other = canon.with_bit(n, true);
                vec![canon, other]
            }
            None => vec![canon],
        }
    }

    fn key(&self) -> (Rational, CantorAddress) {
        let c = self.canonicalize();
        (c.height, c.address.trimmed())
    }

    /// Representation as stored, `"h:bits"`.
    pub fn to_spec(&self) -> String {
        format!("{}:{}", self.height, self.address)
    }
}

impl PartialEq for LaaksoPoint {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height && self.canonicalize().address == other.canonicalize().address
    }
}

impl Eq for LaaksoPoint {}

impl Hash for LaaksoPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl Ord for LaaksoPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for LaaksoPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LaaksoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, \"{}\"]", self.height, self.address)
    }
}

impl fmt::Debug for LaaksoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for LaaksoPoint {
    type Err = LaaksoError;

    fn from_str(s: &str) -> Result<Self> {
        LaaksoPoint::parse(s)
    }
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    h: String,
    bits: String,
}

impl Serialize for LaaksoPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointRecord {
            h: self.height.to_string(),
            bits: self.address.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaaksoPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = PointRecord::deserialize(d)?;
        let h = parse_rational(&rec.h).map_err(serde::de::Error::custom)?;
        let a = CantorAddress::parse(&rec.bits).map_err(serde::de::Error::custom)?;
        LaaksoPoint::new(h, a).map_err(serde::de::Error::custom)
    }
}

/// Parses `"h:bits"`, panicking on malformed input. Intended for tests and examples.
pub fn pt(s: &str) -> LaaksoPoint {
    LaaksoPoint::parse(s).unwrap_or_else(|e| panic!("bad point {s:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_examples() {
        assert_eq!(pt("1/3:1").canonicalize().to_spec(), "1/3:0");
        assert_eq!(pt("1/2:10").canonicalize().to_spec(), "1/2:10");
        assert_eq!(pt("5/9:01").canonicalize().to_spec(), "5/9:00");
        // the wormhole bit beyond the stored depth is already zero
        assert_eq!(pt("5/9:1").canonicalize().to_spec(), "5/9:1");
    }

    #[test]
    fn wormhole_representatives_are_equal() {
        assert_eq!(pt("1/3:0"), pt("1/3:1"));
        assert_ne!(pt("1/2:0"), pt("1/2:1"));
        assert_eq!(pt("1/2:10"), pt("1/2:1"));
        assert_eq!(pt("2/9:").representatives().len(), 2);
    }

    #[test]
    fn json_shape() {
        let p = pt("1/2:0110");
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"h":"1/2","bits":"0110"}"#);
        let back: LaaksoPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_spec(), "1/2:0110");
        assert!(serde_json::from_str::<LaaksoPoint>(r#"{"h":"3/2","bits":""}"#).is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(LaaksoPoint::parse("1/2").is_err());
        assert!(LaaksoPoint::parse("1/2:2").is_err());
        assert!(LaaksoPoint::parse("x:0").is_err());
        assert!(LaaksoPoint::parse("-1/2:0").is_err());
    }
}
