//! Case codes of the 32-case benchmark taxonomy.
//!
//! The numeric prefix picks the placement regime relative to the patch grid
//! (cell centers, patch edges, intersections, dilated circles, adjacency
//! clusters); the letter suffix picks the size/jitter variant. Not every
//! combination exists: prefix 1 has A/B, prefixes 2-4 have A-D, prefixes 5-8
//! are A only, prefixes 9-15 have A/B.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CaseCodeError {
    #[error("malformed case code {0:?}: expected a 1-2 digit prefix followed by A-D")]
    Malformed(String),
    #[error("case code {0:?} is not in the taxonomy")]
    NotInTaxonomy(String),
}

/// Size/jitter variant within a placement prefix.
///
/// `A`: fixed base size, no jitter. `B`: per-object size drawn from
/// `[0.2*d, d]`. `C`: per-axis center jitter within an eighth of a patch.
/// `D`: both B and C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suffix {
    A,
    B,
    C,
    D,
}

impl Suffix {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'A' => Some(Suffix::A),
            'B' => Some(Suffix::B),
            'C' => Some(Suffix::C),
            'D' => Some(Suffix::D),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Suffix::A => 'A',
            Suffix::B => 'B',
            Suffix::C => 'C',
            Suffix::D => 'D',
        }
    }
}

/// One of the 32 benchmark cases, e.g. `4A` or `13B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CaseCode {
    prefix: u8,
    suffix: Suffix,
}

impl CaseCode {
    pub fn new(prefix: u8, suffix: Suffix) -> Result<Self, CaseCodeError> {
        let valid = match prefix {
            1 => matches!(suffix, Suffix::A | Suffix::B),
            2..=4 => true,
            5..=8 => suffix == Suffix::A,
            9..=15 => matches!(suffix, Suffix::A | Suffix::B),
            _ => false,
        };
        if valid {
            Ok(Self { prefix, suffix })
        } else {
            Err(CaseCodeError::NotInTaxonomy(format!("{prefix}{}", suffix.as_char())))
        }
    }

    /// All 32 cases in canonical order (numeric prefix, then suffix).
    pub fn all() -> Vec<CaseCode> {
        let mut out = Vec::with_capacity(32);
        for prefix in 1..=15u8 {
            for suffix in [Suffix::A, Suffix::B, Suffix::C, Suffix::D] {
                if let Ok(code) = CaseCode::new(prefix, suffix) {
                    out.push(code);
                }
            }
        }
        out
    }

    pub fn prefix(&self) -> u8 {
        self.prefix
    }

    pub fn suffix(&self) -> Suffix {
        self.suffix
    }

    /// Diameter multiplier (in patch sizes) for the dilated-circle prefixes 5-8.
    pub fn dilation(&self) -> Option<f64> {
        match self.prefix {
            5 => Some(2.5),
            6 => Some(3.0),
            7 => Some(3.5),
            8 => Some(4.0),
            _ => None,
        }
    }

    /// Adjacency-cluster prefixes 9-15 place objects in near-touching layouts.
    pub fn is_adjacency(&self) -> bool {
        (9..=15).contains(&self.prefix)
    }

    /// Suffixes B and D draw per-object sizes from `[0.2*d, d]`.
    pub fn varies_size(&self) -> bool {
        matches!(self.suffix, Suffix::B | Suffix::D)
    }

    /// Suffixes C and D jitter each center by up to an eighth of a patch per axis.
    pub fn jitters(&self) -> bool {
        matches!(self.suffix, Suffix::C | Suffix::D)
    }
}

impl fmt::Display for CaseCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.prefix, self.suffix.as_char())
    }
}

impl FromStr for CaseCode {
    type Err = CaseCodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || CaseCodeError::Malformed(s.to_string());
        if s.len() < 2 || s.len() > 3 {
            return Err(malformed());
        }
        let (digits, letter) = s.split_at(s.len() - 1);
        let prefix: u8 = digits.parse().map_err(|_| malformed())?;
        let suffix = letter
            .chars()
            .next()
            .and_then(Suffix::from_char)
            .ok_or_else(malformed)?;
        CaseCode::new(prefix, suffix)
    }
}

impl Serialize for CaseCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CaseCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}
