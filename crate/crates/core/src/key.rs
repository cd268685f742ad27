//! Finite, totally ordered keys.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KeyError {
    #[error("key must be finite, got {0}")]
    NonFinite(f64),
    #[error("delta must be nonnegative, got {0}")]
    NegativeDelta(f64),
}

/// A heap key. Always finite, so the ordering is total.
///
/// Negative zero is normalized to positive zero on construction; the two
/// compare equal anyway and this keeps the textual form unique.
#[derive(Debug, Clone, Copy)]
pub struct Key(f64);

impl Key {
    pub fn new(value: f64) -> Result<Self, KeyError> {
        if !value.is_finite() {
            return Err(KeyError::NonFinite(value));
        }
        Ok(Key(if value == 0.0 { 0.0 } else { value }))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `self - delta`, failing if the result leaves the finite range.
    pub fn decreased_by(self, delta: Delta) -> Result<Self, KeyError> {
        Key::new(self.0 - delta.0)
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        // Both sides are finite.
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl TryFrom<f64> for Key {
    type Error = KeyError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Key::new(value)
    }
}

/// Shortest decimal string that parses back to the same `f64`.
impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A nonnegative, finite amount to subtract from a key.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Delta(f64);

impl Delta {
    pub fn new(value: f64) -> Result<Self, KeyError> {
        if !value.is_finite() {
            return Err(KeyError::NonFinite(value));
        }
        if value < 0.0 {
            return Err(KeyError::NegativeDelta(value));
        }
        Ok(Delta(if value == 0.0 { 0.0 } else { value }))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
