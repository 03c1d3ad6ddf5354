//! Sequence atoms: binary and ternary sequences, their elementary
//! operations, and nonperiodic autocorrelation (the coefficients of the
//! norm `A(z)A(z^-1)`).
//!
//! Sequences are immutable values. Every operation returns a fresh
//! sequence. The textual literal format is a string over `+`, `-` and `0`
//! (commas and whitespace are ignored when parsing).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Nonperiodic autocorrelation coefficients `r_0..r_{L-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Autocorr(pub Vec<i32>);

impl Autocorr {
    /// Coefficient at shift `s`; shifts beyond the sequence contribute 0.
    pub fn at(&self, s: usize) -> i32 {
        self.0.get(s).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }
}

/// `r_s = sum_i t_i t_{i+s}` for `s = 0..len`.
pub fn autocorr_terms(terms: &[i8]) -> Vec<i32> {
    let len = terms.len();
    (0..len)
        .map(|s| {
            terms[..len - s]
                .iter()
                .zip(&terms[s..])
                .map(|(&a, &b)| i32::from(a) * i32::from(b))
                .sum()
        })
        .collect()
}

fn parse_terms(s: &str, allow_zero: bool) -> Result<Vec<i8>> {
    let mut out = Vec::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '+' => out.push(1),
            '-' => out.push(-1),
            '0' if allow_zero => out.push(0),
            ',' | ' ' | '\t' => {}
            other => return Err(Error::InvalidLiteral(other)),
        }
    }
    Ok(out)
}

fn fmt_terms(terms: &[i8], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for &t in terms {
        let c = match t {
            1 => '+',
            -1 => '-',
            _ => '0',
        };
        write!(f, "{c}")?;
    }
    Ok(())
}

macro_rules! shared_seq_ops {
    ($ty:ident) => {
        impl $ty {
            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn terms(&self) -> &[i8] {
                &self.0
            }

            /// Term at 0-based index `i`.
            pub fn get(&self, i: usize) -> i8 {
                self.0[i]
            }

            /// Primed term `x'_k = x_{L+1-k}` for a 1-based `k`, relative to
            /// this sequence's own length.
            pub fn primed(&self, k: usize) -> i8 {
                self.0[self.0.len() - k]
            }

            /// Term `x_k` for a 1-based `k`.
            pub fn at(&self, k: usize) -> i8 {
                self.0[k - 1]
            }

            pub fn reverse(&self) -> Self {
                Self(self.0.iter().rev().copied().collect())
            }

            pub fn negate(&self) -> Self {
                Self(self.0.iter().map(|&t| -t).collect())
            }

            /// Multiplies term `i` (1-based) by `(-1)^(i-1)`.
            pub fn alternate(&self) -> Self {
                Self(
                    self.0
                        .iter()
                        .enumerate()
                        .map(|(i, &t)| if i % 2 == 0 { t } else { -t })
                        .collect(),
                )
            }

            /// `f * self` for `f` in {+1, -1}.
            pub fn scale(&self, f: i8) -> Self {
                debug_assert!(f == 1 || f == -1);
                Self(self.0.iter().map(|&t| f * t).collect())
            }

            pub fn concat(parts: &[&Self]) -> Self {
                Self(parts.iter().flat_map(|p| p.0.iter().copied()).collect())
            }

            /// The interlaced sequence `A/C = a_1,c_1,...,a_m,c_m,a_{m+1}`.
            pub fn interleave(a: &Self, c: &Self) -> Result<Self> {
                if a.len() != c.len() + 1 {
                    return Err(Error::LengthMismatch {
                        left: a.len(),
                        right: c.len() + 1,
                    });
                }
                let mut out = Vec::with_capacity(a.len() + c.len());
                for (x, y) in a.0.iter().zip(&c.0) {
                    out.push(*x);
                    out.push(*y);
                }
                out.push(a.0[a.len() - 1]);
                Ok(Self(out))
            }

            /// Inverse of [`Self::interleave`] for odd lengths.
            pub fn deinterleave(&self) -> Result<(Self, Self)> {
                if self.len() % 2 == 0 {
                    return Err(Error::Shape(format!(
                        "cannot de-interleave a sequence of even length {}",
                        self.len()
                    )));
                }
                let a = self.0.iter().step_by(2).copied().collect();
                let c = self.0.iter().skip(1).step_by(2).copied().collect();
                Ok((Self(a), Self(c)))
            }

            pub fn autocorr(&self) -> Autocorr {
                Autocorr(autocorr_terms(&self.0))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt_terms(&self.0, f)
            }
        }
    };
}

/// A finite sequence over {+1, -1}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinarySeq(Vec<i8>);

/// A finite sequence over {+1, 0, -1}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TernarySeq(Vec<i8>);

shared_seq_ops!(BinarySeq);
shared_seq_ops!(TernarySeq);

impl BinarySeq {
    pub fn new(terms: Vec<i8>) -> Result<Self> {
        if let Some((index, &v)) = terms.iter().enumerate().find(|(_, &t)| t != 1 && t != -1) {
            return Err(Error::InvalidTerm {
                index,
                value: i32::from(v),
                expected: "binary",
            });
        }
        Ok(Self(terms))
    }

    pub(crate) fn from_terms_unchecked(terms: Vec<i8>) -> Self {
        debug_assert!(terms.iter().all(|&t| t == 1 || t == -1));
        Self(terms)
    }

    pub fn all_plus(len: usize) -> Self {
        Self(vec![1; len])
    }

    pub fn to_ternary(&self) -> TernarySeq {
        TernarySeq(self.0.clone())
    }

    pub fn into_terms(self) -> Vec<i8> {
        self.0
    }
}

impl TernarySeq {
    pub fn new(terms: Vec<i8>) -> Result<Self> {
        if let Some((index, &v)) = terms.iter().enumerate().find(|(_, &t)| !(-1..=1).contains(&t)) {
            return Err(Error::InvalidTerm {
                index,
                value: i32::from(v),
                expected: "ternary",
            });
        }
        Ok(Self(terms))
    }

    pub(crate) fn from_terms_unchecked(terms: Vec<i8>) -> Self {
        debug_assert!(terms.iter().all(|t| (-1..=1).contains(t)));
        Self(terms)
    }

    /// The all-zero block `0_s`.
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn into_terms(self) -> Vec<i8> {
        self.0
    }

    /// Indices with a nonzero term.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_binary(&self) -> bool {
        self.0.iter().all(|&t| t != 0)
    }

    pub fn to_binary(&self) -> Result<BinarySeq> {
        BinarySeq::new(self.0.clone())
    }

    /// Term-wise sum, which must stay ternary.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.widening_add(other)?.to_ternary()
    }

    /// Term-wise difference, which must stay ternary.
    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.widening_sub(other)?.to_ternary()
    }

    pub fn widening_add(&self, other: &Self) -> Result<IntSeq> {
        zip_with(&self.0, &other.0, |a, b| a + b)
    }

    pub fn widening_sub(&self, other: &Self) -> Result<IntSeq> {
        zip_with(&self.0, &other.0, |a, b| a - b)
    }

    /// True if at most one of `g_i`, `h_i` is nonzero at every index.
    pub fn is_disjoint(&self, other: &Self) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self.0.iter().zip(&other.0).all(|(&g, &h)| g == 0 || h == 0))
    }
}

impl From<BinarySeq> for TernarySeq {
    fn from(b: BinarySeq) -> Self {
        TernarySeq(b.0)
    }
}

impl From<&BinarySeq> for TernarySeq {
    fn from(b: &BinarySeq) -> Self {
        TernarySeq(b.0.clone())
    }
}

impl TryFrom<TernarySeq> for BinarySeq {
    type Error = Error;

    fn try_from(t: TernarySeq) -> Result<Self> {
        BinarySeq::new(t.0)
    }
}

impl FromStr for BinarySeq {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self(parse_terms(s, false)?))
    }
}

impl FromStr for TernarySeq {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self(parse_terms(s, true)?))
    }
}

/// Integer-valued sequence for `A +/- B` intermediates with terms in {-2..2}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntSeq(pub Vec<i32>);

fn zip_with(a: &[i8], b: &[i8], op: impl Fn(i32, i32) -> i32) -> Result<IntSeq> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(IntSeq(
        a.iter()
            .zip(b)
            .map(|(&x, &y)| op(i32::from(x), i32::from(y)))
            .collect(),
    ))
}

impl IntSeq {
    pub fn to_ternary(&self) -> Result<TernarySeq> {
        self.0
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if (-1..=1).contains(&value) {
                    Ok(value as i8)
                } else {
                    Err(Error::RangeOverflow { index, value })
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(TernarySeq)
    }

    /// Exact division by two; every term must be even and the result ternary.
    pub fn halve(&self) -> Result<TernarySeq> {
        self.0
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if value % 2 != 0 || !(-2..=2).contains(&value) {
                    Err(Error::RangeOverflow { index, value })
                } else {
                    Ok((value / 2) as i8)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(TernarySeq)
    }
}
