//! Bit-packed ±1 matrices, circulants, the Goethals–Seidel array and the
//! Hadamard test.

use std::fmt;
use std::str::FromStr;

use crate::designs::BaseSeqQuad;
use crate::error::{Error, Result};
use crate::seq::BinarySeq;

/// Square ±1 matrix, one run of 64-bit words per row, `+1` stored as bit 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignMatrix {
    order: usize,
    stride: usize,
    words: Vec<u64>,
}

impl SignMatrix {
    /// All entries `-1`.
    pub fn minus_ones(order: usize) -> Self {
        let stride = order.div_ceil(64).max(1);
        Self {
            order,
            stride,
            words: vec![0; stride * order],
        }
    }

    pub fn from_fn(order: usize, f: impl Fn(usize, usize) -> i8) -> Self {
        let mut m = Self::minus_ones(order);
        for i in 0..order {
            for j in 0..order {
                if f(i, j) > 0 {
                    m.words[i * m.stride + j / 64] |= 1 << (j % 64);
                }
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let order = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != order {
                return Err(Error::LengthMismatch {
                    left: order,
                    right: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|&x| x != 1 && x != -1) {
                return Err(Error::InvalidTerm {
                    index: i * order + j,
                    value: row[j] as i32,
                    expected: "matrix",
                });
            }
        }
        Ok(Self::from_fn(order, |i, j| rows[i][j]))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        if (self.words[i * self.stride + j / 64] >> (j % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Packed words of row `i`; bits past the order are zero.
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    /// Row `i` as a single word when the order is at most 64.
    pub fn row_bits(&self, i: usize) -> u64 {
        debug_assert!(self.order <= 64);
        self.words[i * self.stride]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Dot product of rows `i` and `k`.
    pub fn row_dot(&self, i: usize, k: usize) -> i32 {
        let differ: u32 = self
            .row_words(i)
            .iter()
            .zip(self.row_words(k))
            .map(|(a, b)| (a ^ b).count_ones())
            .sum();
        self.order as i32 - 2 * differ as i32
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.order, |i, j| self.get(j, i))
    }

    /// Raw text form: the order, then one row per line over `+-`.
    pub fn to_raw(&self) -> String {
        let mut out = format!("{}\n", self.order);
        for i in 0..self.order {
            for j in 0..self.order {
                out.push(if self.get(i, j) > 0 { '+' } else { '-' });
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignMatrix({})\n{}", self.order, self.to_raw())
    }
}

impl FromStr for SignMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let order: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?
            .parse()
            .map_err(|_| Error::Parse("first line must be the order".into()))?;
        let rows = lines
            .map(|l| -> Result<Vec<i8>> {
                Ok(l.parse::<BinarySeq>()?.into_terms())
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != order {
            return Err(Error::LengthMismatch {
                left: order,
                right: rows.len(),
            });
        }
        Self::from_rows(&rows)
    }
}

/// `H·Hᵀ = order·I`, tested by XOR/popcount on every row pair.
pub fn is_hadamard(m: &SignMatrix) -> bool {
    (0..m.order).all(|i| (i + 1..m.order).all(|k| m.row_dot(i, k) == 0))
}

/// A matrix known to satisfy `H·Hᵀ = order·I`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HadamardMatrix(SignMatrix);

impl HadamardMatrix {
    pub fn order(&self) -> usize {
        self.0.order
    }

    pub fn matrix(&self) -> &SignMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SignMatrix {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

impl TryFrom<SignMatrix> for HadamardMatrix {
    type Error = Error;

    fn try_from(m: SignMatrix) -> Result<Self> {
        if is_hadamard(&m) {
            Ok(Self(m))
        } else {
            Err(Error::NotHadamard)
        }
    }
}

impl FromStr for HadamardMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<SignMatrix>()?.try_into()
    }
}

pub fn transpose(h: &HadamardMatrix) -> HadamardMatrix {
    h.transpose()
}

/// Row `i` is `first_row` cyclically shifted right by `i`.
pub fn circulant(first_row: &BinarySeq) -> SignMatrix {
    let d = first_row.len();
    SignMatrix::from_fn(d, |i, j| first_row.get((j + d - i) % d))
}

/// Goethals–Seidel array on the circulants of `(A;B;C;D)`:
///
/// ```text
///  Z0    Z1R   Z2R   Z3R
/// -Z1R   Z0   -RZ3   RZ2
/// -Z2R   RZ3   Z0   -RZ1
/// -Z3R  -RZ2   RZ1   Z0
/// ```
///
/// `ZR` reverses columns and `RZ` reverses rows; `R` is never built.
pub fn gs_array(q: &BaseSeqQuad) -> Result<SignMatrix> {
    let d = q.m();
    if q.n() != d {
        return Err(Error::Shape(format!(
            "Goethals-Seidel array needs BS(d,d), got BS({d},{})",
            q.n()
        )));
    }
    let seqs = q.seqs();
    let z = |k: usize, i: usize, j: usize| seqs[k].get((j + d - i) % d);
    // (sign, component, reverse columns, reverse rows)
    const LAYOUT: [[(i8, usize, bool, bool); 4]; 4] = [
        [(1, 0, false, false), (1, 1, true, false), (1, 2, true, false), (1, 3, true, false)],
        [(-1, 1, true, false), (1, 0, false, false), (-1, 3, false, true), (1, 2, false, true)],
        [(-1, 2, true, false), (1, 3, false, true), (1, 0, false, false), (-1, 1, false, true)],
        [(-1, 3, true, false), (-1, 2, false, true), (1, 1, false, true), (1, 0, false, false)],
    ];
    Ok(SignMatrix::from_fn(4 * d, |r, c| {
        let (sign, k, col_rev, row_rev) = LAYOUT[r / d][c / d];
        let i = if row_rev { d - 1 - r % d } else { r % d };
        let j = if col_rev { d - 1 - c % d } else { c % d };
        sign * z(k, i, j)
    }))
}

/// Validates the input as `BS(d,d)`, assembles, and checks the result.
pub fn gs_assemble(q: &BaseSeqQuad) -> Result<HadamardMatrix> {
    if q.m() != q.n() || !q.is_base_sequence() {
        return Err(Error::InvalidBs { m: q.m(), n: q.n() });
    }
    let m = gs_array(q)?;
    HadamardMatrix::try_from(m).map_err(|_| Error::PostconditionFailure {
        stage: "gs_assemble",
        detail: format!("array of {q} is not Hadamard"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{hex_decode, hex_table};

    fn b(s: &str) -> BinarySeq {
        s.parse().unwrap()
    }

    #[test]
    fn circulant_small() {
        assert_eq!(circulant(&b("+")).rows(), vec![vec![1]]);
        assert_eq!(
            circulant(&b("+--")).rows(),
            vec![vec![1, -1, -1], vec![-1, 1, -1], vec![-1, -1, 1]]
        );
    }

    #[test]
    fn circulant_of_reverse_is_shifted_transpose() {
        // circ(x')[i][j] = circ(x)ᵀ[i][j+1 mod d]
        let x = b("++-+---+--+");
        let d = x.len();
        let cx = circulant(&x);
        let ct = cx.transpose();
        let crev = circulant(&x.reverse());
        for i in 0..d {
            for j in 0..d {
                assert_eq!(crev.get(i, j), ct.get(i, (j + 1) % d));
            }
        }
    }

    #[test]
    fn gs_of_all_plus_order_four() {
        let q: BaseSeqQuad = "+;+;+;+".parse().unwrap();
        let h = gs_assemble(&q).unwrap();
        assert_eq!(
            h.matrix().rows(),
            vec![
                vec![1, 1, 1, 1],
                vec![-1, 1, -1, 1],
                vec![-1, 1, 1, -1],
                vec![-1, -1, 1, 1]
            ]
        );
    }

    #[test]
    fn gs_rejects_invalid_input() {
        let q: BaseSeqQuad = "++;++;++;++".parse().unwrap();
        assert!(matches!(gs_assemble(&q), Err(Error::InvalidBs { .. })));
        let q: BaseSeqQuad = "++;+-;+;+".parse().unwrap();
        assert!(gs_assemble(&q).is_err());
    }

    #[test]
    fn hadamard_predicate() {
        let h2 = SignMatrix::from_rows(&[vec![1, 1], vec![1, -1]]).unwrap();
        assert!(is_hadamard(&h2));
        let equal_rows = SignMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert!(!is_hadamard(&equal_rows));
        assert!(HadamardMatrix::try_from(equal_rows).is_err());
    }

    #[test]
    fn worked_hex_example_assembles() {
        let q = hex_decode(&"0dc41a77adbf5c8".parse().unwrap());
        let h = gs_assemble(&q).unwrap();
        assert_eq!(h.order(), 60);
        assert!(is_hadamard(h.transpose().matrix()));
        assert_eq!(h.transpose().transpose(), h);
    }

    #[test]
    fn every_table_entry_assembles() {
        for id in 2..=6 {
            for x in hex_table(id).unwrap() {
                assert!(gs_assemble(&hex_decode(&x)).is_ok(), "table {id}: {x}");
            }
        }
    }

    #[test]
    fn raw_round_trip() {
        let q = hex_decode(&"a73b4f89f643eb7".parse().unwrap());
        let h = gs_assemble(&q).unwrap();
        let text = h.matrix().to_raw();
        assert!(text.starts_with("60\n"));
        assert_eq!(text.parse::<HadamardMatrix>().unwrap(), h);
        assert!("2\n++\n++\n".parse::<HadamardMatrix>().is_err());
        assert!("3\n++\n+-\n".parse::<SignMatrix>().is_err());
    }

    #[test]
    fn wide_matrices_pack_across_words() {
        let m = SignMatrix::from_fn(130, |i, j| if (i * 7 + j * 3) % 5 == 0 { 1 } else { -1 });
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.get(129, 128), if (129 * 7 + 128 * 3) % 5 == 0 { 1 } else { -1 });
        assert_eq!(m.row_dot(3, 3), 130);
    }
}
