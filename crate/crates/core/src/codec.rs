//! Compact encodings of base sequences: the quad code for `BS(n+1,n)`, the
//! 15-digit hex code for `BS(15,15)`, and loaders for the embedded tables.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::designs::BaseSeqQuad;
use crate::error::{Error, Result};
use crate::seq::BinarySeq;

type Quad = [[i8; 2]; 2];

/// `[[a_i, a_j], [b_i, b_j]]` for labels `1'..8'`.
const PRIMED: [Quad; 8] = [
    [[-1, 1], [1, 1]],
    [[1, -1], [1, 1]],
    [[1, 1], [1, -1]],
    [[1, 1], [-1, 1]],
    [[1, -1], [-1, -1]],
    [[-1, 1], [-1, -1]],
    [[-1, -1], [-1, 1]],
    [[-1, -1], [1, -1]],
];

/// `[[a_i, a_j], [b_i, b_j]]` for labels `1..8`.
const PLAIN: [Quad; 8] = [
    [[1, 1], [1, 1]],
    [[1, 1], [-1, -1]],
    [[-1, 1], [-1, 1]],
    [[1, -1], [-1, 1]],
    [[-1, 1], [1, -1]],
    [[1, -1], [1, -1]],
    [[-1, -1], [1, 1]],
    [[-1, -1], [-1, -1]],
];

/// `(a, b)` for central-column labels `0..3`.
const CENTRAL: [[i8; 2]; 4] = [[1, 1], [1, -1], [-1, 1], [-1, -1]];

/// One symbol of a quad code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuadLabel {
    /// `1'..=8'`.
    Primed(u8),
    /// `1..=8`.
    Plain(u8),
    /// `0..=3`.
    Central(u8),
}

impl QuadLabel {
    fn pattern(self) -> Result<Quad> {
        match self {
            QuadLabel::Primed(k @ 1..=8) => Ok(PRIMED[k as usize - 1]),
            QuadLabel::Plain(k @ 1..=8) => Ok(PLAIN[k as usize - 1]),
            other => Err(Error::InvalidQuadLabel(format!("{other:?} is not a quad"))),
        }
    }

    fn column(self) -> Result<[i8; 2]> {
        match self {
            QuadLabel::Central(k @ 0..=3) => Ok(CENTRAL[k as usize]),
            other => Err(Error::InvalidQuadLabel(format!(
                "{other:?} is not a central column"
            ))),
        }
    }
}

/// How the primed label `3'` is written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderMode {
    /// `0` stands for `3'`, other primed labels drop the prime.
    Table,
    /// Every primed label carries its prime.
    Strict,
}

/// Quad code of an element of `BS(n+1,n)`.
///
/// With `n = 2m`, `(A;B)` has `m` quads and a central column and `(C;D)` has
/// `m` quads. With `n = 2m+1`, `(A;B)` has `m+1` quads and `(C;D)` has `m`
/// quads and a central column.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadCode {
    ab: Vec<QuadLabel>,
    cd: Vec<QuadLabel>,
    n: usize,
}

fn layout(n: usize) -> (usize, bool, usize, bool) {
    ((n + 1) / 2, n % 2 == 0, n / 2, n % 2 == 1)
}

/// `n` implied by the symbol counts, if any.
pub fn infer_n(ab_len: usize, cd_len: usize) -> Option<usize> {
    if ab_len == cd_len + 1 {
        Some(2 * cd_len)
    } else if ab_len == cd_len && cd_len > 0 {
        Some(2 * cd_len - 1)
    } else {
        None
    }
}

impl QuadCode {
    pub fn new(ab: Vec<QuadLabel>, cd: Vec<QuadLabel>, n: usize) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedCode {
            code: format!("{ab:?};{cd:?}"),
            reason,
        };
        if n == 0 {
            return Err(malformed("n must be positive".into()));
        }
        let (ab_quads, ab_central, cd_quads, cd_central) = layout(n);
        if ab.len() != ab_quads + ab_central as usize || cd.len() != cd_quads + cd_central as usize
        {
            return Err(malformed(format!(
                "symbol counts {} and {} do not fit n = {n}",
                ab.len(),
                cd.len()
            )));
        }
        for (i, l) in ab.iter().enumerate() {
            let ok = match l {
                QuadLabel::Primed(k) => i == 0 && i < ab_quads && (1..=8).contains(k),
                QuadLabel::Plain(k) => i > 0 && i < ab_quads && (1..=8).contains(k),
                QuadLabel::Central(k) => i == ab_quads && ab_central && *k <= 3,
            };
            if !ok {
                return Err(Error::InvalidQuadLabel(format!("{l:?} at (A;B) position {}", i + 1)));
            }
        }
        for (i, l) in cd.iter().enumerate() {
            let ok = match l {
                QuadLabel::Primed(_) => false,
                QuadLabel::Plain(k) => i < cd_quads && (1..=8).contains(k),
                QuadLabel::Central(k) => i == cd_quads && cd_central && *k <= 3,
            };
            if !ok {
                return Err(Error::InvalidQuadLabel(format!("{l:?} at (C;D) position {}", i + 1)));
            }
        }
        Ok(Self { ab, cd, n })
    }

    /// Parses with an explicit `n` instead of inferring it from the symbol counts.
    pub fn parse_with_n(s: &str, n: usize) -> Result<Self> {
        let (ab, cd) = split_code(s)?;
        Self::from_symbols(s, &ab, &cd, n)
    }

    fn from_symbols(src: &str, ab: &[(char, bool)], cd: &[(char, bool)], n: usize) -> Result<Self> {
        let (ab_quads, _, cd_quads, _) = layout(n);
        let digit = |c: char| -> Result<u8> {
            c.to_digit(10)
                .map(|d| d as u8)
                .ok_or_else(|| Error::InvalidQuadLabel(c.to_string()))
        };
        let mut ab_labels = Vec::with_capacity(ab.len());
        for (i, &(c, primed)) in ab.iter().enumerate() {
            let d = digit(c)?;
            let label = if i == 0 && i < ab_quads {
                QuadLabel::Primed(if d == 0 && !primed { 3 } else { d })
            } else if primed {
                return Err(Error::InvalidQuadLabel(format!("{c}' at (A;B) position {}", i + 1)));
            } else if i < ab_quads {
                QuadLabel::Plain(d)
            } else {
                QuadLabel::Central(d)
            };
            ab_labels.push(label);
        }
        let mut cd_labels = Vec::with_capacity(cd.len());
        for (i, &(c, primed)) in cd.iter().enumerate() {
            if primed {
                return Err(Error::InvalidQuadLabel(format!("{c}' at (C;D) position {}", i + 1)));
            }
            let d = digit(c)?;
            cd_labels.push(if i < cd_quads {
                QuadLabel::Plain(d)
            } else {
                QuadLabel::Central(d)
            });
        }
        Self::new(ab_labels, cd_labels, n).map_err(|e| match e {
            Error::MalformedCode { reason, .. } => Error::MalformedCode {
                code: src.to_string(),
                reason,
            },
            other => other,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ab(&self) -> &[QuadLabel] {
        &self.ab
    }

    pub fn cd(&self) -> &[QuadLabel] {
        &self.cd
    }

    pub fn render(&self, mode: RenderMode) -> String {
        let sym = |l: &QuadLabel| match (l, mode) {
            (QuadLabel::Primed(3), RenderMode::Table) => "0".to_string(),
            (QuadLabel::Primed(k), RenderMode::Table) => k.to_string(),
            (QuadLabel::Primed(k), RenderMode::Strict) => format!("{k}'"),
            (QuadLabel::Plain(k) | QuadLabel::Central(k), _) => k.to_string(),
        };
        let ab: String = self.ab.iter().map(sym).collect();
        let cd: String = self.cd.iter().map(sym).collect();
        format!("{ab}; {cd}")
    }
}

fn split_code(s: &str) -> Result<(Vec<(char, bool)>, Vec<(char, bool)>)> {
    let malformed = |reason: &str| Error::MalformedCode {
        code: s.to_string(),
        reason: reason.to_string(),
    };
    let mut parts = s.split(';');
    let (Some(ab), Some(cd), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(malformed("expected exactly one ';'"));
    };
    let symbols = |half: &str| -> Result<Vec<(char, bool)>> {
        let mut out: Vec<(char, bool)> = Vec::new();
        for c in half.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '\'' => match out.last_mut() {
                    Some((_, primed @ false)) => *primed = true,
                    _ => return Err(malformed("misplaced prime")),
                },
                '0'..='9' => out.push((c, false)),
                _ => return Err(Error::InvalidQuadLabel(c.to_string())),
            }
        }
        Ok(out)
    };
    Ok((symbols(ab)?, symbols(cd)?))
}

impl FromStr for QuadCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (ab, cd) = split_code(s)?;
        let n = infer_n(ab.len(), cd.len()).ok_or_else(|| Error::MalformedCode {
            code: s.to_string(),
            reason: format!("symbol counts {} and {} fit no n", ab.len(), cd.len()),
        })?;
        Self::from_symbols(s, &ab, &cd, n)
    }
}

impl fmt::Display for QuadCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(RenderMode::Table))
    }
}

/// Expands a quad code into its quadruple. The norm condition is not checked.
pub fn quad_decode(code: &QuadCode) -> Result<BaseSeqQuad> {
    let n = code.n;
    let len_ab = n + 1;
    let (ab_quads, _, cd_quads, _) = layout(n);
    let mut a = vec![0i8; len_ab];
    let mut b = vec![0i8; len_ab];
    for (i, l) in code.ab.iter().enumerate() {
        if i < ab_quads {
            let [[ai, aj], [bi, bj]] = l.pattern()?;
            let j = len_ab - 1 - i;
            (a[i], a[j], b[i], b[j]) = (ai, aj, bi, bj);
        } else {
            [a[i], b[i]] = l.column()?;
        }
    }
    let mut c = vec![0i8; n];
    let mut d = vec![0i8; n];
    for (i, l) in code.cd.iter().enumerate() {
        if i < cd_quads {
            let [[ci, cj], [di, dj]] = l.pattern()?;
            let j = n - 1 - i;
            (c[i], c[j], d[i], d[j]) = (ci, cj, di, dj);
        } else {
            [c[i], d[i]] = l.column()?;
        }
    }
    BaseSeqQuad::new(
        BinarySeq::new(a)?,
        BinarySeq::new(b)?,
        BinarySeq::new(c)?,
        BinarySeq::new(d)?,
    )
}

fn label_of(pattern: Quad, primed: bool) -> Option<QuadLabel> {
    let table = if primed { &PRIMED } else { &PLAIN };
    let k = table.iter().position(|p| *p == pattern)? as u8 + 1;
    Some(if primed {
        QuadLabel::Primed(k)
    } else {
        QuadLabel::Plain(k)
    })
}

fn column_label(column: [i8; 2]) -> QuadLabel {
    QuadLabel::Central(CENTRAL.iter().position(|c| *c == column).unwrap() as u8)
}

/// Inverse of [`quad_decode`]. Fails when a quad falls outside its alphabet,
/// which cannot happen for elements of `BS(n+1,n)`.
pub fn quad_encode(q: &BaseSeqQuad) -> Result<QuadCode> {
    let n = q.n();
    if q.m() != n + 1 {
        return Err(Error::Shape(format!(
            "quad code needs BS(n+1,n), got BS({},{n})",
            q.m()
        )));
    }
    let (ab_quads, ab_central, cd_quads, cd_central) = layout(n);
    let (a, b, c, d) = (q.a().terms(), q.b().terms(), q.c().terms(), q.d().terms());
    let mut ab = Vec::new();
    for i in 0..ab_quads {
        let j = n - i;
        let pattern = [[a[i], a[j]], [b[i], b[j]]];
        ab.push(label_of(pattern, i == 0).ok_or_else(|| Error::MalformedCode {
            code: q.to_string(),
            reason: format!("(A;B) quad {} is outside its alphabet", i + 1),
        })?);
    }
    if ab_central {
        ab.push(column_label([a[ab_quads], b[ab_quads]]));
    }
    let mut cd = Vec::new();
    for i in 0..cd_quads {
        let j = n - 1 - i;
        cd.push(label_of([[c[i], c[j]], [d[i], d[j]]], false).ok_or_else(|| {
            Error::MalformedCode {
                code: q.to_string(),
                reason: format!("(C;D) quad {} is outside its alphabet", i + 1),
            }
        })?);
    }
    if cd_central {
        cd.push(column_label([c[cd_quads], d[cd_quads]]));
    }
    QuadCode::new(ab, cd, n)
}

/// The first `(A;B)` quad sums to 2 mod 4 and every other quad to 0 mod 4.
pub fn kks_invariant_holds(q: &BaseSeqQuad) -> Result<bool> {
    let n = q.n();
    if q.m() != n + 1 {
        return Err(Error::Shape(format!("expected BS(n+1,n), got BS({},{n})", q.m())));
    }
    let sum = |x: &[i8], y: &[i8], i: usize, j: usize| {
        (x[i] as i32 + x[j] as i32 + y[i] as i32 + y[j] as i32).rem_euclid(4)
    };
    let (a, b, c, d) = (q.a().terms(), q.b().terms(), q.c().terms(), q.d().terms());
    let ab_ok = (0..(n + 1) / 2).all(|i| sum(a, b, i, n - i) == if i == 0 { 2 } else { 0 });
    let cd_ok = (0..n / 2).all(|i| sum(c, d, i, n - 1 - i) == 0);
    Ok(ab_ok && cd_ok)
}

pub const HEX_DIGITS: usize = 15;
const HEX_SEQ_LEN: usize = 15;

/// Fifteen lowercase hex digits packing a `BS(15,15)` quadruple.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HexCode(String);

impl HexCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn bits(&self) -> u64 {
        u64::from_str_radix(&self.0, 16).expect("validated at construction")
    }
}

impl FromStr for HexCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != HEX_DIGITS || !s.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(Error::MalformedHex(s.to_string()));
        }
        Ok(Self(s.to_ascii_lowercase()))
    }
}

impl fmt::Display for HexCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// 60 bits, most significant first, split into `A, B, C, D`; bit 1 is `+1`.
pub fn hex_decode(x: &HexCode) -> BaseSeqQuad {
    let bits = x.bits();
    let total = HEX_DIGITS * 4;
    let seq = |k: usize| {
        BinarySeq::from_terms_unchecked(
            (0..HEX_SEQ_LEN)
                .map(|i| {
                    let pos = total - 1 - (k * HEX_SEQ_LEN + i);
                    if (bits >> pos) & 1 == 1 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        )
    };
    BaseSeqQuad::from_array([seq(0), seq(1), seq(2), seq(3)]).expect("fixed shape")
}

pub fn hex_encode(q: &BaseSeqQuad) -> Result<HexCode> {
    if q.m() != HEX_SEQ_LEN || q.n() != HEX_SEQ_LEN {
        return Err(Error::Shape(format!(
            "hex code needs BS(15,15), got BS({},{})",
            q.m(),
            q.n()
        )));
    }
    let mut bits = 0u64;
    for s in q.seqs() {
        for &t in s.terms() {
            bits = (bits << 1) | (t == 1) as u64;
        }
    }
    Ok(HexCode(format!("{bits:015x}")))
}

/// A row of the class summary table for `BS(8,7)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassRow {
    pub index: usize,
    pub code: QuadCode,
    pub orbit_size: usize,
    pub hadamard_classes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Table {
    Classes(Vec<ClassRow>),
    Hex(Vec<HexCode>),
}

const TABLE_SOURCES: [&str; 6] = [
    include_str!("../../../tables/table1.txt"),
    include_str!("../../../tables/table2.txt"),
    include_str!("../../../tables/table3.txt"),
    include_str!("../../../tables/table4.txt"),
    include_str!("../../../tables/table5.txt"),
    include_str!("../../../tables/table6.txt"),
];

/// Row counts of the hex tables 2 through 6.
pub const HEX_TABLE_SIZES: [usize; 5] = [558, 192, 208, 64, 64];

/// Checks the `# sha256:` header against the data lines and returns them.
pub fn checked_data_lines(text: &str) -> Result<Vec<&str>> {
    let mut digest = None;
    let mut entries = None;
    let mut data = Vec::new();
    for line in text.lines() {
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(h) = comment.strip_prefix("sha256:") {
                digest = Some(h.trim().to_string());
            } else if let Some(k) = comment.strip_prefix("entries:") {
                entries = k.trim().parse::<usize>().ok();
            }
        } else if !line.trim().is_empty() {
            data.push(line);
        }
    }
    let expected = digest.ok_or_else(|| Error::CorruptData("missing sha256 header".into()))?;
    let mut hasher = Sha256::new();
    for line in &data {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    let actual = hex::encode(hasher.finalize());
    if actual != expected {
        return Err(Error::CorruptData(format!(
            "checksum mismatch: header {expected}, data {actual}"
        )));
    }
    if let Some(k) = entries {
        if k != data.len() {
            return Err(Error::CorruptData(format!(
                "header promises {k} entries, found {}",
                data.len()
            )));
        }
    }
    Ok(data)
}

fn parse_class_rows(lines: &[&str]) -> Result<Vec<ClassRow>> {
    lines
        .iter()
        .map(|line| {
            let fields: Vec<&str> = line.split('\t').collect();
            let [index, code, orbit, had] = fields[..] else {
                return Err(Error::CorruptData(format!("bad class row {line:?}")));
            };
            let num = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::CorruptData(format!("bad number in {line:?}")))
            };
            Ok(ClassRow {
                index: num(index)?,
                code: code.parse()?,
                orbit_size: num(orbit)?,
                hadamard_classes: num(had)?,
            })
        })
        .collect()
}

pub fn parse_table(id: usize, text: &str) -> Result<Table> {
    let lines = checked_data_lines(text)?;
    if id == 1 {
        Ok(Table::Classes(parse_class_rows(&lines)?))
    } else {
        Ok(Table::Hex(
            lines.iter().map(|l| l.parse()).collect::<Result<_>>()?,
        ))
    }
}

pub fn table_source(id: usize) -> Result<&'static str> {
    (1..=6)
        .contains(&id)
        .then(|| TABLE_SOURCES[id - 1])
        .ok_or_else(|| Error::Parse(format!("no table {id}; tables are numbered 1 to 6")))
}

pub fn load_table(id: usize) -> Result<Table> {
    parse_table(id, table_source(id)?)
}

pub fn class_table() -> Result<Vec<ClassRow>> {
    match load_table(1)? {
        Table::Classes(rows) => Ok(rows),
        Table::Hex(_) => unreachable!("table 1 holds class rows"),
    }
}

/// Tables 2 through 6.
pub fn hex_table(id: usize) -> Result<Vec<HexCode>> {
    match load_table(id)? {
        Table::Hex(codes) => Ok(codes),
        Table::Classes(_) => Err(Error::Parse("table 1 is not a hex table".into())),
    }
}
