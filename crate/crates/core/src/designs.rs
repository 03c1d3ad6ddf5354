//! Base sequences, normal and near-normal sequences, T-sequences, the
//! structural maps between them, exhaustive enumeration, and the group
//! action whose orbits are the equivalence classes of `BS(n+1, n)`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::seq::{autocorr_terms, BinarySeq, TernarySeq};

/// A quadruple `(A;B;C;D)` with `|A| = |B| = m` and `|C| = |D| = n`.
///
/// Construction only checks the shape. Use [`BaseSeqQuad::is_base_sequence`]
/// or [`validate_bs`] for the norm condition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseSeqQuad {
    a: BinarySeq,
    b: BinarySeq,
    c: BinarySeq,
    d: BinarySeq,
}

impl BaseSeqQuad {
    pub fn new(a: BinarySeq, b: BinarySeq, c: BinarySeq, d: BinarySeq) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        if c.len() != d.len() {
            return Err(Error::LengthMismatch {
                left: c.len(),
                right: d.len(),
            });
        }
        if a.is_empty() || c.is_empty() {
            return Err(Error::Shape("sequences must be non-empty".into()));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn from_array(seqs: [BinarySeq; 4]) -> Result<Self> {
        let [a, b, c, d] = seqs;
        Self::new(a, b, c, d)
    }

    pub fn a(&self) -> &BinarySeq {
        &self.a
    }

    pub fn b(&self) -> &BinarySeq {
        &self.b
    }

    pub fn c(&self) -> &BinarySeq {
        &self.c
    }

    pub fn d(&self) -> &BinarySeq {
        &self.d
    }

    pub fn seqs(&self) -> [&BinarySeq; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn into_array(self) -> [BinarySeq; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Sum of the four norms at every shift.
    pub fn norm_sum(&self) -> Vec<i32> {
        let width = self.m().max(self.n());
        let mut total = vec![0i32; width];
        for s in self.seqs() {
            for (k, r) in autocorr_terms(s.terms()).into_iter().enumerate() {
                total[k] += r;
            }
        }
        total
    }

    /// `N(A)+N(B)+N(C)+N(D) = 2(m+n)`.
    pub fn is_base_sequence(&self) -> bool {
        let total = self.norm_sum();
        total[0] == 2 * (self.m() + self.n()) as i32 && total[1..].iter().all(|&r| r == 0)
    }

    fn map_each(&self, f: impl Fn(usize, &BinarySeq) -> BinarySeq) -> Self {
        Self {
            a: f(0, &self.a),
            b: f(1, &self.b),
            c: f(2, &self.c),
            d: f(3, &self.d),
        }
    }
}

impl fmt::Display for BaseSeqQuad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{};{};{}", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for BaseSeqQuad {
    type Err = Error;

    /// Accepts the `A;B;C;D` literal form, or a quad code `AB;CD`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains(['+', '-']) {
            let parts: Vec<&str> = s.split(';').collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!(
                    "expected four ';'-separated sequences, got {}",
                    parts.len()
                )));
            }
            let seqs = [
                parts[0].parse()?,
                parts[1].parse()?,
                parts[2].parse()?,
                parts[3].parse()?,
            ];
            Self::from_array(seqs)
        } else {
            let code: crate::codec::QuadCode = s.parse()?;
            crate::codec::quad_decode(&code)
        }
    }
}

/// One quadruple per line in `A;B;C;D` form.
pub fn write_quads<'a>(quads: impl IntoIterator<Item = &'a BaseSeqQuad>) -> String {
    let mut out = String::new();
    for q in quads {
        out.push_str(&q.to_string());
        out.push('\n');
    }
    out
}

/// Parses one quadruple per line; blank lines and `#` comments are skipped.
pub fn parse_quads(text: &str) -> Result<Vec<BaseSeqQuad>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

/// Checks shape `(m,m,n,n)` and the norm condition.
pub fn validate_bs(q: &BaseSeqQuad, m: usize, n: usize) -> Result<bool> {
    if q.m() != m {
        return Err(Error::LengthMismatch {
            left: q.m(),
            right: m,
        });
    }
    if q.n() != n {
        return Err(Error::LengthMismatch {
            left: q.n(),
            right: n,
        });
    }
    Ok(q.is_base_sequence())
}

fn require_bs_n1(q: &BaseSeqQuad) -> Result<()> {
    if q.m() != q.n() + 1 {
        return Err(Error::Shape(format!(
            "expected BS(n+1,n), got BS({},{})",
            q.m(),
            q.n()
        )));
    }
    Ok(())
}

/// `b_i = a_i` for all `i <= n`.
pub fn is_normal(q: &BaseSeqQuad) -> Result<bool> {
    require_bs_n1(q)?;
    Ok((0..q.n()).all(|i| q.a.get(i) == q.b.get(i)))
}

/// `b_i = (-1)^(i-1) a_i` for all `i <= n`.
pub fn is_near_normal(q: &BaseSeqQuad) -> Result<bool> {
    require_bs_n1(q)?;
    Ok((0..q.n()).all(|i| {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        q.b.get(i) == sign * q.a.get(i)
    }))
}

/// `(G, H) = ((C+D)/2, (C-D)/2)`.
fn half_sum_diff(c: &BinarySeq, d: &BinarySeq) -> Result<(TernarySeq, TernarySeq)> {
    let c = c.to_ternary();
    let d = d.to_ternary();
    Ok((c.widening_add(&d)?.halve()?, c.widening_sub(&d)?.halve()?))
}

fn sum_diff_binary(g: &TernarySeq, h: &TernarySeq) -> Result<(BinarySeq, BinarySeq)> {
    Ok((
        g.checked_add(h)?.to_binary()?,
        g.checked_sub(h)?.to_binary()?,
    ))
}

/// Normal sequences written as `(F,s; F,-s; G+H; G-H)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalDecomposition {
    pub f: BinarySeq,
    pub g: TernarySeq,
    pub h: TernarySeq,
    pub tail_sign: i8,
}

impl NormalDecomposition {
    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn reassemble(&self) -> Result<BaseSeqQuad> {
        let tail = BinarySeq::new(vec![self.tail_sign])?;
        let a = BinarySeq::concat(&[&self.f, &tail]);
        let b = BinarySeq::concat(&[&self.f, &tail.negate()]);
        let (c, d) = sum_diff_binary(&self.g, &self.h)?;
        BaseSeqQuad::new(a, b, c, d)
    }
}

/// Near-normal sequences written as `((Y,+)/X; (Y,-)/(-X); G+H; G-H)`
/// with `|X| = |Y| = n/2` and `|G| = |H| = n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NearNormalDecomposition {
    pub x: BinarySeq,
    pub y: BinarySeq,
    pub g: TernarySeq,
    pub h: TernarySeq,
}

impl NearNormalDecomposition {
    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn reassemble(&self) -> Result<BaseSeqQuad> {
        let plus = BinarySeq::all_plus(1);
        let a = BinarySeq::interleave(&BinarySeq::concat(&[&self.y, &plus]), &self.x)?;
        let b = BinarySeq::interleave(
            &BinarySeq::concat(&[&self.y, &plus.negate()]),
            &self.x.negate(),
        )?;
        let (c, d) = sum_diff_binary(&self.g, &self.h)?;
        BaseSeqQuad::new(a, b, c, d)
    }
}

pub fn ns_decompose(q: &BaseSeqQuad) -> Result<NormalDecomposition> {
    if !is_normal(q)? {
        return Err(Error::NotNormal);
    }
    let n = q.n();
    let f = BinarySeq::new(q.a.terms()[..n].to_vec())?;
    let tail_sign = q.a.get(n);
    if q.b.get(n) != -tail_sign {
        return Err(Error::NotNormal);
    }
    let (g, h) = half_sum_diff(&q.c, &q.d)?;
    Ok(NormalDecomposition { f, g, h, tail_sign })
}

pub fn nn_decompose(q: &BaseSeqQuad) -> Result<NearNormalDecomposition> {
    if !is_near_normal(q)? {
        return Err(Error::NotNearNormal("b_i != (-1)^(i-1) a_i"));
    }
    let n = q.n();
    if n % 2 != 0 {
        return Err(Error::NotNearNormal("n must be even"));
    }
    if q.a.get(n) != 1 || q.b.get(n) != -1 {
        return Err(Error::NotNearNormal(
            "last terms are not (+,-) as required by (Y,+)/X; (Y,-)/(-X)",
        ));
    }
    let (ya, x) = q.a.deinterleave()?;
    let y = BinarySeq::new(ya.terms()[..n / 2].to_vec())?;
    let (g, h) = half_sum_diff(&q.c, &q.d)?;
    Ok(NearNormalDecomposition { x, y, g, h })
}

/// Four pairwise disjoint ternary sequences of common length.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TSeqQuad {
    seqs: [TernarySeq; 4],
}

impl TSeqQuad {
    pub fn new(seqs: [TernarySeq; 4]) -> Result<Self> {
        let len = seqs[0].len();
        if let Some(s) = seqs.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch {
                left: len,
                right: s.len(),
            });
        }
        Ok(Self { seqs })
    }

    pub fn seqs(&self) -> &[TernarySeq; 4] {
        &self.seqs
    }

    pub fn len(&self) -> usize {
        self.seqs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exactly one nonzero per position and all off-peak norms cancel.
    pub fn is_valid(&self) -> bool {
        let len = self.len();
        let one_per_position =
            (0..len).all(|i| self.seqs.iter().filter(|s| s.get(i) != 0).count() == 1);
        if !one_per_position {
            return false;
        }
        let mut total = vec![0i32; len];
        for s in &self.seqs {
            for (k, r) in autocorr_terms(s.terms()).into_iter().enumerate() {
                total[k] += r;
            }
        }
        total[0] == len as i32 && total[1..].iter().all(|&r| r == 0)
    }
}

pub fn validate_ts(t: &TSeqQuad) -> bool {
    t.is_valid()
}

/// `(A;B;C;D) -> (A+B+C+D; A+B-C-D; A-B+C-D; A-B-C+D)`.
pub fn ts_to_bs(t: &TSeqQuad) -> Result<BaseSeqQuad> {
    if !t.is_valid() {
        return Err(Error::InvalidTs);
    }
    let [a, b, c, d] = &t.seqs;
    let combine = |sb: i8, sc: i8, sd: i8| -> Result<BinarySeq> {
        let terms = (0..t.len())
            .map(|i| a.get(i) + sb * b.get(i) + sc * c.get(i) + sd * d.get(i))
            .collect();
        BinarySeq::new(terms)
    };
    BaseSeqQuad::new(
        combine(1, 1, 1)?,
        combine(1, -1, -1)?,
        combine(-1, 1, -1)?,
        combine(-1, -1, 1)?,
    )
}

/// `(Q,R,S,T) -> ((Q+R)/2, (Q-R)/2, (S+T)/2, (S-T)/2)` for rows whose
/// supports pair up as `supp Q = supp R`, `supp S = supp T`, partitioning
/// every position.
pub fn pairs_to_ts(
    q: &TernarySeq,
    r: &TernarySeq,
    s: &TernarySeq,
    t: &TernarySeq,
) -> Result<TSeqQuad> {
    let len = q.len();
    for x in [r, s, t] {
        if x.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: x.len(),
            });
        }
    }
    for i in 0..len {
        let qr = (q.get(i) != 0, r.get(i) != 0);
        let st = (s.get(i) != 0, t.get(i) != 0);
        let ok = matches!((qr, st), ((true, true), (false, false)) | ((false, false), (true, true)));
        if !ok {
            return Err(Error::SupportMismatch(format!(
                "position {}: Q,R,S,T = {},{},{},{}",
                i + 1,
                q.get(i),
                r.get(i),
                s.get(i),
                t.get(i)
            )));
        }
    }
    TSeqQuad::new([
        q.widening_add(r)?.halve()?,
        q.widening_sub(r)?.halve()?,
        s.widening_add(t)?.halve()?,
        s.widening_sub(t)?.halve()?,
    ])
}

/// `BS(m,n) -> BS(m+n,m+n)`, `(A;B;C;D) -> (A,C; A,-C; B,D; B,-D)`.
pub fn bs_fold(q: &BaseSeqQuad) -> Result<BaseSeqQuad> {
    if !q.is_base_sequence() {
        return Err(Error::InvalidBs { m: q.m(), n: q.n() });
    }
    BaseSeqQuad::new(
        BinarySeq::concat(&[&q.a, &q.c]),
        BinarySeq::concat(&[&q.a, &q.c.negate()]),
        BinarySeq::concat(&[&q.b, &q.d]),
        BinarySeq::concat(&[&q.b, &q.d.negate()]),
    )
}

/// Reorders the components: output component `i` is input component `perm[i]`.
pub fn quad_permute(q: &BaseSeqQuad, perm: [usize; 4]) -> Result<BaseSeqQuad> {
    let mut seen = [false; 4];
    for &p in &perm {
        if p > 3 || seen[p] {
            return Err(Error::Shape(format!("{perm:?} is not a permutation of 0..4")));
        }
        seen[p] = true;
    }
    let src = q.seqs();
    let out = perm.map(|p| src[p].clone());
    if out[0].len() != out[1].len() || out[2].len() != out[3].len() {
        return Err(Error::Shape(format!(
            "permutation {perm:?} breaks the (m,m,n,n) shape of BS({},{})",
            q.m(),
            q.n()
        )));
    }
    BaseSeqQuad::from_array(out)
}

/// The twelve even permutations of four components.
pub fn even_permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(12);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (0..i).all(|j| p[i] != p[j]));
                    if distinct && permutation_parity(p) == 0 {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// 0 for even, 1 for odd.
pub fn permutation_parity(p: [usize; 4]) -> usize {
    let mut inversions = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2
}

fn bits_to_seq(bits: u32, len: usize) -> BinarySeq {
    BinarySeq::from_terms_unchecked(
        (0..len)
            .map(|i| if (bits >> i) & 1 == 1 { 1 } else { -1 })
            .collect(),
    )
}

fn bits_autocorr(bits: u32, len: usize, out: &mut [i32]) {
    let terms: Vec<i8> = (0..len)
        .map(|i| if (bits >> i) & 1 == 1 { 1 } else { -1 })
        .collect();
    for (k, r) in autocorr_terms(&terms).into_iter().enumerate() {
        out[k] += r;
    }
}

const MAX_SHIFTS: usize = 32;

/// Every element of `BS(m,n)`, sorted.
///
/// Meet in the middle: `(A,B)` pairs are bucketed by their joint
/// autocorrelation at shifts `1..`, then each `(C,D)` pair looks up the
/// negation of its own tail.
pub fn enumerate_bs(m: usize, n: usize) -> Result<Vec<BaseSeqQuad>> {
    if m == 0 || n == 0 {
        return Err(Error::Shape("lengths must be positive".into()));
    }
    if 2 * (m + n) > 32 {
        return Err(Error::TooLarge { m, n });
    }
    let width = m.max(n);
    let key_of = |acs: &[i32], negate: bool| -> [i8; MAX_SHIFTS] {
        let mut key = [0i8; MAX_SHIFTS];
        for s in 1..width {
            let v = acs[s] as i8;
            key[s] = if negate { -v } else { v };
        }
        key
    };

    let mut buckets: HashMap<[i8; MAX_SHIFTS], Vec<(u32, u32)>> = HashMap::new();
    let mut acs = vec![0i32; width];
    for a in 0..(1u32 << m) {
        for b in 0..(1u32 << m) {
            acs.iter_mut().for_each(|x| *x = 0);
            bits_autocorr(a, m, &mut acs);
            bits_autocorr(b, m, &mut acs);
            buckets.entry(key_of(&acs, false)).or_default().push((a, b));
        }
    }

    let mut out = Vec::new();
    for c in 0..(1u32 << n) {
        for d in 0..(1u32 << n) {
            acs.iter_mut().for_each(|x| *x = 0);
            bits_autocorr(c, n, &mut acs);
            bits_autocorr(d, n, &mut acs);
            if let Some(pairs) = buckets.get(&key_of(&acs, true)) {
                for &(a, b) in pairs {
                    out.push(BaseSeqQuad {
                        a: bits_to_seq(a, m),
                        b: bits_to_seq(b, m),
                        c: bits_to_seq(c, n),
                        d: bits_to_seq(d, n),
                    });
                }
            }
        }
    }
    out.sort();
    debug_assert!(out.iter().all(BaseSeqQuad::is_base_sequence));
    Ok(out)
}

/// The whole set `NS(n)`, filtered out of `BS(n+1,n)`.
pub fn normal_set(n: usize) -> Result<Vec<BaseSeqQuad>> {
    let all = enumerate_bs(n + 1, n)?;
    let mut out = Vec::new();
    for q in all {
        if is_normal(&q)? {
            out.push(q);
        }
    }
    Ok(out)
}

/// The whole set `NN(n)`, filtered out of `BS(n+1,n)`.
pub fn near_normal_set(n: usize) -> Result<Vec<BaseSeqQuad>> {
    let all = enumerate_bs(n + 1, n)?;
    let mut out = Vec::new();
    for q in all {
        if is_near_normal(&q)? {
            out.push(q);
        }
    }
    Ok(out)
}

/// Generators of the group acting on `BS(n+1,n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GbsGenerator {
    /// Negate component 0..4.
    Negate(usize),
    /// Reverse component 0..4.
    Reverse(usize),
    SwapAB,
    SwapCD,
    /// Multiply term `i` of all four sequences by `(-1)^(i-1)`.
    AlternateAll,
    /// With `G = (C+D)/2`, `H = (C-D)/2`, replace `(C;D)` by `(G+H'; G-H')`.
    /// The supports of `G` and `H` are symmetric in every quad of `(C;D)`,
    /// so `H'` stays disjoint from `G`.
    QuadReverseCD,
}

impl GbsGenerator {
    pub fn apply(self, q: &BaseSeqQuad) -> Result<BaseSeqQuad> {
        Ok(match self {
            GbsGenerator::Negate(k) => q.map_each(|i, s| if i == k { s.negate() } else { s.clone() }),
            GbsGenerator::Reverse(k) => {
                q.map_each(|i, s| if i == k { s.reverse() } else { s.clone() })
            }
            GbsGenerator::SwapAB => BaseSeqQuad {
                a: q.b.clone(),
                b: q.a.clone(),
                c: q.c.clone(),
                d: q.d.clone(),
            },
            GbsGenerator::SwapCD => BaseSeqQuad {
                a: q.a.clone(),
                b: q.b.clone(),
                c: q.d.clone(),
                d: q.c.clone(),
            },
            GbsGenerator::AlternateAll => q.map_each(|_, s| s.alternate()),
            GbsGenerator::QuadReverseCD => {
                let (g, h) = half_sum_diff(&q.c, &q.d)?;
                let (c, d) = sum_diff_binary(&g, &h.reverse()).map_err(|_| {
                    Error::PostconditionFailure {
                        stage: "gbs quad reversal",
                        detail: format!("G and H' not disjoint for {q}"),
                    }
                })?;
                BaseSeqQuad {
                    a: q.a.clone(),
                    b: q.b.clone(),
                    c,
                    d,
                }
            }
        })
    }
}

/// The configured generating set: twelve involutions.
pub const GBS_GENERATORS: [GbsGenerator; 12] = [
    GbsGenerator::Negate(0),
    GbsGenerator::Negate(1),
    GbsGenerator::Negate(2),
    GbsGenerator::Negate(3),
    GbsGenerator::Reverse(0),
    GbsGenerator::Reverse(1),
    GbsGenerator::Reverse(2),
    GbsGenerator::Reverse(3),
    GbsGenerator::SwapAB,
    GbsGenerator::SwapCD,
    GbsGenerator::AlternateAll,
    GbsGenerator::QuadReverseCD,
];

/// Closure of `{rep}` under [`GBS_GENERATORS`], sorted.
pub fn gbs_orbit(rep: &BaseSeqQuad) -> Result<Vec<BaseSeqQuad>> {
    require_bs_n1(rep)?;
    if !rep.is_base_sequence() {
        return Err(Error::InvalidBs {
            m: rep.m(),
            n: rep.n(),
        });
    }
    let mut seen: HashSet<BaseSeqQuad> = HashSet::new();
    seen.insert(rep.clone());
    let mut stack = vec![rep.clone()];
    while let Some(q) = stack.pop() {
        for g in GBS_GENERATORS {
            let image = g.apply(&q)?;
            if !seen.contains(&image) {
                seen.insert(image.clone());
                stack.push(image);
            }
        }
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BaseSeqQuad {
        s.parse().unwrap()
    }

    fn t(s: &str) -> TernarySeq {
        s.parse().unwrap()
    }

    /// Independent naive scan over all 2^(2m+2n) quadruples.
    fn naive_count(m: usize, n: usize) -> usize {
        let total = 2 * (m + n);
        (0..(1u64 << total))
            .filter(|&bits| {
                let seq = |off: usize, len: usize| {
                    BinarySeq::new(
                        (0..len)
                            .map(|i| if (bits >> (off + i)) & 1 == 1 { 1 } else { -1 })
                            .collect(),
                    )
                    .unwrap()
                };
                BaseSeqQuad::new(seq(0, m), seq(m, m), seq(2 * m, n), seq(2 * m + n, n))
                    .unwrap()
                    .is_base_sequence()
            })
            .count()
    }

    #[test]
    fn validate_small_cases() {
        assert!(validate_bs(&q("++;+-;+;+"), 2, 1).unwrap());
        assert!(!validate_bs(&q("++;++;+;+"), 2, 1).unwrap());
        assert!(matches!(
            validate_bs(&q("++;+-;+;+"), 3, 1),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn enumeration_matches_naive_scan() {
        // Frozen from `naive_count`: |BS(2,1)| = 32, |BS(3,2)| = 128.
        assert_eq!(naive_count(2, 1), 32);
        assert_eq!(enumerate_bs(2, 1).unwrap().len(), 32);
        assert_eq!(naive_count(3, 2), 128);
        assert_eq!(enumerate_bs(3, 2).unwrap().len(), 128);
        assert_eq!(enumerate_bs(1, 1).unwrap().len(), naive_count(1, 1));
        assert_eq!(enumerate_bs(2, 2).unwrap().len(), naive_count(2, 2));
        assert_eq!(enumerate_bs(2, 3).unwrap().len(), naive_count(2, 3));
        assert!(enumerate_bs(2, 1).unwrap().iter().all(BaseSeqQuad::is_base_sequence));
        assert!(matches!(enumerate_bs(9, 8), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn normality_predicates() {
        let ns3 = q("++-+;++--;+++;+-+");
        assert!(is_normal(&ns3).unwrap());
        let nn2 = q("+-+;++-;++;++");
        assert!(is_near_normal(&nn2).unwrap());
        assert!(!is_normal(&q("+-+;+++;++;++")).unwrap());
        assert!(matches!(is_normal(&q("++;+-;++;+-")), Err(Error::Shape(_))));
    }

    #[test]
    fn normal_decomposition_of_ns3_rep() {
        let ns3 = q("++-+;++--;+++;+-+");
        let dec = ns_decompose(&ns3).unwrap();
        assert_eq!(dec.f, "++-".parse().unwrap());
        assert_eq!(dec.tail_sign, 1);
        assert_eq!(dec.g, t("+0+"));
        assert_eq!(dec.h, t("0+0"));
        assert_eq!(dec.reassemble().unwrap(), ns3);
        assert_eq!(ns_decompose(&q("+-+;++-;++;++")), Err(Error::NotNormal));
    }

    #[test]
    fn near_normal_decomposition_of_nn2_rep() {
        let nn2 = q("+-+;++-;++;++");
        let dec = nn_decompose(&nn2).unwrap();
        assert_eq!(dec.y, "+".parse().unwrap());
        assert_eq!(dec.x, "-".parse().unwrap());
        assert_eq!(dec.g, t("++"));
        assert_eq!(dec.h, t("00"));
        assert_eq!(dec.reassemble().unwrap(), nn2);
    }

    #[test]
    fn decompositions_roundtrip_over_enumerated_sets() {
        let bs43 = enumerate_bs(4, 3).unwrap();
        let mut normal = 0;
        for x in &bs43 {
            if is_normal(x).unwrap() {
                normal += 1;
                assert_eq!(ns_decompose(x).unwrap().reassemble().unwrap(), *x);
            }
        }
        assert_eq!(normal, normal_set(3).unwrap().len());
        assert!(normal > 0);
        for n in [2, 4] {
            for x in near_normal_set(n).unwrap() {
                match nn_decompose(&x) {
                    Ok(dec) => assert_eq!(dec.reassemble().unwrap(), x),
                    Err(Error::NotNearNormal(_)) => assert_eq!(x.a().get(n), -1),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn t_sequence_predicate() {
        let unit = TSeqQuad::new([t("+"), t("0"), t("0"), t("0")]).unwrap();
        assert!(validate_ts(&unit));
        let bad = TSeqQuad::new([t("+0"), t("+0"), t("0+"), t("0-")]).unwrap();
        assert!(!validate_ts(&bad));
        assert!(TSeqQuad::new([t("+"), t("00"), t("0"), t("0")]).is_err());
    }

    #[test]
    fn ts_to_bs_unit() {
        let unit = TSeqQuad::new([t("+"), t("0"), t("0"), t("0")]).unwrap();
        assert_eq!(ts_to_bs(&unit).unwrap(), q("+;+;+;+"));
        let bad = TSeqQuad::new([t("+"), t("+"), t("0"), t("0")]).unwrap();
        assert_eq!(ts_to_bs(&bad), Err(Error::InvalidTs));
    }

    #[test]
    fn ts_to_bs_swapping_last_two() {
        let x = TSeqQuad::new([t("+00"), t("0+0"), t("00+"), t("000")]).unwrap();
        let [a, b, c, d] = x.seqs().clone();
        let swapped = TSeqQuad::new([a, b, d, c]).unwrap();
        let bx = ts_to_bs(&x).unwrap();
        let by = ts_to_bs(&swapped).unwrap();
        assert!(validate_bs(&bx, 3, 3).unwrap());
        // Q and R are symmetric in (C,D); S and T trade places.
        assert_eq!(bx.a(), by.a());
        assert_eq!(bx.b(), by.b());
        assert_eq!(bx.c(), by.d());
        assert_eq!(bx.d(), by.c());
    }

    #[test]
    fn pairs_to_ts_small() {
        let ts = pairs_to_ts(&t("+0"), &t("+0"), &t("0+"), &t("0-")).unwrap();
        assert_eq!(ts.seqs(), &[t("+0"), t("00"), t("00"), t("0+")]);
        assert!(matches!(
            pairs_to_ts(&t("+0"), &t("0+"), &t("0+"), &t("0-")),
            Err(Error::SupportMismatch(_))
        ));
    }

    #[test]
    fn fold_bs21() {
        let folded = bs_fold(&q("++;+-;+;+")).unwrap();
        assert_eq!(folded, q("+++;++-;+-+;+--"));
        assert!(validate_bs(&folded, 3, 3).unwrap());
        assert!(bs_fold(&q("++;++;+;+")).is_err());
    }

    #[test]
    fn permutations() {
        let x = q("+++;++-;+-+;+--");
        assert_eq!(quad_permute(&x, [0, 1, 2, 3]).unwrap(), x);
        let s = quad_permute(&x, [1, 0, 2, 3]).unwrap();
        assert_eq!(quad_permute(&s, [1, 0, 2, 3]).unwrap(), x);
        assert!(s.is_base_sequence());
        assert!(quad_permute(&q("++;+-;+;+"), [2, 1, 0, 3]).is_err());
        assert!(quad_permute(&x, [0, 0, 2, 3]).is_err());
        let even = even_permutations();
        assert_eq!(even.len(), 12);
        assert!(even.contains(&[0, 1, 2, 3]));
        assert!(!even.contains(&[1, 0, 2, 3]));
    }

    #[test]
    fn orbit_sizes_are_powers_of_two() {
        for n in 1..=4 {
            let all = enumerate_bs(n + 1, n).unwrap();
            let mut covered: HashSet<BaseSeqQuad> = HashSet::new();
            for x in &all {
                if covered.contains(x) {
                    continue;
                }
                let orbit = gbs_orbit(x).unwrap();
                assert!(orbit.len().is_power_of_two() && orbit.len() <= 4096);
                assert!(orbit.iter().all(BaseSeqQuad::is_base_sequence));
                covered.extend(orbit);
            }
            assert_eq!(covered.len(), all.len());
        }
    }

    #[test]
    fn quad_sets_text_roundtrip() {
        let set = enumerate_bs(2, 1).unwrap();
        let text = write_quads(&set);
        assert_eq!(parse_quads(&text).unwrap(), set);
        assert_eq!(parse_quads("# c\n0;0\n").unwrap(), vec![q("++;+-;+;+")]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn valid_ts() -> impl Strategy<Value = (TernarySeq, TernarySeq, TernarySeq, TernarySeq)> {
            // Random paired-support rows: each position belongs to (Q,R) or (S,T).
            proptest::collection::vec((any::<bool>(), prop_oneof![Just(1i8), Just(-1i8)], prop_oneof![Just(1i8), Just(-1i8)]), 1..24)
                .prop_map(|v| {
                    let mut rows = [vec![], vec![], vec![], vec![]];
                    for (first, x, y) in v {
                        let (p, r) = if first { (0, 1) } else { (2, 3) };
                        for (k, row) in rows.iter_mut().enumerate() {
                            row.push(if k == p { x } else if k == r { y } else { 0 });
                        }
                    }
                    let [a, b, c, d] = rows.map(|r| TernarySeq::new(r).unwrap());
                    (a, b, c, d)
                })
        }

        proptest! {
            #[test]
            fn pairs_then_kons3_is_sum_difference((q_, r, s, t_) in valid_ts()) {
                let ts = pairs_to_ts(&q_, &r, &s, &t_).unwrap();
                // Only valid T-sequence quadruples map; compare term-wise otherwise.
                let [a, b, c, d] = ts.seqs();
                for i in 0..q_.len() {
                    let first = a.get(i) + b.get(i) + c.get(i) + d.get(i);
                    let second = a.get(i) + b.get(i) - c.get(i) - d.get(i);
                    let third = a.get(i) - b.get(i) + c.get(i) - d.get(i);
                    let fourth = a.get(i) - b.get(i) - c.get(i) + d.get(i);
                    prop_assert_eq!(first, q_.get(i) + s.get(i));
                    prop_assert_eq!(second, q_.get(i) - s.get(i));
                    prop_assert_eq!(third, r.get(i) + t_.get(i));
                    prop_assert_eq!(fourth, r.get(i) - t_.get(i));
                }
            }
        }
    }
}
