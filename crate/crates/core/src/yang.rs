//! Yang's four multiplication theorems as block constructions.
//!
//! Each construction lays out four rows as concatenations of blocks, checks
//! the row widths against the stated dimension, and validates the output.
//! A failed check is reported as [`Error::PostconditionFailure`].

use crate::designs::{
    pairs_to_ts, BaseSeqQuad, NearNormalDecomposition, NormalDecomposition, TSeqQuad,
};
use crate::error::{Error, Result};
use crate::seq::{BinarySeq, TernarySeq};

/// A row under construction: an ordered list of segments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockRow {
    segments: Vec<TernarySeq>,
}

impl BlockRow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, segment: TernarySeq) {
        self.segments.push(segment);
    }

    pub fn extend(&mut self, other: BlockRow) {
        self.segments.extend(other.segments);
    }

    pub fn segments(&self) -> &[TernarySeq] {
        &self.segments
    }

    pub fn total_length(&self) -> usize {
        self.segments.iter().map(TernarySeq::len).sum()
    }

    pub fn flatten(&self) -> TernarySeq {
        TernarySeq::concat(&self.segments.iter().collect::<Vec<_>>())
    }
}

/// `coef * x` with `coef` in {-1, 0, +1}.
fn times(coef: i8, x: &BinarySeq) -> TernarySeq {
    TernarySeq::from_terms_unchecked(x.terms().iter().map(|&t| coef * t).collect())
}

/// `f1 * x1 + f2 * x2`; the coefficients are disjoint so the sum stays ternary.
fn combo(f1: i8, x1: &BinarySeq, f2: i8, x2: &BinarySeq) -> Result<TernarySeq> {
    times(f1, x1).checked_add(&times(f2, x2))
}

fn interlace(a: TernarySeq, c: TernarySeq) -> Result<TernarySeq> {
    TernarySeq::interleave(&a, &c)
}

fn check_widths(stage: &'static str, rows: &[BlockRow], width: usize) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        if row.total_length() != width {
            return Err(Error::PostconditionFailure {
                stage,
                detail: format!(
                    "row {} has width {}, expected {width}",
                    i + 1,
                    row.total_length()
                ),
            });
        }
    }
    Ok(())
}

fn require_valid(q: &BaseSeqQuad) -> Result<()> {
    if q.is_base_sequence() {
        Ok(())
    } else {
        Err(Error::InvalidBs { m: q.m(), n: q.n() })
    }
}

fn paired_rows_to_ts(stage: &'static str, rows: [BlockRow; 4]) -> Result<TSeqQuad> {
    let [q, r, s, t] = rows.map(|row| row.flatten());
    let ts = pairs_to_ts(&q, &r, &s, &t).map_err(|e| Error::PostconditionFailure {
        stage,
        detail: format!("raw rows violate the paired-support property: {e}"),
    })?;
    if !ts.is_valid() {
        return Err(Error::PostconditionFailure {
            stage,
            detail: "output is not a T-sequence quadruple".into(),
        });
    }
    Ok(ts)
}

fn rows_to_bs(stage: &'static str, rows: [BlockRow; 4]) -> Result<BaseSeqQuad> {
    let flat = rows.map(|row| row.flatten());
    let mut seqs = Vec::with_capacity(4);
    for (i, row) in flat.iter().enumerate() {
        seqs.push(row.to_binary().map_err(|_| Error::PostconditionFailure {
            stage,
            detail: format!("row {} is not binary", i + 1),
        })?);
    }
    let [a, b, c, d]: [BinarySeq; 4] = seqs.try_into().expect("four rows");
    let q = BaseSeqQuad::new(a, b, c, d)?;
    if !q.is_base_sequence() {
        return Err(Error::PostconditionFailure {
            stage,
            detail: format!("output {q} is not a base-sequence quadruple"),
        });
    }
    Ok(q)
}

/// Raw rows `Q, R, S, T` of the first theorem, before halving into T-sequences.
pub fn yang1_rows(ns: &NormalDecomposition, bs: &BaseSeqQuad) -> Result<[BlockRow; 4]> {
    let (f, g, h) = (&ns.f, &ns.g, &ns.h);
    let n = ns.n();
    let [a, b, c, d] = bs.seqs();
    let (s, t) = (bs.m(), bs.n());
    let mut rows: [BlockRow; 4] = Default::default();
    for k in 1..=n {
        let (fk, gk, hk) = (f.at(k), g.at(k), h.at(k));
        let (fp, gp, hp) = (f.primed(k), g.primed(k), h.primed(k));
        rows[0].push(times(fp, a));
        rows[0].push(combo(gk, c, hk, d)?);
        rows[0].push(TernarySeq::zeros(s + t));
        rows[1].push(times(fp, b));
        rows[1].push(combo(-hp, c, gp, d)?);
        rows[1].push(TernarySeq::zeros(s + t));
        rows[2].push(TernarySeq::zeros(s + t));
        rows[2].push(combo(gp, a, -hk, b)?);
        rows[2].push(times(-fk, c));
        rows[3].push(TernarySeq::zeros(s + t));
        rows[3].push(combo(hp, a, gk, b)?);
        rows[3].push(times(-fk, d));
    }
    rows[0].push(times(-1, &b.reverse()));
    rows[0].push(TernarySeq::zeros(t));
    rows[1].push(times(1, &a.reverse()));
    rows[1].push(TernarySeq::zeros(t));
    rows[2].push(TernarySeq::zeros(s));
    rows[2].push(times(-1, &d.reverse()));
    rows[3].push(TernarySeq::zeros(s));
    rows[3].push(times(1, &c.reverse()));
    check_widths("yang1", &rows, (2 * n + 1) * (s + t))?;
    Ok(rows)
}

/// `NS(n) × BS(s,t) → TS((2n+1)(s+t))`.
pub fn yang1(ns: &NormalDecomposition, bs: &BaseSeqQuad) -> Result<TSeqQuad> {
    require_valid(&ns.reassemble()?)?;
    require_valid(bs)?;
    paired_rows_to_ts("yang1", yang1_rows(ns, bs)?)
}

/// `NS(n) × BS(s,t) → BS(n(s+t), n(s+t))`.
pub fn yang2(ns: &NormalDecomposition, bs: &BaseSeqQuad) -> Result<BaseSeqQuad> {
    require_valid(&ns.reassemble()?)?;
    require_valid(bs)?;
    let (f, g, h) = (&ns.f, &ns.g, &ns.h);
    let n = ns.n();
    let [a, b, c, d] = bs.seqs();
    let mut rows: [BlockRow; 4] = Default::default();
    for k in 1..=n {
        let (fk, gk, hk) = (f.at(k), g.at(k), h.at(k));
        let (fp, gp, hp) = (f.primed(k), g.primed(k), h.primed(k));
        rows[0].push(times(fp, a));
        rows[0].push(combo(gk, c, hk, d)?);
        rows[1].push(times(fp, b));
        rows[1].push(combo(-hp, c, gp, d)?);
        rows[2].push(combo(gp, a, -hk, b)?);
        rows[2].push(times(-fk, c));
        rows[3].push(combo(hp, a, gk, b)?);
        rows[3].push(times(-fk, d));
    }
    check_widths("yang2", &rows, n * (bs.m() + bs.n()))?;
    rows_to_bs("yang2", rows)
}

/// Sign of the `g_{2k-1}B` term in the second row of `U_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Yang3Sign {
    /// `h'_{2k-1}A - g_{2k-1}B`.
    AsPrinted,
    /// `h'_{2k-1}A + g_{2k-1}B`, matching the `h'_{2k}A + g_{2k}B` block.
    Corrected,
}

/// Raw rows of the third theorem: `U_1..U_{m+1}` over `V_{m+1}..V_1`.
pub fn yang3_rows(
    nn: &NearNormalDecomposition,
    bs: &BaseSeqQuad,
    sign: Yang3Sign,
) -> Result<[BlockRow; 4]> {
    let (x, y, g, h) = (&nn.x, &nn.y, &nn.g, &nn.h);
    let n = nn.n();
    if n % 2 != 0 || x.len() * 2 != n || y.len() * 2 != n {
        return Err(Error::Shape(format!(
            "near-normal decomposition needs n = 2m with |X| = |Y| = m, got n = {n}, |X| = {}, |Y| = {}",
            x.len(),
            y.len()
        )));
    }
    let m = n / 2;
    let [a, b, c, d] = bs.seqs();
    let (s, t) = (bs.m(), bs.n());
    let (ar, br, cr, dr) = (a.reverse(), b.reverse(), c.reverse(), d.reverse());
    let sg = match sign {
        Yang3Sign::AsPrinted => -1,
        Yang3Sign::Corrected => 1,
    };

    let mut upper: [BlockRow; 2] = Default::default();
    let mut lower: Vec<[BlockRow; 2]> = Vec::with_capacity(m + 1);
    for k in 1..=m {
        let (i1, i2) = (2 * k - 1, 2 * k);
        let (g1, h1, g2, h2) = (g.at(i1), h.at(i1), g.at(i2), h.at(i2));
        let (g1p, h1p, g2p, h2p) = (g.primed(i1), h.primed(i1), g.primed(i2), h.primed(i2));
        let (xk, yk, ykp) = (x.at(k), y.at(k), y.primed(k));

        upper[0].push(combo(g1p, a, -h1, b)?);
        upper[0].push(times(-yk, c));
        upper[0].push(combo(g2p, a, -h2, b)?);
        upper[0].push(times(-xk, &dr));
        upper[1].push(combo(h1p, a, sg * g1, b)?);
        upper[1].push(times(-yk, d));
        upper[1].push(combo(h2p, a, g2, b)?);
        upper[1].push(times(xk, &cr));

        let mut v: [BlockRow; 2] = Default::default();
        v[0].push(times(-xk, b));
        v[0].push(combo(g2, &cr, h2, &dr)?);
        v[0].push(times(ykp, &ar));
        v[0].push(combo(g1, &cr, h1, &dr)?);
        v[1].push(times(xk, a));
        v[1].push(combo(g2p, &dr, -h2p, &cr)?);
        v[1].push(times(ykp, &br));
        v[1].push(combo(g1p, &dr, -h1p, &cr)?);
        lower.push(v);
    }
    let tail = n * (s + t);
    upper[0].push(TernarySeq::zeros(s));
    upper[0].push(times(-1, &dr));
    upper[0].push(TernarySeq::zeros(tail));
    upper[1].push(TernarySeq::zeros(s));
    upper[1].push(times(1, &cr));
    upper[1].push(TernarySeq::zeros(tail));

    let mut last: [BlockRow; 2] = Default::default();
    last[0].push(TernarySeq::zeros(tail));
    last[0].push(times(-1, b));
    last[0].push(TernarySeq::zeros(t));
    last[1].push(TernarySeq::zeros(tail));
    last[1].push(times(1, a));
    last[1].push(TernarySeq::zeros(t));
    lower.push(last);

    let [q, r] = upper;
    let mut s_row = BlockRow::new();
    let mut t_row = BlockRow::new();
    for [v0, v1] in lower.into_iter().rev() {
        s_row.extend(v0);
        t_row.extend(v1);
    }
    let rows = [q, r, s_row, t_row];
    check_widths("yang3", &rows, (2 * n + 1) * (s + t))?;
    Ok(rows)
}

/// `NN(n) × BS(s,t) → TS((2n+1)(s+t))` for even `n`.
pub fn yang3(
    nn: &NearNormalDecomposition,
    bs: &BaseSeqQuad,
    sign: Yang3Sign,
) -> Result<TSeqQuad> {
    require_valid(&nn.reassemble()?)?;
    require_valid(bs)?;
    paired_rows_to_ts("yang3", yang3_rows(nn, bs, sign)?)
}

/// The second block of row `R` in `X_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Yang4Variant {
    /// `e_kA' / (-h_kC)`.
    AsPrinted,
    /// `e_kA' / (-h'_kC)`.
    Corrected,
}

/// `BS(m+1,m) × BS(n+1,n) → BS(d,d)` with `d = (2m+1)(2n+1)`; the second
/// factor is read as `(F;G;H;E)`.
pub fn yang4(
    first: &BaseSeqQuad,
    second: &BaseSeqQuad,
    variant: Yang4Variant,
) -> Result<BaseSeqQuad> {
    for q in [first, second] {
        if q.m() != q.n() + 1 {
            return Err(Error::Shape(format!(
                "factors must lie in BS(k+1,k), got BS({},{})",
                q.m(),
                q.n()
            )));
        }
        require_valid(q)?;
    }
    let [a, b, c, d] = first.seqs();
    let [f, g, h, e] = second.seqs();
    let (ar, br, cr, dr) = (a.reverse(), b.reverse(), c.reverse(), d.reverse());
    let n = second.n();
    let mut rows: [BlockRow; 4] = Default::default();
    for k in 1..=n {
        let (fk, gk, hk, ek) = (f.at(k), g.at(k), h.at(k), e.at(k));
        let (fp, gp, hp) = (f.primed(k), g.primed(k), h.primed(k));
        let r_coef = match variant {
            Yang4Variant::AsPrinted => hk,
            Yang4Variant::Corrected => hp,
        };
        rows[0].push(interlace(times(fp, a), times(gk, c))?);
        rows[0].push(interlace(times(-ek, &br), times(hk, d))?);
        rows[1].push(interlace(times(fp, b), times(gp, d))?);
        rows[1].push(interlace(times(ek, &ar), times(-r_coef, c))?);
        rows[2].push(interlace(times(gp, a), times(-fk, c))?);
        rows[2].push(interlace(times(-hk, b), times(-ek, &dr))?);
        rows[3].push(interlace(times(gk, b), times(-fk, d))?);
        rows[3].push(interlace(times(hp, a), times(ek, &cr))?);
    }
    let (f1, g1, f1p, g1p) = (f.at(1), g.at(1), f.primed(1), g.primed(1));
    rows[0].push(interlace(times(f1, a), times(g1p, c))?);
    rows[1].push(interlace(times(f1, b), times(g1, d))?);
    rows[2].push(interlace(times(g1, a), times(-f1p, c))?);
    rows[3].push(interlace(times(g1p, b), times(-f1p, d))?);
    check_widths("yang4", &rows, (2 * first.n() + 1) * (2 * n + 1))?;
    rows_to_bs("yang4", rows)
}
