//! Signed-permutation equivalence of Hadamard matrices.
//!
//! A matrix `H` of order `n` becomes a bipartite graph on `4n` vertices: row
//! vertices `(i, ±)` and column vertices `(j, ±)`, with `(i, e)` adjacent to
//! `(j, d)` iff `e·d·H[i][j] = +1`. Two matrices are equivalent iff these
//! graphs are isomorphic by a map that keeps rows on the row side. The
//! canonical labeling is a partition backtrack: equitable refinement, row
//! invariants built from four-row products, and automorphism pruning.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gs::{is_hadamard, HadamardMatrix, SignMatrix};

/// Largest order handled by the canonical labeling.
pub const MAX_CANON_ORDER: usize = 64;

const SIDE_MAX: usize = 2 * MAX_CANON_ORDER;
const ROW: usize = 0;
const COL: usize = 1;

/// Order (u16 little endian) followed by the canonical ±1 matrix, row-major,
/// one bit per entry (`+1` is 1), most significant bit first in each byte.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCert(Vec<u8>);

impl CanonicalCert {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Parse(format!("certificate: {e}")))?;
        if bytes.len() < 2 {
            return Err(Error::Parse("certificate too short".into()));
        }
        let cert = Self(bytes);
        if cert.0.len() != 2 + (cert.order() * cert.order()).div_ceil(8) {
            return Err(Error::Parse("certificate length does not match its order".into()));
        }
        Ok(cert)
    }

    pub fn order(&self) -> usize {
        u16::from_le_bytes([self.0[0], self.0[1]]) as usize
    }

    /// The canonical matrix this certificate encodes.
    pub fn matrix(&self) -> SignMatrix {
        let n = self.order();
        SignMatrix::from_fn(n, |i, j| {
            let bit = i * n + j;
            if (self.0[2 + bit / 8] >> (7 - bit % 8)) & 1 == 1 {
                1
            } else {
                -1
            }
        })
    }

    fn from_matrix(m: &SignMatrix) -> Self {
        let n = m.order();
        let mut bytes = vec![0u8; 2 + (n * n).div_ceil(8)];
        bytes[..2].copy_from_slice(&(n as u16).to_le_bytes());
        for i in 0..n {
            for j in 0..n {
                if m.get(i, j) > 0 {
                    let bit = i * n + j;
                    bytes[2 + bit / 8] |= 1 << (7 - bit % 8);
                }
            }
        }
        Self(bytes)
    }
}

impl fmt::Debug for CanonicalCert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = self.to_hex();
        write!(f, "CanonicalCert({}..)", &hex[..hex.len().min(16)])
    }
}

/// A signed permutation acting on rows (from the left) or columns (from the
/// right): entry `k` of the image is `signs[k]` times entry `perm[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedPerm {
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

impl SignedPerm {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            signs: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.perm.len()];
        self.signs.len() == self.perm.len()
            && self.signs.iter().all(|&s| s == 1 || s == -1)
            && self.perm.iter().all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
    }
}

/// `P·H·Q`.
pub fn apply_signed(rows: &SignedPerm, h: &SignMatrix, cols: &SignedPerm) -> SignMatrix {
    SignMatrix::from_fn(h.order(), |i, j| {
        rows.signs[i] * cols.signs[j] * h.get(rows.perm[i], cols.perm[j])
    })
}

fn mix(h: &mut u64, x: u64) {
    *h = (*h ^ x).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(27);
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > MAX_CANON_ORDER {
        return Err(Error::Shape(format!(
            "canonical labeling supports orders 1..={MAX_CANON_ORDER}, got {n}"
        )));
    }
    Ok(())
}

/// Row words of `m` and of its transpose.
fn row_and_col_words(m: &SignMatrix) -> (Vec<u64>, Vec<u64>) {
    let n = m.order();
    let rows: Vec<u64> = (0..n).map(|i| m.row_bits(i)).collect();
    let mut cols = vec![0u64; n];
    for (i, &r) in rows.iter().enumerate() {
        for (j, c) in cols.iter_mut().enumerate() {
            *c |= ((r >> j) & 1) << i;
        }
    }
    (rows, cols)
}

/// Histograms of `|Σ_c h_a h_b h_c h_d|` over the 3-subsets of other rows,
/// one per row. For orders divisible by four the values are multiples of
/// four and are binned accordingly.
fn four_profiles(words: &[u64]) -> Vec<Vec<u32>> {
    let n = words.len();
    let shift = if n % 4 == 0 { 2 } else { 0 };
    let bins = (n >> shift) + 1;
    let value = |x: u64| (n as i32 - 2 * x.count_ones() as i32).unsigned_abs() as usize >> shift;
    let mut hist = vec![0u32; n * bins];
    let mut pair_local = vec![0u32; bins];
    for a in 0..n {
        for b in a + 1..n {
            let x = words[a] ^ words[b];
            pair_local.iter_mut().for_each(|v| *v = 0);
            for c in b + 1..n {
                let xc = x ^ words[c];
                let mut c_local = [0u32; 65];
                for (d, &wd) in words.iter().enumerate().skip(c + 1) {
                    let v = value(xc ^ wd);
                    c_local[v] += 1;
                    hist[d * bins + v] += 1;
                }
                for (v, &k) in c_local[..bins].iter().enumerate() {
                    pair_local[v] += k;
                    hist[c * bins + v] += k;
                }
            }
            for (v, &k) in pair_local.iter().enumerate() {
                hist[a * bins + v] += k;
                hist[b * bins + v] += k;
            }
        }
    }
    hist.chunks(bins).map(<[u32]>::to_vec).collect()
}

fn hash_slice(values: &[u32]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3;
    for &v in values {
        mix(&mut h, v as u64);
    }
    h
}

fn profile_digest(n: usize, rows: &[Vec<u32>], cols: &[Vec<u32>]) -> u64 {
    let mut rows = rows.to_vec();
    let mut cols = cols.to_vec();
    rows.sort();
    cols.sort();
    let mut hasher = Sha256::new();
    hasher.update((n as u64).to_le_bytes());
    for part in [&rows, &cols] {
        for hist in part {
            for &v in hist {
                hasher.update(v.to_le_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Screening invariant: digest of the sorted four-row profiles of rows and
/// columns. Equal for equivalent matrices.
pub fn profile_hash(h: &HadamardMatrix) -> Result<u64> {
    check_order(h.order())?;
    let (rows, cols) = row_and_col_words(h.matrix());
    Ok(profile_digest(
        h.order(),
        &four_profiles(&rows),
        &four_profiles(&cols),
    ))
}

struct Graph {
    n: usize,
    side_len: usize,
    /// `adj[ROW][row vertex]` is a mask of column vertices and vice versa.
    adj: [Vec<u128>; 2],
    rows: Vec<u64>,
    /// `pairs[a*n+b] = rows[a] ^ rows[b]`.
    pairs: Vec<u64>,
}

impl Graph {
    fn new(rows: Vec<u64>, cols: &[u64]) -> Self {
        let n = rows.len();
        let side_len = 2 * n;
        let full: u128 = if side_len == 128 {
            u128::MAX
        } else {
            (1u128 << side_len) - 1
        };
        let spread = |word: u64| -> u128 {
            // bit j of `word` set means +1: vertex 2j; otherwise vertex 2j+1.
            let mut m = 0u128;
            for j in 0..n {
                if (word >> j) & 1 == 1 {
                    m |= 1 << (2 * j);
                } else {
                    m |= 1 << (2 * j + 1);
                }
            }
            m
        };
        let mut adj = [vec![0u128; side_len], vec![0u128; side_len]];
        for (side, words) in [(ROW, rows.as_slice()), (COL, cols)] {
            for (i, &w) in words.iter().enumerate() {
                let plus = spread(w);
                adj[side][2 * i] = plus;
                adj[side][2 * i + 1] = full & !plus;
            }
        }
        let mut pairs = vec![0u64; n * n];
        for a in 0..n {
            for b in 0..n {
                pairs[a * n + b] = rows[a] ^ rows[b];
            }
        }
        Self {
            n,
            side_len,
            adj,
            rows,
            pairs,
        }
    }
}

#[derive(Clone)]
struct Side {
    elems: [u8; SIDE_MAX],
    /// Cell start for every position.
    cell: [u8; SIDE_MAX],
    /// Cell length, valid at cell starts.
    len: [u8; SIDE_MAX],
    cells: usize,
}

impl Side {
    fn unit(size: usize) -> Self {
        let mut s = Side {
            elems: [0; SIDE_MAX],
            cell: [0; SIDE_MAX],
            len: [0; SIDE_MAX],
            cells: 1,
        };
        for k in 0..size {
            s.elems[k] = k as u8;
        }
        s.len[0] = size as u8;
        s
    }

    fn mask(&self, start: usize) -> u128 {
        let mut m = 0u128;
        for &v in &self.elems[start..start + self.len[start] as usize] {
            m |= 1 << v;
        }
        m
    }
}

#[derive(Clone)]
struct Partition {
    sides: [Side; 2],
}

impl Partition {
    fn is_discrete(&self, side_len: usize) -> bool {
        self.sides[ROW].cells == side_len && self.sides[COL].cells == side_len
    }
}

struct Refiner {
    queue: VecDeque<(usize, usize)>,
    queued: [[bool; SIDE_MAX]; 2],
}

impl Refiner {
    fn new() -> Self {
        Self {
            queue: VecDeque::new(),
            queued: [[false; SIDE_MAX]; 2],
        }
    }

    fn push(&mut self, side: usize, start: usize) {
        if !self.queued[side][start] {
            self.queued[side][start] = true;
            self.queue.push_back((side, start));
        }
    }

    /// Reorders the cell at `start` so that elements with equal `key` form
    /// consecutive subcells in increasing key order. Returns false if the
    /// cell does not split.
    fn split_cell(
        &mut self,
        side: &mut Side,
        side_id: usize,
        start: usize,
        keys: &mut [(u64, u8)],
        trace: &mut u64,
        enqueue_all: bool,
    ) -> bool {
        let len = keys.len();
        if keys.iter().all(|k| k.0 == keys[0].0) {
            return false;
        }
        keys.sort_unstable();
        let was_queued = self.queued[side_id][start];
        let mut sub_starts: Vec<(usize, usize)> = Vec::new();
        let mut k = 0;
        while k < len {
            let mut e = k + 1;
            while e < len && keys[e].0 == keys[k].0 {
                e += 1;
            }
            mix(trace, ((start as u64) << 48) ^ ((k as u64) << 32) ^ keys[k].0);
            sub_starts.push((start + k, e - k));
            k = e;
        }
        for (off, &(_, v)) in keys.iter().enumerate() {
            side.elems[start + off] = v;
        }
        for &(s, l) in &sub_starts {
            side.len[s] = l as u8;
            for p in s..s + l {
                side.cell[p] = s as u8;
            }
        }
        side.cells += sub_starts.len() - 1;
        if enqueue_all || was_queued {
            for &(s, _) in &sub_starts {
                self.push(side_id, s);
            }
        } else {
            let largest = sub_starts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.cmp(&b.1 .1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .expect("non-empty");
            for (i, &(s, _)) in sub_starts.iter().enumerate() {
                if i != largest {
                    self.push(side_id, s);
                }
            }
        }
        true
    }

    /// Equitable refinement; events are folded into `trace`.
    fn refine(&mut self, g: &Graph, p: &mut Partition, trace: &mut u64) {
        let mut keys: Vec<(u64, u8)> = Vec::with_capacity(SIDE_MAX);
        while let Some((side, start)) = self.queue.pop_front() {
            self.queued[side][start] = false;
            if p.is_discrete(g.side_len) {
                continue;
            }
            let mask = p.sides[side].mask(start);
            let other = 1 - side;
            let adj = &g.adj[other];
            let mut c = 0;
            while c < g.side_len {
                let len = p.sides[other].len[c] as usize;
                if len > 1 {
                    keys.clear();
                    for &v in &p.sides[other].elems[c..c + len] {
                        keys.push(((adj[v as usize] & mask).count_ones() as u64, v));
                    }
                    let mut local = *trace;
                    mix(&mut local, ((side as u64) << 56) ^ ((start as u64) << 40));
                    if self.split_cell(&mut p.sides[other], other, c, &mut keys, &mut local, false) {
                        *trace = local;
                    }
                }
                c += len;
            }
        }
    }

    /// Splits every non-singleton cell of `side_id` by the given per-vertex key.
    fn split_by(&mut self, g: &Graph, p: &mut Partition, side_id: usize, key: &[u64], trace: &mut u64) {
        let mut keys: Vec<(u64, u8)> = Vec::with_capacity(SIDE_MAX);
        let mut c = 0;
        while c < g.side_len {
            let len = p.sides[side_id].len[c] as usize;
            if len > 1 {
                keys.clear();
                for &v in &p.sides[side_id].elems[c..c + len] {
                    keys.push((key[v as usize], v));
                }
                self.split_cell(&mut p.sides[side_id], side_id, c, &mut keys, trace, true);
            }
            c += len;
        }
    }

    fn individualize(&mut self, p: &mut Partition, side_id: usize, v: u8) {
        let side = &mut p.sides[side_id];
        let pos = side.elems.iter().position(|&x| x == v).expect("vertex present");
        let start = side.cell[pos] as usize;
        let len = side.len[start] as usize;
        debug_assert!(len > 1);
        side.elems.swap(start, pos);
        side.len[start] = 1;
        side.len[start + 1] = (len - 1) as u8;
        for q in start + 1..start + len {
            side.cell[q] = (start + 1) as u8;
        }
        side.cells += 1;
        self.push(side_id, start);
    }
}

#[derive(Clone)]
struct Leaf {
    trace: Vec<u64>,
    key: Vec<u128>,
    labeling: [Vec<u8>; 2],
    path: Vec<(usize, u8)>,
}

type Automorphism = [Vec<u8>; 2];

struct Search<'a> {
    g: &'a Graph,
    first: Option<Leaf>,
    best: Option<Leaf>,
    autos: Vec<Automorphism>,
    nodes: usize,
}

/// Orbits of `elems` under the automorphisms that fix `path` pointwise.
fn orbit_roots(autos: &[Automorphism], path: &[(usize, u8)], side: usize, size: usize) -> Vec<u8> {
    let mut parent: Vec<u8> = (0..size as u8).collect();
    fn find(parent: &mut [u8], mut x: u8) -> u8 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for a in autos {
        if path.iter().all(|&(s, v)| a[s][v as usize] == v) {
            for x in 0..size {
                let (rx, ry) = (find(&mut parent, x as u8), find(&mut parent, a[side][x]));
                if rx != ry {
                    let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
                    parent[hi as usize] = lo;
                }
            }
        }
    }
    (0..size as u8).map(|x| find(&mut parent, x)).collect()
}

impl Search<'_> {
    fn node_invariant(&self, p: &Partition, path: &[(usize, u8)]) -> Option<Vec<u64>> {
        let g = self.g;
        let n = g.n;
        let mut rows: Vec<usize> = path
            .iter()
            .filter(|(s, _)| *s == ROW)
            .map(|&(_, v)| v as usize / 2)
            .collect();
        rows.dedup();
        if rows.is_empty() || rows.len() > 2 {
            return None;
        }
        let mut key = vec![0u64; g.side_len];
        let mut hist = vec![0u32; n + 1];
        let side = &p.sides[ROW];
        let mut c = 0;
        while c < g.side_len {
            let len = side.len[c] as usize;
            if len > 1 {
                for &v in &side.elems[c..c + len] {
                    let r = v as usize / 2;
                    if key[v as usize] != 0 {
                        continue;
                    }
                    hist.iter_mut().for_each(|h| *h = 0);
                    if rows.len() == 1 {
                        let x = g.pairs[rows[0] * n + r];
                        for k in 0..n {
                            for &y in &g.pairs[k * n + k + 1..(k + 1) * n] {
                                let val = (n as i32 - 2 * (x ^ y).count_ones() as i32).unsigned_abs();
                                hist[val as usize] += 1;
                            }
                        }
                    } else {
                        let x = g.pairs[rows[0] * n + rows[1]] ^ g.rows[r];
                        for &y in &g.rows {
                            let val = (n as i32 - 2 * (x ^ y).count_ones() as i32).unsigned_abs();
                            hist[val as usize] += 1;
                        }
                    }
                    let h = hash_slice(&hist) | 1;
                    key[v as usize] = h;
                    key[v as usize ^ 1] = h;
                }
            }
            c += len;
        }
        Some(key)
    }

    fn leaf_key(&self, p: &Partition) -> Vec<u128> {
        let g = self.g;
        let mut col_pos = [0u8; SIDE_MAX];
        for (pos, &v) in p.sides[COL].elems[..g.side_len].iter().enumerate() {
            col_pos[v as usize] = pos as u8;
        }
        p.sides[ROW].elems[..g.side_len]
            .iter()
            .map(|&v| {
                let mut bits = g.adj[ROW][v as usize];
                let mut out = 0u128;
                while bits != 0 {
                    let c = bits.trailing_zeros();
                    bits &= bits - 1;
                    out |= 1 << col_pos[c as usize];
                }
                out
            })
            .collect()
    }

    fn automorphism(&self, from: &Leaf, to: &[Vec<u8>; 2]) -> Automorphism {
        let mut a: Automorphism = [vec![0; self.g.side_len], vec![0; self.g.side_len]];
        for side in [ROW, COL] {
            for (pos, &v) in from.labeling[side].iter().enumerate() {
                a[side][v as usize] = to[side][pos];
            }
        }
        a
    }

    fn on_leaf(&mut self, p: &Partition, trace: &[u64], path: &[(usize, u8)]) -> Option<usize> {
        let key = self.leaf_key(p);
        let labeling = [
            p.sides[ROW].elems[..self.g.side_len].to_vec(),
            p.sides[COL].elems[..self.g.side_len].to_vec(),
        ];
        let leaf = Leaf {
            trace: trace.to_vec(),
            key,
            labeling,
            path: path.to_vec(),
        };
        let Some(first) = &self.first else {
            self.first = Some(leaf.clone());
            self.best = Some(leaf);
            return None;
        };
        let common = |other: &Leaf| {
            other
                .path
                .iter()
                .zip(path)
                .take_while(|(a, b)| a == b)
                .count()
        };
        if first.trace == leaf.trace && first.key == leaf.key {
            let a = self.automorphism(first, &leaf.labeling);
            let level = common(first);
            self.autos.push(a);
            return Some(level);
        }
        let best = self.best.as_ref().expect("set with first");
        match (leaf.trace.as_slice(), &leaf.key).cmp(&(best.trace.as_slice(), &best.key)) {
            Ordering::Greater => {
                self.best = Some(leaf);
                None
            }
            Ordering::Equal => {
                let a = self.automorphism(best, &leaf.labeling);
                let level = common(best);
                self.autos.push(a);
                Some(level)
            }
            Ordering::Less => None,
        }
    }

    fn target_cell(&self, p: &Partition) -> (usize, usize) {
        for side in [ROW, COL] {
            let s = &p.sides[side];
            let mut best: Option<(usize, usize)> = None;
            let mut c = 0;
            while c < self.g.side_len {
                let len = s.len[c] as usize;
                if len > 1 && best.map_or(true, |(_, l)| len < l) {
                    best = Some((c, len));
                }
                c += len;
            }
            if let Some((c, _)) = best {
                return (side, c);
            }
        }
        unreachable!("target requested on a discrete partition")
    }

    /// `cmp_best`: how this node's trace prefix compares with the best leaf's.
    fn explore(
        &mut self,
        p: &Partition,
        trace: &mut Vec<u64>,
        path: &mut Vec<(usize, u8)>,
        cmp_best: Ordering,
    ) -> Option<usize> {
        self.nodes += 1;
        if p.is_discrete(self.g.side_len) {
            return self.on_leaf(p, trace, path);
        }
        let depth = path.len();
        let (side, start) = self.target_cell(p);
        let len = p.sides[side].len[start] as usize;
        let mut cell: Vec<u8> = p.sides[side].elems[start..start + len].to_vec();
        cell.sort_unstable();

        let mut explored: Vec<u8> = Vec::new();
        let mut roots: Option<(usize, Vec<u8>)> = None;
        for &v in &cell {
            if !explored.is_empty() {
                if roots.as_ref().map_or(true, |(k, _)| *k != self.autos.len()) {
                    roots = Some((
                        self.autos.len(),
                        orbit_roots(&self.autos, path, side, self.g.side_len),
                    ));
                }
                let r = &roots.as_ref().expect("computed").1;
                if explored.iter().any(|&u| r[u as usize] == r[v as usize]) {
                    continue;
                }
            }
            explored.push(v);

            let mut child = p.clone();
            let mut refiner = Refiner::new();
            let mut t = 0x5851_F42D_4C95_7F2D ^ (side as u64);
            refiner.individualize(&mut child, side, v);
            refiner.refine(self.g, &mut child, &mut t);
            path.push((side, v));
            if let Some(key) = self.node_invariant(&child, path) {
                refiner.split_by(self.g, &mut child, ROW, &key, &mut t);
                refiner.refine(self.g, &mut child, &mut t);
            }

            let cmp = match cmp_best {
                Ordering::Equal => match self.best.as_ref().and_then(|b| b.trace.get(depth + 1)) {
                    Some(&bt) => t.cmp(&bt),
                    None => Ordering::Equal,
                },
                other => other,
            };
            if cmp != Ordering::Less {
                trace.push(t);
                let jump = self.explore(&child, trace, path, cmp);
                trace.pop();
                if let Some(level) = jump {
                    if level < depth {
                        path.pop();
                        return Some(level);
                    }
                }
            }
            path.pop();
        }
        None
    }
}

/// Canonical representative of the equivalence class of `h`, with the signed
/// permutations that produce it: `matrix = rows · h · cols`.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub cert: CanonicalCert,
    pub matrix: SignMatrix,
    pub rows: SignedPerm,
    pub cols: SignedPerm,
    /// [`profile_hash`] of the input, computed on the way.
    pub profile: u64,
    /// Search tree nodes visited.
    pub nodes: usize,
}

pub fn canonical_form(h: &HadamardMatrix) -> Result<CanonicalForm> {
    let m = h.matrix();
    let n = m.order();
    check_order(n)?;
    let (rows, cols) = row_and_col_words(m);
    let row_prof = four_profiles(&rows);
    let col_prof = four_profiles(&cols);
    let profile = profile_digest(n, &row_prof, &col_prof);
    let g = Graph::new(rows, &cols);

    let mut root = Partition {
        sides: [Side::unit(g.side_len), Side::unit(g.side_len)],
    };
    let mut refiner = Refiner::new();
    let mut t = 0x1405_7B7E_F767_814F;
    for (side, prof) in [(ROW, &row_prof), (COL, &col_prof)] {
        let key: Vec<u64> = (0..g.side_len).map(|v| hash_slice(&prof[v / 2])).collect();
        refiner.split_by(&g, &mut root, side, &key, &mut t);
    }
    for side in [ROW, COL] {
        let mut c = 0;
        while c < g.side_len {
            refiner.push(side, c);
            c += root.sides[side].len[c] as usize;
        }
    }
    refiner.refine(&g, &mut root, &mut t);

    let antipodal: Automorphism = [
        (0..g.side_len as u8).map(|v| v ^ 1).collect(),
        (0..g.side_len as u8).map(|v| v ^ 1).collect(),
    ];
    let mut search = Search {
        g: &g,
        first: None,
        best: None,
        autos: vec![antipodal],
        nodes: 0,
    };
    let mut trace = vec![t];
    search.explore(&root, &mut trace, &mut Vec::new(), Ordering::Equal);
    let best = search.best.expect("search reaches a leaf");

    let mut row_perm = Vec::with_capacity(n);
    let mut row_signs = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for &v in &best.labeling[ROW] {
        let i = v as usize / 2;
        if !std::mem::replace(&mut seen[i], true) {
            row_perm.push(i);
            row_signs.push(if v % 2 == 0 { 1 } else { -1 });
        }
    }
    let mut col_perm = Vec::with_capacity(n);
    let mut col_signs = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for &v in &best.labeling[COL] {
        let j = v as usize / 2;
        if !std::mem::replace(&mut seen[j], true) {
            col_perm.push(j);
            col_signs.push(if v % 2 == 0 { 1 } else { -1 });
        }
    }
    let rows = SignedPerm {
        perm: row_perm,
        signs: row_signs,
    };
    let cols = SignedPerm {
        perm: col_perm,
        signs: col_signs,
    };
    let matrix = apply_signed(&rows, m, &cols);
    Ok(CanonicalForm {
        cert: CanonicalCert::from_matrix(&matrix),
        matrix,
        rows,
        cols,
        profile,
        nodes: search.nodes,
    })
}

pub fn canonical_cert(h: &HadamardMatrix) -> Result<CanonicalCert> {
    Ok(canonical_form(h)?.cert)
}

/// Like [`canonical_cert`] for an unchecked matrix.
pub fn canonical_cert_of(m: &SignMatrix) -> Result<CanonicalCert> {
    if !is_hadamard(m) {
        return Err(Error::NotHadamard);
    }
    canonical_cert(&HadamardMatrix::try_from(m.clone())?)
}

/// Result of the backtracking equivalence search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    /// `second = rows · first · cols`.
    Equivalent { rows: SignedPerm, cols: SignedPerm },
    NotEquivalent,
    /// The node budget ran out before the search finished.
    Unknown,
}

struct Matcher<'a> {
    n: usize,
    first: &'a [u64],
    second: &'a [u64],
    first_cols: Vec<u64>,
    second_cols: Vec<u64>,
    first_prof: Vec<u64>,
    second_prof: Vec<u64>,
    budget: usize,
    nodes: usize,
}

/// Column patterns over the assigned rows, normalized so the first bit is set.
fn normalized(patterns: &[u64]) -> Vec<u64> {
    let mut v: Vec<u64> = patterns
        .iter()
        .map(|&p| if p & 1 == 1 { p } else { !p })
        .collect();
    v.sort_unstable();
    v
}

impl Matcher<'_> {
    fn mask(&self, k: usize) -> u64 {
        if k >= 64 {
            u64::MAX
        } else {
            (1u64 << k) - 1
        }
    }

    /// Patterns of the first matrix's columns over rows `assign`, and of the
    /// second's over rows `0..k`.
    fn patterns(&self, assign: &[(usize, i8)]) -> (Vec<u64>, Vec<u64>) {
        let k = assign.len();
        let m = self.mask(k);
        let first: Vec<u64> = (0..self.n)
            .map(|c| {
                let mut p = 0u64;
                for (t, &(r, s)) in assign.iter().enumerate() {
                    let bit = (self.first[r] >> c) & 1;
                    let bit = if s > 0 { bit } else { bit ^ 1 };
                    p |= bit << t;
                }
                p
            })
            .collect();
        let second: Vec<u64> = self.second_cols.iter().map(|&c| c & m).collect();
        let norm = |v: Vec<u64>| {
            v.into_iter()
                .map(|p| if p & 1 == 1 { p } else { !p & m })
                .collect::<Vec<_>>()
        };
        (norm(first), norm(second))
    }

    fn try_complete(&self, assign: &[(usize, i8)]) -> Option<(SignedPerm, SignedPerm)> {
        let (first_pats, second_pats) = self.patterns(assign);
        let mut sorted = second_pats.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        let index: HashMap<u64, usize> = first_pats.iter().enumerate().map(|(c, &p)| (p, c)).collect();
        let (r0, s0) = assign[0];
        let mut col_perm = vec![0usize; self.n];
        let mut col_signs = vec![0i8; self.n];
        for b in 0..self.n {
            let c = *index.get(&second_pats[b])?;
            col_perm[b] = c;
            let h2 = if (self.second[0] >> b) & 1 == 1 { 1 } else { -1 };
            let h1 = if (self.first[r0] >> c) & 1 == 1 { 1 } else { -1 };
            col_signs[b] = h2 * s0 * h1;
        }
        let cols = SignedPerm {
            perm: col_perm,
            signs: col_signs,
        };
        // Rows of first·cols, keyed up to sign.
        let mut rows_of: HashMap<u64, (usize, i8)> = HashMap::new();
        let full = self.mask(self.n);
        for r in 0..self.n {
            let mut w = 0u64;
            for b in 0..self.n {
                let e = if (self.first[r] >> cols.perm[b]) & 1 == 1 { 1 } else { -1 };
                if e * cols.signs[b] > 0 {
                    w |= 1 << b;
                }
            }
            let (key, sign) = if w & 1 == 1 { (w, 1) } else { (!w & full, -1) };
            rows_of.insert(key, (r, sign));
        }
        let mut perm = vec![0usize; self.n];
        let mut signs = vec![0i8; self.n];
        let mut used = vec![false; self.n];
        for t in 0..self.n {
            let w = self.second[t];
            let (key, sign) = if w & 1 == 1 { (w, 1) } else { (!w & full, -1) };
            let &(r, s) = rows_of.get(&key)?;
            if std::mem::replace(&mut used[r], true) {
                return None;
            }
            perm[t] = r;
            signs[t] = s * sign;
        }
        Some((SignedPerm { perm, signs }, cols))
    }

    fn search(&mut self, assign: &mut Vec<(usize, i8)>, used: &mut [bool]) -> Option<Option<(SignedPerm, SignedPerm)>> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }
        if !assign.is_empty() {
            let (first_pats, second_pats) = self.patterns(assign);
            if normalized(&first_pats) != normalized(&second_pats) {
                return Some(None);
            }
            if let Some(found) = self.try_complete(assign) {
                return Some(Some(found));
            }
            if assign.len() == self.n.min(64) {
                return Some(None);
            }
        }
        let t = assign.len();
        let signs: &[i8] = if t == 0 { &[1] } else { &[1, -1] };
        for r in 0..self.n {
            if used[r] || self.first_prof[r] != self.second_prof[t] {
                continue;
            }
            for &s in signs {
                assign.push((r, s));
                used[r] = true;
                let out = self.search(assign, used);
                used[r] = false;
                assign.pop();
                match out {
                    None => return None,
                    Some(Some(found)) => return Some(Some(found)),
                    Some(None) => {}
                }
            }
        }
        Some(None)
    }
}

/// Backtracking search for `second = rows · first · cols`, independent of the
/// canonical labeling. Rows of `second` are matched in order to signed rows
/// of `first` with equal four-row profiles; after each step the column
/// patterns over the matched rows must agree as multisets up to sign. Once
/// the patterns are distinct the column map is forced and checked.
pub fn search_equivalent(first: &HadamardMatrix, second: &HadamardMatrix, budget: usize) -> SearchOutcome {
    let n = first.order();
    if n != second.order() || n > MAX_CANON_ORDER || n == 0 {
        return SearchOutcome::NotEquivalent;
    }
    let (f_rows, f_cols) = row_and_col_words(first.matrix());
    let (s_rows, s_cols) = row_and_col_words(second.matrix());
    let prof = |w: &[u64]| four_profiles(w).iter().map(|h| hash_slice(h)).collect::<Vec<_>>();
    let mut matcher = Matcher {
        n,
        first: &f_rows,
        second: &s_rows,
        first_prof: prof(&f_rows),
        second_prof: prof(&s_rows),
        first_cols: f_cols,
        second_cols: s_cols,
        budget,
        nodes: 0,
    };
    let mut a = matcher.first_prof.clone();
    let mut b = matcher.second_prof.clone();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return SearchOutcome::NotEquivalent;
    }
    let _ = &matcher.first_cols;
    match matcher.search(&mut Vec::new(), &mut vec![false; n]) {
        None => SearchOutcome::Unknown,
        Some(None) => SearchOutcome::NotEquivalent,
        Some(Some((rows, cols))) => {
            debug_assert_eq!(&apply_signed(&rows, first.matrix(), &cols), second.matrix());
            SearchOutcome::Equivalent { rows, cols }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{hex_decode, hex_table};
    use crate::gs::gs_assemble;
    use rand::rngs::StdRng;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn table_matrix(id: usize, k: usize) -> HadamardMatrix {
        gs_assemble(&hex_decode(&hex_table(id).unwrap()[k])).unwrap()
    }

    fn random_signed(n: usize, rng: &mut StdRng) -> SignedPerm {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let signs = (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        SignedPerm { perm, signs }
    }

    fn scramble(h: &HadamardMatrix, rng: &mut StdRng) -> HadamardMatrix {
        let n = h.order();
        let (p, q) = (random_signed(n, rng), random_signed(n, rng));
        HadamardMatrix::try_from(apply_signed(&p, h.matrix(), &q)).unwrap()
    }

    fn sylvester(k: u32) -> HadamardMatrix {
        let n = 1usize << k;
        let m = SignMatrix::from_fn(n, |i, j| if (i & j).count_ones() % 2 == 0 { 1 } else { -1 });
        HadamardMatrix::try_from(m).unwrap()
    }

    #[test]
    fn cert_hex_round_trip() {
        let h = table_matrix(2, 0);
        let cert = canonical_cert(&h).unwrap();
        assert_eq!(cert.order(), 60);
        assert_eq!(CanonicalCert::from_hex(&cert.to_hex()).unwrap(), cert);
        assert!(CanonicalCert::from_hex("3c00").is_err());
        let form = canonical_form(&h).unwrap();
        assert_eq!(form.cert.matrix(), form.matrix);
        assert!(is_hadamard(&form.matrix));
        assert_eq!(apply_signed(&form.rows, h.matrix(), &form.cols), form.matrix);
        assert!(form.rows.is_valid() && form.cols.is_valid());
    }

    #[test]
    fn cert_invariant_under_scrambling() {
        let mut rng = StdRng::seed_from_u64(7);
        for (id, k) in [(2, 0), (3, 5), (6, 1)] {
            let h = table_matrix(id, k);
            let cert = canonical_cert(&h).unwrap();
            for _ in 0..5 {
                assert_eq!(canonical_cert(&scramble(&h, &mut rng)).unwrap(), cert);
            }
        }
    }

    #[test]
    fn distinct_table_entries_have_distinct_certs() {
        let a = canonical_cert(&table_matrix(2, 0)).unwrap();
        let b = canonical_cert(&table_matrix(2, 1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn sylvester_matrices() {
        let mut rng = StdRng::seed_from_u64(3);
        for k in 0..=5 {
            let h = sylvester(k);
            let cert = canonical_cert(&h).unwrap();
            let neg = HadamardMatrix::try_from(SignMatrix::from_fn(h.order(), |i, j| -h.matrix().get(i, j))).unwrap();
            assert_eq!(canonical_cert(&neg).unwrap(), cert);
            assert_eq!(canonical_cert(&scramble(&h, &mut rng)).unwrap(), cert);
            assert!(matches!(search_equivalent(&h, &neg, 100_000), SearchOutcome::Equivalent { .. }));
        }
    }

    #[test]
    fn oracle_finds_witness() {
        let mut rng = StdRng::seed_from_u64(11);
        let h = table_matrix(4, 3);
        let g = scramble(&h, &mut rng);
        match search_equivalent(&h, &g, 1_000_000) {
            SearchOutcome::Equivalent { rows, cols } => {
                assert_eq!(&apply_signed(&rows, h.matrix(), &cols), g.matrix());
            }
            other => panic!("{other:?}"),
        }
        let other = table_matrix(4, 4);
        assert_eq!(search_equivalent(&h, &other, 1_000_000), SearchOutcome::NotEquivalent);
    }

    #[test]
    fn profile_hash_is_invariant() {
        let mut rng = StdRng::seed_from_u64(5);
        let h = table_matrix(5, 0);
        let p = profile_hash(&h).unwrap();
        assert_eq!(profile_hash(&scramble(&h, &mut rng)).unwrap(), p);
        let mut rows = h.matrix().rows();
        rows[3].iter_mut().for_each(|x| *x = -*x);
        let negated = HadamardMatrix::try_from(SignMatrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(profile_hash(&negated).unwrap(), p);
        assert_eq!(canonical_form(&h).unwrap().profile, p);
    }

    #[test]
    fn rejects_non_hadamard_and_large_orders() {
        let m = SignMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(canonical_cert_of(&m), Err(Error::NotHadamard));
        assert!(matches!(canonical_cert(&sylvester(7)), Err(Error::Shape(_))));
    }
}
