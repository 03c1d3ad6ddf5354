//! Construction pipelines for order 60, the report built from the class
//! store, and grading against an expectations file.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::codec::{class_table, hex_encode, hex_decode, hex_table, quad_decode};
use crate::designs::{
    bs_fold, enumerate_bs, gbs_orbit, near_normal_set, nn_decompose, normal_set, ns_decompose,
    quad_permute, ts_to_bs, BaseSeqQuad,
};
use crate::equiv::CanonicalCert;
use crate::error::{Error, Result};
use crate::gs::gs_assemble;
use crate::store::{Candidate, ClassStore, Representative};
use crate::yang::{yang1, yang2, yang3, yang4, Yang3Sign, Yang4Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pipeline {
    Bs87,
    Yang1,
    Yang2,
    Yang3,
    Yang4,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::Bs87,
        Pipeline::Yang1,
        Pipeline::Yang2,
        Pipeline::Yang3,
        Pipeline::Yang4,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Pipeline::Bs87 => "bs87",
            Pipeline::Yang1 => "yang1",
            Pipeline::Yang2 => "yang2",
            Pipeline::Yang3 => "yang3",
            Pipeline::Yang4 => "yang4",
        }
    }

    /// The hex table listing this pipeline's classes.
    pub fn table(self) -> usize {
        match self {
            Pipeline::Bs87 => 2,
            Pipeline::Yang1 => 3,
            Pipeline::Yang2 => 4,
            Pipeline::Yang3 => 5,
            Pipeline::Yang4 => 6,
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.tag() == s)
            .ok_or_else(|| Error::Parse(format!("unknown pipeline {s:?}")))
    }
}

/// Which pipelines to run; `full` adds the union and transpose pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunPlan {
    pub pipelines: Vec<Pipeline>,
    pub full: bool,
}

impl RunPlan {
    pub fn single(p: Pipeline) -> Self {
        Self {
            pipelines: vec![p],
            full: false,
        }
    }

    pub fn full() -> Self {
        Self {
            pipelines: Pipeline::ALL.to_vec(),
            full: true,
        }
    }
}

impl FromStr for RunPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            Ok(Self::full())
        } else {
            Ok(Self::single(s.parse()?))
        }
    }
}

/// Counters gathered while a stage runs; not part of the class counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StageStats {
    pub stage: String,
    /// Input combinations tried.
    pub inputs: usize,
    /// Distinct `BS(15,15)` quadruples (or matrices) sent to classification.
    pub distinct: usize,
    pub notes: Vec<String>,
    pub millis: u128,
    pub resumed: bool,
}

/// `|BS(8,7)|` and its orbit partition, in Table 1 row order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationStats {
    pub size: usize,
    pub orbit_sizes: Vec<usize>,
    pub covered: usize,
    pub millis: u128,
}

fn tagged(list: Vec<BaseSeqQuad>, tag: &str) -> Vec<(BaseSeqQuad, String)> {
    list.into_iter().map(|q| (q, tag.to_owned())).collect()
}

fn row_tag(row: usize) -> String {
    format!("bs87/row{row:02}")
}

/// Enumerates `BS(8,7)` and splits it into the orbits of the Table 1 rows.
/// Returns the statistics and the row (1-based) of every element.
pub fn bs87_orbits() -> Result<(EnumerationStats, Vec<(BaseSeqQuad, usize)>)> {
    let start = Instant::now();
    let all = enumerate_bs(8, 7)?;
    let rows = class_table()?;
    let orbits = rows
        .par_iter()
        .map(|r| gbs_orbit(&quad_decode(&r.code)?))
        .collect::<Result<Vec<_>>>()?;
    let mut row_of: HashMap<&BaseSeqQuad, usize> = HashMap::new();
    for (k, orbit) in orbits.iter().enumerate() {
        for q in orbit {
            if row_of.insert(q, rows[k].index).is_some() {
                return Err(Error::PostconditionFailure {
                    stage: "bs87",
                    detail: format!("{q} lies in two Table 1 orbits"),
                });
            }
        }
    }
    let mut labelled = Vec::with_capacity(all.len());
    for q in &all {
        let row = *row_of.get(q).ok_or_else(|| Error::PostconditionFailure {
            stage: "bs87",
            detail: format!("{q} lies in no Table 1 orbit"),
        })?;
        labelled.push((q.clone(), row));
    }
    let stats = EnumerationStats {
        size: all.len(),
        orbit_sizes: orbits.iter().map(Vec::len).collect(),
        covered: row_of.len(),
        millis: start.elapsed().as_millis(),
    };
    Ok((stats, labelled))
}

fn bs87_quads(stats: &mut StageStats) -> Result<Vec<(BaseSeqQuad, String)>> {
    let (_, labelled) = bs87_orbits()?;
    stats.inputs = labelled.len();
    labelled
        .into_par_iter()
        .map(|(q, row)| Ok((bs_fold(&q)?, row_tag(row))))
        .collect()
}

fn yang1_quads(stats: &mut StageStats) -> Result<Vec<(BaseSeqQuad, String)>> {
    let mut out = Vec::new();
    for (n, (s, t), tag) in [(1, (3, 2), "yang1/ns1xbs32"), (2, (2, 1), "yang1/ns2xbs21")] {
        let bs = enumerate_bs(s, t)?;
        for ns in normal_set(n)? {
            let dec = ns_decompose(&ns)?;
            for b in &bs {
                stats.inputs += 1;
                out.push((ts_to_bs(&yang1(&dec, b)?)?, tag.to_owned()));
            }
        }
    }
    with_swapped(out)
}

fn yang2_quads(stats: &mut StageStats) -> Result<Vec<(BaseSeqQuad, String)>> {
    let mut out = Vec::new();
    for (n, (s, t), tag) in [(3, (3, 2), "yang2/ns3xbs32"), (5, (2, 1), "yang2/ns5xbs21")] {
        let bs = enumerate_bs(s, t)?;
        for ns in normal_set(n)? {
            let dec = ns_decompose(&ns)?;
            for b in &bs {
                stats.inputs += 1;
                out.push((yang2(&dec, b)?, tag.to_owned()));
            }
        }
    }
    with_swapped(out)
}

/// Adds the odd-parity image `(B,A,C,D)` of every quadruple under the tag
/// `<tag>/swapped`.
fn with_swapped(quads: Vec<(BaseSeqQuad, String)>) -> Result<Vec<(BaseSeqQuad, String)>> {
    let swapped = quads
        .iter()
        .map(|(q, tag)| Ok((quad_permute(q, [1, 0, 2, 3])?, format!("{tag}/swapped"))))
        .collect::<Result<Vec<_>>>()?;
    let mut out = quads;
    out.extend(swapped);
    Ok(out)
}

/// `BS(3,2)` factors whose `C` and `D` are palindromes.
fn palindromic_tails(q: &BaseSeqQuad) -> bool {
    q.c().reverse() == *q.c() && q.d().reverse() == *q.d()
}

fn yang3_quads(stats: &mut StageStats) -> Result<Vec<(BaseSeqQuad, String)>> {
    let bs = enumerate_bs(2, 1)?;
    let nn = near_normal_set(2)?;
    let mut direct = Vec::new();
    let mut printed_valid = 0;
    let mut undecomposable = 0;
    for x in &nn {
        let Ok(dec) = nn_decompose(x) else {
            undecomposable += 1;
            continue;
        };
        for b in &bs {
            stats.inputs += 1;
            printed_valid += yang3(&dec, b, Yang3Sign::AsPrinted).is_ok() as usize;
            direct.push(ts_to_bs(&yang3(&dec, b, Yang3Sign::Corrected)?)?);
        }
    }
    stats.notes.push(format!(
        "NN(2): {} elements, {undecomposable} without the printed decomposition",
        nn.len()
    ));
    stats.notes.push(format!(
        "sign as printed: {printed_valid}/{} outputs are T-sequences; corrected sign: {}/{}",
        stats.inputs,
        direct.len(),
        stats.inputs
    ));
    with_swapped(tagged(direct, "yang3/nn2xbs21"))
}

fn yang4_quads(stats: &mut StageStats) -> Result<Vec<(BaseSeqQuad, String)>> {
    let bs21 = enumerate_bs(2, 1)?;
    let bs32 = enumerate_bs(3, 2)?;
    let tails: Vec<BaseSeqQuad> = bs32.iter().filter(|q| palindromic_tails(q)).cloned().collect();
    let mut out = Vec::new();
    for (first, second, tag) in [(&bs21, &bs32, "yang4/bs21xbs32"), (&bs32, &bs21, "yang4/bs32xbs21")] {
        let (mut printed_valid, mut n) = (0, 0);
        for x in first {
            for y in second {
                n += 1;
                printed_valid += yang4(x, y, Yang4Variant::AsPrinted).is_ok() as usize;
            }
        }
        stats.notes.push(format!(
            "{tag}: formula as printed gives {printed_valid}/{n} base sequences"
        ));
    }
    for (first, second, tag) in [(&bs21, &tails, "yang4/bs21xbs32"), (&tails, &bs21, "yang4/bs32xbs21")] {
        for x in first {
            for y in second {
                stats.inputs += 1;
                out.push((yang4(x, y, Yang4Variant::AsPrinted)?, tag.to_owned()));
            }
        }
    }
    stats.notes.push(format!(
        "BS(3,2) factors restricted to the {} with palindromic C and D",
        tails.len()
    ));
    with_swapped(out)
}

fn quad_candidates(quads: Vec<(BaseSeqQuad, String)>, stats: &mut StageStats) -> Result<Vec<Candidate>> {
    let mut seen = HashSet::new();
    let unique: Vec<(BaseSeqQuad, String)> = quads
        .into_iter()
        .filter(|(q, tag)| seen.insert((q.clone(), tag.clone())))
        .collect();
    stats.distinct = unique.len();
    unique
        .into_par_iter()
        .map(|(q, provenance)| {
            let matrix = gs_assemble(&q)?;
            Ok(Candidate {
                matrix,
                representative: Representative::from_hex(&hex_encode(&q)?),
                provenance,
            })
        })
        .collect()
}

fn table_candidates(id: usize, stats: &mut StageStats) -> Result<Vec<Candidate>> {
    let codes = hex_table(id)?;
    stats.inputs = codes.len();
    let mut round_trip_failures = 0;
    let out = codes
        .iter()
        .map(|code| {
            let q = hex_decode(code);
            round_trip_failures += (hex_encode(&q)? != *code) as usize;
            Ok(Candidate {
                matrix: gs_assemble(&q)?,
                representative: Representative::from_hex(code),
                provenance: format!("table{id}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    stats.distinct = out.len();
    if round_trip_failures > 0 {
        return Err(Error::PostconditionFailure {
            stage: "tables",
            detail: format!("{round_trip_failures} hex codes of table {id} fail to round-trip"),
        });
    }
    Ok(out)
}

/// Union of the five pipelines' certificates.
fn union_certs(store: &ClassStore) -> BTreeSet<CanonicalCert> {
    Pipeline::ALL
        .iter()
        .flat_map(|p| store.certs_tagged(p.tag()))
        .cloned()
        .collect()
}

fn transpose_candidates(store: &ClassStore, stats: &mut StageStats) -> Result<Vec<Candidate>> {
    let union = union_certs(store);
    stats.inputs = union.len();
    let out: Vec<Candidate> = union
        .par_iter()
        .map(|cert| {
            let rec = store.get(cert).expect("certificate from the store");
            let t = rec.representative.matrix()?.transpose();
            Ok(Candidate {
                representative: Representative::from_matrix(&t),
                matrix: t,
                provenance: "transpose".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    stats.distinct = out.len();
    Ok(out)
}

/// Stage names in execution order for a plan.
pub fn stages(plan: &RunPlan) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for p in &plan.pipelines {
        out.push(p.tag().to_owned());
        out.push(format!("table{}", p.table()));
    }
    if plan.full {
        out.push("transpose".into());
    }
    out
}

/// Runs one stage into the store unless the store marks it done.
pub fn run_stage(stage: &str, store: &mut ClassStore) -> Result<StageStats> {
    let mut stats = StageStats {
        stage: stage.to_owned(),
        ..StageStats::default()
    };
    if store.is_stage_done(stage) {
        stats.resumed = true;
        return Ok(stats);
    }
    let start = Instant::now();
    let candidates = match stage {
        "bs87" => {
            let q = bs87_quads(&mut stats)?;
            quad_candidates(q, &mut stats)?
        }
        "yang1" => {
            let q = yang1_quads(&mut stats)?;
            quad_candidates(q, &mut stats)?
        }
        "yang2" => {
            let q = yang2_quads(&mut stats)?;
            quad_candidates(q, &mut stats)?
        }
        "yang3" => {
            let q = yang3_quads(&mut stats)?;
            quad_candidates(q, &mut stats)?
        }
        "yang4" => {
            let q = yang4_quads(&mut stats)?;
            quad_candidates(q, &mut stats)?
        }
        "transpose" => {
            for p in Pipeline::ALL {
                if !store.is_stage_done(p.tag()) {
                    return Err(Error::Shape(format!(
                        "the transpose pass needs every pipeline; {p} has not run"
                    )));
                }
            }
            transpose_candidates(store, &mut stats)?
        }
        other => match other.strip_prefix("table").and_then(|d| d.parse::<usize>().ok()) {
            Some(id @ 2..=6) => table_candidates(id, &mut stats)?,
            _ => return Err(Error::Parse(format!("unknown stage {other:?}"))),
        },
    };
    store.absorb(candidates)?;
    store.mark_stage_done(stage)?;
    stats.millis = start.elapsed().as_millis();
    Ok(stats)
}

/// Runs every stage of `plan` and builds the report from the store.
pub fn run(plan: &RunPlan, store: &mut ClassStore) -> Result<PipelineReport> {
    run_with_progress(plan, store, |_| {})
}

pub fn run_with_progress(
    plan: &RunPlan,
    store: &mut ClassStore,
    mut progress: impl FnMut(&StageStats),
) -> Result<PipelineReport> {
    let mut stage_stats = Vec::new();
    for stage in stages(plan) {
        let stats = run_stage(&stage, store)?;
        progress(&stats);
        stage_stats.push(stats);
    }
    let enumeration = if plan.pipelines.contains(&Pipeline::Bs87) {
        Some(bs87_orbits()?.0)
    } else {
        None
    };
    store.compact()?;
    let mut report = PipelineReport::from_store(store, plan);
    report.enumeration = enumeration;
    report.stages = stage_stats;
    Ok(report)
}

/// Cross-validation of a pipeline's classes against its hex table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableCheck {
    pub table: usize,
    pub pipeline: Pipeline,
    pub table_classes: usize,
    pub pipeline_classes: usize,
    /// First certificate (hex) in one set but not the other.
    pub first_divergent: Option<String>,
}

impl TableCheck {
    pub fn agrees(&self) -> bool {
        self.first_divergent.is_none()
    }
}

/// Every count is a query on the store at report time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipelineReport {
    pub classes: BTreeMap<Pipeline, usize>,
    /// Classes per provenance tag below a pipeline, e.g. `yang1/ns1xbs32`.
    pub sub_classes: BTreeMap<String, usize>,
    /// Hadamard classes per Table 1 row, when `bs87` ran.
    pub table1_rows: Option<Vec<usize>>,
    /// Certificates produced from more than one Table 1 orbit.
    pub bs87_shared_certs: Option<usize>,
    /// Pairwise overlaps of the pipelines that ran.
    pub overlaps: BTreeMap<(Pipeline, Pipeline), usize>,
    /// `bs87` classes also produced by another pipeline.
    pub bs87_vs_rest: Option<usize>,
    pub union: Option<usize>,
    pub transpose_new: Option<usize>,
    pub total: Option<usize>,
    pub tables: Vec<TableCheck>,
    pub enumeration: Option<EnumerationStats>,
    pub stages: Vec<StageStats>,
}

impl PipelineReport {
    pub fn from_store(store: &ClassStore, plan: &RunPlan) -> Self {
        let mut r = PipelineReport::default();
        let sets: BTreeMap<Pipeline, BTreeSet<&CanonicalCert>> = plan
            .pipelines
            .iter()
            .map(|&p| (p, store.certs_tagged(p.tag())))
            .collect();
        for (&p, set) in &sets {
            r.classes.insert(p, set.len());
        }
        let mut per_tag: BTreeMap<String, usize> = BTreeMap::new();
        for rec in store.records() {
            for tag in &rec.provenance {
                if tag.contains('/') {
                    *per_tag.entry(tag.clone()).or_default() += 1;
                }
            }
        }
        r.sub_classes = per_tag
            .into_iter()
            .filter(|(t, _)| sets.keys().any(|p| t.starts_with(&format!("{p}/"))))
            .collect();
        if sets.contains_key(&Pipeline::Bs87) {
            let rows = class_table().map(|t| t.len()).unwrap_or(0);
            r.table1_rows = Some(
                (1..=rows)
                    .map(|k| store.certs_tagged(&row_tag(k)).len())
                    .collect(),
            );
            r.bs87_shared_certs = Some(
                store
                    .records()
                    .filter(|rec| rec.provenance.iter().filter(|t| t.starts_with("bs87/")).count() > 1)
                    .count(),
            );
        }
        let keys: Vec<Pipeline> = sets.keys().copied().collect();
        for (i, &a) in keys.iter().enumerate() {
            for &b in &keys[i + 1..] {
                let n = sets[&a].intersection(&sets[&b]).count();
                r.overlaps.insert((a, b), n);
            }
        }
        if keys.len() == Pipeline::ALL.len() {
            let rest: BTreeSet<&CanonicalCert> = keys[1..].iter().flat_map(|p| sets[p].iter().copied()).collect();
            r.bs87_vs_rest = Some(sets[&Pipeline::Bs87].intersection(&rest).count());
            let union = union_certs(store);
            r.union = Some(union.len());
            if plan.full {
                let transposed = store.certs_tagged("transpose");
                let new = transposed.iter().filter(|c| !union.contains(**c)).count();
                r.transpose_new = Some(new);
                r.total = Some(union.len() + new);
            }
        }
        for (&p, set) in &sets {
            let table = store.certs_tagged(&format!("table{}", p.table()));
            let first_divergent = set
                .symmetric_difference(&table)
                .next()
                .map(|c| c.to_hex());
            r.tables.push(TableCheck {
                table: p.table(),
                pipeline: p,
                table_classes: table.len(),
                pipeline_classes: set.len(),
                first_divergent,
            });
        }
        r
    }
}

impl fmt::Display for PipelineReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = &self.enumeration {
            writeln!(f, "BS(8,7): {} quadruples, {} orbits, sizes {:?}", e.size, e.orbit_sizes.len(), e.orbit_sizes)?;
        }
        for s in &self.stages {
            if s.resumed {
                writeln!(f, "stage {}: resumed from store", s.stage)?;
            } else {
                writeln!(f, "stage {}: {} inputs, {} distinct, {} ms", s.stage, s.inputs, s.distinct, s.millis)?;
            }
            for note in &s.notes {
                writeln!(f, "  {note}")?;
            }
        }
        for (p, n) in &self.classes {
            writeln!(f, "{p}: {n} classes")?;
        }
        for (tag, n) in &self.sub_classes {
            writeln!(f, "  {tag}: {n}")?;
        }
        if let Some(rows) = &self.table1_rows {
            writeln!(f, "Table 1 rows: {rows:?} (sum {})", rows.iter().sum::<usize>())?;
        }
        if let Some(n) = self.bs87_shared_certs {
            writeln!(f, "classes reached from two different BS(8,7) orbits: {n}")?;
        }
        for ((a, b), n) in &self.overlaps {
            writeln!(f, "overlap {a} / {b}: {n}")?;
        }
        if let Some(n) = self.bs87_vs_rest {
            writeln!(f, "overlap bs87 / others: {n}")?;
        }
        if let Some(n) = self.union {
            writeln!(f, "union: {n}")?;
        }
        if let (Some(new), Some(total)) = (self.transpose_new, self.total) {
            writeln!(f, "transpose pass: {new} new, total {total}")?;
        }
        for t in &self.tables {
            match &t.first_divergent {
                None => writeln!(f, "table {} = {} ({} classes)", t.table, t.pipeline, t.table_classes)?,
                Some(c) => writeln!(
                    f,
                    "table {} ({}) differs from {} ({}), first divergent cert {}..",
                    t.table,
                    t.table_classes,
                    t.pipeline,
                    t.pipeline_classes,
                    &c[..c.len().min(24)]
                )?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct EnumerationExpect {
    pub size: usize,
    pub orbit_sizes: Vec<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Bs87Expect {
    pub rows: Vec<usize>,
    pub total: usize,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct UnionExpect {
    pub total: usize,
    pub yang2_yang1: usize,
    pub yang2_yang3: usize,
    pub bs87_rest: usize,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct TransposeExpect {
    pub new: usize,
    pub total: usize,
}

/// Expected values, read from TOML.
#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub enumeration: Option<EnumerationExpect>,
    pub bs87: Option<Bs87Expect>,
    #[serde(default)]
    pub classes: BTreeMap<String, usize>,
    pub union: Option<UnionExpect>,
    pub transpose: Option<TransposeExpect>,
}

impl FromStr for Expectations {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("expectations: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: expected {}, got {}", self.name, self.expected, self.actual)
    }
}

fn check(out: &mut Vec<Check>, name: impl Into<String>, expected: impl fmt::Debug, actual: impl fmt::Debug) {
    out.push(Check {
        name: name.into(),
        expected: format!("{expected:?}"),
        actual: format!("{actual:?}"),
    });
}

impl Expectations {
    /// Checks for every section the report covers; sections the report
    /// lacks are skipped. Table cross-validation is always checked.
    pub fn grade(&self, r: &PipelineReport) -> Vec<Check> {
        let mut out = Vec::new();
        if let (Some(e), Some(got)) = (&self.enumeration, &r.enumeration) {
            check(&mut out, "BS(8,7) size", e.size, got.size);
            check(&mut out, "BS(8,7) orbit sizes", &e.orbit_sizes, &got.orbit_sizes);
            check(&mut out, "orbits cover BS(8,7)", e.size, got.covered);
        }
        if let (Some(e), Some(rows)) = (&self.bs87, &r.table1_rows) {
            check(&mut out, "Table 1 rows", &e.rows, rows);
            check(&mut out, "bs87 total", e.total, r.classes.get(&Pipeline::Bs87).copied().unwrap_or(0));
        }
        for (p, &got) in &r.classes {
            if let Some(&want) = self.classes.get(p.tag()) {
                check(&mut out, format!("{p} classes"), want, got);
            }
        }
        if let (Some(e), Some(union)) = (&self.union, r.union) {
            check(&mut out, "union", e.total, union);
            let ov = |a, b| r.overlaps.get(&(a, b)).copied().unwrap_or(0);
            check(&mut out, "overlap yang2/yang1", e.yang2_yang1, ov(Pipeline::Yang1, Pipeline::Yang2));
            check(&mut out, "overlap yang2/yang3", e.yang2_yang3, ov(Pipeline::Yang2, Pipeline::Yang3));
            check(&mut out, "overlap bs87/others", e.bs87_rest, r.bs87_vs_rest.unwrap_or(0));
        }
        if let (Some(e), Some(new), Some(total)) = (&self.transpose, r.transpose_new, r.total) {
            check(&mut out, "transpose new", e.new, new);
            check(&mut out, "total", e.total, total);
        }
        for t in &r.tables {
            check(
                &mut out,
                format!("table {} equals {}", t.table, t.pipeline),
                None::<String>,
                t.first_divergent.as_deref().map(|c| c[..c.len().min(24)].to_owned()),
            );
        }
        out
    }
}

/// The expectations shipped with the repository.
pub const DEFAULT_EXPECTATIONS: &str = include_str!("../../../expectations.toml");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_parsing() {
        assert_eq!("all".parse::<RunPlan>().unwrap(), RunPlan::full());
        assert_eq!("yang3".parse::<RunPlan>().unwrap(), RunPlan::single(Pipeline::Yang3));
        assert!("yang5".parse::<RunPlan>().is_err());
        assert_eq!(stages(&RunPlan::single(Pipeline::Yang1)), vec!["yang1", "table3"]);
        assert_eq!(stages(&RunPlan::full()).last().unwrap(), "transpose");
    }

    #[test]
    fn expectations_parse() {
        let e: Expectations = DEFAULT_EXPECTATIONS.parse().unwrap();
        assert_eq!(e.bs87.unwrap().rows.len(), 17);
        assert_eq!(e.classes.len(), 4);
        assert!("bogus = 1".parse::<Expectations>().is_err());
    }

    #[test]
    fn transpose_needs_all_pipelines() {
        let mut store = ClassStore::new();
        assert!(run_stage("transpose", &mut store).is_err());
        assert!(run_stage("table9", &mut store).is_err());
    }

    #[test]
    fn table_stage_is_resumable() {
        let mut store = ClassStore::new();
        let first = run_stage("table5", &mut store).unwrap();
        assert_eq!((first.inputs, store.len()), (64, 64));
        assert!(run_stage("table5", &mut store).unwrap().resumed);
    }

    #[test]
    fn yang3_report_matches_its_table() {
        let mut store = ClassStore::new();
        let report = run(&RunPlan::single(Pipeline::Yang3), &mut store).unwrap();
        let checks = Expectations::from_str(DEFAULT_EXPECTATIONS).unwrap().grade(&report);
        assert!(checks.iter().all(Check::passed), "{report}");
        assert_eq!(report.classes[&Pipeline::Yang3], 64);
    }
}
