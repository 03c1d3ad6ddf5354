//! Equivalence-class store keyed by canonical certificate, persisted as
//! JSON lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{hex_decode, HexCode};
use crate::equiv::{canonical_form, CanonicalCert};
use crate::error::{Error, Result};
use crate::gs::{gs_assemble, HadamardMatrix};

/// How a class member is written down: the 15-hex-digit base-sequence form
/// when the generating quadruple is known, else the raw matrix text.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representative {
    Hex(String),
    Raw(String),
}

impl Representative {
    pub fn from_hex(code: &HexCode) -> Self {
        Self::Hex(code.as_str().to_owned())
    }

    pub fn from_matrix(h: &HadamardMatrix) -> Self {
        Self::Raw(h.matrix().to_raw())
    }

    pub fn matrix(&self) -> Result<HadamardMatrix> {
        match self {
            Self::Hex(code) => gs_assemble(&hex_decode(&code.parse()?)),
            Self::Raw(text) => text.parse(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassRecord {
    pub cert: CanonicalCert,
    pub order: usize,
    pub representative: Representative,
    pub provenance: BTreeSet<String>,
    pub first_seen: String,
    pub profile: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Line {
    Class {
        cert: String,
        order: usize,
        representative: Representative,
        provenance: Vec<String>,
        first_seen: String,
        profile: String,
    },
    Stage {
        stage_done: String,
    },
}

impl From<&ClassRecord> for Line {
    fn from(r: &ClassRecord) -> Self {
        Line::Class {
            cert: r.cert.to_hex(),
            order: r.order,
            representative: r.representative.clone(),
            provenance: r.provenance.iter().cloned().collect(),
            first_seen: r.first_seen.clone(),
            profile: format!("{:016x}", r.profile),
        }
    }
}

/// A matrix waiting to be classified.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub matrix: HadamardMatrix,
    pub representative: Representative,
    pub provenance: String,
}

/// One representative per certificate, with merged provenance tags.
///
/// Merging is order independent except for `first_seen`: the least
/// representative encoding wins and provenance sets are unioned.
#[derive(Debug, Default)]
pub struct ClassStore {
    classes: BTreeMap<CanonicalCert, ClassRecord>,
    stages: BTreeSet<String>,
    path: Option<PathBuf>,
    log: Option<BufWriter<File>>,
}

impl ClassStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens (or creates) a store file; existing lines are merged and new
    /// changes are appended.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut store = Self::new();
        if path.exists() {
            let file = BufReader::new(File::open(&path)?);
            for (k, line) in file.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: Line = serde_json::from_str(&line).map_err(|e| {
                    Error::Parse(format!("{}:{}: {e}", path.display(), k + 1))
                })?;
                store.apply(parsed)?;
            }
        }
        store.log = Some(BufWriter::new(
            OpenOptions::new().create(true).append(true).open(&path)?,
        ));
        store.path = Some(path);
        Ok(store)
    }

    fn apply(&mut self, line: Line) -> Result<()> {
        match line {
            Line::Stage { stage_done } => {
                self.stages.insert(stage_done);
            }
            Line::Class {
                cert,
                order,
                representative,
                provenance,
                first_seen,
                profile,
            } => {
                let cert = CanonicalCert::from_hex(&cert)?;
                if cert.order() != order {
                    return Err(Error::Parse(format!("certificate order differs from order {order}")));
                }
                let profile =
                    u64::from_str_radix(&profile, 16).map_err(|_| Error::Parse(format!("bad profile {profile}")))?;
                let incoming = ClassRecord {
                    cert,
                    order,
                    representative,
                    provenance: provenance.into_iter().collect(),
                    first_seen,
                    profile,
                };
                self.merge(incoming)?;
            }
        }
        Ok(())
    }

    /// Returns the merged record if it changed.
    fn merge(&mut self, incoming: ClassRecord) -> Result<Option<&ClassRecord>> {
        use std::collections::btree_map::Entry;
        match self.classes.entry(incoming.cert.clone()) {
            Entry::Vacant(slot) => Ok(Some(slot.insert(incoming))),
            Entry::Occupied(slot) => {
                let rec = slot.into_mut();
                if rec.profile != incoming.profile {
                    return Err(Error::PostconditionFailure {
                        stage: "store",
                        detail: format!(
                            "profile hashes {:016x} and {:016x} under one certificate",
                            rec.profile, incoming.profile
                        ),
                    });
                }
                let mut changed = false;
                if incoming.representative < rec.representative {
                    rec.representative = incoming.representative;
                    changed = true;
                }
                for tag in incoming.provenance {
                    changed |= rec.provenance.insert(tag);
                }
                Ok(changed.then_some(&*rec))
            }
        }
    }

    /// Inserts one classified matrix; returns true if the certificate is new.
    pub fn insert(
        &mut self,
        cert: CanonicalCert,
        profile: u64,
        representative: Representative,
        provenance: &str,
    ) -> Result<bool> {
        let is_new = !self.classes.contains_key(&cert);
        let record = ClassRecord {
            order: cert.order(),
            cert,
            representative,
            provenance: BTreeSet::from([provenance.to_owned()]),
            first_seen: provenance.to_owned(),
            profile,
        };
        let line = self.merge(record)?.map(Line::from);
        if let (Some(log), Some(line)) = (self.log.as_mut(), line) {
            serde_json::to_writer(&mut *log, &line)?;
            log.write_all(b"\n")?;
        }
        Ok(is_new)
    }

    /// Canonicalizes the candidates in parallel and merges them in input
    /// order. Returns the number of new certificates.
    pub fn absorb(&mut self, candidates: Vec<Candidate>) -> Result<usize> {
        let forms = candidates
            .par_iter()
            .map(|c| canonical_form(&c.matrix))
            .collect::<Result<Vec<_>>>()?;
        let mut added = 0;
        for (c, f) in candidates.into_iter().zip(forms) {
            added += self.insert(f.cert, f.profile, c.representative, &c.provenance)? as usize;
        }
        self.flush()?;
        Ok(added)
    }

    pub fn mark_stage_done(&mut self, stage: &str) -> Result<()> {
        if self.stages.insert(stage.to_owned()) {
            if let Some(log) = self.log.as_mut() {
                serde_json::to_writer(
                    &mut *log,
                    &Line::Stage {
                        stage_done: stage.to_owned(),
                    },
                )?;
                log.write_all(b"\n")?;
            }
        }
        self.flush()
    }

    pub fn is_stage_done(&self, stage: &str) -> bool {
        self.stages.contains(stage)
    }

    pub fn stages(&self) -> impl Iterator<Item = &str> {
        self.stages.iter().map(String::as_str)
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(log) = self.log.as_mut() {
            log.flush()?;
        }
        Ok(())
    }

    /// Rewrites the backing file with one line per class, in certificate
    /// order, followed by the stage markers.
    pub fn compact(&mut self) -> Result<()> {
        let Some(path) = self.path.clone() else {
            return Ok(());
        };
        self.log = None;
        let tmp = path.with_extension("jsonl.tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            self.write_lines(&mut out)?;
            out.flush()?;
        }
        fs::rename(&tmp, &path)?;
        self.log = Some(BufWriter::new(OpenOptions::new().append(true).open(&path)?));
        Ok(())
    }

    fn write_lines(&self, out: &mut impl Write) -> Result<()> {
        for rec in self.classes.values() {
            serde_json::to_writer(&mut *out, &Line::from(rec))?;
            out.write_all(b"\n")?;
        }
        for stage in &self.stages {
            serde_json::to_writer(
                &mut *out,
                &Line::Stage {
                    stage_done: stage.clone(),
                },
            )?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// The compacted JSON-lines text.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_lines(&mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, cert: &CanonicalCert) -> Option<&ClassRecord> {
        self.classes.get(cert)
    }

    pub fn records(&self) -> impl Iterator<Item = &ClassRecord> {
        self.classes.values()
    }

    /// Certificates carrying a provenance tag equal to `tag` or starting
    /// with `tag/`.
    pub fn certs_tagged(&self, tag: &str) -> BTreeSet<&CanonicalCert> {
        let nested = format!("{tag}/");
        self.classes
            .values()
            .filter(|r| r.provenance.iter().any(|p| p == tag || p.starts_with(&nested)))
            .map(|r| &r.cert)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::hex_table;

    fn candidate(k: usize, tag: &str) -> Candidate {
        let code = &hex_table(2).unwrap()[k];
        Candidate {
            matrix: gs_assemble(&hex_decode(code)).unwrap(),
            representative: Representative::from_hex(code),
            provenance: tag.into(),
        }
    }

    #[test]
    fn repeated_matrix_is_one_class() {
        let mut store = ClassStore::new();
        let added = store.absorb(vec![candidate(0, "x"); 100]).unwrap();
        assert_eq!((added, store.len()), (1, 1));
    }

    #[test]
    fn merge_keeps_least_representative_and_all_tags() {
        let c = candidate(3, "b");
        let raw = Representative::from_matrix(&c.matrix);
        let mut one = ClassStore::new();
        one.absorb(vec![
            Candidate {
                representative: raw.clone(),
                provenance: "a".into(),
                ..c.clone()
            },
            c.clone(),
        ])
        .unwrap();
        let mut two = ClassStore::new();
        two.absorb(vec![
            c.clone(),
            Candidate {
                representative: raw,
                provenance: "a".into(),
                ..c.clone()
            },
        ])
        .unwrap();
        let (r1, r2) = (one.records().next().unwrap(), two.records().next().unwrap());
        assert_eq!(r1.representative, c.representative);
        assert_eq!(r1.representative, r2.representative);
        assert_eq!(r1.provenance, r2.provenance);
        assert_eq!(r1.first_seen, "a");
        assert_eq!(r2.first_seen, "b");
        assert!(matches!(r1.representative, Representative::Hex(_)));
    }

    #[test]
    fn tagged_queries() {
        let mut store = ClassStore::new();
        store
            .absorb(vec![candidate(0, "p/one"), candidate(1, "p/two"), candidate(2, "q")])
            .unwrap();
        assert_eq!(store.certs_tagged("p").len(), 2);
        assert_eq!(store.certs_tagged("p/two").len(), 1);
        assert_eq!(store.certs_tagged("q").len(), 1);
        assert_eq!(store.certs_tagged("pq").len(), 0);
    }

    #[test]
    fn persistence_round_trip_and_compaction() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("classes.jsonl");
        {
            let mut store = ClassStore::open(&path).unwrap();
            store.absorb(vec![candidate(0, "s"), candidate(1, "s")]).unwrap();
            store.mark_stage_done("s").unwrap();
            store.absorb(vec![candidate(0, "t")]).unwrap();
        }
        let mut store = ClassStore::open(&path).unwrap();
        assert_eq!(store.len(), 2);
        assert!(store.is_stage_done("s"));
        assert!(!store.is_stage_done("t"));
        assert_eq!(store.certs_tagged("t").len(), 1);
        let before = fs::read_to_string(&path).unwrap().lines().count();
        store.compact().unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.lines().count() < before);
        assert_eq!(text, store.to_jsonl().unwrap());
        let reopened = ClassStore::open(&path).unwrap();
        let rec = reopened.records().next().unwrap();
        assert_eq!(rec.representative.matrix().unwrap().order(), 60);
        assert_eq!(reopened.len(), 2);
    }

    #[test]
    fn corrupt_lines_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(&path, "{\"nonsense\": 1}\n").unwrap();
        assert!(matches!(ClassStore::open(&path), Err(Error::Parse(_))));
    }
}
