//! Acceptance criteria 1-8. Each test prints one PASS/FAIL line; the
//! pipeline criteria share a single full run.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::Instant;

use hadamard_forge::codec::{
    class_table, hex_decode, hex_encode, hex_table, kks_invariant_holds, quad_decode, quad_encode,
    QuadCode, RenderMode,
};
use hadamard_forge::designs::{even_permutations, quad_permute, validate_bs, BaseSeqQuad};
use hadamard_forge::equiv::{
    apply_signed, canonical_cert, search_equivalent, CanonicalCert, SearchOutcome, SignedPerm,
};
use hadamard_forge::gs::{gs_assemble, is_hadamard, HadamardMatrix, SignMatrix};
use hadamard_forge::pipeline::{run, Pipeline, PipelineReport, RunPlan};
use hadamard_forge::store::ClassStore;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

struct FullRun {
    report: PipelineReport,
    seconds: f64,
}

fn full_run() -> &'static FullRun {
    static RUN: OnceLock<FullRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let mut store = ClassStore::new();
        let report = run(&RunPlan::full(), &mut store).expect("full run");
        println!("{report}");
        FullRun {
            report,
            seconds: start.elapsed().as_secs_f64(),
        }
    })
}

fn verdict(id: u32, what: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("criterion {id}: PASS {what}");
    } else {
        println!("criterion {id}: FAIL {what}: {}", failures.join("; "));
    }
    assert!(failures.is_empty(), "criterion {id} failed: {failures:?}");
}

fn expect<T: PartialEq + std::fmt::Debug>(failures: &mut Vec<String>, name: &str, want: T, got: T) {
    if want != got {
        failures.push(format!("{name}: expected {want:?}, got {got:?}"));
    }
}

const ORBIT_SIZES: [usize; 17] = [
    2048, 4096, 2048, 2048, 4096, 2048, 2048, 4096, 2048, 512, 2048, 2048, 1024, 2048, 2048, 256, 1024,
];
const ROW_CLASSES: [usize; 17] = [32, 64, 32, 32, 64, 32, 32, 64, 32, 8, 32, 32, 16, 32, 32, 6, 16];

#[test]
fn criterion_1_enumeration() {
    let start = Instant::now();
    let (stats, _) = hadamard_forge::pipeline::bs87_orbits().unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut f = Vec::new();
    expect(&mut f, "|BS(8,7)|", 35584, stats.size);
    expect(&mut f, "orbit sizes", ORBIT_SIZES.to_vec(), stats.orbit_sizes.clone());
    expect(&mut f, "orbits cover the set", 35584, stats.covered);
    if secs > 60.0 {
        f.push(format!("took {secs:.1} s"));
    }
    verdict(1, &format!("35584 quadruples in 17 orbits ({secs:.1} s)"), &f);
}

#[test]
fn criterion_2_bs87_pipeline() {
    let run = full_run();
    let r = &run.report;
    let mut f = Vec::new();
    expect(&mut f, "Table 1 rows", Some(ROW_CLASSES.to_vec()), r.table1_rows.clone());
    expect(&mut f, "total", Some(&558), r.classes.get(&Pipeline::Bs87));
    verdict(2, "Table 1 class counts, 558 total", &f);
}

#[test]
fn criterion_3_yang_pipelines() {
    let r = &full_run().report;
    let mut f = Vec::new();
    for (p, n) in [
        (Pipeline::Yang1, 192),
        (Pipeline::Yang2, 208),
        (Pipeline::Yang3, 64),
        (Pipeline::Yang4, 64),
    ] {
        expect(&mut f, p.tag(), Some(&n), r.classes.get(&p));
    }
    verdict(3, "192, 208, 64, 64 classes", &f);
}

#[test]
fn criterion_4_union_and_overlaps() {
    let r = &full_run().report;
    let mut f = Vec::new();
    expect(&mut f, "union", Some(1012), r.union);
    expect(&mut f, "yang2/yang1", Some(&24), r.overlaps.get(&(Pipeline::Yang1, Pipeline::Yang2)));
    expect(&mut f, "yang2/yang3", Some(&8), r.overlaps.get(&(Pipeline::Yang2, Pipeline::Yang3)));
    expect(&mut f, "bs87/others", Some(42), r.bs87_vs_rest);
    for t in &r.tables {
        if let Some(c) = &t.first_divergent {
            f.push(format!("table {} differs from {}: {}", t.table, t.pipeline, &c[..24]));
        }
    }
    verdict(4, "union 1012, overlaps 24/8/42, pipelines equal Tables 2-6", &f);
}

#[test]
fn criterion_5_transpose_pass() {
    let run = full_run();
    let r = &run.report;
    let mut f = Vec::new();
    expect(&mut f, "new", Some(747), r.transpose_new);
    expect(&mut f, "total", Some(1759), r.total);
    verdict(5, &format!("747 new classes, 1759 total (full run {:.0} s)", run.seconds), &f);
}

#[test]
fn criterion_6_regression_corpus() {
    let mut f = Vec::new();
    for id in 2..=6 {
        let codes = hex_table(id).unwrap();
        let mut certs = BTreeSet::new();
        for code in &codes {
            let q = hex_decode(code);
            if !validate_bs(&q, 15, 15).unwrap() {
                f.push(format!("table {id}: {code} is not BS(15,15)"));
                continue;
            }
            if hex_encode(&q).unwrap() != *code {
                f.push(format!("table {id}: {code} does not round-trip"));
            }
            match gs_assemble(&q) {
                Ok(h) => {
                    certs.insert(canonical_cert(&h).unwrap());
                }
                Err(e) => f.push(format!("table {id}: {code}: {e}")),
            }
        }
        expect(&mut f, &format!("table {id} distinct classes"), codes.len(), certs.len());
    }
    verdict(6, "1086 entries valid, Hadamard, pairwise nonequivalent, bit-exact", &f);
}

fn random_signed(n: usize, rng: &mut StdRng) -> SignedPerm {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    SignedPerm {
        perm,
        signs: (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect(),
    }
}

fn scramble(h: &HadamardMatrix, rng: &mut StdRng) -> HadamardMatrix {
    let (p, q) = (random_signed(h.order(), rng), random_signed(h.order(), rng));
    HadamardMatrix::try_from(apply_signed(&p, h.matrix(), &q)).unwrap()
}

#[test]
fn criterion_7_cert_soundness() {
    let mut rng = StdRng::seed_from_u64(0x60);
    let mut f = Vec::new();

    // Invariance: 20 base matrices x 500 random actions.
    let table2 = hex_table(2).unwrap();
    let bases: Vec<HadamardMatrix> = (0..20)
        .map(|k| gs_assemble(&hex_decode(&table2[k * 27])).unwrap())
        .collect();
    let mut violations = 0;
    for h in &bases {
        let cert = canonical_cert(h).unwrap();
        for _ in 0..500 {
            violations += (canonical_cert(&scramble(h, &mut rng)).unwrap() != cert) as usize;
        }
    }
    expect(&mut f, "invariance violations in 10000 actions", 0, violations);

    // Oracle agreement: 50 equivalent and 50 inequivalent pairs.
    let pool: Vec<HadamardMatrix> = table2
        .iter()
        .take(60)
        .map(|c| gs_assemble(&hex_decode(c)).unwrap())
        .collect();
    let mut disagreements = 0;
    let mut unknown = 0;
    for k in 0..100 {
        let a = &pool[rng.gen_range(0..pool.len())];
        let b = if k % 2 == 0 {
            scramble(a, &mut rng)
        } else {
            scramble(&pool[rng.gen_range(0..pool.len())], &mut rng)
        };
        let same = canonical_cert(a).unwrap() == canonical_cert(&b).unwrap();
        match search_equivalent(a, &b, 2_000_000) {
            SearchOutcome::Equivalent { rows, cols } => {
                disagreements += (!same || &apply_signed(&rows, a.matrix(), &cols) != b.matrix()) as usize;
            }
            SearchOutcome::NotEquivalent => disagreements += same as usize,
            SearchOutcome::Unknown => unknown += 1,
        }
    }
    expect(&mut f, "cert/oracle disagreements on 100 pairs", 0, disagreements);
    expect(&mut f, "oracle budget exhaustions", 0, unknown);

    // All Hadamard matrices of order 4.
    let mut order4: BTreeSet<CanonicalCert> = BTreeSet::new();
    let mut count = 0;
    for bits in 0u32..1 << 16 {
        let m = SignMatrix::from_fn(4, |i, j| if (bits >> (4 * i + j)) & 1 == 1 { 1 } else { -1 });
        if is_hadamard(&m) {
            count += 1;
            order4.insert(canonical_cert(&HadamardMatrix::try_from(m).unwrap()).unwrap());
        }
    }
    expect(&mut f, "order-4 Hadamard matrices", 768, count);
    expect(&mut f, "order-4 certificates", 1, order4.len());

    // Even permutations of the four circulants.
    let mut perm_failures = 0;
    let codes: Vec<_> = hex_table(3).unwrap().into_iter().chain(hex_table(4).unwrap()).collect();
    for code in codes.iter().step_by(4).take(100) {
        let q = hex_decode(code);
        let cert = canonical_cert(&gs_assemble(&q).unwrap()).unwrap();
        for p in even_permutations() {
            let h = gs_assemble(&quad_permute(&q, p).unwrap()).unwrap();
            perm_failures += (canonical_cert(&h).unwrap() != cert) as usize;
        }
    }
    expect(&mut f, "even-permutation failures on 100 x 12", 0, perm_failures);
    verdict(7, "cert invariance, oracle agreement, order 4, even permutations", &f);
}

#[test]
fn criterion_8_codec_fidelity() {
    let mut f = Vec::new();
    let q: BaseSeqQuad = "++++--+-+;+++-+++--;++--+--+;++++-+-+".parse().unwrap();
    let code = quad_encode(&q).unwrap();
    expect(&mut f, "table rendering", "06142; 1675".to_string(), code.render(RenderMode::Table));
    expect(&mut f, "strict rendering", "3'6142; 1675".to_string(), code.render(RenderMode::Strict));
    expect(&mut f, "decode", q.clone(), quad_decode(&QuadCode::parse_with_n("3'6142; 1675", 8).unwrap()).unwrap());

    let x = "0dc41a77adbf5c8".parse().unwrap();
    let decoded = hex_decode(&x);
    expect(
        &mut f,
        "hex example",
        "----++-+++---+-;----++-+--+++-+;+++-+-++-++-+++;+++-+-+++--+---".to_string(),
        decoded.to_string(),
    );
    expect(&mut f, "hex round trip", x, hex_encode(&decoded).unwrap());

    let mut invariant_failures = 0;
    for row in class_table().unwrap() {
        invariant_failures += !kks_invariant_holds(&quad_decode(&row.code).unwrap()).unwrap() as usize;
    }
    expect(&mut f, "mod-4 quad invariant failures", 0, invariant_failures);
    verdict(8, "worked examples and the mod-4 quad invariant", &f);
}
