use std::io::Write;
use std::process::{Command, Output, Stdio};

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hadamard-forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_worked_hex_example() {
    let out = forge(&["verify", "--hex", "0dc41a77adbf5c8"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "BS(15,15): valid; H(60): valid");
}

#[test]
fn verify_accepts_literals_starting_with_minus() {
    let out = forge(&["verify", "--seqs", "----++-+++---+-;----++-+--+++-+;+++-+-++-++-+++;+++-+-+++--+---"]);
    assert!(out.status.success());
}

#[test]
fn verify_rejects_a_non_base_sequence() {
    let out = forge(&["verify", "--seqs", "++;++;+;+"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out).trim(), "BS(2,1): invalid");
}

#[test]
fn decode_quad_code_gives_four_literals() {
    let out = forge(&["decode", "--quad", "02;1", "--n", "2"]);
    assert!(out.status.success());
    let line = stdout(&out);
    let parts: Vec<&str> = line.trim().split(';').collect();
    assert_eq!(parts.len(), 4);
    assert_eq!(parts.iter().map(|p| p.len()).collect::<Vec<_>>(), vec![3, 3, 2, 2]);
    assert!(forge(&["verify", "--seqs", line.trim()]).status.success());
}

#[test]
fn encode_round_trips_decode() {
    let decoded = stdout(&forge(&["decode", "--hex", "0dc41a77adbf5c8"]));
    assert_eq!(stdout(&forge(&["encode", decoded.trim()])).trim(), "0dc41a77adbf5c8");

    let quad = "++++--+-+;+++-+++--;++--+--+;++++-+-+";
    let code = stdout(&forge(&["encode", quad]));
    assert_eq!(code.trim(), "06142; 1675");
    assert_eq!(stdout(&forge(&["encode", "--strict", quad])).trim(), "3'6142; 1675");
    let again = stdout(&forge(&["decode", "--quad", "3'6142; 1675", "--n", "8"]));
    assert_eq!(again.trim(), quad);
}

#[test]
fn encode_reads_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hadamard-forge"))
        .args(["encode", "--strict"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"# comment\n++;+-;+;+\n\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn enumerate_counts() {
    let out = forge(&["enumerate", "--m", "3", "--n", "2", "--count"]);
    assert_eq!(stdout(&out).trim(), "128");
    let out = forge(&["enumerate", "--m", "2", "--n", "1", "--normal", "--count"]);
    assert_eq!(stdout(&out).trim(), "16");
    let out = forge(&["enumerate", "--m", "2", "--n", "1"]);
    assert_eq!(stdout(&out).lines().count(), 32);
}

#[test]
fn decoded_matrix_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.txt");
    let raw = forge(&["decode", "--hex", "a73b4f89f643eb7", "--matrix"]);
    std::fs::write(&path, &raw.stdout).unwrap();
    let out = forge(&["verify", "--matrix", path.to_str().unwrap()]);
    assert_eq!(stdout(&out).trim(), "H(60): valid");
}

#[test]
fn bad_input_is_an_error() {
    assert_eq!(forge(&["decode", "--hex", "xyz"]).status.code(), Some(2));
    assert_eq!(forge(&["run", "--pipeline", "yang9"]).status.code(), Some(2));
}

#[test]
fn run_grades_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("classes.jsonl");
    let store = store.to_str().unwrap();
    let out = forge(&["run", "--pipeline", "yang3", "--store", store, "--accept", "default", "--jobs", "1"]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("yang3: 64 classes"), "{text}");
    assert!(text.contains("PASS yang3 classes"), "{text}");
    assert!(!text.contains("FAIL"));
    let lines = std::fs::read_to_string(store).unwrap().lines().count();
    assert_eq!(lines, 64 + 2);

    let again = forge(&["run", "--pipeline", "yang3", "--store", store, "--accept", "default"]);
    assert!(again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("yang3: resumed"));
    assert_eq!(stdout(&again).lines().filter(|l| l.starts_with("PASS")).count(), 2);

    let strict = dir.path().join("strict.toml");
    std::fs::write(&strict, "[classes]\nyang3 = 65\n").unwrap();
    let failing = forge(&["run", "--pipeline", "yang3", "--store", store, "--accept", strict.to_str().unwrap()]);
    assert_eq!(failing.status.code(), Some(1));
    assert!(stdout(&failing).contains("FAIL yang3 classes"));
}
