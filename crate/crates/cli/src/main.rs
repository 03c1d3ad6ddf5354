use std::fs;
use std::io::{self, Read};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hadamard_forge::codec::{hex_decode, hex_encode, quad_decode, quad_encode, HexCode, QuadCode, RenderMode};
use hadamard_forge::designs::{
    enumerate_bs, near_normal_set, normal_set, parse_quads, validate_bs, write_quads, BaseSeqQuad,
};
use hadamard_forge::gs::{gs_array, is_hadamard, SignMatrix};
use hadamard_forge::pipeline::{run_with_progress, Expectations, RunPlan, DEFAULT_EXPECTATIONS};
use hadamard_forge::store::ClassStore;

#[derive(Parser)]
#[command(name = "hadamard-forge", version, about = "Base sequences, Goethals-Seidel arrays and Hadamard matrices of order 60")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List BS(m,n), one "A;B;C;D" per line.
    Enumerate {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Keep only normal quadruples (requires m = n+1).
        #[arg(long, conflicts_with = "near_normal")]
        normal: bool,
        /// Keep only near-normal quadruples (requires m = n+1).
        #[arg(long)]
        near_normal: bool,
        /// Print the count instead of the list.
        #[arg(long)]
        count: bool,
    },
    /// Decode a quad code or hex code to sequences or a matrix.
    Decode {
        #[command(flatten)]
        source: Source,
        /// Print the Goethals-Seidel matrix in raw form instead.
        #[arg(long)]
        matrix: bool,
    },
    /// Encode "A;B;C;D" lines (argument or stdin): quad codes for BS(n+1,n),
    /// hex codes for BS(15,15).
    Encode {
        /// Quadruples; reads stdin when absent.
        #[arg(allow_hyphen_values = true)]
        quads: Option<String>,
        /// Write the 3' label as "3'" rather than "0".
        #[arg(long)]
        strict: bool,
    },
    /// Check base-sequence and Hadamard properties.
    Verify {
        #[command(flatten)]
        source: Source,
        /// A raw matrix file ("-" for stdin) instead of a quadruple.
        #[arg(long, conflicts_with_all = ["quad", "hex", "seqs"])]
        matrix: Option<PathBuf>,
    },
    /// Run construction pipelines and classify the results.
    Run {
        /// bs87, yang1, yang2, yang3, yang4 or all.
        #[arg(long)]
        pipeline: String,
        /// Expectations file to grade against; "default" uses the built-in one.
        #[arg(long)]
        accept: Option<String>,
        /// JSON-lines class store; an interrupted run resumes from it.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct Source {
    /// Quad code such as "02;1".
    #[arg(long)]
    quad: Option<String>,
    /// Length n for the quad code; inferred when absent.
    #[arg(long, requires = "quad")]
    n: Option<usize>,
    /// 15-hex-digit code of a BS(15,15) quadruple.
    #[arg(long)]
    hex: Option<String>,
    /// A literal "A;B;C;D" quadruple.
    #[arg(long, allow_hyphen_values = true)]
    seqs: Option<String>,
}

impl Source {
    fn quad(&self) -> Result<Option<BaseSeqQuad>> {
        Ok(match (&self.quad, &self.hex, &self.seqs) {
            (Some(code), None, None) => {
                let code = match self.n {
                    Some(n) => QuadCode::parse_with_n(code, n)?,
                    None => code.parse()?,
                };
                Some(quad_decode(&code)?)
            }
            (None, Some(hex), None) => Some(hex_decode(&hex.parse::<HexCode>()?)),
            (None, None, Some(seqs)) => Some(seqs.parse()?),
            (None, None, None) => None,
            _ => bail!("give exactly one of --quad, --hex, --seqs"),
        })
    }
}

fn read_input(path: &PathBuf) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "valid"
    } else {
        "invalid"
    }
}

fn main() -> ExitCode {
    match run_cli(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run_cli(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Enumerate {
            m,
            n,
            normal,
            near_normal,
            count,
        } => {
            let quads = if normal || near_normal {
                if m != n + 1 {
                    bail!("--normal and --near-normal need m = n+1");
                }
                if normal {
                    normal_set(n)?
                } else {
                    near_normal_set(n)?
                }
            } else {
                enumerate_bs(m, n)?
            };
            if count {
                println!("{}", quads.len());
            } else {
                print!("{}", write_quads(&quads));
            }
            Ok(true)
        }
        Command::Decode { source, matrix } => {
            let q = source.quad()?.context("nothing to decode")?;
            if matrix {
                print!("{}", gs_array(&q)?.to_raw());
            } else {
                println!("{q}");
            }
            Ok(true)
        }
        Command::Encode { quads, strict } => {
            let text = match quads {
                Some(t) => t,
                None => read_input(&PathBuf::from("-"))?,
            };
            let mode = if strict { RenderMode::Strict } else { RenderMode::Table };
            for q in parse_quads(&text)? {
                if q.m() == q.n() + 1 {
                    println!("{}", quad_encode(&q)?.render(mode));
                } else {
                    println!("{}", hex_encode(&q)?);
                }
            }
            Ok(true)
        }
        Command::Verify { source, matrix } => {
            if let Some(path) = matrix {
                let m: SignMatrix = read_input(&path)?.parse()?;
                let ok = is_hadamard(&m);
                println!("H({}): {}", m.order(), verdict(ok));
                return Ok(ok);
            }
            let q = source.quad()?.context("nothing to verify")?;
            let (m, n) = (q.m(), q.n());
            let bs_ok = validate_bs(&q, m, n)?;
            let mut line = format!("BS({m},{n}): {}", verdict(bs_ok));
            let mut ok = bs_ok;
            if m == n {
                let h_ok = is_hadamard(&gs_array(&q)?);
                line.push_str(&format!("; H({}): {}", 4 * m, verdict(h_ok)));
                ok &= h_ok;
            }
            println!("{line}");
            Ok(ok)
        }
        Command::Run {
            pipeline,
            accept,
            store,
            jobs,
        } => {
            let plan: RunPlan = pipeline.parse()?;
            let expectations = match accept.as_deref() {
                None => None,
                Some("default") => Some(DEFAULT_EXPECTATIONS.parse::<Expectations>()?),
                Some(path) => Some(
                    fs::read_to_string(path)
                        .with_context(|| format!("reading {path}"))?
                        .parse::<Expectations>()?,
                ),
            };
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                pool = pool.num_threads(j.max(1));
            }
            let pool = pool.build()?;
            let mut store = match &store {
                Some(path) => ClassStore::open(path)?,
                None => ClassStore::new(),
            };
            let report = pool.install(|| {
                run_with_progress(&plan, &mut store, |s| {
                    if s.resumed {
                        eprintln!("{}: resumed", s.stage);
                    } else {
                        eprintln!("{}: {} inputs, {} ms", s.stage, s.inputs, s.millis);
                    }
                })
            })?;
            print!("{report}");
            let Some(expectations) = expectations else {
                return Ok(true);
            };
            let checks = expectations.grade(&report);
            for c in &checks {
                println!("{c}");
            }
            Ok(checks.iter().all(|c| c.passed()))
        }
    }
}
