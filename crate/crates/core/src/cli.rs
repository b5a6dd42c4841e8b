//! Command-line front end.
//!
//! Exit codes: 0 when everything ran and every check passed, 1 for usage
//! errors, 2 when a lemma check or bound comparison failed (or a run
//! failed at runtime).

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::attacks::{classical_search_attack, grover_attack, preimage_search, theorem_bounds, AttackReport};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::game::{run_classical_game, run_quantum_game, AdversaryProgram, Forgery, GameMode, SchemeParams};
use crate::lemmas::{
    check_delta_bound, check_eps_all, check_orthogonality_random, check_pq_lemma, check_state_drift,
    check_world_closeness, mixed_blinding_set, run_sweep, write_csv, CheckReport, LabPoint, SweepKind,
};
use crate::ots::{KeyFile, KeyPair, Scheme, Signature, SignatureFile, Verdict};
use crate::qworlds::{BlindingSet, LayoutKind, QiWorld};
use crate::rom::{enumerate_chain_distributions, Sha256Oracle};
use crate::seed::{derive_seed, labeled_rng};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "qromlab", version, about = "Hash-based one-time signatures and quantum random oracle checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Lamport,
    Winternitz,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Lamport => Scheme::Lamport,
            SchemeArg::Winternitz => Scheme::Winternitz,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SchemeOpts {
    #[arg(long, value_enum, default_value = "lamport")]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub n: u32,
    /// Message bits for Lamport.
    #[arg(long)]
    pub l: Option<u32>,
    /// Message bits for Winternitz.
    #[arg(long)]
    pub a: Option<u32>,
    /// Winternitz chain length.
    #[arg(long, default_value_t = 4)]
    pub w: u32,
}

impl SchemeOpts {
    fn params(&self) -> Result<SchemeParams> {
        let scheme: Scheme = self.scheme.into();
        let (message_bits, w) = match (scheme, self.l, self.a) {
            (Scheme::Lamport, Some(l), None) => (l, 2),
            (Scheme::Winternitz, None, Some(a)) => (a, self.w),
            (Scheme::Lamport, _, _) => return Err(Error::InvalidParameter("Lamport takes --l (and not --a)".into())),
            (Scheme::Winternitz, _, _) => {
                return Err(Error::InvalidParameter("Winternitz takes --a (and not --l)".into()))
            }
        };
        Ok(SchemeParams {
            scheme,
            n: self.n,
            message_bits,
            w,
        })
    }

    fn point(&self) -> Result<LabPoint> {
        let p = self.params()?;
        Ok(LabPoint {
            scheme: p.scheme,
            n: p.n,
            message_bits: p.message_bits,
            w: p.w,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Root seed; every random choice is derived from it.
    #[arg(long, env = "QROMLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversaryArg {
    /// Signs a random message and submits its signature unchanged.
    Replay,
    /// Signs a random message, then submits a random signature on another.
    Random,
    /// Preimage search with `--q` hash queries.
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Plain,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    Classical,
    Grover,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a key pair (hash: truncated SHA-256).
    Keygen {
        #[command(flatten)]
        scheme: SchemeOpts,
        #[command(flatten)]
        common: Common,
    },
    /// Sign a message given as a binary string.
    Sign {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        message: String,
        #[command(flatten)]
        common: Common,
    },
    /// Verify a signature file; the verdict is printed, not signalled.
    Verify {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        signature: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Play the classical blind-forgery game with a built-in adversary.
    Game {
        #[command(flatten)]
        scheme: SchemeOpts,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "random")]
        adversary: AdversaryArg,
        #[arg(long, default_value_t = 0)]
        q: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Run a random adversary program in the quantum independent world.
    Qgame {
        #[command(flatten)]
        scheme: SchemeOpts,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        q0: usize,
        #[arg(long, default_value_t = 0)]
        q1: usize,
        #[arg(long, value_enum, default_value = "plain")]
        mode: ModeArg,
        #[command(flatten)]
        common: Common,
    },
    /// Lemma checks at one point, or over the whole grid with --sweep.
    Lemmas {
        #[arg(long, value_enum, default_value = "lamport")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        a: Option<u32>,
        #[arg(long, default_value_t = 3)]
        w: u32,
        /// Restrict drift checks to one pre-sign query count.
        #[arg(long)]
        q0: Option<usize>,
        /// Restrict drift checks to one post-sign query count.
        #[arg(long)]
        q1: Option<usize>,
        #[arg(long)]
        sweep: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Real versus independent chain distributions by enumeration.
    Worlds {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        l: u32,
        #[arg(long, default_value_t = 2)]
        w: u32,
        /// Also write both distributions as CSV to this file.
        #[arg(long)]
        distributions: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Forgery attacks against Lamport blind unforgeability.
    Attack {
        #[arg(long, value_enum, default_value = "classical")]
        kind: AttackArg,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        l: u32,
        /// Hash queries (classical) or Grover iterations (default schedule
        /// when absent).
        #[arg(long)]
        q: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the security bounds.
    Bounds {
        #[command(flatten)]
        scheme: SchemeOpts,
        #[arg(long)]
        q: u64,
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e @ (Error::InvalidParameter(_) | Error::Parse(_) | Error::WidthMismatch { .. } | Error::LengthMismatch { .. })) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn emit(common: &Common, bytes: &[u8]) -> Result<()> {
    match &common.output {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn json_only(common: &Common, what: &str) -> Result<()> {
    if common.format == Format::Csv {
        return Err(Error::InvalidParameter(format!("{what} reports are JSON only")));
    }
    Ok(())
}

fn emit_checks(common: &Common, reports: &[CheckReport]) -> Result<i32> {
    let bytes = match common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(reports, &mut buf)?;
            buf
        }
        Format::Json => json(&reports)?,
    };
    emit(common, &bytes)?;
    Ok(if reports.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_FAILURE })
}

fn read_key(path: &PathBuf) -> Result<KeyPair> {
    let file: KeyFile = serde_json::from_slice(&fs::read(path)?)?;
    KeyPair::from_file(&file)
}

fn key_oracle(key: &KeyPair) -> Result<Sha256Oracle> {
    Sha256Oracle::new(match key {
        KeyPair::Lamport(k) => k.params.n,
        KeyPair::Winternitz(k) => k.params.n,
    })
}

#[derive(Serialize)]
struct VerifyReport {
    verdict: String,
    reason: Option<String>,
}

#[derive(Serialize)]
struct BoundsReport {
    scheme: Scheme,
    q: u64,
    n: u32,
    l: usize,
    w: u32,
    full: f64,
    simplified: f64,
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Keygen { scheme, common } => {
            json_only(&common, "key")?;
            let params = scheme.params()?;
            let mut oracle = Sha256Oracle::new(params.n)?;
            let key = crate::game::generate_key(params, &mut oracle, &mut labeled_rng(common.seed, "keygen"))?;
            emit(&common, &json(&key.to_file())?)?;
            Ok(EXIT_OK)
        }
        Command::Sign { key, message, common } => {
            json_only(&common, "signature")?;
            let key = read_key(&key)?;
            let m = BitString::from_binary(&message)?;
            let mut oracle = key_oracle(&key)?;
            let sig = key.sign(&m, &mut oracle)?;
            let file = key.to_file();
            let out = SignatureFile {
                scheme: file.scheme,
                n: file.n,
                a: file.a,
                w: file.w,
                message: m.to_binary(),
                sigma: sig.sigma.iter().map(BitString::to_hex).collect(),
            };
            emit(&common, &json(&out)?)?;
            Ok(EXIT_OK)
        }
        Command::Verify { key, signature, common } => {
            let key = read_key(&key)?;
            let file: SignatureFile = serde_json::from_slice(&fs::read(&signature)?)?;
            let n = key.to_file().n;
            let verdict = match (
                BitString::from_binary(&file.message),
                file.sigma.iter().map(|s| BitString::from_hex(s, n)).collect::<Result<Vec<_>>>(),
            ) {
                (Ok(m), Ok(sigma)) => key.verify(&m, &Signature { sigma }, &mut key_oracle(&key)?),
                (Err(e), _) | (_, Err(e)) => Verdict::Reject(e.to_string()),
            };
            let report = match &verdict {
                Verdict::Accept => VerifyReport {
                    verdict: "acc".into(),
                    reason: None,
                },
                Verdict::Reject(r) => VerifyReport {
                    verdict: "rej".into(),
                    reason: Some(r.clone()),
                },
            };
            match common.format {
                Format::Json => emit(&common, &json(&report)?)?,
                Format::Csv => emit(
                    &common,
                    format!("verdict,reason\n{},{}\n", report.verdict, report.reason.unwrap_or_default().replace(',', ";"))
                        .as_bytes(),
                )?,
            }
            Ok(EXIT_OK)
        }
        Command::Game {
            scheme,
            epsilon,
            adversary,
            q,
            common,
        } => {
            json_only(&common, "game")?;
            let params = scheme.params()?;
            if adversary == AdversaryArg::Search && params.scheme != Scheme::Lamport {
                return Err(Error::InvalidParameter("the search adversary targets Lamport".into()));
            }
            let bits = params.message_bits;
            let transcript = run_classical_game(params, epsilon, common.seed, |g| {
                use rand::Rng;
                let mask = crate::bits::mask(bits);
                match adversary {
                    AdversaryArg::Search => Ok(preimage_search(g, q)?.0),
                    AdversaryArg::Replay => {
                        let m = BitString::new(g.rng().random::<u64>() & mask, bits)?;
                        let out = g.sign(&m)?;
                        Ok(Forgery {
                            m,
                            sigma: Signature { sigma: out.sigma },
                        })
                    }
                    AdversaryArg::Random => {
                        let m = BitString::new(g.rng().random::<u64>() & mask, bits)?;
                        let out = g.sign(&m)?;
                        let other = if bits == 0 { m } else { m.flip(0) };
                        let n = g.params().n;
                        let sigma = (0..out.sigma.len())
                            .map(|_| BitString::new(g.rng().random::<u64>() & crate::bits::mask(n), n))
                            .collect::<Result<_>>()?;
                        Ok(Forgery {
                            m: other,
                            sigma: Signature { sigma },
                        })
                    }
                }
            })?;
            emit(&common, &json(&transcript)?)?;
            Ok(EXIT_OK)
        }
        Command::Qgame {
            scheme,
            epsilon,
            q0,
            q1,
            mode,
            common,
        } => {
            json_only(&common, "quantum game")?;
            let point = scheme.point()?;
            let blinding = BlindingSet::sample(epsilon, point.message_bits, &mut labeled_rng(common.seed, "qgame/blinding"))?;
            let world: QiWorld = point.world(blinding, LayoutKind::Game, derive_seed(common.seed, "qgame/world"))?;
            let program = AdversaryProgram::random(&world, q0, q1, derive_seed(common.seed, "qgame/program"))?;
            let mode = match mode {
                ModeArg::Plain => GameMode::Plain,
                ModeArg::Modified => GameMode::Modified,
            };
            let report = run_quantum_game(&program, &world, mode, common.seed)?;
            emit(&common, &json(&report)?)?;
            Ok(EXIT_OK)
        }
        Command::Lemmas {
            scheme,
            n,
            l,
            a,
            w,
            q0,
            q1,
            sweep,
            common,
        } => {
            let reports = if sweep {
                let mut r = Vec::new();
                for k in 1..=4 {
                    r.push(check_pq_lemma(k, derive_seed(common.seed, "pq"))?);
                }
                r.extend(run_sweep(
                    &[SweepKind::Commutators, SweepKind::Orthogonality, SweepKind::Drift, SweepKind::Worlds],
                    common.seed,
                )?);
                r
            } else {
                let opts = SchemeOpts { scheme, n, l, a, w };
                lemma_point(&opts.point()?, q0, q1, common.seed)?
            };
            emit_checks(&common, &reports)
        }
        Command::Worlds {
            n,
            l,
            w,
            distributions,
            common,
        } => {
            let report = check_world_closeness(n, l as usize, w)?;
            if let Some(path) = distributions {
                let d = enumerate_chain_distributions(n, l as usize, w as usize)?;
                d.write_csv(fs::File::create(path)?)?;
            }
            emit_checks(&common, &[report])
        }
        Command::Attack {
            kind,
            n,
            l,
            q,
            trials,
            common,
        } => {
            let report = match kind {
                AttackArg::Classical => {
                    let q = q.ok_or_else(|| Error::InvalidParameter("the classical attack needs --q".into()))?;
                    classical_search_attack(n, l, q, trials, common.seed)?
                }
                AttackArg::Grover => grover_attack(n, l, q, trials, common.seed)?,
            };
            let bytes = match common.format {
                Format::Json => json(&report)?,
                Format::Csv => attack_csv(&report)?,
            };
            emit(&common, &bytes)?;
            Ok(if report.below_theorem_bound(3.0) { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Bounds { scheme, q, common } => {
            let params = scheme.params()?;
            let l = match params.scheme {
                Scheme::Lamport => params.message_bits as usize,
                Scheme::Winternitz => crate::ots::derive_wots_params_any_radix(params.message_bits, params.w, params.n)?.l as usize,
            };
            let b = theorem_bounds(params.scheme, q, params.n, l, params.w);
            let report = BoundsReport {
                scheme: params.scheme,
                q,
                n: params.n,
                l,
                w: params.w,
                full: b.full,
                simplified: b.simplified,
            };
            let bytes = match common.format {
                Format::Json => json(&report)?,
                Format::Csv => format!(
                    "scheme,q,n,l,w,full,simplified\n{},{},{},{},{},{:.6e},{:.6e}\n",
                    report.scheme, q, report.n, l, report.w, b.full, b.simplified
                )
                .into_bytes(),
            };
            emit(&common, &bytes)?;
            Ok(EXIT_OK)
        }
    }
}

/// Every check at one scheme point.
pub fn lemma_point(point: &LabPoint, q0: Option<usize>, q1: Option<usize>, seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    if point.n <= 4 {
        reports.push(check_pq_lemma(point.n, derive_seed(seed, "pq"))?);
    }
    reports.extend(check_eps_all(point, seed)?);
    let mixed = mixed_blinding_set(point.message_bits, seed)?;
    reports.push(check_delta_bound(point, &mixed, seed)?);
    reports.push(check_delta_bound(point, &BlindingSet::from_members(point.message_bits, &[])?, seed)?);
    reports.extend(check_orthogonality_random(point, 8, seed)?);
    let q0s: Vec<usize> = q0.map(|q| vec![q]).unwrap_or_else(|| vec![0, 1, 2]);
    let q1s: Vec<usize> = q1.map(|q| vec![q]).unwrap_or_else(|| vec![0, 1, 2]);
    for &a in &q0s {
        for &b in &q1s {
            let s = crate::seed::derive_indexed(seed, "drift", (a * 3 + b) as u64);
            reports.extend(check_state_drift(point, &mixed_blinding_set(point.message_bits, s)?, a, b, s)?);
        }
    }
    Ok(reports)
}

fn attack_csv(r: &AttackReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "attack", "n", "l", "q", "trials", "wins", "empirical", "std_error", "wilson_low", "wilson_high",
        "p_search_formula", "p_search_exact", "search_empirical", "expected", "theorem_bound",
    ])?;
    w.write_record([
        r.attack.clone(),
        r.n.to_string(),
        r.l.to_string(),
        r.q.to_string(),
        r.trials.to_string(),
        r.wins.to_string(),
        format!("{:.6e}", r.empirical),
        format!("{:.6e}", r.std_error),
        format!("{:.6e}", r.wilson.0),
        format!("{:.6e}", r.wilson.1),
        format!("{:.6e}", r.p_search_formula),
        format!("{:.6e}", r.p_search_exact),
        format!("{:.6e}", r.search_empirical),
        format!("{:.6e}", r.expected),
        format!("{:.6e}", r.theorem_bound),
    ])?;
    w.into_inner().map_err(|e| Error::Io(e.into_error().to_string()))
}
