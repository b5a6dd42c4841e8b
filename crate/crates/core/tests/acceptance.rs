//! Acceptance criteria. Each criterion prints one PASS/FAIL line with its
//! measured runtime; the test fails if any criterion fails or overruns its
//! time limit.

use std::fs;
use std::time::{Duration, Instant};

use qromlab::attacks::{classical_search_attack, grover_state, grover_success, theorem_bounds};
use qromlab::bits::BitString;
use qromlab::game::{execute, run_quantum_game, AdversaryProgram, GameMode};
use qromlab::lemmas::{
    check_pq_lemma, check_world_closeness, mixed_blinding_set, run_sweep, sweep_points, CheckReport, SweepKind,
};
use qromlab::ots::{
    derive_wots_params, encode_message, lamport_keygen, lamport_sign, lamport_verify, wots_keygen, wots_sign,
    wots_verify, LamportParams, Scheme,
};
use qromlab::qsim::norm::distance;
use qromlab::qworlds::LayoutKind;
use qromlab::rom::FixedFunction;
use qromlab::seed::{derive_indexed, rng_from_seed};

const PQ_TOLERANCE: f64 = 1e-8;
const ZERO_PROBE: f64 = 1e-10;
const INVARIANCE_TOLERANCE: f64 = 1e-9;
const LAST_OUTCOME_TOLERANCE: f64 = 1e-10;
const SIGMAS: f64 = 3.0;
const SEED: u64 = 20_241;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(id: u32, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = outcome.pass && in_time;
    println!(
        "[{}] {id:>2}. {name}: {} ({:.2?}, limit {:?})",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed,
        limit
    );
    pass
}

fn failures(reports: &[CheckReport]) -> usize {
    reports.iter().filter(|r| !r.pass).count()
}

fn correctness() -> Outcome {
    let mut checked = 0u64;
    let mut failed = 0u64;
    for n in [2u32, 4] {
        let mut oracle = FixedFunction::uniform(n, &mut rng_from_seed(derive_indexed(SEED, "h", n as u64))).unwrap();
        for l in 1..=8u32 {
            let params = LamportParams::new(n, l).unwrap();
            let key = lamport_keygen(&params, &mut oracle, &mut rng_from_seed(SEED + l as u64)).unwrap();
            for m in 0..1u64 << l {
                let m = BitString::new(m, l).unwrap();
                let sig = lamport_sign(&key, &m).unwrap();
                checked += 1;
                failed += !lamport_verify(&key.pk, &params, &m, &sig, &mut oracle).is_accept() as u64;
            }
        }
        for w in [2u32, 4] {
            for a in 1..=8u32 {
                let params = derive_wots_params(a, w, n).unwrap();
                let key = wots_keygen(&params, &mut oracle, &mut rng_from_seed(SEED + a as u64)).unwrap();
                for m in 0..1u64 << a {
                    let m = BitString::new(m, a).unwrap();
                    let sig = wots_sign(&key, &m, &mut oracle).unwrap();
                    checked += 1;
                    failed += !wots_verify(&key.pk, &params, &m, &sig, &mut oracle).is_accept() as u64;
                }
            }
        }
    }
    Outcome {
        pass: failed == 0,
        detail: format!("{checked} sign/verify pairs, {failed} rejected"),
    }
}

fn checksum_domination() -> Outcome {
    let mut pairs = 0u64;
    let mut failed = 0u64;
    for (a, w) in [(4u32, 2u32), (8, 4)] {
        let params = derive_wots_params(a, w, 8).unwrap();
        let digits: Vec<Vec<u32>> = (0..1u64 << a)
            .map(|m| encode_message(&BitString::new(m, a).unwrap(), &params).unwrap().digits)
            .collect();
        for (m, bm) in digits.iter().enumerate() {
            for (mp, bmp) in digits.iter().enumerate() {
                if m != mp {
                    pairs += 1;
                    failed += !bm.iter().zip(bmp).any(|(x, y)| y < x) as u64;
                }
            }
        }
    }
    Outcome {
        pass: failed == 0,
        detail: format!("{pairs} ordered pairs, {failed} without a smaller digit"),
    }
}

fn pq_lemma() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for n in 1..=4 {
        let r = check_pq_lemma(n, SEED).unwrap();
        let err = (r.measured - 2f64.powf(-(n as f64) / 2.0)).abs();
        worst = worst.max(err);
        pass &= r.pass && err <= PQ_TOLERANCE;
    }
    Outcome {
        pass,
        detail: format!("largest deviation from 2^(-n/2): {worst:.3e}"),
    }
}

fn orthogonality() -> Outcome {
    let reports = run_sweep(&[SweepKind::Orthogonality], SEED).unwrap();
    let active: Vec<&CheckReport> = reports.iter().filter(|r| !r.is_skipped()).collect();
    let schemes_covered =
        active.iter().any(|r| r.scheme == "lamport") && active.iter().any(|r| r.scheme == "winternitz");
    let worst = active.iter().map(|r| r.measured).fold(0.0, f64::max);
    Outcome {
        pass: active.len() >= 50 && schemes_covered && worst < ZERO_PROBE && failures(&reports) == 0,
        detail: format!("{} instances, largest probe norm {worst:.3e}", active.len()),
    }
}

fn no_hash_invariance() -> Outcome {
    let mut per_scheme = [0usize; 2];
    let mut worst: f64 = 0.0;
    for point in sweep_points() {
        for k in 0..5u64 {
            let seed = derive_indexed(SEED, "no-hash", k * 16 + point.n as u64 * 4 + point.w as u64);
            let blinding = mixed_blinding_set(point.message_bits, seed).unwrap();
            let world = point.world(blinding, LayoutKind::Game, seed).unwrap();
            let program = AdversaryProgram::random(&world, 0, 0, seed).unwrap();
            let trace = execute(&program, &world).unwrap();
            let p = world.invariant_projector().unwrap();
            for psi in [trace.after_sign.as_ref().unwrap(), &trace.final_state] {
                worst = worst.max(distance(&p.apply(psi.amplitudes()), psi.amplitudes()));
            }
            per_scheme[(point.scheme == Scheme::Winternitz) as usize] += 1;
        }
    }
    Outcome {
        pass: per_scheme.iter().all(|&c| c >= 20) && worst < INVARIANCE_TOLERANCE,
        detail: format!(
            "{} Lamport and {} Winternitz programs, largest ||P psi - psi|| {worst:.3e}",
            per_scheme[0], per_scheme[1]
        ),
    }
}

fn sweep_outcome(kind: SweepKind) -> Outcome {
    let reports = run_sweep(&[kind], SEED).unwrap();
    let worst_ratio = reports
        .iter()
        .filter(|r| !r.is_skipped() && r.bound > 0.0)
        .map(|r| r.measured / r.bound)
        .fold(0.0, f64::max);
    Outcome {
        pass: failures(&reports) == 0,
        detail: format!(
            "{} checks, {} failed, largest measured/bound {worst_ratio:.3}",
            reports.len(),
            failures(&reports)
        ),
    }
}

fn modified_game() -> Outcome {
    let mut worst_last: f64 = 0.0;
    let mut pinching_ok = 0usize;
    let mut programs = 0usize;
    let points = sweep_points();
    // Q-outcome l+1 on a blinded forgery, programs without hash queries
    for point in &points {
        let seed = derive_indexed(SEED, "last-outcome", point.n as u64 * 8 + point.w as u64 + point.message_bits as u64);
        let world = point.world(mixed_blinding_set(point.message_bits, seed).unwrap(), LayoutKind::Game, seed).unwrap();
        let program = AdversaryProgram::random(&world, 0, 0, seed).unwrap();
        let r = run_quantum_game(&program, &world, GameMode::Modified, seed).unwrap();
        worst_last = worst_last.max(r.p_last_blinded);
    }
    // pinching on 20 programs with hash queries on both sides of the sign query
    for k in 0..20u64 {
        let point = points[k as usize % points.len()];
        let seed = derive_indexed(SEED, "pinching", k);
        let world = point.world(mixed_blinding_set(point.message_bits, seed).unwrap(), LayoutKind::Game, seed).unwrap();
        let program = AdversaryProgram::random(&world, (k % 3) as usize, (k / 3 % 3) as usize, seed).unwrap();
        let plain = run_quantum_game(&program, &world, GameMode::Plain, seed).unwrap();
        let modified = run_quantum_game(&program, &world, GameMode::Modified, seed).unwrap();
        programs += 1;
        pinching_ok += (plain.p_success <= (world.l() + 1) as f64 * modified.p_success + 1e-12) as usize;
    }
    Outcome {
        pass: worst_last < LAST_OUTCOME_TOLERANCE && pinching_ok == programs,
        detail: format!("largest Pr[l+1, m* in B] {worst_last:.3e}; pinching holds on {pinching_ok}/{programs} programs"),
    }
}

fn worlds() -> Outcome {
    let mut reports = Vec::new();
    for (n, l, w) in [(4, 1, 2), (6, 1, 2), (4, 2, 2)] {
        reports.push(check_world_closeness(n, l, w).unwrap());
    }
    let closeness: Vec<String> = reports.iter().map(|r| format!("{:.4}<={:.4}", r.measured, r.bound)).collect();
    reports.extend(run_sweep(&[SweepKind::Worlds], SEED).unwrap().into_iter().filter(|r| r.lemma == "iw2-agreement"));
    let mismatches: f64 = reports.iter().filter(|r| r.lemma == "iw2-agreement").map(|r| r.measured).sum();
    Outcome {
        pass: failures(&reports) == 0 && mismatches == 0.0,
        detail: format!("tv {}; {mismatches} basis-state mismatches", closeness.join(", ")),
    }
}

fn attacks() -> Outcome {
    let trials = 10_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, q) in [(3u32, 4u64), (4, 8), (4, 16)] {
        let r = classical_search_attack(n, 1, q, trials, derive_indexed(SEED, "attack", n as u64 * 100 + q)).unwrap();
        let bound = theorem_bounds(Scheme::Lamport, q, n, 1, 2).full.min(1.0);
        pass &= r.within_sigmas(SIGMAS) && r.empirical <= bound + SIGMAS * r.std_error;
        parts.push(format!("n={n} q={q}: {:.4} vs {:.4}", r.empirical, r.expected));
    }
    let marked = [false, true, false, false];
    let grover = grover_success(&grover_state(2, &marked, 1).unwrap(), &marked);
    pass &= (grover - 1.0).abs() < 1e-12;
    parts.push(format!("Grover N=4 t=1: {grover:.12}"));
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let key = path("key.json");
    let sig = path("sig.json");
    assert_eq!(qromlab::cli::run(["qromlab", "keygen", "--scheme", "lamport", "--n", "8", "--l", "4", "--seed", "5", "--output", &key]), 0);
    assert_eq!(qromlab::cli::run(["qromlab", "sign", "--key", &key, "--message", "1010", "--output", &sig]), 0);
    let commands: Vec<Vec<&str>> = vec![
        vec!["keygen", "--scheme", "winternitz", "--n", "8", "--a", "4", "--w", "4"],
        vec!["sign", "--key", &key, "--message", "0110"],
        vec!["verify", "--key", &key, "--signature", &sig],
        vec!["game", "--scheme", "lamport", "--n", "4", "--l", "2", "--adversary", "search", "--q", "8"],
        vec!["qgame", "--scheme", "lamport", "--n", "1", "--l", "2", "--q0", "1", "--q1", "1", "--mode", "modified"],
        vec!["lemmas", "--scheme", "lamport", "--n", "2", "--l", "1", "--format", "csv"],
        vec!["worlds", "--n", "4", "--l", "1", "--w", "2", "--format", "csv"],
        vec!["attack", "--kind", "grover", "--n", "4", "--trials", "200"],
        vec!["bounds", "--scheme", "lamport", "--q", "1", "--l", "1", "--n", "20"],
    ];
    let mut identical = 0;
    let mut names = Vec::new();
    for (k, cmd) in commands.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|run| {
                let out = path(&format!("out-{k}-{run}"));
                let mut args = vec!["qromlab"];
                args.extend(cmd.iter().copied());
                args.extend(["--seed", "11", "--output", &out]);
                let code = qromlab::cli::run(args);
                assert_eq!(code, 0, "{cmd:?}");
                fs::read(&out).unwrap()
            })
            .collect();
        if outputs[0] == outputs[1] && !outputs[0].is_empty() {
            identical += 1;
        } else {
            names.push(cmd[0]);
        }
    }
    Outcome {
        pass: identical == commands.len(),
        detail: format!("{identical}/{} subcommands byte-identical {names:?}", commands.len()),
    }
}

#[test]
fn acceptance() {
    let results = [
        criterion(1, "correctness suite", Duration::from_secs(10), correctness),
        criterion(2, "checksum domination", Duration::from_secs(10), checksum_domination),
        criterion(3, "P^= Phi norm", Duration::from_secs(5), pq_lemma),
        criterion(4, "orthogonality", Duration::from_secs(60), orthogonality),
        criterion(5, "no-hash invariance", Duration::from_secs(60), no_hash_invariance),
        criterion(6, "commutator bounds", Duration::from_secs(300), || sweep_outcome(SweepKind::Commutators)),
        criterion(7, "drift bounds", Duration::from_secs(600), || sweep_outcome(SweepKind::Drift)),
        criterion(8, "modified game", Duration::from_secs(300), modified_game),
        criterion(9, "worlds", Duration::from_secs(300), worlds),
        criterion(10, "attack tightness", Duration::from_secs(300), attacks),
        criterion(11, "determinism", Duration::from_secs(600), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    assert_eq!(passed, results.len());
}
