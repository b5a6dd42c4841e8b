//! Forgery attacks on Lamport blind unforgeability: a classical preimage
//! search and a statevector Grover search over the hash input space.
//!
//! Both attacks look for a preimage `y*` of some public string `p_{i*}^{j*}`,
//! ask for a signature on a message `m` with `m_{i*} = 1 - j*`, flip bit
//! `i*` and substitute `y*`. With blinding probability 1/2 the signature is
//! released with probability 1/2 and the flipped message is blinded with
//! probability 1/2, so the attack wins with probability `p_search / 4`.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::game::{run_classical_game, Forgery, GameOracles, GameVerdict, SchemeParams};
use crate::lemmas::BoundFormulas;
use crate::ots::{Scheme, Signature};
use crate::qsim::ops::{self, C64, ONE};
use crate::seed::derive_indexed;

/// Blinding probability used by both attacks.
pub const ATTACK_EPSILON: f64 = 0.5;
/// Largest hash width the attacks accept.
pub const MAX_ATTACK_N: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBounds {
    pub full: f64,
    pub simplified: f64,
}

/// Security bounds for `q` hash queries, clamped at 1.
pub fn theorem_bounds(scheme: Scheme, q: u64, n: u32, l: usize, w: u32) -> TheoremBounds {
    let (full, simplified) = match scheme {
        Scheme::Lamport => (BoundFormulas::thm_l_full(q, l, n), BoundFormulas::thm_l_simplified(q, l, n)),
        Scheme::Winternitz => (BoundFormulas::thm_w_full(q, l, w, n), BoundFormulas::thm_w_simplified(q, l, w, n)),
    };
    TheoremBounds {
        full: full.min(1.0),
        simplified: simplified.min(1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: String,
    pub n: u32,
    pub l: u32,
    /// Hash queries (classical) or Grover iterations.
    pub q: u64,
    pub trials: u64,
    pub wins: u64,
    pub empirical: f64,
    /// Standard error of `empirical`.
    pub std_error: f64,
    /// 95% Wilson score interval.
    pub wilson: (f64, f64),
    /// Closed-form search estimate: `1 - (1 - 2l/2^n)^q` for the classical
    /// search, `sin^2((2q+1) theta)` with `sin^2 theta = 2l/2^n` for Grover.
    pub p_search_formula: f64,
    /// Exact search success probability.
    pub p_search_exact: f64,
    /// Fraction of trials whose search step found a preimage.
    pub search_empirical: f64,
    /// `p_search_exact / 4`.
    pub expected: f64,
    /// Full theorem bound for the query count, clamped at 1.
    pub theorem_bound: f64,
}

impl AttackReport {
    /// Empirical success within `k` standard errors of the expected value,
    /// using the binomial deviation at the expected value.
    pub fn within_sigmas(&self, k: f64) -> bool {
        let sd = (self.expected * (1.0 - self.expected) / self.trials as f64).sqrt();
        (self.empirical - self.expected).abs() <= k * sd + 1e-12
    }

    /// Empirical success no larger than the theorem bound plus `k` standard
    /// errors.
    pub fn below_theorem_bound(&self, k: f64) -> bool {
        self.empirical <= self.theorem_bound + k * self.std_error + 1e-12
    }
}

pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn p_search_formula(n: u32, l: u32, q: u64) -> f64 {
    1.0 - (1.0 - 2.0 * l as f64 / 2f64.powi(n as i32)).powf(q as f64)
}

fn stirling2(n: usize, k: usize) -> f64 {
    let mut table = vec![vec![0.0f64; k + 1]; n + 1];
    table[0][0] = 1.0;
    for i in 1..=n {
        for j in 1..=k.min(i) {
            table[i][j] = j as f64 * table[i - 1][j] + table[i - 1][j - 1];
        }
    }
    table[n][k]
}

fn falling(x: f64, d: usize) -> f64 {
    (0..d).map(|i| x - i as f64).product()
}

/// Exact probability that `q` distinct uniformly chosen inputs contain a
/// preimage of one of the `2l` public strings, over a uniform hash function
/// and uniform secrets.
pub fn p_search_exact(n: u32, l: u32, q: u64) -> f64 {
    let big_n = 2f64.powi(n as i32);
    let q = q.min(1u64 << n) as f64;
    let k = 2 * l as usize;
    let mut fail = 0.0;
    for d in 1..=k {
        // k secrets with d distinct values, none of them queried
        let secrets = stirling2(k, d) * falling(big_n - q, d) / big_n.powi(k as i32);
        if secrets == 0.0 {
            continue;
        }
        for t in 1..=d {
            let images = stirling2(d, t) * falling(big_n, t) / big_n.powi(d as i32);
            fail += secrets * images * (1.0 - t as f64 / big_n).powf(q);
        }
    }
    1.0 - fail
}

/// The same probability by enumerating secrets and the hash values on the
/// queried and secret inputs. Feasible for `n <= 3`.
pub fn p_search_brute_force(n: u32, l: u32, q: u64) -> Result<f64> {
    let big_n = 1u64 << n;
    let k = 2 * l;
    let q = q.min(big_n);
    if (k as u64 + q) * n as u64 > 24 {
        return Err(Error::SizeGuard("brute-force search enumeration".into()));
    }
    let mut probability = 0.0;
    let queried: Vec<u64> = (0..q).collect();
    for secrets in 0..big_n.pow(k) {
        let s: Vec<u64> = (0..k).map(|i| secrets / big_n.pow(i) % big_n).collect();
        let mut points: Vec<u64> = queried.iter().chain(&s).copied().collect();
        points.sort_unstable();
        points.dedup();
        for values in 0..big_n.pow(points.len() as u32) {
            let h = |x: u64| {
                let pos = points.iter().position(|&p| p == x).expect("point") as u32;
                values / big_n.pow(pos) % big_n
            };
            let targets: Vec<u64> = s.iter().map(|&x| h(x)).collect();
            if queried.iter().any(|&x| targets.contains(&h(x))) {
                probability += (big_n as f64).powi(-((k as usize + points.len()) as i32));
            }
        }
    }
    Ok(probability)
}

fn check_attack_params(n: u32, l: u32) -> Result<()> {
    if n == 0 || n > MAX_ATTACK_N || l == 0 || l > 16 {
        return Err(Error::InvalidParameter(format!("attack parameters n = {n}, l = {l}")));
    }
    Ok(())
}

fn give_up() -> Forgery {
    // an empty signature never verifies
    Forgery {
        m: BitString::zero(1),
        sigma: Signature { sigma: Vec::new() },
    }
}

/// Signs a message disagreeing with the found preimage's bit and turns the
/// answer into a forgery on the flipped message.
fn forge_from_preimage(g: &mut GameOracles, target: usize, y: u64) -> Result<Forgery> {
    let l = g.params().message_bits;
    let (i, j) = ((target / 2) as u32, (target % 2) as u64);
    let random: u64 = g.rng().random::<u64>() & crate::bits::mask(l);
    let bit = 1u64 << (l - 1 - i);
    let m = (random & !bit) | if j == 0 { bit } else { 0 };
    let m = BitString::new(m, l)?;
    let out = g.sign(&m)?;
    if out.flag {
        return Ok(give_up());
    }
    let mut sigma = out.sigma;
    sigma[i as usize] = BitString::new(y, g.params().n)?;
    Ok(Forgery {
        m: m.flip(i),
        sigma: Signature { sigma },
    })
}

/// The classical adversary: hashes `q` distinct random inputs and, on a
/// preimage hit, forges. Returns the forgery and whether the search hit.
pub fn preimage_search(g: &mut GameOracles, q: u64) -> Result<(Forgery, bool)> {
    let pk: Vec<u64> = g.public_key().iter().map(|p| p.value()).collect();
    let space = 1usize << g.params().n;
    let picks = sample(g.rng(), space, (q as usize).min(space));
    for x in picks.iter() {
        let y = g.hash(x as u64);
        if let Some(target) = pk.iter().position(|&p| p == y) {
            return Ok((forge_from_preimage(g, target, x as u64)?, true));
        }
    }
    Ok((give_up(), false))
}

fn lamport(n: u32, l: u32) -> SchemeParams {
    SchemeParams {
        scheme: Scheme::Lamport,
        n,
        message_bits: l,
        w: 2,
    }
}

struct TrialOutcome {
    win: bool,
    found: bool,
    search_probability: f64,
}

fn summarize(attack: &str, n: u32, l: u32, q: u64, outcomes: &[TrialOutcome], p_exact: f64) -> AttackReport {
    let trials = outcomes.len() as u64;
    let wins = outcomes.iter().filter(|o| o.win).count() as u64;
    let found = outcomes.iter().filter(|o| o.found).count() as u64;
    let t = trials.max(1) as f64;
    let empirical = wins as f64 / t;
    AttackReport {
        attack: attack.into(),
        n,
        l,
        q,
        trials,
        wins,
        empirical,
        std_error: (empirical * (1.0 - empirical) / t).sqrt(),
        wilson: wilson_interval(wins, trials),
        p_search_formula: p_search_formula(n, l, q),
        p_search_exact: p_exact,
        search_empirical: found as f64 / t,
        expected: p_exact / 4.0,
        theorem_bound: theorem_bounds(Scheme::Lamport, q, n, l as usize, 2).full,
    }
}

/// Classical attack: hash `q` distinct random inputs looking for a preimage
/// of any public string, then forge as described in the module docs.
pub fn classical_search_attack(n: u32, l: u32, q: u64, trials: u64, seed: u64) -> Result<AttackReport> {
    check_attack_params(n, l)?;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut found = false;
            let transcript = run_classical_game(lamport(n, l), ATTACK_EPSILON, derive_indexed(seed, "classical", t), |g| {
                let (forgery, hit) = preimage_search(g, q)?;
                found = hit;
                Ok(forgery)
            })?;
            Ok(TrialOutcome {
                win: transcript.verdict == GameVerdict::Win,
                found,
                search_probability: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize("classical", n, l, q, &outcomes, p_search_exact(n, l, q)))
}

/// Default Grover iteration count `floor(pi/4 sqrt(2^n / 2l))`.
pub fn default_grover_iterations(n: u32, l: u32) -> u64 {
    ((PI / 4.0) * (2f64.powi(n as i32) / (2.0 * l as f64)).sqrt()).floor() as u64
}

/// Grover success for exactly `2l` marked inputs.
pub fn grover_formula(n: u32, l: u32, iterations: u64) -> f64 {
    let fraction = (2.0 * l as f64 / 2f64.powi(n as i32)).min(1.0);
    let theta = fraction.sqrt().asin();
    ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

/// Amplitudes after `iterations` Grover iterates on `n` qubits marking
/// `marked` inputs, starting from the uniform superposition.
pub fn grover_state(n: u32, marked: &[bool], iterations: u64) -> Result<Vec<C64>> {
    let dim = 1usize << n;
    if marked.len() != dim {
        return Err(Error::LengthMismatch {
            what: "marking table",
            expected: dim,
            got: marked.len(),
        });
    }
    let layout = crate::qsim::RegisterLayout::new(&[("X", n)])?;
    let x = layout.slot("X")?;
    let flags = marked.to_vec();
    let oracle = ops::diagonal(dim, "O_marked", move |i| if flags[i] { -ONE } else { ONE });
    let diffusion = ops::combination(vec![(C64::new(2.0, 0.0), ops::phi(dim, x)), (-ONE, ops::identity(dim))])?;
    let iterate = ops::product(vec![diffusion, oracle])?;
    let mut v = vec![C64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
    for _ in 0..iterations {
        v = iterate.apply(&v);
    }
    Ok(v)
}

/// Probability of measuring a marked input.
pub fn grover_success(state: &[C64], marked: &[bool]) -> f64 {
    state.iter().zip(marked).filter(|(_, &m)| m).map(|(a, _)| a.norm_sqr()).sum()
}

/// Grover attack: the marked inputs are the preimages of the `2l` public
/// strings. The measured input feeds the same forgery as the classical
/// attack. `p_search_exact` is the mean of the exact per-trial search
/// probabilities.
pub fn grover_attack(n: u32, l: u32, iterations: Option<u64>, trials: u64, seed: u64) -> Result<AttackReport> {
    check_attack_params(n, l)?;
    if n > 12 {
        return Err(Error::SizeGuard(format!("Grover search on {n} qubits")));
    }
    let iterations = iterations.unwrap_or_else(|| default_grover_iterations(n, l));
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut found = false;
            let mut search_probability = 0.0;
            let transcript = run_classical_game(lamport(n, l), ATTACK_EPSILON, derive_indexed(seed, "grover", t), |g| {
                let pk: Vec<u64> = g.public_key().iter().map(|p| p.value()).collect();
                let table = g.function_table();
                let marked: Vec<bool> = table.iter().map(|y| pk.contains(y)).collect();
                let state = grover_state(n, &marked, iterations)?;
                search_probability = grover_success(&state, &marked);
                let mut target = g.rng().random::<f64>();
                let mut x = state.len() - 1;
                for (i, a) in state.iter().enumerate() {
                    let p = a.norm_sqr();
                    if target < p {
                        x = i;
                        break;
                    }
                    target -= p;
                }
                match pk.iter().position(|&p| p == table[x]) {
                    Some(target) => {
                        found = true;
                        forge_from_preimage(g, target, x as u64)
                    }
                    None => Ok(give_up()),
                }
            })?;
            Ok(TrialOutcome {
                win: transcript.verdict == GameVerdict::Win,
                found,
                search_probability,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let exact = outcomes.iter().map(|o| o.search_probability).sum::<f64>() / trials.max(1) as f64;
    let mut report = summarize("grover", n, l, iterations, &outcomes, exact);
    report.p_search_formula = grover_formula(n, l, iterations);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_bound_examples() {
        let b = theorem_bounds(Scheme::Lamport, 1, 20, 1, 2);
        assert!((b.simplified - 5.995e-3).abs() < 1e-6);
        assert!((b.full - 6286.0 / 2f64.powi(20)).abs() < 1e-15);
        let b = theorem_bounds(Scheme::Lamport, 0, 10, 2, 2);
        assert_eq!(b.full, 4.0 * 12.0 / 1024.0);
        let b = theorem_bounds(Scheme::Winternitz, 1, 20, 1, 2);
        assert!((b.simplified - 1.2207e-2).abs() < 1e-6);
        assert_eq!(theorem_bounds(Scheme::Lamport, 100, 4, 2, 2).full, 1.0);
    }

    #[test]
    fn search_formula_examples() {
        assert_eq!(p_search_formula(2, 1, 1), 0.5);
        assert!((p_search_formula(4, 1, 16) - 0.8819).abs() < 1e-4);
        assert_eq!(p_search_exact(4, 1, 0), 0.0);
        // querying every input always hits the secrets themselves
        assert!((p_search_exact(4, 1, 16) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_search_matches_brute_force() {
        for (n, l, q) in [(1, 1, 1), (2, 1, 1), (2, 1, 2), (2, 1, 3), (3, 1, 1), (3, 1, 2), (2, 2, 1)] {
            let exact = p_search_exact(n, l, q);
            let brute = p_search_brute_force(n, l, q).unwrap();
            assert!((exact - brute).abs() < 1e-12, "n={n} l={l} q={q}: {exact} vs {brute}");
        }
    }

    #[test]
    fn no_queries_never_wins() {
        let r = classical_search_attack(3, 1, 0, 500, 1).unwrap();
        assert_eq!(r.wins, 0);
        assert_eq!(r.search_empirical, 0.0);
    }

    #[test]
    fn classical_attack_matches_composition() {
        let r = classical_search_attack(3, 1, 3, 4000, 2).unwrap();
        assert!(r.within_sigmas(3.0), "{r:?}");
        assert!(r.below_theorem_bound(3.0));
    }

    #[test]
    fn grover_single_target_is_exact() {
        let marked = [false, false, true, false];
        let state = grover_state(2, &marked, 1).unwrap();
        assert!((grover_success(&state, &marked) - 1.0).abs() < 1e-12);
        assert!((grover_formula(2, 1, 0) - 0.5).abs() < 1e-12);
        let zero = grover_state(2, &marked, 0).unwrap();
        assert!((grover_success(&zero, &marked) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn grover_attack_sampling_matches_projection() {
        let r = grover_attack(4, 1, None, 2000, 3).unwrap();
        assert_eq!(r.q, 2);
        let sd = (r.p_search_exact * (1.0 - r.p_search_exact) / r.trials as f64).sqrt();
        assert!((r.search_empirical - r.p_search_exact).abs() <= 3.0 * sd + 1e-12, "{r:?}");
        assert!(r.within_sigmas(3.0), "{r:?}");
    }

    #[test]
    fn wilson_interval_contains_rate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }
}
