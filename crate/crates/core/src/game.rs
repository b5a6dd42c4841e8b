//! The blind-forgery experiment, classically and against programs run in the
//! quantum independent world.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::ots::{
    derive_wots_params, lamport_keygen, wots_keygen, KeyPair, LamportParams, Scheme, Signature, Verdict,
};
pub use crate::qworlds::BlindingSet;
use crate::qsim::dense::DenseMatrix;
use crate::qsim::ops::{self, Op};
use crate::qsim::state::StateVector;
use crate::qworlds::QiWorld;
use crate::rom::{HashOracle, RandomOracleTable};
use crate::seed::{derive_seed, labeled_rng, LabRng};

pub fn sample_blinding_set(epsilon: f64, message_bits: u32, rng: &mut impl Rng) -> Result<BlindingSet> {
    BlindingSet::sample(epsilon, message_bits, rng)
}

/// Output of the blinded signing oracle in extra-bit form: the signature
/// followed by flag `0`, or an all-zero payload followed by flag `1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindedOutput {
    pub sigma: Vec<BitString>,
    pub flag: bool,
}

impl BlindedOutput {
    pub fn signature(&self) -> Option<Signature> {
        (!self.flag).then(|| Signature {
            sigma: self.sigma.clone(),
        })
    }
}

pub fn blinded_sign(
    blinding: &BlindingSet,
    key: &KeyPair,
    m: &BitString,
    oracle: &mut dyn HashOracle,
) -> Result<BlindedOutput> {
    if m.width() != key.message_bits() {
        return Err(Error::LengthMismatch {
            what: "message bits",
            expected: key.message_bits() as usize,
            got: m.width() as usize,
        });
    }
    let (n, l) = key_shape(key);
    if blinding.contains(m.value()) {
        return Ok(BlindedOutput {
            sigma: vec![BitString::zero(n); l],
            flag: true,
        });
    }
    Ok(BlindedOutput {
        sigma: key.sign(m, oracle)?.sigma,
        flag: false,
    })
}

fn key_shape(key: &KeyPair) -> (u32, usize) {
    match key {
        KeyPair::Lamport(k) => (k.params.n, k.params.l as usize),
        KeyPair::Winternitz(k) => (k.params.n, k.params.l as usize),
    }
}

/// Public strings in index order: `p_i^j` at `2i + j` for Lamport, chain
/// ends for Winternitz.
pub fn public_strings(key: &KeyPair) -> Vec<BitString> {
    match key {
        KeyPair::Lamport(k) => k.pk.iter().flat_map(|p| p.iter().copied()).collect(),
        KeyPair::Winternitz(k) => k.pk.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub scheme: Scheme,
    pub n: u32,
    /// `l` for Lamport, `a` for Winternitz.
    pub message_bits: u32,
    pub w: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub kind: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

impl Step {
    fn new(kind: &str, detail: impl Into<String>, probability: Option<f64>) -> Self {
        Self {
            kind: kind.into(),
            detail: detail.into(),
            probability,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameVerdict {
    Win,
    Lose,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub seed: u64,
    pub epsilon: f64,
    #[serde(rename = "B")]
    pub blinding_set: Vec<u64>,
    pub steps: Vec<Step>,
    pub m_star: Option<String>,
    pub sigma_star: Vec<String>,
    pub verdict: GameVerdict,
    pub p_success: Option<f64>,
    pub q_outcome: Option<usize>,
}

/// A forgery attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forgery {
    pub m: BitString,
    pub sigma: Signature,
}

/// Oracle handles passed to a classical adversary.
pub struct GameOracles<'a> {
    params: SchemeParams,
    key: &'a KeyPair,
    blinding: &'a BlindingSet,
    oracle: &'a mut RandomOracleTable,
    rng: LabRng,
    hash_queries: usize,
    sign_queries: usize,
    steps: Vec<Step>,
}

impl GameOracles<'_> {
    pub fn params(&self) -> SchemeParams {
        self.params
    }

    pub fn public_key(&self) -> Vec<BitString> {
        public_strings(self.key)
    }

    /// Adversary randomness, derived from the game seed.
    pub fn rng(&mut self) -> &mut LabRng {
        &mut self.rng
    }

    pub fn hash(&mut self, x: u64) -> u64 {
        self.hash_queries += 1;
        self.oracle.eval(x)
    }

    /// The whole hash function, used to simulate superposition queries.
    /// Not counted in [`Self::hash_queries`].
    pub fn function_table(&mut self) -> Vec<u64> {
        (0..1u64 << self.params.n).map(|x| self.oracle.eval(x)).collect()
    }

    pub fn hash_queries(&self) -> usize {
        self.hash_queries
    }

    /// The blinded signing oracle; a second call fails and aborts the game.
    pub fn sign(&mut self, m: &BitString) -> Result<BlindedOutput> {
        self.sign_queries += 1;
        if self.sign_queries > 1 {
            self.steps.push(Step::new("sign", format!("refused {}", m.to_binary()), None));
            return Err(Error::SecondSignQuery);
        }
        let out = blinded_sign(self.blinding, self.key, m, self.oracle)?;
        let detail = if out.flag { "blinded" } else { "signed" };
        self.steps.push(Step::new("sign", format!("{} {detail}", m.to_binary()), None));
        Ok(out)
    }
}

pub fn generate_key(params: SchemeParams, oracle: &mut dyn HashOracle, rng: &mut impl Rng) -> Result<KeyPair> {
    Ok(match params.scheme {
        Scheme::Lamport => KeyPair::Lamport(lamport_keygen(&LamportParams::new(params.n, params.message_bits)?, oracle, rng)?),
        Scheme::Winternitz => {
            KeyPair::Winternitz(wots_keygen(&derive_wots_params(params.message_bits, params.w, params.n)?, oracle, rng)?)
        }
    })
}

/// Plays one game: key generation under a lazily sampled random oracle,
/// blinding set sampling, the adversary, and verification of its forgery.
pub fn run_classical_game<F>(params: SchemeParams, epsilon: f64, seed: u64, adversary: F) -> Result<GameTranscript>
where
    F: FnOnce(&mut GameOracles) -> Result<Forgery>,
{
    let mut oracle = RandomOracleTable::new(params.n, derive_seed(seed, "game/oracle"))?;
    let key = generate_key(params, &mut oracle, &mut labeled_rng(seed, "game/key"))?;
    let blinding = BlindingSet::sample(epsilon, params.message_bits, &mut labeled_rng(seed, "game/blinding"))?;
    let mut handles = GameOracles {
        params,
        key: &key,
        blinding: &blinding,
        oracle: &mut oracle,
        rng: labeled_rng(seed, "game/adversary"),
        hash_queries: 0,
        sign_queries: 0,
        steps: Vec::new(),
    };
    let result = adversary(&mut handles);
    let mut steps = std::mem::take(&mut handles.steps);
    steps.insert(0, Step::new("hash", format!("{} queries", handles.hash_queries), None));
    let aborted = handles.sign_queries > 1;
    let mut transcript = GameTranscript {
        seed,
        epsilon,
        blinding_set: blinding.blinded(),
        steps,
        m_star: None,
        sigma_star: Vec::new(),
        verdict: GameVerdict::Aborted,
        p_success: None,
        q_outcome: None,
    };
    let forgery = match result {
        Ok(f) if !aborted => f,
        Ok(_) | Err(Error::SecondSignQuery) => return Ok(transcript),
        Err(e) => return Err(e),
    };
    transcript.m_star = Some(forgery.m.to_binary());
    transcript.sigma_star = forgery.sigma.sigma.iter().map(BitString::to_hex).collect();
    let verdict = key.verify(&forgery.m, &forgery.sigma, &mut oracle);
    let win = verdict == Verdict::Accept && blinding.contains(forgery.m.value());
    transcript.steps.push(Step::new("verify", verdict.to_string(), None));
    transcript.verdict = if win { GameVerdict::Win } else { GameVerdict::Lose };
    Ok(transcript)
}

/// One instruction of a quantum adversary.
#[derive(Clone)]
pub enum ProgramStep {
    ApplyUnitary { registers: Vec<String>, matrix: Arc<DenseMatrix> },
    HashQuery,
    SignQuery,
    MeasureM,
    MeasureSigma,
}

impl ProgramStep {
    fn describe(&self) -> String {
        match self {
            ProgramStep::ApplyUnitary { registers, .. } => format!("unitary on {}", registers.join(",")),
            ProgramStep::HashQuery => "hash query".into(),
            ProgramStep::SignQuery => "sign query".into(),
            ProgramStep::MeasureM => "measure M".into(),
            ProgramStep::MeasureSigma => "measure Sigma".into(),
        }
    }
}

/// Registers a program may touch directly.
pub const ADVERSARY_REGISTERS: [&str; 6] = ["M", "Sigma", "B", "E", "X", "Y"];

#[derive(Clone, Default)]
pub struct AdversaryProgram {
    pub steps: Vec<ProgramStep>,
}

impl AdversaryProgram {
    /// Hash queries before and after the sign query.
    pub fn query_counts(&self) -> (usize, usize) {
        let mut signed = false;
        let (mut q0, mut q1) = (0, 0);
        for step in &self.steps {
            match step {
                ProgramStep::SignQuery => signed = true,
                ProgramStep::HashQuery if signed => q1 += 1,
                ProgramStep::HashQuery => q0 += 1,
                _ => {}
            }
        }
        (q0, q1)
    }

    pub fn validate(&self, world: &QiWorld) -> Result<()> {
        let signs = self.steps.iter().filter(|s| matches!(s, ProgramStep::SignQuery)).count();
        if signs > 1 {
            return Err(Error::SecondSignQuery);
        }
        let k = self.steps.len();
        if k < 2
            || !matches!(self.steps[k - 2], ProgramStep::MeasureM)
            || !matches!(self.steps[k - 1], ProgramStep::MeasureSigma)
            || self.steps[..k - 2]
                .iter()
                .any(|s| matches!(s, ProgramStep::MeasureM | ProgramStep::MeasureSigma))
        {
            return Err(Error::Program("a program ends with MeasureM then MeasureSigma, and measures nothing else".into()));
        }
        for step in &self.steps {
            if let ProgramStep::ApplyUnitary { registers, matrix } = step {
                let mut bits = 0;
                for r in registers {
                    if !ADVERSARY_REGISTERS.contains(&r.as_str()) {
                        return Err(Error::Program(format!("register `{r}` is not held by the adversary")));
                    }
                    bits += world.slot(r)?.bits;
                }
                if matrix.n() != 1usize << bits {
                    return Err(Error::Dimension(format!(
                        "unitary of dimension {} on registers spanning {bits} qubits",
                        matrix.n()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Seeded program with `q0` hash queries before and `q1` after the sign
    /// query, each preceded by a random unitary on `X, Y, E`.
    pub fn random(world: &QiWorld, q0: usize, q1: usize, seed: u64) -> Result<Self> {
        let mut rng = labeled_rng(seed, "program");
        let has_e = world.layout().contains("E");
        let unitary = |regs: &[&str], rng: &mut LabRng| -> Result<ProgramStep> {
            let regs: Vec<&str> = regs.iter().copied().filter(|r| *r != "E" || has_e).collect();
            let bits: u32 = regs.iter().map(|r| world.slot(r).map(|s| s.bits)).sum::<Result<u32>>()?;
            Ok(ProgramStep::ApplyUnitary {
                registers: regs.iter().map(|r| r.to_string()).collect(),
                matrix: Arc::new(DenseMatrix::random_unitary(1 << bits, rng)),
            })
        };
        let mut steps = vec![unitary(&["M", "E"], &mut rng)?];
        for _ in 0..q0 {
            steps.push(unitary(&["X", "Y", "E"], &mut rng)?);
            steps.push(ProgramStep::HashQuery);
        }
        steps.push(ProgramStep::SignQuery);
        for _ in 0..q1 {
            steps.push(unitary(&["X", "Y", "E"], &mut rng)?);
            steps.push(ProgramStep::HashQuery);
        }
        steps.push(unitary(&["M", "Sigma"], &mut rng)?);
        steps.push(unitary(&["Sigma", "E"], &mut rng)?);
        steps.push(ProgramStep::MeasureM);
        steps.push(ProgramStep::MeasureSigma);
        Ok(Self { steps })
    }
}

/// States recorded while running the unitary part of a program.
pub struct ExecutionTrace {
    /// Right before the sign query (the final state if there is none).
    pub before_sign: StateVector,
    /// Right after the sign query.
    pub after_sign: Option<StateVector>,
    /// After the last hash query that follows the sign query; equal to
    /// `after_sign` when there is none.
    pub after_queries: Option<StateVector>,
    /// Right before the measurements.
    pub final_state: StateVector,
    pub labels: Vec<String>,
}

/// Runs every unitary step of `program` from the world's initial state.
pub fn execute(program: &AdversaryProgram, world: &QiWorld) -> Result<ExecutionTrace> {
    program.validate(world)?;
    let dim = world.dim();
    let query = world.query_unitary()?;
    let sign = world.blinded_sign_unitary()?;
    let mut state = world.initial_state()?;
    let mut before_sign = None;
    let mut after_sign = None;
    let mut after_queries = None;
    let mut labels = Vec::new();
    for step in &program.steps {
        labels.push(step.describe());
        match step {
            ProgramStep::ApplyUnitary { registers, matrix } => {
                let slots = registers.iter().map(|r| world.slot(r)).collect::<Result<Vec<_>>>()?;
                let op: Op = ops::embed(matrix.clone(), &slots, dim)?;
                state = state.apply(op.as_ref())?;
            }
            ProgramStep::HashQuery => {
                state = state.apply(query.as_ref())?;
                if after_sign.is_some() {
                    after_queries = Some(state.clone());
                }
            }
            ProgramStep::SignQuery => {
                before_sign = Some(state.clone());
                state = state.apply(sign.as_ref())?;
                after_sign = Some(state.clone());
                after_queries = Some(state.clone());
            }
            ProgramStep::MeasureM | ProgramStep::MeasureSigma => {}
        }
    }
    Ok(ExecutionTrace {
        before_sign: before_sign.unwrap_or_else(|| state.clone()),
        after_sign,
        after_queries,
        final_state: state,
        labels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameMode {
    Plain,
    Modified,
}

/// Result of a quantum game: a sampled transcript plus exact probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumGameReport {
    pub transcript: GameTranscript,
    pub mode: GameMode,
    pub q0: usize,
    pub q1: usize,
    /// Exact winning probability.
    pub p_success: f64,
    /// Probability of each Q-measurement outcome `1..=l+1` (modified mode).
    pub q_distribution: Vec<f64>,
    /// Probability that the Q-measurement reports `l+1` and `m*` is
    /// blinded (modified mode).
    pub p_last_blinded: f64,
}

fn weighted_success(amplitudes: &[ops::C64], win: &impl Fn(usize) -> bool) -> f64 {
    amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .filter(|(i, _)| win(*i))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn sample_index(amplitudes: &[ops::C64], rng: &mut impl Rng) -> usize {
    let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let mut target = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, a) in amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            last = i;
            if target < p {
                return i;
            }
            target -= p;
        }
    }
    last
}

/// Runs `program` in `world`. The success probability is exact: the final
/// state is scanned basis state by basis state. The transcript records one
/// sampled run of the measurements, seeded from `seed`.
pub fn run_quantum_game(program: &AdversaryProgram, world: &QiWorld, mode: GameMode, seed: u64) -> Result<QuantumGameReport> {
    let trace = execute(program, world)?;
    let (q0, q1) = program.query_counts();
    let win = world.win_predicate()?;
    let psi = trace.final_state.amplitudes();
    let mut rng = labeled_rng(seed, "qgame/measure");
    let m_slot = world.slot("M")?;
    let mut steps: Vec<Step> = trace.labels.iter().map(|l| Step::new("program", l.clone(), None)).collect();
    let (p_success, q_distribution, p_last_blinded, index, q_outcome) = match mode {
        GameMode::Plain => {
            let p = weighted_success(psi, &win);
            (p, Vec::new(), 0.0, sample_index(psi, &mut rng), None)
        }
        GameMode::Modified => {
            let qt = world.qtilde()?;
            let pi_b = world.blinded_message_projector()?;
            let mut branches: Vec<Vec<ops::C64>> = Vec::with_capacity(qt.len());
            let mut dist = Vec::with_capacity(qt.len());
            let mut p = 0.0;
            for q in &qt {
                let branch = q.apply(psi);
                let weight: f64 = branch.iter().map(|a| a.norm_sqr()).sum();
                p += weighted_success(&branch, &win);
                dist.push(weight);
                branches.push(branch);
            }
            let last = qt.last().expect("l+1 outcomes").apply(&pi_b.apply(psi));
            let p_last: f64 = last.iter().map(|a| a.norm_sqr()).sum();
            let mut target = rng.random::<f64>() * dist.iter().sum::<f64>();
            let mut k = dist.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    k = i;
                    break;
                }
                target -= d;
            }
            while dist[k] == 0.0 && k > 0 {
                k -= 1;
            }
            steps.push(Step::new("q-measurement", format!("outcome {}", k + 1), Some(dist[k])));
            let index = sample_index(&branches[k], &mut rng);
            (p, dist, p_last, index, Some(k + 1))
        }
    };
    let m_star = m_slot.get(index);
    let sigma: Vec<u64> = (0..world.l()).map(|i| world.sigma_block(i).map(|s| s.get(index))).collect::<Result<_>>()?;
    let marginal_m = trace.final_state.marginal("M")?;
    steps.push(Step::new("measure", "M", Some(marginal_m[m_star as usize])));
    steps.push(Step::new("measure", "Sigma", None));
    let n = world.n();
    let transcript = GameTranscript {
        seed,
        epsilon: world.blinding().epsilon(),
        blinding_set: world.blinding().blinded(),
        steps,
        m_star: Some(BitString::new(m_star, world.message_bits())?.to_binary()),
        sigma_star: sigma.iter().map(|&s| BitString::new(s, n).map(|b| b.to_hex())).collect::<Result<_>>()?,
        verdict: if win(index) { GameVerdict::Win } else { GameVerdict::Lose },
        p_success: Some(p_success),
        q_outcome,
    };
    Ok(QuantumGameReport {
        transcript,
        mode,
        q0,
        q1,
        p_success,
        q_distribution,
        p_last_blinded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::norm::distance;
    use crate::qworlds::{LayoutKind, WorldConfig};
    use crate::rom::FixedFunction;
    use crate::seed::rng_from_seed;

    fn lamport_params(n: u32, l: u32) -> SchemeParams {
        SchemeParams {
            scheme: Scheme::Lamport,
            n,
            message_bits: l,
            w: 2,
        }
    }

    #[test]
    fn blinding_set_size_is_binomial() {
        let trials = 10_000;
        let sigma = (256.0f64 * 0.25).sqrt();
        let mut rng = rng_from_seed(6);
        let total: usize = (0..trials).map(|_| sample_blinding_set(0.5, 8, &mut rng).unwrap().len()).sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 128.0).abs() < 4.0 * sigma / (trials as f64).sqrt());
    }

    #[test]
    fn blinded_sign_extra_bit_form() {
        let mut oracle = FixedFunction::uniform(4, &mut rng_from_seed(1)).unwrap();
        let key = generate_key(lamport_params(4, 2), &mut oracle, &mut rng_from_seed(2)).unwrap();
        let m = BitString::new(2, 2).unwrap();
        let blind = BlindingSet::from_members(2, &[2]).unwrap();
        let out = blinded_sign(&blind, &key, &m, &mut oracle).unwrap();
        assert!(out.flag);
        assert!(out.sigma.iter().all(|s| s.value() == 0));
        let empty = BlindingSet::from_members(2, &[]).unwrap();
        let out = blinded_sign(&empty, &key, &m, &mut oracle).unwrap();
        assert!(!out.flag);
        assert_eq!(out.signature().unwrap(), key.sign(&m, &mut oracle).unwrap());
    }

    #[test]
    fn replaying_an_unblinded_signature_loses() {
        for seed in 0..20 {
            let t = run_classical_game(lamport_params(4, 2), 0.5, seed, |g| {
                let m = BitString::new(g.rng().random_range(0..4u64), 2).unwrap();
                let out = g.sign(&m)?;
                Ok(Forgery {
                    m,
                    sigma: Signature { sigma: out.sigma },
                })
            })
            .unwrap();
            assert_eq!(t.verdict, GameVerdict::Lose);
        }
    }

    #[test]
    fn second_sign_query_aborts() {
        let t = run_classical_game(lamport_params(3, 1), 0.0, 1, |g| {
            let m = BitString::new(0, 1).unwrap();
            let out = g.sign(&m)?;
            let _ = g.sign(&BitString::new(1, 1).unwrap());
            Ok(Forgery {
                m,
                sigma: Signature { sigma: out.sigma },
            })
        })
        .unwrap();
        assert_eq!(t.verdict, GameVerdict::Aborted);
        let t = run_classical_game(lamport_params(3, 1), 0.0, 1, |g| {
            g.sign(&BitString::new(0, 1).unwrap())?;
            g.sign(&BitString::new(1, 1).unwrap())?;
            unreachable!()
        })
        .unwrap();
        assert_eq!(t.verdict, GameVerdict::Aborted);
    }

    #[test]
    fn random_forgery_on_blinded_message_matches_count() {
        // l = 1, n = 2: one string, a uniform guess verifies with
        // probability |h^{-1}(p)| / 4, which averages to
        // (1 - (3/4)^4) * ... exactly E[#preimages of h(s)]/4 = (1 + 3/4)/4.
        let trials = 20_000u64;
        let mut wins = 0u64;
        for seed in 0..trials {
            let t = run_classical_game(lamport_params(2, 1), 1.0, seed, |g| {
                let guess = g.rng().random_range(0..4u64);
                Ok(Forgery {
                    m: BitString::new(0, 1).unwrap(),
                    sigma: Signature {
                        sigma: vec![BitString::new(guess, 2).unwrap()],
                    },
                })
            })
            .unwrap();
            wins += (t.verdict == GameVerdict::Win) as u64;
        }
        let expected = (1.0 + 3.0 / 4.0) / 4.0;
        let rate = wins as f64 / trials as f64;
        let sd = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((rate - expected).abs() < 4.0 * sd, "rate {rate} vs {expected}");
    }

    fn world(config: WorldConfig, blinded: &[u64]) -> QiWorld {
        let b = BlindingSet::from_members(config.message_bits, blinded).unwrap();
        QiWorld::new(config, b, LayoutKind::Game).unwrap()
    }

    #[test]
    fn program_validation() {
        let w = world(WorldConfig::lamport(1, 1, 0), &[0]);
        let mut p = AdversaryProgram::random(&w, 0, 0, 1).unwrap();
        assert!(p.validate(&w).is_ok());
        p.steps.insert(0, ProgramStep::SignQuery);
        assert!(matches!(p.validate(&w), Err(Error::SecondSignQuery)));
        let bad = AdversaryProgram {
            steps: vec![
                ProgramStep::ApplyUnitary {
                    registers: vec!["S1_0".into()],
                    matrix: Arc::new(DenseMatrix::identity(2)),
                },
                ProgramStep::MeasureM,
                ProgramStep::MeasureSigma,
            ],
        };
        assert!(bad.validate(&w).is_err());
        let p = AdversaryProgram::random(&w, 2, 1, 1).unwrap();
        assert_eq!(p.query_counts(), (2, 1));
    }

    #[test]
    fn exact_success_matches_direct_enumeration() {
        // no queries, random forgery on Lamport n = 1, l = 1
        let w = world(WorldConfig::lamport(1, 1, 3), &[1]);
        let program = AdversaryProgram::random(&w, 0, 0, 11).unwrap();
        let report = run_quantum_game(&program, &w, GameMode::Plain, 1).unwrap();
        let trace = execute(&program, &w).unwrap();
        let (m, sigma, s0, s1) = (w.slot("M").unwrap(), w.slot("Sigma").unwrap(), w.slot("S1_0").unwrap(), w.slot("S1_1").unwrap());
        let mut expected = 0.0;
        for (i, a) in trace.final_state.amplitudes().iter().enumerate() {
            if m.get(i) != 1 {
                continue;
            }
            let chains = w.chains_at(i);
            assert_eq!(chains.gamma[0][0], s0.get(i));
            assert_eq!(chains.gamma[1][0], s1.get(i));
            if w.verify(1, &[sigma.get(i)], &chains) {
                expected += a.norm_sqr();
            }
        }
        assert!((report.p_success - expected).abs() < 1e-12);
        assert!(report.p_success <= 1.0);
    }

    #[test]
    fn win_predicate_agrees_with_reference_verification() {
        let w = world(WorldConfig::winternitz(1, 1, 3, 2), &[0, 1]);
        let win = w.win_predicate().unwrap();
        let m = w.slot("M").unwrap();
        for i in 0..w.dim() {
            let sigma: Vec<u64> = (0..w.l()).map(|k| w.sigma_block(k).unwrap().get(i)).collect();
            assert_eq!(win(i), w.verify(m.get(i), &sigma, &w.chains_at(i)), "index {i}");
        }
    }

    #[test]
    fn no_hash_programs_stay_in_the_invariant_subspace() {
        for seed in 0..4 {
            for config in [WorldConfig::lamport(1, 2, seed), WorldConfig::winternitz(1, 1, 3, seed)] {
                let mut rng = rng_from_seed(seed);
                let b = BlindingSet::sample(0.5, config.message_bits, &mut rng).unwrap();
                if b.unblinded().is_empty() {
                    continue;
                }
                let w = QiWorld::new(config, b, LayoutKind::Game).unwrap();
                let p = w.invariant_projector().unwrap();
                let trace = execute(&AdversaryProgram::random(&w, 0, 0, seed).unwrap(), &w).unwrap();
                let psi = trace.after_sign.unwrap();
                let projected = psi.apply(p.as_ref()).unwrap();
                assert!(distance(projected.amplitudes(), psi.amplitudes()) < 1e-9);
            }
        }
    }

    #[test]
    fn modified_game_without_queries_never_reports_last_outcome_on_blinded() {
        let w = world(WorldConfig::lamport(1, 2, 1), &[1, 2]);
        for seed in 0..3 {
            let program = AdversaryProgram::random(&w, 0, 0, seed).unwrap();
            let plain = run_quantum_game(&program, &w, GameMode::Plain, seed).unwrap();
            let modified = run_quantum_game(&program, &w, GameMode::Modified, seed).unwrap();
            assert!(modified.p_last_blinded < 1e-10);
            assert!((modified.q_distribution.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(plain.p_success <= (w.l() + 1) as f64 * modified.p_success + 1e-12);
        }
    }

    #[test]
    fn queries_before_signing_can_reach_the_last_outcome() {
        let w = world(WorldConfig::lamport(1, 2, 1), &[1, 2]);
        let program = AdversaryProgram::random(&w, 1, 0, 0).unwrap();
        let modified = run_quantum_game(&program, &w, GameMode::Modified, 0).unwrap();
        assert!(modified.p_last_blinded > 1e-6);
    }

    #[test]
    fn transcripts_are_deterministic() {
        let w = world(WorldConfig::lamport(1, 1, 1), &[0]);
        let program = AdversaryProgram::random(&w, 1, 1, 3).unwrap();
        let a = run_quantum_game(&program, &w, GameMode::Modified, 9).unwrap();
        let b = run_quantum_game(&program, &w, GameMode::Modified, 9).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(serde_json::to_string(&a.transcript).unwrap().contains("\"B\":[0]"));
    }
}
