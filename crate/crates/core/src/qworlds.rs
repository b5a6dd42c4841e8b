//! Operators of the quantum independent world: chain registers held in
//! superposition, the reprogrammed hash unitary, the blinded signing unitary,
//! the Q-measurement and the invariant projector.
//!
//! Lamport keys are treated as `2l` chains of length two: chain `2i + j`
//! starts at register `S{i}_{j}` and ends at the public string `p_i^j`.
//! Winternitz keys have `l` chains with registers `G{i}_{j}` for
//! `j = 0..=w-2`. Chain ends are classical constants and are never stored in
//! qubits; a projector onto `|Phi>` of such a constant slot is taken to be
//! zero and its complement the identity.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{mask, BitString};
use crate::error::{Error, Result};
use crate::ots::{derive_wots_params_any_radix, encode_message, Scheme, WotsParams};
use crate::qsim::layout::{RegisterLayout, Slot};
use crate::qsim::ops::{self, identity, phi, phi_perp, zero, Op, C64, ONE};
use crate::qsim::state::{uniform_state, StateVector};
use crate::rom::{ChainTuple, FixedFunction, HashOracle, ReprogrammedOracle, Reprogramming};
use crate::seed::labeled_rng;

/// Largest message space for which blinding sets are stored explicitly.
pub const MAX_BLINDING_BITS: u32 = 20;

/// Messages blinded in one run of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindingSet {
    bits: u32,
    epsilon: f64,
    members: Vec<bool>,
}

impl BlindingSet {
    /// Includes each of the `2^bits` messages independently with
    /// probability `epsilon`.
    pub fn sample(epsilon: f64, bits: u32, rng: &mut impl Rng) -> Result<Self> {
        Self::check(bits)?;
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside [0, 1]")));
        }
        let members = (0..1u64 << bits).map(|_| rng.random::<f64>() < epsilon).collect();
        Ok(Self {
            bits,
            epsilon,
            members,
        })
    }

    pub fn from_members(bits: u32, blinded: &[u64]) -> Result<Self> {
        Self::check(bits)?;
        let mut members = vec![false; 1usize << bits];
        for &m in blinded {
            if m >> bits != 0 {
                return Err(Error::WidthMismatch { value: m, width: bits });
            }
            members[m as usize] = true;
        }
        let epsilon = blinded.len() as f64 / members.len() as f64;
        Ok(Self {
            bits,
            epsilon,
            members,
        })
    }

    fn check(bits: u32) -> Result<()> {
        if bits == 0 || bits > MAX_BLINDING_BITS {
            return Err(Error::SizeGuard(format!(
                "message space of {bits} bits (limit {MAX_BLINDING_BITS})"
            )));
        }
        Ok(())
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn contains(&self, m: u64) -> bool {
        self.members.get(m as usize).copied().unwrap_or(false)
    }

    pub fn blinded(&self) -> Vec<u64> {
        (0..self.members.len() as u64).filter(|&m| self.contains(m)).collect()
    }

    pub fn unblinded(&self) -> Vec<u64> {
        (0..self.members.len() as u64).filter(|&m| !self.contains(m)).collect()
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which registers a world allocates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    /// `M, Sigma, B, E, X, Y` followed by the chain registers.
    Game,
    /// `X, Y` followed by the chain registers.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub scheme: Scheme,
    pub n: u32,
    /// `l` for Lamport, `a` for Winternitz.
    pub message_bits: u32,
    /// Chain length; always 2 for Lamport.
    pub w: u32,
    pub e_qubits: u32,
    pub seed: u64,
}

impl WorldConfig {
    pub fn lamport(n: u32, l: u32, seed: u64) -> Self {
        Self {
            scheme: Scheme::Lamport,
            n,
            message_bits: l,
            w: 2,
            e_qubits: 2,
            seed,
        }
    }

    pub fn winternitz(n: u32, a: u32, w: u32, seed: u64) -> Self {
        Self {
            scheme: Scheme::Winternitz,
            n,
            message_bits: a,
            w,
            e_qubits: 2,
            seed,
        }
    }
}

/// A chain element: a register in superposition or a classical end point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Register(Slot),
    Classical(u64),
}

#[derive(Debug, Clone)]
struct Chain {
    /// Registers for positions `0..=w-2`.
    regs: Vec<Slot>,
    end: u64,
}

impl Chain {
    fn element(&self, j: usize) -> Source {
        if j < self.regs.len() {
            Source::Register(self.regs[j])
        } else {
            Source::Classical(self.end)
        }
    }
}

/// Serializable description of a world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldDescriptor {
    pub scheme: Scheme,
    pub n: u32,
    pub l: usize,
    pub w: u32,
    pub seed: u64,
    pub blinding_set: Vec<u64>,
    pub p: Vec<String>,
}

pub struct QiWorld {
    config: WorldConfig,
    wots: Option<WotsParams>,
    l: usize,
    layout: Arc<RegisterLayout>,
    chains: Vec<Chain>,
    blinding: BlindingSet,
    h: FixedFunction,
}

impl QiWorld {
    /// Samples the base function and the chain ends from the configured seed.
    pub fn new(config: WorldConfig, blinding: BlindingSet, kind: LayoutKind) -> Result<Self> {
        let mut rng = labeled_rng(config.seed, "world/h");
        let h = FixedFunction::uniform(config.n, &mut rng)?;
        let chain_count = match config.scheme {
            Scheme::Lamport => 2 * config.message_bits as usize,
            Scheme::Winternitz => {
                derive_wots_params_any_radix(config.message_bits, config.w, config.n)?.l as usize
            }
        };
        let mut rng = labeled_rng(config.seed, "world/ends");
        let ends = (0..chain_count)
            .map(|_| rng.random::<u64>() & mask(config.n))
            .collect();
        Self::with_parts(config, blinding, kind, h, ends)
    }

    /// Builds a world from an explicit base function and chain ends (in
    /// chain order).
    pub fn with_parts(
        config: WorldConfig,
        blinding: BlindingSet,
        kind: LayoutKind,
        h: FixedFunction,
        ends: Vec<u64>,
    ) -> Result<Self> {
        let n = config.n;
        if h.n() != n {
            return Err(Error::InvalidParameter("base function width differs from n".into()));
        }
        let (wots, l, names): (Option<WotsParams>, usize, Vec<Vec<String>>) = match config.scheme {
            Scheme::Lamport => {
                if config.w != 2 {
                    return Err(Error::InvalidParameter("Lamport chains have length 2".into()));
                }
                let l = config.message_bits as usize;
                let names = (0..l)
                    .flat_map(|i| (0..2).map(move |j| vec![format!("S{}_{}", i + 1, j)]))
                    .collect();
                (None, l, names)
            }
            Scheme::Winternitz => {
                let p = derive_wots_params_any_radix(config.message_bits, config.w, n)?;
                let l = p.l as usize;
                let names = (0..l)
                    .map(|i| (0..config.w - 1).map(|j| format!("G{}_{}", i + 1, j)).collect())
                    .collect();
                (Some(p), l, names)
            }
        };
        if blinding.bits() != config.message_bits {
            return Err(Error::InvalidParameter(format!(
                "blinding set covers {} message bits, world uses {}",
                blinding.bits(),
                config.message_bits
            )));
        }
        if ends.len() != names.len() || ends.iter().any(|&e| e >> n != 0) {
            return Err(Error::LengthMismatch {
                what: "chain end points",
                expected: names.len(),
                got: ends.len(),
            });
        }
        let mut regs: Vec<(String, u32)> = Vec::new();
        if kind == LayoutKind::Game {
            regs.push(("M".into(), config.message_bits));
            regs.push(("Sigma".into(), n * l as u32));
            regs.push(("B".into(), 1));
            if config.e_qubits > 0 {
                regs.push(("E".into(), config.e_qubits));
            }
        }
        regs.push(("X".into(), n));
        regs.push(("Y".into(), n));
        for chain in &names {
            for name in chain {
                regs.push((name.clone(), n));
            }
        }
        let layout = RegisterLayout::shared(&regs)?;
        let chains = names
            .iter()
            .zip(&ends)
            .map(|(chain, &end)| {
                Ok(Chain {
                    regs: chain.iter().map(|r| layout.slot(r)).collect::<Result<_>>()?,
                    end,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            wots,
            l,
            layout,
            chains,
            blinding,
            h,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn scheme(&self) -> Scheme {
        self.config.scheme
    }

    pub fn n(&self) -> u32 {
        self.config.n
    }

    /// Number of signature blocks.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn w(&self) -> u32 {
        self.config.w
    }

    pub fn message_bits(&self) -> u32 {
        self.config.message_bits
    }

    pub fn layout(&self) -> &Arc<RegisterLayout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn blinding(&self) -> &BlindingSet {
        &self.blinding
    }

    pub fn base_function(&self) -> &FixedFunction {
        &self.h
    }

    pub fn chain_ends(&self) -> Vec<u64> {
        self.chains.iter().map(|c| c.end).collect()
    }

    pub fn slot(&self, name: &str) -> Result<Slot> {
        self.layout.slot(name)
    }

    /// Every chain register (positions `0..=w-2`), chain by chain.
    pub fn chain_slots(&self) -> Vec<Slot> {
        self.chains.iter().flat_map(|c| c.regs.iter().copied()).collect()
    }

    /// Registers of chain `i` (Winternitz) or of the pair `S_i^0, S_i^1`
    /// (Lamport) for the prefix `0..=j`, as used by the commutator bounds.
    pub fn chain_prefix(&self, chain: usize, j: usize) -> Vec<Slot> {
        self.chains[chain].regs[..=j].to_vec()
    }

    pub fn chain_count(&self) -> usize {
        self.chains.len()
    }

    /// Sub-register `Sigma_i` (0-based block).
    pub fn sigma_block(&self, i: usize) -> Result<Slot> {
        let sigma = self.layout.slot("Sigma")?;
        let n = self.config.n;
        Ok(Slot {
            shift: sigma.shift + (self.l - 1 - i) as u32 * n,
            bits: n,
        })
    }

    /// Signature digits: message bits for Lamport, `b(m)` for Winternitz.
    pub fn digits(&self, m: u64) -> Vec<u32> {
        let bits = self.config.message_bits;
        match &self.wots {
            None => (0..bits).map(|i| ((m >> (bits - 1 - i)) & 1) as u32).collect(),
            Some(p) => {
                let msg = BitString::new(m, bits).expect("message in range");
                encode_message(&msg, p).expect("valid message").digits
            }
        }
    }

    /// Chain element that signs position `i` of message `m`.
    pub fn relevant(&self, i: usize, m: u64) -> Source {
        let d = self.digits(m)[i] as usize;
        match self.config.scheme {
            Scheme::Lamport => self.chains[2 * i + d].element(0),
            Scheme::Winternitz => self.chains[i].element(d),
        }
    }

    /// Chain registers that stay untouched when `m` is signed: the
    /// complementary Lamport strings, or the Winternitz elements strictly
    /// below the signed ones.
    pub fn unused_slots(&self, m: u64) -> Vec<Slot> {
        let digits = self.digits(m);
        match self.config.scheme {
            Scheme::Lamport => (0..self.l)
                .map(|i| self.chains[2 * i + 1 - digits[i] as usize].regs[0])
                .collect(),
            Scheme::Winternitz => (0..self.l)
                .flat_map(|i| self.chains[i].regs[..digits[i] as usize].iter().copied())
                .collect(),
        }
    }

    /// Index of a chain register inside [`Self::chain_slots`].
    fn alpha_position(&self, slot: Slot) -> usize {
        self.chain_slots()
            .iter()
            .position(|&s| s == slot)
            .expect("chain register")
    }

    /// Hash unitary `U_h` as a basis permutation: `Y` receives the XOR of
    /// the successors of every chain element equal to `X`, or `h(X)` when
    /// there is none.
    pub fn query_unitary(&self) -> Result<Op> {
        let x = self.slot("X")?;
        let y = self.slot("Y")?;
        let pairs: Vec<(Slot, Source)> = self
            .chains
            .iter()
            .flat_map(|c| (0..c.regs.len()).map(move |j| (c.regs[j], c.element(j + 1))))
            .collect();
        let h = self.h.clone();
        ops::involution(self.dim(), "U_h", move |i| {
            let xv = x.get(i);
            let mut acc = 0u64;
            let mut hit = false;
            for (reg, next) in &pairs {
                if reg.get(i) == xv {
                    hit = true;
                    acc ^= match *next {
                        Source::Register(s) => s.get(i),
                        Source::Classical(v) => v,
                    };
                }
            }
            if !hit {
                acc = h.get(xv);
            }
            y.set(i, y.get(i) ^ acc)
        })
    }

    /// `U_h` assembled literally as `(prod_{i,j} U_i^j) U^≠` with
    /// `U_i^j = P^=_{X Gamma_i^j} (CNOT_{Gamma_i^{j+1}:Y} - 1) + 1` and
    /// `U^≠ = P^≠_{X Gamma} (U' - 1) + 1`.
    pub fn query_unitary_factored(&self) -> Result<Vec<Op>> {
        let dim = self.dim();
        let x = self.slot("X")?;
        let y = self.slot("Y")?;
        let mut factors = Vec::new();
        for chain in &self.chains {
            for j in 0..chain.regs.len() {
                let eq = ops::equality_projector(dim, x, chain.regs[j], true);
                let add = match chain.element(j + 1) {
                    Source::Register(s) => ops::cnot(dim, s, y)?,
                    Source::Classical(v) => ops::xor_constant(dim, y, v)?,
                };
                factors.push(controlled_difference(eq, add)?);
            }
        }
        let regs = self.chain_slots();
        let none_equal = ops::basis_projector(dim, "P!=_XGamma", move |i| {
            regs.iter().all(|r| r.get(i) != x.get(i))
        });
        let h = self.h.clone();
        let plain = ops::involution(dim, "U'", move |i| y.set(i, y.get(i) ^ h.get(x.get(i))))?;
        factors.push(controlled_difference(none_equal, plain)?);
        Ok(factors)
    }

    /// Blinded signing unitary: for `|m>` with `m` blinded the flag `B` is
    /// flipped (the encoding `0^n || 1`); otherwise every `Sigma_i` receives
    /// the chain element that signs position `i`.
    pub fn blinded_sign_unitary(&self) -> Result<Op> {
        let m_slot = self.slot("M")?;
        let flag = self.slot("B")?;
        let blocks: Vec<Slot> = (0..self.l).map(|i| self.sigma_block(i)).collect::<Result<_>>()?;
        let space = 1u64 << self.config.message_bits;
        let sources: Vec<Option<Vec<Source>>> = (0..space)
            .map(|m| {
                if self.blinding.contains(m) {
                    None
                } else {
                    Some((0..self.l).map(|i| self.relevant(i, m)).collect())
                }
            })
            .collect();
        ops::involution(self.dim(), "BSign", move |i| match &sources[m_slot.get(i) as usize] {
            None => flag.set(i, flag.get(i) ^ 1),
            Some(src) => {
                let mut out = i;
                for (block, s) in blocks.iter().zip(src) {
                    let v = match *s {
                        Source::Register(r) => r.get(i),
                        Source::Classical(c) => c,
                    };
                    out = block.set(out, block.get(out) ^ v);
                }
                out
            }
        })
    }

    fn phi_on(&self, source: Source, perp: bool) -> Op {
        match (source, perp) {
            (Source::Register(s), false) => phi(self.dim(), s),
            (Source::Register(s), true) => phi_perp(self.dim(), s),
            (Source::Classical(_), false) => zero(self.dim()),
            (Source::Classical(_), true) => identity(self.dim()),
        }
    }

    /// `Q_1^m, ..., Q_{l+1}^m`: outcome `k <= l` finds the first relevant
    /// element in `|Phi>` at position `k`; outcome `l+1` finds none.
    pub fn q_projectors(&self, m: u64) -> Result<Vec<Op>> {
        let relevant: Vec<Source> = (0..self.l).map(|i| self.relevant(i, m)).collect();
        let mut out = Vec::with_capacity(self.l + 1);
        for k in 0..=self.l {
            let mut factors: Vec<Op> = relevant[..k].iter().map(|&s| self.phi_on(s, true)).collect();
            if k < self.l {
                factors.push(self.phi_on(relevant[k], false));
            }
            out.push(ops::product(factors)?);
        }
        Ok(out)
    }

    /// `Q~_k = sum_m |m><m|_M (x) Q_k^m` for `k = 1..=l+1`.
    pub fn qtilde(&self) -> Result<Vec<Op>> {
        let m_slot = self.slot("M")?;
        let per_message: Vec<Vec<Op>> = (0..1u64 << self.config.message_bits)
            .map(|m| self.q_projectors(m))
            .collect::<Result<_>>()?;
        (0..=self.l)
            .map(|k| ops::register_blocks(m_slot, per_message.iter().map(|q| q[k].clone()).collect()))
            .collect()
    }

    /// Projector onto blinded messages on `M`.
    pub fn blinded_message_projector(&self) -> Result<Op> {
        let m_slot = self.slot("M")?;
        let blinding = self.blinding.clone();
        Ok(ops::basis_projector(self.dim(), "Pi^B", move |i| blinding.contains(m_slot.get(i))))
    }

    /// Invariant projector as the union of the per-message projectors
    /// `R_m = Phi` on [`Self::unused_slots`]`(m)` over unblinded `m`,
    /// computed as `1 - prod_m (1 - R_m)`. Zero when every message is
    /// blinded.
    pub fn invariant_projector(&self) -> Result<Op> {
        let dim = self.dim();
        let unblinded = self.blinding.unblinded();
        if unblinded.is_empty() {
            return Ok(zero(dim));
        }
        let complements = unblinded
            .iter()
            .map(|&m| ops::difference(identity(dim), ops::phi_all(dim, &self.unused_slots(m))))
            .collect::<Result<Vec<_>>>()?;
        ops::difference(identity(dim), ops::product(complements)?)
    }

    /// The same projector as an explicit sum of `Phi(alpha)` over every
    /// pattern `alpha` compatible with some unblinded message.
    pub fn invariant_projector_by_alpha(&self) -> Result<Op> {
        let dim = self.dim();
        let slots = self.chain_slots();
        let k = slots.len();
        if k > 16 {
            return Err(Error::SizeGuard(format!("2^{k} patterns")));
        }
        let required: Vec<u64> = self
            .blinding
            .unblinded()
            .iter()
            .map(|&m| {
                self.unused_slots(m)
                    .iter()
                    .fold(0u64, |acc, &s| acc | 1 << self.alpha_position(s))
            })
            .collect();
        // pattern bit p set means Phi_perp on chain register p
        let patterns: BTreeSet<u64> = (0..1u64 << k)
            .filter(|alpha| required.iter().any(|r| alpha & r == 0))
            .collect();
        if patterns.is_empty() {
            return Ok(zero(dim));
        }
        let terms = patterns
            .iter()
            .map(|&alpha| {
                let factors = slots
                    .iter()
                    .enumerate()
                    .map(|(p, &s)| if alpha >> p & 1 == 1 { phi_perp(dim, s) } else { phi(dim, s) })
                    .collect();
                Ok((ONE, ops::product(factors)?))
            })
            .collect::<Result<Vec<(C64, Op)>>>()?;
        ops::combination(terms)
    }

    /// Chain registers in `|Phi>`, every other register in `|0>`.
    pub fn initial_state(&self) -> Result<StateVector> {
        let chain_names: Vec<String> = self
            .layout
            .registers()
            .iter()
            .filter(|r| r.name.starts_with('S') && r.name != "Sigma" || r.name.starts_with('G'))
            .map(|r| r.name.clone())
            .collect();
        let uniform: Vec<&str> = chain_names.iter().map(String::as_str).collect();
        let assigned: Vec<(&str, u64)> = self
            .layout
            .registers()
            .iter()
            .filter(|r| !chain_names.contains(&r.name))
            .map(|r| (r.name.as_str(), 0))
            .collect();
        uniform_state(self.layout.clone(), &uniform, &assigned)
    }

    /// Full chains (including the classical ends) for the chain register
    /// contents of basis index `index`.
    pub fn chains_at(&self, index: usize) -> ChainTuple {
        ChainTuple {
            n: self.config.n,
            gamma: self
                .chains
                .iter()
                .map(|c| {
                    let mut v: Vec<u64> = c.regs.iter().map(|s| s.get(index)).collect();
                    v.push(c.end);
                    v
                })
                .collect(),
        }
    }

    /// The classical function realized by `U_h` once the chain registers
    /// hold `chains`.
    pub fn classical_oracle(&self, chains: ChainTuple) -> Result<ReprogrammedOracle<FixedFunction>> {
        ReprogrammedOracle::new(self.h.clone(), chains, Reprogramming::XorAll)
    }

    /// Verification of `(m, sigma)` against the chains, hashing with the
    /// classical oracle of those chains.
    pub fn verify(&self, m: u64, sigma: &[u64], chains: &ChainTuple) -> bool {
        let digits = self.digits(m);
        let mut oracle = match self.classical_oracle(chains.clone()) {
            Ok(o) => o,
            Err(_) => return false,
        };
        let top = self.config.w - 1;
        sigma.iter().enumerate().all(|(i, &s)| {
            let (chain, from) = match self.config.scheme {
                Scheme::Lamport => (2 * i + digits[i] as usize, 0),
                Scheme::Winternitz => (i, digits[i]),
            };
            let mut v = s;
            for _ in from..top {
                v = oracle.eval(v);
            }
            v == chains.gamma[chain][top as usize]
        })
    }

    /// Hash of `x` under the function realized by `U_h` when the chain
    /// registers hold the contents of basis index `index`.
    pub fn hash_at(&self, index: usize, x: u64) -> u64 {
        let mut acc = 0u64;
        let mut hit = false;
        for chain in &self.chains {
            for (j, reg) in chain.regs.iter().enumerate() {
                if reg.get(index) == x {
                    hit = true;
                    acc ^= match chain.element(j + 1) {
                        Source::Register(s) => s.get(index),
                        Source::Classical(v) => v,
                    };
                }
            }
        }
        if hit {
            acc
        } else {
            self.h.get(x)
        }
    }

    /// Winning predicate on basis indices of the game layout: `M` is
    /// blinded and `Sigma` verifies against the chains held in the index.
    pub fn win_predicate(&self) -> Result<impl Fn(usize) -> bool + '_> {
        let m_slot = self.slot("M")?;
        let blocks: Vec<Slot> = (0..self.l).map(|i| self.sigma_block(i)).collect::<Result<_>>()?;
        let targets: Vec<Option<Vec<(usize, u32)>>> = (0..1u64 << self.config.message_bits)
            .map(|m| {
                self.blinding.contains(m).then(|| {
                    self.digits(m)
                        .iter()
                        .enumerate()
                        .map(|(i, &d)| match self.config.scheme {
                            Scheme::Lamport => (2 * i + d as usize, 0),
                            Scheme::Winternitz => (i, d),
                        })
                        .collect()
                })
            })
            .collect();
        let top = self.config.w - 1;
        Ok(move |index: usize| {
            let Some(target) = &targets[m_slot.get(index) as usize] else {
                return false;
            };
            target.iter().zip(&blocks).all(|(&(chain, from), block)| {
                let mut v = block.get(index);
                for _ in from..top {
                    v = self.hash_at(index, v);
                }
                v == self.chains[chain].end
            })
        })
    }

    pub fn descriptor(&self) -> WorldDescriptor {
        WorldDescriptor {
            scheme: self.config.scheme,
            n: self.config.n,
            l: self.l,
            w: self.config.w,
            seed: self.config.seed,
            blinding_set: self.blinding.blinded(),
            p: self
                .chains
                .iter()
                .map(|c| BitString::new(c.end, self.config.n).expect("end width").to_hex())
                .collect(),
        }
    }
}

/// `P (A - 1) + 1` for a projector `P` and operator `A`.
fn controlled_difference(p: Op, a: Op) -> Result<Op> {
    let dim = p.dim();
    let pa = ops::product(vec![p.clone(), a])?;
    ops::combination(vec![(ONE, identity(dim)), (ONE, pa), (-ONE, p)])
}
