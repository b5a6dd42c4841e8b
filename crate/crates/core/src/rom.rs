//! Random oracles for the classical worlds: a lazily sampled table, fixed
//! functions, chain-reprogrammed overlays, and exact enumeration of the hash
//! chain distributions.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::bits::{mask, BitString};
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, LabRng};

/// A function `{0,1}^n -> {0,1}^n`, evaluated on raw values.
pub trait HashOracle {
    fn n(&self) -> u32;

    fn eval(&mut self, x: u64) -> u64;

    fn query(&mut self, x: &BitString) -> Result<BitString> {
        if x.width() != self.n() {
            return Err(Error::LengthMismatch {
                what: "oracle input bits",
                expected: self.n() as usize,
                got: x.width() as usize,
            });
        }
        BitString::new(self.eval(x.value()), self.n())
    }
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 || n > 64 {
        return Err(Error::InvalidParameter(format!("n = {n} must be in 1..=64")));
    }
    Ok(())
}

/// Lazily sampled uniform function. Images are drawn on first query and
/// fixed afterwards.
#[derive(Debug, Clone)]
pub struct RandomOracleTable {
    n: u32,
    table: HashMap<u64, u64>,
    rng: LabRng,
}

impl RandomOracleTable {
    pub fn new(n: u32, seed: u64) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            n,
            table: HashMap::new(),
            rng: rng_from_seed(seed),
        })
    }

    pub fn queried(&self) -> usize {
        self.table.len()
    }

    /// The full function table in input order. Inputs not yet queried are
    /// sampled in ascending order.
    pub fn materialize(&mut self) -> Result<FixedFunction> {
        if self.n > 20 {
            return Err(Error::SizeGuard(format!("cannot tabulate a {}-bit function", self.n)));
        }
        let table = (0..1u64 << self.n).map(|x| self.eval(x)).collect();
        FixedFunction::from_table(self.n, table)
    }
}

impl HashOracle for RandomOracleTable {
    fn n(&self) -> u32 {
        self.n
    }

    fn eval(&mut self, x: u64) -> u64 {
        let x = x & mask(self.n);
        let n = self.n;
        let rng = &mut self.rng;
        *self
            .table
            .entry(x)
            .or_insert_with(|| rng.random::<u64>() & mask(n))
    }
}

/// A fully tabulated function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedFunction {
    n: u32,
    table: Vec<u64>,
}

impl FixedFunction {
    pub fn from_table(n: u32, table: Vec<u64>) -> Result<Self> {
        check_n(n)?;
        if n > 20 || table.len() != 1usize << n {
            return Err(Error::LengthMismatch {
                what: "function table entries",
                expected: if n > 20 { 0 } else { 1usize << n },
                got: table.len(),
            });
        }
        if let Some(&v) = table.iter().find(|&&v| v & !mask(n) != 0) {
            return Err(Error::WidthMismatch { value: v, width: n });
        }
        Ok(Self { n, table })
    }

    pub fn uniform(n: u32, rng: &mut impl Rng) -> Result<Self> {
        check_n(n)?;
        if n > 20 {
            return Err(Error::SizeGuard(format!("cannot tabulate a {n}-bit function")));
        }
        let table = (0..1u64 << n).map(|_| rng.random::<u64>() & mask(n)).collect();
        Self::from_table(n, table)
    }

    pub fn get(&self, x: u64) -> u64 {
        self.table[x as usize]
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }
}

impl HashOracle for FixedFunction {
    fn n(&self) -> u32 {
        self.n
    }

    fn eval(&mut self, x: u64) -> u64 {
        self.get(x)
    }
}

/// SHA-256 truncated to its leading `n` bits; the input is the 8-byte
/// big-endian encoding of the value.
#[derive(Debug, Clone, Copy)]
pub struct Sha256Oracle {
    n: u32,
}

impl Sha256Oracle {
    pub fn new(n: u32) -> Result<Self> {
        check_n(n)?;
        Ok(Self { n })
    }
}

impl HashOracle for Sha256Oracle {
    fn n(&self) -> u32 {
        self.n
    }

    fn eval(&mut self, x: u64) -> u64 {
        let digest = Sha256::digest(x.to_be_bytes());
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        let v = u64::from_be_bytes(head);
        if self.n == 64 {
            v
        } else {
            v >> (64 - self.n)
        }
    }
}

/// `l` hash chains of length `w`; `gamma[i][j]` is element `j` of chain `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainTuple {
    pub n: u32,
    pub gamma: Vec<Vec<u64>>,
}

impl ChainTuple {
    pub fn l(&self) -> usize {
        self.gamma.len()
    }

    pub fn w(&self) -> usize {
        self.gamma.first().map_or(0, Vec::len)
    }

    /// End points, i.e. the public key.
    pub fn ends(&self) -> Vec<u64> {
        self.gamma.iter().map(|c| *c.last().expect("non-empty chain")).collect()
    }

    pub fn has_collision(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.gamma.iter().flatten().any(|v| !seen.insert(*v))
    }

    /// Packs the tuple into an index: cells in order `(i, j)` with `i`
    /// outer, the first cell most significant, `n` bits each.
    pub fn pack(&self) -> u64 {
        self.gamma
            .iter()
            .flatten()
            .fold(0u64, |acc, &v| (acc << self.n) | v)
    }

    pub fn unpack(index: u64, n: u32, l: usize, w: usize) -> Self {
        let mut cells = vec![0u64; l * w];
        let mut rest = index;
        for c in cells.iter_mut().rev() {
            *c = rest & mask(n);
            rest >>= n;
        }
        Self {
            n,
            gamma: cells.chunks(w).map(<[u64]>::to_vec).collect(),
        }
    }

    pub fn to_hex(&self) -> String {
        self.gamma
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&v| BitString::new(v, self.n).expect("cell width").to_hex())
                    .collect::<Vec<_>>()
                    .join(".")
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

fn check_chain_shape(n: u32, l: usize, w: usize) -> Result<()> {
    check_n(n)?;
    if l == 0 || w < 2 {
        return Err(Error::InvalidParameter(format!(
            "need l >= 1 and w >= 2 (got l = {l}, w = {w})"
        )));
    }
    Ok(())
}

/// Real-world chains: uniform starts, then repeated hashing.
pub fn sample_real_chains(
    n: u32,
    l: usize,
    w: usize,
    oracle: &mut dyn HashOracle,
    rng: &mut impl Rng,
) -> Result<ChainTuple> {
    check_chain_shape(n, l, w)?;
    if oracle.n() != n {
        return Err(Error::InvalidParameter("oracle width differs from n".into()));
    }
    let gamma = (0..l)
        .map(|_| {
            let mut chain = vec![rng.random::<u64>() & mask(n)];
            for j in 1..w {
                let next = oracle.eval(chain[j - 1]);
                chain.push(next);
            }
            chain
        })
        .collect();
    Ok(ChainTuple { n, gamma })
}

/// Independent-world chains: every cell i.i.d. uniform.
pub fn sample_independent_chains(
    n: u32,
    l: usize,
    w: usize,
    rng: &mut impl Rng,
) -> Result<ChainTuple> {
    check_chain_shape(n, l, w)?;
    let gamma = (0..l)
        .map(|_| (0..w).map(|_| rng.random::<u64>() & mask(n)).collect())
        .collect();
    Ok(ChainTuple { n, gamma })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reprogramming {
    /// `H(gamma_i^j) = gamma_i^{j+1}`, first match in `(i, j)` order.
    FirstMatch,
    /// `H(x)` is the XOR of the successors of every matching cell.
    XorAll,
}

/// A base oracle overlaid with the chain relations for `j <= w - 2`.
#[derive(Debug, Clone)]
pub struct ReprogrammedOracle<O> {
    pub base: O,
    pub chains: ChainTuple,
    pub mode: Reprogramming,
}

impl<O: HashOracle> ReprogrammedOracle<O> {
    pub fn new(base: O, chains: ChainTuple, mode: Reprogramming) -> Result<Self> {
        if base.n() != chains.n {
            return Err(Error::InvalidParameter("oracle width differs from chain width".into()));
        }
        Ok(Self { base, chains, mode })
    }

    /// The overlay value at `x`, or `None` when `x` is on no chain prefix.
    pub fn overlay(&self, x: u64) -> Option<u64> {
        let mut hit = None;
        for chain in &self.chains.gamma {
            for pair in chain.windows(2) {
                if pair[0] == x {
                    match self.mode {
                        Reprogramming::FirstMatch => return Some(pair[1]),
                        Reprogramming::XorAll => hit = Some(hit.unwrap_or(0) ^ pair[1]),
                    }
                }
            }
        }
        hit
    }
}

impl<O: HashOracle> HashOracle for ReprogrammedOracle<O> {
    fn n(&self) -> u32 {
        self.chains.n
    }

    fn eval(&mut self, x: u64) -> u64 {
        match self.overlay(x) {
            Some(v) => v,
            None => self.base.eval(x),
        }
    }
}

/// Largest `n * l * w` accepted by the exact enumerations.
pub const ENUMERATION_LIMIT: u32 = 16;

/// Exact chain distributions over packed tuples (see [`ChainTuple::pack`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDistributions {
    pub n: u32,
    pub l: usize,
    pub w: usize,
    /// Chains of a uniformly random function from uniform starts.
    pub p: Vec<f64>,
    /// Independent uniform cells.
    pub q: Vec<f64>,
}

/// Enumerates `p` by lazily conditioning a uniform function along the chains
/// and `q` as the uniform distribution.
pub fn enumerate_chain_distributions(n: u32, l: usize, w: usize) -> Result<ChainDistributions> {
    check_chain_shape(n, l, w)?;
    let bits = n as usize * l * w;
    if bits > ENUMERATION_LIMIT as usize {
        return Err(Error::SizeGuard(format!(
            "n*l*w = {bits} exceeds {ENUMERATION_LIMIT}"
        )));
    }
    let size = 1usize << bits;
    let mut p = vec![0.0; size];
    let mut assigned = HashMap::new();
    let mut cells = Vec::with_capacity(l * w);
    let weight = 1.0 / (1u64 << n) as f64;
    #[allow(clippy::too_many_arguments)]
    fn walk(
        n: u32,
        w: usize,
        total: usize,
        weight: f64,
        prob: f64,
        cells: &mut Vec<u64>,
        assigned: &mut HashMap<u64, u64>,
        p: &mut [f64],
    ) {
        let k = cells.len();
        if k == total {
            let index = cells.iter().fold(0usize, |acc, &v| (acc << n) | v as usize);
            p[index] += prob;
            return;
        }
        if k.is_multiple_of(w) {
            for v in 0..1u64 << n {
                cells.push(v);
                walk(n, w, total, weight, prob * weight, cells, assigned, p);
                cells.pop();
            }
            return;
        }
        let prev = cells[k - 1];
        if let Some(&v) = assigned.get(&prev) {
            cells.push(v);
            walk(n, w, total, weight, prob, cells, assigned, p);
            cells.pop();
        } else {
            for v in 0..1u64 << n {
                assigned.insert(prev, v);
                cells.push(v);
                walk(n, w, total, weight, prob * weight, cells, assigned, p);
                cells.pop();
            }
            assigned.remove(&prev);
        }
    }
    walk(n, w, l * w, weight, 1.0, &mut cells, &mut assigned, &mut p);
    let q = vec![1.0 / size as f64; size];
    Ok(ChainDistributions { n, l, w, p, q })
}

impl ChainDistributions {
    pub fn is_collision(&self, index: usize) -> bool {
        ChainTuple::unpack(index as u64, self.n, self.l, self.w).has_collision()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["tuple", "p", "q"])?;
        for (index, (p, q)) in self.p.iter().zip(&self.q).enumerate() {
            let tuple = ChainTuple::unpack(index as u64, self.n, self.l, self.w);
            writer.write_record([tuple.to_hex(), format!("{p:e}"), format!("{q:e}")])?;
        }
        writer.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvReport {
    /// `sum |p - q|`.
    pub tv: f64,
    pub p_collision: f64,
    pub q_collision: f64,
    /// `3 (wl)^2 / 2^n`.
    pub bound: f64,
    /// `(wl)^2 / 2^n`.
    pub collision_bound: f64,
    /// `p` and `q` agree bit for bit on every collision-free tuple.
    pub equal_off_collisions: bool,
}

impl TvReport {
    pub fn passes(&self) -> bool {
        self.equal_off_collisions
            && self.tv <= self.bound + 1e-12
            && self.p_collision.max(self.q_collision) <= self.collision_bound + 1e-12
    }
}

pub fn tv_bound(n: u32, l: usize, w: usize) -> f64 {
    3.0 * ((w * l) as f64).powi(2) / 2f64.powi(n as i32)
}

pub fn tv_and_collision_stats(d: &ChainDistributions) -> Result<TvReport> {
    if d.p.len() != d.q.len() {
        return Err(Error::SupportMismatch);
    }
    let mut tv = 0.0;
    let mut p_collision = 0.0;
    let mut q_collision = 0.0;
    let mut equal_off_collisions = true;
    for (index, (&p, &q)) in d.p.iter().zip(&d.q).enumerate() {
        tv += (p - q).abs();
        if d.is_collision(index) {
            p_collision += p;
            q_collision += q;
        } else if p != q {
            equal_off_collisions = false;
        }
    }
    let wl = (d.w * d.l) as f64;
    Ok(TvReport {
        tv,
        p_collision,
        q_collision,
        bound: tv_bound(d.n, d.l, d.w),
        collision_bound: wl * wl / 2f64.powi(d.n as i32),
        equal_off_collisions,
    })
}

/// Which classical world generates the chains and the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalWorld {
    /// Uniform starts hashed with one lazily sampled function.
    Real,
    /// Chains sampled cell by cell under collision consistency, then a fresh
    /// function reprogrammed onto them.
    Intermediate1,
}

/// Exact distribution of the transcript `(public key, answers to queries)`
/// for a fixed list of classical queries. Keys of the map are the transcript
/// values in order.
pub fn transcript_distribution(
    world: ClassicalWorld,
    n: u32,
    l: usize,
    w: usize,
    queries: &[u64],
) -> Result<BTreeMap<Vec<u64>, f64>> {
    check_chain_shape(n, l, w)?;
    let free_cells = n as usize * (l * w + queries.len());
    if n > 3 || free_cells > 24 {
        return Err(Error::SizeGuard("transcript enumeration needs n <= 3 and few queries".into()));
    }
    let mut out = BTreeMap::new();
    let mut state = TranscriptWalk {
        n,
        l,
        w,
        queries,
        world,
        out: &mut out,
        chain: Vec::new(),
        relation: HashMap::new(),
        fresh: HashMap::new(),
        answers: Vec::new(),
    };
    state.chains(1.0);
    Ok(out)
}

struct TranscriptWalk<'a> {
    n: u32,
    l: usize,
    w: usize,
    queries: &'a [u64],
    world: ClassicalWorld,
    out: &'a mut BTreeMap<Vec<u64>, f64>,
    chain: Vec<u64>,
    // values of the function generating the chains
    relation: HashMap<u64, u64>,
    // fresh function used off-chain in the intermediate world
    fresh: HashMap<u64, u64>,
    answers: Vec<u64>,
}

impl TranscriptWalk<'_> {
    fn uniform(&self) -> (std::ops::Range<u64>, f64) {
        (0..1u64 << self.n, 1.0 / (1u64 << self.n) as f64)
    }

    fn chains(&mut self, prob: f64) {
        let k = self.chain.len();
        if k == self.l * self.w {
            self.answer(prob);
            return;
        }
        let (range, weight) = self.uniform();
        if k.is_multiple_of(self.w) {
            for v in range {
                self.chain.push(v);
                self.chains(prob * weight);
                self.chain.pop();
            }
            return;
        }
        let prev = self.chain[k - 1];
        if let Some(&v) = self.relation.get(&prev) {
            self.chain.push(v);
            self.chains(prob);
            self.chain.pop();
        } else {
            for v in range {
                self.relation.insert(prev, v);
                self.chain.push(v);
                self.chains(prob * weight);
                self.chain.pop();
            }
            self.relation.remove(&prev);
        }
    }

    fn on_chain_prefix(&self, x: u64) -> Option<u64> {
        self.chain
            .chunks(self.w)
            .flat_map(|c| c.windows(2))
            .find(|pair| pair[0] == x)
            .map(|pair| pair[1])
    }

    fn answer(&mut self, prob: f64) {
        let k = self.answers.len();
        if k == self.queries.len() {
            let mut key: Vec<u64> = self.chain.chunks(self.w).map(|c| c[self.w - 1]).collect();
            key.extend(&self.answers);
            *self.out.entry(key).or_insert(0.0) += prob;
            return;
        }
        let x = self.queries[k];
        let known = match self.world {
            ClassicalWorld::Real => self.relation.get(&x).copied(),
            ClassicalWorld::Intermediate1 => self
                .on_chain_prefix(x)
                .or_else(|| self.fresh.get(&x).copied()),
        };
        if let Some(v) = known {
            self.answers.push(v);
            self.answer(prob);
            self.answers.pop();
            return;
        }
        let (range, weight) = self.uniform();
        for v in range {
            match self.world {
                ClassicalWorld::Real => self.relation.insert(x, v),
                ClassicalWorld::Intermediate1 => self.fresh.insert(x, v),
            };
            self.answers.push(v);
            self.answer(prob * weight);
            self.answers.pop();
        }
        match self.world {
            ClassicalWorld::Real => self.relation.remove(&x),
            ClassicalWorld::Intermediate1 => self.fresh.remove(&x),
        };
    }
}
