//! Matrix-free linear maps and the combinators used to assemble them.

use std::sync::Arc;

use num_complex::Complex64;

use super::layout::{Slot, MAX_STATE_QUBITS};
use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A linear operator on `C^dim` given by its action on vectors.
pub trait LinearMap: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    /// Writes `A * input` into `out`; `out` may hold garbage on entry.
    fn apply_to(&self, input: &[C64], out: &mut [C64]);

    /// Writes `A^dagger * input` into `out`.
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]);
}

pub type Op = Arc<dyn LinearMap>;

impl dyn LinearMap {
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        self.apply_to(v, &mut out);
        out
    }

    pub fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        self.adjoint_to(v, &mut out);
        out
    }
}

fn same_dim(ops: &[&Op]) -> Result<usize> {
    let dim = ops[0].dim();
    if let Some(bad) = ops.iter().find(|o| o.dim() != dim) {
        return Err(Error::Dimension(format!(
            "`{}` has dimension {} but `{}` has {}",
            bad.label(),
            bad.dim(),
            ops[0].label(),
            dim
        )));
    }
    Ok(dim)
}

struct Identity(usize);

impl LinearMap for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn label(&self) -> String {
        "1".into()
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        out.copy_from_slice(input);
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        out.copy_from_slice(input);
    }
}

pub fn identity(dim: usize) -> Op {
    Arc::new(Identity(dim))
}

struct Zero(usize);

impl LinearMap for Zero {
    fn dim(&self) -> usize {
        self.0
    }
    fn label(&self) -> String {
        "0".into()
    }
    fn apply_to(&self, _: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
    }
    fn adjoint_to(&self, _: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
    }
}

pub fn zero(dim: usize) -> Op {
    Arc::new(Zero(dim))
}

/// A permutation of basis states, `|i> -> |f(i)>`, stored as index tables.
pub struct BasisMap {
    dim: usize,
    forward: Arc<Vec<u32>>,
    inverse: Arc<Vec<u32>>,
    label: String,
}

impl LinearMap for BasisMap {
    fn dim(&self) -> usize {
        self.dim
    }
    fn label(&self) -> String {
        self.label.clone()
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        for (&a, &j) in input.iter().zip(self.forward.iter()) {
            out[j as usize] = a;
        }
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        for (&a, &j) in input.iter().zip(self.inverse.iter()) {
            out[j as usize] = a;
        }
    }
}

fn index_table(dim: usize, label: &str, f: impl Fn(usize) -> usize) -> Result<Vec<u32>> {
    if dim > 1usize << MAX_STATE_QUBITS {
        return Err(Error::SizeGuard(format!("`{label}` on dimension {dim}")));
    }
    (0..dim)
        .map(|i| {
            let j = f(i);
            if j >= dim {
                return Err(Error::Dimension(format!("`{label}` maps {i} out of range")));
            }
            Ok(j as u32)
        })
        .collect()
}

/// Builds a basis permutation, checking that `inverse` undoes `forward` on
/// every index.
pub fn basis_map(
    dim: usize,
    label: impl Into<String>,
    forward: impl Fn(usize) -> usize,
    inverse: impl Fn(usize) -> usize,
) -> Result<Op> {
    let label = label.into();
    let fwd = index_table(dim, &label, forward)?;
    let inv = index_table(dim, &label, inverse)?;
    for (i, &j) in fwd.iter().enumerate() {
        if inv[j as usize] as usize != i {
            return Err(Error::Dimension(format!("`{label}` is not a permutation at {i}")));
        }
    }
    Ok(Arc::new(BasisMap {
        dim,
        forward: Arc::new(fwd),
        inverse: Arc::new(inv),
        label,
    }))
}

/// A basis permutation that is its own inverse.
pub fn involution(dim: usize, label: impl Into<String>, f: impl Fn(usize) -> usize) -> Result<Op> {
    let label = label.into();
    let table = index_table(dim, &label, f)?;
    for (i, &j) in table.iter().enumerate() {
        if table[j as usize] as usize != i {
            return Err(Error::Dimension(format!("`{label}` is not an involution at {i}")));
        }
    }
    let table = Arc::new(table);
    Ok(Arc::new(BasisMap {
        dim,
        forward: table.clone(),
        inverse: table,
        label,
    }))
}

/// `|..c..t..> -> |..c..(t xor c)..>` for equally sized registers.
pub fn cnot(dim: usize, control: Slot, target: Slot) -> Result<Op> {
    if control.bits != target.bits || control.shift == target.shift {
        return Err(Error::Dimension("CNOT needs two distinct registers of equal size".into()));
    }
    involution(dim, "CNOT", move |i| target.set(i, target.get(i) ^ control.get(i)))
}

/// Adds a classical constant into a register.
pub fn xor_constant(dim: usize, target: Slot, value: u64) -> Result<Op> {
    involution(dim, format!("X^{value:#x}"), move |i| target.set(i, target.get(i) ^ value))
}

/// Diagonal operator in the computational basis.
pub struct Diagonal {
    dim: usize,
    entry: Arc<dyn Fn(usize) -> C64 + Send + Sync>,
    label: String,
}

impl LinearMap for Diagonal {
    fn dim(&self) -> usize {
        self.dim
    }
    fn label(&self) -> String {
        self.label.clone()
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        for (i, (o, &a)) in out.iter_mut().zip(input).enumerate() {
            *o = (self.entry)(i) * a;
        }
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        for (i, (o, &a)) in out.iter_mut().zip(input).enumerate() {
            *o = (self.entry)(i).conj() * a;
        }
    }
}

pub fn diagonal(
    dim: usize,
    label: impl Into<String>,
    entry: impl Fn(usize) -> C64 + Send + Sync + 'static,
) -> Op {
    Arc::new(Diagonal {
        dim,
        entry: Arc::new(entry),
        label: label.into(),
    })
}

/// Projector onto basis states satisfying `keep`.
pub fn basis_projector(
    dim: usize,
    label: impl Into<String>,
    keep: impl Fn(usize) -> bool + Send + Sync + 'static,
) -> Op {
    diagonal(dim, label, move |i| if keep(i) { ONE } else { ZERO })
}

/// `P^=` (or `P^≠` when `equal` is false) comparing two registers.
pub fn equality_projector(dim: usize, a: Slot, b: Slot, equal: bool) -> Op {
    let label = if equal { "P=" } else { "P!=" };
    basis_projector(dim, label, move |i| (a.get(i) == b.get(i)) == equal)
}

/// Projector onto `|Phi>` (uniform superposition) of one register, or onto
/// its orthogonal complement.
struct PhiProjector {
    dim: usize,
    slot: Slot,
    perp: bool,
}

impl LinearMap for PhiProjector {
    fn dim(&self) -> usize {
        self.dim
    }
    fn label(&self) -> String {
        if self.perp { "Phi_perp" } else { "Phi" }.into()
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        let size = self.slot.size();
        let scale = 1.0 / size as f64;
        for base in (0..self.dim).filter(|&i| self.slot.get(i) == 0) {
            let mut mean = ZERO;
            for v in 0..size {
                mean += input[self.slot.set(base, v as u64)];
            }
            mean *= scale;
            for v in 0..size {
                let i = self.slot.set(base, v as u64);
                out[i] = if self.perp { input[i] - mean } else { mean };
            }
        }
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        self.apply_to(input, out);
    }
}

pub fn phi(dim: usize, slot: Slot) -> Op {
    Arc::new(PhiProjector { dim, slot, perp: false })
}

pub fn phi_perp(dim: usize, slot: Slot) -> Op {
    Arc::new(PhiProjector { dim, slot, perp: true })
}

/// `Phi` on every listed register; the identity for an empty list.
pub fn phi_all(dim: usize, slots: &[Slot]) -> Op {
    if slots.is_empty() {
        return identity(dim);
    }
    product(slots.iter().map(|&s| phi(dim, s)).collect()).expect("equal dimensions")
}

/// `A_1 A_2 ... A_k`; the last factor acts first.
struct Product {
    factors: Vec<Op>,
}

impl LinearMap for Product {
    fn dim(&self) -> usize {
        self.factors[0].dim()
    }
    fn label(&self) -> String {
        self.factors.iter().map(|f| f.label()).collect::<Vec<_>>().join("*")
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        let mut current = input.to_vec();
        let mut next = vec![ZERO; input.len()];
        for f in self.factors.iter().rev() {
            f.apply_to(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        out.copy_from_slice(&current);
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        let mut current = input.to_vec();
        let mut next = vec![ZERO; input.len()];
        for f in &self.factors {
            f.adjoint_to(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        out.copy_from_slice(&current);
    }
}

pub fn product(factors: Vec<Op>) -> Result<Op> {
    if factors.is_empty() {
        return Err(Error::Dimension("empty product".into()));
    }
    if factors.len() == 1 {
        return Ok(factors[0].clone());
    }
    same_dim(&factors.iter().collect::<Vec<_>>())?;
    Ok(Arc::new(Product { factors }))
}

/// `sum_k c_k A_k`.
struct Combination {
    terms: Vec<(C64, Op)>,
}

impl LinearMap for Combination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn label(&self) -> String {
        self.terms
            .iter()
            .map(|(c, a)| format!("({c})*{}", a.label()))
            .collect::<Vec<_>>()
            .join(" + ")
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        let mut tmp = vec![ZERO; input.len()];
        for (c, a) in &self.terms {
            a.apply_to(input, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += c * t;
            }
        }
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        let mut tmp = vec![ZERO; input.len()];
        for (c, a) in &self.terms {
            a.adjoint_to(input, &mut tmp);
            let c = c.conj();
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += c * t;
            }
        }
    }
}

pub fn combination(terms: Vec<(C64, Op)>) -> Result<Op> {
    if terms.is_empty() {
        return Err(Error::Dimension("empty linear combination".into()));
    }
    same_dim(&terms.iter().map(|(_, a)| a).collect::<Vec<_>>())?;
    Ok(Arc::new(Combination { terms }))
}

pub fn difference(a: Op, b: Op) -> Result<Op> {
    combination(vec![(ONE, a), (-ONE, b)])
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: Op, b: Op) -> Result<Op> {
    same_dim(&[&a, &b])?;
    let ab = product(vec![a.clone(), b.clone()])?;
    let ba = product(vec![b, a])?;
    difference(ab, ba)
}

struct Adjoint(Op);

impl LinearMap for Adjoint {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn label(&self) -> String {
        format!("({})^+", self.0.label())
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        self.0.adjoint_to(input, out);
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        self.0.apply_to(input, out);
    }
}

pub fn adjoint(a: Op) -> Op {
    Arc::new(Adjoint(a))
}

/// A local operator acting on the concatenation of `slots` (first slot most
/// significant), identity elsewhere.
struct Embedded {
    dim: usize,
    inner: Op,
    bases: Vec<usize>,
    offsets: Vec<usize>,
}

impl Embedded {
    fn run(&self, input: &[C64], out: &mut [C64], adjoint: bool) {
        let k = self.offsets.len();
        let mut local_in = vec![ZERO; k];
        let mut local_out = vec![ZERO; k];
        for &base in &self.bases {
            for (slot, &off) in local_in.iter_mut().zip(&self.offsets) {
                *slot = input[base | off];
            }
            if adjoint {
                self.inner.adjoint_to(&local_in, &mut local_out);
            } else {
                self.inner.apply_to(&local_in, &mut local_out);
            }
            for (&v, &off) in local_out.iter().zip(&self.offsets) {
                out[base | off] = v;
            }
        }
    }
}

impl LinearMap for Embedded {
    fn dim(&self) -> usize {
        self.dim
    }
    fn label(&self) -> String {
        format!("embed({})", self.inner.label())
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        self.run(input, out, false);
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        self.run(input, out, true);
    }
}

pub fn embed(inner: Op, slots: &[Slot], dim: usize) -> Result<Op> {
    let local_bits: u32 = slots.iter().map(|s| s.bits).sum();
    if inner.dim() != 1usize << local_bits {
        return Err(Error::Dimension(format!(
            "local operator `{}` has dimension {} but the targets span {} qubits",
            inner.label(),
            inner.dim(),
            local_bits
        )));
    }
    let mut occupied = 0usize;
    for s in slots {
        let m = (s.size() - 1) << s.shift;
        if occupied & m != 0 || m >= dim.max(1) {
            return Err(Error::Dimension("overlapping or out-of-range target registers".into()));
        }
        occupied |= m;
    }
    let offsets = (0..inner.dim())
        .map(|local| {
            let mut rest = local as u64;
            let mut index = 0usize;
            for s in slots.iter().rev() {
                index = s.set(index, rest);
                rest >>= s.bits;
            }
            index
        })
        .collect();
    let bases = (0..dim).filter(|i| i & occupied == 0).collect();
    Ok(Arc::new(Embedded {
        dim,
        inner,
        bases,
        offsets,
    }))
}

/// `sum_v |v><v|_R (x) A_v` where the blocks `A_v` act on the full space but
/// are restricted to the sector where register `R` holds `v`.
struct RegisterBlocks {
    slot: Slot,
    blocks: Vec<Op>,
}

impl RegisterBlocks {
    fn run(&self, input: &[C64], out: &mut [C64], adjoint: bool) {
        out.fill(ZERO);
        let mut sector = vec![ZERO; input.len()];
        let mut mapped = vec![ZERO; input.len()];
        for (v, block) in self.blocks.iter().enumerate() {
            for (i, (s, &a)) in sector.iter_mut().zip(input).enumerate() {
                *s = if self.slot.get(i) == v as u64 { a } else { ZERO };
            }
            if adjoint {
                block.adjoint_to(&sector, &mut mapped);
            } else {
                block.apply_to(&sector, &mut mapped);
            }
            for (i, (o, &a)) in out.iter_mut().zip(&mapped).enumerate() {
                if self.slot.get(i) == v as u64 {
                    *o += a;
                }
            }
        }
    }
}

impl LinearMap for RegisterBlocks {
    fn dim(&self) -> usize {
        self.blocks[0].dim()
    }
    fn label(&self) -> String {
        format!("blocks[{}]", self.blocks.len())
    }
    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        self.run(input, out, false);
    }
    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        self.run(input, out, true);
    }
}

/// Block-diagonal operator controlled on a register value; `blocks[v]` is
/// used in the sector `R = v`.
pub fn register_blocks(slot: Slot, blocks: Vec<Op>) -> Result<Op> {
    if blocks.len() != slot.size() {
        return Err(Error::Dimension(format!(
            "{} blocks for a register with {} values",
            blocks.len(),
            slot.size()
        )));
    }
    same_dim(&blocks.iter().collect::<Vec<_>>())?;
    Ok(Arc::new(RegisterBlocks { slot, blocks }))
}
