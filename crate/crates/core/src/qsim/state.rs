//! State vectors over a register layout.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layout::RegisterLayout;
use super::norm::{norm, projector_defect};
use super::ops::{LinearMap, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Tolerance for the unit-norm invariant of states.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: Arc<RegisterLayout>,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(layout: Arc<RegisterLayout>, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a {}-qubit layout",
                amplitudes.len(),
                layout.total()
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn basis(layout: Arc<RegisterLayout>, values: &[(&str, u64)]) -> Result<Self> {
        let index = layout.basis_index(values)?;
        let mut amplitudes = vec![ZERO; layout.dim()];
        amplitudes[index] = ONE;
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> &Arc<RegisterLayout> {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn apply(&self, op: &dyn LinearMap) -> Result<Self> {
        if op.dim() != self.amplitudes.len() {
            return Err(Error::Dimension(format!(
                "operator `{}` has dimension {}, state has {}",
                op.label(),
                op.dim(),
                self.amplitudes.len()
            )));
        }
        let mut out = vec![ZERO; self.amplitudes.len()];
        op.apply_to(&self.amplitudes, &mut out);
        Ok(Self {
            layout: self.layout.clone(),
            amplitudes: out,
        })
    }

    /// Outcome probabilities of a computational-basis measurement of one
    /// register.
    pub fn marginal(&self, register: &str) -> Result<Vec<f64>> {
        let slot = self.layout.slot(register)?;
        let mut probs = vec![0.0; slot.size()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            probs[slot.get(i) as usize] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Measures a register in the computational basis and returns the
    /// outcome with the renormalized post-measurement state.
    pub fn measure(&self, register: &str, rng: &mut impl Rng) -> Result<(u64, Self)> {
        let probs = self.marginal(register)?;
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroNormBranch);
        }
        let mut target = rng.random::<f64>() * total;
        let mut outcome = probs.len() - 1;
        for (v, &p) in probs.iter().enumerate() {
            if target < p {
                outcome = v;
                break;
            }
            target -= p;
        }
        // never return a zero-probability branch through rounding
        while probs[outcome] == 0.0 {
            outcome = (outcome + probs.len() - 1) % probs.len();
        }
        let state = self.collapse(register, outcome as u64)?;
        Ok((outcome as u64, state))
    }

    /// The normalized state conditioned on `register = value`.
    pub fn collapse(&self, register: &str, value: u64) -> Result<Self> {
        let slot = self.layout.slot(register)?;
        let mut amplitudes = self.amplitudes.clone();
        for (i, a) in amplitudes.iter_mut().enumerate() {
            if slot.get(i) != value {
                *a = ZERO;
            }
        }
        let n = norm(&amplitudes);
        if n == 0.0 {
            return Err(Error::ZeroNormBranch);
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(Self {
            layout: self.layout.clone(),
            amplitudes,
        })
    }

    /// Writes the layout as a JSON header and the amplitudes as
    /// little-endian `(re, im)` float64 pairs.
    pub fn write_dump(&self, header: impl Write, mut data: impl Write) -> Result<()> {
        serde_json::to_writer(header, &DumpHeader { layout: (*self.layout).clone() })?;
        for a in &self.amplitudes {
            data.write_all(&a.re.to_le_bytes())?;
            data.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump(header: impl Read, mut data: impl Read) -> Result<Self> {
        let header: DumpHeader = serde_json::from_reader(header)?;
        let layout = Arc::new(header.layout);
        let mut bytes = Vec::new();
        data.read_to_end(&mut bytes)?;
        if bytes.len() != layout.dim() * 16 {
            return Err(Error::Dimension(format!("dump holds {} bytes", bytes.len())));
        }
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
        let amplitudes = bytes.chunks(16).map(|c| C64::new(f(&c[..8]), f(&c[8..]))).collect();
        Self::from_amplitudes(layout, amplitudes)
    }
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    layout: RegisterLayout,
}

/// `|Phi>` on every register in `uniform`, basis states on the rest.
pub fn uniform_state(
    layout: Arc<RegisterLayout>,
    uniform: &[&str],
    assignment: &[(&str, u64)],
) -> Result<StateVector> {
    for r in layout.registers() {
        let u = uniform.contains(&r.name.as_str());
        let a = assignment.iter().any(|(name, _)| *name == r.name);
        if u == a {
            return Err(Error::Layout(format!(
                "register `{}` must be either uniform or assigned, not {}",
                r.name,
                if u { "both" } else { "neither" }
            )));
        }
    }
    for name in uniform.iter().copied().chain(assignment.iter().map(|(n, _)| *n)) {
        layout.slot(name)?;
    }
    let base = layout.basis_index(assignment)?;
    let slots = layout.slots(uniform)?;
    let free: usize = slots.iter().map(|s| s.size()).product();
    let amp = C64::new(1.0 / (free as f64).sqrt(), 0.0);
    let mut amplitudes = vec![ZERO; layout.dim()];
    for k in 0..free {
        let mut index = base;
        let mut rest = k;
        for s in &slots {
            index = s.set(index, (rest % s.size()) as u64);
            rest /= s.size();
        }
        amplitudes[index] = amp;
    }
    Ok(StateVector { layout, amplitudes })
}

/// `P psi` and `||P psi||^2`, after checking on probes that `P` is a
/// projector.
pub fn project(p: &dyn LinearMap, state: &StateVector) -> Result<(StateVector, f64)> {
    let defect = projector_defect(p, 4, 0x5eed);
    if defect > NORM_TOLERANCE {
        return Err(Error::NotAProjector(format!("`{}` fails probes by {defect:e}", p.label())));
    }
    let out = state.apply(p)?;
    let prob = out.norm().powi(2);
    Ok((out, prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::ops::{identity, phi, phi_perp, xor_constant};
    use crate::seed::rng_from_seed;

    #[test]
    fn uniform_single_qubit() {
        let l = RegisterLayout::shared(&[("A", 1)]).unwrap();
        let s = uniform_state(l, &["A"], &[]).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(s.amplitudes(), &[C64::new(h, 0.0), C64::new(h, 0.0)]);
    }

    #[test]
    fn uniform_state_requires_every_register() {
        let l = RegisterLayout::shared(&[("A", 1), ("B", 2)]).unwrap();
        assert!(uniform_state(l.clone(), &["A"], &[]).is_err());
        assert!(uniform_state(l.clone(), &["A"], &[("A", 0), ("B", 1)]).is_err());
        let s = uniform_state(l, &[], &[("A", 1), ("B", 2)]).unwrap();
        assert_eq!(s.amplitudes().iter().filter(|a| **a != ZERO).count(), 1);
        assert_eq!(s.amplitudes()[0b110], ONE);
    }

    #[test]
    fn uniform_on_many_registers_is_product_of_phis() {
        let l = RegisterLayout::shared(&[("S0", 2), ("M", 1), ("S1", 2)]).unwrap();
        let s = uniform_state(l.clone(), &["S0", "S1"], &[("M", 1)]).unwrap();
        assert!(s.is_normalized());
        let after = s.apply(phi(32, l.slot("S0").unwrap()).as_ref()).unwrap();
        assert!(super::super::norm::distance(after.amplitudes(), s.amplitudes()) < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let l = RegisterLayout::shared(&[("A", 2)]).unwrap();
        let s = uniform_state(l.clone(), &["A"], &[]).unwrap();
        assert!((project(identity(4).as_ref(), &s).unwrap().1 - 1.0).abs() < 1e-12);
        assert!((project(phi(4, l.slot("A").unwrap()).as_ref(), &s).unwrap().1 - 1.0).abs() < 1e-12);
        let (v, p) = project(phi_perp(4, l.slot("A").unwrap()).as_ref(), &s).unwrap();
        assert!(p < 1e-30 && v.norm() < 1e-15);
        let not_projector = xor_constant(4, l.slot("A").unwrap(), 1).unwrap();
        assert!(matches!(project(not_projector.as_ref(), &s), Err(Error::NotAProjector(_))));
    }

    #[test]
    fn measuring_basis_state_is_deterministic() {
        let l = RegisterLayout::shared(&[("A", 3)]).unwrap();
        let s = StateVector::basis(l, &[("A", 5)]).unwrap();
        let (v, after) = s.measure("A", &mut rng_from_seed(0)).unwrap();
        assert_eq!(v, 5);
        assert_eq!(after, s);
    }

    #[test]
    fn measuring_uniform_qubit_is_fair() {
        let l = RegisterLayout::shared(&[("A", 1)]).unwrap();
        let s = uniform_state(l, &["A"], &[]).unwrap();
        let mut rng = rng_from_seed(42);
        let draws = 10_000;
        let ones = (0..draws).filter(|_| s.measure("A", &mut rng).unwrap().0 == 1).count();
        let expected = draws as f64 / 2.0;
        let chi2 = 2.0 * (ones as f64 - expected).powi(2) / expected;
        // 0.999 quantile of chi-square with one degree of freedom
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }

    #[test]
    fn measuring_one_factor_leaves_the_other() {
        let l = RegisterLayout::shared(&[("A", 1), ("B", 2)]).unwrap();
        let s = uniform_state(l.clone(), &["B"], &[("A", 0)]).unwrap();
        let (v, after) = s.measure("A", &mut rng_from_seed(3)).unwrap();
        assert_eq!(v, 0);
        assert_eq!(after.marginal("B").unwrap(), vec![0.25; 4]);
        assert!(matches!(s.collapse("A", 1), Err(Error::ZeroNormBranch)));
    }

    #[test]
    fn dump_round_trip() {
        let l = RegisterLayout::shared(&[("A", 1), ("B", 2)]).unwrap();
        let s = uniform_state(l, &["A", "B"], &[]).unwrap();
        let (mut h, mut d) = (Vec::new(), Vec::new());
        s.write_dump(&mut h, &mut d).unwrap();
        assert_eq!(d.len(), 8 * 16);
        assert_eq!(StateVector::read_dump(h.as_slice(), d.as_slice()).unwrap(), s);
    }
}
