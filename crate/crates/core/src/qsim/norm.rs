//! Spectral norm estimation and probe-based operator checks.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::layout::MAX_NORM_QUBITS;
use super::ops::{LinearMap, C64, ZERO};
use crate::error::{Error, Result};
use crate::seed::{derive_indexed, rng_from_seed};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 5000;
pub const RESTARTS: usize = 3;
pub const PROBES: usize = 32;
/// Probe ratio below which a map is declared zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn distance(u: &[C64], v: &[C64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

/// Unit vector with i.i.d. complex Gaussian entries.
pub fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Iterations of the best restart.
    pub iterations: usize,
    pub converged: bool,
}

fn check_size(a: &dyn LinearMap) -> Result<()> {
    if a.dim() > 1usize << MAX_NORM_QUBITS {
        return Err(Error::SizeGuard(format!(
            "dimension {} exceeds 2^{MAX_NORM_QUBITS} for norm estimation",
            a.dim()
        )));
    }
    Ok(())
}

/// Largest singular value by power iteration on `A^dagger A`, taking the
/// maximum over [`RESTARTS`] random starts. Each run stops once the estimate
/// changes by less than `tol` relative to its value.
pub fn operator_norm(a: &dyn LinearMap, tol: f64, max_iters: usize, seed: u64) -> Result<NormEstimate> {
    check_size(a)?;
    let dim = a.dim();
    let mut best = NormEstimate {
        value: 0.0,
        iterations: 0,
        converged: true,
    };
    let mut av = vec![ZERO; dim];
    let mut ata = vec![ZERO; dim];
    for restart in 0..RESTARTS {
        let mut rng = rng_from_seed(derive_indexed(seed, "power-iteration", restart as u64));
        let mut v = random_unit_vector(dim, &mut rng);
        let mut estimate = 0.0;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < max_iters {
            iterations += 1;
            a.apply_to(&v, &mut av);
            let next = norm(&av);
            if next == 0.0 {
                estimate = 0.0;
                converged = true;
                break;
            }
            let change = (next - estimate).abs();
            estimate = next;
            if change <= tol * next {
                converged = true;
                break;
            }
            a.adjoint_to(&av, &mut ata);
            let size = norm(&ata);
            if size == 0.0 {
                converged = true;
                break;
            }
            for (x, y) in v.iter_mut().zip(&ata) {
                *x = y / size;
            }
        }
        if restart == 0 || estimate > best.value {
            best = NormEstimate {
                value: estimate,
                iterations,
                converged,
            };
        }
    }
    Ok(best)
}

pub fn operator_norm_default(a: &dyn LinearMap, seed: u64) -> Result<NormEstimate> {
    operator_norm(a, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS, seed)
}

/// `max ||A v|| / ||v||` over random unit probes.
pub fn probe_norm(a: &dyn LinearMap, probes: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(derive_indexed(seed, "probe-norm", 0));
    let mut out = vec![ZERO; a.dim()];
    (0..probes)
        .map(|_| {
            let v = random_unit_vector(a.dim(), &mut rng);
            a.apply_to(&v, &mut out);
            norm(&out)
        })
        .fold(0.0, f64::max)
}

pub fn is_zero_map(a: &dyn LinearMap, seed: u64) -> bool {
    probe_norm(a, PROBES, seed) < ZERO_THRESHOLD
}

/// Largest deviation of `||Uv||` from 1 and of `U^dagger U v` from `v`.
pub fn unitarity_defect(u: &dyn LinearMap, probes: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(derive_indexed(seed, "unitary-probe", 0));
    let dim = u.dim();
    let mut uv = vec![ZERO; dim];
    let mut back = vec![ZERO; dim];
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let v = random_unit_vector(dim, &mut rng);
        u.apply_to(&v, &mut uv);
        u.adjoint_to(&uv, &mut back);
        worst = worst.max((norm(&uv) - 1.0).abs()).max(distance(&back, &v));
    }
    worst
}

/// Largest of `||P^2 v - P v||` and `|<u, P v> - <P u, v>|` over probes.
pub fn projector_defect(p: &dyn LinearMap, probes: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(derive_indexed(seed, "projector-probe", 0));
    let dim = p.dim();
    let mut pv = vec![ZERO; dim];
    let mut ppv = vec![ZERO; dim];
    let mut pu = vec![ZERO; dim];
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let v = random_unit_vector(dim, &mut rng);
        let u = random_unit_vector(dim, &mut rng);
        p.apply_to(&v, &mut pv);
        p.apply_to(&pv, &mut ppv);
        p.apply_to(&u, &mut pu);
        let symmetry = (inner(&u, &pv) - inner(&pu, &v)).norm();
        worst = worst.max(distance(&ppv, &pv)).max(symmetry);
    }
    worst
}

/// Largest `||A(au + bv) - aAu - bAv||` over probes; also compares the
/// adjoint action against `<u, Av> = <A^dagger u, v>`.
pub fn linearity_defect(a: &dyn LinearMap, probes: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(derive_indexed(seed, "linearity-probe", 0));
    let dim = a.dim();
    let mut worst: f64 = 0.0;
    let mut au = vec![ZERO; dim];
    let mut av = vec![ZERO; dim];
    let mut amix = vec![ZERO; dim];
    let mut adj = vec![ZERO; dim];
    for _ in 0..probes {
        let u = random_unit_vector(dim, &mut rng);
        let v = random_unit_vector(dim, &mut rng);
        let alpha = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let beta = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let mix: Vec<C64> = u.iter().zip(&v).map(|(x, y)| alpha * x + beta * y).collect();
        a.apply_to(&u, &mut au);
        a.apply_to(&v, &mut av);
        a.apply_to(&mix, &mut amix);
        let expected: Vec<C64> = au.iter().zip(&av).map(|(x, y)| alpha * x + beta * y).collect();
        a.adjoint_to(&u, &mut adj);
        let adjoint_gap = (inner(&u, &av) - inner(&adj, &v)).norm();
        worst = worst.max(distance(&amix, &expected)).max(adjoint_gap);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::dense::DenseMatrix;
    use crate::qsim::layout::RegisterLayout;
    use crate::qsim::ops::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::Arc;

    #[test]
    fn identity_and_zero_norms() {
        assert!((operator_norm_default(identity(16).as_ref(), 1).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(operator_norm_default(zero(16).as_ref(), 1).unwrap().value, 0.0);
        assert!(is_zero_map(zero(8).as_ref(), 0));
        assert!(!is_zero_map(identity(8).as_ref(), 0));
    }

    #[test]
    fn equality_times_phi_has_norm_two_to_minus_half_n() {
        for n in 1..=4u32 {
            let l = RegisterLayout::new(&[("X", n), ("Y", n)]).unwrap();
            let (x, y) = (l.slot("X").unwrap(), l.slot("Y").unwrap());
            let op = product(vec![equality_projector(l.dim(), x, y, true), phi(l.dim(), y)]).unwrap();
            let est = operator_norm_default(op.as_ref(), 3).unwrap();
            assert!(est.converged);
            assert!((est.value - 2f64.powf(-(n as f64) / 2.0)).abs() < 1e-8, "n={n}: {}", est.value);
        }
    }

    // A diagonal matrix with known entries gives an exact oracle.
    #[test]
    fn norm_of_diagonal_matches_largest_entry() {
        let entries = [0.3, -0.9, 0.7, 0.1];
        let op = diagonal(4, "d", move |i| C64::new(entries[i], 0.0));
        let est = operator_norm_default(op.as_ref(), 5).unwrap();
        assert!((est.value - 0.9).abs() < 1e-9);
    }

    #[test]
    fn unitary_norm_is_one_and_norms_are_submultiplicative() {
        let mut rng = rng_from_seed(8);
        let u: Op = Arc::new(DenseMatrix::random_unitary(16, &mut rng));
        assert!((operator_norm_default(u.as_ref(), 2).unwrap().value - 1.0).abs() < 1e-8);
        assert!(unitarity_defect(u.as_ref(), PROBES, 0) < 1e-9);
        let l = RegisterLayout::new(&[("A", 2), ("B", 2)]).unwrap();
        let p = phi(16, l.slot("B").unwrap());
        let a = product(vec![p.clone(), u.clone(), equality_projector(16, l.slot("A").unwrap(), l.slot("B").unwrap(), true)]).unwrap();
        let b = product(vec![u.clone(), p.clone()]).unwrap();
        let na = operator_norm_default(a.as_ref(), 1).unwrap().value;
        let nb = operator_norm_default(b.as_ref(), 1).unwrap().value;
        let nab = operator_norm_default(product(vec![a, b]).unwrap().as_ref(), 1).unwrap().value;
        assert!(nab <= na * nb + 1e-8);
    }

    #[test]
    fn commutator_examples() {
        let l = RegisterLayout::new(&[("X", 1), ("Y", 1), ("Z", 2)]).unwrap();
        let d = l.dim();
        let p = phi(d, l.slot("Y").unwrap());
        assert!(is_zero_map(commutator(p.clone(), p.clone()).unwrap().as_ref(), 0));
        let disjoint = commutator(p.clone(), phi(d, l.slot("Z").unwrap())).unwrap();
        assert!(is_zero_map(disjoint.as_ref(), 0));
        for n in 1..=2u32 {
            let l = RegisterLayout::new(&[("X", n), ("Y", n)]).unwrap();
            let (x, y) = (l.slot("X").unwrap(), l.slot("Y").unwrap());
            let c = commutator(equality_projector(l.dim(), x, y, true), phi(l.dim(), y)).unwrap();
            let v = operator_norm_default(c.as_ref(), 0).unwrap().value;
            assert!(v <= 2.0 * 2f64.powf(-(n as f64) / 2.0) + 1e-8);
        }
    }

    #[test]
    fn projector_probes_accept_projectors_only() {
        let l = RegisterLayout::new(&[("A", 2), ("B", 2)]).unwrap();
        let p = phi(16, l.slot("A").unwrap());
        assert!(projector_defect(p.as_ref(), PROBES, 0) < 1e-9);
        let u: Op = Arc::new(DenseMatrix::random_unitary(16, &mut rng_from_seed(1)));
        assert!(projector_defect(u.as_ref(), PROBES, 0) > 1e-3);
        assert!(linearity_defect(u.as_ref(), 8, 0) < 1e-9);
    }

    // Generic contraction-normed maps: a product of projectors and unitaries.
    fn random_contraction(seed: u64) -> Op {
        let mut rng = rng_from_seed(seed);
        let l = RegisterLayout::new(&[("A", 2), ("B", 2)]).unwrap();
        let u: Op = Arc::new(DenseMatrix::random_unitary(4, &mut rng));
        let u = embed(u, &[l.slot(if rng.random::<bool>() { "A" } else { "B" }).unwrap()], 16).unwrap();
        let p = if rng.random::<bool>() { phi(16, l.slot("A").unwrap()) } else { equality_projector(16, l.slot("A").unwrap(), l.slot("B").unwrap(), true) };
        product(vec![u, p]).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn commutator_with_product_is_bounded_by_sum(seed in any::<u64>()) {
            let a = random_contraction(seed);
            let bs: Vec<Op> = (1..=3).map(|k| random_contraction(seed.wrapping_add(k))).collect();
            let lhs = operator_norm_default(commutator(a.clone(), product(bs.clone()).unwrap()).unwrap().as_ref(), seed).unwrap().value;
            let rhs: f64 = bs.iter().map(|b| operator_norm_default(commutator(a.clone(), b.clone()).unwrap().as_ref(), seed).unwrap().value).sum();
            prop_assert!(lhs <= rhs + 1e-7, "{} > {}", lhs, rhs);
        }
    }
}
