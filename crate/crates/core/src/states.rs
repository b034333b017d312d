//! Named state families: maximally entangled and coherent states, isotropic mixtures,
//! the two qutrit-pair states of the trade-off figures, and i.i.d. copies.

// resolves to inherent methods when a dependency links std
#[allow(unused_imports)]
use crate::float::FloatExt;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{c, HermitianOperator, QuantumState};

/// φ_m = |Φ⟩⟨Φ| with |Φ⟩ = Σᵢ|ii⟩/√m, tagged with dims [m, m].
pub fn maximally_entangled(m: usize) -> QuantumState {
    let mut v = vec![c(0.0, 0.0); m * m];
    let a = 1.0 / (m as f64).sqrt();
    for i in 0..m {
        v[i * m + i] = c(a, 0.0);
    }
    QuantumState::new(HermitianOperator::outer(&v).with_dims(vec![m, m]).unwrap()).unwrap()
}

/// Maximally coherent state Σᵢⱼ|i⟩⟨j|/m.
pub fn maximally_coherent(m: usize) -> QuantumState {
    let v = vec![c(1.0 / (m as f64).sqrt(), 0.0); m];
    QuantumState::new(HermitianOperator::outer(&v)).unwrap()
}

pub fn maximally_mixed(d: usize) -> QuantumState {
    QuantumState::new(HermitianOperator::identity(d).scale(1.0 / d as f64)).unwrap()
}

/// Computational basis state |i⟩⟨i| in dimension d.
pub fn basis_state(d: usize, i: usize) -> Result<QuantumState> {
    if i >= d {
        return Err(Error::Config(format!("basis index {i} out of range for dimension {d}")));
    }
    QuantumState::new(HermitianOperator::basis_projector(d, i))
}

/// (1−γ)φ_d + γ·I/d², with local dimension d.
pub fn isotropic(gamma: f64, d: usize) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("isotropic mixing parameter {gamma} outside [0,1]")));
    }
    let phi = maximally_entangled(d);
    let noise = maximally_mixed(d * d).with_dims(vec![d, d])?;
    QuantumState::mixture(&[(1.0 - gamma, &phi), (gamma, &noise)])
}

/// Pure bipartite state Σᵢ √cᵢ |ii⟩ from squared Schmidt coefficients cᵢ (normalized here).
pub fn schmidt_state(coefficients: &[f64]) -> Result<QuantumState> {
    let m = coefficients.len();
    let total: f64 = coefficients.iter().sum();
    if m == 0 || total <= 0.0 || coefficients.iter().any(|&x| x < 0.0) {
        return Err(Error::Config("Schmidt coefficients must be nonnegative and not all zero".into()));
    }
    let mut v: Vec<Complex64> = vec![c(0.0, 0.0); m * m];
    for (i, &x) in coefficients.iter().enumerate() {
        v[i * m + i] = c((x / total).sqrt(), 0.0);
    }
    QuantumState::new(HermitianOperator::outer(&v).with_dims(vec![m, m])?)
}

fn ket_projector(d: usize, i: usize, j: usize) -> HermitianOperator {
    HermitianOperator::basis_projector(d * d, i * d + j)
}

/// 3/4·φ₃ + 1/4·|01⟩⟨01|.
pub fn figure3a() -> QuantumState {
    let op = &maximally_entangled(3).op().scale(0.75) + &ket_projector(3, 0, 1).scale(0.25);
    QuantumState::new(op.with_dims(vec![3, 3]).unwrap()).unwrap()
}

/// 3/4·φ₃ + 1/12·(|01⟩⟨01| + |12⟩⟨12| + |20⟩⟨20|).
pub fn figure3b() -> QuantumState {
    let mut op = maximally_entangled(3).op().scale(0.75);
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        op = &op + &ket_projector(3, i, j).scale(1.0 / 12.0);
    }
    QuantumState::new(op.with_dims(vec![3, 3]).unwrap()).unwrap()
}

/// ρ^{⊗n}; subsystem metadata of the copies is concatenated.
pub fn n_copies(state: &QuantumState, n: usize) -> Result<QuantumState> {
    if n == 0 {
        return Err(Error::Config("number of copies must be positive".into()));
    }
    let mut acc = state.clone();
    for _ in 1..n {
        acc = acc.tensor(state);
    }
    Ok(acc)
}

/// Builds a named state family from numeric parameters.
///
/// Known names: `maximally_entangled`/`bell` (m), `maximally_coherent` (m),
/// `maximally_mixed` (d), `basis` (d, i), `isotropic` (γ, d), `schmidt` (c₁, c₂, ...),
/// `figure3a`, `figure3b`.
pub fn state_factory(name: &str, params: &[f64]) -> Result<QuantumState> {
    let int = |k: usize| -> Result<usize> {
        let x = *params
            .get(k)
            .ok_or_else(|| Error::Config(format!("state '{name}' needs parameter #{}", k + 1)))?;
        if x < 1.0 && k == 0 || x < 0.0 || x.fract() != 0.0 {
            return Err(Error::Config(format!("state '{name}': parameter {x} must be a positive integer")));
        }
        Ok(x as usize)
    };
    match name {
        "maximally_entangled" | "bell" | "phi" => Ok(maximally_entangled(int(0)?)),
        "maximally_coherent" | "coherent" => Ok(maximally_coherent(int(0)?)),
        "maximally_mixed" | "mixed" => Ok(maximally_mixed(int(0)?)),
        "basis" => basis_state(int(0)?, int(1)?),
        "isotropic" => {
            let g = *params
                .first()
                .ok_or_else(|| Error::Config("isotropic needs γ".into()))?;
            let d = if params.len() > 1 { int(1)? } else { 2 };
            isotropic(g, d)
        }
        "schmidt" => schmidt_state(params),
        "figure3a" => Ok(figure3a()),
        "figure3b" => Ok(figure3b()),
        other => Err(Error::Config(format!("unknown state family '{other}'"))),
    }
}

/// Parses `name:p1,p2,...` and builds the state.
pub fn parse_state_spec(spec: &str) -> Result<QuantumState> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (spec.trim(), ""),
    };
    let params = rest
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad numeric parameter '{s}' in '{spec}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    state_factory(name, &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_entries() {
        let phi = maximally_entangled(2);
        let m = phi.op().matrix();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((m[(i, j)].re - 0.5).abs() < 1e-15);
        }
        assert_eq!(phi.op().rank(1e-9), 1);
        let sq = phi.tensor(&phi);
        assert!((sq.trace() - 1.0).abs() < 1e-12);
        assert_eq!(sq.op().rank(1e-9), 1);
    }

    #[test]
    fn figure_states_match_entrywise_construction() {
        let b = figure3b();
        let m = b.op().matrix();
        // φ₃ has weight 1/3 on |ii⟩⟨jj|
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[(4 * i, 4 * j)].re - 0.25).abs() < 1e-15);
            }
        }
        for k in [1usize, 5, 6] {
            assert!((m[(k, k)].re - 1.0 / 12.0).abs() < 1e-15);
        }
        assert!((b.trace() - 1.0).abs() < 1e-12);
        let a = figure3a();
        assert!((a.op().matrix()[(1, 1)].re - 0.25).abs() < 1e-15);
        assert_eq!(a.op().rank(1e-9), 2);
    }

    #[test]
    fn copies_and_factory() {
        let iso = parse_state_spec("isotropic:0.3,2").unwrap();
        let two = n_copies(&iso, 2).unwrap();
        assert_eq!(two.dim(), 16);
        assert!((two.trace() - 1.0).abs() < 1e-12);
        assert_eq!(two.bipartition(), Some(&[2usize, 2, 2, 2][..]));
        assert!(parse_state_spec("nonsense:1").is_err());
        assert!(parse_state_spec("isotropic:abc").is_err());
        assert_eq!(parse_state_spec("bell:2").unwrap(), maximally_entangled(2));
    }
}
