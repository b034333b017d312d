//! Textual and JSON descriptions of states, free sets and measure-and-prepare maps.
//!
//! A state is either a factory spec such as `isotropic:0.4,2`, an inline operator JSON
//! document, or `@path` naming a file with one. A theory is one of `incoherent`, `real`,
//! `ppt`, `ppt:da,db`, `cube`, `single:<state>` or `polytope:@path`.

use num_complex::Complex64;
use qrt_core::free_sets::FreeSetSpec;
use qrt_core::operator::CMat;
use qrt_core::protocols::{MeasurePrepareMap, TermKind, WitnessTerm};
use qrt_core::states::{n_copies, parse_state_spec};
use qrt_core::{HermitianOperator, QuantumState};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Dense Hermitian operator with optional subsystem dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl OperatorJson {
    pub fn from_operator(op: &HermitianOperator) -> Self {
        let m = op.matrix();
        let d = op.dim();
        let re = (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect();
        let has_im = im.iter().flatten().any(|&x| x != 0.0);
        Self {
            dims: op.dims().map(<[usize]>::to_vec),
            re,
            im: has_im.then_some(im),
        }
    }

    pub fn to_operator(&self) -> CliResult<HermitianOperator> {
        let d = self.re.len();
        let square = |rows: &[Vec<f64>]| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if d == 0 || !square(&self.re) || self.im.as_ref().is_some_and(|im| !square(im)) {
            return Err(CliError::Config("operator must be a non-empty square matrix".into()));
        }
        let m = CMat::from_fn(d, d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            Complex64::new(self.re[i][j], im)
        });
        let op = HermitianOperator::new(m)?;
        Ok(match &self.dims {
            Some(dims) => op.with_dims(dims.clone())?,
            None => op,
        })
    }
}

fn read_source(spec: &str) -> CliResult<Option<String>> {
    if let Some(path) = spec.strip_prefix('@') {
        return Ok(Some(std::fs::read_to_string(path)?));
    }
    Ok(spec.trim_start().starts_with('{').then(|| spec.to_string()))
}

/// Parses a state from a factory spec, inline JSON or `@file`.
pub fn parse_state(spec: &str) -> CliResult<QuantumState> {
    match read_source(spec)? {
        Some(text) => {
            let op: OperatorJson = serde_json::from_str(&text)?;
            Ok(QuantumState::new(op.to_operator()?)?)
        }
        None => Ok(parse_state_spec(spec)?),
    }
}

/// `spec` optionally followed by `^n` for n copies, as in `isotropic:0.3,2^2`.
pub fn parse_state_copies(spec: &str) -> CliResult<QuantumState> {
    match spec.rsplit_once('^') {
        Some((base, n)) if !base.starts_with('{') => {
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad copy count in '{spec}'")))?;
            Ok(n_copies(&parse_state(base)?, n)?)
        }
        _ => parse_state(spec),
    }
}

fn ppt_for(state_dims: Option<&[usize]>, d: usize) -> CliResult<FreeSetSpec> {
    match state_dims {
        Some(dims) if dims.len() == 2 => Ok(FreeSetSpec::ppt(dims)?),
        Some(dims) if dims.len() % 2 == 0 && dims.len() > 2 => {
            let (da, db) = (dims[0], dims[1]);
            if dims.chunks(2).any(|c| c[0] != da || c[1] != db) {
                return Err(CliError::Config(format!("cannot infer a bipartition from dims {dims:?}")));
            }
            Ok(FreeSetSpec::ppt_copies(da, db, dims.len() / 2)?)
        }
        _ => {
            let m = (d as f64).sqrt().round() as usize;
            if m * m != d {
                return Err(CliError::Config(format!(
                    "dimension {d} is not a square; give the bipartition as ppt:da,db"
                )));
            }
            Ok(FreeSetSpec::ppt(&[m, m])?)
        }
    }
}

/// Builds the free set named by `spec` for states shaped like `state`.
pub fn parse_theory(spec: &str, state: &QuantumState) -> CliResult<FreeSetSpec> {
    let d = state.dim();
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let f = match (name, arg) {
        ("incoherent", None) => FreeSetSpec::incoherent(d),
        ("real", None) => FreeSetSpec::real(d),
        ("ppt", None) => ppt_for(state.bipartition(), d)?,
        ("ppt", Some(a)) => {
            let dims = a
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Config(format!("bad bipartition '{a}'")))?;
            FreeSetSpec::ppt(&dims)?
        }
        ("cube", None) => FreeSetSpec::qubit_cube(),
        ("single", Some(s)) => FreeSetSpec::single_state(&parse_state(s)?),
        ("polytope", Some(s)) => {
            let text = read_source(s)?.ok_or_else(|| CliError::Config("polytope needs @file or inline JSON".into()))?;
            let ops: Vec<OperatorJson> = serde_json::from_str(&text)?;
            let vs = ops
                .iter()
                .map(|o| Ok(QuantumState::new(o.to_operator()?)?))
                .collect::<CliResult<Vec<_>>>()?;
            FreeSetSpec::polytope(&vs)?
        }
        _ => return Err(CliError::Config(format!("unknown theory '{spec}'"))),
    };
    if f.dim() != d {
        return Err(CliError::Config(format!(
            "theory '{spec}' has dimension {}, state has dimension {d}",
            f.dim()
        )));
    }
    Ok(f)
}

/// One term ⟨effect, ·⟩ output of a map, or of its witness when `kind` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub effect: OperatorJson,
    pub output: OperatorJson,
}

/// Serialized measure-and-prepare map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub input_dim: usize,
    pub output_dim: usize,
    pub terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<TermJson>>,
}

impl MapJson {
    pub fn from_map(map: &MeasurePrepareMap) -> Self {
        let term = |kind: Option<&str>, e: &HermitianOperator, p: &HermitianOperator| TermJson {
            kind: kind.map(str::to_string),
            effect: OperatorJson::from_operator(e),
            output: OperatorJson::from_operator(p),
        };
        Self {
            input_dim: map.input_dim(),
            output_dim: map.output_dim(),
            terms: map.terms().iter().map(|(e, p)| term(None, e, p)).collect(),
            witness: map.witness().map(|w| {
                w.iter()
                    .map(|t| {
                        let kind = match t.kind {
                            TermKind::Dual => "dual",
                            TermKind::Annihilating => "annihilating",
                        };
                        term(Some(kind), &t.effect, &t.output)
                    })
                    .collect()
            }),
        }
    }

    pub fn to_map(&self) -> CliResult<MeasurePrepareMap> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.effect.to_operator()?, t.output.to_operator()?)))
            .collect::<CliResult<Vec<_>>>()?;
        let map = MeasurePrepareMap::new(terms, self.input_dim, self.output_dim)?;
        let Some(w) = &self.witness else {
            return Ok(map);
        };
        let witness = w
            .iter()
            .map(|t| {
                let kind = match t.kind.as_deref() {
                    Some("dual") => TermKind::Dual,
                    Some("annihilating") => TermKind::Annihilating,
                    other => return Err(CliError::Config(format!("unknown witness kind {other:?}"))),
                };
                Ok(WitnessTerm {
                    kind,
                    effect: t.effect.to_operator()?,
                    output: t.output.to_operator()?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(map.with_witness(witness))
    }
}

/// Reads a map from `@file` or inline JSON.
pub fn parse_map(spec: &str) -> CliResult<MeasurePrepareMap> {
    let text = read_source(spec)?.ok_or_else(|| CliError::Config("map must be @file or inline JSON".into()))?;
    let m: MapJson = serde_json::from_str(&text)?;
    m.to_map()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_json_round_trip() {
        let s = parse_state("isotropic:0.3,2").unwrap();
        let j = OperatorJson::from_operator(s.op());
        let back = j.to_operator().unwrap();
        assert_eq!(&back, s.op());
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(parse_state(&text).unwrap().op(), s.op());
    }

    #[test]
    fn theories_follow_state_shape() {
        let two = parse_state_copies("isotropic:0.3,2^2").unwrap();
        assert_eq!(parse_theory("ppt", &two).unwrap().dim(), 16);
        let coh = parse_state("coherent:3").unwrap();
        assert_eq!(parse_theory("incoherent", &coh).unwrap().name(), "incoherent");
        assert!(parse_theory("ppt", &coh).is_err());
        assert!(parse_theory("nonsense", &coh).is_err());
        assert!(parse_state("{\"re\": [[1, 0]]}").is_err());
    }
}
