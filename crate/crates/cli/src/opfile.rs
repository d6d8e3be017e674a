//! Operator file schema: a top-level `periodic` object, or a `prefix`
//! paired with a `tail` that is either a periodic descriptor with a phase
//! or the string `"truncated"`.

use anyhow::{bail, Context};
use fgs_core::jacobi::{PerturbedJacobi, Tail};
use fgs_core::periodic::PeriodicJacobi;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoeffsDto {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TailDto {
    Periodic { periodic: CoeffsDto, phase: usize },
    Keyword(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged, deny_unknown_fields)]
pub enum OperatorDto {
    Periodic { periodic: CoeffsDto },
    Perturbed { prefix: CoeffsDto, tail: TailDto },
}

/// A parsed operator: the original shape is kept so that reports can state
/// whether the input was purely periodic.
#[derive(Debug, Clone)]
pub enum OperatorInput {
    Periodic(PeriodicJacobi),
    Perturbed(PerturbedJacobi),
}

impl OperatorInput {
    pub fn as_perturbed(&self) -> PerturbedJacobi {
        match self {
            OperatorInput::Periodic(pj) => pj.as_operator(),
            OperatorInput::Perturbed(j) => j.clone(),
        }
    }

    /// The periodic data the discriminant is read from: the operator itself
    /// or its tail.
    pub fn periodic_part(&self) -> anyhow::Result<PeriodicJacobi> {
        match self {
            OperatorInput::Periodic(pj) => Ok(pj.clone()),
            OperatorInput::Perturbed(j) => j
                .rolled_tail()
                .context("operator has a truncated tail, no periodic part"),
        }
    }
}

pub fn parse_operator_str(text: &str) -> anyhow::Result<OperatorInput> {
    let dto: OperatorDto = serde_json::from_str(text).context("operator file schema")?;
    from_dto(&dto)
}

pub fn parse_operator_file(path: &std::path::Path) -> anyhow::Result<OperatorInput> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading operator file {}", path.display()))?;
    parse_operator_str(&text)
}

pub fn from_dto(dto: &OperatorDto) -> anyhow::Result<OperatorInput> {
    match dto {
        OperatorDto::Periodic { periodic } => {
            let pj = PeriodicJacobi::new(periodic.a.clone(), periodic.b.clone())
                .map_err(|e| anyhow::anyhow!("periodic: {e}"))?;
            Ok(OperatorInput::Periodic(pj))
        }
        OperatorDto::Perturbed { prefix, tail } => {
            let tail = match tail {
                TailDto::Periodic { periodic, phase } => {
                    let pj = PeriodicJacobi::new(periodic.a.clone(), periodic.b.clone())
                        .map_err(|e| anyhow::anyhow!("tail.periodic: {e}"))?;
                    Tail::Periodic {
                        tail: pj,
                        phase: *phase,
                    }
                }
                TailDto::Keyword(word) => {
                    if word != "truncated" {
                        bail!("tail: expected \"truncated\" or a periodic object, got {word:?}");
                    }
                    Tail::Truncated
                }
            };
            let j = PerturbedJacobi::new(prefix.a.clone(), prefix.b.clone(), tail)
                .map_err(|e| anyhow::anyhow!("prefix: {e}"))?;
            Ok(OperatorInput::Perturbed(j))
        }
    }
}

#[cfg_attr(not(test), allow(dead_code))]
pub fn to_dto(op: &OperatorInput) -> OperatorDto {
    match op {
        OperatorInput::Periodic(pj) => OperatorDto::Periodic {
            periodic: CoeffsDto {
                a: pj.a().to_vec(),
                b: pj.b().to_vec(),
            },
        },
        OperatorInput::Perturbed(j) => {
            let tail = match j.tail() {
                Tail::Periodic { tail, phase } => TailDto::Periodic {
                    periodic: CoeffsDto {
                        a: tail.a().to_vec(),
                        b: tail.b().to_vec(),
                    },
                    phase: *phase,
                },
                Tail::Truncated => TailDto::Keyword("truncated".into()),
            };
            OperatorDto::Perturbed {
                prefix: CoeffsDto {
                    a: j.prefix_a().to_vec(),
                    b: j.prefix_b().to_vec(),
                },
                tail,
            }
        }
    }
}
