//! Experiment configuration: a JSON file with a model (or named preset), a
//! point grid or direction spec, the estimator/asymptotics selection, and
//! tolerance/seed/truncation overrides. The pmf record format here is the
//! one external interface shared by every front end.

use crate::asympt::lundberg_1d;
use crate::dist::Pmf;
use crate::model::{stability_of, ParallelQueueModel};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Distribution record: `{"kind": "geometric", "alpha": 0.5}`,
/// `{"kind": "bernoulli", "p": 0.3}`, `{"kind": "pareto", "delta": 2.5}`,
/// or `{"kind": "finite", "weights": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PmfSpec {
    Bernoulli { p: f64 },
    Geometric { alpha: f64 },
    Pareto { delta: f64 },
    Finite { weights: Vec<f64> },
}

impl PmfSpec {
    pub fn build(&self) -> Result<Pmf> {
        match self {
            PmfSpec::Bernoulli { p } => Pmf::bernoulli(*p),
            PmfSpec::Geometric { alpha } => Pmf::geometric(*alpha),
            PmfSpec::Pareto { delta } => Pmf::discrete_pareto(*delta),
            PmfSpec::Finite { weights } => Pmf::finite(weights.clone()),
        }
    }

    fn deterministic(k: u64) -> PmfSpec {
        let mut weights = vec![0.0; k as usize + 1];
        weights[k as usize] = 1.0;
        PmfSpec::Finite { weights }
    }
}

/// Model record: the three laws.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelSpec {
    pub arrival: PmfSpec,
    pub service1: PmfSpec,
    pub service2: PmfSpec,
}

/// Named parameterizations exercising the two exactly-solvable cases and
/// the heavy-tailed regime. Parameter values are artifact defaults chosen
/// to satisfy the stability conditions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum Preset {
    #[serde(rename = "bernoulli-case")]
    BernoulliCase,
    #[serde(rename = "geometric-case")]
    GeometricCase,
    #[serde(rename = "heavy-case")]
    HeavyCase,
}

impl Preset {
    pub fn model_spec(self) -> ModelSpec {
        match self {
            Preset::BernoulliCase => ModelSpec {
                arrival: PmfSpec::Bernoulli { p: 0.3 },
                service1: PmfSpec::Bernoulli { p: 0.5 },
                service2: PmfSpec::Bernoulli { p: 0.6 },
            },
            Preset::GeometricCase => ModelSpec {
                arrival: PmfSpec::Geometric { alpha: 0.5 },
                service1: PmfSpec::Geometric { alpha: 0.25 },
                service2: PmfSpec::Geometric { alpha: 0.3 },
            },
            Preset::HeavyCase => ModelSpec {
                arrival: PmfSpec::Pareto { delta: 2.5 },
                service1: PmfSpec::deterministic(2),
                service2: PmfSpec::deterministic(3),
            },
        }
    }

    /// The case-specific admission conditions, checked explicitly.
    fn validate(self) -> Result<()> {
        let spec = self.model_spec();
        let (a, s1, s2) = (
            spec.arrival.build()?,
            spec.service1.build()?,
            spec.service2.build()?,
        );
        let ok = match self {
            // 0-1 case: P(A=1) < min(P(S1=1), P(S2=1)).
            Preset::BernoulliCase => a.pmf(1) < s1.pmf(1).min(s2.pmf(1)),
            // Geometric case: (1-alpha)/alpha < min (1-beta_i)/beta_i.
            Preset::GeometricCase => a.mean() < s1.mean().min(s2.mean()),
            Preset::HeavyCase => s1.pmf(0) == 0.0 && s2.pmf(0) == 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "preset {self:?} violates its admission condition"
            )))
        }
    }
}

/// Evaluation locations: an explicit point list, or a direction with a set
/// of scale values `n` (points are `(round(n eta_1), round(n eta_2))`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<(u64, u64)>),
    Direction { eta: [f64; 2], n_values: Vec<u64> },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "queue-mc")]
    QueueMc,
    #[serde(rename = "first-passage")]
    FirstPassage,
    #[serde(rename = "tilted")]
    Tilted,
    #[serde(rename = "heavy-mc")]
    HeavyMc,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Exact => "exact",
            EstimatorKind::QueueMc => "queue-mc",
            EstimatorKind::FirstPassage => "first-passage",
            EstimatorKind::Tilted => "tilted",
            EstimatorKind::HeavyMc => "heavy-mc",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum AsymptoticKind {
    #[serde(rename = "cramer")]
    Cramer,
    #[serde(rename = "heavy-series")]
    HeavySeries,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Tolerances {
    /// L1 sweep tolerance of the stationary solver.
    pub grid_tol: f64,
    /// Certified stopping threshold of the first-passage estimator.
    pub eps_stop: f64,
    /// Relative truncation tolerance of the heavy series.
    pub series_rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            grid_tol: 1e-12,
            eps_stop: 1e-9,
            series_rel_tol: 1e-6,
        }
    }
}

/// Truncation overrides for the exact solver; `None` means "derive from
/// the 1-D Lundberg exponents" (tail below 1e-10 at the boundary).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(default)]
pub struct Truncation {
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub max_iter: Option<u64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(default)]
pub struct McParams {
    pub queue_reps: u64,
    pub horizon: u64,
    pub burnin: u64,
    pub fp_reps: u64,
    pub tilted_reps: u64,
    pub heavy_reps: u64,
    pub horizon_cap: u64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            queue_reps: 32,
            horizon: 1_000_000,
            burnin: 10_000,
            fp_reps: 1_000_000,
            tilted_reps: 100_000,
            heavy_reps: 100_000,
            horizon_cap: 1_000_000,
        }
    }
}

/// Top-level experiment configuration (JSON).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub model: Option<ModelSpec>,
    pub grid: Option<GridSpec>,
    pub estimators: Vec<EstimatorKind>,
    pub asymptotics: Vec<AsymptoticKind>,
    pub tolerances: Tolerances,
    pub truncation: Truncation,
    pub mc: McParams,
    pub seed: u64,
}

/// A validated configuration with the model built and every location and
/// dimension resolved.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub model_spec: ModelSpec,
    pub model: ParallelQueueModel,
    pub points: Vec<(u64, u64)>,
    pub direction: Option<([f64; 2], Vec<u64>)>,
    pub estimators: Vec<EstimatorKind>,
    pub asymptotics: Vec<AsymptoticKind>,
    pub tolerances: Tolerances,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub max_iter: u64,
    pub mc: McParams,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validate and build: preset expansion, stability gate (rejections
    /// report the three means), and grid resolution.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let model_spec = match (&self.preset, &self.model) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either a preset or an explicit model, not both".into(),
                ))
            }
            (Some(p), None) => {
                p.validate()?;
                p.model_spec()
            }
            (None, Some(m)) => m.clone(),
            (None, None) => return Err(Error::Config("a preset or a model is required".into())),
        };

        let arrival = model_spec.arrival.build()?;
        let service1 = model_spec.service1.build()?;
        let service2 = model_spec.service2.build()?;
        let report = stability_of(&arrival, &service1, &service2);
        if !report.stable {
            return Err(Error::Config(format!(
                "unstable model rejected: E[A] = {} must be < min(E[S1] = {}, E[S2] = {})",
                report.mean_arrival, report.mean_service1, report.mean_service2
            )));
        }
        let model = ParallelQueueModel::new(arrival, service1, service2)?;

        let (points, direction) = match &self.grid {
            None => (Vec::new(), None),
            Some(GridSpec::Points(pts)) => (pts.clone(), None),
            Some(GridSpec::Direction { eta, n_values }) => {
                if !(eta[0] > 0.0 && eta[1] > 0.0) {
                    return Err(Error::Config(
                        "direction components must be strictly positive".into(),
                    ));
                }
                let pts = n_values
                    .iter()
                    .map(|&n| {
                        (
                            (n as f64 * eta[0]).round() as u64,
                            (n as f64 * eta[1]).round() as u64,
                        )
                    })
                    .collect();
                (pts, Some((*eta, n_values.clone())))
            }
        };

        Ok(ResolvedConfig {
            model_spec,
            model,
            points,
            direction,
            estimators: self.estimators.clone(),
            asymptotics: self.asymptotics.clone(),
            tolerances: self.tolerances,
            n1: self.truncation.n1,
            n2: self.truncation.n2,
            max_iter: self.truncation.max_iter.unwrap_or(200_000),
            mc: self.mc,
            seed: self.seed,
        })
    }
}

impl ResolvedConfig {
    /// Truncation bounds for the exact solver: explicit overrides, or sized
    /// so each marginal's Lundberg tail is below 1e-10 at the boundary.
    pub fn grid_dims(&self) -> Result<(usize, usize)> {
        let derive = |service: &Pmf| -> Result<usize> {
            let gamma = lundberg_1d(self.model.arrival(), service).map_err(|_| {
                Error::Config(
                    "exact solver truncation cannot be derived without a Lundberg root; \
                     set truncation.n1/n2 explicitly"
                        .into(),
                )
            })?;
            let n = (1e10f64.ln() / gamma).ceil() as usize;
            Ok(((n + 15) / 16 * 16).max(32))
        };
        let n1 = match self.n1 {
            Some(n) => n,
            None => derive(self.model.service1())?,
        };
        let n2 = match self.n2 {
            Some(n) => n,
            None => derive(self.model.service2())?,
        };
        Ok((n1, n2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_shared_pmf_record_format() {
        let p: PmfSpec = serde_json::from_str(r#"{"kind": "geometric", "alpha": 0.5}"#).unwrap();
        assert_eq!(p, PmfSpec::Geometric { alpha: 0.5 });
        let p: PmfSpec = serde_json::from_str(r#"{"kind": "bernoulli", "p": 0.3}"#).unwrap();
        assert_eq!(p, PmfSpec::Bernoulli { p: 0.3 });
        let p: PmfSpec = serde_json::from_str(r#"{"kind": "pareto", "delta": 2.5}"#).unwrap();
        assert_eq!(p, PmfSpec::Pareto { delta: 2.5 });
        let p: PmfSpec =
            serde_json::from_str(r#"{"kind": "finite", "weights": [0.5, 0.5]}"#).unwrap();
        assert!(p.build().is_ok());
    }

    #[test]
    fn presets_expand_to_stable_models() {
        for preset in [Preset::BernoulliCase, Preset::GeometricCase, Preset::HeavyCase] {
            let cfg = ExperimentConfig {
                preset: Some(preset),
                ..Default::default()
            };
            let resolved = cfg.resolve().unwrap();
            assert!(resolved.model.stability().stable);
        }
    }

    #[test]
    fn unstable_model_is_rejected_with_means() {
        let cfg = ExperimentConfig {
            model: Some(ModelSpec {
                arrival: PmfSpec::Bernoulli { p: 0.5 },
                service1: PmfSpec::Bernoulli { p: 0.5 },
                service2: PmfSpec::Bernoulli { p: 0.9 },
            }),
            ..Default::default()
        };
        match cfg.resolve() {
            Err(Error::Config(msg)) => {
                assert!(msg.contains("0.5") && msg.contains("0.9"), "{msg}");
            }
            other => panic!("expected ConfigError, got {other:?}"),
        }
    }

    #[test]
    fn direction_grid_resolves_to_rounded_points() {
        let cfg = ExperimentConfig {
            preset: Some(Preset::GeometricCase),
            grid: Some(GridSpec::Direction {
                eta: [0.5, 0.5],
                n_values: vec![4, 6, 8],
            }),
            ..Default::default()
        };
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.points, vec![(2, 2), (3, 3), (4, 4)]);
        assert!(resolved.direction.is_some());
    }

    #[test]
    fn grid_dims_derive_from_lundberg() {
        let cfg = ExperimentConfig {
            preset: Some(Preset::BernoulliCase),
            ..Default::default()
        };
        let resolved = cfg.resolve().unwrap();
        let (n1, n2) = resolved.grid_dims().unwrap();
        // gamma_1 = ln(7/3) -> 23.03/0.847 ~ 28 -> padded to 32.
        assert!(n1 >= 28 && n1 % 16 == 0);
        // gamma_2 = ln(3.5) (roots of 0.12u^2 - 0.54u + 0.42) -> ~19 -> 32.
        assert!(n2 >= 19 && n2 % 16 == 0);
    }

    #[test]
    fn heavy_model_requires_explicit_truncation() {
        let cfg = ExperimentConfig {
            preset: Some(Preset::HeavyCase),
            ..Default::default()
        };
        let resolved = cfg.resolve().unwrap();
        assert!(resolved.grid_dims().is_err());

        let cfg = ExperimentConfig {
            preset: Some(Preset::HeavyCase),
            truncation: Truncation {
                n1: Some(64),
                n2: Some(64),
                max_iter: None,
            },
            ..Default::default()
        };
        assert_eq!(cfg.resolve().unwrap().grid_dims().unwrap(), (64, 64));
    }

    #[test]
    fn config_json_roundtrip_and_unknown_fields() {
        let text = r#"{
            "preset": "bernoulli-case",
            "grid": [[0, 0], [2, 1]],
            "estimators": ["exact", "queue-mc"],
            "asymptotics": ["cramer"],
            "seed": 7
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.estimators.len(), 2);
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.points, vec![(0, 0), (2, 1)]);

        assert!(ExperimentConfig::from_json(r#"{"presett": "x"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{}"#)
            .unwrap()
            .resolve()
            .is_err());
    }
}
