//! Seeded synthetic sensor graphs in the canonical observation shape.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rdf::{Graph, Literal, Term, Triple};
use crate::ssn::{Vocabulary, FIXTURE_PREFIX};

const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhenomenonSpec {
    /// Observation class of the phenomenon.
    pub phenomenon: String,
    pub property: String,
    pub unit: String,
}

impl PhenomenonSpec {
    fn local(phenomenon: &str, property: &str, unit: &str) -> Self {
        PhenomenonSpec {
            phenomenon: format!("{FIXTURE_PREFIX}{phenomenon}"),
            property: format!("{FIXTURE_PREFIX}{property}"),
            unit: format!("{FIXTURE_PREFIX}{unit}"),
        }
    }
}

/// Phenomena available to generated graphs, in the order they are taken.
pub fn default_phenomena() -> Vec<PhenomenonSpec> {
    vec![
        PhenomenonSpec::local("RainfallObs", "Precipitation", "cm"),
        PhenomenonSpec::local("TempObs", "Temperature", "degreeF"),
        PhenomenonSpec::local("WindSpeedObs", "WindSpeed", "knots"),
        PhenomenonSpec::local("RelativeHumidityObs", "RelativeHumidity", "percent"),
        PhenomenonSpec::local("PressureObs", "Pressure", "inHg"),
        PhenomenonSpec::local("VisibilityObs", "Visibility", "miles"),
        PhenomenonSpec::local("WindDirectionObs", "WindDirection", "degrees"),
        PhenomenonSpec::local("SnowfallObs", "Snowfall", "in"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_observations: usize,
    pub n_procedures: usize,
    pub phenomena: Vec<PhenomenonSpec>,
    /// Distinct values per phenomenon.
    pub value_domain_size: usize,
    /// Zipf exponent; 0 draws values uniformly.
    pub zipf_exponent: f64,
    /// First sampling instant, `YYYY-MM-DDTHH:MM:SS`.
    pub timestamp_start: String,
    pub stride_seconds: i64,
    pub seed: u64,
    /// Adds an `Instant` type triple to every sampling instant.
    pub type_instants: bool,
    /// Namespace of minted observation, measurement, instant and sensor IRIs.
    pub namespace: String,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_observations: 1000,
            n_procedures: 1,
            phenomena: default_phenomena()[..1].to_vec(),
            value_domain_size: 100,
            zipf_exponent: 0.0,
            timestamp_start: "2004-08-10T18:00:00".into(),
            stride_seconds: 600,
            seed: 42,
            type_instants: false,
            namespace: FIXTURE_PREFIX.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("value domain size must be at least 1")]
    EmptyValueDomain,
    #[error("at least one procedure and one phenomenon are required when observations are generated")]
    NoSources,
    #[error("zipf exponent must be finite and non-negative, got {0}")]
    BadExponent(f64),
    #[error("bad timestamp start {0:?}")]
    BadTimestamp(String),
    #[error("{0} is not an observation class of the vocabulary")]
    UnknownPhenomenon(String),
    #[error("IRI {0} is used for more than one role")]
    SharedIri(String),
    #[error("invalid IRI {0:?}")]
    BadIri(String),
}

/// Exact counts known from the draw, before any factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub observations: usize,
    /// Distinct (procedure, phenomenon, property, value, unit) keys.
    pub observation_groups: usize,
    /// Distinct (value, unit) pairs.
    pub measurement_groups: usize,
    pub triples: usize,
}

impl GroundTruth {
    /// Triple count after factorization: four per observation, four per
    /// observation group and three per measurement group, plus one per
    /// typed instant.
    pub fn factorized_triples(&self, type_instants: bool) -> usize {
        let instants = if type_instants { self.observations } else { 0 };
        4 * self.observations + 4 * self.observation_groups + 3 * self.measurement_groups + instants
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Graph,
    pub truth: GroundTruth,
}

/// Finite-domain Zipf sampler by inverse CDF over precomputed weights.
#[derive(Debug, Clone)]
pub struct ZipfSampler {
    cumulative: Vec<f64>,
}

impl ZipfSampler {
    pub fn new(domain: usize, exponent: f64) -> Self {
        let mut total = 0.0;
        let cumulative = (1..=domain)
            .map(|rank| {
                total += (rank as f64).powf(-exponent);
                total
            })
            .collect::<Vec<_>>();
        ZipfSampler {
            cumulative: cumulative.into_iter().map(|c| c / total).collect(),
        }
    }

    /// Zero-based rank.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Lexical form of the `idx`-th value of a domain: one decimal place.
pub fn value_lexical(idx: usize) -> String {
    format!("{}.{}", idx / 10, idx % 10)
}

impl GeneratorConfig {
    pub fn validate(&self, v: &Vocabulary) -> Result<NaiveDateTime, ConfigError> {
        if self.value_domain_size == 0 {
            return Err(ConfigError::EmptyValueDomain);
        }
        if self.n_observations > 0 && (self.n_procedures == 0 || self.phenomena.is_empty()) {
            return Err(ConfigError::NoSources);
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent < 0.0 {
            return Err(ConfigError::BadExponent(self.zipf_exponent));
        }
        let start = NaiveDateTime::parse_from_str(&self.timestamp_start, TIMESTAMP_FORMAT)
            .map_err(|_| ConfigError::BadTimestamp(self.timestamp_start.clone()))?;
        let mut seen = BTreeSet::new();
        for p in &self.phenomena {
            for iri in [&p.phenomenon, &p.property, &p.unit] {
                Term::iri(iri.as_str()).map_err(|_| ConfigError::BadIri(iri.clone()))?;
            }
            if !v.is_observation_type(&Term::Iri(p.phenomenon.clone())) {
                return Err(ConfigError::UnknownPhenomenon(p.phenomenon.clone()));
            }
            for iri in [&p.phenomenon, &p.property] {
                if !seen.insert(iri.clone()) {
                    return Err(ConfigError::SharedIri(iri.clone()));
                }
            }
        }
        Term::iri(format!("{}x", self.namespace)).map_err(|_| ConfigError::BadIri(self.namespace.clone()))?;
        Ok(start)
    }
}

/// Builds the graph: observation `i` uses a random procedure and
/// phenomenon, a value drawn from the phenomenon's domain and its own
/// measurement and sampling instant.
pub fn generate(cfg: &GeneratorConfig, v: &Vocabulary) -> Result<Generated, ConfigError> {
    let start = cfg.validate(v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampler = ZipfSampler::new(cfg.value_domain_size, cfg.zipf_exponent);
    let ns = &cfg.namespace;
    let iri = |s: String| Term::Iri(s);
    let procedures: Vec<Term> = (0..cfg.n_procedures).map(|j| iri(format!("{ns}sensor{j}"))).collect();
    let phenomena: Vec<(Term, Term, Term)> = cfg
        .phenomena
        .iter()
        .map(|p| (iri(p.phenomenon.clone()), iri(p.property.clone()), iri(p.unit.clone())))
        .collect();
    let instant_class = iri(format!("{FIXTURE_PREFIX}Instant"));
    let mut graph = Graph::new();
    let mut obs_keys = BTreeSet::new();
    let mut meas_keys = BTreeSet::new();
    let mut add = |s: &Term, p: &Term, o: Term| {
        graph.insert(Triple::new(s.clone(), p.clone(), o).expect("generated terms are valid"));
    };
    for i in 0..cfg.n_observations {
        let proc_idx = rng.gen_range(0..procedures.len());
        let ph_idx = rng.gen_range(0..phenomena.len());
        let value_idx = sampler.sample(&mut rng);
        let (ph, prop, unit) = &phenomena[ph_idx];
        let obs = iri(format!("{ns}obs{i}"));
        let m = iri(format!("{ns}m{i}"));
        let instant = iri(format!("{ns}t{i}"));
        let value = Term::Literal(Literal::plain(value_lexical(value_idx)));
        let at = start + Duration::seconds(cfg.stride_seconds.saturating_mul(i as i64));
        let stamp = Term::Literal(Literal::typed(at.format(TIMESTAMP_FORMAT).to_string(), XSD_DATETIME));

        add(&obs, &v.type_predicate, ph.clone());
        add(&obs, &v.procedure, procedures[proc_idx].clone());
        add(&obs, &v.property, prop.clone());
        add(&obs, &v.result, m.clone());
        add(&obs, &v.sampling_time, instant.clone());
        add(&m, &v.type_predicate, v.measure_data_class.clone());
        add(&m, &v.value, value);
        add(&m, &v.unit, unit.clone());
        add(&instant, &v.timestamp, stamp);
        if cfg.type_instants {
            add(&instant, &v.type_predicate, instant_class.clone());
        }
        obs_keys.insert((proc_idx, ph_idx, value_idx));
        meas_keys.insert((unit.clone(), value_idx));
    }
    let truth = GroundTruth {
        observations: cfg.n_observations,
        observation_groups: obs_keys.len(),
        measurement_groups: meas_keys.len(),
        triples: graph.len(),
    };
    Ok(Generated { graph, truth })
}
