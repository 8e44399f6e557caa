//! Incremental factorization of SSN graphs.
//!
//! Every group of observations sharing `(procedure, phenomenon, property,
//! value, unit)` is described once by a surrogate observation, and every
//! `(value, unit)` pair once by a surrogate measurement. Originals keep
//! their `result` and `samplingTime` edges plus any edge the
//! factorization does not touch, and point to their surrogate with
//! `observationOf`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::RdfError;
use crate::rdf::{parse_term, Graph, Term, Triple};
use crate::ssn::{
    enumerate_groups, measurement_multiplicity, observation_multiplicity, Diagnostic, Group,
    GroupIndex, MeasurementKey, ObservationGroupKey, Vocabulary,
};

pub const DEFAULT_SURROGATE_NAMESPACE: &str = "urn:x-ssnfact:";

#[derive(Debug, Error)]
pub enum FactorizeError {
    #[error("input already contains {0} observationOf edges; refusing to factorize twice")]
    AlreadyFactorized(usize),
    #[error("invalid state file: {0}")]
    State(String),
    #[error(transparent)]
    Rdf(#[from] RdfError),
}

/// Surrogate observation and measurement minted for one group key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SurrogatePair {
    pub observation: Term,
    pub measurement: Term,
}

fn digest_hex(parts: &[&Term], tag: &str) -> String {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    for p in parts {
        h.update([0u8]);
        h.update(p.to_string().as_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

/// Hash of a group key used in surrogate IRIs and state files.
pub fn group_key_hash(key: &ObservationGroupKey) -> String {
    digest_hex(
        &[
            key.procedure(),
            key.phenomenon(),
            key.property(),
            key.value(),
            key.unit(),
        ],
        "obs",
    )
}

pub fn measurement_key_hash(key: &MeasurementKey) -> String {
    digest_hex(&[key.value(), key.unit()], "meas")
}

/// Deterministic surrogate IRIs for a key under `namespace`.
///
/// The observation surrogate depends on all five key components; the
/// measurement surrogate only on `(value, unit)`, so groups with the same
/// reading share it.
pub fn mint_surrogates_in(namespace: &str, key: &ObservationGroupKey) -> SurrogatePair {
    SurrogatePair {
        observation: Term::Iri(format!("{namespace}obs:{}", group_key_hash(key))),
        measurement: Term::Iri(format!(
            "{namespace}meas:{}",
            measurement_key_hash(key.measurement())
        )),
    }
}

pub fn mint_surrogates(key: &ObservationGroupKey) -> SurrogatePair {
    mint_surrogates_in(DEFAULT_SURROGATE_NAMESPACE, key)
}

/// Partial map from original observations/measurements to surrogates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityMapping {
    observations: BTreeMap<Term, Term>,
    measurements: BTreeMap<Term, Term>,
}

impl EntityMapping {
    pub fn get(&self, entity: &Term) -> Option<&Term> {
        self.observations
            .get(entity)
            .or_else(|| self.measurements.get(entity))
    }

    pub fn observations(&self) -> &BTreeMap<Term, Term> {
        &self.observations
    }

    pub fn measurements(&self) -> &BTreeMap<Term, Term> {
        &self.measurements
    }

    pub fn len(&self) -> usize {
        self.observations.len() + self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_observation(&self, entity: &Term) -> bool {
        self.observations.contains_key(entity)
    }

    pub fn is_measurement(&self, entity: &Term) -> bool {
        self.measurements.contains_key(entity)
    }

    pub fn insert_observation(&mut self, original: Term, surrogate: Term) {
        self.observations.insert(original, surrogate);
    }

    pub fn insert_measurement(&mut self, original: Term, surrogate: Term) {
        self.measurements.insert(original, surrogate);
    }

    /// Recovers the mapping from a factorized graph: observations through
    /// `observationOf`, measurements through the matching `result` edges
    /// of original and surrogate.
    pub fn from_factorized(g: &Graph, v: &Vocabulary) -> EntityMapping {
        let mut mapping = EntityMapping::default();
        for t in g.triples_matching(None, Some(&v.observation_of), None) {
            let (obs, _, surrogate) = t.into_parts();
            for m in g.objects(&obs, &v.result) {
                if let [mm] = g.objects(&surrogate, &v.result)[..] {
                    mapping.insert_measurement(m.clone(), mm.clone());
                }
            }
            mapping.insert_observation(obs, surrogate);
        }
        mapping
    }
}

/// Output of a previous run that a new batch can extend.
#[derive(Debug, Clone, Default)]
pub struct FactorizationState {
    pub factorized: Graph,
    pub mapping: EntityMapping,
    pub registry: BTreeMap<ObservationGroupKey, SurrogatePair>,
}

/// Run summary; serialized as the `--report` JSON.
#[derive(Debug, Clone, Default, Serialize)]
pub struct FactorizeReport {
    pub input_triples: usize,
    pub output_triples: usize,
    pub groups: usize,
    pub groups_reused: usize,
    pub groups_created: usize,
    pub observations_factorized: usize,
    pub measurements_factorized: usize,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone)]
pub struct Factorization {
    pub state: FactorizationState,
    pub report: FactorizeReport,
}

impl Factorization {
    pub fn graph(&self) -> &Graph {
        &self.state.factorized
    }

    pub fn mapping(&self) -> &EntityMapping {
        &self.state.mapping
    }
}

/// Settings for [`factorize_with`].
#[derive(Debug, Clone)]
pub struct Factorizer {
    pub namespace: String,
}

impl Default for Factorizer {
    fn default() -> Self {
        Factorizer {
            namespace: DEFAULT_SURROGATE_NAMESPACE.to_string(),
        }
    }
}

pub fn factorize(
    g: &Graph,
    prior: &FactorizationState,
    v: &Vocabulary,
) -> Result<Factorization, FactorizeError> {
    Factorizer::default().factorize(g, prior, v)
}

impl Factorizer {
    /// Factorizes `g` on top of `prior` (which may be empty).
    ///
    /// The output graph contains the prior factorized graph plus the
    /// translation of `g`; the mapping and registry are extended likewise.
    pub fn factorize(
        &self,
        g: &Graph,
        prior: &FactorizationState,
        v: &Vocabulary,
    ) -> Result<Factorization, FactorizeError> {
        let existing = g
            .triples_matching(None, Some(&v.observation_of), None)
            .count();
        if existing > 0 {
            return Err(FactorizeError::AlreadyFactorized(existing));
        }
        let index = enumerate_groups(g, v);
        let mut state = prior.clone();
        let mut report = FactorizeReport {
            input_triples: g.len(),
            groups: index.len(),
            diagnostics: index.diagnostics.clone(),
            ..Default::default()
        };

        let mut minted: BTreeSet<Term> = BTreeSet::new();
        let mut meas_registry: BTreeMap<&MeasurementKey, Term> = BTreeMap::new();
        for (k, pair) in &prior.registry {
            minted.insert(pair.observation.clone());
            minted.insert(pair.measurement.clone());
            meas_registry.insert(k.measurement(), pair.measurement.clone());
        }

        for (key, group) in &index.groups {
            let pair = match prior.registry.get(key) {
                Some(pair) if compact_pattern_holds(&prior.factorized, v, key, pair) => {
                    report.groups_reused += 1;
                    pair.clone()
                }
                _ => {
                    report.groups_created += 1;
                    let fresh = mint_surrogates_in(&self.namespace, key);
                    let taken = |t: &Term, minted: &BTreeSet<Term>| {
                        !minted.contains(t)
                            && (g.id_of(t).is_some() || prior.factorized.id_of(t).is_some())
                    };
                    let measurement = match meas_registry.get(key.measurement()) {
                        Some(m) => m.clone(),
                        None => disambiguate(fresh.measurement, |t| taken(t, &minted)),
                    };
                    let observation = if minted.contains(&fresh.observation) {
                        // hash collision with another key
                        disambiguate(fresh.observation, |t| {
                            minted.contains(t) || taken(t, &minted)
                        })
                    } else {
                        disambiguate(fresh.observation, |t| taken(t, &minted))
                    };
                    minted.insert(observation.clone());
                    minted.insert(measurement.clone());
                    meas_registry.insert(key.measurement(), measurement.clone());
                    SurrogatePair {
                        observation,
                        measurement,
                    }
                }
            };
            for (obs, m) in &group.members {
                state
                    .mapping
                    .insert_observation(obs.clone(), pair.observation.clone());
                state
                    .mapping
                    .insert_measurement(m.clone(), pair.measurement.clone());
            }
            report.observations_factorized += group.len();
            report.measurements_factorized += group.measurements().len();
            state.registry.insert(key.clone(), pair);
        }

        let so: BTreeSet<&Term> = index
            .groups
            .values()
            .flat_map(Group::observations)
            .collect();
        let sm: BTreeSet<&Term> = index
            .groups
            .values()
            .flat_map(|g| g.members.values())
            .collect();
        for t in g.iter() {
            for out in translate_edge(&t, &so, &sm, &state.mapping, v) {
                state.factorized.insert(out);
            }
        }
        report.output_triples = state.factorized.len();
        Ok(Factorization { state, report })
    }
}

fn disambiguate(candidate: Term, taken: impl Fn(&Term) -> bool) -> Term {
    if !taken(&candidate) {
        return candidate;
    }
    let base = candidate.value_str().to_string();
    (1u64..)
        .map(|n| Term::Iri(format!("{base}-{n}")))
        .find(|t| !taken(t))
        .expect("unbounded counter")
}

fn edge(s: &Term, p: &Term, o: &Term) -> Triple {
    Triple::new(s.clone(), p.clone(), o.clone()).expect("translated edges keep term positions")
}

/// Image of one input edge in the factorized graph.
fn translate_edge(
    t: &Triple,
    so: &BTreeSet<&Term>,
    sm: &BTreeSet<&Term>,
    mapping: &EntityMapping,
    v: &Vocabulary,
) -> Vec<Triple> {
    let (s, p, o) = (t.subject(), t.predicate(), t.object());
    let is_obs = so.contains(s);
    let is_meas = sm.contains(s);
    if !is_obs && !is_meas {
        return vec![t.clone()];
    }
    let surrogate = mapping.get(s).expect("group members are mapped");
    if is_obs && p == &v.result && sm.contains(o) {
        let target = mapping.get(o).expect("measurement mapped");
        return vec![
            t.clone(),
            edge(surrogate, p, target),
            edge(s, &v.observation_of, surrogate),
        ];
    }
    let relocates = if p == &v.type_predicate {
        (is_obs && v.is_observation_type(o)) || (is_meas && o == &v.measure_data_class)
    } else {
        (is_obs && (p == &v.procedure || p == &v.property))
            || (is_meas && (p == &v.value || p == &v.unit))
    };
    if relocates {
        vec![edge(surrogate, p, o)]
    } else {
        vec![t.clone()]
    }
}

/// Compact observation and measurement molecules of `key` in `g`.
fn compact_triples(v: &Vocabulary, key: &ObservationGroupKey, pair: &SurrogatePair) -> Vec<Triple> {
    let (om, mm) = (&pair.observation, &pair.measurement);
    vec![
        edge(om, &v.type_predicate, key.phenomenon()),
        edge(om, &v.procedure, key.procedure()),
        edge(om, &v.property, key.property()),
        edge(om, &v.result, mm),
        edge(mm, &v.type_predicate, &v.measure_data_class),
        edge(mm, &v.value, key.value()),
        edge(mm, &v.unit, key.unit()),
    ]
}

fn compact_pattern_holds(
    g: &Graph,
    v: &Vocabulary,
    key: &ObservationGroupKey,
    pair: &SurrogatePair,
) -> bool {
    compact_triples(v, key, pair).iter().all(|t| g.contains(t))
}

/// Outcome of one verification check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: &'static str,
    pub passed: bool,
    pub counterexamples: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == name)
    }
}

const MAX_COUNTEREXAMPLES: usize = 20;

struct Collector {
    name: &'static str,
    bad: Vec<String>,
    total: usize,
}

impl Collector {
    fn new(name: &'static str) -> Self {
        Collector {
            name,
            bad: Vec::new(),
            total: 0,
        }
    }

    fn fail(&mut self, msg: impl FnOnce() -> String) {
        self.total += 1;
        if self.bad.len() < MAX_COUNTEREXAMPLES {
            self.bad.push(msg());
        }
    }

    fn finish(self) -> CheckResult {
        let mut counterexamples = self.bad;
        if self.total > counterexamples.len() {
            counterexamples.push(format!("... {} more", self.total - counterexamples.len()));
        }
        CheckResult {
            check: self.name,
            passed: self.total == 0,
            counterexamples,
        }
    }
}

pub const CHECK_ENTITIES_PRESERVED: &str = "entities_preserved";
pub const CHECK_SURROGATES: &str = "surrogate_molecules";
pub const CHECK_MAPPING: &str = "mapping_domain";
pub const CHECK_EDGES: &str = "edge_translation";
pub const CHECK_MEASUREMENT_MULTIPLICITY: &str = "measurement_multiplicity_one";
pub const CHECK_OBSERVATION_MULTIPLICITY: &str = "observation_multiplicity_one";
pub const CHECK_RECONSTRUCTION: &str = "group_reconstruction";

/// Checks that `g_prime` with `mapping` is a factorized graph of `g`.
pub fn verify_factorized(
    g: &Graph,
    g_prime: &Graph,
    mapping: &EntityMapping,
    v: &Vocabulary,
) -> VerificationReport {
    let index = enumerate_groups(g, v);
    let mut checks = Vec::new();

    let nodes_prime = g_prime.nodes();
    let mut c = Collector::new(CHECK_ENTITIES_PRESERVED);
    for n in g.nodes() {
        if !nodes_prime.contains(&n) {
            c.fail(|| format!("node {n} missing from factorized graph"));
        }
    }
    checks.push(c.finish());

    let mut c = Collector::new(CHECK_SURROGATES);
    let mut pairs: BTreeMap<&ObservationGroupKey, SurrogatePair> = BTreeMap::new();
    for (key, group) in &index.groups {
        let oms: BTreeSet<Option<&Term>> = group.observations().map(|o| mapping.get(o)).collect();
        let mms: BTreeSet<Option<&Term>> = group.members.values().map(|m| mapping.get(m)).collect();
        match (oms.len(), mms.len(), oms.first(), mms.first()) {
            (1, 1, Some(Some(om)), Some(Some(mm))) => {
                let pair = SurrogatePair {
                    observation: (*om).clone(),
                    measurement: (*mm).clone(),
                };
                for t in compact_triples(v, key, &pair) {
                    if !g_prime.contains(&t) {
                        c.fail(|| format!("key {key}: missing {t}"));
                    }
                }
                pairs.insert(key, pair);
            }
            _ => c.fail(|| format!("key {key}: members do not map to a single surrogate pair")),
        }
    }
    let mut seen: BTreeMap<&Term, &ObservationGroupKey> = BTreeMap::new();
    for (key, pair) in &pairs {
        if let Some(other) = seen.insert(&pair.observation, key) {
            c.fail(|| {
                format!(
                    "keys {other} and {key} share surrogate {}",
                    pair.observation
                )
            });
        }
    }
    checks.push(c.finish());

    let mut c = Collector::new(CHECK_MAPPING);
    let g_nodes = g.nodes();
    let expected_obs: BTreeSet<&Term> = index
        .groups
        .values()
        .flat_map(Group::observations)
        .collect();
    let expected_meas: BTreeSet<&Term> = index
        .groups
        .values()
        .flat_map(|g| g.members.values())
        .collect();
    let actual_obs: BTreeSet<&Term> = mapping
        .observations()
        .keys()
        .filter(|k| g_nodes.contains(*k))
        .collect();
    let actual_meas: BTreeSet<&Term> = mapping
        .measurements()
        .keys()
        .filter(|k| g_nodes.contains(*k))
        .collect();
    for extra in actual_obs.difference(&expected_obs) {
        c.fail(|| format!("{extra} mapped as observation but matches no group"));
    }
    for missing in expected_obs.difference(&actual_obs) {
        c.fail(|| format!("observation {missing} not mapped"));
    }
    for extra in actual_meas.difference(&expected_meas) {
        c.fail(|| format!("{extra} mapped as measurement but belongs to no group"));
    }
    for missing in expected_meas.difference(&actual_meas) {
        c.fail(|| format!("measurement {missing} not mapped"));
    }
    checks.push(c.finish());

    let mut c = Collector::new(CHECK_EDGES);
    let so: BTreeSet<&Term> = expected_obs
        .iter()
        .copied()
        .filter(|o| mapping.get(o).is_some())
        .collect();
    let sm: BTreeSet<&Term> = expected_meas
        .iter()
        .copied()
        .filter(|m| mapping.get(m).is_some())
        .collect();
    for t in g.iter() {
        let image = translate_edge(&t, &so, &sm, mapping, v);
        for out in &image {
            if !g_prime.contains(out) {
                c.fail(|| format!("{t} should translate to {out}"));
            }
        }
        if !image.contains(&t) && g_prime.contains(&t) {
            c.fail(|| format!("{t} should have moved to the surrogate"));
        }
    }
    checks.push(c.finish());

    let mut c = Collector::new(CHECK_MEASUREMENT_MULTIPLICITY);
    let mkeys: BTreeSet<&MeasurementKey> = index.groups.keys().map(|k| k.measurement()).collect();
    for mk in mkeys {
        let n = measurement_multiplicity(g_prime, mk, v);
        if n != 1 {
            c.fail(|| format!("({}, {}) has multiplicity {n}", mk.value(), mk.unit()));
        }
    }
    checks.push(c.finish());

    let mut c = Collector::new(CHECK_OBSERVATION_MULTIPLICITY);
    for key in index.groups.keys() {
        let n = observation_multiplicity(g_prime, key, v);
        if n != 1 {
            c.fail(|| format!("key {key} has multiplicity {n}"));
        }
    }
    checks.push(c.finish());

    let mut c = Collector::new(CHECK_RECONSTRUCTION);
    let rebuilt = reconstruct_groups(g_prime, v, |obs| g_nodes.contains(obs));
    if rebuilt.groups != index.groups {
        for (key, group) in &index.groups {
            if rebuilt.groups.get(key) != Some(group) {
                c.fail(|| format!("key {key} not recoverable from factorized graph"));
            }
        }
        for key in rebuilt.groups.keys() {
            if !index.groups.contains_key(key) {
                c.fail(|| format!("factorized graph yields spurious key {key}"));
            }
        }
    }
    checks.push(c.finish());

    VerificationReport { checks }
}

/// Rebuilds the group index of the original graph by joining
/// `observationOf` with the compact molecules.
pub fn reconstruct_groups(
    g_prime: &Graph,
    v: &Vocabulary,
    keep: impl Fn(&Term) -> bool,
) -> GroupIndex {
    let mut index = GroupIndex::default();
    for t in g_prime.triples_matching(None, Some(&v.observation_of), None) {
        let (obs, _, om) = t.into_parts();
        if !keep(&obs) {
            continue;
        }
        let one = |s: &Term, p: &Term| match g_prime.objects(s, p)[..] {
            [x] => Some(x.clone()),
            _ => None,
        };
        let types: Vec<&Term> = g_prime
            .objects(&om, &v.type_predicate)
            .into_iter()
            .filter(|t| v.is_observation_type(t))
            .collect();
        let rebuilt = (|| {
            let ph = match types[..] {
                [t] => t.clone(),
                _ => return None,
            };
            let mm = one(&om, &v.result)?;
            let mk = MeasurementKey::new(one(&mm, &v.value)?, one(&mm, &v.unit)?)?;
            let key =
                ObservationGroupKey::new(one(&om, &v.procedure)?, ph, one(&om, &v.property)?, mk)?;
            Some((key, one(&obs, &v.result)?))
        })();
        if let Some((key, m)) = rebuilt {
            index.groups.entry(key).or_default().members.insert(obs, m);
        }
    }
    index
}

/// JSON sidecar persisted next to a factorized graph.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StateFile {
    /// Path of the factorized graph, relative to the state file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    /// group key hash -> key components and surrogate IRIs
    pub groups: BTreeMap<String, StateGroup>,
    pub observations: BTreeMap<String, String>,
    pub measurements: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateGroup {
    pub procedure: String,
    pub phenomenon: String,
    pub property: String,
    pub value: String,
    pub unit: String,
    pub observation: String,
    pub measurement: String,
}

impl FactorizationState {
    /// Sidecar form; terms are stored in N-Triples syntax.
    pub fn to_state_file(&self, graph: Option<PathBuf>) -> StateFile {
        let groups = self
            .registry
            .iter()
            .map(|(k, pair)| {
                (
                    group_key_hash(k),
                    StateGroup {
                        procedure: k.procedure().to_string(),
                        phenomenon: k.phenomenon().to_string(),
                        property: k.property().to_string(),
                        value: k.value().to_string(),
                        unit: k.unit().to_string(),
                        observation: pair.observation.to_string(),
                        measurement: pair.measurement.to_string(),
                    },
                )
            })
            .collect();
        let render = |m: &BTreeMap<Term, Term>| {
            m.iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect()
        };
        StateFile {
            graph,
            groups,
            observations: render(self.mapping.observations()),
            measurements: render(self.mapping.measurements()),
        }
    }

    /// Rebuilds the state from a sidecar and the factorized graph it describes.
    pub fn from_state_file(file: &StateFile, factorized: Graph) -> Result<Self, FactorizeError> {
        let term = |s: &str| parse_term(s).map_err(|e| FactorizeError::State(format!("{s}: {e}")));
        let mut registry = BTreeMap::new();
        for (hash, g) in &file.groups {
            let mk = MeasurementKey::new(term(&g.value)?, term(&g.unit)?)
                .ok_or_else(|| FactorizeError::State(format!("group {hash}: bad value/unit")))?;
            let key = ObservationGroupKey::new(
                term(&g.procedure)?,
                term(&g.phenomenon)?,
                term(&g.property)?,
                mk,
            )
            .ok_or_else(|| FactorizeError::State(format!("group {hash}: bad key")))?;
            if &group_key_hash(&key) != hash {
                return Err(FactorizeError::State(format!(
                    "group {hash}: hash does not match key"
                )));
            }
            registry.insert(
                key,
                SurrogatePair {
                    observation: term(&g.observation)?,
                    measurement: term(&g.measurement)?,
                },
            );
        }
        let mut mapping = EntityMapping::default();
        for (a, b) in &file.observations {
            mapping.insert_observation(term(a)?, term(b)?);
        }
        for (a, b) in &file.measurements {
            mapping.insert_measurement(term(a)?, term(b)?);
        }
        Ok(FactorizationState {
            factorized,
            mapping,
            registry,
        })
    }

    /// Loads a sidecar and the graph it points to.
    pub fn load(path: &Path) -> Result<Self, FactorizeError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| FactorizeError::State(e.to_string()))?;
        let file: StateFile =
            serde_json::from_str(&text).map_err(|e| FactorizeError::State(e.to_string()))?;
        let graph = match &file.graph {
            Some(rel) => {
                let full = path.parent().unwrap_or(Path::new(".")).join(rel);
                let reader = std::io::BufReader::new(
                    std::fs::File::open(&full)
                        .map_err(|e| FactorizeError::State(format!("{}: {e}", full.display())))?,
                );
                crate::rdf::parse_ntriples(reader)?
            }
            None => Graph::new(),
        };
        Self::from_state_file(&file, graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ex, sensor_example};
    use crate::rdf::{parse_ntriples_str, Literal};

    fn rain_key(value: &str) -> ObservationGroupKey {
        ObservationGroupKey::new(
            ex("LGVI1"),
            ex("RainfallObs"),
            ex("Precipitation"),
            MeasurementKey::new(Term::Literal(Literal::plain(value)), ex("cm")).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn minting_is_deterministic_and_value_sensitive() {
        let a = mint_surrogates(&rain_key("20.0"));
        assert_eq!(a, mint_surrogates(&rain_key("20.0")));
        let b = mint_surrogates(&rain_key("20.5"));
        assert_ne!(a.observation, b.observation);
        assert_ne!(a.measurement, b.measurement);
        assert!(a
            .observation
            .value_str()
            .starts_with(DEFAULT_SURROGATE_NAMESPACE));
    }

    #[test]
    fn measurement_surrogate_ignores_observation_components() {
        let a = rain_key("20.0");
        let b = ObservationGroupKey::new(
            ex("OTHER"),
            ex("RainfallObs"),
            ex("Precipitation"),
            a.measurement().clone(),
        )
        .unwrap();
        let (pa, pb) = (mint_surrogates(&a), mint_surrogates(&b));
        assert_eq!(pa.measurement, pb.measurement);
        assert_ne!(pa.observation, pb.observation);
    }

    #[test]
    fn ten_thousand_keys_do_not_collide() {
        let surrogates: BTreeSet<Term> = (0..10_000)
            .map(|i| mint_surrogates(&rain_key(&format!("{}.{}", i / 10, i % 10))).observation)
            .collect();
        assert_eq!(surrogates.len(), 10_000);
    }

    #[test]
    fn empty_input() {
        let f = factorize(
            &Graph::new(),
            &FactorizationState::default(),
            &Vocabulary::default(),
        )
        .unwrap();
        assert!(f.graph().is_empty());
        assert!(f.mapping().is_empty());
    }

    #[test]
    fn single_canonical_observation() {
        let doc = r#"
<http://example.org/ssn/o> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/ssn/RainfallObs> .
<http://example.org/ssn/o> <http://example.org/ssn/procedure> <http://example.org/ssn/P> .
<http://example.org/ssn/o> <http://example.org/ssn/property> <http://example.org/ssn/Precipitation> .
<http://example.org/ssn/o> <http://example.org/ssn/result> <http://example.org/ssn/m> .
<http://example.org/ssn/o> <http://example.org/ssn/samplingTime> <http://example.org/ssn/i> .
<http://example.org/ssn/m> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/ssn/MeasureData> .
<http://example.org/ssn/m> <http://example.org/ssn/value> "1.5" .
<http://example.org/ssn/m> <http://example.org/ssn/unit> <http://example.org/ssn/cm> .
<http://example.org/ssn/i> <http://example.org/ssn/timestamp> "2004-01-01T00:00:00" .
"#;
        let g = parse_ntriples_str(doc).unwrap();
        assert_eq!(g.len(), 9);
        let v = Vocabulary::default();
        let f = factorize(&g, &FactorizationState::default(), &v).unwrap();
        assert_eq!(f.graph().len(), 11);
        let om = f.mapping().get(&ex("o")).unwrap().clone();
        let mm = f.mapping().get(&ex("m")).unwrap().clone();
        // retained on originals
        for (s, p, o) in [
            (ex("o"), &v.observation_of, om.clone()),
            (ex("o"), &v.result, ex("m")),
            (ex("o"), &v.sampling_time, ex("i")),
        ] {
            assert!(f.graph().contains(&Triple::new(s, p.clone(), o).unwrap()));
        }
        assert_eq!(f.graph().molecule(&om).len(), 4);
        assert_eq!(f.graph().molecule(&mm).len(), 3);
        assert!(verify_factorized(&g, f.graph(), f.mapping(), &v).all_passed());
    }

    #[test]
    fn rejects_double_factorization() {
        let v = Vocabulary::default();
        let f = factorize(&sensor_example(), &FactorizationState::default(), &v).unwrap();
        assert!(matches!(
            factorize(f.graph(), &FactorizationState::default(), &v),
            Err(FactorizeError::AlreadyFactorized(6))
        ));
    }

    #[test]
    fn incomplete_observations_pass_through() {
        let mut g = sensor_example();
        let v = Vocabulary::default();
        // obs1 loses its procedure
        assert!(g.remove(&Triple::new(ex("obs1"), v.procedure.clone(), ex("LGVI1")).unwrap()));
        let f = factorize(&g, &FactorizationState::default(), &v).unwrap();
        assert_eq!(f.report.diagnostics.len(), 1);
        assert!(f.mapping().get(&ex("obs1")).is_none());
        assert!(f.mapping().get(&ex("m1")).is_none());
        for t in g.molecule(&ex("obs1")) {
            assert!(f.graph().contains(&t));
        }
        for t in g.molecule(&ex("m1")) {
            assert!(f.graph().contains(&t));
        }
    }

    #[test]
    fn surrogate_collision_gets_counter() {
        let v = Vocabulary::default();
        let mut g = sensor_example();
        let idx = enumerate_groups(&g, &v);
        let key = idx.groups.keys().next().unwrap();
        let clash = mint_surrogates(key).observation;
        g.insert(
            Triple::new(
                clash.clone(),
                ex("label"),
                Term::Literal(Literal::plain("x")),
            )
            .unwrap(),
        );
        let f = factorize(&g, &FactorizationState::default(), &v).unwrap();
        let used = &f.state.registry[key].observation;
        assert_ne!(used, &clash);
        assert!(used.value_str().ends_with("-1"));
        assert!(verify_factorized(&g, f.graph(), f.mapping(), &v).all_passed());
    }

    #[test]
    fn state_file_round_trip() {
        let v = Vocabulary::default();
        let f = factorize(&sensor_example(), &FactorizationState::default(), &v).unwrap();
        let file = f.state.to_state_file(None);
        let json = serde_json::to_string(&file).unwrap();
        let back: StateFile = serde_json::from_str(&json).unwrap();
        let state = FactorizationState::from_state_file(&back, f.graph().clone()).unwrap();
        assert_eq!(state.registry, f.state.registry);
        assert_eq!(state.mapping, f.state.mapping);
        assert_eq!(
            EntityMapping::from_factorized(f.graph(), &v),
            f.state.mapping
        );
    }

    #[test]
    fn negative_controls() {
        let v = Vocabulary::default();
        let g = sensor_example();
        let f = factorize(&g, &FactorizationState::default(), &v).unwrap();
        let report = verify_factorized(&g, &g, f.mapping(), &v);
        assert!(!report.check(CHECK_MEASUREMENT_MULTIPLICITY).unwrap().passed);
        assert!(!report.check(CHECK_OBSERVATION_MULTIPLICITY).unwrap().passed);

        let key = enumerate_groups(&g, &v)
            .groups
            .keys()
            .next()
            .unwrap()
            .clone();
        let pair = f.state.registry[&key].clone();
        let mut broken = f.graph().clone();
        broken.remove(&edge(&pair.observation, &v.procedure, key.procedure()));
        let report = verify_factorized(&g, &broken, f.mapping(), &v);
        let check = report.check(CHECK_SURROGATES).unwrap();
        assert!(!check.passed);
        assert!(check.counterexamples[0].contains(&key.to_string()));
    }

    #[test]
    fn sensor_example_matches_hand_factorized_graph() {
        let v = Vocabulary::default();
        let g = sensor_example();
        let f = factorize(&g, &FactorizationState::default(), &v).unwrap();
        assert_eq!(f.graph().len(), 44);
        let names = |obs: &str, meas: &str| (f.mapping().get(&ex(obs)).unwrap().clone(), ex(meas));
        let mut rename: BTreeMap<Term, Term> = BTreeMap::new();
        for (orig, fixture) in [
            ("obs1", "obsM1"),
            ("obs4", "obsM2"),
            ("m1", "mM1"),
            ("m4", "mM2"),
        ] {
            rename.insert(names(orig, fixture).0, names(orig, fixture).1);
        }
        let renamed: Graph = f
            .graph()
            .iter()
            .map(|t| {
                let (s, p, o) = t.into_parts();
                let r = |x: Term| rename.get(&x).cloned().unwrap_or(x);
                Triple::new(r(s), p, r(o)).unwrap()
            })
            .collect();
        assert_eq!(renamed, crate::fixtures::sensor_example_factorized());
        let report = verify_factorized(&g, f.graph(), f.mapping(), &v);
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn second_batch_reuses_registry() {
        let v = Vocabulary::default();
        let g = sensor_example();
        let (mut first, mut second) = (Graph::new(), Graph::new());
        for t in g.iter() {
            let s = t.subject().local_name().to_string();
            let late = ["obs3", "obs6", "m3", "m6", "t3", "t6"].contains(&s.as_str());
            if late {
                second.insert(t);
            } else {
                first.insert(t);
            }
        }
        let f1 = factorize(&first, &FactorizationState::default(), &v).unwrap();
        let f2 = factorize(&second, &f1.state, &v).unwrap();
        assert_eq!(f2.report.groups_reused, 2);
        assert_eq!(f2.report.groups_created, 0);
        let whole = factorize(&g, &FactorizationState::default(), &v).unwrap();
        assert_eq!(f2.graph(), whole.graph());
        assert_eq!(f2.mapping(), whole.mapping());
    }
}
