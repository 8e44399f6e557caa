//! SSN vocabulary binding, observation/measurement recognition and
//! multiplicity measures.
//!
//! An observation is pattern-complete when it carries exactly one
//! recognised type, one `procedure`, one `property` and one `result`, and
//! its measurement carries the `MeasureData` type, one `value` and one
//! `unit`. Those eight triples determine the observation's group key
//! `(procedure, phenomenon, property, value, unit)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rdf::{Graph, Literal, Term, RDF_TYPE};

pub const FIXTURE_PREFIX: &str = "http://example.org/ssn/";

#[derive(Debug, Error)]
pub enum VocabularyError {
    #[error("vocabulary role {role} has invalid IRI {iri:?}")]
    InvalidIri { role: &'static str, iri: String },
    #[error("vocabulary roles {0} and {1} are bound to the same IRI")]
    DuplicateRole(&'static str, &'static str),
    #[error("cannot read vocabulary: {0}")]
    Parse(String),
}

/// IRIs bound to the roles used by factorization and query rewriting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub observation_class: Term,
    pub measure_data_class: Term,
    pub type_predicate: Term,
    pub procedure: Term,
    pub property: Term,
    pub result: Term,
    pub sampling_time: Term,
    pub value: Term,
    pub unit: Term,
    pub observation_of: Term,
    pub timestamp: Term,
    /// Classes whose instances count as observations, besides `observation_class`.
    pub observation_phenomena: BTreeSet<Term>,
}

/// On-disk form: a JSON object mapping role names to IRIs. Missing roles
/// keep their default binding.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VocabularyFile {
    pub observation_class: Option<String>,
    pub measure_data_class: Option<String>,
    pub type_predicate: Option<String>,
    pub procedure: Option<String>,
    pub property: Option<String>,
    pub result: Option<String>,
    pub sampling_time: Option<String>,
    pub value: Option<String>,
    pub unit: Option<String>,
    pub observation_of: Option<String>,
    pub timestamp: Option<String>,
    pub observation_phenomena: Option<Vec<String>>,
}

/// Phenomenon classes known to the default vocabulary.
pub const DEFAULT_PHENOMENA: &[&str] = &[
    "RainfallObs",
    "TempObs",
    "WindDirectionObs",
    "WindSpeedObs",
    "RelativeHumidityObs",
    "PressureObs",
    "VisibilityObs",
    "SnowfallObs",
];

fn fixture(local: &str) -> Term {
    Term::Iri(format!("{FIXTURE_PREFIX}{local}"))
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            observation_class: fixture("Observation"),
            measure_data_class: fixture("MeasureData"),
            type_predicate: Term::Iri(RDF_TYPE.to_string()),
            procedure: fixture("procedure"),
            property: fixture("property"),
            result: fixture("result"),
            sampling_time: fixture("samplingTime"),
            value: fixture("value"),
            unit: fixture("unit"),
            observation_of: fixture("observationOf"),
            timestamp: fixture("timestamp"),
            observation_phenomena: DEFAULT_PHENOMENA.iter().map(|p| fixture(p)).collect(),
        }
    }
}

impl Vocabulary {
    fn roles(&self) -> [(&'static str, &Term); 11] {
        [
            ("observation_class", &self.observation_class),
            ("measure_data_class", &self.measure_data_class),
            ("type_predicate", &self.type_predicate),
            ("procedure", &self.procedure),
            ("property", &self.property),
            ("result", &self.result),
            ("sampling_time", &self.sampling_time),
            ("value", &self.value),
            ("unit", &self.unit),
            ("observation_of", &self.observation_of),
            ("timestamp", &self.timestamp),
        ]
    }

    pub fn validate(&self) -> Result<(), VocabularyError> {
        let roles = self.roles();
        for (i, (name, term)) in roles.iter().enumerate() {
            if !term.is_iri() {
                return Err(VocabularyError::InvalidIri {
                    role: name,
                    iri: term.to_string(),
                });
            }
            if let Some((other, _)) = roles[..i].iter().find(|(_, t)| t == term) {
                return Err(VocabularyError::DuplicateRole(other, name));
            }
        }
        Ok(())
    }

    pub fn from_file(file: VocabularyFile) -> Result<Vocabulary, VocabularyError> {
        let mut v = Vocabulary::default();
        let set = |slot: &mut Term, role: &'static str, value: Option<String>| {
            if let Some(iri) = value {
                *slot = Term::iri(iri.clone())
                    .map_err(|_| VocabularyError::InvalidIri { role, iri })?;
            }
            Ok::<_, VocabularyError>(())
        };
        set(
            &mut v.observation_class,
            "observation_class",
            file.observation_class,
        )?;
        set(
            &mut v.measure_data_class,
            "measure_data_class",
            file.measure_data_class,
        )?;
        set(&mut v.type_predicate, "type_predicate", file.type_predicate)?;
        set(&mut v.procedure, "procedure", file.procedure)?;
        set(&mut v.property, "property", file.property)?;
        set(&mut v.result, "result", file.result)?;
        set(&mut v.sampling_time, "sampling_time", file.sampling_time)?;
        set(&mut v.value, "value", file.value)?;
        set(&mut v.unit, "unit", file.unit)?;
        set(&mut v.observation_of, "observation_of", file.observation_of)?;
        set(&mut v.timestamp, "timestamp", file.timestamp)?;
        if let Some(list) = file.observation_phenomena {
            v.observation_phenomena = list
                .into_iter()
                .map(|iri| {
                    Term::iri(iri.clone()).map_err(|_| VocabularyError::InvalidIri {
                        role: "observation_phenomena",
                        iri,
                    })
                })
                .collect::<Result<_, _>>()?;
        }
        v.validate()?;
        Ok(v)
    }

    pub fn from_json(text: &str) -> Result<Vocabulary, VocabularyError> {
        let file: VocabularyFile =
            serde_json::from_str(text).map_err(|e| VocabularyError::Parse(e.to_string()))?;
        Vocabulary::from_file(file)
    }

    /// Whether `class` marks its instances as observations.
    pub fn is_observation_type(&self, class: &Term) -> bool {
        class == &self.observation_class || self.observation_phenomena.contains(class)
    }
}

/// `(value, unit)` of a measurement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementKey {
    value: Term,
    unit: Term,
}

impl MeasurementKey {
    /// `value` must be a literal and `unit` an IRI.
    pub fn new(value: Term, unit: Term) -> Option<Self> {
        (value.is_literal() && unit.is_iri()).then_some(MeasurementKey { value, unit })
    }

    pub fn value(&self) -> &Term {
        &self.value
    }

    pub fn unit(&self) -> &Term {
        &self.unit
    }

    pub fn literal(&self) -> &Literal {
        self.value.as_literal().expect("checked in constructor")
    }
}

/// `(procedure, phenomenon, property, value, unit)` of an observation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservationGroupKey {
    procedure: Term,
    phenomenon: Term,
    property: Term,
    measurement: MeasurementKey,
}

impl ObservationGroupKey {
    pub fn new(
        procedure: Term,
        phenomenon: Term,
        property: Term,
        measurement: MeasurementKey,
    ) -> Option<Self> {
        (procedure.is_iri() && phenomenon.is_iri() && property.is_iri()).then_some(
            ObservationGroupKey {
                procedure,
                phenomenon,
                property,
                measurement,
            },
        )
    }

    pub fn procedure(&self) -> &Term {
        &self.procedure
    }
    pub fn phenomenon(&self) -> &Term {
        &self.phenomenon
    }
    pub fn property(&self) -> &Term {
        &self.property
    }
    pub fn measurement(&self) -> &MeasurementKey {
        &self.measurement
    }
    pub fn value(&self) -> &Term {
        self.measurement.value()
    }
    pub fn unit(&self) -> &Term {
        self.measurement.unit()
    }
}

impl fmt::Display for ObservationGroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.procedure,
            self.phenomenon,
            self.property,
            self.value(),
            self.unit()
        )
    }
}

/// Observations (`SO`) and their measurements (`SM`) sharing one group key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Group {
    /// observation -> its measurement
    pub members: BTreeMap<Term, Term>,
}

impl Group {
    pub fn observations(&self) -> impl Iterator<Item = &Term> {
        self.members.keys()
    }

    pub fn measurements(&self) -> BTreeSet<&Term> {
        self.members.values().collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// One of the eight triples of the group pattern is missing.
    Incomplete { missing: String },
    /// A property assumed functional has several values.
    NotFunctional { property: String },
    /// A measurement is the result of more than one observation.
    SharedMeasurement { measurement: String },
    /// A key component has the wrong term kind (e.g. a non-literal value).
    Malformed { component: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub entity: String,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

/// Group key -> members, plus the observations that fit no group.
#[derive(Debug, Clone, Default)]
pub struct GroupIndex {
    pub groups: BTreeMap<ObservationGroupKey, Group>,
    pub diagnostics: Vec<Diagnostic>,
}

impl GroupIndex {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn observation_count(&self) -> usize {
        self.groups.values().map(Group::len).sum()
    }

    /// observation -> (key, measurement)
    pub fn by_observation(&self) -> BTreeMap<&Term, (&ObservationGroupKey, &Term)> {
        self.groups
            .iter()
            .flat_map(|(k, g)| g.members.iter().map(move |(o, m)| (o, (k, m))))
            .collect()
    }
}

/// Number of measurements `m` with `(m type MeasureData)`, `(m unit uom)` and `(m value val)`.
pub fn measurement_multiplicity(g: &Graph, key: &MeasurementKey, v: &Vocabulary) -> usize {
    measurements_with(g, key, v).len()
}

fn measurements_with<'g>(g: &'g Graph, key: &MeasurementKey, v: &Vocabulary) -> BTreeSet<&'g Term> {
    let by_value: BTreeSet<&Term> = g.subjects(&v.value, key.value()).into_iter().collect();
    let by_unit: BTreeSet<&Term> = g.subjects(&v.unit, key.unit()).into_iter().collect();
    g.subjects(&v.type_predicate, &v.measure_data_class)
        .into_iter()
        .filter(|m| by_value.contains(m) && by_unit.contains(m))
        .collect()
}

/// Number of observations matching the full eight-triple pattern of `key`.
pub fn observation_multiplicity(g: &Graph, key: &ObservationGroupKey, v: &Vocabulary) -> usize {
    let mut found = BTreeSet::new();
    for m in measurements_with(g, key.measurement(), v) {
        for obs in g.subjects(&v.result, m) {
            let has = |p: &Term, o: &Term| g.objects(obs, p).contains(&o);
            if has(&v.type_predicate, key.phenomenon())
                && has(&v.procedure, key.procedure())
                && has(&v.property, key.property())
            {
                found.insert(obs);
            }
        }
    }
    found.len()
}

/// Enumerates the group index of a graph.
///
/// Observations that are incomplete, or that violate the functionality of
/// `procedure`, `property`, `result`, `value`, `unit`, the uniqueness of
/// the recognised type, or the inverse functionality of `result`, end up
/// in no group and are reported as diagnostics.
pub fn enumerate_groups(g: &Graph, v: &Vocabulary) -> GroupIndex {
    let mut index = GroupIndex::default();
    let mut candidates: BTreeSet<&Term> = BTreeSet::new();
    for class in std::iter::once(&v.observation_class).chain(&v.observation_phenomena) {
        candidates.extend(g.subjects(&v.type_predicate, class));
    }
    for obs in candidates {
        match classify_observation(g, v, obs) {
            Ok((key, m)) => {
                index
                    .groups
                    .entry(key)
                    .or_default()
                    .members
                    .insert(obs.clone(), m.clone());
            }
            Err(kind) => index.diagnostics.push(Diagnostic {
                entity: obs.to_string(),
                kind,
            }),
        }
    }
    index
}

fn single<'g>(g: &'g Graph, s: &Term, p: &Term, what: &str) -> Result<&'g Term, DiagnosticKind> {
    let objs = g.objects(s, p);
    match objs.len() {
        1 => Ok(objs[0]),
        0 => Err(DiagnosticKind::Incomplete {
            missing: what.to_string(),
        }),
        _ => Err(DiagnosticKind::NotFunctional {
            property: what.to_string(),
        }),
    }
}

fn classify_observation<'g>(
    g: &'g Graph,
    v: &Vocabulary,
    obs: &Term,
) -> Result<(ObservationGroupKey, &'g Term), DiagnosticKind> {
    let types: Vec<&Term> = g
        .objects(obs, &v.type_predicate)
        .into_iter()
        .filter(|t| v.is_observation_type(t))
        .collect();
    if types.len() > 1 {
        return Err(DiagnosticKind::NotFunctional {
            property: "observation type".into(),
        });
    }
    let phenomenon = types[0];
    let procedure = single(g, obs, &v.procedure, "procedure")?;
    let property = single(g, obs, &v.property, "property")?;
    let m = single(g, obs, &v.result, "result")?;
    if !g
        .objects(m, &v.type_predicate)
        .contains(&&v.measure_data_class)
    {
        return Err(DiagnosticKind::Incomplete {
            missing: "measurement type".into(),
        });
    }
    let value = single(g, m, &v.value, "value")?;
    let unit = single(g, m, &v.unit, "unit")?;
    if g.subjects(&v.result, m).len() > 1 {
        return Err(DiagnosticKind::SharedMeasurement {
            measurement: m.to_string(),
        });
    }
    let mkey =
        MeasurementKey::new(value.clone(), unit.clone()).ok_or(DiagnosticKind::Malformed {
            component: "value/unit".into(),
        })?;
    let key = ObservationGroupKey::new(
        procedure.clone(),
        phenomenon.clone(),
        property.clone(),
        mkey,
    )
    .ok_or(DiagnosticKind::Malformed {
        component: "procedure/phenomenon/property".into(),
    })?;
    Ok((key, m))
}

/// `<C, SP, IntraL, InterL>` for one class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClassTemplate {
    pub class: Term,
    /// Predicates (other than the type predicate) used by instances.
    pub properties: BTreeSet<Term>,
    /// `(predicate, range class)` where the object is typed in the same graph.
    pub intra_links: BTreeSet<(Term, Term)>,
    /// Object predicates whose objects carry no type in this graph.
    pub inter_links: BTreeSet<Term>,
}

/// One class template per class used as an `rdf:type` object.
pub fn extract_class_templates(g: &Graph, v: &Vocabulary) -> BTreeSet<ClassTemplate> {
    let mut classes: BTreeSet<&Term> = BTreeSet::new();
    for t in g.triples_matching(None, Some(&v.type_predicate), None) {
        let (_, _, class) = t.into_parts();
        if let Some(id) = g.id_of(&class) {
            classes.insert(g.term(id));
        }
    }
    classes
        .into_iter()
        .map(|class| {
            let mut ct = ClassTemplate {
                class: class.clone(),
                properties: BTreeSet::new(),
                intra_links: BTreeSet::new(),
                inter_links: BTreeSet::new(),
            };
            for inst in g.subjects(&v.type_predicate, class) {
                for t in g.triples_matching(Some(inst), None, None) {
                    let (_, p, o) = t.into_parts();
                    if p == v.type_predicate {
                        continue;
                    }
                    if !o.is_literal() {
                        let ranges = g.objects(&o, &v.type_predicate);
                        if ranges.is_empty() {
                            ct.inter_links.insert(p.clone());
                        }
                        for r in ranges {
                            ct.intra_links.insert((p.clone(), r.clone()));
                        }
                    }
                    ct.properties.insert(p);
                }
            }
            ct
        })
        .collect()
}
