//! Builders for the four table layouts.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::factorize::EntityMapping;
use crate::rdf::{Graph, Term};
use crate::ssn::{enumerate_groups, Vocabulary};

use super::relation::{Cell, Relation};
use super::TabularError;

/// Extra column name and how to compute its cell from the entity.
type ExtraColumn<'a> = (&'a str, &'a dyn Fn(&Term) -> Option<Term>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TableSetKind {
    Universal,
    Factorized,
    Ct,
    FactorizedCt,
}

impl TableSetKind {
    /// Short name used in file names and on the command line.
    pub fn label(self) -> &'static str {
        match self {
            TableSetKind::Universal => "universal",
            TableSetKind::Factorized => "factorized",
            TableSetKind::Ct => "ct",
            TableSetKind::FactorizedCt => "fct",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableSet {
    pub kind: TableSetKind,
    pub relations: BTreeMap<String, Relation>,
    /// Entities left out of the tables, with the reason.
    pub omitted: Vec<String>,
}

impl TableSet {
    fn new(kind: TableSetKind) -> Self {
        TableSet {
            kind,
            relations: BTreeMap::new(),
            omitted: Vec::new(),
        }
    }

    pub fn get(&self, name: &str) -> Result<&Relation, TabularError> {
        self.relations
            .get(name)
            .ok_or_else(|| TabularError::UnknownRelation(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Relation, TabularError> {
        self.relations
            .get_mut(name)
            .ok_or_else(|| TabularError::UnknownRelation(name.to_string()))
    }

    fn add(&mut self, r: Relation) {
        self.relations.insert(r.name().to_string(), r);
    }
}

pub const UNIVERSAL: &str = "Observation Universal";
pub const OBSERVATION: &str = "Observation";
pub const COMPACT_OBSERVATION: &str = "Compact Observation Molecule";
pub const COMPACT_MEASUREMENT: &str = "Compact Measurement Molecule";

pub const UNIVERSAL_SCHEMA: [&str; 9] = [
    "ObsID",
    "Type",
    "Procedure",
    "Property",
    "MID",
    "SamplingTime",
    "Value",
    "Unit",
    "Timestamp",
];
pub const OBSERVATION_SCHEMA: [&str; 5] = ["ObsID", "SamplingTime", "Timestamp", "MID", "ObsMID"];
pub const COMPACT_OBSERVATION_SCHEMA: [&str; 5] = ["ObsMID", "Type", "Procedure", "Property", "MMID"];
pub const COMPACT_MEASUREMENT_SCHEMA: [&str; 3] = ["MMID", "Value", "Unit"];

fn one<'g>(g: &'g Graph, s: &Term, p: &Term) -> Option<&'g Term> {
    match g.objects(s, p)[..] {
        [o] => Some(o),
        _ => None,
    }
}

/// Sampling instant and its timestamp, when both are single-valued.
fn sampling<'g>(g: &'g Graph, obs: &Term, v: &Vocabulary) -> Option<(&'g Term, &'g Term)> {
    let i = one(g, obs, &v.sampling_time)?;
    Some((i, one(g, i, &v.timestamp)?))
}

/// One row per pattern-complete observation with a single sampling
/// instant and timestamp.
pub fn build_universal(g: &Graph, v: &Vocabulary) -> TableSet {
    let mut ts = TableSet::new(TableSetKind::Universal);
    let mut rel = Relation::new(UNIVERSAL, &UNIVERSAL_SCHEMA, &["ObsID"]).expect("static schema");
    let index = enumerate_groups(g, v);
    for d in &index.diagnostics {
        ts.omitted.push(format!("{}: {:?}", d.entity, d.kind));
    }
    for (key, group) in &index.groups {
        for (obs, m) in &group.members {
            let Some((i, t)) = sampling(g, obs, v) else {
                ts.omitted.push(format!("{obs}: no single samplingTime with timestamp"));
                continue;
            };
            let row = [
                obs,
                key.phenomenon(),
                key.procedure(),
                key.property(),
                m,
                i,
                key.value(),
                key.unit(),
                t,
            ];
            rel.insert(row.iter().map(|t| Some((*t).clone())).collect())
                .expect("arity");
        }
    }
    ts.add(rel);
    ts
}

/// Observation, compact observation and compact measurement relations.
pub fn build_factorized_tables(
    g_prime: &Graph,
    mapping: &EntityMapping,
    v: &Vocabulary,
) -> Result<TableSet, TabularError> {
    let mut ts = TableSet::new(TableSetKind::Factorized);
    let mut obs_rel = Relation::new(OBSERVATION, &OBSERVATION_SCHEMA, &["ObsID"]).expect("static schema");
    let mut com = Relation::new(COMPACT_OBSERVATION, &COMPACT_OBSERVATION_SCHEMA, &["ObsMID"]).expect("static schema");
    let mut cmm = Relation::new(COMPACT_MEASUREMENT, &COMPACT_MEASUREMENT_SCHEMA, &["MMID"]).expect("static schema");
    let integrity = |what: String| TabularError::ReferentialIntegrity(what);

    let mut surrogates = BTreeSet::new();
    for (obs, om) in mapping.observations() {
        if !g_prime.objects(obs, &v.observation_of).contains(&om) {
            return Err(integrity(format!("{obs} is not linked to its surrogate {om}")));
        }
        surrogates.insert(om);
        let (Some(m), Some((i, t))) = (one(g_prime, obs, &v.result), sampling(g_prime, obs, v)) else {
            ts.omitted.push(format!("{obs}: no single result, samplingTime and timestamp"));
            continue;
        };
        let row = [obs, i, t, m, om];
        obs_rel
            .insert(row.iter().map(|t| Some((*t).clone())).collect())
            .expect("arity");
    }
    let mut measurement_surrogates: BTreeSet<&Term> = mapping.measurements().values().collect();
    for om in surrogates {
        let types: Vec<&Term> = g_prime
            .objects(om, &v.type_predicate)
            .into_iter()
            .filter(|t| v.is_observation_type(t))
            .collect();
        let ty = match types[..] {
            [t] => t,
            _ => return Err(integrity(format!("surrogate {om} has no single observation type"))),
        };
        let get = |p: &Term, what: &str| one(g_prime, om, p).ok_or_else(|| integrity(format!("surrogate {om} lacks a single {what}")));
        let mm = get(&v.result, "result")?;
        measurement_surrogates.insert(mm);
        let row = [om, ty, get(&v.procedure, "procedure")?, get(&v.property, "property")?, mm];
        com.insert(row.iter().map(|t| Some((*t).clone())).collect())
            .expect("arity");
    }
    for mm in measurement_surrogates {
        let get = |p: &Term, what: &str| one(g_prime, mm, p).ok_or_else(|| integrity(format!("surrogate {mm} lacks a single {what}")));
        let row = [mm, get(&v.value, "value")?, get(&v.unit, "unit")?];
        cmm.insert(row.iter().map(|t| Some((*t).clone())).collect())
            .expect("arity");
    }
    ts.add(obs_rel);
    ts.add(com);
    ts.add(cmm);
    Ok(ts)
}

/// Attribute name for a predicate: its capitalised local name.
pub fn column_name(p: &Term) -> String {
    let local = p.local_name();
    let mut chars = local.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => local.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ClassRole {
    Observation,
    Measurement,
    Other,
}

/// Class membership and derived column names shared by both CT layouts.
struct ClassLayout<'g> {
    g: &'g Graph,
    v: &'g Vocabulary,
    members: BTreeMap<Term, BTreeSet<Term>>,
    member_of: BTreeMap<Term, BTreeSet<Term>>,
    key_columns: BTreeMap<Term, String>,
}

impl<'g> ClassLayout<'g> {
    fn new(g: &'g Graph, v: &'g Vocabulary, members: BTreeMap<Term, BTreeSet<Term>>) -> Self {
        let mut member_of: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
        for (c, es) in &members {
            for e in es {
                member_of.entry(e.clone()).or_default().insert(c.clone());
            }
        }
        let mut layout = ClassLayout {
            g,
            v,
            members,
            member_of,
            key_columns: BTreeMap::new(),
        };
        let mut linking: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
        for es in layout.members.values() {
            for e in es {
                for (p, o) in layout.edges(e) {
                    for r in layout.member_of.get(&o).into_iter().flatten() {
                        linking.entry(r.clone()).or_default().insert(p.clone());
                    }
                }
            }
        }
        for c in layout.members.keys() {
            let col = match layout.role(c) {
                ClassRole::Observation => "ObsID".to_string(),
                ClassRole::Measurement => "MID".to_string(),
                ClassRole::Other => match linking.get(c).map(|ps| ps.iter().collect::<Vec<_>>()) {
                    Some(ps) if ps.len() == 1 => column_name(ps[0]),
                    _ => format!("{}ID", c.local_name()),
                },
            };
            layout.key_columns.insert(c.clone(), col);
        }
        layout
    }

    fn role(&self, c: &Term) -> ClassRole {
        if c == &self.v.measure_data_class {
            ClassRole::Measurement
        } else if self.v.is_observation_type(c) {
            ClassRole::Observation
        } else {
            ClassRole::Other
        }
    }

    fn edges(&self, e: &Term) -> Vec<(Term, Term)> {
        self.g
            .triples_matching(Some(e), None, None)
            .map(|t| {
                let (_, p, o) = t.into_parts();
                (p, o)
            })
            .filter(|(p, _)| p != &self.v.type_predicate && p != &self.v.observation_of)
            .collect()
    }

    fn is_member(&self, o: &Term) -> bool {
        self.member_of.contains_key(o)
    }

    /// Attribute predicates of `entities` in column order, skipping `exclude`.
    fn attributes(&self, entities: &BTreeSet<Term>, exclude: &[&Term]) -> Vec<Term> {
        let mut preds = BTreeSet::new();
        for e in entities {
            for (p, o) in self.edges(e) {
                if !self.is_member(&o) && !exclude.contains(&&p) {
                    preds.insert(p);
                }
            }
        }
        let v = self.v;
        let fixed = [&v.procedure, &v.property, &v.value, &v.unit];
        let mut out: Vec<Term> = fixed.iter().filter(|p| preds.contains(**p)).map(|p| (*p).clone()).collect();
        out.extend(preds.into_iter().filter(|p| !fixed.contains(&p)));
        out
    }

    /// Single non-member object of `p` on `e`, otherwise null.
    fn attribute_cell(&self, e: &Term, p: &Term) -> Cell {
        let values: Vec<&Term> = self.g.objects(e, p).into_iter().filter(|o| !self.is_member(o)).collect();
        match values[..] {
            [o] => Some(o.clone()),
            _ => None,
        }
    }

    fn entity_relation(&self, name: String, key: &str, entities: &BTreeSet<Term>, attrs: &[Term], extra: Option<ExtraColumn<'_>>) -> Relation {
        let mut schema = vec![key.to_string()];
        if let Some((col, _)) = extra {
            schema.push(col.to_string());
        }
        schema.extend(attrs.iter().map(column_name));
        let mut rel = Relation::with_owned(name, schema, vec![key.to_string()]).expect("distinct columns");
        for e in entities {
            let mut row = vec![Some(e.clone())];
            if let Some((_, f)) = extra {
                row.push(f(e));
            }
            row.extend(attrs.iter().map(|p| self.attribute_cell(e, p)));
            rel.insert(row).expect("arity");
        }
        rel
    }

    /// Binary link relations from members of `c` to members of other classes.
    fn link_relations(&self, c: &Term, entities: &BTreeSet<Term>, exclude: &[&Term]) -> Vec<Relation> {
        let mut links: BTreeMap<(Term, Term), BTreeSet<(Term, Term)>> = BTreeMap::new();
        for e in entities {
            for (p, o) in self.edges(e) {
                if exclude.contains(&&p) {
                    continue;
                }
                for r in self.member_of.get(&o).into_iter().flatten() {
                    links.entry((p.clone(), r.clone())).or_default().insert((e.clone(), o.clone()));
                }
            }
        }
        let mut per_range: BTreeMap<&Term, usize> = BTreeMap::new();
        for (_, r) in links.keys() {
            *per_range.entry(r).or_default() += 1;
        }
        links
            .iter()
            .map(|((p, r), pairs)| {
                let role = match self.role(r) {
                    ClassRole::Measurement => "Measurement".to_string(),
                    _ => r.local_name().to_string(),
                };
                let name = if per_range[r] == 1 {
                    format!("{} {role}", c.local_name())
                } else {
                    format!("{} {} {role}", c.local_name(), column_name(p))
                };
                let from = self.key_columns[c].clone();
                let mut to = self.key_columns[r].clone();
                if to == from {
                    to = format!("{to}Target");
                }
                let mut rel = Relation::with_owned(name, vec![from.clone(), to.clone()], vec![from, to]).expect("distinct columns");
                for (a, b) in pairs {
                    rel.insert(vec![Some(a.clone()), Some(b.clone())]).expect("arity");
                }
                rel
            })
            .collect()
    }
}

fn typed_members(g: &Graph, v: &Vocabulary, skip: impl Fn(&Term) -> bool) -> BTreeMap<Term, BTreeSet<Term>> {
    let mut out: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
    for t in g.triples_matching(None, Some(&v.type_predicate), None) {
        let (s, _, c) = t.into_parts();
        if !skip(&c) {
            out.entry(c).or_default().insert(s);
        }
    }
    out
}

/// One relation per class plus one binary relation per link between
/// classes. Observations and measurements enter only when they belong to
/// an observation group; attribute cells are null unless single-valued.
pub fn build_ct_tables(g: &Graph, v: &Vocabulary) -> TableSet {
    let mut ts = TableSet::new(TableSetKind::Ct);
    let index = enumerate_groups(g, v);
    for d in &index.diagnostics {
        ts.omitted.push(format!("{}: {:?}", d.entity, d.kind));
    }
    let mut members = typed_members(g, v, |c| v.is_observation_type(c) || c == &v.measure_data_class);
    for (key, group) in &index.groups {
        members
            .entry(key.phenomenon().clone())
            .or_default()
            .extend(group.observations().cloned());
        members
            .entry(v.measure_data_class.clone())
            .or_default()
            .extend(group.members.values().cloned());
    }
    let layout = ClassLayout::new(g, v, members);
    for (c, entities) in &layout.members {
        let attrs = layout.attributes(entities, &[]);
        let key = &layout.key_columns[c];
        ts.add(layout.entity_relation(format!("{} CT", c.local_name()), key, entities, &attrs, None));
        for link in layout.link_relations(c, entities, &[]) {
            ts.add(link);
        }
    }
    ts
}

/// Compact `F-` relations over surrogates, `<class> Mapping` relations
/// from originals to surrogates (with attributes that stay on originals),
/// links between compact observations and measurements, and the
/// unchanged link and class relations of originals.
pub fn build_factorized_ct_tables(
    g_prime: &Graph,
    mapping: &EntityMapping,
    v: &Vocabulary,
) -> Result<TableSet, TabularError> {
    let mut ts = TableSet::new(TableSetKind::FactorizedCt);
    let integrity = |what: String| TabularError::ReferentialIntegrity(what);
    let mut members = typed_members(g_prime, v, |c| v.is_observation_type(c) || c == &v.measure_data_class);
    let mut surrogates: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
    for (obs, om) in mapping.observations() {
        let types: Vec<&Term> = g_prime
            .objects(om, &v.type_predicate)
            .into_iter()
            .filter(|t| v.is_observation_type(t))
            .collect();
        let ty = match types[..] {
            [t] => t.clone(),
            _ => return Err(integrity(format!("surrogate {om} has no single observation type"))),
        };
        members.entry(ty.clone()).or_default().insert(obs.clone());
        surrogates.entry(ty).or_default().insert(om.clone());
    }
    let measurement_originals: BTreeSet<Term> = mapping.measurements().keys().cloned().collect();
    if !measurement_originals.is_empty() {
        members.insert(v.measure_data_class.clone(), measurement_originals);
    }
    let layout = ClassLayout::new(g_prime, v, members);
    let compact = ClassLayout::new(g_prime, v, surrogates.clone());

    for (c, entities) in &layout.members {
        let key = &layout.key_columns[c];
        let local = c.local_name();
        match layout.role(c) {
            ClassRole::Observation => {
                let oms = &surrogates[c];
                let attrs = compact.attributes(oms, &[&v.result]);
                ts.add(compact.entity_relation(format!("F-{local} CT"), "ObsMID", oms, &attrs, None));
                let mut fm = Relation::new(format!("Factorized {local} Measurement"), &["ObsMID", "MMID"], &["ObsMID"]).expect("static schema");
                for om in oms {
                    let mm = one(g_prime, om, &v.result).ok_or_else(|| integrity(format!("surrogate {om} lacks a single result")))?;
                    fm.insert(vec![Some(om.clone()), Some(mm.clone())]).expect("arity");
                }
                ts.add(fm);
                let extras = layout.attributes(entities, &[]);
                let to_surrogate = |e: &Term| mapping.observations().get(e).cloned();
                ts.add(layout.entity_relation(format!("{local} Mapping"), key, entities, &extras, Some(("ObsMID", &to_surrogate))));
            }
            ClassRole::Measurement => {
                let mms: BTreeSet<Term> = mapping.measurements().values().cloned().collect();
                let plain = ClassLayout::new(g_prime, v, BTreeMap::from([(c.clone(), mms.clone())]));
                let attrs = plain.attributes(&mms, &[]);
                for mm in &mms {
                    for p in &attrs {
                        if plain.attribute_cell(mm, p).is_none() && (p == &v.value || p == &v.unit) {
                            return Err(integrity(format!("surrogate {mm} lacks a single {}", p.local_name())));
                        }
                    }
                }
                ts.add(plain.entity_relation(format!("F-{local} CT"), "MMID", &mms, &attrs, None));
                let extras = layout.attributes(entities, &[]);
                let to_surrogate = |e: &Term| mapping.measurements().get(e).cloned();
                ts.add(layout.entity_relation(format!("{local} Mapping"), key, entities, &extras, Some(("MMID", &to_surrogate))));
            }
            ClassRole::Other => {
                let attrs = layout.attributes(entities, &[]);
                ts.add(layout.entity_relation(format!("{local} CT"), key, entities, &attrs, None));
            }
        }
        for link in layout.link_relations(c, entities, &[]) {
            ts.add(link);
        }
    }
    Ok(ts)
}
