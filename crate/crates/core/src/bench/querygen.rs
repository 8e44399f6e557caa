//! Random subset queries over the observation vocabulary.
//!
//! Every BGP hangs off one or two observation variables; measurement
//! patterns always come with the `result` pattern that links them, and a
//! second observation joins the first on its value.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rdf::{Graph, Term};
use crate::sparql::{parse_query, Query};
use crate::ssn::{enumerate_groups, Vocabulary};

/// Constants a generated query may mention, sampled from a graph.
#[derive(Debug, Clone, Default)]
pub struct QueryDomain {
    pub phenomena: Vec<Term>,
    pub procedures: Vec<Term>,
    pub properties: Vec<Term>,
    pub units: Vec<Term>,
    pub values: Vec<Term>,
    /// Grouped observations with their result measurement.
    pub observations: Vec<(Term, Term)>,
}

impl QueryDomain {
    pub fn from_graph(g: &Graph, v: &Vocabulary) -> Self {
        let index = enumerate_groups(g, v);
        let mut sets: [BTreeSet<Term>; 5] = Default::default();
        let mut observations = Vec::new();
        for (key, group) in &index.groups {
            sets[0].insert(key.phenomenon().clone());
            sets[1].insert(key.procedure().clone());
            sets[2].insert(key.property().clone());
            sets[3].insert(key.unit().clone());
            sets[4].insert(key.value().clone());
            observations.extend(group.members.iter().take(3).map(|(o, m)| (o.clone(), m.clone())));
        }
        let [phenomena, procedures, properties, units, values] = sets.map(|s| s.into_iter().collect());
        QueryDomain {
            phenomena,
            procedures,
            properties,
            units,
            values,
            observations,
        }
    }
}

struct Builder<'a> {
    v: &'a Vocabulary,
    d: &'a QueryDomain,
    patterns: Vec<String>,
    filters: Vec<String>,
    vars: BTreeSet<String>,
}

fn iri(t: &Term) -> String {
    t.to_string()
}

impl<'a> Builder<'a> {
    fn pat(&mut self, s: &str, p: &Term, o: &str) {
        for x in [s, o] {
            if let Some(name) = x.strip_prefix('?') {
                self.vars.insert(name.to_string());
            }
        }
        let line = format!("{s} {} {o} .", iri(p));
        if !self.patterns.contains(&line) {
            self.patterns.push(line);
        }
    }

    fn pick<R: Rng>(rng: &mut R, pool: &[Term]) -> Option<String> {
        pool.choose(rng).map(iri)
    }

    /// Variable or (with probability `p_const`) a constant from `pool`.
    fn slot<R: Rng>(rng: &mut R, var: &str, pool: &[Term], p_const: f64) -> String {
        if rng.gen_bool(p_const) {
            if let Some(c) = Self::pick(rng, pool) {
                return c;
            }
        }
        var.to_string()
    }

    /// Observation molecule for suffix `i`; returns the value slot if one was added.
    fn observation<R: Rng>(&mut self, rng: &mut R, i: usize, value_var: Option<&str>) -> Option<String> {
        let v = self.v;
        let d = self.d;
        let constant = rng.gen_bool(0.1) && !d.observations.is_empty();
        let (obs, m) = if constant {
            let (o, m) = d.observations.choose(rng).expect("non-empty");
            let m = if rng.gen_bool(0.5) { iri(m) } else { format!("?m{i}") };
            (iri(o), m)
        } else {
            (format!("?obs{i}"), format!("?m{i}"))
        };
        let mut any = false;
        if rng.gen_bool(0.4) {
            let c = Self::slot(rng, "", &d.phenomena, 1.0);
            if !c.is_empty() {
                self.pat(&obs, &v.type_predicate, &c);
                any = true;
            }
        }
        if rng.gen_bool(0.5) {
            let o = Self::slot(rng, &format!("?proc{i}"), &d.procedures, 0.3);
            self.pat(&obs, &v.procedure, &o);
            any = true;
        }
        if rng.gen_bool(0.3) {
            let o = Self::slot(rng, &format!("?prop{i}"), &d.properties, 0.5);
            self.pat(&obs, &v.property, &o);
            any = true;
        }
        if rng.gen_bool(0.3) {
            let t = format!("?t{i}");
            self.pat(&obs, &v.sampling_time, &t);
            if rng.gen_bool(0.7) {
                self.pat(&t, &v.timestamp, &format!("?ts{i}"));
            }
            any = true;
        }
        let mut value_slot = None;
        if value_var.is_some() || rng.gen_bool(0.7) || !any {
            self.pat(&obs, &v.result, &m);
            if rng.gen_bool(0.2) {
                self.pat(&m, &v.type_predicate, &iri(&v.measure_data_class));
            }
            if value_var.is_some() || rng.gen_bool(0.7) {
                let val = match value_var {
                    Some(x) => x.to_string(),
                    None => Self::slot(rng, &format!("?val{i}"), &d.values, 0.15),
                };
                self.pat(&m, &v.value, &val);
                value_slot = Some(val);
            }
            if rng.gen_bool(0.6) {
                let u = Self::slot(rng, &format!("?uom{i}"), &d.units, 0.3);
                self.pat(&m, &v.unit, &u);
            }
        }
        value_slot
    }

    fn filter<R: Rng>(&mut self, rng: &mut R) {
        let numeric: Vec<&String> = self.vars.iter().filter(|x| x.starts_with("val")).collect();
        let terms: Vec<&String> = self.vars.iter().filter(|x| x.starts_with("uom") || x.starts_with("proc")).collect();
        let mut parts = Vec::new();
        if let Some(x) = numeric.choose(rng) {
            let op = ["<", "<=", ">", ">=", "=", "!="].choose(rng).expect("non-empty");
            let bound = self.d.values.choose(rng).map_or_else(|| "5".to_string(), |t| t.value_str().to_string());
            parts.push(format!("?{x} {op} {bound}"));
        }
        if let Some(x) = terms.choose(rng) {
            let pool = if x.starts_with("uom") { &self.d.units } else { &self.d.procedures };
            if let Some(c) = pool.choose(rng) {
                let op = if rng.gen_bool(0.5) { "=" } else { "!=" };
                parts.push(format!("?{x} {op} {}", iri(c)));
            }
        }
        if parts.is_empty() {
            return;
        }
        let joined = if parts.len() == 2 && rng.gen_bool(0.5) {
            format!("({} || {})", parts[0], parts[1])
        } else if parts.len() == 2 {
            format!("{} && {}", parts[0], parts[1])
        } else {
            parts[0].clone()
        };
        let expr = if rng.gen_bool(0.15) { format!("!({joined})") } else { joined };
        self.filters.push(format!("FILTER ({expr})"));
    }

    fn group(&self) -> String {
        let mut body: Vec<String> = self.patterns.clone();
        body.extend(self.filters.iter().cloned());
        format!("{{ {} }}", body.join(" "))
    }
}

fn bgp<R: Rng>(rng: &mut R, v: &Vocabulary, d: &QueryDomain) -> (String, BTreeSet<String>) {
    let mut b = Builder {
        v,
        d,
        patterns: Vec::new(),
        filters: Vec::new(),
        vars: BTreeSet::new(),
    };
    let second = rng.gen_bool(0.2);
    let shared = if second { Some("?val0") } else { None };
    b.observation(rng, 0, shared);
    if second {
        b.observation(rng, 1, shared);
    }
    if b.vars.is_empty() {
        b.pat("?obs0", &v.procedure, "?proc0");
    }
    if rng.gen_bool(0.4) {
        b.filter(rng);
    }
    (b.group(), b.vars)
}

/// A random query text within the supported subset.
pub fn random_query_text<R: Rng>(rng: &mut R, v: &Vocabulary, d: &QueryDomain) -> String {
    let (mut pattern, mut vars) = bgp(rng, v, d);
    let mut pattern_vars = vars.clone();
    if rng.gen_bool(0.15) {
        let (other, other_vars) = bgp(rng, v, d);
        pattern = format!("{{ {pattern} UNION {other} }}");
        vars.extend(other_vars.iter().cloned());
        pattern_vars = vars.clone();
    }
    let all: Vec<String> = pattern_vars.into_iter().collect();
    let select = if all.is_empty() || rng.gen_bool(0.1) {
        "*".to_string()
    } else {
        let n = rng.gen_range(1..=all.len().min(4));
        let mut chosen: Vec<&String> = all.choose_multiple(rng, n).collect();
        chosen.sort();
        chosen.iter().map(|x| format!("?{x}")).collect::<Vec<_>>().join(" ")
    };
    let distinct = if rng.gen_bool(0.3) { "DISTINCT " } else { "" };
    let mut tail = String::new();
    if !all.is_empty() && rng.gen_bool(0.3) {
        let n = rng.gen_range(1..=all.len().min(2));
        let keys: Vec<String> = all
            .choose_multiple(rng, n)
            .map(|x| if rng.gen_bool(0.4) { format!("DESC(?{x})") } else { format!("?{x}") })
            .collect();
        tail.push_str(&format!(" ORDER BY {}", keys.join(" ")));
    }
    if rng.gen_bool(0.25) {
        tail.push_str(&format!(" LIMIT {}", rng.gen_range(0..30)));
    }
    format!("SELECT {distinct}{select} WHERE {pattern}{tail}")
}

pub fn random_query<R: Rng>(rng: &mut R, v: &Vocabulary, d: &QueryDomain) -> Query {
    let text = random_query_text(rng, v, d);
    parse_query(&text).unwrap_or_else(|e| panic!("generated query does not parse: {e}\n{text}"))
}
