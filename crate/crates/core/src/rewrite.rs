//! Rewriting SELECT queries over an SSN graph into queries over its
//! factorized graph.
//!
//! A matched pattern moves to the surrogate: its subject variable keeps
//! its name and binds the surrogate, while a fresh `X`-variable binds the
//! original through `observationOf` (and `result` for measurements).
//! Query clauses then refer to the `X`-variable, and the projection
//! renames it back, so both queries report the same columns.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::rdf::{PatternTerm, Term, TriplePattern};
use crate::sparql::{Bgp, GraphPattern, OrderKey, Projection, Query, Selection};
use crate::ssn::Vocabulary;

/// The seven rewrite rules, named by the pattern they match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    /// `?obs rdf:type <phenomenon or observation class>`
    ObservationType,
    /// `?obs procedure ?p`
    Procedure,
    /// `?obs property ?pp`
    Property,
    /// `?m rdf:type MeasureData`
    MeasurementType,
    /// `?m value ?v`
    Value,
    /// `?m unit ?u`
    Unit,
    /// `?obs result ?m`
    Result,
}

impl Rule {
    pub const ALL: [Rule; 7] = [
        Rule::ObservationType,
        Rule::Procedure,
        Rule::Property,
        Rule::MeasurementType,
        Rule::Value,
        Rule::Unit,
        Rule::Result,
    ];

    /// Whether the matched subject is a measurement.
    pub fn on_measurement(self) -> bool {
        matches!(self, Rule::MeasurementType | Rule::Value | Rule::Unit)
    }
}

/// The rule whose head `t` instantiates, if any.
pub fn match_rule(t: &TriplePattern, v: &Vocabulary) -> Option<Rule> {
    let PatternTerm::Const(p) = &t.predicate else {
        return None;
    };
    if p == &v.type_predicate {
        return match &t.object {
            PatternTerm::Const(c) if c == &v.measure_data_class => Some(Rule::MeasurementType),
            PatternTerm::Const(c) if v.is_observation_type(c) => Some(Rule::ObservationType),
            _ => None,
        };
    }
    [
        (&v.procedure, Rule::Procedure),
        (&v.property, Rule::Property),
        (&v.value, Rule::Value),
        (&v.unit, Rule::Unit),
        (&v.result, Rule::Result),
    ]
    .into_iter()
    .find(|(pred, _)| *pred == p)
    .map(|(_, r)| r)
}

/// Allocates variable names that do not clash with the query's own.
#[derive(Debug, Clone, Default)]
pub struct VarNamer {
    used: BTreeSet<String>,
    originals: BTreeMap<String, String>,
    surrogates_of_constants: BTreeMap<Term, String>,
}

impl VarNamer {
    pub fn for_query(q: &Query) -> Self {
        let mut used: BTreeSet<String> = q.pattern.variables().into_iter().collect();
        if let Selection::Vars(ps) = &q.select {
            used.extend(ps.iter().filter_map(|p| p.alias.clone()));
        }
        VarNamer {
            used,
            ..Default::default()
        }
    }

    pub fn for_patterns(patterns: &[TriplePattern]) -> Self {
        VarNamer {
            used: patterns
                .iter()
                .flat_map(|p| p.variables())
                .map(String::from)
                .collect(),
            ..Default::default()
        }
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut n = 2;
        while self.used.contains(&name) {
            name = format!("{base}{n}");
            n += 1;
        }
        self.used.insert(name.clone());
        name
    }

    /// Variable that binds the original entity for query variable `var`.
    fn original_of(&mut self, var: &str) -> String {
        if let Some(x) = self.originals.get(var) {
            return x.clone();
        }
        let x = self.fresh(&format!("X{var}"));
        self.originals.insert(var.to_string(), x.clone());
        x
    }

    fn surrogate_of_constant(&mut self, t: &Term) -> String {
        if let Some(s) = self.surrogates_of_constants.get(t) {
            return s.clone();
        }
        let s = self.fresh("surrogate");
        self.surrogates_of_constants.insert(t.clone(), s.clone());
        s
    }

    /// Substitutions recorded so far: query variable to original-entity variable.
    pub fn substitutions(&self) -> &BTreeMap<String, String> {
        &self.originals
    }
}

/// Surrogate and original slots of an entity position.
fn slots(pt: &PatternTerm, namer: &mut VarNamer) -> (PatternTerm, PatternTerm) {
    match pt {
        PatternTerm::Var(v) => (pt.clone(), PatternTerm::Var(namer.original_of(v))),
        PatternTerm::Const(c) => (PatternTerm::Var(namer.surrogate_of_constant(c)), pt.clone()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RewrittenPattern {
    pub original: String,
    pub rule: Option<Rule>,
    pub replacement: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RewriteResult {
    /// One entry per input pattern, before merging.
    pub entries: Vec<(TriplePattern, Option<Rule>, Vec<TriplePattern>)>,
    /// Merged, deduplicated patterns in first-occurrence order.
    pub patterns: Vec<TriplePattern>,
    /// Measurement patterns with no `result` pattern linking them to an
    /// observation in the same BGP.
    pub unlinked_measurements: Vec<TriplePattern>,
}

impl RewriteResult {
    pub fn pre_dedup_len(&self) -> usize {
        self.entries.iter().map(|(_, _, r)| r.len()).sum()
    }

    pub fn describe(&self) -> Vec<RewrittenPattern> {
        self.entries
            .iter()
            .map(|(o, r, rep)| RewrittenPattern {
                original: o.to_string(),
                rule: *r,
                replacement: rep.iter().map(ToString::to_string).collect(),
            })
            .collect()
    }
}

/// Rewrites one BGP, naming fresh variables against the BGP alone.
pub fn rewrite_bgp(patterns: &[TriplePattern], v: &Vocabulary) -> RewriteResult {
    let mut namer = VarNamer::for_patterns(patterns);
    let mut result = rewrite_bgp_with(patterns, v, &mut namer);
    let subst = namer.substitutions().clone();
    apply_substitution(&mut result, &subst);
    result
}

/// Applies the rules to every pattern; unmatched patterns are kept as is
/// until [`apply_substitution`] renames their variables.
pub fn rewrite_bgp_with(
    patterns: &[TriplePattern],
    v: &Vocabulary,
    namer: &mut VarNamer,
) -> RewriteResult {
    let obs_of = PatternTerm::Const(v.observation_of.clone());
    let result_p = PatternTerm::Const(v.result.clone());
    let mut out = RewriteResult::default();
    for t in patterns {
        let rule = match_rule(t, v);
        let replacement = match rule {
            None => vec![t.clone()],
            Some(Rule::Result) => {
                let (s_obs, o_obs) = slots(&t.subject, namer);
                let (s_m, o_m) = slots(&t.object, namer);
                vec![
                    TriplePattern::new(s_obs.clone(), t.predicate.clone(), s_m),
                    TriplePattern::new(o_obs.clone(), obs_of.clone(), s_obs),
                    TriplePattern::new(o_obs, result_p.clone(), o_m),
                ]
            }
            Some(r) if r.on_measurement() => {
                let (s_m, o_m) = slots(&t.subject, namer);
                let link = patterns
                    .iter()
                    .find(|p| p.predicate == result_p && p.object == t.subject)
                    .map(|p| p.subject.clone());
                let (s_l, o_l) = match link {
                    Some(l) => slots(&l, namer),
                    None => {
                        out.unlinked_measurements.push(t.clone());
                        let s = PatternTerm::Var(namer.fresh("obs"));
                        let o = PatternTerm::Var(namer.fresh("Xobs"));
                        (s, o)
                    }
                };
                vec![
                    TriplePattern::new(s_m, t.predicate.clone(), t.object.clone()),
                    TriplePattern::new(o_l.clone(), obs_of.clone(), s_l),
                    TriplePattern::new(o_l, result_p.clone(), o_m),
                ]
            }
            Some(_) => {
                let (s_obs, o_obs) = slots(&t.subject, namer);
                vec![
                    TriplePattern::new(s_obs.clone(), t.predicate.clone(), t.object.clone()),
                    TriplePattern::new(o_obs, obs_of.clone(), s_obs),
                ]
            }
        };
        out.entries.push((t.clone(), rule, replacement));
    }
    out
}

fn rename(pt: &PatternTerm, subst: &BTreeMap<String, String>) -> PatternTerm {
    match pt {
        PatternTerm::Var(v) => PatternTerm::Var(subst.get(v).cloned().unwrap_or_else(|| v.clone())),
        c => c.clone(),
    }
}

/// Renames variables of pass-through patterns to their original-entity
/// variables, then merges and deduplicates.
pub fn apply_substitution(result: &mut RewriteResult, subst: &BTreeMap<String, String>) {
    for (_, rule, replacement) in &mut result.entries {
        if rule.is_none() {
            for p in replacement.iter_mut() {
                *p = TriplePattern::new(
                    rename(&p.subject, subst),
                    rename(&p.predicate, subst),
                    rename(&p.object, subst),
                );
            }
        }
    }
    let mut seen = BTreeSet::new();
    result.patterns = result
        .entries
        .iter()
        .flat_map(|(_, _, r)| r.iter())
        .filter(|p| seen.insert((*p).clone()))
        .cloned()
        .collect();
}

/// Per-BGP rewrite details of a whole query.
#[derive(Debug, Clone)]
pub struct QueryRewrite {
    pub query: Query,
    pub bgps: Vec<RewriteResult>,
    pub substitutions: BTreeMap<String, String>,
}

pub fn rewrite_query(q: &Query, v: &Vocabulary) -> Query {
    rewrite_query_detailed(q, v).query
}

/// Rewrites every BGP independently (keeping the UNION structure) and
/// renames substituted variables in SELECT, FILTER and ORDER BY.
pub fn rewrite_query_detailed(q: &Query, v: &Vocabulary) -> QueryRewrite {
    let mut namer = VarNamer::for_query(q);
    let mut bgps: Vec<RewriteResult> = q
        .pattern
        .bgps()
        .into_iter()
        .map(|b| rewrite_bgp_with(&b.patterns, v, &mut namer))
        .collect();
    let subst = namer.substitutions().clone();
    for r in &mut bgps {
        apply_substitution(r, &subst);
    }
    let rename_var = |name: &str| subst.get(name).cloned().unwrap_or_else(|| name.to_string());
    let mut next = bgps.iter();
    let pattern = q.pattern.map_bgps(&mut |b: &Bgp| Bgp {
        patterns: next.next().expect("one result per BGP").patterns.clone(),
        filters: b.filters.iter().map(|f| f.map_vars(&rename_var)).collect(),
    });
    let projections: Vec<Projection> = q
        .projections()
        .into_iter()
        .map(|p| match subst.get(&p.var) {
            Some(x) => Projection {
                var: x.clone(),
                alias: Some(p.output_name().to_string()),
            },
            None => p,
        })
        .collect();
    let order_by = q
        .order_by
        .iter()
        .map(|k| OrderKey {
            var: rename_var(&k.var),
            descending: k.descending,
        })
        .collect();
    let query = Query {
        prefixes: q.prefixes.clone(),
        select: if projections.is_empty() && matches!(q.select, Selection::Star) {
            Selection::Star
        } else {
            Selection::Vars(projections)
        },
        distinct: q.distinct,
        pattern,
        order_by,
        limit: q.limit,
    };
    QueryRewrite {
        query,
        bgps,
        substitutions: subst,
    }
}

/// Shape comparison of a query and its rewriting.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub unions_before: usize,
    pub unions_after: usize,
    /// UNION trees have identical shape.
    pub union_shape_preserved: bool,
    /// OPTIONAL is outside the supported subset, so this is always zero.
    pub optionals_after: usize,
    pub patterns_before: usize,
    pub patterns_pre_dedup: usize,
    pub patterns_after: usize,
    /// Largest `pre-dedup / original` ratio over non-empty BGPs.
    pub max_growth: f64,
    pub warnings: Vec<String>,
}

impl StructureReport {
    /// No new operators and at most three patterns per original pattern.
    pub fn ok(&self) -> bool {
        self.union_shape_preserved
            && self.unions_before == self.unions_after
            && self.optionals_after == 0
            && self.max_growth <= 3.0
    }
}

fn same_shape(a: &GraphPattern, b: &GraphPattern) -> bool {
    match (a, b) {
        (GraphPattern::Bgp(_), GraphPattern::Bgp(_)) => true,
        (GraphPattern::Union(a1, a2), GraphPattern::Union(b1, b2)) => {
            same_shape(a1, b1) && same_shape(a2, b2)
        }
        _ => false,
    }
}

/// Compares `q` with its rewriting `q_prime` and lists query shapes whose
/// answers the rewriting cannot preserve.
pub fn check_structure(q: &Query, q_prime: &Query, v: &Vocabulary) -> StructureReport {
    let detail = rewrite_query_detailed(q, v);
    let mut max_growth: f64 = 0.0;
    for (orig, r) in q.pattern.bgps().iter().zip(&detail.bgps) {
        if !orig.patterns.is_empty() {
            max_growth = max_growth.max(r.pre_dedup_len() as f64 / orig.patterns.len() as f64);
        }
    }
    let mut warnings = hazards(q, v);
    for r in &detail.bgps {
        for t in &r.unlinked_measurements {
            warnings.push(format!(
                "{t}: measurement pattern without a result pattern for the same measurement; the rewritten pattern does not tie the measurement to an observation"
            ));
        }
    }
    if detail.query != *q_prime {
        warnings.push("second query is not the rewriting of the first".into());
    }
    StructureReport {
        unions_before: q.pattern.union_count(),
        unions_after: q_prime.pattern.union_count(),
        union_shape_preserved: same_shape(&q.pattern, &q_prime.pattern),
        optionals_after: 0,
        patterns_before: q.pattern.triple_pattern_count(),
        patterns_pre_dedup: detail.bgps.iter().map(RewriteResult::pre_dedup_len).sum(),
        patterns_after: q_prime.pattern.triple_pattern_count(),
        max_growth,
        warnings,
    }
}

/// Query shapes for which the rewritten query may answer differently.
pub fn hazards(q: &Query, v: &Vocabulary) -> Vec<String> {
    let mut out = Vec::new();
    for b in q.pattern.bgps() {
        for t in &b.patterns {
            match &t.predicate {
                PatternTerm::Var(_) => out.push(format!(
                    "{t}: variable predicate also matches surrogate and observationOf edges"
                )),
                PatternTerm::Const(p) if p == &v.observation_of => out.push(format!(
                    "{t}: observationOf only exists in factorized graphs"
                )),
                PatternTerm::Const(p) if p == &v.type_predicate && t.object.as_var().is_some() => {
                    out.push(format!(
                        "{t}: type pattern with a variable class is not rewritten"
                    ))
                }
                _ => {}
            }
        }
    }
    out
}
