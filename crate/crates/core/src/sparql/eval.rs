//! Set-semantics evaluation over interned term ids.
//!
//! BGPs are joined with nested index loops in a greedy order (patterns
//! with the most bound positions first, then the smallest match count).
//! Results are projected, deduplicated and sorted: by the ORDER BY keys
//! when present, then by the projected row, so LIMIT is deterministic.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use super::ast::{Bgp, CmpOp, FilterExpr, GraphPattern, Operand, Query};
use super::results::{compare_cells, compare_rows, SolutionSet};
use super::SparqlError;
use crate::rdf::{Graph, PatternTerm, Term, TermId};

type Row = Vec<Option<TermId>>;
type TermRow = Vec<Option<Term>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Const(TermId),
    Var(usize),
}

/// Evaluates `q` over `g`.
pub fn evaluate(q: &Query, g: &Graph) -> SolutionSet {
    Evaluator::new(g)
        .run(q)
        .expect("evaluation without a deadline cannot time out")
}

/// Evaluates `q` over `g`, giving up once `deadline` passes.
pub fn evaluate_until(q: &Query, g: &Graph, deadline: Instant) -> Result<SolutionSet, SparqlError> {
    let mut e = Evaluator::new(g);
    e.deadline = Some(deadline);
    e.run(q)
}

pub struct Evaluator<'g> {
    graph: &'g Graph,
    deadline: Option<Instant>,
    started: Instant,
    ticks: u32,
}

const TICK_INTERVAL: u32 = 4096;

impl<'g> Evaluator<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        Evaluator {
            graph,
            deadline: None,
            started: Instant::now(),
            ticks: 0,
        }
    }

    pub fn with_timeout(graph: &'g Graph, timeout: Duration) -> Self {
        let mut e = Evaluator::new(graph);
        e.deadline = Some(e.started + timeout);
        e
    }

    fn tick(&mut self) -> Result<(), SparqlError> {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks.is_multiple_of(TICK_INTERVAL) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(SparqlError::Timeout(
                        d.saturating_duration_since(self.started),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn run(&mut self, q: &Query) -> Result<SolutionSet, SparqlError> {
        let vars = q.pattern.variables();
        let index: HashMap<&str, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let rows = self.pattern(&q.pattern, &index)?;

        let projections = q.projections();
        let proj_slots: Vec<Option<usize>> = projections
            .iter()
            .map(|p| index.get(p.var.as_str()).copied())
            .collect();
        let key_slots: Vec<(Option<usize>, bool)> = q
            .order_by
            .iter()
            .map(|k| {
                let slot = index.get(k.var.as_str()).copied().or_else(|| {
                    projections
                        .iter()
                        .find(|p| p.output_name() == k.var)
                        .and_then(|p| index.get(p.var.as_str()).copied())
                });
                (slot, k.descending)
            })
            .collect();
        let pick = |row: &Row, slots: &mut dyn Iterator<Item = Option<usize>>| -> Row {
            slots.map(|s| s.and_then(|i| row[i])).collect()
        };
        let to_terms = |r: &Row| -> Vec<Option<Term>> {
            r.iter()
                .map(|c| c.map(|id| self.graph.term(id).clone()))
                .collect()
        };

        let mut out = SolutionSet::new(
            projections
                .iter()
                .map(|p| p.output_name().to_string())
                .collect(),
        );
        if key_slots.is_empty() {
            let mut seen: HashSet<Row> = HashSet::new();
            for row in &rows {
                let projected = pick(row, &mut proj_slots.iter().copied());
                if seen.insert(projected.clone()) {
                    out.rows.push(to_terms(&projected));
                }
            }
            out.rows.sort_by(|a, b| compare_rows(a, b));
        } else {
            let cmp_keys = |a: &[Option<Term>], b: &[Option<Term>]| -> Ordering {
                for (i, (x, y)) in a.iter().zip(b).enumerate() {
                    let o = compare_cells(x, y);
                    let o = if key_slots[i].1 { o.reverse() } else { o };
                    if o.is_ne() {
                        return o;
                    }
                }
                Ordering::Equal
            };
            // each distinct projected row sorts by its first-ranked key
            let mut best: HashMap<Row, Vec<Option<Term>>> = HashMap::new();
            for row in &rows {
                let projected = pick(row, &mut proj_slots.iter().copied());
                let key = to_terms(&pick(row, &mut key_slots.iter().map(|k| k.0)));
                match best.get_mut(&projected) {
                    Some(existing) => {
                        if cmp_keys(&key, existing).is_lt() {
                            *existing = key;
                        }
                    }
                    None => {
                        best.insert(projected, key);
                    }
                }
            }
            let mut keyed: Vec<(TermRow, TermRow)> = best
                .into_iter()
                .map(|(row, key)| (key, to_terms(&row)))
                .collect();
            keyed.sort_by(|(ka, ra), (kb, rb)| cmp_keys(ka, kb).then_with(|| compare_rows(ra, rb)));
            out.rows = keyed.into_iter().map(|(_, r)| r).collect();
        }
        if let Some(n) = q.limit {
            out.rows.truncate(n);
        }
        Ok(out)
    }

    fn pattern(
        &mut self,
        p: &GraphPattern,
        index: &HashMap<&str, usize>,
    ) -> Result<Vec<Row>, SparqlError> {
        match p {
            GraphPattern::Bgp(b) => self.bgp(b, index),
            GraphPattern::Union(a, b) => {
                let mut rows = self.pattern(a, index)?;
                rows.extend(self.pattern(b, index)?);
                Ok(rows)
            }
        }
    }

    fn bgp(&mut self, b: &Bgp, index: &HashMap<&str, usize>) -> Result<Vec<Row>, SparqlError> {
        let mut compiled = Vec::with_capacity(b.patterns.len());
        for tp in &b.patterns {
            let mut slots = [Slot::Var(0); 3];
            for (i, pt) in tp.positions().into_iter().enumerate() {
                slots[i] = match pt {
                    PatternTerm::Var(v) => Slot::Var(index[v.as_str()]),
                    PatternTerm::Const(t) => match self.graph.id_of(t) {
                        Some(id) => Slot::Const(id),
                        None => return Ok(Vec::new()),
                    },
                };
            }
            compiled.push(slots);
        }
        let plan = self.plan(compiled);
        let mut rows = Vec::new();
        let mut row = vec![None; index.len()];
        self.join(&plan, 0, &mut row, &mut rows)?;
        if !b.filters.is_empty() {
            rows.retain(|r| {
                b.filters
                    .iter()
                    .all(|f| self.filter(f, r, index) == Some(true))
            });
        }
        Ok(rows)
    }

    fn plan(&self, mut remaining: Vec<[Slot; 3]>) -> Vec<[Slot; 3]> {
        let estimate = |p: &[Slot; 3]| {
            let c = |s: Slot| match s {
                Slot::Const(id) => Some(id),
                Slot::Var(_) => None,
            };
            self.graph.scan_ids(c(p[0]), c(p[1]), c(p[2])).count()
        };
        let estimates: Vec<usize> = remaining.iter().map(estimate).collect();
        let mut est: Vec<([Slot; 3], usize)> = remaining.drain(..).zip(estimates).collect();
        let mut bound: HashSet<usize> = HashSet::new();
        let mut plan = Vec::with_capacity(est.len());
        while !est.is_empty() {
            let bound_positions = |p: &[Slot; 3]| {
                p.iter()
                    .filter(|s| match s {
                        Slot::Const(_) => true,
                        Slot::Var(i) => bound.contains(i),
                    })
                    .count()
            };
            // patterns sharing a bound variable first, so no cross product
            // is opened while a connected pattern remains
            let connected = |p: &[Slot; 3]| {
                let vars: Vec<usize> = p.iter().filter_map(|s| match s {
                    Slot::Var(i) => Some(*i),
                    Slot::Const(_) => None,
                }).collect();
                vars.is_empty() || vars.iter().any(|i| bound.contains(i))
            };
            let (best, _) = est
                .iter()
                .enumerate()
                .max_by(|(ia, (pa, ca)), (ib, (pb, cb))| {
                    connected(pa)
                        .cmp(&connected(pb))
                        .then(bound_positions(pa).cmp(&bound_positions(pb)))
                        .then(cb.cmp(ca))
                        .then(ib.cmp(ia))
                })
                .expect("non-empty");
            let (p, _) = est.remove(best);
            for s in p {
                if let Slot::Var(i) = s {
                    bound.insert(i);
                }
            }
            plan.push(p);
        }
        plan
    }

    fn join(
        &mut self,
        plan: &[[Slot; 3]],
        depth: usize,
        row: &mut Row,
        out: &mut Vec<Row>,
    ) -> Result<(), SparqlError> {
        let Some(pat) = plan.get(depth) else {
            out.push(row.clone());
            return Ok(());
        };
        let key = pat.map(|s| match s {
            Slot::Const(id) => Some(id),
            Slot::Var(i) => row[i],
        });
        let graph = self.graph;
        for triple in graph.scan_ids(key[0], key[1], key[2]) {
            self.tick()?;
            let mut newly = [usize::MAX; 3];
            let mut ok = true;
            for pos in 0..3 {
                if let Slot::Var(i) = pat[pos] {
                    match row[i] {
                        None => {
                            row[i] = Some(triple[pos]);
                            newly[pos] = i;
                        }
                        Some(x) if x != triple[pos] => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                    }
                }
            }
            if ok {
                self.join(plan, depth + 1, row, out)?;
            }
            for i in newly {
                if i != usize::MAX {
                    row[i] = None;
                }
            }
        }
        Ok(())
    }

    /// Three-valued: `None` is an evaluation error.
    fn filter(&self, f: &FilterExpr, row: &Row, index: &HashMap<&str, usize>) -> Option<bool> {
        match f {
            FilterExpr::Compare(op, a, b) => {
                let a = self.operand(a, row, index)?;
                let b = self.operand(b, row, index)?;
                compare(*op, a, b)
            }
            FilterExpr::And(a, b) => match (self.filter(a, row, index), self.filter(b, row, index))
            {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            FilterExpr::Or(a, b) => {
                match (self.filter(a, row, index), self.filter(b, row, index)) {
                    (Some(true), _) | (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                }
            }
            FilterExpr::Not(a) => self.filter(a, row, index).map(|x| !x),
        }
    }

    fn operand<'a>(
        &'a self,
        o: &'a Operand,
        row: &Row,
        index: &HashMap<&str, usize>,
    ) -> Option<&'a Term> {
        match o {
            Operand::Const(t) => Some(t),
            Operand::Var(v) => {
                let id = row[*index.get(v.as_str())?]?;
                Some(self.graph.term(id))
            }
        }
    }
}

/// Numeric when both sides are literals whose lexical form is a decimal
/// number; otherwise term equality for `=`/`!=` and an error for order
/// comparisons.
pub(crate) fn compare(op: CmpOp, a: &Term, b: &Term) -> Option<bool> {
    let num = |t: &Term| {
        t.as_literal()
            .and_then(|l| crate::rdf::parse_decimal(&l.lexical))
    };
    if let (Some(x), Some(y)) = (num(a), num(b)) {
        return Some(match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            CmpOp::Lt => x < y,
            CmpOp::Le => x <= y,
            CmpOp::Gt => x > y,
            CmpOp::Ge => x >= y,
        });
    }
    match op {
        CmpOp::Eq => Some(a == b),
        CmpOp::Ne => Some(a != b),
        _ => None,
    }
}
