//! In-memory triple store with set semantics.
//!
//! Terms are interned into a dictionary and triples are kept in three
//! sorted permutations (SPO, POS, OSP) so that any combination of bound
//! positions resolves to a single range scan.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Bound;

use super::pattern::{Binding, PatternTerm, TriplePattern};
use super::term::{Term, Triple};

pub type TermId = u32;

#[derive(Debug, Default, Clone)]
struct Dictionary {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
}

impl Dictionary {
    fn intern(&mut self, term: &Term) -> TermId {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = TermId::try_from(self.terms.len()).expect("dictionary overflow");
        self.terms.push(term.clone());
        self.ids.insert(term.clone(), id);
        id
    }
}

/// An RDF graph `G = (V_G, E_G, L_G)`.
///
/// Mutation goes through `&mut self`, so readers always see a frozen graph.
#[derive(Debug, Default, Clone)]
pub struct Graph {
    dict: Dictionary,
    spo: BTreeSet<(TermId, TermId, TermId)>,
    pos: BTreeSet<(TermId, TermId, TermId)>,
    osp: BTreeSet<(TermId, TermId, TermId)>,
}

fn range3(
    set: &BTreeSet<(TermId, TermId, TermId)>,
    a: Option<TermId>,
    b: Option<TermId>,
) -> impl Iterator<Item = &(TermId, TermId, TermId)> {
    let (lo, hi) = match (a, b) {
        (None, _) => (Bound::Unbounded, Bound::Unbounded),
        (Some(a), None) => (
            Bound::Included((a, 0, 0)),
            Bound::Included((a, TermId::MAX, TermId::MAX)),
        ),
        (Some(a), Some(b)) => (
            Bound::Included((a, b, 0)),
            Bound::Included((a, b, TermId::MAX)),
        ),
    };
    set.range((lo, hi))
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I) -> Self {
        let mut g = Graph::new();
        for t in triples {
            g.insert(t);
        }
        g
    }

    /// Inserts a triple; returns `false` when it was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        let (s, p, o) = (
            self.dict.intern(triple.subject()),
            self.dict.intern(triple.predicate()),
            self.dict.intern(triple.object()),
        );
        if !self.spo.insert((s, p, o)) {
            return false;
        }
        self.pos.insert((p, o, s));
        self.osp.insert((o, s, p));
        true
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        let (Some(s), Some(p), Some(o)) = (
            self.id_of(triple.subject()),
            self.id_of(triple.predicate()),
            self.id_of(triple.object()),
        ) else {
            return false;
        };
        if !self.spo.remove(&(s, p, o)) {
            return false;
        }
        self.pos.remove(&(p, o, s));
        self.osp.remove(&(o, s, p));
        true
    }

    pub fn extend<I: IntoIterator<Item = Triple>>(&mut self, triples: I) {
        for t in triples {
            self.insert(t);
        }
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        match (
            self.id_of(triple.subject()),
            self.id_of(triple.predicate()),
            self.id_of(triple.object()),
        ) {
            (Some(s), Some(p), Some(o)) => self.spo.contains(&(s, p, o)),
            _ => false,
        }
    }

    pub fn id_of(&self, term: &Term) -> Option<TermId> {
        self.dict.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.dict.terms[id as usize]
    }

    fn triple_of(&self, (s, p, o): (TermId, TermId, TermId)) -> Triple {
        Triple::new(
            self.term(s).clone(),
            self.term(p).clone(),
            self.term(o).clone(),
        )
        .expect("stored triples are well-formed")
    }

    /// All triples in SPO id order.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&k| self.triple_of(k))
    }

    /// Id triples `[s, p, o]` matching the bound positions.
    pub fn scan_ids(
        &self,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
    ) -> Box<dyn Iterator<Item = [TermId; 3]> + '_> {
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => Box::new(
                self.spo
                    .contains(&(s, p, o))
                    .then_some([s, p, o])
                    .into_iter(),
            ),
            (Some(_), _, None) => Box::new(range3(&self.spo, s, p).map(|&(s, p, o)| [s, p, o])),
            (Some(_), None, Some(_)) => {
                Box::new(range3(&self.osp, o, s).map(|&(o, s, p)| [s, p, o]))
            }
            (None, Some(_), _) => Box::new(range3(&self.pos, p, o).map(|&(p, o, s)| [s, p, o])),
            (None, None, Some(_)) => {
                Box::new(range3(&self.osp, o, None).map(|&(o, s, p)| [s, p, o]))
            }
            (None, None, None) => Box::new(self.spo.iter().map(|&(s, p, o)| [s, p, o])),
        }
    }

    /// Triples matching the given constants; `None` is a wildcard.
    pub fn triples_matching<'a>(
        &'a self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
    ) -> Box<dyn Iterator<Item = Triple> + 'a> {
        let lookup = |t: Option<&Term>| match t {
            None => Ok(None),
            Some(t) => self.id_of(t).map(Some).ok_or(()),
        };
        match (lookup(s), lookup(p), lookup(o)) {
            (Ok(s), Ok(p), Ok(o)) => Box::new(
                self.scan_ids(s, p, o)
                    .map(move |[s, p, o]| self.triple_of((s, p, o))),
            ),
            _ => Box::new(std::iter::empty()),
        }
    }

    /// Objects of `(subject, predicate, ?)`.
    pub fn objects<'a>(&'a self, subject: &Term, predicate: &Term) -> Vec<&'a Term> {
        match (self.id_of(subject), self.id_of(predicate)) {
            (Some(s), Some(p)) => self
                .scan_ids(Some(s), Some(p), None)
                .map(|[_, _, o]| self.term(o))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Subjects of `(?, predicate, object)`.
    pub fn subjects<'a>(&'a self, predicate: &Term, object: &Term) -> Vec<&'a Term> {
        match (self.id_of(predicate), self.id_of(object)) {
            (Some(p), Some(o)) => self
                .scan_ids(None, Some(p), Some(o))
                .map(|[s, _, _]| self.term(s))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// `V_G`: every subject and object.
    pub fn nodes(&self) -> BTreeSet<Term> {
        let mut ids = BTreeSet::new();
        for &(s, _, o) in &self.spo {
            ids.insert(s);
            ids.insert(o);
        }
        ids.into_iter().map(|id| self.term(id).clone()).collect()
    }

    /// `L_G`: every predicate.
    pub fn labels(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        let mut last = None;
        for &(p, _, _) in &self.pos {
            if last != Some(p) {
                out.insert(self.term(p).clone());
                last = Some(p);
            }
        }
        out
    }

    /// The subject molecule of `subject`: all triples sharing it as subject.
    pub fn molecule(&self, subject: &Term) -> BTreeSet<Triple> {
        self.triples_matching(Some(subject), None, None).collect()
    }

    /// Every binding of the pattern's variables that yields a triple in the graph.
    ///
    /// Bindings are returned sorted and without duplicates.
    pub fn match_pattern(&self, pattern: &TriplePattern) -> Vec<Binding> {
        let mut ids = [None; 3];
        for (slot, pt) in ids.iter_mut().zip(pattern.positions()) {
            if let PatternTerm::Const(t) = pt {
                match self.id_of(t) {
                    Some(id) => *slot = Some(id),
                    None => return Vec::new(),
                }
            }
        }
        let mut out = BTreeSet::new();
        'triples: for found in self.scan_ids(ids[0], ids[1], ids[2]) {
            let mut binding: BTreeMap<String, TermId> = BTreeMap::new();
            for (pt, id) in pattern.positions().into_iter().zip(found) {
                if let PatternTerm::Var(v) = pt {
                    match binding.get(v) {
                        Some(&prev) if prev != id => continue 'triples,
                        _ => {
                            binding.insert(v.clone(), id);
                        }
                    }
                }
            }
            out.insert(
                binding
                    .into_iter()
                    .map(|(k, id)| (k, self.term(id).clone()))
                    .collect::<Binding>(),
            );
        }
        out.into_iter().collect()
    }

    /// Set union with another graph.
    pub fn union(&self, other: &Graph) -> Graph {
        let mut g = self.clone();
        g.extend(other.iter());
        g
    }

    pub fn to_triple_set(&self) -> BTreeSet<Triple> {
        self.iter().collect()
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().all(|t| other.contains(&t))
    }
}

impl Eq for Graph {}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph::from_triples(iter)
    }
}
