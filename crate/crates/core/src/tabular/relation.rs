//! Set-semantics relations with select, project, natural join and union.

use std::collections::{BTreeSet, HashMap};

use crate::rdf::Term;

use super::TabularError;

/// A cell; `None` is SQL-style null and never joins.
pub type Cell = Option<Term>;
pub type Row = Vec<Cell>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    schema: Vec<String>,
    key: Vec<String>,
    rows: BTreeSet<Row>,
}

/// Read access to one row by attribute name.
#[derive(Debug, Clone, Copy)]
pub struct RowRef<'a> {
    schema: &'a [String],
    cells: &'a [Cell],
}

impl<'a> RowRef<'a> {
    pub fn get(&self, attr: &str) -> Option<&'a Term> {
        let i = self.schema.iter().position(|a| a == attr)?;
        self.cells[i].as_ref()
    }

    pub fn cells(&self) -> &'a [Cell] {
        self.cells
    }
}

impl Relation {
    /// Empty relation; `key` must be a subset of `schema`, which must not repeat names.
    pub fn new(name: impl Into<String>, schema: &[&str], key: &[&str]) -> Result<Self, TabularError> {
        Self::with_owned(
            name.into(),
            schema.iter().map(|s| s.to_string()).collect(),
            key.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn with_owned(name: String, schema: Vec<String>, key: Vec<String>) -> Result<Self, TabularError> {
        let mut seen = BTreeSet::new();
        for a in &schema {
            if !seen.insert(a) {
                return Err(TabularError::DuplicateAttribute(a.clone()));
            }
        }
        for k in &key {
            if !seen.contains(k) {
                return Err(TabularError::UnknownAttribute {
                    relation: name,
                    attribute: k.clone(),
                });
            }
        }
        Ok(Relation {
            name,
            schema,
            key,
            rows: BTreeSet::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn key(&self) -> &[String] {
        &self.key
    }

    pub fn rows(&self) -> &BTreeSet<Row> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn index_of(&self, attr: &str) -> Result<usize, TabularError> {
        self.schema
            .iter()
            .position(|a| a == attr)
            .ok_or_else(|| TabularError::UnknownAttribute {
                relation: self.name.clone(),
                attribute: attr.to_string(),
            })
    }

    pub fn has_attribute(&self, attr: &str) -> bool {
        self.schema.iter().any(|a| a == attr)
    }

    /// Adds a row; returns false if it was already present.
    pub fn insert(&mut self, row: Row) -> Result<bool, TabularError> {
        if row.len() != self.schema.len() {
            return Err(TabularError::Arity {
                relation: self.name.clone(),
                expected: self.schema.len(),
                found: row.len(),
            });
        }
        Ok(self.rows.insert(row))
    }

    pub fn remove(&mut self, row: &Row) -> bool {
        self.rows.remove(row)
    }

    pub fn iter(&self) -> impl Iterator<Item = RowRef<'_>> {
        self.rows.iter().map(|r| RowRef {
            schema: &self.schema,
            cells: r,
        })
    }

    /// Values of `attrs` in one row.
    pub fn values(&self, row: &Row, attrs: &[usize]) -> Row {
        attrs.iter().map(|&i| row[i].clone()).collect()
    }

    pub fn select(&self, pred: impl Fn(RowRef<'_>) -> bool) -> Relation {
        let mut out = self.empty_like();
        out.rows = self.iter().filter(|r| pred(*r)).map(|r| r.cells.to_vec()).collect();
        out
    }

    /// Rows whose `attr` equals `value`.
    pub fn select_eq(&self, attr: &str, value: &Term) -> Result<Relation, TabularError> {
        let i = self.index_of(attr)?;
        Ok(self.select(|r| r.cells[i].as_ref() == Some(value)))
    }

    /// Projection with duplicate elimination. The key is kept when all its
    /// attributes survive, otherwise every projected attribute is the key.
    pub fn project(&self, attrs: &[&str]) -> Result<Relation, TabularError> {
        let idx: Vec<usize> = attrs.iter().map(|a| self.index_of(a)).collect::<Result<_, _>>()?;
        let key: Vec<String> = if self.key.iter().all(|k| attrs.contains(&k.as_str())) {
            self.key.clone()
        } else {
            attrs.iter().map(|a| a.to_string()).collect()
        };
        let mut out = Relation::with_owned(self.name.clone(), attrs.iter().map(|a| a.to_string()).collect(), key)?;
        out.rows = self.rows.iter().map(|r| self.values(r, &idx)).collect();
        Ok(out)
    }

    /// Set union of relations with identical schemas.
    pub fn union(&self, other: &Relation) -> Result<Relation, TabularError> {
        if self.schema != other.schema {
            return Err(TabularError::SchemaMismatch(self.name.clone(), other.name.clone()));
        }
        let mut out = self.clone();
        out.rows.extend(other.rows.iter().cloned());
        Ok(out)
    }

    fn empty_like(&self) -> Relation {
        Relation {
            name: self.name.clone(),
            schema: self.schema.clone(),
            key: self.key.clone(),
            rows: BTreeSet::new(),
        }
    }
}

/// Natural join on all shared attribute names (cross product when none).
/// Output schema is `a`'s attributes followed by `b`'s remaining ones;
/// the key is the union of both keys.
pub fn natural_join(a: &Relation, b: &Relation) -> Relation {
    let shared: Vec<(usize, usize)> = a
        .schema
        .iter()
        .enumerate()
        .filter_map(|(i, attr)| b.schema.iter().position(|x| x == attr).map(|j| (i, j)))
        .collect();
    let b_rest: Vec<usize> = (0..b.schema.len()).filter(|j| !shared.iter().any(|(_, sj)| sj == j)).collect();
    let mut schema = a.schema.clone();
    schema.extend(b_rest.iter().map(|&j| b.schema[j].clone()));
    let mut key = a.key.clone();
    for k in &b.key {
        if !key.contains(k) {
            key.push(k.clone());
        }
    }
    let mut out = Relation {
        name: format!("{} JOIN {}", a.name, b.name),
        schema,
        key,
        rows: BTreeSet::new(),
    };
    let mut index: HashMap<Vec<&Term>, Vec<&Row>> = HashMap::new();
    'rows: for r in &b.rows {
        let mut k = Vec::with_capacity(shared.len());
        for &(_, j) in &shared {
            match &r[j] {
                Some(t) => k.push(t),
                None => continue 'rows,
            }
        }
        index.entry(k).or_default().push(r);
    }
    'outer: for ra in &a.rows {
        let mut k = Vec::with_capacity(shared.len());
        for &(i, _) in &shared {
            match &ra[i] {
                Some(t) => k.push(t),
                None => continue 'outer,
            }
        }
        if let Some(matches) = index.get(&k) {
            for rb in matches {
                let mut row = ra.clone();
                row.extend(b_rest.iter().map(|&j| rb[j].clone()));
                out.rows.insert(row);
            }
        }
    }
    out
}

/// Joins a chain of relations left to right.
pub fn join_all(relations: &[&Relation]) -> Option<Relation> {
    let (first, rest) = relations.split_first()?;
    Some(rest.iter().fold((*first).clone(), |acc, r| natural_join(&acc, r)))
}
