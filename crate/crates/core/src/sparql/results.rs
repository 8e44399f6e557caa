//! Solution sets, their canonical ordering and TSV output.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::rdf::Term;

/// Rows over a fixed header; `None` marks an unbound cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionSet {
    pub variables: Vec<String>,
    pub rows: Vec<Vec<Option<Term>>>,
}

fn rank(t: &Term) -> u8 {
    match t {
        Term::Blank(_) => 0,
        Term::Iri(_) => 1,
        Term::Literal(l) if l.as_number().is_some() => 2,
        Term::Literal(_) => 3,
    }
}

/// Total order on terms: blank nodes, IRIs, numeric literals (by value),
/// then other literals; ties fall back to the structural order.
pub fn compare_terms(a: &Term, b: &Term) -> Ordering {
    rank(a).cmp(&rank(b)).then_with(|| {
        if let (Term::Literal(x), Term::Literal(y)) = (a, b) {
            if let (Some(nx), Some(ny)) = (x.as_number(), y.as_number()) {
                return nx.total_cmp(&ny).then_with(|| a.cmp(b));
            }
        }
        a.cmp(b)
    })
}

/// Unbound sorts first.
pub(crate) fn compare_cells(a: &Option<Term>, b: &Option<Term>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => compare_terms(x, y),
    }
}

pub(crate) fn compare_rows(a: &[Option<Term>], b: &[Option<Term>]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| compare_cells(x, y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

impl SolutionSet {
    pub fn new(variables: Vec<String>) -> Self {
        SolutionSet {
            variables,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Index of a header variable.
    pub fn column(&self, var: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == var)
    }

    /// Rows in canonical order, ignoring any ORDER BY sequence.
    pub fn sorted_rows(&self) -> Vec<Vec<Option<Term>>> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| compare_rows(a, b));
        rows
    }

    /// Same header and same rows as a set.
    pub fn same_set(&self, other: &SolutionSet) -> bool {
        self.variables == other.variables && self.sorted_rows() == other.sorted_rows()
    }

    /// Header of `?var` names, then one line per row with N-Triples cells;
    /// unbound cells are empty.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.variables.iter().map(|v| format!("?{v}")).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push('\t');
                }
                if let Some(t) = cell {
                    write!(out, "{t}").expect("string write");
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Literal;

    #[test]
    fn numeric_literals_order_by_value() {
        let n = |s: &str| Term::Literal(Literal::plain(s));
        let mut v = vec![
            n("10"),
            n("9.5"),
            n("abc"),
            Term::Iri("http://ex/a".into()),
            n("-1"),
        ];
        v.sort_by(compare_terms);
        assert_eq!(
            v,
            vec![
                Term::Iri("http://ex/a".into()),
                n("-1"),
                n("9.5"),
                n("10"),
                n("abc")
            ]
        );
        assert_eq!(compare_terms(&n("1.0"), &n("1")), n("1.0").cmp(&n("1")));
    }

    #[test]
    fn tsv_layout() {
        let s = SolutionSet {
            variables: vec!["a".into(), "b".into()],
            rows: vec![vec![Some(Term::Literal(Literal::plain("x\ty"))), None]],
        };
        assert_eq!(s.to_tsv(), "?a\t?b\n\"x\\ty\"\t\n");
    }
}
