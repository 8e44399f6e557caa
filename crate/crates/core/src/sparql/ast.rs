//! Query AST for the supported SELECT subset, with a serializer that
//! emits text the parser accepts.

use std::collections::BTreeSet;
use std::fmt;

use crate::rdf::{PatternTerm, Term, TriplePattern};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Prefix declarations kept for serialization only; parsed IRIs are absolute.
    pub prefixes: Vec<(String, String)>,
    pub select: Selection,
    pub distinct: bool,
    pub pattern: GraphPattern,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Star,
    Vars(Vec<Projection>),
}

/// `?var` or `(?var AS ?alias)`. The alias may coincide with a pattern
/// variable; the column then reports `var`, which is how rewritten queries
/// keep the original header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub var: String,
    pub alias: Option<String>,
}

impl Projection {
    pub fn plain(var: impl Into<String>) -> Self {
        Projection {
            var: var.into(),
            alias: None,
        }
    }

    /// Column name in the result header.
    pub fn output_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphPattern {
    Bgp(Bgp),
    Union(Box<GraphPattern>, Box<GraphPattern>),
}

/// Conjunction of triple patterns plus the filters scoped to it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bgp {
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Var(String),
    Const(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterExpr {
    Compare(CmpOp, Operand, Operand),
    And(Box<FilterExpr>, Box<FilterExpr>),
    Or(Box<FilterExpr>, Box<FilterExpr>),
    Not(Box<FilterExpr>),
}

impl FilterExpr {
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            FilterExpr::Compare(_, a, b) => {
                for op in [a, b] {
                    if let Operand::Var(v) = op {
                        out.insert(v);
                    }
                }
            }
            FilterExpr::And(a, b) | FilterExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            FilterExpr::Not(a) => a.collect_vars(out),
        }
    }

    pub fn map_vars(&self, f: &impl Fn(&str) -> String) -> FilterExpr {
        let op = |o: &Operand| match o {
            Operand::Var(v) => Operand::Var(f(v)),
            c => c.clone(),
        };
        match self {
            FilterExpr::Compare(c, a, b) => FilterExpr::Compare(*c, op(a), op(b)),
            FilterExpr::And(a, b) => {
                FilterExpr::And(Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            FilterExpr::Or(a, b) => {
                FilterExpr::Or(Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            FilterExpr::Not(a) => FilterExpr::Not(Box::new(a.map_vars(f))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderKey {
    pub var: String,
    pub descending: bool,
}

impl GraphPattern {
    /// All variables occurring in triple patterns, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for bgp in self.bgps() {
            for v in bgp.patterns.iter().flat_map(|p| p.variables()) {
                if seen.insert(v.to_string()) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }

    /// BGPs in left-to-right order.
    pub fn bgps(&self) -> Vec<&Bgp> {
        match self {
            GraphPattern::Bgp(b) => vec![b],
            GraphPattern::Union(a, b) => {
                let mut out = a.bgps();
                out.extend(b.bgps());
                out
            }
        }
    }

    pub fn union_count(&self) -> usize {
        match self {
            GraphPattern::Bgp(_) => 0,
            GraphPattern::Union(a, b) => 1 + a.union_count() + b.union_count(),
        }
    }

    pub fn triple_pattern_count(&self) -> usize {
        self.bgps().iter().map(|b| b.patterns.len()).sum()
    }

    /// Rebuilds the pattern with every BGP passed through `f`, keeping the
    /// UNION structure.
    pub fn map_bgps(&self, f: &mut impl FnMut(&Bgp) -> Bgp) -> GraphPattern {
        match self {
            GraphPattern::Bgp(b) => GraphPattern::Bgp(f(b)),
            GraphPattern::Union(a, b) => {
                let left = a.map_bgps(f);
                let right = b.map_bgps(f);
                GraphPattern::Union(Box::new(left), Box::new(right))
            }
        }
    }
}

impl Query {
    /// Projections after expanding `*`.
    pub fn projections(&self) -> Vec<Projection> {
        match &self.select {
            Selection::Star => self
                .pattern
                .variables()
                .into_iter()
                .map(Projection::plain)
                .collect(),
            Selection::Vars(v) => v.clone(),
        }
    }

    pub fn output_names(&self) -> Vec<String> {
        self.projections()
            .iter()
            .map(|p| p.output_name().to_string())
            .collect()
    }
}

struct Writer<'a> {
    prefixes: &'a [(String, String)],
}

fn is_local_safe(local: &str) -> bool {
    !local.is_empty()
        && local
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && !local.starts_with('-')
}

impl Writer<'_> {
    fn term(&self, t: &Term) -> String {
        if let Term::Iri(iri) = t {
            for (prefix, ns) in self.prefixes {
                if let Some(local) = iri.strip_prefix(ns.as_str()) {
                    if is_local_safe(local) {
                        return format!("{prefix}:{local}");
                    }
                }
            }
        }
        t.to_string()
    }

    fn pattern_term(&self, pt: &PatternTerm) -> String {
        match pt {
            PatternTerm::Var(v) => format!("?{v}"),
            PatternTerm::Const(t) => self.term(t),
        }
    }

    fn operand(&self, o: &Operand) -> String {
        match o {
            Operand::Var(v) => format!("?{v}"),
            Operand::Const(t) => self.term(t),
        }
    }

    fn expr(&self, e: &FilterExpr) -> String {
        match e {
            FilterExpr::Compare(op, a, b) => {
                format!("{} {} {}", self.operand(a), op.symbol(), self.operand(b))
            }
            FilterExpr::And(a, b) => format!("({}) && ({})", self.expr(a), self.expr(b)),
            FilterExpr::Or(a, b) => format!("({}) || ({})", self.expr(a), self.expr(b)),
            FilterExpr::Not(a) => format!("!({})", self.expr(a)),
        }
    }

    fn group(&self, p: &GraphPattern, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match p {
            GraphPattern::Bgp(b) => {
                for tp in &b.patterns {
                    out.push_str(&format!(
                        "{pad}{} {} {} .\n",
                        self.pattern_term(&tp.subject),
                        self.pattern_term(&tp.predicate),
                        self.pattern_term(&tp.object)
                    ));
                }
                for f in &b.filters {
                    out.push_str(&format!("{pad}FILTER ({})\n", self.expr(f)));
                }
            }
            GraphPattern::Union(a, b) => {
                // left-nested unions print as a flat chain
                let mut branches = vec![b.as_ref()];
                let mut left = a.as_ref();
                while let GraphPattern::Union(l, r) = left {
                    branches.push(r);
                    left = l;
                }
                branches.push(left);
                branches.reverse();
                for (i, branch) in branches.into_iter().enumerate() {
                    if i > 0 {
                        out.push_str(&format!("{pad}UNION\n"));
                    }
                    out.push_str(&format!("{pad}{{\n"));
                    self.group(branch, indent + 1, out);
                    out.push_str(&format!("{pad}}}\n"));
                }
            }
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = Writer {
            prefixes: &self.prefixes,
        };
        for (prefix, ns) in &self.prefixes {
            writeln!(f, "PREFIX {prefix}: <{ns}>")?;
        }
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        match &self.select {
            Selection::Star => f.write_str("*")?,
            Selection::Vars(vars) => {
                let items: Vec<String> = vars
                    .iter()
                    .map(|p| match &p.alias {
                        Some(a) => format!("(?{} AS ?{a})", p.var),
                        None => format!("?{}", p.var),
                    })
                    .collect();
                f.write_str(&items.join(" "))?;
            }
        }
        f.write_str("\nWHERE {\n")?;
        let mut body = String::new();
        w.group(&self.pattern, 1, &mut body);
        f.write_str(&body)?;
        f.write_str("}\n")?;
        if !self.order_by.is_empty() {
            let keys: Vec<String> = self
                .order_by
                .iter()
                .map(|k| format!("{}(?{})", if k.descending { "DESC" } else { "ASC" }, k.var))
                .collect();
            writeln!(f, "ORDER BY {}", keys.join(" "))?;
        }
        if let Some(n) = self.limit {
            writeln!(f, "LIMIT {n}")?;
        }
        Ok(())
    }
}
