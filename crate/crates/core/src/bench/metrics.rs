//! Size and timing metrics of a factorization.

use serde::Serialize;

use crate::rdf::{avg_neighbors, Graph};
use crate::ssn::{enumerate_groups, Vocabulary};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    /// Time to parse the original graph; not comparable to a store's load time.
    pub load_ms: f64,
    pub factorize_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub nt_original: usize,
    pub nt_factorized: usize,
    pub pct_savings: f64,
    /// Pattern-complete observations of the original graph; the divisor of both averages.
    pub observations: usize,
    pub avg_nt_per_obs_original: f64,
    pub avg_nt_per_obs_factorized: f64,
    pub avg_neighbors_original: f64,
    pub avg_neighbors_factorized: f64,
    pub load_time_ms: f64,
    pub factorization_time_ms: f64,
}

/// Percentage of triples removed; 0 for an empty original and negative
/// when the factorized graph is larger.
pub fn pct_savings(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        100.0 * (before as f64 - after as f64) / before as f64
    }
}

/// Rounds half away from zero to two decimal places.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn compute_metrics(g: &Graph, g_prime: &Graph, v: &Vocabulary, timings: Timings) -> MetricsReport {
    let observations: usize = enumerate_groups(g, v).groups.values().map(|grp| grp.members.len()).sum();
    let per_obs = |nt: usize| if observations == 0 { 0.0 } else { nt as f64 / observations as f64 };
    MetricsReport {
        nt_original: g.len(),
        nt_factorized: g_prime.len(),
        pct_savings: pct_savings(g.len(), g_prime.len()),
        observations,
        avg_nt_per_obs_original: per_obs(g.len()),
        avg_nt_per_obs_factorized: per_obs(g_prime.len()),
        avg_neighbors_original: avg_neighbors(g),
        avg_neighbors_factorized: avg_neighbors(g_prime),
        load_time_ms: timings.load_ms,
        factorization_time_ms: timings.factorize_ms,
    }
}

impl MetricsReport {
    /// Two-column `metric\tvalue` table.
    pub fn to_tsv(&self) -> String {
        let rows = [
            ("nt_original", self.nt_original.to_string()),
            ("nt_factorized", self.nt_factorized.to_string()),
            ("pct_savings", format!("{:.2}", self.pct_savings)),
            ("observations", self.observations.to_string()),
            ("avg_nt_per_obs_original", format!("{:.2}", self.avg_nt_per_obs_original)),
            ("avg_nt_per_obs_factorized", format!("{:.2}", self.avg_nt_per_obs_factorized)),
            ("avg_neighbors_original", format!("{:.4}", self.avg_neighbors_original)),
            ("avg_neighbors_factorized", format!("{:.4}", self.avg_neighbors_factorized)),
            ("load_time_ms", format!("{:.3}", self.load_time_ms)),
            ("factorization_time_ms", format!("{:.3}", self.factorization_time_ms)),
        ];
        let mut out = String::from("metric\tvalue\n");
        for (k, v) in rows {
            out.push_str(&format!("{k}\t{v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::{factorize, FactorizationState};
    use crate::fixtures::sensor_example;

    #[test]
    fn savings_formula() {
        assert_eq!(format!("{:.2}", pct_savings(38_054_493, 17_800_156)), "53.22");
        assert_eq!(format!("{:.2}", pct_savings(90_000, 40_700)), "54.78");
        assert_eq!(round2(pct_savings(90_000, 40_700)), 54.78);
        assert_eq!(pct_savings(0, 0), 0.0);
        assert!(pct_savings(10, 12) < 0.0);
    }

    #[test]
    fn sensor_example_metrics() {
        let v = Vocabulary::default();
        let g = sensor_example();
        let f = factorize(&g, &FactorizationState::default(), &v).unwrap();
        let m = compute_metrics(&g, f.graph(), &v, Timings::default());
        assert_eq!((m.nt_original, m.nt_factorized, m.observations), (60, 44, 6));
        assert_eq!(m.avg_nt_per_obs_original, 10.0);
        let same = compute_metrics(&g, &g, &v, Timings::default());
        assert_eq!(same.pct_savings, 0.0);
        assert!(m.to_tsv().contains("pct_savings\t26.67\n"));
    }
}
