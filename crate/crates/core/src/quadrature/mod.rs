//! Two-dimensional cosine integrals
//!
//! ```text
//! J(p, q; δ) = ∫₀¹∫₀¹ cos(pπu1) cos(qπu2) / (u1 + u2 + δ) du1 du2
//! ```
//!
//! Every gravitational matrix element in the sine basis is a signed sum of
//! four of them, so a `(2·nmax + 1)²` table replaces `O(nmax⁴)` separate 2-D
//! integrals.

mod panels;
mod store;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use store::{read_header, read_table, write_table, TableHeader, TABLE_MAGIC};

/// Bumped whenever the quadrature rule changes, invalidating cached tables.
pub const TABLE_VERSION: u32 = 1;

/// Default target accuracy of table entries.
pub const DEFAULT_ACCURACY: f64 = 1e-10;

static KERNEL_EVALUATIONS: AtomicU64 = AtomicU64::new(0);

/// Total number of kernel evaluations performed by this process.
pub fn kernel_evaluations() -> u64 {
    KERNEL_EVALUATIONS.load(Ordering::Relaxed)
}

fn count(n: usize) {
    KERNEL_EVALUATIONS.fetch_add(n as u64, Ordering::Relaxed);
}

/// The cache key form of δ: rounded to 12 decimals.
pub fn delta_key(delta: f64) -> String {
    format!("{delta:.12}")
}

pub fn same_delta(a: f64, b: f64) -> bool {
    delta_key(a) == delta_key(b)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "delta must be > 0 (kernel is singular at the origin), got {delta}"
        )))
    }
}

fn check_accuracy(accuracy: f64) -> Result<()> {
    if accuracy > 0.0 && accuracy <= 1e-6 {
        Ok(())
    } else {
        Err(Error::param("accuracy", format!("must lie in (0, 1e-6], got {accuracy}")))
    }
}

/// Evaluates a single `J(p, q; δ)` at the default accuracy.
pub fn j_entry(p: usize, q: usize, delta: f64) -> Result<f64> {
    j_entry_with(p, q, delta, DEFAULT_ACCURACY)
}

pub fn j_entry_with(p: usize, q: usize, delta: f64, accuracy: f64) -> Result<f64> {
    check_delta(delta)?;
    check_accuracy(accuracy)?;
    let rule = panels::graded_rule(delta, p.max(q), accuracy);
    let cp = rule.weighted_cosines(p);
    let cq = rule.weighted_cosines(q);
    count(rule.len() * rule.len());
    let total = rule
        .nodes
        .iter()
        .zip(&cp)
        .map(|(&x, &a)| {
            let inner: f64 = rule
                .nodes
                .iter()
                .zip(&cq)
                .map(|(&y, &b)| b / (x + y + delta))
                .sum();
            a * inner
        })
        .sum();
    Ok(total)
}

/// Symmetric table of `J(p, q; δ)` for `0 ≤ p, q ≤ pmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct JTable {
    pub delta: f64,
    pub pmax: usize,
    pub accuracy: f64,
    pub version: u32,
    values: Vec<f64>,
}

impl JTable {
    pub(crate) fn from_values(delta: f64, pmax: usize, accuracy: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), (pmax + 1) * (pmax + 1));
        Self {
            delta,
            pmax,
            accuracy,
            version: TABLE_VERSION,
            values,
        }
    }

    #[inline]
    pub fn at(&self, p: usize, q: usize) -> f64 {
        self.values[p * (self.pmax + 1) + q]
    }

    pub fn get(&self, p: usize, q: usize) -> Result<f64> {
        if p > self.pmax || q > self.pmax {
            return Err(Error::Bounds(format!(
                "J({p}, {q}) requested from a table with pmax = {}",
                self.pmax
            )));
        }
        Ok(self.at(p, q))
    }

    /// Row-major `(pmax+1)²` values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The leading `(pmax+1)²` block as a table of its own.
    pub fn prefix(&self, pmax: usize) -> Result<JTable> {
        if pmax > self.pmax {
            return Err(Error::Bounds(format!(
                "prefix pmax {pmax} exceeds stored pmax {}",
                self.pmax
            )));
        }
        let n = pmax + 1;
        let mut values = Vec::with_capacity(n * n);
        for p in 0..n {
            values.extend_from_slice(&self.values[p * (self.pmax + 1)..][..n]);
        }
        Ok(JTable {
            values,
            pmax,
            ..self.clone()
        })
    }

    /// The bracket `J(|i−k|,|j−l|) − J(i+k,|j−l|) − J(|i−k|,j+l) + J(i+k,j+l)`,
    /// i.e. `⟨i j|1/(u1+u2+δ)|k l⟩` in the normalized sine basis.
    #[inline]
    pub fn kernel_element(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let dm1 = i.abs_diff(k);
        let sp1 = i + k;
        let dm2 = j.abs_diff(l);
        let sp2 = j + l;
        self.at(dm1, dm2) - self.at(sp1, dm2) - self.at(dm1, sp2) + self.at(sp1, sp2)
    }
}

/// Builds the full table on one shared panel grid.
///
/// With `C[n][p] = cos(pπx_n)` and `K[n][m] = w_n w_m/(x_n + x_m + δ)` the table
/// is `Cᵀ K C`; only `p ≤ q` is summed and the lower triangle is mirrored.
pub fn build_table(delta: f64, pmax: usize, accuracy: f64) -> Result<JTable> {
    check_delta(delta)?;
    check_accuracy(accuracy)?;
    if pmax < 2 {
        return Err(Error::param("pmax", format!("must be >= 2, got {pmax}")));
    }
    let rule = panels::graded_rule(delta, pmax, accuracy);
    let n = rule.len();
    let np = pmax + 1;

    let kernel: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (a, b) = (idx / n, idx % n);
            rule.weights[a] * rule.weights[b] / (rule.nodes[a] + rule.nodes[b] + delta)
        })
        .collect();
    count(n * n);

    // cosines[p * n + node]
    let cosines: Vec<f64> = (0..np)
        .flat_map(|p| {
            let k = p as f64 * std::f64::consts::PI;
            rule.nodes.iter().map(move |&x| (k * x).cos())
        })
        .collect();

    // kc[q * n + node] = Σ_m K[node][m] C[m][q]
    let kc: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|q| {
            let cq = &cosines[q * n..][..n];
            let mut col = vec![0.0; n];
            for (m, &c) in cq.iter().enumerate() {
                let row = &kernel[m * n..][..n];
                for (acc, &k) in col.iter_mut().zip(row) {
                    *acc += k * c;
                }
            }
            col
        })
        .collect();

    let upper: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|p| {
            let cp = &cosines[p * n..][..n];
            (p..np)
                .map(|q| cp.iter().zip(&kc[q]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();

    let mut values = vec![0.0; np * np];
    for (p, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let q = p + off;
            values[p * np + q] = v;
            values[q * np + p] = v;
        }
    }
    Ok(JTable::from_values(delta, pmax, accuracy, values))
}

/// `⟨i j|V|k l⟩ = −γ·[J(|i−k|,|j−l|) − J(i+k,|j−l|) − J(|i−k|,j+l) + J(i+k,j+l)]`
/// with 1-based level indices.
pub fn interaction_element(
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    table: &JTable,
    gamma: f64,
) -> Result<f64> {
    if [i, j, k, l].contains(&0) {
        return Err(Error::Bounds("level indices start at 1".into()));
    }
    if i + k > table.pmax || j + l > table.pmax {
        return Err(Error::Bounds(format!(
            "element <{i} {j}|V|{k} {l}> needs pmax >= {}, table has {}",
            (i + k).max(j + l),
            table.pmax
        )));
    }
    Ok(-gamma * table.kernel_element(i, j, k, l))
}

/// Supplies J-tables to the solvers; implementations may cache.
pub trait TableSource: Sync {
    fn table(&self, delta: f64, pmax: usize) -> Result<Arc<JTable>>;
}

/// Builds every requested table from scratch.
#[derive(Debug, Clone, Copy)]
pub struct TableBuilder {
    pub accuracy: f64,
}

impl Default for TableBuilder {
    fn default() -> Self {
        Self {
            accuracy: DEFAULT_ACCURACY,
        }
    }
}

impl TableSource for TableBuilder {
    fn table(&self, delta: f64, pmax: usize) -> Result<Arc<JTable>> {
        build_table(delta, pmax, self.accuracy).map(Arc::new)
    }
}

/// In-process memo keyed by rounded δ; larger requests replace smaller tables.
#[derive(Debug, Default)]
pub struct MemoryTables {
    accuracy: f64,
    tables: Mutex<HashMap<String, Arc<JTable>>>,
}

impl MemoryTables {
    pub fn new(accuracy: f64) -> Self {
        Self {
            accuracy,
            tables: Mutex::new(HashMap::new()),
        }
    }
}

impl TableSource for MemoryTables {
    fn table(&self, delta: f64, pmax: usize) -> Result<Arc<JTable>> {
        let key = delta_key(delta);
        if let Some(t) = self.tables.lock().expect("table memo poisoned").get(&key) {
            if t.pmax == pmax {
                return Ok(Arc::clone(t));
            }
            if t.pmax > pmax {
                return t.prefix(pmax).map(Arc::new);
            }
        }
        let t = Arc::new(build_table(delta, pmax, self.accuracy)?);
        self.tables
            .lock()
            .expect("table memo poisoned")
            .insert(key, Arc::clone(&t));
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn closed_form_j00(delta: f64) -> f64 {
        let f = |s: f64| s * s.ln();
        f(2.0 + delta) - 2.0 * f(1.0 + delta) + f(delta)
    }

    #[test]
    fn j00_examples() {
        assert_relative_eq!(j_entry(0, 0, 1.0).unwrap(), 3.0 * 3f64.ln() - 4.0 * 2f64.ln(), max_relative = 1e-13);
        assert!((j_entry(0, 0, 1.0).unwrap() - 0.52325).abs() < 5e-6);
        let j = j_entry(0, 0, 0.02).unwrap();
        assert!((j - 1.30156).abs() < 1e-4, "{j}");
        assert_relative_eq!(j, closed_form_j00(0.02), max_relative = 1e-12);
    }

    #[test]
    fn entry_symmetry_and_domain() {
        for delta in [0.02, 0.3, 1.7] {
            let a = j_entry(3, 7, delta).unwrap();
            let b = j_entry(7, 3, delta).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
        assert!(matches!(j_entry(0, 0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(j_entry(0, 0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn table_agrees_with_entries() {
        let t = build_table(0.02, 24, 1e-10).unwrap();
        for &(p, q) in &[(0, 0), (0, 2), (2, 2), (5, 11), (24, 24), (0, 24), (13, 1)] {
            let e = j_entry(p, q, 0.02).unwrap();
            assert_relative_eq!(t.at(p, q), e, max_relative = 1e-10);
        }
        let t1 = build_table(1.0, 4, 1e-10).unwrap();
        assert!((t1.at(0, 0) - 0.52325).abs() < 5e-6);
    }

    #[test]
    fn table_is_mirrored_and_deterministic() {
        let a = build_table(0.05, 30, 1e-10).unwrap();
        for p in 0..=30 {
            for q in 0..=30 {
                assert_eq!(a.at(p, q).to_bits(), a.at(q, p).to_bits());
            }
        }
        let b = build_table(0.05, 30, 1e-10).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn table_invariants() {
        let t = build_table(0.02, 40, 1e-10).unwrap();
        let j00 = t.at(0, 0);
        assert!(j00 > 0.0);
        assert!(t.values().iter().all(|v| v.abs() <= j00));
        for p in 4..=40 {
            assert!(t.at(p, 0).abs() < t.at(p - 4, 0).abs(), "p = {p}");
        }
    }

    #[test]
    fn prefix_matches_parent() {
        let t = build_table(0.1, 20, 1e-10).unwrap();
        let s = t.prefix(8).unwrap();
        assert_eq!(s.pmax, 8);
        for p in 0..=8 {
            for q in 0..=8 {
                assert_eq!(s.at(p, q), t.at(p, q));
            }
        }
        assert!(t.prefix(21).is_err());
    }

    #[test]
    fn build_rejects_bad_arguments() {
        assert!(build_table(0.1, 1, 1e-10).is_err());
        assert!(build_table(0.1, 8, 1e-3).is_err());
        assert!(matches!(build_table(0.0, 8, 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn interaction_element_basics() {
        let t = build_table(0.02, 8, 1e-10).unwrap();
        let v = interaction_element(1, 1, 1, 1, &t, 2.0).unwrap();
        let expect = -2.0 * (t.at(0, 0) - 2.0 * t.at(0, 2) + t.at(2, 2));
        assert_relative_eq!(v, expect, max_relative = 1e-14);
        assert_eq!(interaction_element(2, 3, 1, 4, &t, 0.0).unwrap(), 0.0);
        let a = interaction_element(1, 3, 2, 4, &t, 1.0).unwrap();
        let b = interaction_element(3, 1, 4, 2, &t, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(matches!(interaction_element(4, 1, 5, 1, &t, 1.0), Err(Error::Bounds(_))));
        assert!(matches!(interaction_element(0, 1, 1, 1, &t, 1.0), Err(Error::Bounds(_))));
    }

    #[test]
    fn memory_tables_reuse_and_prefix() {
        let src = MemoryTables::new(1e-10);
        let a = src.table(0.25, 20).unwrap();
        let b = src.table(0.25, 20).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let c = src.table(0.25, 10).unwrap();
        assert_eq!(c.pmax, 10);
        assert_eq!(c.at(3, 4), a.at(3, 4));
    }
}
