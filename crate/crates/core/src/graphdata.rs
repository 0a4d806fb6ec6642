//! Graph and paired-comparison data: construction, text formats, simulation,
//! and the strong-connectivity condition for the Bradley–Terry MLE.
//!
//! Node identifiers are 1-based in files and 0-based in memory.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Result, WilksError};
use crate::numerics::sigmoid;
use crate::params::ParamVector;

/// Simple undirected graph: no self-loops, no multi-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
}

impl UndirectedGraph {
    /// Builds a graph on `n` nodes. Edges are canonicalized to `(min, max)`;
    /// duplicates in either orientation collapse.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(WilksError::Domain(format!("a graph needs at least 2 nodes, got {n}")));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(WilksError::SelfLoop { line: 0, node: i + 1 });
            }
            if i >= n || j >= n {
                return Err(WilksError::DimensionMismatch {
                    expected: n,
                    found: i.max(j) + 1,
                });
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self::from_canonical(n, set.into_iter().collect()))
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degrees = vec![0; n];
        for &(i, j) in &edges {
            degrees[i] += 1;
            degrees[j] += 1;
        }
        UndirectedGraph { n, edges, degrees }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Canonical edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn density(&self) -> f64 {
        self.edges.len() as f64 / (self.n * (self.n - 1) / 2) as f64
    }
}

/// Win counts for every ordered pair of items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonData {
    n: usize,
    wins: Vec<u64>,
}

impl ComparisonData {
    /// `wins[i][j]` is the number of times item `i` beat item `j`.
    pub fn from_wins(wins: Vec<Vec<u64>>) -> Result<Self> {
        let n = wins.len();
        if n < 2 {
            return Err(WilksError::Domain(format!("comparison data needs at least 2 items, got {n}")));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in wins.iter().enumerate() {
            if row.len() != n {
                return Err(WilksError::DimensionMismatch { expected: n, found: row.len() });
            }
            if row[i] != 0 {
                return Err(WilksError::Domain(format!("item {} cannot beat itself", i + 1)));
            }
            flat.extend_from_slice(row);
        }
        Ok(ComparisonData { n, wins: flat })
    }

    fn zeros(n: usize) -> Self {
        ComparisonData {
            n,
            wins: vec![0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i * self.n + j]
    }

    /// Number of comparisons between `i` and `j`.
    #[inline]
    pub fn k(&self, i: usize, j: usize) -> u64 {
        self.wins(i, j) + self.wins(j, i)
    }

    pub fn out_wins(&self) -> Vec<u64> {
        self.wins.chunks(self.n).map(|row| row.iter().sum()).collect()
    }

    pub fn wins_matrix(&self) -> Vec<Vec<u64>> {
        self.wins.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// First unordered pair with no comparisons, if any.
    pub fn first_uncompared_pair(&self) -> Option<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .find(|&(i, j)| self.k(i, j) == 0)
    }
}

fn parse_id(token: &str, line: usize) -> Result<usize> {
    let id: usize = token.parse().map_err(|_| WilksError::Parse {
        line,
        message: format!("expected a positive integer node id, got {token:?}"),
    })?;
    if id == 0 {
        return Err(WilksError::Parse {
            line,
            message: "node ids are 1-based".into(),
        });
    }
    Ok(id)
}

/// Parses an optional `#n <count>` declaration.
fn declared_count(line: &str, lineno: usize) -> Result<Option<usize>> {
    let rest = line.trim_start_matches('#').trim_start();
    let mut parts = rest.split_whitespace();
    if parts.next() != Some("n") {
        return Ok(None);
    }
    match (parts.next(), parts.next()) {
        (Some(count), None) => count.parse().map(Some).map_err(|_| WilksError::Parse {
            line: lineno,
            message: format!("bad node count {count:?}"),
        }),
        _ => Ok(None),
    }
}

/// Reads a whitespace-separated edge list of 1-based node ids.
///
/// Lines starting with `#` are comments, except `#n <count>` which declares
/// the node count so isolated trailing nodes can be represented.
pub fn read_edge_list(text: &str) -> Result<UndirectedGraph> {
    let mut declared = None;
    let mut max_id = 0;
    let mut edges = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(c) = declared_count(line, lineno)? {
                declared = Some(c);
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(WilksError::Parse {
                line: lineno,
                message: format!("expected two node ids, found {} tokens", tokens.len()),
            });
        }
        let a = parse_id(tokens[0], lineno)?;
        let b = parse_id(tokens[1], lineno)?;
        if a == b {
            return Err(WilksError::SelfLoop { line: lineno, node: a });
        }
        max_id = max_id.max(a).max(b);
        edges.insert((a.min(b) - 1, a.max(b) - 1));
    }
    let n = match declared {
        Some(c) if c < max_id => {
            return Err(WilksError::Parse {
                line: 0,
                message: format!("declared #n {c} but node id {max_id} appears"),
            })
        }
        Some(c) => c,
        None => max_id,
    };
    if n < 2 {
        return Err(WilksError::Domain(format!("a graph needs at least 2 nodes, got {n}")));
    }
    Ok(UndirectedGraph::from_canonical(n, edges.into_iter().collect()))
}

/// Canonical text form: a `#n` header followed by sorted 1-based edges.
pub fn write_edge_list(g: &UndirectedGraph) -> String {
    let mut out = String::with_capacity(8 * g.edges.len() + 16);
    let _ = writeln!(out, "#n {}", g.n);
    for &(i, j) in &g.edges {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}

/// Reads `i,j,wins_of_i_over_j` rows (1-based ids). Repeated `(i, j)` rows accumulate.
/// A non-numeric first row is taken as a header; `#` lines are comments and
/// `#n <count>` declares the item count.
pub fn read_comparisons(text: &str) -> Result<ComparisonData> {
    let mut declared = None;
    let mut rows: Vec<(usize, usize, u64)> = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(c) = declared_count(line, lineno)? {
                declared = Some(c);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_data && fields.iter().all(|f| f.parse::<i64>().is_err()) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        if fields.len() != 3 {
            return Err(WilksError::Parse {
                line: lineno,
                message: format!("expected 3 comma-separated fields, found {}", fields.len()),
            });
        }
        let i = parse_id(fields[0], lineno)?;
        let j = parse_id(fields[1], lineno)?;
        let w: i64 = fields[2].parse().map_err(|_| WilksError::Parse {
            line: lineno,
            message: format!("bad win count {:?}", fields[2]),
        })?;
        if w < 0 {
            return Err(WilksError::NegativeCount { line: lineno });
        }
        if i == j {
            return Err(WilksError::SelfLoop { line: lineno, node: i });
        }
        rows.push((i - 1, j - 1, w as u64));
    }
    let max_id = rows.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(c) if c < max_id => {
            return Err(WilksError::Parse {
                line: 0,
                message: format!("declared #n {c} but item id {max_id} appears"),
            })
        }
        Some(c) => c,
        None => max_id,
    };
    if n < 2 {
        return Err(WilksError::Domain(format!("comparison data needs at least 2 items, got {n}")));
    }
    let mut data = ComparisonData::zeros(n);
    for (i, j, w) in rows {
        data.wins[i * n + j] += w;
    }
    Ok(data)
}

/// Canonical CSV form with a header row, one row per ordered pair with nonzero wins.
pub fn write_comparisons(data: &ComparisonData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "#n {}", data.n);
    out.push_str("i,j,wins\n");
    for i in 0..data.n {
        for j in 0..data.n {
            let w = data.wins(i, j);
            if w > 0 {
                let _ = writeln!(out, "{},{},{}", i + 1, j + 1, w);
            }
        }
    }
    out
}

fn reaches_all(n: usize, arc: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if !seen[v] && arc(u, v) {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// True when the digraph with an arc `i -> j` whenever `i` beat `j` at least once is strongly connected.
pub fn is_strongly_connected(data: &ComparisonData) -> bool {
    let n = data.n;
    reaches_all(n, |u, v| u != v && data.wins(u, v) > 0) && reaches_all(n, |u, v| u != v && data.wins(v, u) > 0)
}

/// Samples a graph with independent edges `P({i,j}) = sigmoid(beta_i + beta_j)`.
pub fn simulate_beta_graph(beta: &ParamVector, rng_seed: u64) -> Result<UndirectedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    simulate_beta_graph_with(beta, &mut rng)
}

pub fn simulate_beta_graph_with<R: Rng + ?Sized>(beta: &ParamVector, rng: &mut R) -> Result<UndirectedGraph> {
    let b = beta.values();
    let n = b.len();
    if n < 2 {
        return Err(WilksError::Domain(format!("a graph needs at least 2 nodes, got {n}")));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < sigmoid(b[i] + b[j]) {
                edges.push((i, j));
            }
        }
    }
    Ok(UndirectedGraph::from_canonical(n, edges))
}

/// Samples Bradley–Terry outcomes with `k_common` comparisons per pair and
/// `P(i beats j) = sigmoid(beta_i - beta_j)`.
pub fn simulate_bt_data(beta: &ParamVector, k_common: u64, rng_seed: u64) -> Result<ComparisonData> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    simulate_bt_data_with(beta, k_common, &mut rng)
}

pub fn simulate_bt_data_with<R: Rng + ?Sized>(beta: &ParamVector, k_common: u64, rng: &mut R) -> Result<ComparisonData> {
    let b = beta.values();
    let n = b.len();
    if n < 2 {
        return Err(WilksError::Domain(format!("comparison data needs at least 2 items, got {n}")));
    }
    if k_common == 0 {
        return Err(WilksError::Domain("k_common must be >= 1".into()));
    }
    let mut data = ComparisonData::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let p = sigmoid(b[i] - b[j]);
            let w = Binomial::new(k_common, p)
                .map_err(|e| WilksError::Domain(format!("binomial sampler: {e}")))?
                .sample(rng);
            data.wins[i * n + j] = w;
            data.wins[j * n + i] = k_common - w;
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_basic() {
        let g = read_edge_list("1 2\n1 3\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
        assert_eq!(g.degrees(), &[2, 1, 1]);
    }

    #[test]
    fn edge_list_duplicates_collapse() {
        let g = read_edge_list("1 2\n2 1\n1 2\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(read_edge_list("1 1\n"), Err(WilksError::SelfLoop { line: 1, node: 1 })));
        assert!(matches!(read_edge_list("1 2\n1 x\n"), Err(WilksError::Parse { line: 2, .. })));
        assert!(matches!(read_edge_list("1 2 3\n"), Err(WilksError::Parse { line: 1, .. })));
        assert!(matches!(read_edge_list("0 2\n"), Err(WilksError::Parse { .. })));
        assert!(matches!(read_edge_list("#n 2\n1 5\n"), Err(WilksError::Parse { .. })));
    }

    #[test]
    fn edge_list_declared_isolated_nodes_and_comments() {
        let g = read_edge_list("# a comment\n#n 5\n1 2\n\n2 3\n").unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.degrees(), &[1, 2, 1, 0, 0]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = read_edge_list("#n 6\n3 1\n2 5\n1 2\n").unwrap();
        let text = write_edge_list(&g);
        assert_eq!(read_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn comparisons_basic() {
        let d = read_comparisons("1,2,3\n2,1,1\n").unwrap();
        assert_eq!(d.wins(0, 1), 3);
        assert_eq!(d.wins(1, 0), 1);
        assert_eq!(d.k(0, 1), 4);
        assert_eq!(d.k(1, 0), 4);
        assert_eq!(d.out_wins(), vec![3, 1]);
    }

    #[test]
    fn comparisons_accumulate_and_header() {
        let d = read_comparisons("i,j,wins\n1,2,1\n1,2,2\n").unwrap();
        assert_eq!(d.wins(0, 1), 3);
        assert_eq!(d, read_comparisons(&write_comparisons(&d)).unwrap());
    }

    #[test]
    fn comparisons_errors() {
        assert!(matches!(read_comparisons("1,2,-1\n"), Err(WilksError::NegativeCount { line: 1 })));
        assert!(matches!(read_comparisons("1,2\n"), Err(WilksError::Parse { line: 1, .. })));
        assert!(matches!(read_comparisons("1,2,1\n1,2,z\n"), Err(WilksError::Parse { line: 2, .. })));
        assert!(matches!(read_comparisons("2,2,1\n"), Err(WilksError::SelfLoop { .. })));
    }

    #[test]
    fn strong_connectivity() {
        let cyc = ComparisonData::from_wins(vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        assert!(is_strongly_connected(&cyc));
        let one_way = ComparisonData::from_wins(vec![vec![0, 1], vec![0, 0]]).unwrap();
        assert!(!is_strongly_connected(&one_way));
        let two_cycles = ComparisonData::from_wins(vec![
            vec![0, 1, 0, 0],
            vec![1, 0, 0, 0],
            vec![0, 0, 0, 1],
            vec![0, 0, 1, 0],
        ])
        .unwrap();
        assert!(!is_strongly_connected(&two_cycles));
    }

    #[test]
    fn saturated_simulations() {
        let lo = ParamVector::new(vec![-100.0; 20]).unwrap();
        assert_eq!(simulate_beta_graph(&lo, 1).unwrap().edge_count(), 0);
        let hi = ParamVector::new(vec![100.0; 20]).unwrap();
        assert_eq!(simulate_beta_graph(&hi, 1).unwrap().edge_count(), 190);
        let bt = ParamVector::new(vec![0.0, -100.0]).unwrap();
        let d = simulate_bt_data(&bt, 5, 3).unwrap();
        assert_eq!(d.wins(0, 1), 5);
        assert_eq!(d.wins(1, 0), 0);
    }

    #[test]
    fn bt_single_comparison_complement() {
        let beta = ParamVector::zeros(3);
        let d = simulate_bt_data(&beta, 1, 11).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(d.wins(i, j) <= 1);
                    assert_eq!(d.k(i, j), 1);
                }
            }
        }
    }

    #[test]
    fn beta_zero_density_near_half() {
        let beta = ParamVector::zeros(1000);
        let g = simulate_beta_graph(&beta, 2024).unwrap();
        assert!((g.density() - 0.5).abs() < 0.01, "density {}", g.density());
    }

    #[test]
    fn bt_zero_mean_win_rate() {
        let beta = ParamVector::zeros(200);
        let d = simulate_bt_data(&beta, 3, 5).unwrap();
        let mut total = 0.0;
        let mut pairs = 0.0;
        for i in 0..200 {
            for j in i + 1..200 {
                total += d.wins(i, j) as f64 / 3.0;
                pairs += 1.0;
            }
        }
        assert!((total / pairs - 0.5).abs() < 0.01);
    }

    #[test]
    fn simulation_is_seed_deterministic() {
        let beta = ParamVector::new((0..30).map(|i| i as f64 / 30.0).collect()).unwrap();
        assert_eq!(simulate_beta_graph(&beta, 9).unwrap(), simulate_beta_graph(&beta, 9).unwrap());
        assert_eq!(simulate_bt_data(&beta, 2, 9).unwrap(), simulate_bt_data(&beta, 2, 9).unwrap());
        assert_ne!(simulate_beta_graph(&beta, 9).unwrap(), simulate_beta_graph(&beta, 10).unwrap());
    }
}
