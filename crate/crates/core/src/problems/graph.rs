//! Weighted graph Laplacians with a vertex potential, localized on a subset.

use std::collections::VecDeque;

use crate::linop::SparseOperator;
use crate::projectors::{indicator_projector, OrthoProjector};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GraphProblem {
    pub vertices: usize,
    /// `(u, v, w)` with `w ≥ 0`, each undirected edge listed once.
    pub edges: Vec<(usize, usize, f64)>,
    pub potential: Vec<f64>,
    pub subset: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GraphBuild {
    pub operator: SparseOperator,
    pub projector: OrthoProjector,
    pub components: usize,
}

/// Parses `u v [w]` lines (`w` defaults to 1); blank lines and `#` comments
/// are skipped. Returns the edges and the vertex count `1 + max index`.
pub fn parse_edge_list(text: &str) -> Result<(Vec<(usize, usize, f64)>, usize)> {
    let mut edges = Vec::new();
    let mut n = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| Error::InvalidParameter(format!("edge list line {}: {what}: {line:?}", lineno + 1));
        if !(2..=3).contains(&fields.len()) {
            return Err(bad("expected `u v w`"));
        }
        let u: usize = fields[0].parse().map_err(|_| bad("bad vertex"))?;
        let v: usize = fields[1].parse().map_err(|_| bad("bad vertex"))?;
        let w: f64 = match fields.get(2) {
            Some(f) => f.parse().map_err(|_| bad("bad weight"))?,
            None => 1.0,
        };
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v, w));
    }
    Ok((edges, n))
}

fn components(n: usize, edges: &[(usize, usize, f64)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        if w > 0.0 {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    count
}

/// `L = D − A + diag(potential)` and `Q` = indicator of `subset`. A
/// disconnected graph is allowed but logged.
pub fn graph_problem(problem: &GraphProblem) -> Result<GraphBuild> {
    let n = problem.vertices;
    if problem.potential.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: problem.potential.len(),
        });
    }
    if problem.subset.is_empty() {
        return Err(Error::InvalidParameter("subset must be nonempty".into()));
    }
    let mut degree = problem.potential.clone();
    let mut t = Vec::with_capacity(2 * problem.edges.len() + n);
    for &(u, v, w) in &problem.edges {
        if u >= n || v >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.max(v) + 1,
            });
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("edge ({u}, {v}) has weight {w}")));
        }
        if u == v {
            continue;
        }
        degree[u] += w;
        degree[v] += w;
        t.push((u, v, -w));
        t.push((v, u, -w));
    }
    for (i, d) in degree.into_iter().enumerate() {
        t.push((i, i, d));
    }
    let operator = SparseOperator::from_real_triplets(n, &t)?;
    let mut mask = vec![0.0; n];
    for &k in &problem.subset {
        if k >= n {
            return Err(Error::DimensionMismatch { expected: n, got: k + 1 });
        }
        mask[k] = 1.0;
    }
    let projector = indicator_projector(&mask)?;
    let components = components(n, &problem.edges);
    if components > 1 {
        log::warn!("graph has {components} connected components");
    }
    Ok(GraphBuild {
        operator,
        projector,
        components,
    })
}

/// Two complete graphs `K_bell` joined through a path with `path` interior
/// vertices; the subset is the first bell.
pub fn barbell(bell: usize, path: usize) -> GraphProblem {
    let mut edges = Vec::new();
    let n = 2 * bell + path;
    for offset in [0, bell + path] {
        for i in 0..bell {
            for j in i + 1..bell {
                edges.push((offset + i, offset + j, 1.0));
            }
        }
    }
    // bell vertex bell−1 → path → first vertex of the second bell
    let chain: Vec<usize> = std::iter::once(bell - 1).chain(bell..bell + path).chain([bell + path]).collect();
    for w in chain.windows(2) {
        edges.push((w[0], w[1], 1.0));
    }
    GraphProblem {
        vertices: n,
        edges,
        potential: vec![0.0; n],
        subset: (0..bell).collect(),
    }
}
