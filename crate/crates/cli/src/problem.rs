//! Turns a problem block into an operator, a projector and default search.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context};
use nearspace::eigensolve::{RegionSpec, SolverParams};
use nearspace::linop::{DiagonalOperator, HermitianOperator};
use nearspace::pipeline::{run, RunReport, SearchSpec};
use nearspace::problems::{
    barbell, c5_symmetry_problem, graph_problem, hex_annulus_problem, parse_edge_list, random_instance,
    square_well_problem, GraphProblem, GridProblem,
};
use nearspace::projectors::{indicator_projector, OrthoProjector};

use crate::config::ProblemConfig;

pub struct Built {
    pub operator: Arc<dyn HermitianOperator>,
    pub projector: OrthoProjector,
    pub default_spec: Option<SearchSpec>,
    /// Set for the grid builtins; carries the domain and the τ² convention.
    pub grid: Option<GridProblem>,
}

impl Built {
    fn from_grid(p: GridProblem) -> Self {
        Self {
            operator: Arc::new(p.operator.clone()),
            projector: p.projector.clone(),
            default_spec: Some(p.spec),
            grid: Some(p),
        }
    }

    pub fn solve(&self, spec: &SearchSpec, params: &SolverParams) -> nearspace::Result<RunReport> {
        match &self.grid {
            Some(g) => {
                let mut g = g.clone();
                g.spec = *spec;
                g.solve(params)
            }
            None => run(self.operator.clone(), &self.projector, spec, params),
        }
    }
}

pub fn build(problem: &ProblemConfig, config_dir: &Path) -> anyhow::Result<Built> {
    Ok(match problem {
        ProblemConfig::DiagDemo => Built {
            operator: Arc::new(DiagonalOperator::new(vec![1.0, 2.0, 3.0])),
            projector: indicator_projector(&[1.0, 1.0, 0.0])?,
            default_spec: Some(SearchSpec::new(RegionSpec::new(0.5, 2.5, 0.1, 0.3)?)),
            grid: None,
        },
        ProblemConfig::SquareWell { n } => Built::from_grid(square_well_problem(*n)?),
        ProblemConfig::C5Symmetry { n } => Built::from_grid(c5_symmetry_problem(*n)?),
        ProblemConfig::HexAnnulus { n } => Built::from_grid(hex_annulus_problem(*n)?),
        ProblemConfig::Graph {
            edges,
            edges_file,
            vertices,
            potential,
            subset,
        } => {
            let (edges, seen) = match (edges, edges_file) {
                (Some(e), None) => {
                    let n = e.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0);
                    (e.clone(), n)
                }
                (None, Some(path)) => {
                    let path = config_dir.join(path);
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("cannot read edge list {}", path.display()))?;
                    parse_edge_list(&text)?
                }
                _ => bail!("graph: give exactly one of edges and edges_file"),
            };
            let n = vertices.unwrap_or(seen);
            let g = GraphProblem {
                vertices: n,
                edges,
                potential: potential.clone().unwrap_or_else(|| vec![0.0; n]),
                subset: subset.clone(),
            };
            from_graph(&g)?
        }
        ProblemConfig::Barbell { bell, path } => {
            if *bell < 2 {
                bail!("barbell: bells need at least 2 vertices");
            }
            let mut built = from_graph(&barbell(*bell, *path))?;
            built.default_spec = Some(SearchSpec::new(RegionSpec::new(0.0, *bell as f64 + 2.0, 0.1, 0.5)?));
            built
        }
        ProblemConfig::Random {
            n,
            projector,
            real,
            seed,
        } => {
            if *n < 2 {
                bail!("random: n must be at least 2");
            }
            let inst = random_instance(*seed, *n, *projector, *real)?;
            Built {
                operator: Arc::new(inst.operator),
                projector: inst.projector,
                default_spec: None,
                grid: None,
            }
        }
    })
}

fn from_graph(g: &GraphProblem) -> anyhow::Result<Built> {
    let b = graph_problem(g)?;
    Ok(Built {
        operator: Arc::new(b.operator),
        projector: b.projector,
        default_spec: None,
        grid: None,
    })
}
