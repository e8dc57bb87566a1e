//! Problem setup and solution of the discrete Hodge-Dirac system.

mod reference;

use std::sync::Arc;

pub use reference::{refd2, refd3, ReferenceField};

use crate::assembly::{assemble_system, FormField, SourceData};
use crate::error::{Error, Result};
use crate::fespace::{
    build_sequence, form_to_vector, global_inclusion, vector_to_form, BoundaryCondition, FormSpace, Identification,
    SequenceSpec,
};
use crate::harmonic::{expected_dims, harmonic_basis_with, HarmonicBasis, HarmonicOptions};
use crate::linalg::{minres, norm2, MinresOptions, SolveReport};
use crate::mesh::{betti_numbers, SimplicialMesh};

/// Preconditioner used for the Hodge-Dirac system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PreconditionerKind {
    None,
    /// Mass-matrix diagonals.
    Diagonal,
    /// Mass-matrix blocks of the DOFs of each mesh simplex.
    #[default]
    Block,
}

impl std::fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PreconditionerKind::None => "none",
            PreconditionerKind::Diagonal => "diagonal",
            PreconditionerKind::Block => "block",
        })
    }
}

impl std::str::FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(PreconditionerKind::None),
            "diagonal" => Ok(PreconditionerKind::Diagonal),
            "block" => Ok(PreconditionerKind::Block),
            other => Err(Error::invalid(format!("unknown preconditioner '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: PreconditionerKind,
    pub harmonic: HarmonicOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200_000,
            preconditioner: PreconditionerKind::Block,
            harmonic: HarmonicOptions::default(),
        }
    }
}

/// Everything needed for one solve.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub mesh: Arc<SimplicialMesh>,
    pub sequence: SequenceSpec,
    pub bc: BoundaryCondition,
    pub identification: Identification,
    pub sources: SourceData,
    pub options: SolverOptions,
    /// Betti numbers of the mesh, computed on demand when absent.
    pub betti: Option<Vec<usize>>,
}

impl ProblemSpec {
    pub fn new(mesh: Arc<SimplicialMesh>, sequence: SequenceSpec) -> Self {
        let dim = mesh.dim();
        Self {
            mesh,
            sequence,
            bc: BoundaryCondition::NaturalAll,
            identification: Identification::None,
            sources: SourceData::zero(dim),
            options: SolverOptions::default(),
            betti: None,
        }
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_identification(mut self, id: Identification) -> Self {
        self.identification = id;
        self
    }

    pub fn with_sources(mut self, sources: SourceData) -> Self {
        self.sources = sources;
        self
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_betti(mut self, betti: Vec<usize>) -> Self {
        self.betti = Some(betti);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.mesh.dim();
        if dim != 2 && self.identification != Identification::None {
            return Err(Error::invalid("a vector identification is only meaningful in 2D"));
        }
        if self.sources.f.len() != dim + 1 || self.sources.codiff.len() != dim + 1 {
            return Err(Error::invalid(format!("sources must cover form degrees 0..={dim}")));
        }
        if self.options.tol.is_nan() || self.options.tol <= 0.0 {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        self.sequence.validate(dim)
    }
}

/// Discrete solution `(u_0, ..., u_dim, p)`.
#[derive(Clone, Debug)]
pub struct Solution {
    pub spaces: Vec<FormSpace>,
    /// Full coefficient vectors per degree.
    pub u: Vec<Vec<f64>>,
    /// Coefficients of `p` in the harmonic basis, ordered by degree.
    pub p: Vec<f64>,
    pub harmonic: HarmonicBasis,
    pub report: SolveReport,
    /// `||P_h f_k||` per degree: the part of the data the method cannot match.
    pub harmonic_defect: Vec<f64>,
    pub identification: Identification,
}

impl Solution {
    pub fn dim(&self) -> usize {
        self.spaces.len() - 1
    }

    /// Coefficients of `p` restricted to harmonic forms of degree `k`.
    pub fn p_coefficients(&self, k: usize) -> &[f64] {
        let start: usize = (0..k).map(|j| self.harmonic.vectors(j).len()).sum();
        &self.p[start..start + self.harmonic.vectors(k).len()]
    }

    /// `p` at degree `k` as a coefficient vector in `V_h^k`.
    pub fn p_form(&self, k: usize) -> Vec<f64> {
        self.harmonic.combine(k, self.p_coefficients(k))
    }

    /// Coefficients of `d u_k` in `V_h^{k+1}`.
    pub fn d_coefficients(&self, k: usize) -> Result<Vec<f64>> {
        let g = global_inclusion(&self.spaces[k], &self.spaces[k + 1])?;
        Ok(g.mul_vec(&self.u[k]))
    }

    /// Form components of `u_k` at a physical point.
    pub fn evaluate(&self, k: usize, x: &[f64; 3]) -> Option<Vec<f64>> {
        self.spaces[k].eval_at(&self.u[k], x)
    }

    /// Vector proxy of `u_k` at a point.
    pub fn evaluate_vector(&self, k: usize, x: &[f64; 3]) -> Option<Vec<f64>> {
        let dim = self.dim();
        self.evaluate(k, x)
            .map(|c| form_to_vector(dim, k, self.identification, &c))
    }

    /// Largest `|<u_k, h>|` over harmonic forms `h` of degree `k`.
    pub fn harmonic_orthogonality(&self, k: usize) -> f64 {
        self.harmonic
            .coefficients(k, &self.u[k])
            .iter()
            .fold(0.0, |a, c| a.max(c.abs()))
    }
}

/// Harmonic forms for a problem, using known Betti numbers when the regime allows.
pub fn problem_harmonics(problem: &ProblemSpec, spaces: &[FormSpace]) -> Result<HarmonicBasis> {
    let expected = match &problem.bc {
        BoundaryCondition::Mixed(_) => None,
        bc => {
            let betti = match &problem.betti {
                Some(b) => b.clone(),
                None => betti_numbers(&problem.mesh),
            };
            expected_dims(&betti, bc)
        }
    };
    harmonic_basis_with(spaces, expected, &problem.options.harmonic)
}

pub fn solve(problem: &ProblemSpec) -> Result<Solution> {
    problem.validate()?;
    let spaces: Vec<FormSpace> = build_sequence(&problem.mesh, &problem.sequence, &problem.bc)?
        .into_iter()
        .map(|s| s.with_identification(problem.identification))
        .collect();
    let harmonic = problem_harmonics(problem, &spaces)?;
    solve_in(problem, spaces, harmonic)
}

/// Solve with spaces and harmonic forms already built.
pub fn solve_in(problem: &ProblemSpec, spaces: Vec<FormSpace>, harmonic: HarmonicBasis) -> Result<Solution> {
    let sys = assemble_system(&spaces, &harmonic, &problem.sources)?;
    let opts = &problem.options;
    let mut mopts = MinresOptions::new(opts.tol, opts.max_iter);
    match opts.preconditioner {
        PreconditionerKind::None => {}
        PreconditionerKind::Diagonal => mopts = mopts.with_diagonal(sys.preconditioner_diagonal(&spaces)),
        PreconditionerKind::Block => mopts = mopts.with_preconditioner(sys.preconditioner_blocks(&spaces)?),
    }
    let (x, report) = if norm2(&sys.rhs) == 0.0 {
        let n = sys.n_unknowns();
        (
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
                history: Vec::new(),
            },
        )
    } else {
        minres(&sys.matrix, &sys.rhs, &mopts)
    };
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.relative_residual,
        });
    }
    let (u, p) = sys.split(&spaces, &x);
    let harmonic_defect = (0..spaces.len())
        .map(|k| {
            let c: Vec<f64> = harmonic
                .vectors(k)
                .iter()
                .map(|h| crate::linalg::dot(h, &sys.loads[k]))
                .collect();
            norm2(&c)
        })
        .collect();
    Ok(Solution {
        spaces,
        u,
        p,
        harmonic,
        report,
        harmonic_defect,
        identification: problem.identification,
    })
}

/// Sources for which `field` (read at form degree `degree` through `ident`)
/// solves the pair of equations around that degree, all other unknowns zero.
///
/// The next-degree source is `f_{k+1} = d u`. The previous-degree equation
/// receives the functional `v -> <u, d v>`, which equals `<δu, v>` plus the
/// boundary term required when `u` does not satisfy the natural condition.
pub fn manufactured_sources(field: &ReferenceField, ident: Identification, degree: usize) -> Result<SourceData> {
    let dim = field.dim;
    match (dim, degree, ident) {
        (2, 1, Identification::CurlProxy | Identification::DivProxy) => {}
        (3, 1 | 2, Identification::None) => {}
        _ => {
            return Err(Error::invalid(format!(
                "cannot place a {dim}D vector field at degree {degree} with identification {ident}"
            )))
        }
    }
    let u = field.u.clone();
    let form: FormField = Arc::new(move |x| vector_to_form(dim, degree, ident, &u(x)));
    let du: FormField = match (dim, degree, ident) {
        (2, _, Identification::CurlProxy) => {
            let c = field.curl.clone();
            Arc::new(move |x| c(x))
        }
        (2, _, _) => {
            let d = field.div.clone();
            Arc::new(move |x| vec![d(x)])
        }
        (3, 1, _) => {
            let c = field.curl.clone();
            Arc::new(move |x| vector_to_form(3, 2, Identification::None, &c(x)))
        }
        _ => {
            let d = field.div.clone();
            Arc::new(move |x| vec![d(x)])
        }
    };
    Ok(SourceData::zero(dim)
        .with_f(degree + 1, du)
        .with_codiff(degree - 1, form))
}
