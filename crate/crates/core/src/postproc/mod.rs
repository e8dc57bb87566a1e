//! Error norms, the codifferential error and convergence reports.

mod report;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

pub use report::{rate, ConvergenceReport, ConvergenceRow, ReportMetadata, CSV_HEADER};

use crate::assembly::{mass_matrix, FormField};
use crate::elements::{quadrature, ElementFamily, FamilyKind, MAX_ORDER};
use crate::error::{Error, Result};
use crate::fespace::{
    form_to_vector, global_inclusion, push, vector_to_form, BoundaryCondition, CellGeometry, FormSpace, Identification,
    SequenceSpec,
};
use crate::linalg::{minres, MinresOptions};
use crate::mesh::{betti_numbers, Domain};
use crate::solver::{manufactured_sources, solve, ProblemSpec, ReferenceField, SolverOptions};

type Field<'a> = &'a (dyn Fn(&[f64; 3]) -> Vec<f64> + Sync);

/// Quadrature order used for error integrals.
pub fn error_order(space: &FormSpace) -> usize {
    (space.family().r + 4).min(MAX_ORDER)
}

/// Values of `coeffs` (or of its exterior derivative) at every quadrature
/// point of cell `c`, laid out `[point][component]`.
fn cell_values(
    space: &FormSpace,
    coeffs: &[f64],
    c: usize,
    geo: &CellGeometry,
    tab: &[f64],
    nq: usize,
    nc: usize,
    deg: usize,
) -> Vec<f64> {
    let nloc = space.n_local();
    let p = geo.pushforward(deg);
    let mut out = Vec::with_capacity(nq * nc);
    let dofs = space.cell_dofs(c);
    let signs = space.cell_signs(c);
    let mut r = vec![0.0; nc];
    for q in 0..nq {
        r.iter_mut().for_each(|x| *x = 0.0);
        for l in 0..nloc {
            let a = coeffs[dofs[l]] * f64::from(signs[l]);
            let base = (q * nloc + l) * nc;
            for (ri, t) in r.iter_mut().zip(&tab[base..base + nc]) {
                *ri += a * t;
            }
        }
        out.extend(push(&p, &r));
    }
    out
}

fn l2_distance(space: &FormSpace, coeffs: &[f64], exact: Option<Field>, use_d: bool) -> f64 {
    let mesh = space.mesh();
    let rule = quadrature(mesh.dim(), error_order(space)).expect("order in range");
    let (tab, nc, deg) = if use_d {
        (
            space.basis().tabulate_d(&rule),
            space.basis().n_dcomps(),
            space.degree() + 1,
        )
    } else {
        (space.basis().tabulate(&rule), space.n_comps(), space.degree())
    };
    let nq = rule.len();
    let per_cell: Vec<f64> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let geo = CellGeometry::new(mesh, c);
            let vals = cell_values(space, coeffs, c, &geo, &tab, nq, nc, deg);
            let mut s = 0.0;
            for (q, (pt, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let e = exact.map(|f| f(&geo.map(pt)));
                let mut d2 = 0.0;
                for i in 0..nc {
                    let ex = e.as_ref().map_or(0.0, |e| e[i]);
                    d2 += (vals[q * nc + i] - ex).powi(2);
                }
                s += w * d2;
            }
            s * geo.abs_det()
        })
        .collect();
    per_cell.iter().sum::<f64>().sqrt()
}

/// `||u - u_h||` with `u` given by physical form components.
pub fn l2_error(space: &FormSpace, coeffs: &[f64], exact: Field) -> f64 {
    l2_distance(space, coeffs, Some(exact), false)
}

pub fn l2_norm(space: &FormSpace, coeffs: &[f64]) -> f64 {
    l2_distance(space, coeffs, None, false)
}

/// `||du - G u_h||` computed in the next space of the sequence.
pub fn d_error(src: &FormSpace, dst: &FormSpace, coeffs: &[f64], du_exact: Field) -> Result<f64> {
    let g = global_inclusion(src, dst)?;
    Ok(l2_error(dst, &g.mul_vec(coeffs), du_exact))
}

/// The family holding the other proxy of the same vector field: in 2D the
/// 1-form family itself, in 3D the family of the complementary degree.
fn complementary_family(f: ElementFamily, dim: usize) -> ElementFamily {
    ElementFamily { k: dim - f.k, ..f }
}

/// The family receiving `d` from `f` in the canonical sequences.
fn next_family(f: ElementFamily) -> ElementFamily {
    match f.kind {
        FamilyKind::Full => ElementFamily::full(f.r.saturating_sub(1), f.k + 1),
        FamilyKind::Trimmed => ElementFamily::trimmed(f.r, f.k + 1),
    }
}

/// Spaces used by the codifferential error: the complementary space and the
/// space receiving its exterior derivative, both without boundary constraints.
pub fn complementary_spaces(space: &FormSpace) -> Result<(FormSpace, FormSpace)> {
    let mesh = space.mesh_arc().clone();
    let dim = mesh.dim();
    let k = space.degree();
    if k == 0 || k == dim {
        return Err(Error::invalid(
            "the codifferential error needs an intermediate form degree",
        ));
    }
    let ident = complementary_identification(dim, space.identification());
    let cf = complementary_family(space.family(), dim);
    let bc = BoundaryCondition::NaturalAll;
    let comp = FormSpace::new(mesh.clone(), cf, &bc)?.with_identification(ident);
    let next = FormSpace::new(mesh, next_family(cf), &bc)?.with_identification(ident);
    Ok((comp, next))
}

fn complementary_identification(dim: usize, ident: Identification) -> Identification {
    if dim == 2 {
        ident.swapped()
    } else {
        Identification::None
    }
}

/// `b_i = <R u_h, ψ_i>` where `R` maps a form to the complementary proxy of
/// the same vector field and `ψ_i` runs over the complementary space.
fn cross_load(space: &FormSpace, coeffs: &[f64], comp: &FormSpace) -> Vec<f64> {
    let mesh = space.mesh();
    let dim = mesh.dim();
    let order = (2 * space.family().r.max(comp.family().r) + 2).min(MAX_ORDER);
    let rule = quadrature(dim, order).expect("order in range");
    let nq = rule.len();
    let (tab_u, nc_u) = (space.basis().tabulate(&rule), space.n_comps());
    let (tab_w, nc_w) = (comp.basis().tabulate(&rule), comp.n_comps());
    let (ku, kw) = (space.degree(), comp.degree());
    let (iu, iw) = (space.identification(), comp.identification());
    let nloc = comp.n_local();
    let parts: Vec<Vec<(usize, f64)>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let geo = CellGeometry::new(mesh, c);
            let vals = cell_values(space, coeffs, c, &geo, &tab_u, nq, nc_u, ku);
            let pw = geo.pushforward(kw);
            let mut local = vec![0.0; nloc];
            for (q, w) in rule.weights.iter().enumerate() {
                let v = form_to_vector(dim, ku, iu, &vals[q * nc_u..(q + 1) * nc_u]);
                let ru = vector_to_form(dim, kw, iw, &v);
                for (l, li) in local.iter_mut().enumerate() {
                    let base = (q * nloc + l) * nc_w;
                    let psi = push(&pw, &tab_w[base..base + nc_w]);
                    *li += w * psi.iter().zip(&ru).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            let det = geo.abs_det();
            let (dofs, signs) = (comp.cell_dofs(c), comp.cell_signs(c));
            (0..nloc)
                .map(|l| (dofs[l], local[l] * det * f64::from(signs[l])))
                .collect()
        })
        .collect();
    let mut b = vec![0.0; comp.n_dofs()];
    for p in parts {
        for (i, v) in p {
            b[i] += v;
        }
    }
    b
}

/// L² projection of `u_h` onto the complementary space.
pub fn project_complementary(space: &FormSpace, coeffs: &[f64], comp: &FormSpace) -> Result<Vec<f64>> {
    let m = mass_matrix(comp);
    let b = cross_load(space, coeffs, comp);
    if b.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; comp.n_dofs()]);
    }
    let opts = MinresOptions::new(1e-13, 20 * comp.n_dofs() + 100).with_diagonal(m.diagonal());
    let (x, report) = minres(&m, &b, &opts);
    if !report.converged && report.relative_residual > 1e-11 {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.relative_residual,
        });
    }
    Ok(x)
}

/// The two-step codifferential error: project `u_h` onto the complementary
/// space, take `d` there and compare with `exact` (physical form components).
pub fn codifferential_error(space: &FormSpace, coeffs: &[f64], exact: Field) -> Result<f64> {
    let (comp, next) = complementary_spaces(space)?;
    let w = project_complementary(space, coeffs, &comp)?;
    d_error(&comp, &next, &w, exact)
}

/// Form fields for the three error measures of a reference field placed at
/// `degree`: `(u, d u, codifferential proxy)`.
pub fn reference_forms(
    field: &ReferenceField,
    ident: Identification,
    degree: usize,
) -> Result<(FormField, FormField, FormField)> {
    let dim = field.dim;
    let sources = manufactured_sources(field, ident, degree)?;
    let du = sources.f[degree + 1].clone().expect("manufactured source");
    let u_form = sources.codiff[degree - 1].clone().expect("manufactured source");
    let codiff: FormField = match (dim, degree, ident) {
        (2, _, Identification::DivProxy) => {
            let c = field.curl.clone();
            Arc::new(move |x| c(x))
        }
        (2, _, _) | (3, 1, _) => {
            let d = field.div.clone();
            Arc::new(move |x| vec![d(x)])
        }
        _ => {
            let c = field.curl.clone();
            Arc::new(move |x| vector_to_form(3, 2, Identification::None, &c(x)))
        }
    };
    Ok((u_form, du, codiff))
}

/// Template for a sequence of manufactured solves on refined meshes.
#[derive(Clone, Debug)]
pub struct StudySpec {
    /// Level `l` is solved on `domain.at_level(l)`.
    pub domain: Domain,
    pub sequence: SequenceSpec,
    pub bc: BoundaryCondition,
    pub identification: Identification,
    pub reference: ReferenceField,
    /// Form degree carrying the reference field.
    pub degree: usize,
    pub options: SolverOptions,
}

/// Diagnostics of one level that do not go into the CSV table.
#[derive(Clone, Debug)]
pub struct LevelInfo {
    pub n_unknowns: usize,
    pub iterations: usize,
    pub relative_residual: f64,
    pub harmonic_dims: Vec<usize>,
    pub harmonic_orthogonality: f64,
    pub seconds: f64,
}

/// Solve on `levels` meshes of the domain, the resolution doubling from one level to the next.
pub fn convergence_study(study: &StudySpec, levels: usize) -> Result<(ConvergenceReport, Vec<LevelInfo>)> {
    if levels < 2 {
        return Err(Error::invalid("a convergence study needs at least two levels"));
    }
    let sources = manufactured_sources(&study.reference, study.identification, study.degree)?;
    let (u_form, du, codiff) = reference_forms(&study.reference, study.identification, study.degree)?;
    let mut betti = None;
    let mut rows = Vec::with_capacity(levels);
    let mut infos = Vec::with_capacity(levels);
    for level in 0..levels {
        let at = |e: Error| Error::AtLevel {
            level,
            source: Box::new(e),
        };
        let mesh = Arc::new(study.domain.at_level(level).build().map_err(at)?);
        let betti = betti.get_or_insert_with(|| betti_numbers(&mesh)).clone();
        let start = Instant::now();
        let problem = ProblemSpec::new(mesh.clone(), study.sequence.clone())
            .with_bc(study.bc.clone())
            .with_identification(study.identification)
            .with_sources(sources.clone())
            .with_options(study.options.clone())
            .with_betti(betti);
        let sol = solve(&problem).map_err(at)?;
        let k = study.degree;
        let (space, next) = (&sol.spaces[k], &sol.spaces[k + 1]);
        let err_u = l2_error(space, &sol.u[k], &*u_form);
        let err_d = d_error(space, next, &sol.u[k], &*du).map_err(at)?;
        let err_codiff = codifferential_error(space, &sol.u[k], &*codiff).map_err(at)?;
        rows.push((mesh.h_max(), err_u, err_d, err_codiff));
        infos.push(LevelInfo {
            n_unknowns: sol.u.iter().map(Vec::len).sum::<usize>() + sol.p.len(),
            iterations: sol.report.iterations,
            relative_residual: sol.report.relative_residual,
            harmonic_dims: sol.harmonic.dims(),
            harmonic_orthogonality: sol.harmonic_orthogonality(k),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let metadata = ReportMetadata {
        domain: study.domain.to_string(),
        sequence: study.sequence.to_string(),
        identification: study.identification,
        bc: study.bc.clone(),
        reference: study.reference.name.clone(),
        degree: study.degree,
    };
    Ok((ConvergenceReport::from_errors(&rows, metadata), infos))
}
