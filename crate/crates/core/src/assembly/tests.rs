use std::sync::Arc;

use super::*;
use crate::combinatorics::factorial;
use crate::elements::poly::{to_f64, Q};
use crate::fespace::{build_sequence, global_inclusion, BoundaryCondition, SequenceSpec};
use crate::mesh::{build_unit_cube, build_unit_square, reference_simplex, SimplicialMesh};

fn square(n: usize) -> Arc<SimplicialMesh> {
    Arc::new(build_unit_square(n).unwrap())
}

fn all_sequences() -> Vec<(Arc<SimplicialMesh>, SequenceSpec)> {
    let sq = square(2);
    let cube = Arc::new(build_unit_cube(1).unwrap());
    vec![
        (sq.clone(), SequenceSpec::trimmed(2, 1)),
        (sq.clone(), SequenceSpec::trimmed(2, 2)),
        (sq.clone(), SequenceSpec::trimmed(2, 3)),
        (sq.clone(), SequenceSpec::full(2, 2)),
        (sq, SequenceSpec::full(2, 3)),
        (cube.clone(), SequenceSpec::trimmed(3, 1)),
        (cube, SequenceSpec::trimmed(3, 2)),
    ]
}

#[test]
fn p1_mass_on_reference_triangle() {
    let mesh = Arc::new(reference_simplex(2));
    let s = FormSpace::new(
        mesh,
        crate::elements::ElementFamily::trimmed(1, 0),
        &BoundaryCondition::NaturalAll,
    )
    .unwrap();
    let m = mass_matrix(&s);
    // ∫ λ_i λ_j = 2! α! / (|α| + 2)! times the area 1/2.
    for i in 0..3 {
        for j in 0..3 {
            let alpha: Vec<usize> = (0..3).map(|l| usize::from(l == i) + usize::from(l == j)).collect();
            let num: u128 = alpha.iter().map(|&a| factorial(a)).product();
            let want = 2.0 * num as f64 / factorial(4) as f64 * 0.5;
            assert!((m.get(i, j) - want).abs() < 1e-16);
            assert!((m.get(i, j) * 24.0 - if i == j { 2.0 } else { 1.0 }).abs() < 1e-14);
        }
    }
}

#[test]
fn mass_matrices_spd_and_symmetric() {
    for (mesh, spec) in all_sequences() {
        for s in build_sequence(&mesh, &spec, &BoundaryCondition::NaturalAll).unwrap() {
            let m = mass_matrix(&s);
            assert_eq!(m.max_asymmetry(), 0.0);
            let eig = nalgebra::SymmetricEigen::new(m.to_dense());
            assert!(eig.eigenvalues.min() > 0.0, "{}", s.family());
        }
    }
}

#[test]
fn quadrature_order_is_sufficient() {
    for (mesh, spec) in all_sequences() {
        for s in build_sequence(&mesh, &spec, &BoundaryCondition::NaturalAll).unwrap() {
            let a = mass_matrix(&s);
            let b = mass_matrix_with_order(&s, 2 * mass_order(&s));
            let scale = a.max_abs();
            for (i, j, v) in a.triplets() {
                assert!(
                    (v - b.get(i, j)).abs() < 1e-13 * scale,
                    "{} dim {} ({i},{j}) {v} {}",
                    s.family(),
                    mesh.dim(),
                    b.get(i, j)
                );
            }
            for (i, j, v) in b.triplets() {
                assert!((v - a.get(i, j)).abs() < 1e-13 * scale);
            }
        }
    }
}

#[test]
fn derivative_block_is_mass_times_inclusion() {
    for (mesh, spec) in all_sequences() {
        let spaces = build_sequence(&mesh, &spec, &BoundaryCondition::NaturalAll).unwrap();
        for w in spaces.windows(2) {
            let b = derivative_block(&w[0], &w[1]).unwrap();
            let mg = mass_matrix(&w[1]).matmul(&global_inclusion(&w[0], &w[1]).unwrap());
            let scale = b.max_abs();
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    assert!((b.get(i, j) - mg.get(i, j)).abs() <= 1e-12 * scale.max(1.0), "{spec}");
                }
            }
        }
        let g0 = global_inclusion(&spaces[0], &spaces[1]).unwrap();
        let b1 = derivative_block(&spaces[1], &spaces[2]).unwrap();
        assert!(b1.matmul(&g0).max_abs() < 1e-12 * b1.max_abs() * g0.max_abs(), "{spec}");
        let c = spaces[0].interpolate(&|_| vec![1.0]);
        let b0 = derivative_block(&spaces[0], &spaces[1]).unwrap();
        assert!(b0.mul_vec(&c).iter().all(|v| v.abs() < 1e-13));
    }
}

#[test]
fn whitney_gradient_block_matches_symbolic_assembly() {
    use crate::elements::{make_basis, ElementFamily};
    let mesh = Arc::new(reference_simplex(2));
    let spaces = build_sequence(&mesh, &SequenceSpec::trimmed(2, 1), &BoundaryCondition::NaturalAll).unwrap();
    let b = derivative_block(&spaces[0], &spaces[1]).unwrap();
    let b0 = make_basis(ElementFamily::trimmed(1, 0), 2).unwrap();
    let b1 = make_basis(ElementFamily::trimmed(1, 1), 2).unwrap();
    for (i, psi) in b1.forms().iter().enumerate() {
        for (j, dphi) in b0.d_forms().iter().enumerate() {
            let mut acc = Q::from_integer(0.into());
            for c in 0..2 {
                acc += psi.comps[c].mul(&dphi.comps[c]).integrate_simplex(2);
            }
            assert!((b.get(i, j) - to_f64(&acc)).abs() < 1e-15);
        }
    }
}

#[test]
fn incompatible_pair_rejected() {
    let mesh = square(1);
    let spaces = build_sequence(&mesh, &SequenceSpec::trimmed(2, 1), &BoundaryCondition::NaturalAll).unwrap();
    assert!(matches!(
        derivative_block(&spaces[0], &spaces[2]),
        Err(Error::InvalidSequence(_))
    ));
}

#[test]
fn system_counts_and_symmetry() {
    let mesh = square(10);
    let spaces = build_sequence(&mesh, &SequenceSpec::trimmed(2, 1), &BoundaryCondition::NaturalAll).unwrap();
    let h = crate::harmonic::harmonic_basis(&spaces, &BoundaryCondition::NaturalAll, &[1, 0, 0]).unwrap();
    let sys = assemble_system(&spaces, &h, &SourceData::zero(2)).unwrap();
    let want = mesh.n_vertices() + mesh.n_simplices(1) + mesh.n_cells() + 1;
    assert_eq!(sys.n_unknowns(), want);
    assert_eq!(sys.matrix.max_asymmetry(), 0.0);
    assert!(sys.rhs.iter().all(|&v| v == 0.0));
}

#[test]
fn harmonic_dimension_mismatch() {
    let mesh = square(2);
    let spaces = build_sequence(&mesh, &SequenceSpec::trimmed(2, 1), &BoundaryCondition::NaturalAll).unwrap();
    let bad = crate::harmonic::HarmonicBasis::from_vectors(&spaces[..2], vec![vec![vec![1.0; 9]], vec![]]).unwrap();
    assert!(matches!(
        assemble_system(&spaces, &bad, &SourceData::zero(2)),
        Err(Error::InvalidHarmonicSpace(_))
    ));
}

#[test]
fn loads_integrate_known_values() {
    let mesh = square(4);
    let spaces = build_sequence(&mesh, &SequenceSpec::trimmed(2, 2), &BoundaryCondition::NaturalAll).unwrap();
    // Sum of P2 Lagrange load weights against f = 1 is the area; against the
    // constant 0-form interpolant, <x y, 1> = 1/4.
    let ones = spaces[0].interpolate(&|_| vec![1.0]);
    let b = load_vector(&spaces[0], &|x| vec![x[0] * x[1]]);
    assert!((crate::linalg::dot(&b, &ones) - 0.25).abs() < 1e-14);
    // <g, d v> with g = dx ∧ dy-free 1-form (1, 0) and v = x gives the area.
    let vx = spaces[0].interpolate(&|x| vec![x[0]]);
    let c = codiff_load(&spaces[0], &|_| vec![1.0, 0.0]);
    assert!((crate::linalg::dot(&c, &vx) - 1.0).abs() < 1e-14);
}

#[test]
fn assembly_is_thread_count_independent() {
    let mesh = Arc::new(build_unit_cube(3).unwrap());
    let spaces = build_sequence(&mesh, &SequenceSpec::trimmed(3, 1), &BoundaryCondition::NaturalAll).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let m = mass_matrix(&spaces[1]);
            let b = derivative_block(&spaces[1], &spaces[2]).unwrap();
            let l = load_vector(&spaces[1], &|x| vec![x[0].sin(), x[1] * x[2], 1.0]);
            (m, b, l)
        })
    };
    let one = run(1);
    let many = run(4);
    assert_eq!(one.0, many.0);
    assert_eq!(one.1, many.1);
    assert_eq!(one.2, many.2);
}

#[test]
fn coordinate_export() {
    let mesh = square(1);
    let s = FormSpace::new(
        mesh,
        crate::elements::ElementFamily::trimmed(1, 0),
        &BoundaryCondition::NaturalAll,
    )
    .unwrap();
    let m = mass_matrix(&s);
    let mut buf = Vec::new();
    m.write_coordinate(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("4 4 {}", m.nnz()));
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let (i, j): (usize, usize) = (parts[0].parse().unwrap(), parts[1].parse().unwrap());
        let v: f64 = parts[2].parse().unwrap();
        assert_eq!(v, m.get(i, j));
    }
}
