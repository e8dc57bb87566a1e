use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fespace::{build_sequence, SequenceSpec};
use crate::mesh::{betti_numbers, build_annulus, build_unit_square, SimplicialMesh};

fn sequence(mesh: &Arc<SimplicialMesh>, r: usize, bc: &BoundaryCondition) -> Vec<FormSpace> {
    build_sequence(mesh, &SequenceSpec::trimmed(mesh.dim(), r), bc).unwrap()
}

#[test]
fn square_natural_has_only_constants() {
    let mesh = Arc::new(build_unit_square(4).unwrap());
    let bc = BoundaryCondition::NaturalAll;
    let spaces = sequence(&mesh, 1, &bc);
    let h = harmonic_basis(&spaces, &bc, &betti_numbers(&mesh)).unwrap();
    assert_eq!(h.dims(), vec![1, 0, 0]);
    let v = &h.vectors(0)[0];
    // Normalized constant on a unit-area domain.
    for x in v {
        assert!((x.abs() - 1.0).abs() < 1e-8);
    }
    assert!((h.inner(0, v, v) - 1.0).abs() < 1e-10);
}

#[test]
fn square_essential_inverts_dimensions() {
    let mesh = Arc::new(build_unit_square(4).unwrap());
    let bc = BoundaryCondition::EssentialAll;
    let spaces = sequence(&mesh, 1, &bc);
    let h = harmonic_basis(&spaces, &bc, &betti_numbers(&mesh)).unwrap();
    assert_eq!(h.dims(), vec![0, 0, 1]);
    assert_eq!(expected_dims(&[1, 2, 0], &bc), Some(vec![0, 2, 1]));
}

#[test]
fn annulus_harmonic_one_form() {
    let mesh = Arc::new(build_annulus(0.5, 1.0, 16).unwrap());
    let bc = BoundaryCondition::NaturalAll;
    let spaces = sequence(&mesh, 1, &bc);
    let h = harmonic_basis(&spaces, &bc, &betti_numbers(&mesh)).unwrap();
    assert_eq!(h.dims(), vec![1, 1, 0]);
    let one = &h.vectors(1)[0];
    assert!(harmonicity_residual(&spaces, 1, one).unwrap() < 1e-8);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v: Vec<f64> = (0..spaces[1].n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = project_harmonic(&h, 1, &v);
    let pp = project_harmonic(&h, 1, &p);
    let err: f64 = p.iter().zip(&pp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-12);
    let back = project_harmonic(&h, 1, one);
    assert!(back.iter().zip(one).all(|(a, b)| (a - b).abs() < 1e-12));
    let orth: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
    assert!(project_harmonic(&h, 1, &orth).iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn mixed_detection_on_square() {
    // Essential on left and right only: the complex of forms vanishing on two
    // disjoint boundary pieces has one harmonic 1-form.
    let mesh = Arc::new(build_unit_square(4).unwrap());
    let bc = BoundaryCondition::Mixed(vec![1, 2]);
    let spaces = sequence(&mesh, 1, &bc);
    let h = harmonic_basis(&spaces, &bc, &betti_numbers(&mesh)).unwrap();
    assert_eq!(h.dims(), vec![0, 1, 0]);
    assert!(h.expected().is_none());
}

#[test]
fn csv_export_has_header_and_rows() {
    let mesh = Arc::new(build_unit_square(2).unwrap());
    let spaces = sequence(&mesh, 1, &BoundaryCondition::NaturalAll);
    let c = spaces[1].interpolate(&|_| vec![1.0, 0.0]);
    let mut buf = Vec::new();
    write_field_csv(&spaces[1], &c, Identification::CurlProxy, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,vx,vy");
    assert_eq!(lines.len(), 1 + mesh.n_vertices());
    let last: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((last[2] - 1.0).abs() < 1e-12 && last[3].abs() < 1e-12);
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
    #[test]
    fn harmonic_projection_is_an_orthogonal_projector(seed in 0u64..10_000) {
        let mesh = Arc::new(build_annulus(0.5, 1.0, 10).unwrap());
        let bc = BoundaryCondition::NaturalAll;
        let spaces = sequence(&mesh, 1, &bc);
        let h = harmonic_basis(&spaces, &bc, &betti_numbers(&mesh)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = spaces[1].n_dofs();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pv = project_harmonic(&h, 1, &v);
        let pw = project_harmonic(&h, 1, &w);
        // <P v, w> = <v, P w>
        let lhs = h.inner(1, &pv, &w);
        let rhs = h.inner(1, &v, &pw);
        proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let ppv = project_harmonic(&h, 1, &pv);
        proptest::prop_assert!(pv.iter().zip(&ppv).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
}
