use std::sync::Arc;

use divcurl::fespace::{build_sequence, BoundaryCondition, Identification, SequenceSpec};
use divcurl::harmonic::harmonic_basis;
use divcurl::mesh::{betti_numbers, read_mesh, write_mesh, Domain};
use divcurl::postproc::{convergence_study, StudySpec, CSV_HEADER};
use divcurl::solver::{manufactured_sources, refd2, solve, ProblemSpec, SolverOptions};

#[test]
fn mesh_file_round_trip_gives_same_solution() {
    let mesh = Domain::TwoHoleDisk(8).build().unwrap();
    let mut buf = Vec::new();
    write_mesh(&mesh, &mut buf).unwrap();
    let back = read_mesh(buf.as_slice()).unwrap();
    let run = |m| {
        let spec = ProblemSpec::new(Arc::new(m), SequenceSpec::trimmed(2, 1))
            .with_identification(Identification::CurlProxy)
            .with_sources(manufactured_sources(&refd2(), Identification::CurlProxy, 1).unwrap());
        solve(&spec).unwrap()
    };
    let a = run(mesh);
    let b = run(back);
    assert_eq!(a.harmonic.dims(), vec![1, 2, 0]);
    assert_eq!(a.u, b.u);
    for k in 0..3 {
        assert!(a.harmonic_orthogonality(k) < 1e-9);
    }
}

#[test]
fn harmonic_dimensions_follow_topology_and_boundary() {
    let cases = [
        (Domain::TwoHoleDisk(8), vec![1, 2, 0], vec![0, 2, 1]),
        (Domain::HollowCube(3), vec![1, 0, 1, 0], vec![0, 1, 0, 1]),
    ];
    for (d, natural, essential) in cases {
        let mesh = Arc::new(d.build().unwrap());
        let betti = betti_numbers(&mesh);
        for (bc, want) in [
            (BoundaryCondition::NaturalAll, &natural),
            (BoundaryCondition::EssentialAll, &essential),
        ] {
            let spaces = build_sequence(&mesh, &SequenceSpec::trimmed(mesh.dim(), 1), &bc).unwrap();
            let h = harmonic_basis(&spaces, &bc, &betti).unwrap();
            assert_eq!(&h.dims(), want, "{d} {bc}");
        }
    }
}

#[test]
fn study_csv_parses_back() {
    let spec = StudySpec {
        domain: Domain::UnitSquare(4),
        sequence: SequenceSpec::preset("trimmed-r1", 2).unwrap(),
        bc: BoundaryCondition::NaturalAll,
        identification: Identification::DivProxy,
        reference: refd2(),
        degree: 1,
        options: SolverOptions::default(),
    };
    let (report, info) = convergence_study(&spec, 3).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0][2].is_empty());
    for (row, parsed) in report.rows.iter().zip(&rows) {
        let h: f64 = parsed[0].parse().unwrap();
        assert!((h - row.h).abs() <= 1e-5 * row.h);
    }
    let u_rate: f64 = rows[2][2].parse().unwrap();
    assert!((0.7..1.3).contains(&u_rate));
    assert!(info.windows(2).all(|w| w[1].n_unknowns > w[0].n_unknowns));
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = ProblemSpec::new(
        Arc::new(Domain::UnitSquare(6).build().unwrap()),
        SequenceSpec::trimmed(2, 2),
    )
    .with_identification(Identification::DivProxy)
    .with_sources(manufactured_sources(&refd2(), Identification::DivProxy, 1).unwrap());
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| solve(&spec).unwrap())
    };
    assert_eq!(run(1).u, run(3).u);
}
