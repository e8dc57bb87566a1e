//! Command-line driver for div-curl solves and convergence studies.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use divcurl::fespace::build_sequence;
use divcurl::harmonic::{expected_dims, harmonic_basis_with, write_field_csv};
use divcurl::mesh::betti_numbers;
use divcurl::postproc::{convergence_study, d_error, l2_error, reference_forms, StudySpec};
use divcurl::solver::{manufactured_sources, solve, ProblemSpec};

use config::StudyConfig;

#[derive(Parser, Debug)]
#[command(
    name = "divcurl",
    version,
    about = "Mixed finite element solver for the div-curl problem"
)]
struct Cli {
    /// Configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Number of refinement levels of a study.
    #[arg(long, global = true)]
    levels: Option<usize>,
    /// Relative residual tolerance of the iterative solver.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Convergence study over refinement levels; writes a CSV report.
    Study,
    /// Single solve on the configured mesh; writes vertex samples of the solution.
    Solve,
    /// Harmonic forms of the sequence; writes one CSV per basis field.
    Harmonic,
    /// Betti numbers of the configured mesh.
    Betti,
}

fn load(cli: &Cli) -> Result<StudyConfig> {
    let path = cli
        .config
        .as_ref()
        .context("no configuration given (use --config <path>)")?;
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut cfg = StudyConfig::from_str(&text).with_context(|| format!("config {}", path.display()))?;
    if let Some(l) = cli.levels {
        cfg.levels = l;
    }
    if let Some(t) = cli.tol {
        if t.is_nan() || t <= 0.0 {
            bail!("--tol must be positive");
        }
        cfg.options.tol = t;
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// `dir/stem_suffix.csv` next to `base`.
fn sibling(out: &Path, base: &Path, suffix: &str) -> PathBuf {
    let stem = base
        .file_name()
        .map_or("out".into(), |s| s.to_string_lossy().into_owned());
    let stem = stem.strip_suffix(".csv").unwrap_or(&stem).to_string();
    out.join(base).with_file_name(format!("{stem}{suffix}.csv"))
}

fn study(cli: &Cli, cfg: &StudyConfig) -> Result<()> {
    let Some(reference) = cfg.reference.clone() else {
        bail!("a study needs a reference field");
    };
    let spec = StudySpec {
        domain: cfg.domain.clone(),
        sequence: cfg.sequence.clone(),
        bc: cfg.bc.clone(),
        identification: cfg.identification,
        reference,
        degree: cfg.degree,
        options: cfg.options.clone(),
    };
    let (report, info) = convergence_study(&spec, cfg.levels).context("study")?;
    let csv = cli.out.join(&cfg.csv);
    write(&csv, &report.to_csv())?;
    write(&csv.with_extension("ini"), &cfg.to_ini())?;
    if let Some(svg) = &cfg.svg {
        write(&cli.out.join(svg), &report.to_svg())?;
    }
    for (l, (row, i)) in report.rows.iter().zip(&info).enumerate() {
        println!(
            "level {l}: h={:.4e} unknowns={} iterations={} residual={:.2e} err_u={:.4e} err_d={:.4e} err_codiff={:.4e}",
            row.h, i.n_unknowns, i.iterations, i.relative_residual, row.err_u, row.err_d, row.err_codiff
        );
    }
    println!("wrote {}", csv.display());
    Ok(())
}

fn solve_once(cli: &Cli, cfg: &StudyConfig) -> Result<()> {
    let mesh = Arc::new(cfg.domain.build().context("mesh generation")?);
    let mut problem = ProblemSpec::new(mesh, cfg.sequence.clone())
        .with_bc(cfg.bc.clone())
        .with_identification(cfg.identification)
        .with_options(cfg.options.clone());
    if let Some(r) = &cfg.reference {
        problem = problem.with_sources(manufactured_sources(r, cfg.identification, cfg.degree).context("sources")?);
    }
    let sol = solve(&problem).context("solver")?;
    for (k, (space, u)) in sol.spaces.iter().zip(&sol.u).enumerate() {
        let path = sibling(&cli.out, &cfg.solution, &format!("_u{k}"));
        let mut buf = Vec::new();
        write_field_csv(space, u, cfg.identification, &mut buf).context("export")?;
        write(&path, &String::from_utf8(buf)?)?;
    }
    let unknowns: usize = sol.u.iter().map(Vec::len).sum::<usize>() + sol.p.len();
    println!(
        "unknowns={unknowns} iterations={} residual={:.2e}",
        sol.report.iterations, sol.report.relative_residual
    );
    if let Some(r) = &cfg.reference {
        let (u, du, _) = reference_forms(r, cfg.identification, cfg.degree)?;
        let k = cfg.degree;
        let eu = l2_error(&sol.spaces[k], &sol.u[k], &*u);
        let ed = d_error(&sol.spaces[k], &sol.spaces[k + 1], &sol.u[k], &*du)?;
        println!("err_u={eu:.4e} err_d={ed:.4e}");
    }
    Ok(())
}

fn harmonic(cli: &Cli, cfg: &StudyConfig) -> Result<()> {
    let mesh = Arc::new(cfg.domain.build().context("mesh generation")?);
    let betti = betti_numbers(&mesh);
    let spaces = build_sequence(&mesh, &cfg.sequence, &cfg.bc).context("spaces")?;
    let spaces: Vec<_> = spaces
        .into_iter()
        .map(|s| s.with_identification(cfg.identification))
        .collect();
    let basis = harmonic_basis_with(&spaces, expected_dims(&betti, &cfg.bc), &cfg.options.harmonic)
        .context("harmonic kernel extraction")?;
    for (k, space) in spaces.iter().enumerate() {
        for (i, h) in basis.vectors(k).iter().enumerate() {
            let path = sibling(&cli.out, &cfg.harmonic, &format!("_k{k}_{i}"));
            let mut buf = Vec::new();
            write_field_csv(space, h, cfg.identification, &mut buf).context("export")?;
            write(&path, &String::from_utf8(buf)?)?;
        }
    }
    let dims: Vec<String> = basis
        .dims()
        .iter()
        .enumerate()
        .map(|(k, d)| format!("h{k}={d}"))
        .collect();
    println!("{}", dims.join(" "));
    Ok(())
}

fn betti(cfg: &StudyConfig) -> Result<()> {
    let mesh = cfg.domain.build().context("mesh generation")?;
    let b: Vec<String> = betti_numbers(&mesh)
        .iter()
        .enumerate()
        .take(mesh.dim())
        .map(|(k, b)| format!("b{k}={b}"))
        .collect();
    println!("{}", b.join(" "));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = load(cli)?;
    match cli.command {
        Command::Study => study(cli, &cfg),
        Command::Solve => solve_once(cli, &cfg),
        Command::Harmonic => harmonic(cli, &cfg),
        Command::Betti => betti(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("divcurl: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
