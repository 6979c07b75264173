use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use snmesh::config::Problem;
use snmesh::csvio::{table, write_atomic};
use snmesh::manifest::{Gate, RunManifest};
use snmesh::study::{self, Sweep, Variant};
use snmesh::{bench, oracle, scalecheck};
use snmesh_core::analysis;
use snmesh_core::analytic::SourceKind;

#[derive(Parser)]
#[command(
    name = "snmesh",
    version,
    about = "Moving-mesh DG S_N transport solver and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and write the scalar flux on the analysis grid.
    Solve(Common),
    /// Sweep K or M over the method variants and fit convergence rates.
    Converge {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Compare a ratio-c solve with the scaled c = 1 solve.
    Scalecheck(Common),
    /// Time five solves per configuration.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

#[derive(Args)]
struct Common {
    /// Problem preset: plane-pulse, square-pulse, square-source,
    /// gaussian-pulse, gaussian-source or mms.
    #[arg(long)]
    preset: String,
    /// `key = value` file applied over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of directions.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Polynomial order.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Number of cells.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long, value_parser = ["moving", "static"])]
    mesh: Option<String>,
    #[arg(long, value_parser = ["uncollided", "standard"])]
    source_mode: Option<String>,
    /// Final time.
    #[arg(long = "t", alias = "t-final")]
    t: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    #[value(name = "K")]
    K,
    #[value(name = "M")]
    M,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    sweep: SweepKind,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    /// Comma-separated variants, e.g. uncollided-moving,standard-static.
    /// Defaults to all four for `converge` and uncollided-moving for `bench`.
    #[arg(long, value_delimiter = ',')]
    variants: Vec<Variant>,
}

impl Common {
    fn problem(&self) -> Result<Problem> {
        let mut p = Problem::from_preset_name(&self.preset)?;
        if let Some(path) = &self.config {
            p.apply_file(path)?;
        }
        let reals = [
            ("c", self.c),
            ("x0", self.x0),
            ("t0", self.t0),
            ("sigma", self.sigma),
            ("t_final", self.t),
            ("rtol", self.rtol),
            ("atol", self.atol),
        ];
        for (key, v) in reals {
            if let Some(v) = v {
                p.set(key, &v.to_string())?;
            }
        }
        for (key, v) in [("N", self.n), ("M", self.m), ("K", self.k)] {
            if let Some(v) = v {
                p.set(key, &v.to_string())?;
            }
        }
        for (key, v) in [("mesh", &self.mesh), ("source_mode", &self.source_mode)] {
            if let Some(v) = v {
                p.set(key, v)?;
            }
        }
        Ok(p)
    }

    fn cache(&self) -> PathBuf {
        oracle::cache_dir(&self.out_dir.join("oracle-cache"))
    }
}

impl SweepArgs {
    fn sweep(&self, p: &Problem) -> Sweep {
        match self.sweep {
            SweepKind::K => Sweep::Cells {
                order: p.order,
                values: self.values.clone(),
            },
            SweepKind::M => Sweep::Order {
                cells: p.cells,
                values: self.values.clone(),
            },
        }
    }

    fn variants(&self, default: &[Variant]) -> Vec<Variant> {
        if self.variants.is_empty() {
            default.to_vec()
        } else {
            self.variants.clone()
        }
    }
}

fn write_output(dir: &Path, name: &str, text: &str, manifest: &mut RunManifest) -> Result<()> {
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes())?;
    manifest.outputs.push(path);
    Ok(())
}

fn solve(args: &Common) -> Result<()> {
    let p = args.problem()?;
    let start = Instant::now();
    let (csv, stats) = study::solution_csv(&p)?;
    let mut m = RunManifest::new("solve", &p);
    m.wall_seconds = start.elapsed().as_secs_f64();
    m.stats = Some(stats.into());
    if p.kind == SourceKind::Mms {
        let xs = study::grid(&p);
        let rows = snmesh::csvio::parse_table(&csv, &["x", "phi", "phi_u", "phi_collided"])?;
        let phi: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let exact = analysis::mms_reference(&xs, p.t_final, p.x0);
        let e = analysis::rmse(&phi, &exact)?;
        m.summary.insert("rmse_exact".into(), e);
        println!("rmse vs exact: {e:.3e}");
    }
    write_output(&args.out_dir, "solution.csv", &csv, &mut m)?;
    let path = m.write(&args.out_dir)?;
    println!(
        "{} steps ({} rejected) in {:.3} s",
        stats.accepted, stats.rejected, m.wall_seconds
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn converge(args: &Common, sweep: &SweepArgs) -> Result<()> {
    let p = args.problem()?;
    let start = Instant::now();
    let s = study::run(&p, &sweep.sweep(&p), &sweep.variants(&Variant::ALL), &args.cache())?;
    let mut m = RunManifest::new("converge", &p);
    m.wall_seconds = start.elapsed().as_secs_f64();
    m.gate = Some(Gate::from(&s.reference));
    for r in &s.results {
        match r.record.as_ref().and_then(|rec| rec.fit) {
            Some(f) => {
                let imp = r.improvement.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
                println!(
                    "{:<18} {:?} rate {:.4} constant {:.4e} improvement {imp}",
                    r.variant.name(),
                    f.kind,
                    f.rate,
                    f.constant
                );
                m.summary.insert(format!("{}.rate", r.variant), f.rate);
                m.summary.insert(format!("{}.constant", r.variant), f.constant);
                if let Some(v) = r.improvement {
                    m.summary.insert(format!("{}.improvement", r.variant), v);
                }
            }
            None if r.record.is_some() => println!("{:<18} too few unsaturated points to fit", r.variant.name()),
            None => println!(
                "{:<18} unsupported: {}",
                r.variant.name(),
                r.skipped.first().map_or("", |s| s.1.as_str())
            ),
        }
    }
    write_output(&args.out_dir, "convergence.csv", &s.csv(), &mut m)?;
    let path = m.write(&args.out_dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn scale(args: &Common) -> Result<()> {
    let p = args.problem()?;
    let start = Instant::now();
    let r = scalecheck::run(&p)?;
    let mut m = RunManifest::new("scalecheck", &p);
    m.wall_seconds = start.elapsed().as_secs_f64();
    m.summary.insert("max_diff".into(), r.max_diff);
    m.summary.insert("t_direct".into(), r.t_direct);
    let rows: Vec<Vec<f64>> = (0..r.xs.len())
        .map(|i| vec![r.xs[i], r.direct[i], r.scaled[i], r.direct[i] - r.scaled[i]])
        .collect();
    write_output(
        &args.out_dir,
        "scalecheck.csv",
        &table(&["x", "phi_direct", "phi_scaled", "diff"], &rows),
        &mut m,
    )?;
    let path = m.write(&args.out_dir)?;
    println!(
        "c = {}: direct t = {} vs scaled c = 1 at t = {}: max diff {:.3e}",
        r.c, r.t_direct, r.t_reference, r.max_diff
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn run_bench(args: &Common, sweep: &SweepArgs) -> Result<()> {
    let p = args.problem()?;
    let start = Instant::now();
    let rows = bench::run(
        &p,
        &sweep.sweep(&p),
        &sweep.variants(&[Variant::UNCOLLIDED_MOVING]),
        &args.cache(),
    )?;
    if rows.is_empty() {
        bail!("no supported configuration in the sweep");
    }
    let mut m = RunManifest::new("bench", &p);
    m.wall_seconds = start.elapsed().as_secs_f64();
    for r in &rows {
        println!(
            "{:<18} M {:>2} K {:>3}  {:.4e} s  rmse {:.3e}",
            r.variant.name(),
            r.order,
            r.cells,
            r.mean_seconds,
            r.rmse
        );
    }
    write_output(&args.out_dir, "timing.csv", &bench::csv(&rows), &mut m)?;
    let path = m.write(&args.out_dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => solve(c),
        Command::Converge { common, sweep } => converge(common, sweep),
        Command::Scalecheck(c) => scale(c),
        Command::Bench { common, sweep } => run_bench(common, sweep),
    };
    match result.context("snmesh failed") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
