use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use awvd::cube::{DuplicatePolicy, DEFAULT_FRAC_BITS};
use awvd::diagram::{build_diagram, Amwvd, BuildOptions, CoverMode};
use awvd::error::Error;
use awvd::geom::derive_params;
use awvd::io::{dump, load, parse_points, read_sites, write_sites};
use awvd::oracle::{check_points, gen_instance, uniform_queries, WeightLaw};
use awvd::render::render_svg;
use awvd::validate::{run_suite, Suite, ValidateOptions};

#[derive(Parser)]
#[command(name = "awvd", version, about = "Approximate multiplicatively weighted Voronoi diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random sites file.
    Generate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=4))]
        d: u64,
        /// `equal`, `uniform[:W]` or `two-class[:W]`.
        #[arg(long, default_value = "uniform")]
        weights: WeightLaw,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a diagram and write its dump.
    Build {
        #[arg(long)]
        sites: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value_t = CoverMode::Reduced)]
        mode: CoverMode,
        #[arg(long, default_value_t = DEFAULT_FRAC_BITS)]
        frac_bits: u32,
        #[arg(long)]
        out: PathBuf,
        /// Statistics file; printed to stdout if omitted.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long, env = "AWVD_THREADS")]
        threads: Option<usize>,
    },
    /// Locate points in a built diagram.
    Query {
        #[arg(long)]
        diagram: PathBuf,
        /// File with one point per line.
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        points: Option<PathBuf>,
        /// Number of random points from the inflated site bounding box.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Compare against the exact nearest site.
        #[arg(long)]
        check: bool,
        /// Per-query CSV (with `--check`).
        #[arg(long, requires = "check")]
        csv: Option<PathBuf>,
    },
    /// Draw a planar diagram as SVG.
    Render {
        #[arg(long)]
        diagram: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run invariant suites on a sites file.
    Validate {
        #[arg(long)]
        sites: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Resolve duplicate cubes by maximum label (the e2e suite must catch this).
        #[arg(long)]
        fault: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FRAC_BITS)]
        frac_bits: u32,
        #[arg(long, env = "AWVD_THREADS")]
        threads: Option<usize>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RefinementDepthExceeded { .. } => 3,
            Error::UnsupportedDimension(_) => 4,
            _ => 2,
        };
        let mut message = e.to_string();
        if code == 3 {
            message.push_str(&format!(
                "\nhint: pass a larger --frac-bits (current maximum is {})",
                awvd::cube::MAX_FRAC_BITS
            ));
        }
        Failure { code, message }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn load_diagram(path: &Path) -> Result<Amwvd, Failure> {
    Ok(load(&read(path)?)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            n,
            d,
            weights,
            seed,
            out,
        } => {
            let inst = gen_instance(n as usize, d as usize, weights, seed)?;
            let text = write_sites(inst.d, &inst.points);
            match out {
                Some(p) => write(&p, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Build {
            sites,
            eps,
            mode,
            frac_bits,
            out,
            stats,
            threads,
        } => {
            let params = derive_params(eps)?;
            let sites = read_sites(&read(&sites)?)?;
            let opts = BuildOptions {
                frac_bits,
                threads,
                policy: DuplicatePolicy::MinLabel,
            };
            let dgm = build_diagram(sites, mode, &params, &opts)?;
            write(&out, &dump(&dgm))?;
            let report = dgm.stats_report(true);
            match stats {
                Some(p) => write(&p, &report)?,
                None => print!("{report}"),
            }
        }
        Command::Query {
            diagram,
            points,
            random,
            seed,
            check,
            csv,
        } => {
            let dgm = load_diagram(&diagram)?;
            let pts = match (points, random) {
                (Some(p), _) => parse_points(&read(&p)?, dgm.dim())?,
                (None, Some(m)) => uniform_queries(&dgm.sites, m, seed),
                (None, None) => unreachable!("clap requires one of --points/--random"),
            };
            if check {
                let report = check_points(&dgm, &pts, seed)?;
                for r in &report.records {
                    let coords: Vec<String> = r.point.iter().map(|x| x.to_string()).collect();
                    println!(
                        "{} label={} exact={} ratio={:.12}",
                        coords.join(" "),
                        r.label,
                        r.exact_label,
                        r.ratio
                    );
                }
                print!("{}", report.to_report());
                if let Some(p) = csv {
                    write(&p, &report.to_csv())?;
                }
            } else {
                for p in &pts {
                    let q = dgm.query(p)?;
                    let coords: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                    println!("{} label={} distance={:.12e}", coords.join(" "), q.label, q.distance);
                }
            }
        }
        Command::Render { diagram, out } => {
            let dgm = load_diagram(&diagram)?;
            write(&out, &render_svg(&dgm)?)?;
        }
        Command::Validate {
            sites,
            eps,
            suite,
            fault,
            seed,
            frac_bits,
            threads,
        } => {
            derive_params(eps)?;
            let sites = read_sites(&read(&sites)?)?;
            let opts = ValidateOptions {
                eps,
                seed,
                frac_bits,
                threads,
                fault,
                ..Default::default()
            };
            let lines = run_suite(&sites, suite, &opts)?;
            for l in &lines {
                println!("{l}");
            }
            let failed = lines.iter().filter(|l| !l.passed).count();
            if failed > 0 {
                return Err(Failure {
                    code: 1,
                    message: format!("{failed} check(s) failed"),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
