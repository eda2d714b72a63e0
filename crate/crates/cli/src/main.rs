use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};

use povmrand::asymptotics::{
    ScalingParams, asymptotic_noise_content, is_asymptotically_regular, limit_effect_measure,
    limit_unsharpness, norm1_threshold, phi_pm,
};
use povmrand::criteria::Witness;
use povmrand::experiments::{
    Fig7Mode, Table, criteria_bundle, fig1, fig5, fig6, fig7, fig7_table, moments, moments_table,
    sample_files, table1, table1_table,
};
use povmrand::povm::{Povm, read_povm, write_povm};
use povmrand::probrange::{
    circle_example, circle_range_radius, diag_polytope, diagonal_example, pure_state_point,
    write_range_csv,
};
use povmrand::sampling::{EnsembleParams, RandomStream};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "povmrand", version, about = "Random POVMs: sampling, limits, compatibility criteria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Haar,
    Wishart,
    Lebesgue,
    Mixture,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Example {
    Diagonal,
    Circle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Experiment {
    Fig5,
    Table1,
    Fig6,
    Fig7,
    Fig1,
    Moments,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Ks,
    St,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw random POVMs and write them as JSON files.
    Sample {
        #[arg(long, value_enum, default_value_t = Model::Haar)]
        model: Model,
        #[arg(short)]
        d: usize,
        #[arg(short, default_value_t = 2)]
        k: usize,
        #[arg(short, default_value_t = 1)]
        n: usize,
        /// Wishart parameters, one per outcome.
        #[arg(long, value_delimiter = ',')]
        s_list: Vec<f64>,
        /// Mixing weight of the basis-mixture model.
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        /// Number of POVMs to draw.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo moments of Tr M_1^p next to the exact values.
    Moments {
        #[arg(short)]
        d: usize,
        #[arg(short)]
        k: usize,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        max_p: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Limiting spectral data of one effect for each aspect ratio in --s-list.
    Limit {
        #[arg(short)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        s_list: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every compatibility criterion on two POVM files.
    Criteria {
        a: PathBuf,
        b: PathBuf,
        /// Directory for joint-POVM witnesses of compatibility certificates.
        #[arg(long)]
        witness_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Probability range of one of the worked three-outcome examples.
    Probrange {
        #[arg(long, value_enum, default_value_t = Example::Circle)]
        model: Example,
        /// Number of random pure states.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate the data behind a figure or table.
    Experiment {
        #[arg(value_enum)]
        id: Experiment,
        #[arg(short)]
        d: Option<usize>,
        #[arg(short, value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(short)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        s_list: Vec<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Ks)]
        mode: Mode,
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout(), $($arg)*)
    };
}

fn header(name: &str, params: &str, seed: u64) -> Result<()> {
    say!("# povmrand {VERSION} {name} {params} seed={seed}")?;
    Ok(())
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_table(common: &Common, table: &Table) -> Result<()> {
    let text = match common.format {
        Format::Csv => table.to_csv_string()?,
        Format::Json => serde_json::to_string_pretty(&table.to_json())? + "\n",
    };
    emit(common.out.as_deref(), &text)
}

fn emit_json<T: serde::Serialize>(common: &Common, value: &T) -> Result<()> {
    emit(common.out.as_deref(), &(serde_json::to_string_pretty(value)? + "\n"))
}

fn ensemble(model: Model, d: usize, k: usize, n: usize, s_list: &[f64], t: f64) -> Result<EnsembleParams> {
    let params = match model {
        Model::Haar => EnsembleParams::Haar { d, k, n },
        Model::Wishart => {
            let s = if s_list.is_empty() { vec![n as f64; k] } else { s_list.to_vec() };
            EnsembleParams::Wishart { d, s }
        }
        Model::Lebesgue => EnsembleParams::Lebesgue { d, k },
        Model::Mixture => EnsembleParams::BasisMixture { d, t },
    };
    params.validate()?;
    Ok(params)
}

fn limit_table(k: usize, s_list: &[f64]) -> Result<Table> {
    let mut t = Table::new(&[
        "k", "s", "phi_minus", "phi_plus", "atom_0", "atom_1", "unsharpness", "noise_content",
        "regular", "norm1",
    ]);
    for &s in s_list {
        let p = ScalingParams::new(k, s)?;
        let (lo, hi) = phi_pm(&p);
        let mu = limit_effect_measure(&p);
        t.push(vec![
            k.to_string(),
            s.to_string(),
            lo.to_string(),
            hi.to_string(),
            mu.atom_mass_at(0.0).to_string(),
            mu.atom_mass_at(1.0).to_string(),
            limit_unsharpness(&p).to_string(),
            asymptotic_noise_content(&p).to_string(),
            is_asymptotically_regular(&p).to_string(),
            (s > norm1_threshold(k)).to_string(),
        ]);
    }
    Ok(t)
}

fn run_criteria(a: &Path, b: &Path, witness_dir: Option<&Path>, common: &Common) -> Result<()> {
    let pa = read_povm(a).with_context(|| format!("reading {}", a.display()))?;
    let pb = read_povm(b).with_context(|| format!("reading {}", b.display()))?;
    header("criteria", &format!("a={} b={}", a.display(), b.display()), common.seed)?;
    let mut bundle = criteria_bundle(&pa, &pb)?;
    if let Some(dir) = witness_dir {
        fs::create_dir_all(dir)?;
        for report in &mut bundle.reports {
            if let Some(Witness::Joint(joint)) = &report.witness {
                let name = serde_json::to_value(report.criterion)?;
                let path = dir.join(format!("joint_{}.json", name.as_str().unwrap_or("joint")));
                write_povm(&Povm::new_unchecked(joint.effects().to_vec()), &path)?;
                report.witness_path = Some(path.display().to_string());
            }
        }
    }
    emit_json(common, &bundle)
}

fn run_probrange(model: Example, trials: usize, common: &Common) -> Result<()> {
    header("probrange", &format!("model={model:?} trials={trials}"), common.seed)?;
    let povm = match model {
        Example::Diagonal => diagonal_example(),
        Example::Circle => circle_example(),
    };
    let vertices = match model {
        Example::Diagonal => diag_polytope(&povm)?.vertices,
        Example::Circle => {
            let r = circle_range_radius(&povm, 10_000, &mut RandomStream::new(common.seed, 1))?;
            say!("# sampled range radius {r}")?;
            Vec::new()
        }
    };
    let mut stream = RandomStream::new(common.seed, 0);
    let points = (0..trials)
        .map(|_| pure_state_point(&povm, &stream.unit_vector(povm.dim())))
        .collect::<povmrand::Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_range_csv(&mut buf, &vertices, &points)?;
    emit(common.out.as_deref(), std::str::from_utf8(&buf)?)
}

#[allow(clippy::too_many_arguments)]
fn run_experiment(
    id: Experiment,
    d: Option<usize>,
    k: Vec<usize>,
    n: Option<usize>,
    s_list: Vec<f64>,
    trials: Option<usize>,
    mode: Mode,
    grid: usize,
    common: &Common,
) -> Result<()> {
    let seed = common.seed;
    let first_k = |default: usize| k.first().copied().unwrap_or(default);
    match id {
        Experiment::Fig5 => {
            let (d, k, n) = (d.unwrap_or(200), first_k(2), n.unwrap_or(400));
            header("experiment fig5", &format!("d={d} k={k} n={n}"), seed)?;
            let r = fig5(d, k, n, seed)?;
            say!("# ks_statistic {}", r.ks_statistic)?;
            match common.format {
                Format::Csv => emit_table(common, &r.table()),
                Format::Json => emit_json(common, &r),
            }
        }
        Experiment::Table1 => {
            let ks = if k.is_empty() { vec![2, 3, 5] } else { k };
            let ss = if s_list.is_empty() { vec![0.1, 0.3, 0.5, 0.7, 0.9] } else { s_list };
            let (n, pairs) = (n.unwrap_or(1000), trials.unwrap_or(10));
            header("experiment table1", &format!("k={ks:?} s={ss:?} n={n} pairs={pairs}"), seed)?;
            let cells = table1(&ks, &ss, n, pairs, seed)?;
            match common.format {
                Format::Csv => emit_table(common, &table1_table(&cells)),
                Format::Json => emit_json(common, &cells),
            }
        }
        Experiment::Fig6 => {
            let k = first_k(5);
            header("experiment fig6", &format!("k={k} grid={grid}"), seed)?;
            emit_table(common, &fig6(k, grid)?)
        }
        Experiment::Fig7 => {
            let mode = match mode {
                Mode::Ks => Fig7Mode::Ks,
                Mode::St => Fig7Mode::St,
            };
            header("experiment fig7", &format!("mode={mode:?} grid={grid}"), seed)?;
            emit_table(common, &fig7_table(mode, &fig7(mode, grid)?))
        }
        Experiment::Fig1 => {
            let samples = trials.unwrap_or(1000);
            header("experiment fig1", &format!("samples={samples}"), seed)?;
            emit_table(common, &fig1(samples, seed)?)
        }
        Experiment::Moments => {
            let (d, k, n) = (d.unwrap_or(6), first_k(2), n.unwrap_or(4));
            let trials = trials.unwrap_or(10_000);
            header("experiment moments", &format!("d={d} k={k} n={n} trials={trials}"), seed)?;
            emit_table(common, &moments_table(&moments(d, k, n, 3, trials, seed)?))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("Error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample { model, d, k, n, s_list, t, trials, common } => {
            let params = ensemble(model, d, k, n, &s_list, t)?;
            header("sample", &format!("{params:?} count={trials}"), common.seed)?;
            let Some(dir) = common.out.as_deref() else {
                bail!("sample needs --out DIR");
            };
            for path in sample_files(&params, trials, common.seed, dir)? {
                say!("{}", path.display())?;
            }
            Ok(())
        }
        Command::Moments { d, k, n, max_p, trials, common } => {
            header("moments", &format!("d={d} k={k} n={n} max_p={max_p} trials={trials}"), common.seed)?;
            emit_table(&common, &moments_table(&moments(d, k, n, max_p, trials, common.seed)?))
        }
        Command::Limit { k, s_list, common } => {
            header("limit", &format!("k={k} s={s_list:?}"), common.seed)?;
            emit_table(&common, &limit_table(k, &s_list)?)
        }
        Command::Criteria { a, b, witness_dir, common } => run_criteria(&a, &b, witness_dir.as_deref(), &common),
        Command::Probrange { model, trials, common } => run_probrange(model, trials, &common),
        Command::Experiment { id, d, k, n, s_list, trials, mode, grid, common } => {
            run_experiment(id, d, k, n, s_list, trials, mode, grid, &common)
        }
    }
}
