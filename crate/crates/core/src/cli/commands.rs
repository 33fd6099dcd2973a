use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::chain::{ChainStatics, Generator};
use crate::counting::{simulate_counting, write_path_csv};
use crate::limits::{write_curve_csv, LimitLaw, Regime};
use crate::numerics::{DenseMatrix, RngStream};
use crate::stats::{ks_gate, run_experiment, variance_gate_with, write_summary_csv, McSummary};

use super::config::RunFile;
use super::svg::{self, Panel, Series};
use super::CliError;

/// Residual bound for the `chain` identity report.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Band half-width, in limit standard deviations, used by the path report.
pub const BAND_SIGMAS: f64 = 4.0;

const DEFAULT_SVG_PATHS: usize = 20;
const CURVE_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    GateFailed,
}

pub struct Context<'a> {
    pub file: &'a RunFile,
    pub out: &'a Path,
    pub svg: bool,
}

impl Context<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    }

    fn create(&self, name: &str) -> Result<std::io::BufWriter<fs::File>, CliError> {
        let p = self.path(name);
        fs::File::create(&p)
            .map(std::io::BufWriter::new)
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn write_matrix_csv<W: Write>(m: &DenseMatrix, mut w: W) -> std::io::Result<()> {
    let header: Vec<String> = (1..=m.cols()).map(|j| format!("s{j}")).collect();
    writeln!(w, "state,{}", header.join(","))?;
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{}", i + 1, row.join(","))?;
    }
    w.flush()
}

pub fn chain(ctx: &Context) -> Result<Outcome, CliError> {
    let generator = ctx.file.generator()?;
    let d = generator.dim();
    let (lambda, mu) = match &ctx.file.process {
        Some(p) => (p.lambda.clone(), p.mu.clone()),
        None => (vec![0.0; d], None),
    };
    let statics = ChainStatics::new(&generator, &lambda, mu.as_deref())?;
    let mut w = ctx.create("pi.csv")?;
    writeln!(w, "state,pi").map_err(io_err)?;
    for (i, p) in statics.pi().iter().enumerate() {
        writeln!(w, "{},{p}", i + 1).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    write_matrix_csv(statics.fundamental(), ctx.create("F.csv")?).map_err(io_err)?;
    write_matrix_csv(statics.deviation(), ctx.create("D.csv")?).map_err(io_err)?;

    let residuals = statics.residuals(&generator)?;
    let mut w = ctx.create("residuals.csv")?;
    writeln!(w, "identity,residual,pass").map_err(io_err)?;
    for (name, r) in residuals.named() {
        writeln!(w, "{name},{r},{}", r <= RESIDUAL_TOLERANCE).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    if ctx.file.process.is_some() {
        let mut w = ctx.create("statics.csv")?;
        writeln!(w, "quantity,value").map_err(io_err)?;
        writeln!(w, "lambda_inf,{}", statics.lambda_inf()).map_err(io_err)?;
        writeln!(w, "mu_inf,{}", statics.mu_inf()).map_err(io_err)?;
        writeln!(w, "V,{}", statics.v()).map_err(io_err)?;
        writeln!(w, "mean_jump_rate,{}", generator.mean_jump_rate()).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }

    let worst = residuals.max();
    println!("max identity residual {worst:e} (bound {RESIDUAL_TOLERANCE:e})");
    Ok(if worst <= RESIDUAL_TOLERANCE {
        Outcome::Pass
    } else {
        Outcome::GateFailed
    })
}

type Points = Vec<(f64, f64)>;

/// Reads `time,N,chain_state,intensity` back for plotting.
fn parse_path_csv(bytes: &[u8]) -> (Points, Points) {
    let text = String::from_utf8_lossy(bytes);
    let mut counts = Vec::new();
    let mut intensity = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').filter_map(|s| s.parse().ok()).collect();
        if f.len() == 4 {
            counts.push((f[0], f[1]));
            intensity.push((f[0], f[3]));
        }
    }
    (counts, intensity)
}

pub fn simulate(ctx: &Context) -> Result<Outcome, CliError> {
    let generator = ctx.file.generator()?;
    for run in ctx.file.runs()? {
        run.spec.validate(&generator)?;
        let mut rng = RngStream::new(ctx.file.seed(), 0);
        let path = simulate_counting(&run.spec, &generator, &mut rng)?;
        let mut bytes = Vec::new();
        write_path_csv(&path, &run.spec.lambda, &mut bytes).map_err(io_err)?;
        ctx.write(&format!("path{}.csv", run.suffix), &bytes)?;
        if ctx.svg {
            let (counts, intensity) = parse_path_csv(&bytes);
            let mut top = Panel::new("N_t");
            top.push(Series::line(counts, "black").steps());
            let mut bottom = Panel::new("intensity");
            bottom.push(Series::line(intensity, "steelblue").steps());
            let title = format!("n = {}, chain speed = {}", run.spec.n, run.spec.chain_speed);
            ctx.write(
                &format!("path{}.svg", run.suffix),
                svg::render(&title, "t", &[top, bottom]).as_bytes(),
            )?;
        }
        println!(
            "path{}: {} events, N_T = {}",
            run.suffix,
            path.event_times().len(),
            path.count_at(path.horizon())
        );
    }
    Ok(Outcome::Pass)
}

/// Fraction of replicates inside `±k·σ(t)` at every grid time with
/// `σ(t) > 0`.
pub fn band_fraction(law: &LimitLaw, grid: &[f64], samples: &[Vec<f64>], k: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sd: Vec<f64> = grid.iter().map(|&t| law.stddev(t)).collect();
    let inside = samples
        .iter()
        .filter(|s| s.iter().zip(&sd).all(|(x, &sd)| sd <= 0.0 || x.abs() <= k * sd))
        .count();
    inside as f64 / samples.len() as f64
}

fn write_paths_csv<W: Write>(grid: &[f64], samples: &[Vec<f64>], mut w: W) -> std::io::Result<()> {
    let header: Vec<String> = (1..=samples.len()).map(|r| format!("path{r}")).collect();
    writeln!(w, "time,{}", header.join(","))?;
    for (k, t) in grid.iter().enumerate() {
        let row: Vec<String> = samples.iter().map(|s| s[k].to_string()).collect();
        writeln!(w, "{t},{}", row.join(","))?;
    }
    w.flush()
}

fn clt_svg(title: &str, law: &LimitLaw, grid: &[f64], summary: &McSummary, paths: usize) -> String {
    let mut panel = Panel::new("centered and scaled N");
    for s in summary.samples.iter().take(paths) {
        panel.push(Series::line(grid.iter().copied().zip(s.iter().copied()).collect(), "#999999").width(0.6));
    }
    let band: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 2.0 * law.stddev(t))).collect();
    panel.push(Series::line(band.clone(), "crimson").dashed().width(1.5));
    panel.push(
        Series::line(band.iter().map(|&(t, v)| (t, -v)).collect(), "crimson")
            .dashed()
            .width(1.5),
    );
    svg::render(title, "t", &[panel])
}

pub fn clt(ctx: &Context) -> Result<Outcome, CliError> {
    let exp = ctx.file.experiment()?;
    let mut outcome = Outcome::Pass;
    for (suffix, config) in ctx.file.experiments()? {
        let summary = run_experiment(&config)?;
        let law = LimitLaw::new(config.regime, &config.statics()?)?;
        write_summary_csv(&summary, ctx.create(&format!("summary{suffix}.csv"))?).map_err(io_err)?;
        let shown = exp.paths.unwrap_or(DEFAULT_SVG_PATHS).min(summary.samples.len());
        write_paths_csv(
            &config.grid,
            &summary.samples[..shown],
            ctx.create(&format!("paths{suffix}.csv"))?,
        )
        .map_err(io_err)?;

        let tol = config.tolerance;
        let gate = variance_gate_with(&summary, tol.rel_tol_for(config.replicates), tol.mean_se);
        let ks = ks_gate(&summary, tol.ks_alpha);
        let band = band_fraction(&law, &config.grid, &summary.samples[..shown], BAND_SIGMAS);
        let mut report = format!(
            "regime {}\nengine {:?}\nreplicates {}\nvariance gate {}\n",
            config.regime.name(),
            summary.engine,
            config.replicates,
            verdict(gate.passed, gate.skipped)
        );
        for line in &gate.lines {
            report.push_str(&format!("  {line}\n"));
        }
        report.push_str(&format!("ks gate {} (informational)\n", verdict(ks.passed, ks.skipped)));
        for line in &ks.lines {
            report.push_str(&format!("  {line}\n"));
        }
        report.push_str(&format!(
            "paths inside +-{BAND_SIGMAS} sd band: {:.0}/{shown}\n",
            band * shown as f64
        ));
        ctx.write(&format!("report{suffix}.txt"), report.as_bytes())?;
        let brief: String = report
            .lines()
            .filter(|l| !l.starts_with("  "))
            .map(|l| format!("{l}\n"))
            .collect();
        print!("summary{suffix}:\n{brief}");

        if ctx.svg {
            let title = format!(
                "{} n = {}, chain speed = {}",
                config.regime.name(),
                config.spec.n,
                config.spec.chain_speed
            );
            ctx.write(
                &format!("summary{suffix}.svg"),
                clt_svg(&title, &law, &config.grid, &summary, shown).as_bytes(),
            )?;
        }
        if !gate.passed && !gate.skipped {
            outcome = Outcome::GateFailed;
        }
    }
    Ok(outcome)
}

fn verdict(passed: bool, skipped: bool) -> &'static str {
    match (passed, skipped) {
        (_, true) => "SKIPPED",
        (true, _) => "PASS",
        (false, _) => "FAIL",
    }
}

fn curve_label(regime: &Regime) -> String {
    match regime {
        Regime::JointBeta { beta } | Regime::RecoveryJoint { beta } => format!("{}_beta{beta}", regime.name()),
        Regime::Gamma { gamma } => format!("{}{gamma}", regime.name()),
        _ => regime.name().to_string(),
    }
}

fn default_regimes(gamma: f64, recovery: bool) -> Vec<Regime> {
    let mut v = vec![
        Regime::NonModulated,
        Regime::IteratedNThenAlpha,
        Regime::IteratedAlphaThenN,
        Regime::JointBeta { beta: 0.5 },
        Regime::JointBeta { beta: 1.0 },
        Regime::JointBeta { beta: 2.0 },
    ];
    if gamma > 0.0 {
        v.push(Regime::Gamma { gamma });
    }
    if recovery {
        v.extend([
            Regime::RecoveryNonModulated,
            Regime::RecoveryJoint { beta: 0.5 },
            Regime::RecoveryJoint { beta: 1.0 },
            Regime::RecoveryJoint { beta: 2.0 },
        ]);
    }
    v
}

pub fn curves(ctx: &Context) -> Result<Outcome, CliError> {
    let generator: Generator = ctx.file.generator()?;
    let p = ctx.file.process()?;
    let statics = ChainStatics::new(&generator, &p.lambda, p.mu.as_deref())?;
    let recovery = p.mu.as_ref().is_some_and(|m| m.iter().any(|&x| x != 0.0));
    let (regimes, grid) = match &ctx.file.experiment {
        Some(e) => (vec![ctx.file.regime()?], e.grid.times()?),
        None => {
            let last = (CURVE_POINTS - 1) as f64;
            let grid = (0..CURVE_POINTS).map(|i| p.horizon * i as f64 / last).collect();
            (default_regimes(p.gamma, recovery), grid)
        }
    };
    let mut panel = Panel::new("limit variance");
    const COLORS: [&str; 6] = ["black", "crimson", "steelblue", "darkgreen", "darkorange", "purple"];
    for (i, regime) in regimes.iter().enumerate() {
        let law = LimitLaw::new(*regime, &statics)?;
        let label = curve_label(regime);
        write_curve_csv(&law, &statics, &grid, ctx.create(&format!("curve_{label}.csv"))?).map_err(io_err)?;
        panel.push(Series::line(
            grid.iter().map(|&t| (t, law.variance(t))).collect(),
            COLORS[i % COLORS.len()],
        ));
        println!("curve_{label}.csv");
    }
    if ctx.svg {
        ctx.write(
            "curves.svg",
            svg::render("limit variance curves", "t", &[panel]).as_bytes(),
        )?;
    }
    Ok(Outcome::Pass)
}
