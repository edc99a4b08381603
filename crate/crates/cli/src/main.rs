use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lrdblock::asymptotics::Theory;
use lrdblock::block_estimators::{BlockKind, BlockScheme};
use lrdblock::block_selection::{
    local_whittle, two_scale_block_estimate, whittle_bandwidth, SelectionConfig,
};
use lrdblock::experiments::{
    coverage_study, mse_curve, rank_test_power, tables, variance_mse_table, write_manifest,
    GaussianFamily, Manifest, MseCurveConfig, ProcessSpec, Table,
};
use lrdblock::functionals::{block_jackknife, plugin_variance, Functional};
use lrdblock::hermite::hermite_coefficients;
use lrdblock::lrd_sim::{simulate_gaussian, CovarianceModel, Transform};
use lrdblock::rank_test::{rank_test, GofStatistic, RankTestConfig};

#[derive(Parser)]
#[command(name = "lrdblock", version, about = "Block resampling tools for long-memory series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a transformed Gaussian long-memory series.
    Simulate(SimulateArgs),
    /// Hermite coefficients and ranks of a transformation.
    Coeffs(CoeffsArgs),
    /// Block variance estimate for a functional of a series.
    Estimate(EstimateArgs),
    /// Asymptotic bias, variance and optimal block length.
    Theory(TheoryArgs),
    /// Data-driven block length selection.
    Select(SelectArgs),
    /// Bootstrap test of Hermite rank one.
    Ranktest(RankTestArgs),
    /// Empirical MSE curves and their argmin block lengths.
    Table1(TableArgs),
    /// MSE of the sample-mean variance estimator.
    Table2(TableArgs),
    /// MSE of the trimmed-mean plug-in variance estimator.
    Table4(TableArgs),
    /// Coverage of bootstrap confidence intervals.
    Table5(TableArgs),
    /// Rejection rates of the rank test.
    Table6(TableArgs),
    /// One empirical MSE curve over block lengths.
    Msecurve(MseCurveArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Gaussian family: fgn or farima.
    #[arg(long, default_value = "fgn")]
    model: String,
    /// Hurst index (fgn).
    #[arg(long)]
    hurst: Option<f64>,
    /// Memory parameter d (farima).
    #[arg(long)]
    d: Option<f64>,
    /// Memory exponent alpha; alternative to --hurst / --d.
    #[arg(long)]
    alpha: Option<f64>,
}

impl ModelArgs {
    fn build(&self) -> Result<CovarianceModel> {
        let family = GaussianFamily::parse(&self.model)?;
        let model = match (family, self.hurst, self.d, self.alpha) {
            (GaussianFamily::Fgn, Some(h), None, None) => CovarianceModel::fgn(h)?,
            (GaussianFamily::Farima, None, Some(d), None) => CovarianceModel::farima(d)?,
            (GaussianFamily::Fgn, None, None, Some(a)) => CovarianceModel::fgn_with_alpha(a)?,
            (GaussianFamily::Farima, None, None, Some(a)) => CovarianceModel::farima_with_alpha(a)?,
            _ => bail!("give exactly one of --alpha, --hurst (fgn) or --d (farima)"),
        };
        Ok(model)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Transformation applied to the Gaussian values.
    #[arg(long, default_value = "z")]
    transform: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoeffsArgs {
    #[arg(long)]
    g: String,
    #[arg(long, default_value_t = 32)]
    kmax: usize,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Block length or `auto`.
    #[arg(long, default_value = "auto")]
    ell: String,
    #[arg(long, default_value = "ol")]
    scheme: String,
    /// Scaling exponent or `auto` (local Whittle).
    #[arg(long, default_value = "auto")]
    alpham: String,
    /// mean, trimmed:<delta>, trimmed-exact:<delta> or huber:<c>.
    #[arg(long, default_value = "mean")]
    functional: String,
    /// plugin or bjk.
    #[arg(long, default_value = "plugin")]
    method: String,
}

#[derive(Args)]
struct TheoryArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    g: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "ol")]
    scheme: String,
    #[arg(long, default_value_t = 40)]
    kmax: usize,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 9.0)]
    c1: f64,
    #[arg(long, default_value_t = 12.0)]
    c2: f64,
    #[arg(long, default_value_t = 0.95)]
    theta: f64,
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    #[arg(long, default_value = "ol")]
    scheme: String,
    /// Fixed scaling exponent instead of the local Whittle estimate.
    #[arg(long)]
    alpham: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RankTestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Block length or `auto` for floor(sqrt(n)).
    #[arg(long, default_value = "auto")]
    ell: String,
    #[arg(long, default_value = "ol")]
    scheme: String,
    /// ad or ks.
    #[arg(long, default_value = "ad")]
    stat: String,
    /// Number of bootstrap resamples.
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long = "alpha-sig", default_value_t = 0.05)]
    alpha_sig: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hurst index for the bootstrap instead of the estimate.
    #[arg(long)]
    hurst: Option<f64>,
}

#[derive(Args)]
struct TableArgs {
    /// Replicates per cell; defaults depend on the table and --full.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Use the large replicate counts.
    #[arg(long)]
    full: bool,
}

impl TableArgs {
    fn reps(&self, table: &str) -> usize {
        self.reps.unwrap_or_else(|| tables::default_reps(table, self.full))
    }
}

#[derive(Args)]
struct MseCurveArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, default_value = "fgn")]
    model: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value = "h2")]
    g: String,
    #[arg(long)]
    n: usize,
    /// Largest block length; defaults to min(n/20, 60).
    #[arg(long = "max-ell")]
    max_ell: Option<usize>,
}

fn read_series(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 && values.is_empty() => continue,
            Err(e) => bail!("{}:{}: '{t}': {e}", path.display(), i + 1),
        }
    }
    Ok(lrdblock::TimeSeries::new(values)?.into_values())
}

fn parse_auto<T: std::str::FromStr>(s: &str, what: &str) -> Result<Option<T>> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.parse::<T>()
        .map(Some)
        .map_err(|_| anyhow::anyhow!("{what} must be a number or 'auto', got '{s}'"))
}

fn csv_pairs<K: std::fmt::Display, V: std::fmt::Display>(pairs: &[(K, V)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let model = a.model.build()?;
    let g = Transform::parse(&a.transform)?;
    let z = simulate_gaussian(&model, a.n, a.seed)?;
    let mut out = String::from("x\n");
    for v in z.values() {
        let _ = writeln!(out, "{}", g.apply(*v));
    }
    match &a.out {
        Some(p) => fs::write(p, out).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn coeffs(a: &CoeffsArgs) -> Result<()> {
    let g = Transform::parse(&a.g)?;
    let spec = hermite_coefficients(|z| g.apply(z), a.kmax)?;
    let mut out = String::from("k,J_k\n");
    for (k, c) in spec.coefficients.iter().enumerate() {
        let _ = writeln!(out, "{k},{c}");
    }
    let _ = writeln!(out, "rank,{}", spec.rank);
    let _ = writeln!(out, "second_rank,{}", spec.second_rank);
    let _ = writeln!(out, "pair_rank,{}", spec.pair_rank);
    print!("{out}");
    Ok(())
}

fn estimate(a: &EstimateArgs) -> Result<()> {
    let y = read_series(&a.input)?;
    let n = y.len();
    let functional = Functional::parse(&a.functional)?;
    let kind = BlockKind::parse(&a.scheme)?;
    let x = functional.influence_estimates(&y)?;
    let alpha_m = match parse_auto::<f64>(&a.alpham, "--alpham")? {
        Some(v) => v,
        None => local_whittle(&x, whittle_bandwidth(n, 0.7))?.alpha_m,
    };
    let ell = match parse_auto::<usize>(&a.ell, "--ell")? {
        Some(l) => l,
        None => {
            let cfg = SelectionConfig {
                kind,
                alpha_m: Some(alpha_m),
                ..SelectionConfig::default()
            };
            two_scale_block_estimate(&x, &cfg)?.ell
        }
    };
    let v = match a.method.to_ascii_lowercase().as_str() {
        "plugin" => plugin_variance(&functional, &y, BlockScheme::new(kind, ell), alpha_m)?,
        "bjk" => {
            if kind != BlockKind::Overlapping {
                bail!("the block jackknife deletes overlapping blocks; use --scheme ol");
            }
            block_jackknife(&functional, &y, ell, alpha_m)?
        }
        other => bail!("unknown method '{other}' (plugin or bjk)"),
    };
    print!(
        "{}",
        csv_pairs(&[
            ("estimate", v.value.to_string()),
            ("ell", ell.to_string()),
            ("alpha_m", alpha_m.to_string()),
            ("scheme", v.scheme.kind.to_string()),
            ("blocks", v.blocks.to_string()),
        ])
    );
    Ok(())
}

fn theory(a: &TheoryArgs) -> Result<()> {
    let model = a.model.build()?;
    let g = Transform::parse(&a.g)?;
    let spec = hermite_coefficients(|z| g.apply(z), a.kmax)?;
    let report = Theory::new(&model, &spec, BlockKind::parse(&a.scheme)?)?.report(a.n)?;
    print!("{}", csv_pairs(&report.fields()));
    Ok(())
}

fn select(a: &SelectArgs) -> Result<()> {
    let x = read_series(&a.input)?;
    let cfg = SelectionConfig {
        c1: a.c1,
        c2: a.c2,
        theta: a.theta,
        r: a.r,
        kind: BlockKind::parse(&a.scheme)?,
        alpha_m: a.alpham,
        ..SelectionConfig::default()
    };
    let res = two_scale_block_estimate(&x, &cfg)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&res)?);
    } else {
        print!("{}", csv_pairs(&res.fields()));
    }
    Ok(())
}

fn ranktest(a: &RankTestArgs) -> Result<()> {
    let x = read_series(&a.input)?;
    let cfg = RankTestConfig {
        block_length: parse_auto::<usize>(&a.ell, "--ell")?,
        kind: BlockKind::parse(&a.scheme)?,
        resamples: a.m,
        significance: a.alpha_sig,
        statistic: GofStatistic::parse(&a.stat)?,
        hurst_override: a.hurst,
        seed: a.seed,
        ..RankTestConfig::default()
    };
    let r = rank_test(&x, &cfg)?;
    print!(
        "{}",
        csv_pairs(&[
            ("statistic", r.statistic.to_string()),
            ("quantile", r.quantile.to_string()),
            ("reject", r.reject.to_string()),
            ("alpha_m", r.alpha_m.to_string()),
            ("hurst", r.hurst.to_string()),
            ("block_length", r.block_length.to_string()),
        ])
    );
    Ok(())
}

fn emit(args: &TableArgs, name: &str, outputs: &[(&str, &Table)], config: serde_json::Value) -> Result<()> {
    let mut files = Vec::new();
    for (file, table) in outputs {
        let path = table.write_csv(&args.out, file)?;
        eprintln!("wrote {}", path.display());
        files.push(file.to_string());
    }
    let manifest = Manifest::new(name, &config, files)?;
    let path = write_manifest(&args.out, &manifest)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn table1(a: &TableArgs) -> Result<()> {
    let configs = tables::table1(a.reps("table1"), a.seed);
    let curves = configs.iter().map(mse_curve).collect::<lrdblock::Result<Vec<_>>>()?;
    let summary = tables::table1_summary(&curves);
    let mut all = Table::new("table1_curves", Vec::new());
    for c in &curves {
        let t = c.to_table("table1_curves");
        all.columns = t.columns;
        all.rows.extend(t.rows);
    }
    emit(
        a,
        "table1",
        &[("table1.csv", &summary), ("table1_curves.csv", &all)],
        json!({ "table": "table1", "curves": configs }),
    )
}

fn table_mse(a: &TableArgs, name: &str) -> Result<()> {
    let reps = a.reps(name);
    let cfg = if name == "table2" {
        tables::table2(reps, a.seed)
    } else {
        tables::table4(reps, a.seed)
    };
    let t = variance_mse_table(&cfg)?;
    emit(a, name, &[(&format!("{name}.csv"), &t)], json!({ "table": name, "config": cfg }))
}

fn table5(a: &TableArgs) -> Result<()> {
    let cfg = tables::table5(a.reps("table5"), a.seed);
    let t = coverage_study(&cfg)?;
    emit(a, "table5", &[("table5.csv", &t)], json!({ "table": "table5", "config": cfg }))
}

fn table6(a: &TableArgs) -> Result<()> {
    let cfg = tables::table6(a.reps("table6"), a.seed);
    let t = rank_test_power(&cfg)?;
    emit(a, "table6", &[("table6.csv", &t)], json!({ "table": "table6", "config": cfg }))
}

fn msecurve(a: &MseCurveArgs) -> Result<()> {
    let process = ProcessSpec::new(GaussianFamily::parse(&a.model)?, a.alpha, Transform::parse(&a.g)?);
    let mut blocks = tables::curve_blocks(a.n);
    if let Some(max) = a.max_ell {
        blocks = (1..=max).collect();
    }
    let cfg = MseCurveConfig {
        process,
        n: a.n,
        kinds: vec![BlockKind::Overlapping, BlockKind::NonOverlapping],
        blocks,
        reps: a.table.reps("msecurve"),
        seed: a.table.seed,
    };
    let curve = mse_curve(&cfg)?;
    for kind in &cfg.kinds {
        if let Some(p) = curve.argmin(*kind) {
            eprintln!("{kind}: argmin ell = {} (MSE {:.4})", p.ell, p.mse.estimate);
        }
    }
    let t = curve.to_table("msecurve");
    emit(&a.table, "msecurve", &[("msecurve.csv", &t)], json!({ "table": "msecurve", "config": cfg }))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Coeffs(a) => coeffs(a),
        Command::Estimate(a) => estimate(a),
        Command::Theory(a) => theory(a),
        Command::Select(a) => select(a),
        Command::Ranktest(a) => ranktest(a),
        Command::Table1(a) => table1(a),
        Command::Table2(a) => table_mse(a, "table2"),
        Command::Table4(a) => table_mse(a, "table4"),
        Command::Table5(a) => table5(a),
        Command::Table6(a) => table6(a),
        Command::Msecurve(a) => msecurve(a),
    }
}
