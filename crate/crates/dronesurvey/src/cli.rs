//! The `dronesurvey` command line.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 planning
//! impossible, 4 numeric or model failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dronesurvey_core::ecosim::SurveyPlan;
use dronesurvey_core::estimators::{
    bootstrap_density, fit_zinb, naive_density, zero_fraction, zinb_density, BootstrapConfig,
    BootstrapStatistic, ZinbOptions,
};
use dronesurvey_core::field::{reconcile_observers, summarize_by_transect, ReconcileStrategy};
use dronesurvey_core::grid::GridSpec;
use dronesurvey_core::planner::{plan_design, DesignConfig, StopRule};
use dronesurvey_core::rem::{effort, encounter_adequacy, encounter_count, rem_density, RemInput};
use dronesurvey_core::stats::{anova_type2, fit_additive_model, tukey_hsd, DensityTable, METHOD};
use dronesurvey_core::{DensityEstimate, Method, PlanarPoint};
use log::{error, info, warn};

use crate::csv_io::{self, parse_encounters, parse_launch_points, parse_sightings};
use crate::error::{read_file, write_file, Error, Result};
use crate::geojson::{design_to_geojson, parse_design_catalog, parse_region, DesignSummary};
use crate::plot::PlotTable;
use crate::report::{self, read_estimates};
use crate::sim::{self, ReportFile};

pub const OUT_DIR_ENV: &str = "DRONESURVEY_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "dronesurvey",
    version,
    about = "Drone transect planning and wildlife density estimation"
)]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only errors on stderr, nothing on stdout.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// Seed for every random choice of this invocation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan transect flights over a region.
    Plan {
        #[arg(long)]
        region: PathBuf,
        #[arg(long)]
        launch_points: PathBuf,
        #[arg(long, default_value_t = 350.0)]
        grid_spacing: f64,
        /// Must equal the grid spacing: transects are grid edges.
        #[arg(long, default_value_t = 350.0)]
        transect_length: f64,
        #[arg(long, default_value_t = 7)]
        max_per_flight: usize,
        #[arg(long, default_value_t = 55.0)]
        swath_width: f64,
        /// Target covered area, percent of the region.
        #[arg(long, default_value_t = 17.0, conflicts_with = "flights_per_launch")]
        target_coverage: f64,
        /// Plan this many rounds of one flight per launch point instead.
        #[arg(long)]
        flights_per_launch: Option<usize>,
        /// Snap distance for launch points (default half the spacing).
        #[arg(long)]
        snap_tolerance: Option<f64>,
        /// Shift of the grid origin from the region's bounding-box corner.
        #[arg(long, num_args = 2, value_names = ["DX", "DY"], allow_negative_numbers = true)]
        grid_offset: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Density estimates from transect sightings.
    Estimate {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        sightings: PathBuf,
        /// Keep only sightings of this species.
        #[arg(long)]
        species: Option<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        #[arg(long, default_value_t = 1000)]
        bootstrap_iters: usize,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, value_enum, default_value_t = StatisticArg::RatioOfSums)]
        bootstrap_statistic: StatisticArg,
        /// max, first, first:<observer> or mean_rounded.
        #[arg(long, default_value = "max")]
        observers: String,
        /// Label stored with each estimate, e.g. A_Oct.
        #[arg(long)]
        survey_unit: Option<String>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Random Encounter Model density from camera traps.
    Rem {
        #[arg(long)]
        deployments: PathBuf,
        #[arg(long)]
        sequences: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        survey_unit: Option<String>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Two-way ANOVA and Tukey HSD over a method × survey-unit table.
    Compare {
        #[arg(long)]
        densities: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Known-truth simulation and recovery report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Grouped bar chart (SVG) or its data table (CSV) from estimate files.
    Plot {
        #[arg(long, num_args = 1.., required = true)]
        estimates: Vec<PathBuf>,
        /// Output file; the extension (.svg or .csv) picks the format.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Naive,
    Bootstrap,
    Zinb,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatisticArg {
    RatioOfSums,
    MeanOfRatios,
}

struct Ctx {
    quiet: bool,
    seed: Option<u64>,
}

impl Ctx {
    fn print(&self, s: &str) {
        if !self.quiet {
            print!("{s}");
        }
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    write_file(&path, contents)?;
    info!("wrote {}", path.display());
    Ok(())
}

/// Reads every input before any computation starts.
fn read_all(paths: &[&Path]) -> Result<Vec<String>> {
    paths.iter().map(|p| read_file(p)).collect()
}

fn cmd_plan(ctx: &Ctx, cmd: Command) -> Result<i32> {
    let Command::Plan {
        region,
        launch_points,
        grid_spacing,
        transect_length,
        max_per_flight,
        swath_width,
        target_coverage,
        flights_per_launch,
        snap_tolerance,
        grid_offset,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let texts = read_all(&[&region, &launch_points])?;
    if (transect_length - grid_spacing).abs() > 1e-9 * grid_spacing.abs().max(1.0) {
        return Err(Error::format(format!(
            "transect length {transect_length} m must equal the grid spacing {grid_spacing} m"
        )));
    }
    if !(0.0..=100.0).contains(&target_coverage) {
        return Err(Error::format(
            "--target-coverage is a percentage in [0, 100]",
        ));
    }
    if max_per_flight == 0 {
        return Err(Error::format("--max-per-flight must be at least 1"));
    }
    if !(swath_width > 0.0 && swath_width.is_finite()) {
        return Err(Error::format("--swath-width must be positive"));
    }
    let region = parse_region(&texts[0])?;
    let points = parse_launch_points(texts[1].as_bytes())?;
    let offset = grid_offset.map_or(PlanarPoint::new(0.0, 0.0), |v| PlanarPoint::new(v[0], v[1]));
    let grid = GridSpec::for_region(&region, grid_spacing, offset)?;
    let config = DesignConfig {
        max_transects: max_per_flight,
        stop: match flights_per_launch {
            Some(n) => StopRule::FlightsPerLaunch(n),
            None => StopRule::TargetCoverage(target_coverage / 100.0),
        },
        swath_width_m: swath_width,
        snap_tolerance_m: snap_tolerance,
        ..DesignConfig::default()
    };
    let seed = ctx.seed.unwrap_or(0);
    let design = plan_design(&region, &grid, &points, seed, &config)?;
    let summary = DesignSummary::new(&design);
    write_out(
        &out.out,
        "design.geojson",
        &report::to_json(&design_to_geojson(&design)),
    )?;
    write_out(&out.out, "design_summary.json", &report::to_json(&summary))?;
    for w in &design.warnings {
        warn!("{w}");
    }
    if !design.unmapped_launch_points.is_empty() {
        warn!(
            "launch points not on the grid (input rows): {:?}",
            design.unmapped_launch_points
        );
    }
    let d = summary.per_direction_counts;
    ctx.print(&format!(
        "region      {:.3} km²\nflights     {}\ntransects   {}  (N {} E {} S {} W {})\ncovered     {:.4} km²  ({:.2}%)\ntarget      {}\nseed        {}\n",
        summary.region_area_km2,
        summary.n_flights,
        summary.n_transects,
        d.north,
        d.east,
        d.south,
        d.west,
        summary.covered_km2,
        100.0 * summary.covered_fraction,
        match summary.target_coverage_fraction {
            Some(f) if summary.target_reached => format!("{:.2}% reached", 100.0 * f),
            Some(f) => format!("{:.2}% NOT reached (partial design)", 100.0 * f),
            None => format!("{} flights per launch point", summary.flights_per_launch.unwrap_or(0)),
        },
        summary.seed,
    ));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(ctx: &Ctx, cmd: Command) -> Result<i32> {
    let Command::Estimate {
        design,
        sightings,
        species,
        method,
        bootstrap_iters,
        confidence,
        bootstrap_statistic,
        observers,
        survey_unit,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let texts = read_all(&[&design, &sightings])?;
    let strategy = ReconcileStrategy::parse(&observers)?;
    let catalog = parse_design_catalog(&texts[0])?;
    let parsed = parse_sightings(texts[1].as_bytes(), species.as_deref())?;
    for e in &parsed.errors {
        warn!("{}: skipped {e}", sightings.display());
    }
    let records = reconcile_observers(&parsed.records, &strategy);
    let counts = summarize_by_transect(&records, &catalog)?;
    let seed = ctx.seed.unwrap_or(0);
    let methods: &[Method] = match method {
        MethodArg::Naive => &[Method::Naive],
        MethodArg::Bootstrap => &[Method::Bootstrap],
        MethodArg::Zinb => &[Method::Zinb],
        MethodArg::All => &[Method::Naive, Method::Bootstrap, Method::Zinb],
    };
    let mut estimates = Vec::new();
    let mut failed = None;
    for m in methods {
        let result = match m {
            Method::Naive => naive_density(&counts),
            Method::Bootstrap => bootstrap_density(
                &counts,
                &BootstrapConfig {
                    iterations: bootstrap_iters,
                    confidence,
                    seed: dronesurvey_core::rng::derive_seed(seed, "bootstrap"),
                    statistic: match bootstrap_statistic {
                        StatisticArg::RatioOfSums => BootstrapStatistic::RatioOfSums,
                        StatisticArg::MeanOfRatios => BootstrapStatistic::MeanOfRatios,
                    },
                },
            ),
            Method::Zinb => fit_zinb(
                &counts,
                &ZinbOptions {
                    seed: dronesurvey_core::rng::derive_seed(seed, "zinb"),
                    ..ZinbOptions::default()
                },
            )
            .and_then(|fit| zinb_density(&fit, &counts)),
            Method::Rem => unreachable!(),
        };
        match result {
            Ok(mut e) => {
                e.survey_unit = survey_unit.clone();
                estimates.push(e);
            }
            Err(e) => {
                let e = Error::from(e);
                if e.exit_code() != 4 {
                    return Err(e);
                }
                error!("{m}: {e}");
                failed = Some(e.exit_code());
            }
        }
    }
    write_out(
        &out.out,
        "transect_counts.csv",
        &csv_io::write_counts(&counts),
    )?;
    write_out(
        &out.out,
        "estimates.json",
        &report::estimates_to_json(&estimates),
    )?;
    write_out(
        &out.out,
        "estimates.csv",
        &report::estimates_to_csv(&estimates),
    )?;
    let zeros = zero_fraction(&counts)?;
    let animals: u64 = counts.iter().map(|c| c.animal_count).sum();
    let area: f64 = counts.iter().map(|c| c.covered_area_km2).sum();
    ctx.print(&format!(
        "transects {}  animals {animals}  area {area:.4} km²  zero fraction {:.1}%\n{}",
        counts.len(),
        100.0 * zeros,
        report::estimates_table(&estimates)
    ));
    Ok(failed.unwrap_or(0))
}

fn cmd_rem(ctx: &Ctx, cmd: Command) -> Result<i32> {
    let Command::Rem {
        deployments,
        sequences,
        params,
        survey_unit,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let texts = read_all(&[&deployments, &sequences, &params])?;
    let (deps, seqs) = parse_encounters(texts[0].as_bytes(), texts[1].as_bytes())?;
    let (params, vif) = report::parse_rem_params(&texts[2], &params.display().to_string())?;
    let y = encounter_count(&seqs, params.use_group_size);
    let input = RemInput {
        variance_inflation: vif,
        ..RemInput::new(y, effort(&deps)?, params)
    };
    let mut est = rem_density(&input)?;
    est.survey_unit = survey_unit;
    let adequacy = encounter_adequacy(y);
    if let Some(w) = est.diagnostics.get("warning") {
        warn!("{w}");
    }
    write_out(&out.out, "rem_estimate.json", &report::to_json(&est))?;
    write_out(
        &out.out,
        "rem_estimate.csv",
        &report::estimates_to_csv(std::slice::from_ref(&est)),
    )?;
    ctx.print(&format!(
        "cameras {}  effort {:.2} camera-days  encounters {y}  adequacy {}\n{}",
        deps.len(),
        input.effort_camera_days,
        adequacy.as_str(),
        report::estimates_table(std::slice::from_ref(&est))
    ));
    Ok(0)
}

/// Cells missing from (or repeated in) the method × unit crossing.
pub fn crossing_problems(table: &DensityTable) -> Vec<String> {
    let mut problems = Vec::new();
    for u in table.units() {
        for m in table.methods() {
            match table
                .rows
                .iter()
                .filter(|r| r.method == m && r.survey_unit == u)
                .count()
            {
                0 => problems.push(format!("missing cell: survey_unit {u}, method {m}")),
                1 => {}
                n => problems.push(format!("{n} rows for survey_unit {u}, method {m}")),
            }
        }
    }
    problems
}

fn cmd_compare(ctx: &Ctx, cmd: Command) -> Result<i32> {
    let Command::Compare {
        densities,
        confidence,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let text = read_file(&densities)?;
    let table = csv_io::parse_density_table(text.as_bytes())?;
    let problems = crossing_problems(&table);
    if !problems.is_empty() {
        return Err(Error::Rows(problems));
    }
    let fit = fit_additive_model(&table)?;
    let anova = anova_type2(&fit)?;
    let tukey = tukey_hsd(&fit, METHOD, confidence)?;
    let (a_txt, t_txt) = (report::anova_table(&anova), report::tukey_table(&tukey));
    write_out(&out.out, "anova.json", &report::to_json(&anova))?;
    write_out(&out.out, "anova.txt", &a_txt)?;
    write_out(&out.out, "tukey.json", &report::to_json(&tukey))?;
    write_out(&out.out, "tukey.txt", &t_txt)?;
    ctx.print(&format!(
        "Type II ANOVA, density ~ method + survey_unit\n{a_txt}\n{t_txt}"
    ));
    Ok(0)
}

fn cmd_simulate(ctx: &Ctx, cmd: Command) -> Result<i32> {
    let Command::Simulate { config, out } = cmd else {
        unreachable!()
    };
    let text = read_file(&config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let sim = sim::parse_simulation(&text, &config.display().to_string(), base, ctx.seed)?;
    let report = sim::run_recovery(&sim.spec);
    let file = ReportFile::new(&sim.spec, &report);
    match &sim.spec.survey {
        SurveyPlan::Drone { design, options } => {
            write_out(
                &out.out,
                "design.geojson",
                &report::to_json(&design_to_geojson(design)),
            )?;
            write_out(
                &out.out,
                "design_summary.json",
                &report::to_json(&DesignSummary::new(design)),
            )?;
            let sightings = sim::replicate_sightings(&sim, design, options, 0)?;
            write_out(
                &out.out,
                "sightings.csv",
                &csv_io::write_sightings(&sightings),
            )?;
        }
        SurveyPlan::Camera {
            deployments,
            params,
            ..
        } => {
            let seqs = sim::replicate_sequences(&sim, 0)?;
            write_out(
                &out.out,
                "deployments.csv",
                &csv_io::write_deployments(deployments),
            )?;
            write_out(&out.out, "sequences.csv", &csv_io::write_sequences(&seqs))?;
            write_out(&out.out, "rem_params.txt", &report::rem_params_text(params))?;
        }
    }
    write_out(&out.out, "report.json", &report::to_json(&file))?;
    for (i, f) in &report.failures {
        warn!("replicate {i}: {f}");
    }
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    ctx.print(&format!(
        "{} survey, {} estimator, {} replicates ({} failed)\ntrue density     {}\nmean estimate    {}\nrelative bias    {}\nCI coverage      {}\nmean observed    {}\n",
        file.survey,
        file.estimator,
        file.replicates,
        file.failures.len(),
        file.true_density,
        show(file.mean_estimate),
        show(file.relative_bias),
        file.ci_coverage.as_f64().map_or("n/a".into(), |c| format!("{:.1}%", 100.0 * c)),
        show(file.mean_observations),
    ));
    Ok(if report.estimates.is_empty() { 4 } else { 0 })
}

fn cmd_plot(ctx: &Ctx, cmd: Command) -> Result<i32> {
    let Command::Plot { estimates, out } = cmd else {
        unreachable!()
    };
    let svg = match out
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
    {
        Some(e) if e == "svg" => true,
        Some(e) if e == "csv" => false,
        _ => return Err(Error::format("--out must end in .svg or .csv")),
    };
    let texts = read_all(&estimates.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let mut all: Vec<(DensityEstimate, String)> = Vec::new();
    for (path, text) in estimates.iter().zip(&texts) {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        all.extend(
            read_estimates(path, text)?
                .into_iter()
                .map(|e| (e, stem.clone())),
        );
    }
    if all.is_empty() {
        return Err(Error::format("no estimates to plot"));
    }
    let table = PlotTable::from_estimates(all.iter().map(|(e, s)| (e, s.as_str())));
    write_file(&out, &if svg { table.to_svg() } else { table.to_csv() })?;
    ctx.print(&format!(
        "{} bars in {} groups -> {}\n",
        table.rows.len(),
        table.units().len(),
        out.display()
    ));
    Ok(0)
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<i32> {
    match command {
        c @ Command::Plan { .. } => cmd_plan(ctx, c),
        c @ Command::Estimate { .. } => cmd_estimate(ctx, c),
        c @ Command::Rem { .. } => cmd_rem(ctx, c),
        c @ Command::Compare { .. } => cmd_compare(ctx, c),
        c @ Command::Simulate { .. } => cmd_simulate(ctx, c),
        c @ Command::Plot { .. } => cmd_plot(ctx, c),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .try_init();
    let ctx = Ctx {
        quiet: cli.quiet,
        seed: cli.seed,
    };
    match dispatch(&ctx, cli.command) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            e.exit_code()
        }
    }
}
