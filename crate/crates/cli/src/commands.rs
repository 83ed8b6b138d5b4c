use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use fwm_core::atomic::{
    profile_mb_overlap, resonant_velocity, velocity_scan, Normalization, ScatteringProfile,
};
use fwm_core::parallel;
use fwm_core::photon::{
    analyze_streams, fit_gsi_vs_rate, fit_power_scaling, merge, read_binary, read_csv, split,
    synthesize_time_tags, write_binary, write_csv, AnalysisReport, LinearRegime, PowerPoint,
};
use fwm_core::tomography::{
    apply_phase_retarder, bell_phi_plus, default_settings, ml_reconstruct, simulate_counts,
    write_result, DensityMatrix4, TomographyCounts,
};
use serde::Serialize;

use crate::config::{set_axis, RunConfig, StateKind, SweepConfig, TagFormat};
use crate::error::Failure;

/// Everything a command needs besides its config.
pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir.display(), e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::io(path.display(), e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::io(path.display(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::new(crate::error::EXIT_OTHER, e.to_string()))?;
    write_file(path, |w| writeln!(w, "{text}"))
}

#[derive(Serialize)]
struct ScanSummary {
    points: usize,
    grid_step_mps: f64,
    normalized: bool,
    peak_velocity_mps: f64,
    raw_peak_velocity_mps: f64,
    resonant_velocity_mps: f64,
    peak_offset_steps: i64,
    pump_resonant_velocity_mps: f64,
    mb_overlap: Option<f64>,
}

pub fn scan(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let params = cfg.atomic.to_params()?;
    let vapor = cfg.vapor.to_params()?;
    let grid = cfg.grid.velocities(&vapor)?;
    let norm = if cfg.grid.normalize {
        Normalization::Peak
    } else {
        Normalization::None
    };
    let profile = velocity_scan(&params, &vapor, &grid, norm)?;
    let summary = scan_summary(&profile, &params, &vapor);

    create_out(&ctx.out)?;
    write_file(&ctx.out.join("profile.csv"), |w| profile.write_csv(w))?;
    write_json(&ctx.out.join("summary.json"), &summary)?;
    println!(
        "weighted peak at {:.3} m/s, two-photon resonance at {:.3} m/s ({} grid steps apart)",
        summary.peak_velocity_mps, summary.resonant_velocity_mps, summary.peak_offset_steps
    );
    if let Some(r) = summary.mb_overlap {
        println!("correlation with Maxwell-Boltzmann: {r:.6}");
    }
    Ok(())
}

fn scan_summary(
    profile: &ScatteringProfile,
    params: &fwm_core::atomic::ThreeLevelParams,
    vapor: &fwm_core::atomic::VaporParams,
) -> ScanSummary {
    let v_res = resonant_velocity(params.delta_2, params);
    let (peak, _) = profile.weighted_peak().expect("grid is non-empty");
    let (raw_peak, _) = profile.raw_peak().expect("grid is non-empty");
    let nearest = profile.nearest_index(v_res).expect("grid is non-empty");
    ScanSummary {
        points: profile.len(),
        grid_step_mps: profile.grid_step(),
        normalized: profile.normalized,
        peak_velocity_mps: profile.velocities[peak],
        raw_peak_velocity_mps: profile.velocities[raw_peak],
        resonant_velocity_mps: v_res,
        peak_offset_steps: peak as i64 - nearest as i64,
        pump_resonant_velocity_mps: -params.delta_1 / params.k_pump(),
        mb_overlap: profile_mb_overlap(profile, vapor).ok(),
    }
}

pub fn tags(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let params = cfg.source.to_params(ctx.seed)?;
    let (signal, idler) = synthesize_time_tags(&params)?;
    let merged = merge(&signal, &idler);

    create_out(&ctx.out)?;
    let path = match cfg.source.format {
        TagFormat::Binary => ctx.out.join("tags.bin"),
        TagFormat::Csv => ctx.out.join("tags.csv"),
    };
    match cfg.source.format {
        TagFormat::Binary => write_file(&path, |w| write_binary(&merged, w))?,
        TagFormat::Csv => write_file(&path, |w| write_csv(&merged, w))?,
    }
    println!(
        "signal singles: {} ({:.6e} /s)",
        signal.len(),
        signal.len() as f64 / params.duration
    );
    println!(
        "idler singles: {} ({:.6e} /s)",
        idler.len(),
        idler.len() as f64 / params.duration
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// Analysis metrics as written to `metrics.json`.
#[derive(Serialize)]
struct Metrics {
    #[serde(flatten)]
    report: AnalysisReport,
    linewidth_ghz: Option<f64>,
}

impl From<AnalysisReport> for Metrics {
    fn from(report: AnalysisReport) -> Self {
        Self {
            linewidth_ghz: report
                .linewidth
                .map(|l| l / (2.0 * std::f64::consts::PI) / 1e9),
            report,
        }
    }
}

pub fn analyze(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let settings = cfg.source.analysis_settings(&cfg.analyze)?;
    let path = match &cfg.analyze.tags {
        Some(p) => cfg.resolve(p),
        None => ctx.out.join(match cfg.source.format {
            TagFormat::Binary => "tags.bin",
            TagFormat::Csv => "tags.csv",
        }),
    };
    if !path.is_file() {
        return Err(Failure::validation(format!(
            "[analyze] tags file {} does not exist",
            path.display()
        )));
    }
    let file = File::open(&path).map_err(|e| Failure::io(path.display(), e))?;
    let reader = BufReader::new(file);
    let tags = if path.extension().is_some_and(|e| e == "csv") {
        read_csv(reader)?
    } else {
        read_binary(reader)?
    };
    let (signal, idler) = split(&tags);
    let analysis = analyze_streams(&signal, &idler, &settings)?;

    create_out(&ctx.out)?;
    write_file(&ctx.out.join("histogram.csv"), |w| analysis.histogram.write_csv(w))?;
    if let Some(g) = &analysis.gsi {
        write_file(&ctx.out.join("gsi.csv"), |w| g.write_csv(w))?;
    }
    let r = &analysis.report;
    println!(
        "coincidences: {} ({:.6e} /s, dead-time corrected {:.6e} /s)",
        r.coincidences, r.coincidence_rate, r.corrected_coincidence_rate
    );
    if let Some(g) = r.gsi_peak {
        println!("g_si peak: {g:.4}");
    }
    if let Some(h) = r.heralding {
        println!("heralding efficiency: {h:.4}");
    }
    write_json(&ctx.out.join("metrics.json"), &Metrics::from(analysis.report))?;
    Ok(())
}

pub fn tomo(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let opts = cfg.tomo.options(ctx.seed)?;
    let (counts, simulated) = match (&cfg.tomo.counts, &cfg.tomo.simulate) {
        (Some(_), Some(_)) => {
            return Err(Failure::validation("[tomo] set either counts or simulate, not both"))
        }
        (None, None) => {
            return Err(Failure::validation("[tomo] a counts file or a [tomo.simulate] block is required"))
        }
        (Some(p), None) => {
            let path = cfg.resolve(p);
            if !path.is_file() {
                return Err(Failure::validation(format!(
                    "[tomo] counts file {} does not exist",
                    path.display()
                )));
            }
            let file = File::open(&path).map_err(|e| Failure::io(path.display(), e))?;
            (TomographyCounts::read_csv(BufReader::new(file))?, false)
        }
        (None, Some(sim)) => {
            let state = match sim.state {
                StateKind::PhiPlus => bell_phi_plus(),
                StateKind::Mixed => DensityMatrix4::maximally_mixed(),
                StateKind::Werner => match sim.p {
                    Some(p) if (0.0..=1.0).contains(&p) => DensityMatrix4::werner(p),
                    _ => return Err(Failure::validation("[tomo.simulate] werner needs p in [0, 1]")),
                },
            };
            if sim.n_per_setting == 0 {
                return Err(Failure::validation("[tomo.simulate] n_per_setting must be positive"));
            }
            if !sim.retarder_rad.is_finite() {
                return Err(Failure::validation("[tomo.simulate] retarder_rad must be finite"));
            }
            let state = apply_phase_retarder(&state, sim.retarder_rad);
            (
                simulate_counts(&state, &default_settings(), sim.n_per_setting, ctx.seed),
                true,
            )
        }
    };
    counts.validate()?;
    let result = ml_reconstruct(&counts, &opts)?;

    create_out(&ctx.out)?;
    if simulated {
        write_file(&ctx.out.join("counts.csv"), |w| counts.write_csv(w))?;
    }
    write_file(&ctx.out.join("tomography.txt"), |w| write_result(&result, w))?;
    println!("fidelity to Phi+: {:.6}", result.fidelity_phi_plus);
    println!("lower bound: {:.6}", result.fidelity_lower_bound);
    println!("purity: {:.6}", result.purity);
    Ok(())
}

struct SweepPoint {
    coords: Vec<f64>,
    pump_coupling: (f64, f64),
    params: fwm_core::photon::PairStreamParams,
    settings: fwm_core::photon::AnalysisSettings,
}

#[derive(Serialize)]
struct Fits {
    power: Option<fwm_core::photon::PowerFit>,
    gsi_rate: Option<fwm_core::photon::GsiRateFit>,
    /// Least-squares slope of ln g_si against ln coincidence rate.
    gsi_loglog_slope: Option<f64>,
}

const SWEEP_COLUMNS: &[&str] = &[
    "pair_rate",
    "seed",
    "status",
    "singles_signal",
    "singles_idler",
    "signal_rate",
    "idler_rate",
    "coincidences",
    "coincidence_rate",
    "corrected_coincidence_rate",
    "pair_rate_estimate",
    "gsi_peak",
    "gsi_peak_delay_ps",
    "heralding",
    "heralding_corrected",
    "fwhm_ps",
    "linewidth_ghz",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep(cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let sweep: &SweepConfig = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::validation("[sweep] block is required"))?;
    sweep.validate()?;

    // Build and validate every point before running any of them.
    let mut points = Vec::new();
    for (index, coords) in sweep.points().into_iter().enumerate() {
        let mut src = cfg.source.clone();
        let mut pc = (sweep.pump_mw, sweep.coupling_mw);
        for (axis, &v) in sweep.axes.iter().zip(&coords) {
            set_axis(&mut src, &mut pc, &axis.name, v);
        }
        if let Some(k) = sweep.scaling_k.filter(|_| sweep.uses_power()) {
            if !(pc.0 > 0.0 && pc.1 > 0.0) {
                return Err(Failure::validation("[sweep] powers must be positive"));
            }
            src.pair_rate = k * pc.0 * pc.1;
        }
        let seed = ctx.seed.wrapping_add(index as u64);
        let params = src
            .to_params(seed)
            .map_err(|e| Failure::validation(format!("sweep point {index}: {e}")))?;
        let settings = src.analysis_settings(&cfg.analyze)?;
        points.push(SweepPoint {
            coords,
            pump_coupling: pc,
            params,
            settings,
        });
    }

    let results: Vec<Result<AnalysisReport, Failure>> = parallel::map(&points, |p| {
        let (s, i) = synthesize_time_tags(&p.params)?;
        Ok(analyze_streams(&s, &i, &p.settings)?.report)
    });

    create_out(&ctx.out)?;
    let path = ctx.out.join("sweep.csv");
    write_file(&path, |w| {
        let mut header: Vec<String> = sweep.axes.iter().map(|a| a.name.clone()).collect();
        header.extend(SWEEP_COLUMNS.iter().map(|s| s.to_string()));
        writeln!(w, "{}", header.join(","))?;
        for (p, r) in points.iter().zip(&results) {
            let mut row: Vec<String> = p.coords.iter().map(|v| v.to_string()).collect();
            row.push(p.params.pair_rate.to_string());
            row.push(p.params.seed.to_string());
            match r {
                Ok(m) => {
                    let lw = Metrics::from(m.clone()).linewidth_ghz;
                    row.push("ok".into());
                    row.extend([
                        m.singles_signal.to_string(),
                        m.singles_idler.to_string(),
                        m.signal_rate.to_string(),
                        m.idler_rate.to_string(),
                        m.coincidences.to_string(),
                        m.coincidence_rate.to_string(),
                        m.corrected_coincidence_rate.to_string(),
                        opt(m.pair_rate_estimate),
                        opt(m.gsi_peak),
                        opt(m.gsi_peak_delay_ps),
                        opt(m.heralding),
                        opt(m.heralding_corrected),
                        opt(m.fwhm_ps),
                        opt(lw),
                    ]);
                }
                Err(e) => {
                    row.push(csv_field(&format!("error {}: {}", e.code, e.message)));
                    row.extend(std::iter::repeat_n(String::new(), SWEEP_COLUMNS.len() - 3));
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;

    let fits = sweep_fits(sweep, &points, &results);
    write_json(&ctx.out.join("fits.json"), &fits)?;

    let failed: Vec<&Failure> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    println!(
        "{} of {} points succeeded; wrote {}",
        results.len() - failed.len(),
        results.len(),
        path.display()
    );
    if let Some(k) = fits.power.as_ref().map(|f| f.k) {
        println!("power scaling k = {k:.6e} /s/mW²");
    }
    match failed.first() {
        Some(f) => Err(Failure::new(
            f.code,
            format!("{} sweep point(s) failed; first: {}", failed.len(), f.message),
        )),
        None => Ok(()),
    }
}

fn sweep_fits(
    sweep: &SweepConfig,
    points: &[SweepPoint],
    results: &[Result<AnalysisReport, Failure>],
) -> Fits {
    let ok: Vec<(&SweepPoint, &AnalysisReport)> = points
        .iter()
        .zip(results)
        .filter_map(|(p, r)| r.as_ref().ok().map(|r| (p, r)))
        .collect();

    // Pair-generation rate per power product, from dead-time corrected
    // coincidences divided by both detection efficiencies.
    let power = sweep
        .uses_power()
        .then(|| {
            let pts: Vec<PowerPoint> = ok
                .iter()
                .filter(|(_, r)| r.coincidence_rate > 0.0)
                .map(|(p, r)| PowerPoint {
                    dead_time_factor: r.corrected_coincidence_rate / r.coincidence_rate,
                    ..PowerPoint::new(
                        p.pump_coupling.0,
                        p.pump_coupling.1,
                        r.corrected_coincidence_rate / (p.params.eff_signal * p.params.eff_idler),
                    )
                })
                .collect();
            fit_power_scaling(&pts, &LinearRegime::Auto).ok()
        })
        .flatten();

    let gsi_points: Vec<(f64, f64)> = ok
        .iter()
        .filter_map(|(_, r)| r.gsi_peak.map(|g| (r.coincidence_rate, g)))
        .filter(|&(c, g)| c > 0.0 && g > 0.0)
        .collect();
    let gsi_rate = fit_gsi_vs_rate(&gsi_points).ok();
    let gsi_loglog_slope = loglog_slope(&gsi_points);
    Fits {
        power,
        gsi_rate,
        gsi_loglog_slope,
    }
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0.ln() - mx) * (p.1.ln() - my))
        .sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
