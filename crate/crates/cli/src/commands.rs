use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use conepack_core::catalog::{self, CatalogEntry, Precision, Source as EntrySource};
use conepack_core::channel::{self, ChannelConfig, PAIR_TOL};
use conepack_core::geometry::normalize_unit_dmin;
use conepack_core::metrics::{ebn0_db_from_snr, GainRow};
use conepack_core::mutual_info::{self, MiMethod};
use conepack_core::optimizer::{self, OptimizerConfig};
use conepack_core::{io, lattice, Constellation, Error, Measure, PowerSummary, Result};
use serde_json::json;

use crate::args::*;
use crate::manifest::Recorder;

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(text: &str, out: Option<&Path>, rec: &mut Recorder) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| with_path(e, path))?;
            rec.output(path);
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Names the offending file in I/O errors.
pub fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Constellation> {
    io::load(path).map_err(|e| match e {
        Error::Io(e) => with_path(e, path),
        other => other,
    })
}

struct Loaded {
    constellation: Constellation,
    /// Catalog entries with 4-decimal coordinates need a looser tolerance
    /// when counting minimum-distance pairs.
    pair_tol: f64,
}

fn load_source(src: &Source, rec: &mut Recorder) -> Result<Loaded> {
    if let Some(name) = &src.name {
        let entry = catalog::entry(name)?;
        rec.input(format!("catalog:{name}"));
        return Ok(Loaded {
            pair_tol: entry.tolerance(),
            constellation: entry.constellation,
        });
    }
    let path = src.constellation.as_ref().expect("clap enforces one source");
    rec.input(path.display().to_string());
    Ok(Loaded {
        constellation: load(path)?,
        pair_tol: PAIR_TOL,
    })
}

fn snr_grid(g: &Grid) -> Result<Vec<f64>> {
    if g.step.is_nan() || g.step <= 0.0 || !g.snr_start.is_finite() || !g.snr_stop.is_finite() {
        return Err(Error::InvalidArgument("SNR grid needs finite bounds and a positive step".into()));
    }
    if g.snr_stop < g.snr_start {
        return Err(Error::InvalidArgument(format!(
            "--snr-stop {} is below --snr-start {}",
            g.snr_stop, g.snr_start
        )));
    }
    let n = ((g.snr_stop - g.snr_start) / g.step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(Error::InvalidArgument(format!("SNR grid has {n} points; use a larger step")));
    }
    Ok((0..n).map(|k| g.snr_start + k as f64 * g.step).collect())
}

fn table_inputs(args: &TableArgs, rec: &mut Recorder) -> Result<Vec<Constellation>> {
    if args.all_catalog {
        rec.input("catalog:*");
        return Ok(catalog::all().into_iter().map(|e| e.constellation).collect());
    }
    args.constellation
        .iter()
        .map(|p| {
            rec.input(p.display().to_string());
            load(p)
        })
        .collect()
}

fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

pub fn optimize(a: &OptimizeArgs, rec: &mut Recorder) -> Result<()> {
    let cfg = OptimizerConfig {
        restarts: a.restarts,
        max_iters: a.max_iters,
        seed: a.seed,
        penalty_growth: a.penalty_growth,
        init_box_height: a.init_box_height,
        ..OptimizerConfig::default()
    };
    rec.seed(a.seed);
    rec.config(&json!({ "m": a.m, "objective": Measure::from(a.objective), "optimizer": &cfg }));
    let result = optimizer::optimize(a.m, a.objective.into(), &cfg)?;
    eprintln!(
        "{} = {:.10} ({} of {} restarts at the best value)",
        Measure::from(a.objective),
        result.objective,
        result.diagnostics.hits,
        a.restarts
    );
    emit(&io::to_json_string(&result.constellation)?, a.out.as_deref(), rec)?;
    let diagnostics = a
        .diagnostics
        .clone()
        .or_else(|| a.out.as_deref().map(|p| crate::manifest::sidecar_path(p, ".diagnostics.json")));
    if let Some(path) = diagnostics {
        io::write_json(&result.diagnostics, &path).map_err(|e| match e {
            Error::Io(e) => with_path(e, &path),
            other => other,
        })?;
        rec.output(&path);
    }
    Ok(())
}

pub fn lattice(a: &LatticeArgs, rec: &mut Recorder) -> Result<()> {
    let cap = a.height_cap.unwrap_or_else(|| lattice::default_height_cap(a.m));
    rec.config(&json!({ "m": a.m, "objective": Measure::from(a.objective), "height_cap": cap }));
    let c = lattice::lattice_search(a.m, a.objective.into(), cap)?;
    emit(&io::to_json_string(&c)?, a.out.as_deref(), rec)
}

pub fn ser(a: &SerArgs, rec: &mut Recorder) -> Result<()> {
    let loaded = load_source(&a.source, rec)?;
    let c = &loaded.constellation;
    let pair_tol = a.pair_tol.unwrap_or(loaded.pair_tol);
    let grid = snr_grid(&a.grid)?;
    let measure = Measure::from(a.measure);
    rec.seed(a.seed);
    rec.config(&json!({
        "measure": measure,
        "snr_db": grid,
        "trials": a.trials,
        "pair_tol": pair_tol,
    }));

    // Every grid point reuses the same seed, so the Monte Carlo curve has
    // common random numbers across SNR and is smooth in the noise level.
    let cfg = ChannelConfig::new(a.trials, a.seed);
    let mut text = String::from("snr_db,measure,ser_mc,ci95,ser_union,ser_exact\n");
    for &snr in &grid {
        let g = ebn0_db_from_snr(c, measure, snr)?;
        let n0 = channel::n0_from_ebn0_db(c, g);
        let (mc, ci) = if a.trials > 0 {
            let est = channel::simulate_ser_n0(c, n0, &cfg)?;
            (sci(est.ser), sci(est.ci95_halfwidth))
        } else {
            (String::new(), String::new())
        };
        let union = sci(channel::union_bound_ser_n0(c, n0, pair_tol));
        let exact = channel::exact_ser_if_simplex(c, n0, pair_tol).map(sci).unwrap_or_default();
        writeln!(text, "{snr},{measure},{mc},{ci},{union},{exact}").expect("string write");
    }
    emit(&text, a.out.as_deref(), rec)
}

pub fn mi(a: &MiArgs, rec: &mut Recorder) -> Result<()> {
    let loaded = load_source(&a.source, rec)?;
    let grid = snr_grid(&a.grid)?;
    let measure = Measure::from(a.measure);
    let method = match a.gauss_hermite {
        Some(order) => MiMethod::GaussHermite { order },
        None => {
            rec.seed(a.seed);
            MiMethod::MonteCarlo {
                samples: usize::try_from(a.samples)
                    .map_err(|_| Error::InvalidArgument("--samples is too large".into()))?,
                seed: a.seed,
            }
        }
    };
    rec.config(&json!({ "measure": measure, "snr_db": grid, "method": method }));
    let curve = mutual_info::spectral_efficiency_curve(&loaded.constellation, measure, &grid, method)?;
    let mut text = String::from("snr_db,eta,mi_bits,std_error\n");
    for p in curve {
        writeln!(text, "{},{:.8},{:.8},{}", p.snr_db, p.eta, p.mi_bits, sci(p.std_error)).expect("string write");
    }
    emit(&text, a.out.as_deref(), rec)
}

pub fn gains(a: &TableArgs, rec: &mut Recorder) -> Result<()> {
    let inputs = table_inputs(a, rec)?;
    let mut text = format!("{}\n", GainRow::HEADER);
    for c in &inputs {
        // Gains compare at unit minimum distance. Catalog entries given to
        // four decimals sit a hair off it.
        let row = GainRow::new(&normalize_unit_dmin(c)?)?;
        writeln!(text, "{}", row.to_csv()).expect("string write");
    }
    emit(&text, a.out.as_deref(), rec)
}

pub fn zero_crossings(a: &TableArgs, rec: &mut Recorder) -> Result<()> {
    let inputs = table_inputs(a, rec)?;
    let mut text = String::from("name,M,nu_e_dB,nu_o_dB,nu_p_dB,bound_e_dB,bound_o_dB,bound_p_dB\n");
    for c in &inputs {
        let mut line = format!("{},{}", c.name, c.len());
        for measure in Measure::ALL {
            let z = mutual_info::zero_crossing(c, measure)?;
            write!(line, ",{:.4}", z.value_db).expect("string write");
        }
        for measure in Measure::ALL {
            let b = mutual_info::wideband_bound(c.len(), measure)?;
            write!(line, ",{:.4}", b.value_db).expect("string write");
        }
        writeln!(text, "{line}").expect("string write");
    }
    emit(&text, a.out.as_deref(), rec)
}

fn list_row(e: &CatalogEntry) -> String {
    let c = &e.constellation;
    let s = PowerSummary::of(c);
    let source = match e.source {
        EntrySource::Optimized => "optimized",
        EntrySource::Baseline => "baseline",
        EntrySource::Constructed => "constructed",
    };
    let precision = if e.precision.contains(&Precision::Decimal) { "decimal" } else { "exact" };
    let bw: u8 = c.bandwidth_factor.into();
    format!(
        "{},{},{bw},{source},{precision},{:.6},{:.6},{:.6}",
        e.name,
        c.len(),
        s.es,
        s.mean_dc,
        s.peak_moment
    )
}

pub fn catalog(cmd: &CatalogCommand, rec: &mut Recorder) -> Result<()> {
    match cmd {
        CatalogCommand::List { out } => {
            let mut text = String::from("name,M,bandwidth_factor,source,precision,es,mean_dc,peak_moment\n");
            for e in catalog::all() {
                writeln!(text, "{}", list_row(&e)).expect("string write");
            }
            emit(&text, out.as_deref(), rec)
        }
        CatalogCommand::Export { name, out } => {
            rec.input(format!("catalog:{name}"));
            let c = catalog::get(name)?;
            emit(&io::to_json_string(&c)?, out.as_deref(), rec)
        }
    }
}

pub fn wideband(a: &WidebandArgs, rec: &mut Recorder) -> Result<()> {
    rec.config(&json!({ "m": a.m, "variant": mutual_info::WidebandVariant::from(a.variant), "es": a.es }));
    let c = mutual_info::make_wideband_constellation(a.m, a.es, a.variant.into())?;
    emit(&io::to_json_string(&c)?, a.out.as_deref(), rec)
}

/// Primary output path of a command, used to place the manifest.
pub fn primary_output(cmd: &Command) -> Option<PathBuf> {
    match cmd {
        Command::Optimize(a) => a.out.clone(),
        Command::Lattice(a) => a.out.clone(),
        Command::Ser(a) => a.out.clone(),
        Command::Mi(a) => a.out.clone(),
        Command::Gains(a) | Command::ZeroCrossings(a) => a.out.clone(),
        Command::Catalog(CatalogCommand::List { out }) => out.clone(),
        Command::Catalog(CatalogCommand::Export { out, .. }) => out.clone(),
        Command::Wideband(a) => a.out.clone(),
    }
}

pub fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Optimize(_) => "optimize",
        Command::Lattice(_) => "lattice",
        Command::Ser(_) => "ser",
        Command::Mi(_) => "mi",
        Command::Gains(_) => "gains",
        Command::ZeroCrossings(_) => "zero-crossings",
        Command::Catalog(CatalogCommand::List { .. }) => "catalog list",
        Command::Catalog(CatalogCommand::Export { .. }) => "catalog export",
        Command::Wideband(_) => "wideband",
    }
}
