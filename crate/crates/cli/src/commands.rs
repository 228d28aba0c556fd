use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use eil_core::affine::write_invariants_csv;
use eil_core::envelope::{build_envelope, write_envelope_csv, write_envelope_svg, BuildOptions, Envelope, EnvelopeTag};
use eil_core::locus::pairing_residual;
use eil_core::report::{classify as classify_jets, to_json, EnvelopeSummary, SweepDocument};
use eil_core::singularities::{alpha_sweep, default_alpha_grid, MongeJetPair, SweepOptions};
use eil_core::{AlphaParam, ParamCurve};
use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

const DEFAULT_ENVELOPE_ALPHAS: [f64; 2] = [0.5, 0.6];
const SVG_CURVE_SAMPLES: usize = 512;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// `0.6` → `0.6`, `0.35` → `0.35`: α as it appears in file names.
fn alpha_label(a: f64) -> String {
    eil_core::report::fmt_num(a)
}

pub fn invariants(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let curve = cfg.curve.build()?;
    let path = cfg.out.join("invariants.csv");
    let mut w = create(&path)?;
    write_invariants_csv(&curve, cfg.samples, &mut w).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidInput => CliError::Config(e.to_string()),
        std::io::ErrorKind::InvalidData => CliError::Numerical(e.to_string()),
        _ => CliError::Io(e),
    })?;
    w.flush()?;
    Ok(vec![path])
}

/// Counts of points above the configured thresholds.
#[derive(Debug, Default, Serialize)]
struct ToleranceChecks {
    refine: usize,
    online: usize,
    #[serde(rename = "detM")]
    det_m: usize,
}

fn tolerance_checks(curve: &ParamCurve, env: &Envelope, cfg: &RunConfig) -> ToleranceChecks {
    let scale = curve.scale();
    let tol = &cfg.tolerances;
    let mut c = ToleranceChecks::default();
    let alpha = AlphaParam::new(env.alpha).expect("alpha validated");
    for b in &env.branches {
        if !matches!(b.tag, EnvelopeTag::Aeil | EnvelopeTag::Iptl) {
            continue;
        }
        for p in &b.points {
            if b.tag == EnvelopeTag::Aeil {
                let g = pairing_residual(curve, p.t, p.s, &alpha).unwrap_or(f64::INFINITY);
                c.refine += usize::from(!(g.abs() <= tol.refine * scale));
            }
            c.online += usize::from(p.online_residual > tol.online * scale);
            c.det_m += usize::from(p.det_residual > tol.det_m * scale);
        }
    }
    c
}

#[derive(Serialize)]
struct EnvelopeDocument {
    #[serde(flatten)]
    summary: EnvelopeSummary,
    tolerance_violations: ToleranceChecks,
}

pub fn envelope(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let curve = cfg.curve.build()?;
    if !curve.is_closed() {
        return Err(CliError::Config(format!("envelope needs a closed curve; `{}` is open", curve.label())));
    }
    let opts = BuildOptions {
        grid_n: cfg.grid_n,
        cusps: cfg.cusps,
        oracle: cfg.oracle,
        ..BuildOptions::default()
    };
    let alphas = cfg.alphas_or(&DEFAULT_ENVELOPE_ALPHAS);
    // Parallel over α; every file is then written by this thread alone.
    let envs: Vec<Envelope> = alphas
        .par_iter()
        .map(|&a| build_envelope(&curve, &AlphaParam::new(a)?, &opts))
        .collect::<eil_core::Result<_>>()?;
    let mut written = Vec::new();
    for env in &envs {
        let stem = format!("envelope_{}", alpha_label(env.alpha));
        let file = |ext: &str| cfg.out.join(format!("{stem}.{ext}"));
        if cfg.emit.csv {
            let p = file("csv");
            let mut w = create(&p)?;
            write_envelope_csv(env, &mut w)?;
            w.flush()?;
            written.push(p);
        }
        if cfg.emit.svg {
            let p = file("svg");
            let mut w = create(&p)?;
            write_envelope_svg(&curve, env, SVG_CURVE_SAMPLES, &mut w)?;
            w.flush()?;
            written.push(p);
        }
        let checks = tolerance_checks(&curve, env, cfg);
        if checks.refine + checks.online + checks.det_m > 0 {
            warn!("alpha {}: points above tolerance: {checks:?}", env.alpha);
        }
        if cfg.emit.json {
            let p = file("json");
            let doc = EnvelopeDocument {
                summary: EnvelopeSummary::new(curve.label(), env),
                tolerance_violations: checks,
            };
            write_text(&p, &to_json(&doc)?)?;
            written.push(p);
        }
    }
    Ok(written)
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let curve = cfg.curve.build()?;
    let alphas = cfg.alphas_or(&default_alpha_grid());
    let mut opts = SweepOptions {
        bisect_tol: cfg.bisect_tol,
        ..SweepOptions::default()
    };
    opts.build.grid_n = cfg.grid_n;
    let report = alpha_sweep(&curve, &alphas, &opts)?;
    let doc = SweepDocument {
        curve: curve.label(),
        grid_n: cfg.grid_n,
        alphas: &alphas,
        report: &report,
    };
    let path = cfg.out.join("sweep.json");
    write_text(&path, &to_json(&doc)?)?;
    Ok(vec![path])
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum JetInput {
    One(MongeJetPair),
    Many(Vec<MongeJetPair>),
}

#[derive(Serialize)]
struct Verdicts<T> {
    verdicts: Vec<T>,
}

pub fn classify(cfg: &RunConfig, input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let jets: JetInput =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let json = match jets {
        JetInput::One(m) => to_json(&classify_jets(&m)?)?,
        JetInput::Many(ms) => {
            let verdicts = ms.iter().map(classify_jets).collect::<eil_core::Result<Vec<_>>>()?;
            to_json(&Verdicts { verdicts })?
        }
    };
    let path = cfg.out.join("classify.json");
    write_text(&path, &json)?;
    Ok(vec![path])
}
