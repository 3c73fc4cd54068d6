//! Subcommand implementations. Primary output goes through [`emit`] so
//! `--out` works uniformly; progress and summaries go to stdout directly.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::process::ExitCode;

use freshmem_core::stream_io::{create_stream, open_stream, StreamFormat};
use freshmem_core::{Engine, EngineConfig, IngestEvent};
use freshmem_harness::latency::{latency_profile, median_nanos};
use freshmem_harness::metrics::rows_to_csv;
use freshmem_harness::sweep::sweep_param;
use freshmem_harness::synth::{generate, SyntheticSpec};
use freshmem_harness::verify::run_suite;
use freshmem_harness::fmt_sig;
use serde_json::json;

use crate::CliError;

/// Writes primary output to `--out` if given, else stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Streams every frame of `input` through a fresh engine, returning the
/// engine and its boundary log.
fn run_stream(
    config: &EngineConfig,
    input: &Path,
    format: Option<StreamFormat>,
) -> Result<(Engine, Vec<u64>, u64), CliError> {
    let mut reader = open_stream(input, format)?;
    let header = reader.header();
    let mut engine = Engine::new(config.clone(), header.s, header.d)?;
    let mut boundaries = Vec::new();
    let mut merges = 0u64;
    while let Some(frame) = reader.read_frame()? {
        let report = engine.step(frame)?;
        if report.stm_event == Some(IngestEvent::ClosedAndOpened) {
            boundaries.push(report.evicted.expect("episodic events follow evictions"));
        }
        merges += report.merges as u64;
    }
    Ok((engine, boundaries, merges))
}

pub fn ingest(
    config: &EngineConfig,
    input: &Path,
    format: Option<StreamFormat>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let out = out.ok_or_else(|| {
        CliError::Usage("ingest needs --out PATH for the state file".into())
    })?;
    let (engine, boundaries, merges) = run_stream(config, input, format)?;
    let mut writer = BufWriter::new(File::create(out)?);
    engine.export_state(&mut writer)?;
    let summary = json!({
        "steps": engine.steps(),
        "assimilated": engine.stm().total_ingested(),
        "boundaries": boundaries.len(),
        "episodes": engine.stm().episodes().len(),
        "merges": merges,
        "zero_score_events": engine.stm().zero_score_events(),
        "fingerprint": engine.fingerprint(),
        "state": out.display().to_string(),
    });
    println!("{summary}");
    Ok(())
}

pub fn snapshot(state: &Path, tokens: bool, out: Option<&Path>) -> Result<(), CliError> {
    let engine = Engine::import_state(BufReader::new(File::open(state)?))?;
    let mut text = engine.snapshot().to_json(tokens);
    text.push('\n');
    emit(out, &text)
}

pub fn reconstruct(state: &Path, tau: u64, out: Option<&Path>) -> Result<(), CliError> {
    let engine = Engine::import_state(BufReader::new(File::open(state)?))?;
    let rec = engine.reconstruct_at(tau)?;
    let (s, _) = rec.frame.shape();
    let rows: Vec<String> = (0..s)
        .map(|i| {
            let row: Vec<String> = rec.frame.token(i).iter().map(|v| fmt_sig(*v)).collect();
            format!("[{}]", row.join(","))
        })
        .collect();
    let text = format!(
        "{{\"t\":{},\"residual_applied\":{},\"tokens\":[{}]}}\n",
        rec.tau(),
        rec.residual_applied,
        rows.join(",")
    );
    emit(out, &text)
}

pub fn segment(
    config: &EngineConfig,
    input: &Path,
    format: Option<StreamFormat>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (engine, boundaries, _) = run_stream(config, input, format)?;
    let episodes: Vec<serde_json::Value> = engine
        .stm()
        .episodes()
        .iter()
        .map(|e| {
            json!({
                "start_t": e.start_t,
                "end_t": e.end_t,
                "frame_count": e.frame_count,
                "merged_from": e.merged_from,
                "thumbnails": e.thumbnails.len(),
            })
        })
        .collect();
    let active = engine.stm().active();
    let active_json = if active.is_empty() {
        serde_json::Value::Null
    } else {
        json!({ "start_t": active[0].t(), "frame_count": active.len() })
    };
    let report = json!({
        "steps": engine.steps(),
        "boundaries": boundaries,
        "episodes": episodes,
        "active": active_json,
        "zero_score_events": engine.stm().zero_score_events(),
    });
    emit(out, &format!("{report}\n"))
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    episodes: usize,
    frames_min: usize,
    frames_max: usize,
    tokens: usize,
    dim: usize,
    sigma: f64,
    seed: u64,
    format: StreamFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let out = out.ok_or_else(|| {
        CliError::Usage("simulate needs --out PATH for the stream file".into())
    })?;
    let spec = SyntheticSpec {
        episodes,
        frames_min,
        frames_max,
        s: tokens,
        d: dim,
        sigma,
        ..SyntheticSpec::default()
    };
    let planted = generate(&spec, seed);
    let mut writer = create_stream(out, format, tokens, dim)?;
    for frame in &planted.frames {
        writer.write_frame(frame)?;
    }
    writer.finish()?;
    let truth = json!({
        "frames": planted.frames.len(),
        "episodes": episodes,
        "boundaries": planted.boundaries,
        "seed": seed,
        "stream": out.display().to_string(),
    });
    println!("{truth}");
    Ok(())
}

pub fn verify(seed: u64, out: Option<&Path>) -> Result<ExitCode, CliError> {
    let results = run_suite(seed);
    let failures = results.iter().filter(|r| !r.pass).count();
    let mut report = String::new();
    for r in &results {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        report.push_str(&format!("{tag} {}: {}\n", r.name, r.detail));
    }
    report.push_str(&format!(
        "verify: {} checks, {} failures, seed {}\n",
        results.len(),
        failures,
        seed
    ));
    emit(out, &report)?;
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn bench(
    config: &EngineConfig,
    steps: u64,
    tokens: usize,
    dim: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let profiles = latency_profile(config, tokens, dim, steps, seed)?;
    let warmup = config.window_len as u64;
    let post: Vec<&_> = profiles.iter().filter(|p| p.step >= warmup).collect();
    let ops = post.first().map_or(0, |p| p.mfm_ops);
    let ops_constant = post.iter().all(|p| p.mfm_ops == ops);
    let max_cos = profiles.iter().map(|p| p.cos_evals).max().unwrap_or(0);
    let early = median_nanos(&profiles, steps / 10, steps / 5);
    let late = median_nanos(&profiles, steps * 9 / 10, steps);
    let text = format!(
        "{{\"steps\":{steps},\"tokens\":{tokens},\"dim\":{dim},\
         \"ops_per_step\":{ops},\"ops_constant\":{ops_constant},\
         \"max_cos_evals\":{max_cos},\"early_median_nanos\":{},\
         \"late_median_nanos\":{},\"late_early_ratio\":{}}}\n",
        fmt_sig(early),
        fmt_sig(late),
        fmt_sig(late / early),
    );
    emit(out, &text)
}

pub fn sweep(
    config: &EngineConfig,
    param: &str,
    values: &str,
    runs: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let values = parse_values(values)?;
    let seeds: Vec<u64> = (0..runs).map(|i| seed.wrapping_add(i)).collect();
    let rows = sweep_param(config, param, &values, &seeds, &SyntheticSpec::default())?;
    emit(out, &rows_to_csv(&rows))
}

/// Accepts `a,b,c` or an inclusive `start:end:step` range.
fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let parse_one = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("`{s}` is not a number")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "range must be start:end:step, got `{text}`"
            )));
        }
        let (start, end, step) = (parse_one(parts[0])?, parse_one(parts[1])?, parse_one(parts[2])?);
        if !step.is_finite() || step <= 0.0 || end < start {
            return Err(CliError::Usage(
                "range needs end >= start and step > 0".into(),
            ));
        }
        let raw = (end - start) / step;
        if raw > 10_000.0 {
            return Err(CliError::Usage("range produces too many values".into()));
        }
        let count = if (raw - raw.round()).abs() < 1e-6 {
            raw.round()
        } else {
            raw.floor()
        } as i64;
        Ok((0..=count)
            .map(|i| snap(start + i as f64 * step))
            .collect())
    } else {
        text.split(',').map(parse_one).collect()
    }
}

/// Rounds away float-accumulation dust so swept values print cleanly.
fn snap(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}
