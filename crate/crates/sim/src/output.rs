//! Result tables, per-link diagnostics and binary frame dumps.

use std::io::{Read, Write};

use serde::Serialize;

use cellfree_core::airframe::ApFrame;
use cellfree_core::analytics::CrosscorrTable;
use cellfree_core::experiment::{ExperimentConfig, SweepAccumulator, SweepResult, SweepRow};
use cellfree_core::C64;

use crate::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(SimError::config("--format", format!("expected csv or jsonl, got `{s}`"))),
        }
    }
}

/// Column order of the results table.
pub const RESULT_COLUMNS: [&str; 12] = [
    "sweep_var",
    "sweep_value",
    "scheme",
    "regime",
    "tau_p",
    "tau_ex",
    "nmse_db_mean",
    "nmse_db_p10",
    "nmse_db_p90",
    "rate_mean_bps_hz",
    "trials",
    "seed",
];

#[derive(Serialize)]
struct ResultRecord<'a> {
    sweep_var: &'a str,
    sweep_value: f64,
    scheme: &'a str,
    regime: &'a str,
    tau_p: usize,
    tau_ex: f64,
    nmse_db_mean: f64,
    nmse_db_p10: f64,
    nmse_db_p90: f64,
    rate_mean_bps_hz: Option<f64>,
    trials: usize,
    seed: u64,
}

impl<'a> From<&'a SweepRow> for ResultRecord<'a> {
    fn from(r: &'a SweepRow) -> Self {
        ResultRecord {
            sweep_var: r.sweep_var.name(),
            sweep_value: r.sweep_value,
            scheme: r.variant.scheme_label(),
            regime: r.variant.regime_label(),
            tau_p: r.tau_p,
            tau_ex: r.tau_ex,
            nmse_db_mean: r.nmse.mean_db,
            nmse_db_p10: r.nmse.p10_db,
            nmse_db_p90: r.nmse.p90_db,
            rate_mean_bps_hz: r.rate_mean,
            trials: r.trials,
            seed: r.seed,
        }
    }
}

pub fn write_results<W: Write>(result: &SweepResult, format: Format, out: W) -> Result<(), SimError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in &result.rows {
                w.serialize(ResultRecord::from(row))?;
            }
            w.flush()?;
        }
        Format::Jsonl => write_jsonl(result.rows.iter().map(ResultRecord::from), out)?,
    }
    Ok(())
}

fn write_jsonl<T: Serialize, W: Write>(rows: impl Iterator<Item = T>, mut out: W) -> Result<(), SimError> {
    for row in rows {
        serde_json::to_writer(&mut out, &row).map_err(|e| SimError::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LinkRecord<'a> {
    trial: u64,
    sweep_value: f64,
    r: usize,
    u: usize,
    scheme: &'a str,
    regime: &'a str,
    nmse: f64,
    desired_power: f64,
    interference_power: f64,
    noise_power: f64,
}

/// Per-link diagnostics of every trial, in trial order.
pub fn write_links<W: Write>(acc: &SweepAccumulator, cfg: &ExperimentConfig, format: Format, out: W) -> Result<(), SimError> {
    let rows = acc.records().flat_map(|rec| {
        rec.cells.iter().flat_map(move |cell| {
            cell.links.iter().map(move |l| LinkRecord {
                trial: rec.trial,
                sweep_value: cfg.sweep.values[cell.point],
                r: l.r,
                u: l.u,
                scheme: cell.variant.scheme_label(),
                regime: cell.variant.regime_label(),
                nmse: l.nmse,
                desired_power: l.desired_power,
                interference_power: l.interference_power,
                noise_power: l.noise_power,
            })
        })
    });
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Jsonl => write_jsonl(rows, out)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct CrosscorrRecord<'a> {
    tau_p: usize,
    delay: usize,
    overlap: usize,
    pairs: &'a str,
    random: f64,
    dft: f64,
    crossover: Option<usize>,
}

pub fn write_crosscorr<W: Write>(table: &CrosscorrTable, format: Format, out: W) -> Result<(), SimError> {
    let rows = table.rows.iter().map(|r| CrosscorrRecord {
        tau_p: r.tau_p,
        delay: table.delay,
        overlap: r.overlap,
        pairs: table.convention.name(),
        random: r.random,
        dft: r.dft,
        crossover: table.crossover,
    });
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Jsonl => write_jsonl(rows, out)?,
    }
    Ok(())
}

pub const FRAME_MAGIC: &[u8; 4] = b"ACFE";

/// 16-byte header (magic, antennas, columns, reserved; little-endian u32)
/// followed by `antennas x columns` complex64 samples (two f32), row-major.
pub fn write_frame_dump<W: Write>(frame: &ApFrame, mut out: W) -> Result<(), SimError> {
    let dim = |n: usize, what: &str| {
        u32::try_from(n).map_err(|_| SimError::Io(format!("{what} {n} does not fit the dump header")))
    };
    let mut buf = Vec::with_capacity(16 + 8 * frame.samples.len());
    buf.extend_from_slice(FRAME_MAGIC);
    buf.extend_from_slice(&dim(frame.antennas, "antenna count")?.to_le_bytes());
    buf.extend_from_slice(&dim(frame.columns, "column count")?.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    for z in &frame.samples {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_frame_dump<R: Read>(mut input: R) -> Result<ApFrame, SimError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..4] != FRAME_MAGIC {
        return Err(SimError::Io("not a frame dump".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (antennas, columns) = (word(4), word(8));
    let body = &bytes[16..];
    if body.len() != antennas * columns * 8 {
        return Err(SimError::Io(format!(
            "frame dump body has {} bytes, header promises {antennas}x{columns}",
            body.len()
        )));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            C64::new(re.into(), im.into())
        })
        .collect();
    Ok(ApFrame {
        antennas,
        columns,
        samples,
    })
}
