//! Monte Carlo harness, JSON configuration, CSV reporting, and the CLI.
//!
//! A simulation is a pure function of the configuration and the base seed:
//! every block's payload and noise come from counter-derived sub-seeds, so
//! the worker count and task decomposition never change the numbers. Blocks
//! are simulated in fixed-size chunks that fold in block order with an
//! exact stop rule, which makes one worker and many workers byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::channel::{apply_channel, calibrate_noise, ChannelModel};
use crate::code::{encode_block, rate_plan, ConvCode, PuncturingPattern, RatePlan};
use crate::constellation::{build_partition_tree, Constellation, PartitionTree};
use crate::decode::{schedule_for, Decoder, DecoderConfig, DecoderMode};
use crate::trellis::{
    build_joint_trellis, build_symbol_trellis, free_distance_search, render_joint_trellis,
    render_symbol_trellis, DepthSchedule, TimeVariantTrellis, DEFAULT_STATE_CAP,
};
use crate::{Error, Result};

/// Blocks simulated per parallel batch; the fold over batches is ordered,
/// so this is a throughput knob with no effect on results.
const CHUNK: usize = 64;

/// Dequeue budget for the free-distance search started by the CLI.
pub const DEFAULT_DISTANCE_EXPANSIONS: usize = 20_000_000;

pub const CSV_HEADER: &str =
    "decoder,ebn0_db,info_bits,bit_errors,ber,symbol_errors,ser,blocks,metrics_evaluated,wall_seconds";

// ---------------------------------------------------------------------------
// Seed derivation
// ---------------------------------------------------------------------------

/// The fixed 64-bit mixing permutation behind all seed derivation
/// (splitmix64). Every per-block seed is `splitmix64` applied to xor
/// combinations of the base seed and task indices, so the mapping from
/// (base_seed, sweep point, block) to random streams is a documented pure
/// function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn point_seed(base_seed: u64, point_index: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64(1 + point_index as u64))
}

/// Seeds for one block: payload stream and noise stream. Deliberately
/// independent of the decoder index, so every decoder sees the same frames
/// and BER comparisons are paired.
fn block_seeds(point_seed: u64, block_index: u64) -> (u64, u64) {
    let b = splitmix64(point_seed ^ block_index);
    (splitmix64(b ^ 1), splitmix64(b ^ 2))
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(untagged)]
enum RawOctalRow {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCode {
    k0: usize,
    n0: usize,
    #[serde(default)]
    nu: Option<u32>,
    generators_octal: Vec<RawOctalRow>,
    #[serde(default)]
    feedback_octal: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPuncture {
    period: usize,
    mask: Vec<Vec<u8>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTap {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    taps: Vec<RawTap>,
    #[serde(default)]
    auto_normalize: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDepths {
    Uniform(Vec<u32>),
    PerPhase(Vec<Vec<u32>>),
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawDecoder {
    Mlse {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        renorm_interval: Option<usize>,
    },
    Ddfse {
        delays: usize,
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        renorm_interval: Option<usize>,
    },
    Rsse {
        depths: RawDepths,
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        renorm_interval: Option<usize>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    ebn0_db: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStop {
    #[serde(default = "default_min_bit_errors")]
    min_bit_errors: u64,
    #[serde(default = "default_max_info_bits")]
    max_info_bits: u64,
}

fn default_min_bit_errors() -> u64 {
    200
}

fn default_max_info_bits() -> u64 {
    2_000_000
}

fn default_block_info_bits() -> usize {
    1000
}

impl Default for RawStop {
    fn default() -> Self {
        RawStop {
            min_bit_errors: default_min_bit_errors(),
            max_info_bits: default_max_info_bits(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    code: RawCode,
    #[serde(default)]
    puncture: Option<RawPuncture>,
    constellation: String,
    channel: RawChannel,
    decoders: Vec<RawDecoder>,
    sweep: RawSweep,
    #[serde(default)]
    stop: RawStop,
    #[serde(default)]
    base_seed: u64,
    #[serde(default = "default_block_info_bits")]
    block_info_bits: usize,
    #[serde(default)]
    max_joint_states: Option<u64>,
}

/// Stop rule for one sweep point: stop at the first block after which
/// either bound is met.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub min_bit_errors: u64,
    pub max_info_bits: u64,
}

#[derive(Debug, Clone)]
pub struct NamedDecoder {
    pub id: String,
    pub config: DecoderConfig,
}

/// A validated simulation configuration.
#[derive(Debug)]
pub struct SimConfig {
    pub code: ConvCode,
    pub pattern: PuncturingPattern,
    pub constellation: Constellation,
    pub taps: Vec<Complex64>,
    pub auto_normalize: bool,
    pub decoders: Vec<NamedDecoder>,
    pub ebn0_db: Vec<f64>,
    pub stop: StopRule,
    pub base_seed: u64,
    pub block_info_bits: usize,
    pub state_cap: u64,
}

impl SimConfig {
    /// A channel instance at one noise level (taps validated/normalized
    /// according to the config).
    pub fn channel(&self, sigma2: f64) -> Result<ChannelModel> {
        if self.auto_normalize {
            ChannelModel::normalized(self.taps.clone(), sigma2)
        } else {
            ChannelModel::new(self.taps.clone(), sigma2)
        }
    }

    /// Payload bits per block, rounded up to a whole number of encoder
    /// steps.
    pub fn block_bits(&self) -> usize {
        self.block_info_bits.div_ceil(self.code.k0()) * self.code.k0()
    }
}

fn octal_rows(raw: &[RawOctalRow], k0: usize) -> Result<Vec<Vec<u32>>> {
    raw.iter()
        .enumerate()
        .map(|(i, row)| match row {
            RawOctalRow::One(s) => {
                if k0 != 1 {
                    return Err(Error::Config(format!(
                        "code.generators_octal[{i}]: k0={k0} needs {k0} entries per output row"
                    )));
                }
                Ok(vec![crate::code::parse_octal(s)?])
            }
            RawOctalRow::Many(v) => {
                if v.len() != k0 {
                    return Err(Error::Config(format!(
                        "code.generators_octal[{i}]: row has {} entries, k0 is {k0}",
                        v.len()
                    )));
                }
                v.iter().map(|s| crate::code::parse_octal(s)).collect()
            }
        })
        .collect()
}

fn depth_row_id(row: &[u32]) -> String {
    row.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// Expands one decoder entry. A uniform `rsse` depth row is replicated
/// across all `num_phases` trellis phases here, which is why decoder
/// resolution happens after the rate plan is known.
fn decoder_from_raw(raw: &RawDecoder, num_phases: usize) -> NamedDecoder {
    let (id, renorm, default_id, mode) = match raw {
        RawDecoder::Mlse { id, renorm_interval } => {
            (id, renorm_interval, "mlse".to_string(), DecoderMode::Mlse)
        }
        RawDecoder::Ddfse {
            delays,
            id,
            renorm_interval,
        } => (
            id,
            renorm_interval,
            format!("ddfse{delays}"),
            DecoderMode::Ddfse {
                full_delays: *delays,
            },
        ),
        RawDecoder::Rsse {
            depths,
            id,
            renorm_interval,
        } => {
            let (schedule, default_id) = match depths {
                RawDepths::Uniform(row) => (
                    DepthSchedule::uniform(num_phases, row.clone()),
                    format!("rsse{}", depth_row_id(row)),
                ),
                RawDepths::PerPhase(rows) => (
                    DepthSchedule::from_rows(rows.clone()),
                    format!(
                        "rsse{}",
                        rows.iter()
                            .map(|r| depth_row_id(r))
                            .collect::<Vec<_>>()
                            .join("_")
                    ),
                ),
            };
            (id, renorm_interval, default_id, DecoderMode::Rsse { schedule })
        }
    };
    let mut config = DecoderConfig::new(mode);
    if let Some(r) = renorm {
        config.renorm_interval = *r;
    }
    NamedDecoder {
        id: id.clone().unwrap_or(default_id),
        config,
    }
}

/// Parses and validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| json_config_error(text, &e))?;

    let gens = octal_rows(&raw.code.generators_octal, raw.code.k0)?;
    let feedback = raw
        .code
        .feedback_octal
        .as_deref()
        .map(crate::code::parse_octal)
        .transpose()?;
    let code = ConvCode::new(raw.code.k0, raw.code.n0, gens, feedback)?;
    if let Some(nu) = raw.code.nu {
        if nu != code.nu() {
            return Err(Error::Config(format!(
                "code.nu: declared {nu}, but the generators imply {}",
                code.nu()
            )));
        }
    }

    let pattern = match &raw.puncture {
        Some(p) => PuncturingPattern::new(raw.code.n0, p.period, p.mask.clone())?,
        None => PuncturingPattern::all_ones(raw.code.n0),
    };

    let constellation = Constellation::from_name(&raw.constellation)?;

    if raw.channel.taps.is_empty() {
        return Err(Error::Config("channel.taps: must not be empty".into()));
    }
    let taps: Vec<Complex64> = raw
        .channel
        .taps
        .iter()
        .map(|t| match t {
            RawTap::Real(re) => Complex64::new(*re, 0.0),
            RawTap::Complex([re, im]) => Complex64::new(*re, *im),
        })
        .collect();

    if raw.decoders.is_empty() {
        return Err(Error::Config("decoders: must not be empty".into()));
    }
    // The rate plan fixes the trellis phase count, which uniform rsse
    // depth rows need for expansion.
    let plan = rate_plan(&code, &pattern, constellation.bits())?;
    let decoders: Vec<NamedDecoder> = raw
        .decoders
        .iter()
        .map(|d| decoder_from_raw(d, plan.s))
        .collect();
    for i in 0..decoders.len() {
        for j in i + 1..decoders.len() {
            if decoders[i].id == decoders[j].id {
                return Err(Error::Config(format!(
                    "decoders: duplicate id \"{}\" (give explicit \"id\" fields)",
                    decoders[i].id
                )));
            }
        }
    }

    if raw.sweep.ebn0_db.is_empty() {
        return Err(Error::Config("sweep.ebn0_db: must not be empty".into()));
    }
    for (i, v) in raw.sweep.ebn0_db.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Config(format!("sweep.ebn0_db[{i}]: must be finite")));
        }
    }
    if raw.stop.min_bit_errors == 0 || raw.stop.max_info_bits == 0 {
        return Err(Error::Config(
            "stop: min_bit_errors and max_info_bits must be positive".into(),
        ));
    }
    if raw.block_info_bits == 0 {
        return Err(Error::Config("block_info_bits: must be positive".into()));
    }

    Ok(SimConfig {
        code,
        pattern,
        constellation,
        taps,
        auto_normalize: raw.channel.auto_normalize,
        decoders,
        ebn0_db: raw.sweep.ebn0_db,
        stop: StopRule {
            min_bit_errors: raw.stop.min_bit_errors,
            max_info_bits: raw.stop.max_info_bits,
        },
        base_seed: raw.base_seed,
        block_info_bits: raw.block_info_bits,
        state_cap: raw.max_joint_states.unwrap_or(DEFAULT_STATE_CAP),
    })
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn json_config_error(text: &str, err: &serde_json::Error) -> Error {
    let (line, column) = (err.line(), err.column());
    let offset: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum::<usize>()
        + column.saturating_sub(1);
    Error::Config(format!(
        "invalid config JSON at byte offset {offset} (line {line}, column {column}): {err}"
    ))
}

/// The derived static structure shared by every decoder and sweep point.
pub struct System {
    pub plan: RatePlan,
    pub trellis: TimeVariantTrellis,
    pub tree: PartitionTree,
}

pub fn build_system(cfg: &SimConfig) -> Result<System> {
    let plan = rate_plan(&cfg.code, &cfg.pattern, cfg.constellation.bits())?;
    let trellis = build_symbol_trellis(&cfg.code, &cfg.pattern, &cfg.constellation)?;
    let tree = build_partition_tree(&cfg.constellation);
    // Validate every decoder's schedule and state budget up front so
    // failures happen before any simulation work.
    let probe_channel = cfg.channel(0.0)?;
    for named in &cfg.decoders {
        Decoder::new(
            &trellis,
            &cfg.code,
            &cfg.constellation,
            &probe_channel,
            &named.config,
            cfg.state_cap,
        )?;
    }
    Ok(System {
        plan,
        trellis,
        tree,
    })
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

/// One (decoder, Eb/N0) row of the sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub decoder: String,
    pub ebn0_db: f64,
    pub info_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub symbol_errors: u64,
    pub ser: f64,
    pub blocks: u64,
    pub metrics_evaluated: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// Record decoder wall time. Timing is the only nondeterministic
    /// column, so turn this off when byte-identical CSV matters.
    pub measure_time: bool,
    /// Worker threads; `None` falls back to `PTCM_THREADS` or all cores.
    pub workers: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            measure_time: true,
            workers: None,
        }
    }
}

struct BlockOutcome {
    bit_errors: u64,
    symbol_errors: u64,
    metrics_evaluated: u64,
    decode_seconds: f64,
}

fn simulate_block(
    cfg: &SimConfig,
    decoder: &Decoder,
    channel: &ChannelModel,
    block_bits: usize,
    point_seed: u64,
    block_index: u64,
    measure_time: bool,
) -> Result<BlockOutcome> {
    let (bits_seed, noise_seed) = block_seeds(point_seed, block_index);
    let mut rng = ChaCha8Rng::seed_from_u64(bits_seed);
    let bits: Vec<u8> = (0..block_bits).map(|_| rng.gen::<u8>() & 1).collect();
    let plan = &decoder.joint().trellis().plan;
    let labels = encode_block(&cfg.code, &cfg.pattern, plan, &bits, channel.memory())?;
    let symbols: Vec<Complex64> = labels
        .iter()
        .map(|&l| cfg.constellation.point(l))
        .collect();
    let rx = apply_channel(&symbols, channel, &cfg.constellation, noise_seed);

    let started = if measure_time {
        Some(Instant::now())
    } else {
        None
    };
    let decision = decoder.decode(&rx, block_bits)?;
    let decode_seconds = started.map_or(0.0, |t| t.elapsed().as_secs_f64());

    let bit_errors = bits
        .iter()
        .zip(&decision.info_bits)
        .filter(|(a, b)| a != b)
        .count() as u64;
    let n_data = labels.len() - channel.memory();
    let symbol_errors = labels[..n_data]
        .iter()
        .zip(&decision.symbol_labels)
        .filter(|(a, b)| a != b)
        .count() as u64;
    Ok(BlockOutcome {
        bit_errors,
        symbol_errors,
        metrics_evaluated: decision.metrics_evaluated,
        decode_seconds,
    })
}

fn run_point(
    cfg: &SimConfig,
    system: &System,
    named: &NamedDecoder,
    ebn0_db: f64,
    p_idx: usize,
    opts: &SweepOptions,
) -> Result<BerPoint> {
    use rayon::prelude::*;

    let sigma2 = calibrate_noise(ebn0_db, system.plan.rate())?;
    let channel = cfg.channel(sigma2)?;
    let decoder = Decoder::new(
        &system.trellis,
        &cfg.code,
        &cfg.constellation,
        &channel,
        &named.config,
        cfg.state_cap,
    )?;
    let block_bits = cfg.block_bits();
    let pseed = point_seed(cfg.base_seed, p_idx);

    let mut point = BerPoint {
        decoder: named.id.clone(),
        ebn0_db,
        info_bits: 0,
        bit_errors: 0,
        ber: 0.0,
        symbol_errors: 0,
        ser: 0.0,
        blocks: 0,
        metrics_evaluated: 0,
        wall_seconds: 0.0,
    };
    let mut next_block = 0u64;
    'outer: loop {
        let chunk: Vec<Result<BlockOutcome>> = (next_block..next_block + CHUNK as u64)
            .into_par_iter()
            .map(|b| {
                simulate_block(
                    cfg,
                    &decoder,
                    &channel,
                    block_bits,
                    pseed,
                    b,
                    opts.measure_time,
                )
            })
            .collect();
        next_block += CHUNK as u64;
        // Ordered fold with an exact stop: blocks past the stopping block
        // were computed speculatively and are discarded, so the tallies
        // never depend on chunking or worker count.
        for outcome in chunk {
            let outcome = outcome?;
            point.blocks += 1;
            point.info_bits += block_bits as u64;
            point.bit_errors += outcome.bit_errors;
            point.symbol_errors += outcome.symbol_errors;
            point.metrics_evaluated += outcome.metrics_evaluated;
            point.wall_seconds += outcome.decode_seconds;
            if point.bit_errors >= cfg.stop.min_bit_errors
                || point.info_bits >= cfg.stop.max_info_bits
            {
                break 'outer;
            }
        }
    }
    // Data symbols per block, from the same framing the decoder enforces.
    let steps =
        (block_bits / cfg.code.k0() + cfg.code.nu() as usize).div_ceil(cfg.pattern.period())
            * cfg.pattern.period();
    let n_data = (steps / cfg.pattern.period() * system.plan.s) as u64;
    point.ber = point.bit_errors as f64 / point.info_bits as f64;
    point.ser = point.symbol_errors as f64 / (n_data * point.blocks) as f64;
    Ok(point)
}

/// Runs the whole sweep: every decoder at every Eb/N0 grid point, blocks
/// until the stop rule fires. Rows come back decoder-major in config
/// order.
pub fn run_sweep(cfg: &SimConfig, opts: &SweepOptions) -> Result<Vec<BerPoint>> {
    let system = build_system(cfg)?;
    let workers = match opts.workers {
        Some(w) => w,
        None => match std::env::var("PTCM_THREADS") {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&w| w >= 1)
                .ok_or_else(|| {
                    Error::Config(format!("PTCM_THREADS must be a positive integer, got {s:?}"))
                })?,
            Err(_) => 0,
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("failed to build worker pool: {e}")))?;

    pool.install(|| {
        let mut points = Vec::with_capacity(cfg.decoders.len() * cfg.ebn0_db.len());
        for named in &cfg.decoders {
            for (p_idx, &ebn0) in cfg.ebn0_db.iter().enumerate() {
                points.push(run_point(cfg, &system, named, ebn0, p_idx, opts)?);
            }
        }
        Ok(points)
    })
}

pub fn render_csv(points: &[BerPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.6}",
            p.decoder,
            p.ebn0_db,
            p.info_bits,
            p.bit_errors,
            p.ber,
            p.symbol_errors,
            p.ser,
            p.blocks,
            p.metrics_evaluated,
            p.wall_seconds
        );
    }
    out
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ptcm",
    version,
    about = "Punctured TCM over ISI channels: trellis construction, MLSE/DDFSE/RSSE decoding, BER sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the BER sweep from a config file and write a CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's base_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report wall_seconds as 0 so the CSV is byte-reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Print the free squared Euclidean distance of the configured system.
    Distance {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the trellis as text, one line per branch.
    TrellisDump {
        #[arg(long)]
        config: PathBuf,
        /// Dump the joint (code x channel) trellis of one decoder.
        #[arg(long)]
        joint: bool,
        /// Print the constellation partition tree instead.
        #[arg(long)]
        partition: bool,
        /// Decoder id for --joint (default: first in config).
        #[arg(long)]
        decoder: Option<String>,
    },
    /// Encode hex payload bits and print the symbol stream.
    Encode {
        #[arg(long)]
        config: PathBuf,
        /// Payload as hex digits, four bits per digit, most significant
        /// bit of each digit first.
        #[arg(long)]
        bits: String,
    },
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Capacity { .. } | Error::DistanceSearch(_) => 3,
        _ => 2,
    }
}

/// `d2` values are displayed rounded to 9 decimals with trailing zeros
/// trimmed (at least one decimal kept), so exact benchmark values print as
/// `4.0`, not `3.999999999...`.
fn format_d2(v: f64) -> String {
    let mut s = format!("{v:.9}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.push('0');
    }
    s
}

fn parse_hex_bits(hex: &str, k0: usize) -> Result<Vec<u8>> {
    let digits = hex.trim().trim_start_matches("0x");
    let mut bits = Vec::with_capacity(digits.len() * 4);
    for c in digits.chars() {
        let v = c
            .to_digit(16)
            .ok_or_else(|| Error::Config(format!("--bits: {c:?} is not a hex digit")))?;
        for b in (0..4).rev() {
            bits.push((v >> b & 1) as u8);
        }
    }
    if bits.is_empty() || bits.len() % k0 != 0 {
        return Err(Error::Config(format!(
            "--bits: {} bits is not a positive multiple of k0={k0}",
            bits.len()
        )));
    }
    Ok(bits)
}

fn cmd_simulate(config: &Path, out: &Path, seed: Option<u64>, no_timing: bool) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    let opts = SweepOptions {
        measure_time: !no_timing,
        workers: None,
    };
    let points = run_sweep(&cfg, &opts)?;
    std::fs::write(out, render_csv(&points))?;
    Ok(())
}

fn cmd_distance(config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let system = build_system(&cfg)?;
    let channel = cfg.channel(0.0)?;
    let taps = if channel.memory() > 0 {
        Some(channel.taps())
    } else {
        None
    };
    let d2 = free_distance_search(
        &system.trellis,
        &cfg.constellation,
        taps,
        DEFAULT_DISTANCE_EXPANSIONS,
    )?;
    println!("d2_free={}", format_d2(d2));

    if channel.memory() > 0 {
        println!("gain_vs_uncoded=n/a (ISI channel; no flat uncoded reference)");
        return Ok(());
    }
    let (num, den) = system.plan.r;
    if den == 1 && (1..=6).contains(&num) {
        if let Ok(reference) =
            crate::constellation::build_constellation(cfg.constellation.kind(), 1usize << num)
        {
            let pts = reference.points_canonical();
            let mut ref_d2 = f64::INFINITY;
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    ref_d2 = ref_d2.min((a - b).norm_sqr());
                }
            }
            let gain_db = 10.0 * (d2 / ref_d2).log10();
            println!(
                "gain_vs_uncoded={gain_db:.2} dB (reference {}, d2={})",
                reference.name(),
                format_d2(ref_d2)
            );
            return Ok(());
        }
    }
    println!(
        "gain_vs_uncoded=n/a (rate {}/{} has no same-family uncoded reference)",
        num, den
    );
    Ok(())
}

fn cmd_trellis_dump(
    config: &Path,
    joint: bool,
    partition: bool,
    decoder: Option<&str>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let system = build_system(&cfg)?;
    if partition {
        print!("{}", system.tree.render_text(&cfg.constellation));
    }
    if joint {
        let named = match decoder {
            Some(id) => cfg
                .decoders
                .iter()
                .find(|d| d.id == id)
                .ok_or_else(|| Error::Config(format!("--decoder: no decoder with id \"{id}\"")))?,
            None => &cfg.decoders[0],
        };
        let channel = cfg.channel(0.0)?;
        let schedule = schedule_for(
            &named.config.mode,
            system.trellis.num_phases(),
            channel.memory(),
            system.trellis.m,
        )?;
        let joint_trellis =
            build_joint_trellis(&system.trellis, channel.memory(), schedule, cfg.state_cap)?;
        print!("{}", render_joint_trellis(&joint_trellis));
    }
    if !partition && !joint {
        print!("{}", render_symbol_trellis(&system.trellis));
    }
    Ok(())
}

fn cmd_encode(config: &Path, bits_hex: &str) -> Result<()> {
    let cfg = load_config(config)?;
    let system = build_system(&cfg)?;
    let bits = parse_hex_bits(bits_hex, cfg.code.k0())?;
    let channel = cfg.channel(0.0)?;
    let labels = encode_block(
        &cfg.code,
        &cfg.pattern,
        &system.plan,
        &bits,
        channel.memory(),
    )?;
    println!("# t label re im");
    for (t, &label) in labels.iter().enumerate() {
        let p = cfg.constellation.point(label);
        println!("{t} {label} {:+.6} {:+.6}", p.re, p.im);
    }
    Ok(())
}

/// Entry point for the binary: parses argv, runs the subcommand, and maps
/// errors to exit codes (0 ok, 2 configuration, 3 capacity/search budget).
pub fn cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            no_timing,
        } => cmd_simulate(config, out, *seed, *no_timing),
        Command::Distance { config } => cmd_distance(config),
        Command::TrellisDump {
            config,
            joint,
            partition,
            decoder,
        } => cmd_trellis_dump(config, *joint, *partition, decoder.as_deref()),
        Command::Encode { config, bits } => cmd_encode(config, bits),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
