//! Viterbi decoding on the joint trellis: MLSE, DDFSE, and RSSE.
//!
//! All three modes run the same add-compare-select engine; they differ only
//! in the depth schedule that shapes the joint state space. Symbols older
//! than the retained resolution are supplied by per-survivor decision
//! feedback: every survivor carries its own last-`L` decided labels, so
//! branch metrics always price the full channel memory. With full depths
//! the fed-back labels coincide with the state and the engine is exact
//! MLSE; the identities are structural, not approximate.
//!
//! Blocks are decoded whole: tail bits drive the code to state zero, `L`
//! known flush symbols drain the channel, and traceback starts from the
//! unique all-zero terminal state. Branches that would violate the known
//! tail inputs are priced at infinity rather than skipped, which keeps the
//! evaluated-metric counter an exact closed-form function of the trellis.

use num_complex::Complex64;

use crate::channel::ChannelModel;
use crate::code::ConvCode;
use crate::constellation::Constellation;
use crate::trellis::{
    build_joint_trellis, DepthSchedule, JointTrellis, TimeVariantTrellis, NO_LABEL,
};
use crate::{Error, Result};

/// Stages between metric renormalizations.
pub const DEFAULT_RENORM_INTERVAL: usize = 64;

/// Which joint trellis the engine runs on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecoderMode {
    /// Full depths everywhere: exact maximum-likelihood sequence detection.
    Mlse,
    /// The first `full_delays` delays at full resolution, the rest fed back
    /// per survivor. `full_delays = 0` is pure decision feedback,
    /// `full_delays = L` is MLSE.
    Ddfse { full_delays: usize },
    /// An arbitrary valid depth schedule.
    Rsse { schedule: DepthSchedule },
}

#[derive(Debug, Clone)]
pub struct DecoderConfig {
    pub mode: DecoderMode,
    pub renorm_interval: usize,
}

impl DecoderConfig {
    pub fn new(mode: DecoderMode) -> Self {
        DecoderConfig {
            mode,
            renorm_interval: DEFAULT_RENORM_INTERVAL,
        }
    }
}

/// Expands a decoder mode into its depth schedule.
pub fn schedule_for(
    mode: &DecoderMode,
    num_phases: usize,
    memory: usize,
    m: u32,
) -> Result<DepthSchedule> {
    match mode {
        DecoderMode::Mlse => Ok(DepthSchedule::full(num_phases, memory, m)),
        DecoderMode::Ddfse { full_delays } => {
            if *full_delays > memory {
                return Err(Error::Config(format!(
                    "ddfse retains {full_delays} delays but the channel memory is {memory}"
                )));
            }
            Ok(DepthSchedule::feedback_truncated(
                num_phases,
                memory,
                *full_delays,
                m,
            ))
        }
        DecoderMode::Rsse { schedule } => Ok(schedule.clone()),
    }
}

/// One decoded block.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub info_bits: Vec<u8>,
    /// Accumulated squared Euclidean distance of the surviving path, with
    /// renormalization offsets added back.
    pub path_metric: f64,
    /// Branch metrics evaluated; an exact deterministic function of the
    /// trellis shape and block length, independent of the received data.
    pub metrics_evaluated: u64,
    /// Add-compare-select comparisons performed.
    pub acs_compares: u64,
    /// Decided symbol labels for the data stages (flush excluded).
    pub symbol_labels: Vec<u16>,
}

/// `|r - sum_i h_i a(l_{k-i})|^2` with the same floating-point association
/// as the channel convolution, so the correct branch in a noiseless frame
/// scores exactly zero. `history[d-1]` is the label sent `d` stages ago;
/// [`NO_LABEL`] contributes nothing (zero prehistory).
#[inline]
pub fn branch_metric(
    r: Complex64,
    label: u16,
    history: &[u16],
    constellation: &Constellation,
    taps: &[Complex64],
) -> f64 {
    let mut acc = taps[0] * constellation.point(label);
    for (d, &tap) in taps.iter().enumerate().skip(1) {
        let l = history[d - 1];
        if l != NO_LABEL {
            acc += tap * constellation.point(l);
        }
    }
    (r - acc).norm_sqr()
}

#[derive(Clone, Copy)]
struct Survivor {
    prev: u32,
    input: u16,
    label: u16,
}

/// A configured decoder bound to one system (trellis, code, channel,
/// constellation). Immutable once built; one instance may decode many
/// frames, concurrently from multiple threads.
pub struct Decoder<'a> {
    joint: JointTrellis<'a>,
    code: &'a ConvCode,
    constellation: &'a Constellation,
    channel: &'a ChannelModel,
    renorm_interval: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(
        trellis: &'a TimeVariantTrellis,
        code: &'a ConvCode,
        constellation: &'a Constellation,
        channel: &'a ChannelModel,
        config: &DecoderConfig,
        state_cap: u64,
    ) -> Result<Self> {
        if constellation.bits() != trellis.m {
            return Err(Error::Config(format!(
                "constellation carries {} bits per symbol but the trellis was built for {}",
                constellation.bits(),
                trellis.m
            )));
        }
        if config.renorm_interval == 0 {
            return Err(Error::Config("renorm interval must be at least 1".into()));
        }
        let schedule = schedule_for(
            &config.mode,
            trellis.num_phases(),
            channel.memory(),
            trellis.m,
        )?;
        let joint = build_joint_trellis(trellis, channel.memory(), schedule, state_cap)?;
        let largest = (0..trellis.num_phases())
            .map(|p| {
                (trellis.phases[0].num_states() as u64)
                    .max(trellis.phases[p].num_states() as u64)
                    << joint.hist_bits(p)
            })
            .max()
            .unwrap();
        if largest > u32::MAX as u64 {
            return Err(Error::Capacity {
                requested: largest,
                cap: u32::MAX as u64,
            });
        }
        Ok(Decoder {
            joint,
            code,
            constellation,
            channel,
            renorm_interval: config.renorm_interval,
        })
    }

    pub fn joint(&self) -> &JointTrellis<'a> {
        &self.joint
    }

    /// Block framing for a payload of `info_len` bits: encoder steps after
    /// tail and period padding, data symbols, and flush symbols.
    fn framing(&self, info_len: usize) -> Result<(usize, usize)> {
        let plan = &self.joint.trellis().plan;
        if info_len == 0 || info_len % plan.k0 != 0 {
            return Err(Error::Framing(format!(
                "payload of {info_len} bits is not a positive multiple of k0={}",
                plan.k0
            )));
        }
        let info_steps = info_len / plan.k0;
        let total_steps =
            (info_steps + self.code.nu() as usize).div_ceil(plan.period) * plan.period;
        let n_data = total_steps / plan.period * plan.s;
        Ok((info_steps, n_data))
    }

    /// Per-(state, input) admissibility for a stage that overlaps the tail
    /// region: inputs there are pinned to the termination bits of the code
    /// state they meet. `None` when the whole stage is payload.
    fn tail_mask(&self, stage: usize, info_steps: usize) -> Option<Vec<bool>> {
        let trellis = self.joint.trellis();
        let plan = &trellis.plan;
        let phase = stage % plan.s;
        let ph_plan = &plan.phases[phase];
        let base_step = stage / plan.s * plan.period + ph_plan.step_offset;
        if base_step + ph_plan.steps_consumed <= info_steps {
            return None;
        }
        let ph = &trellis.phases[phase];
        let out_deg = ph.out_degree();
        let k0 = plan.k0;
        let mut mask = vec![true; ph.num_states() * out_deg];
        for (ext_idx, st) in ph.states.iter().enumerate() {
            for input in 0..out_deg {
                let mut cc = st.cc_state;
                let mut ok = true;
                for t in 0..ph_plan.steps_consumed {
                    let bits = (input >> (t * k0) & ((1 << k0) - 1)) as u16;
                    if base_step + t >= info_steps && bits != self.code.termination_input(cc) {
                        ok = false;
                        break;
                    }
                    cc = self.code.encode_step_packed(cc, bits).1;
                }
                mask[ext_idx * out_deg + input] = ok;
            }
        }
        Some(mask)
    }

    /// Decodes one received block carrying `info_len` payload bits.
    pub fn decode(&self, rx: &[Complex64], info_len: usize) -> Result<Decision> {
        let trellis = self.joint.trellis();
        let s = trellis.num_phases();
        let memory = self.channel.memory();
        let taps = self.channel.taps();
        let (info_steps, n_data) = self.framing(info_len)?;
        if rx.len() != n_data + memory {
            return Err(Error::Framing(format!(
                "received {} samples, framing expects {} data + {} flush",
                rx.len(),
                n_data,
                memory
            )));
        }

        let ext0 = trellis.phases[0].num_states();
        let mut buf_len = 0usize;
        for p in 0..s {
            buf_len = buf_len.max(self.joint.num_states(p) as usize);
            buf_len = buf_len.max(ext0 << self.joint.hist_bits(p));
        }
        let mut cur_m = vec![f64::INFINITY; buf_len];
        let mut next_m = vec![f64::INFINITY; buf_len];
        let mut cur_l = vec![NO_LABEL; buf_len * memory];
        let mut next_l = vec![NO_LABEL; buf_len * memory];
        let mut survivors: Vec<Vec<Survivor>> = Vec::with_capacity(n_data + memory);
        cur_m[0] = 0.0;

        let mut metrics_evaluated = 0u64;
        let mut acs_compares = 0u64;
        let mut renorm_offset = 0.0f64;

        for stage in 0..n_data + memory {
            let flush = stage >= n_data;
            // During flush the code part is frozen on the phase-0 state
            // list while the history depths keep rotating through the
            // schedule rows.
            let (phase, ph, n_dst) = if flush {
                let row = stage % s;
                (row, &trellis.phases[0], ext0 << self.joint.hist_bits((row + 1) % s))
            } else {
                let phase = stage % s;
                (
                    phase,
                    &trellis.phases[phase],
                    self.joint.num_states((stage + 1) % s) as usize,
                )
            };
            let hb = self.joint.hist_bits(phase);
            let hb_next = self.joint.hist_bits((phase + 1) % s);
            let r = rx[stage];
            let mask = if flush {
                None
            } else {
                self.tail_mask(stage, info_steps)
            };
            let out_deg = ph.out_degree();
            let mut row = vec![
                Survivor {
                    prev: 0,
                    input: 0,
                    label: 0
                };
                n_dst
            ];
            next_m[..n_dst].fill(f64::INFINITY);

            for ext_idx in 0..ph.num_states() {
                let branches = &ph.branches[ext_idx];
                for hist in 0..(1u64 << hb) {
                    let src = ((ext_idx as u64) << hb) | hist;
                    let sm = cur_m[src as usize];
                    let lbase = src as usize * memory;
                    let history = &cur_l[lbase..lbase + memory];
                    if flush {
                        let lam = branch_metric(r, 0, history, self.constellation, taps);
                        metrics_evaluated += 1;
                        let cand = sm + lam;
                        let dest =
                            ((ext_idx as u64) << hb_next) | self.joint.advance_hist(phase, hist, 0);
                        acs_compares += 1;
                        if cand < next_m[dest as usize] {
                            next_m[dest as usize] = cand;
                            row[dest as usize] = Survivor {
                                prev: src as u32,
                                input: 0,
                                label: 0,
                            };
                            let dbase = dest as usize * memory;
                            if memory > 0 {
                                next_l[dbase] = 0;
                                for d in 1..memory {
                                    next_l[dbase + d] = cur_l[lbase + d - 1];
                                }
                            }
                        }
                    } else {
                        for (input, br) in branches.iter().enumerate() {
                            let lam =
                                branch_metric(r, br.label, history, self.constellation, taps);
                            metrics_evaluated += 1;
                            let allowed = mask
                                .as_ref()
                                .map_or(true, |mk| mk[ext_idx * out_deg + input]);
                            let cand = if allowed { sm + lam } else { f64::INFINITY };
                            let dest = ((br.to as u64) << hb_next)
                                | self.joint.advance_hist(phase, hist, br.label);
                            acs_compares += 1;
                            if cand < next_m[dest as usize] {
                                next_m[dest as usize] = cand;
                                row[dest as usize] = Survivor {
                                    prev: src as u32,
                                    input: br.input,
                                    label: br.label,
                                };
                                let dbase = dest as usize * memory;
                                if memory > 0 {
                                    next_l[dbase] = br.label;
                                    for d in 1..memory {
                                        next_l[dbase + d] = cur_l[lbase + d - 1];
                                    }
                                }
                            }
                        }
                    }
                }
            }

            if (stage + 1) % self.renorm_interval == 0 {
                let min = next_m[..n_dst]
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if min.is_finite() && min > 0.0 {
                    for v in &mut next_m[..n_dst] {
                        *v -= min;
                    }
                    renorm_offset += min;
                }
            }

            survivors.push(row);
            std::mem::swap(&mut cur_m, &mut next_m);
            std::mem::swap(&mut cur_l, &mut next_l);
        }

        if !cur_m[0].is_finite() {
            return Err(Error::Framing(
                "no surviving path reaches the terminal state".into(),
            ));
        }
        let mut id = 0usize;
        let mut inputs = vec![0u16; n_data];
        let mut labels = vec![0u16; n_data];
        for stage in (0..n_data + memory).rev() {
            let sv = survivors[stage][id];
            if stage < n_data {
                inputs[stage] = sv.input;
                labels[stage] = sv.label;
            }
            id = sv.prev as usize;
        }
        debug_assert_eq!(id, 0);

        let mut info_bits = Vec::with_capacity(info_len);
        'unpack: for (stage, &input) in inputs.iter().enumerate() {
            for b in 0..trellis.phases[stage % s].input_bits {
                if info_bits.len() == info_len {
                    break 'unpack;
                }
                info_bits.push((input >> b & 1) as u8);
            }
        }
        debug_assert_eq!(info_bits.len(), info_len);

        Ok(Decision {
            info_bits,
            path_metric: cur_m[0] + renorm_offset,
            metrics_evaluated,
            acs_compares,
            symbol_labels: labels,
        })
    }
}

/// Closed-form complexity of one decoder configuration.
#[derive(Debug, Clone)]
pub struct ComplexityReport {
    /// Joint states per phase.
    pub joint_states: Vec<u64>,
    /// Branches out of every state, per phase.
    pub out_degree: Vec<u64>,
    /// Branch metrics evaluated per puncture period of data stages.
    pub per_period_metrics: u64,
}

pub fn complexity_report(joint: &JointTrellis) -> ComplexityReport {
    let trellis = joint.trellis();
    let s = trellis.num_phases();
    let joint_states: Vec<u64> = (0..s).map(|p| joint.num_states(p)).collect();
    let out_degree: Vec<u64> = (0..s)
        .map(|p| trellis.phases[p].out_degree() as u64)
        .collect();
    ComplexityReport {
        per_period_metrics: joint.per_period_metrics(),
        joint_states,
        out_degree,
    }
}

/// Exact number of branch metrics a decode of `info_len` payload bits will
/// evaluate: the per-stage closed form summed over data and flush stages.
pub fn expected_metric_evals(
    joint: &JointTrellis,
    code: &ConvCode,
    memory: usize,
    info_len: usize,
) -> Result<u64> {
    let trellis = joint.trellis();
    let plan = &trellis.plan;
    if info_len == 0 || info_len % plan.k0 != 0 {
        return Err(Error::Framing(format!(
            "payload of {info_len} bits is not a positive multiple of k0={}",
            plan.k0
        )));
    }
    let info_steps = info_len / plan.k0;
    let total_steps = (info_steps + code.nu() as usize).div_ceil(plan.period) * plan.period;
    let n_data = total_steps / plan.period * plan.s;
    let mut total = (n_data / plan.s) as u64 * joint.per_period_metrics();
    let ext0 = trellis.phases[0].num_states() as u64;
    for f in 0..memory {
        total += ext0 << joint.hist_bits((n_data + f) % plan.s);
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
