//! Time-variant trellises and their reduced-state joint extensions.
//!
//! Puncturing makes symbol boundaries drift through encoder steps, so the
//! trellis for one channel symbol changes shape over a period of `S` phases.
//! Kept output bits that straddle a boundary are promoted into the state as
//! pending bits ([`ExtState`]), which is what keeps every phase a proper
//! one-symbol-per-stage trellis. Channel memory enters as per-delay subset
//! indices of past labels ([`JointTrellis`]); a [`DepthSchedule`] of full
//! depths gives the exact joint trellis (MLSE), smaller depths give the
//! reduced trellises that RSSE and DDFSE decode on.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::code::{rate_plan, ConvCode, PuncturingPattern, RatePlan};
use crate::constellation::Constellation;
use crate::{Error, Result};

/// Default guard on state-space sizes (extended and joint).
pub const DEFAULT_STATE_CAP: u64 = 1 << 22;

/// Sentinel label meaning "before the start of the block"; the associated
/// symbol contribution is zero, matching the channel's zero prehistory.
pub const NO_LABEL: u16 = u16::MAX;

/// A trellis state: code state plus kept bits awaiting the next boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtState {
    pub cc_state: u32,
    pub pending: u16,
}

impl ExtState {
    /// Packs to the sort key used everywhere: code state in the high bits,
    /// pending bits below.
    pub fn packed(&self, pending_bits: u32) -> u64 {
        ((self.cc_state as u64) << pending_bits) | self.pending as u64
    }

    fn render(&self, pending_bits: u32) -> String {
        if pending_bits == 0 {
            format!("{}:-", self.cc_state)
        } else {
            let bits: String = (0..pending_bits)
                .map(|b| if self.pending >> b & 1 == 1 { '1' } else { '0' })
                .collect();
            format!("{}:{}", self.cc_state, bits)
        }
    }
}

/// One trellis transition: `input` packs the consumed information bits
/// (step-major, line 0 of the first step in bit 0), `label` is the emitted
/// symbol label, `to` indexes the next phase's state list.
#[derive(Debug, Clone, Copy)]
pub struct Branch {
    pub to: u32,
    pub input: u16,
    pub label: u16,
}

/// All states and branches of one phase.
#[derive(Debug, Clone)]
pub struct TrellisPhase {
    pub pending_in: u32,
    pub pending_out: u32,
    pub input_bits: u32,
    /// Sorted ascending by packed id.
    pub states: Vec<ExtState>,
    /// `branches[state][input]`, inputs ascending; every state has full
    /// out-degree `2^input_bits`.
    pub branches: Vec<Vec<Branch>>,
}

impl TrellisPhase {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn out_degree(&self) -> usize {
        1 << self.input_bits
    }

    pub fn num_branches(&self) -> usize {
        self.states.len() << self.input_bits
    }
}

/// The periodically time-variant symbol trellis: one stage per channel
/// symbol, phase advancing cyclically.
#[derive(Debug, Clone)]
pub struct TimeVariantTrellis {
    pub m: u32,
    pub plan: RatePlan,
    pub phases: Vec<TrellisPhase>,
}

impl TimeVariantTrellis {
    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn num_branches(&self) -> usize {
        self.phases.iter().map(|p| p.num_branches()).sum()
    }

    /// Index of the all-zero state in the phase-0 list (always present:
    /// encoding starts there and returns there each terminated block).
    pub fn zero_state_index(&self) -> u32 {
        debug_assert_eq!(self.phases[0].states[0].packed(self.phases[0].pending_in), 0);
        0
    }
}

fn run_branch(
    code: &ConvCode,
    pattern: &PuncturingPattern,
    plan: &RatePlan,
    phase: usize,
    cc: u32,
    pending: u16,
    input: u32,
) -> (u16, u64) {
    let ph = &plan.phases[phase];
    let mut queue = pending as u64;
    let mut qlen = ph.pending_in as u32;
    let mut state = cc;
    let k0 = code.k0();
    for t in 0..ph.steps_consumed {
        let step = ph.step_offset + t;
        let in_bits = ((input >> (t * k0)) & ((1u32 << k0) - 1)) as u16;
        let (out, next) = code.encode_step_packed(state, in_bits);
        state = next;
        for line in 0..code.n0() {
            if pattern.keeps(line, step) {
                queue |= ((out >> line & 1) as u64) << qlen;
                qlen += 1;
            }
        }
    }
    debug_assert_eq!(qlen, plan.m + ph.pending_out as u32);
    let label = (queue & ((1u64 << plan.m) - 1)) as u16;
    let next_pending = queue >> plan.m;
    let next_phase = (phase + 1) % plan.s;
    let dest = (state as u64) << plan.phases[next_phase].pending_in as u32 | next_pending;
    (label, dest)
}

/// Builds the time-variant symbol trellis for `code` punctured by `pattern`
/// and mapped onto `constellation`, pruned to the states reachable from the
/// all-zero start state.
pub fn build_symbol_trellis(
    code: &ConvCode,
    pattern: &PuncturingPattern,
    constellation: &Constellation,
) -> Result<TimeVariantTrellis> {
    let m = constellation.bits();
    let plan = rate_plan(code, pattern, m)?;
    for ph in &plan.phases {
        let candidates = (code.num_states() as u64) << ph.pending_in as u32;
        if candidates > DEFAULT_STATE_CAP {
            return Err(Error::Capacity {
                requested: candidates,
                cap: DEFAULT_STATE_CAP,
            });
        }
        if code.k0() * ph.steps_consumed > 16 {
            return Err(Error::Config(format!(
                "phase consumes {} input bits; at most 16 are supported",
                code.k0() * ph.steps_consumed
            )));
        }
    }
    let s = plan.s;

    // Forward closure from the all-zero state; sets grow monotonically, so
    // the worklist terminates with the reachable set of every phase.
    let mut reach: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); s];
    let mut work: VecDeque<(usize, u64)> = VecDeque::new();
    reach[0].insert(0);
    work.push_back((0, 0));
    while let Some((phase, packed)) = work.pop_front() {
        let ph = &plan.phases[phase];
        let cc = (packed >> ph.pending_in as u32) as u32;
        let pending = (packed & ((1u64 << ph.pending_in as u32) - 1)) as u16;
        let next_phase = (phase + 1) % s;
        for input in 0..(1u32 << ph.input_bits as u32) {
            let (_, dest) = run_branch(code, pattern, &plan, phase, cc, pending, input);
            if reach[next_phase].insert(dest) {
                work.push_back((next_phase, dest));
            }
        }
    }

    let index_maps: Vec<HashMap<u64, u32>> = reach
        .iter()
        .map(|set| {
            set.iter()
                .enumerate()
                .map(|(i, &p)| (p, i as u32))
                .collect()
        })
        .collect();

    let mut phases = Vec::with_capacity(s);
    for phase in 0..s {
        let ph = &plan.phases[phase];
        let pending_in = ph.pending_in as u32;
        let states: Vec<ExtState> = reach[phase]
            .iter()
            .map(|&packed| ExtState {
                cc_state: (packed >> pending_in) as u32,
                pending: (packed & ((1u64 << pending_in) - 1)) as u16,
            })
            .collect();
        let next_map = &index_maps[(phase + 1) % s];
        let branches: Vec<Vec<Branch>> = states
            .iter()
            .map(|st| {
                (0..(1u32 << ph.input_bits as u32))
                    .map(|input| {
                        let (label, dest) =
                            run_branch(code, pattern, &plan, phase, st.cc_state, st.pending, input);
                        Branch {
                            to: next_map[&dest],
                            input: input as u16,
                            label,
                        }
                    })
                    .collect()
            })
            .collect();
        phases.push(TrellisPhase {
            pending_in,
            pending_out: ph.pending_out as u32,
            input_bits: ph.input_bits as u32,
            states,
            branches,
        });
    }
    Ok(TimeVariantTrellis { m, plan, phases })
}

/// Per-phase, per-delay partition depths retained in the joint state.
///
/// `rows[phase][delay - 1]` is the depth for the symbol sent `delay`
/// stages earlier, `0..=m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthSchedule {
    rows: Vec<Vec<u32>>,
}

impl DepthSchedule {
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Self {
        DepthSchedule { rows }
    }

    /// The same depth row at every phase.
    pub fn uniform(num_phases: usize, row: Vec<u32>) -> Self {
        DepthSchedule {
            rows: vec![row; num_phases],
        }
    }

    /// Full label resolution everywhere: the exact joint trellis.
    pub fn full(num_phases: usize, memory: usize, m: u32) -> Self {
        Self::uniform(num_phases, vec![m; memory])
    }

    /// The first `full_delays` delays at full depth, the rest at zero:
    /// the decision-feedback family, with `full_delays = memory` being the
    /// exact trellis and `full_delays = 0` pure feedback.
    pub fn feedback_truncated(num_phases: usize, memory: usize, full_delays: usize, m: u32) -> Self {
        let row: Vec<u32> = (0..memory)
            .map(|i| if i < full_delays { m } else { 0 })
            .collect();
        Self::uniform(num_phases, row)
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn num_phases(&self) -> usize {
        self.rows.len()
    }

    pub fn memory(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Validates a depth schedule against label width `m` and channel memory.
///
/// Shape aside, the binding condition is that a symbol's resolution may
/// only stay equal or coarsen as it ages: `J[phase][i] >= J[(phase+1) mod
/// S][i+1]` for every phase and delay `i < L`. Violations are reported as
/// `(phase, i)` pairs on the left-hand side of the failed comparison.
pub fn check_depths(schedule: &DepthSchedule, m: u32, memory: usize) -> Result<()> {
    let s = schedule.num_phases();
    if s == 0 {
        return Err(Error::Config("depth schedule has no phases".into()));
    }
    for (phase, row) in schedule.rows().iter().enumerate() {
        if row.len() != memory {
            return Err(Error::Config(format!(
                "depth row for phase {phase} has {} entries, channel memory is {memory}",
                row.len()
            )));
        }
        if let Some(&bad) = row.iter().find(|&&j| j > m) {
            return Err(Error::Config(format!(
                "depth {bad} at phase {phase} exceeds label width m={m}"
            )));
        }
    }
    let mut violations = Vec::new();
    for phase in 0..s {
        let next = (phase + 1) % s;
        for i in 1..memory {
            if schedule.rows()[phase][i - 1] < schedule.rows()[next][i] {
                violations.push((phase, i));
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidDepths(violations))
    }
}

/// The joint code-and-channel trellis induced by a depth schedule.
///
/// Joint states are never materialized: a state is the pair of an extended
/// state index and a packed history word (delay-1 entry in the low bits),
/// and transitions are computed from the symbol trellis on the fly.
#[derive(Debug, Clone)]
pub struct JointTrellis<'a> {
    trellis: &'a TimeVariantTrellis,
    schedule: DepthSchedule,
    memory: usize,
    hist_bits: Vec<u32>,
    hist_offsets: Vec<Vec<u32>>,
}

/// Validates the schedule and size caps and returns the joint-trellis view.
pub fn build_joint_trellis<'a>(
    trellis: &'a TimeVariantTrellis,
    memory: usize,
    schedule: DepthSchedule,
    cap: u64,
) -> Result<JointTrellis<'a>> {
    if schedule.num_phases() != trellis.num_phases() {
        return Err(Error::Config(format!(
            "depth schedule has {} phases, trellis has {}",
            schedule.num_phases(),
            trellis.num_phases()
        )));
    }
    check_depths(&schedule, trellis.m, memory)?;
    let hist_bits: Vec<u32> = schedule.rows().iter().map(|row| row.iter().sum()).collect();
    let hist_offsets: Vec<Vec<u32>> = schedule
        .rows()
        .iter()
        .map(|row| {
            let mut offs = Vec::with_capacity(row.len());
            let mut acc = 0;
            for &j in row {
                offs.push(acc);
                acc += j;
            }
            offs
        })
        .collect();
    for (phase, ph) in trellis.phases.iter().enumerate() {
        let count = (ph.num_states() as u64) << hist_bits[phase];
        if count > cap {
            return Err(Error::Capacity {
                requested: count,
                cap,
            });
        }
    }
    Ok(JointTrellis {
        trellis,
        schedule,
        memory,
        hist_bits,
        hist_offsets,
    })
}

impl<'a> JointTrellis<'a> {
    pub fn trellis(&self) -> &'a TimeVariantTrellis {
        self.trellis
    }

    pub fn schedule(&self) -> &DepthSchedule {
        &self.schedule
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn hist_bits(&self, phase: usize) -> u32 {
        self.hist_bits[phase]
    }

    pub fn num_states(&self, phase: usize) -> u64 {
        (self.trellis.phases[phase].num_states() as u64) << self.hist_bits[phase]
    }

    pub fn joint_id(&self, phase: usize, ext_index: u32, hist: u64) -> u64 {
        ((ext_index as u64) << self.hist_bits[phase]) | hist
    }

    pub fn split_id(&self, phase: usize, id: u64) -> (u32, u64) {
        let hb = self.hist_bits[phase];
        ((id >> hb) as u32, id & ((1u64 << hb) - 1))
    }

    /// Shifts a phase-`phase` history one stage forward after emitting
    /// `label`: the label's subset index (at the next phase's delay-1
    /// depth) enters, every older entry coarsens to its new depth.
    ///
    /// Subset indices are the low bits of the label because labels are the
    /// partition path bits, so coarsening is a mask.
    #[inline]
    pub fn advance_hist(&self, phase: usize, hist: u64, label: u16) -> u64 {
        let s = self.trellis.num_phases();
        let next = (phase + 1) % s;
        let next_row = &self.schedule.rows()[next];
        let mut out = 0u64;
        let mut off = 0u32;
        for i in 0..self.memory {
            let depth = next_row[i];
            let entry = if i == 0 {
                (label as u64) & ((1u64 << depth) - 1)
            } else {
                debug_assert!(self.schedule.rows()[phase][i - 1] >= depth);
                (hist >> self.hist_offsets[phase][i - 1]) & ((1u64 << depth) - 1)
            };
            out |= entry << off;
            off += depth;
        }
        out
    }

    /// History entry for a given delay (subset index at that delay's depth).
    pub fn hist_entry(&self, phase: usize, hist: u64, delay: usize) -> u64 {
        let depth = self.schedule.rows()[phase][delay - 1];
        (hist >> self.hist_offsets[phase][delay - 1]) & ((1u64 << depth) - 1)
    }

    /// Branch-metric evaluations per period: sum over phases of joint
    /// state count times out-degree.
    pub fn per_period_metrics(&self) -> u64 {
        (0..self.trellis.num_phases())
            .map(|p| self.num_states(p) * self.trellis.phases[p].out_degree() as u64)
            .sum()
    }

    pub fn render_state(&self, phase: usize, id: u64) -> String {
        let (ext_idx, hist) = self.split_id(phase, id);
        let ph = &self.trellis.phases[phase];
        let mut out = ph.states[ext_idx as usize].render(ph.pending_in);
        if self.memory > 0 {
            out.push('|');
            for delay in 1..=self.memory {
                if delay > 1 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.hist_entry(phase, hist, delay));
            }
        }
        out
    }
}

fn render_input(input: u16, input_bits: u32) -> String {
    if input_bits == 0 {
        return "-".into();
    }
    (0..input_bits)
        .map(|b| if input >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Text dump of the symbol trellis, one line per branch:
/// `phase from_state in_bits label to_state`.
pub fn render_symbol_trellis(trellis: &TimeVariantTrellis) -> String {
    let mut out = String::new();
    for (phase, ph) in trellis.phases.iter().enumerate() {
        let _ = writeln!(
            out,
            "# phase {phase}: {} states, {} branches/state",
            ph.num_states(),
            ph.out_degree()
        );
        let next = &trellis.phases[(phase + 1) % trellis.num_phases()];
        for (si, st) in ph.states.iter().enumerate() {
            for br in &ph.branches[si] {
                let _ = writeln!(
                    out,
                    "{phase} {} {} {} {}",
                    st.render(ph.pending_in),
                    render_input(br.input, ph.input_bits),
                    br.label,
                    next.states[br.to as usize].render(next.pending_in)
                );
            }
        }
    }
    out
}

/// Text dump of the joint trellis under a schedule, same line format with
/// `cc:pending|hist` states.
pub fn render_joint_trellis(joint: &JointTrellis) -> String {
    let trellis = joint.trellis();
    let mut out = String::new();
    for (phase, ph) in trellis.phases.iter().enumerate() {
        let _ = writeln!(
            out,
            "# phase {phase}: {} joint states ({} ext x 2^{} hist), {} branches/state",
            joint.num_states(phase),
            ph.num_states(),
            joint.hist_bits(phase),
            ph.out_degree()
        );
        for ext_idx in 0..ph.num_states() {
            for hist in 0..(1u64 << joint.hist_bits(phase)) {
                let id = joint.joint_id(phase, ext_idx as u32, hist);
                for br in &ph.branches[ext_idx] {
                    let next_phase = (phase + 1) % trellis.num_phases();
                    let dest =
                        joint.joint_id(next_phase, br.to, joint.advance_hist(phase, hist, br.label));
                    let _ = writeln!(
                        out,
                        "{phase} {} {} {} {}",
                        joint.render_state(phase, id),
                        render_input(br.input, ph.input_bits),
                        br.label,
                        joint.render_state(next_phase, dest)
                    );
                }
            }
        }
    }
    let _ = writeln!(out, "# metrics/period: {}", joint.per_period_metrics());
    out
}

#[derive(PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

const HIST_SLOTS: usize = 8;

type PairHist = [u16; HIST_SLOTS];

fn shift_labels(hist: &PairHist, label: u16, memory: usize) -> PairHist {
    let mut out = [NO_LABEL; HIST_SLOTS];
    if memory > 0 {
        out[0] = label;
        out[1..memory].copy_from_slice(&hist[..memory - 1]);
    }
    out
}

fn conv_point(
    taps: &[Complex64],
    constellation: &Constellation,
    label: u16,
    hist: &PairHist,
) -> Complex64 {
    let mut acc = taps[0] * constellation.point(label);
    for (d, &tap) in taps.iter().enumerate().skip(1) {
        let l = hist[d - 1];
        if l != NO_LABEL {
            acc += tap * constellation.point(l);
        }
    }
    acc
}

/// Minimum accumulated squared Euclidean distance between two distinct
/// paths that diverge from a common state and remerge, i.e. the free
/// distance that governs asymptotic error rates.
///
/// With `taps` given, the distance is taken between channel output
/// sequences (the joint system's free distance); `None` means a memoryless
/// channel and yields the classical TCM free distance. The search is a
/// shortest-path run over the pair graph of phase-aligned path pairs, with
/// each path's last `L` labels tracked so ISI tails are priced correctly;
/// shared prehistory cancels and is represented by [`NO_LABEL`]. Parallel
/// branch pairs seed the search directly, so parallel-transition-limited
/// codes and bit-ambiguous degenerate configs (distance zero) are handled.
///
/// `max_expansions` bounds the number of dequeued pair states; exceeding
/// it is a [`Error::DistanceSearch`] diagnostic.
pub fn free_distance_search(
    trellis: &TimeVariantTrellis,
    constellation: &Constellation,
    taps: Option<&[Complex64]>,
    max_expansions: usize,
) -> Result<f64> {
    let unit = [Complex64::new(1.0, 0.0)];
    let taps = taps.unwrap_or(&unit);
    let memory = taps.len() - 1;
    assert!(memory <= HIST_SLOTS, "channel memory above {HIST_SLOTS} unsupported");
    let s = trellis.num_phases();

    type Node = (u8, u32, u32, PairHist, PairHist);
    let canon = |a: u32, ha: PairHist, b: u32, hb: PairHist| -> (u32, PairHist, u32, PairHist) {
        if (a, ha) <= (b, hb) {
            (a, ha, b, hb)
        } else {
            (b, hb, a, ha)
        }
    };

    let mut best: HashMap<Node, f64> = HashMap::new();
    let mut heap: BinaryHeap<Reverse<(OrdF64, Node)>> = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<_>, best: &mut HashMap<Node, f64>, node: Node, d: f64| {
        let slot = best.entry(node).or_insert(f64::INFINITY);
        if d < *slot {
            *slot = d;
            heap.push(Reverse((OrdF64(d), node)));
        }
    };

    // Seed with every pair of distinct branches out of a common state; the
    // shared history before the divergence contributes nothing.
    let fresh = [NO_LABEL; HIST_SLOTS];
    for (phase, ph) in trellis.phases.iter().enumerate() {
        let next_phase = ((phase + 1) % s) as u8;
        for rows in &ph.branches {
            for (i, bi) in rows.iter().enumerate() {
                for bj in rows.iter().skip(i + 1) {
                    let ha = shift_labels(&fresh, bi.label, memory);
                    let hb = shift_labels(&fresh, bj.label, memory);
                    let va = conv_point(taps, constellation, bi.label, &fresh);
                    let vb = conv_point(taps, constellation, bj.label, &fresh);
                    let d = (va - vb).norm_sqr();
                    let (a, ha, b, hb) = canon(bi.to, ha, bj.to, hb);
                    push(&mut heap, &mut best, (next_phase, a, b, ha, hb), d);
                }
            }
        }
    }

    let mut expansions = 0usize;
    while let Some(Reverse((OrdF64(d), node))) = heap.pop() {
        let (phase, a, b, ha, hb) = node;
        if d > best[&node] {
            continue;
        }
        if a == b && ha == hb {
            return Ok(d);
        }
        expansions += 1;
        if expansions > max_expansions {
            return Err(Error::DistanceSearch(max_expansions));
        }
        let phase = phase as usize;
        let ph = &trellis.phases[phase];
        let next_phase = ((phase + 1) % s) as u8;
        for ba in &ph.branches[a as usize] {
            let va = conv_point(taps, constellation, ba.label, &ha);
            let na = shift_labels(&ha, ba.label, memory);
            for bb in &ph.branches[b as usize] {
                let vb = conv_point(taps, constellation, bb.label, &hb);
                let nb = shift_labels(&hb, bb.label, memory);
                let cost = (va - vb).norm_sqr();
                let (ca, cha, cb, chb) = canon(ba.to, na, bb.to, nb);
                push(
                    &mut heap,
                    &mut best,
                    (next_phase, ca, cb, cha, chb),
                    d + cost,
                );
            }
        }
    }
    Err(Error::DistanceSearch(expansions))
}

/// Free Hamming distance of the unpunctured convolutional code: minimum
/// output weight over paths that leave the zero state and return to it.
pub fn hamming_free_distance(code: &ConvCode, max_expansions: usize) -> Result<u32> {
    let mut best: HashMap<u32, u32> = HashMap::new();
    let mut heap: BinaryHeap<Reverse<(u32, u32)>> = BinaryHeap::new();
    for input in 1..(1u16 << code.k0()) {
        let (out, next) = code.encode_step_packed(0, input);
        let w = out.count_ones();
        if next == 0 {
            // Degenerate single-step loop; still a diverge/remerge event.
            return Ok(w);
        }
        let slot = best.entry(next).or_insert(u32::MAX);
        if w < *slot {
            *slot = w;
            heap.push(Reverse((w, next)));
        }
    }
    let mut expansions = 0usize;
    while let Some(Reverse((d, state))) = heap.pop() {
        if state == 0 {
            return Ok(d);
        }
        if d > best[&state] {
            continue;
        }
        expansions += 1;
        if expansions > max_expansions {
            return Err(Error::DistanceSearch(max_expansions));
        }
        for input in 0..(1u16 << code.k0()) {
            let (out, next) = code.encode_step_packed(state, input);
            let nd = d + out.count_ones();
            let slot = best.entry(next).or_insert(u32::MAX);
            if nd < *slot {
                *slot = nd;
                heap.push(Reverse((nd, next)));
            }
        }
    }
    Err(Error::DistanceSearch(expansions))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
