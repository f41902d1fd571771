//! Convolutional codes, puncturing patterns, and the per-period rate plan.
//!
//! Bit-order conventions, fixed once and used everywhere:
//!
//! * A generator polynomial is written in octal; bit `d` of its value taps
//!   the input delayed by `d` steps, so encoding an impulse reproduces the
//!   taps LSB first on that output line.
//! * Within one encoder step the `n0` output bits are ordered by generator
//!   row, row 0 first. Across steps the stream is time-major.
//! * The packed encoder state keeps the per-line registers of input line 0
//!   in the lowest bits; within a register the most recent input sits in
//!   the most significant bit. For the (7,5) code, state 00 with input 1
//!   emits 11 and moves to state 10.

use crate::{Error, Result};

/// A rate k0/n0 convolutional encoder with total memory `nu`.
///
/// Feedforward codes take an `n0 x k0` generator matrix; each input line
/// gets its own shift register sized by the largest tap degree in its
/// column. With a feedback polynomial the encoder is the single-register
/// recursive (systematic-style) realization, supported for `k0 = 1`;
/// multi-input recursive codes have equivalent feedforward generator
/// matrices and are expressed that way.
#[derive(Debug, Clone)]
pub struct ConvCode {
    k0: usize,
    n0: usize,
    nu: u32,
    gens: Vec<Vec<u32>>,
    feedback: Option<u32>,
    line_mem: Vec<u32>,
    line_offset: Vec<u32>,
}

fn degree(poly: u32) -> u32 {
    if poly == 0 {
        0
    } else {
        31 - poly.leading_zeros()
    }
}

/// Parses an octal generator string such as `"133"`.
pub fn parse_octal(s: &str) -> Result<u32> {
    u32::from_str_radix(s, 8)
        .map_err(|_| Error::Config(format!("bad octal generator {s:?}")))
}

impl ConvCode {
    /// Builds an encoder from generator taps (`gens[output][input]`).
    pub fn new(k0: usize, n0: usize, gens: Vec<Vec<u32>>, feedback: Option<u32>) -> Result<Self> {
        if k0 == 0 || n0 == 0 || k0 > 8 || n0 > 16 {
            return Err(Error::Config(format!(
                "code dimensions k0={k0}, n0={n0} out of range (1..=8 x 1..=16)"
            )));
        }
        if gens.len() != n0 || gens.iter().any(|row| row.len() != k0) {
            return Err(Error::Config(format!(
                "generator matrix must be {n0} rows of {k0} entries"
            )));
        }
        let (line_mem, nu) = match feedback {
            None => {
                let mem: Vec<u32> = (0..k0)
                    .map(|j| gens.iter().map(|row| degree(row[j])).max().unwrap())
                    .collect();
                let nu = mem.iter().sum();
                (mem, nu)
            }
            Some(h) => {
                if k0 != 1 {
                    return Err(Error::Config(
                        "feedback encoders are supported for k0=1 only; express multi-input \
                         recursive codes through an equivalent feedforward generator matrix"
                            .into(),
                    ));
                }
                if h & 1 == 0 {
                    return Err(Error::Config(
                        "feedback polynomial must have its delay-0 tap set".into(),
                    ));
                }
                let nu = gens
                    .iter()
                    .map(|row| degree(row[0]))
                    .chain(std::iter::once(degree(h)))
                    .max()
                    .unwrap();
                (vec![nu], nu)
            }
        };
        if nu > 20 {
            return Err(Error::Config(format!("total memory nu={nu} exceeds 20")));
        }
        let mut line_offset = Vec::with_capacity(k0);
        let mut off = 0;
        for &m in &line_mem {
            line_offset.push(off);
            off += m;
        }
        Ok(ConvCode {
            k0,
            n0,
            nu,
            gens,
            feedback,
            line_mem,
            line_offset,
        })
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn num_states(&self) -> u32 {
        1 << self.nu
    }

    pub fn is_recursive(&self) -> bool {
        self.feedback.is_some()
    }

    /// One encoder step. `input` packs the k0 input bits, line 0 in bit 0;
    /// the returned word packs the n0 output bits, row 0 in bit 0.
    #[inline]
    pub fn encode_step_packed(&self, state: u32, input: u16) -> (u32, u32) {
        match self.feedback {
            None => {
                let mut out = 0u32;
                let mut next = 0u32;
                for j in 0..self.k0 {
                    let nuj = self.line_mem[j];
                    let off = self.line_offset[j];
                    let field = (state >> off) & ((1u32 << nuj) - 1);
                    let u = (input >> j & 1) as u32;
                    // Window bit d = input on this line, d steps ago.
                    let mut window = u;
                    for d in 1..=nuj {
                        window |= (field >> (nuj - d) & 1) << d;
                    }
                    for (i, row) in self.gens.iter().enumerate() {
                        out ^= (((row[j] & window).count_ones() & 1) as u32) << i;
                    }
                    if nuj > 0 {
                        let next_field = (field >> 1) | (u << (nuj - 1));
                        next |= next_field << off;
                    }
                }
                (out, next)
            }
            Some(h) => {
                let nu = self.nu;
                let u = (input & 1) as u32;
                let mut past = 0u32;
                for d in 1..=nu {
                    past |= (state >> (nu - d) & 1) << d;
                }
                let w = u ^ ((h & past).count_ones() & 1);
                let window = w | past;
                let mut out = 0u32;
                for (i, row) in self.gens.iter().enumerate() {
                    out |= (((row[0] & window).count_ones() & 1) as u32) << i;
                }
                let next = if nu > 0 {
                    (state >> 1) | (w << (nu - 1))
                } else {
                    0
                };
                (out, next)
            }
        }
    }

    /// One encoder step with unpacked bit slices.
    pub fn encode_step(&self, state: u32, in_bits: &[u8]) -> (Vec<u8>, u32) {
        assert_eq!(in_bits.len(), self.k0, "expected {} input bits", self.k0);
        let mut input = 0u16;
        for (j, &b) in in_bits.iter().enumerate() {
            debug_assert!(b <= 1);
            input |= (b as u16) << j;
        }
        let (out, next) = self.encode_step_packed(state, input);
        ((0..self.n0).map(|i| (out >> i & 1) as u8).collect(), next)
    }

    /// The input that drives termination from `state`: zero for feedforward
    /// codes, the feedback-cancelling bit for recursive ones. Repeating it
    /// for `nu` steps reaches state zero and then holds it there.
    #[inline]
    pub fn termination_input(&self, state: u32) -> u16 {
        match self.feedback {
            None => 0,
            Some(h) => {
                let nu = self.nu;
                let mut past = 0u32;
                for d in 1..=nu {
                    past |= (state >> (nu - d) & 1) << d;
                }
                ((h & past).count_ones() & 1) as u16
            }
        }
    }

    /// Packed tail inputs that drive `state` to zero in `nu` steps.
    pub fn tail_inputs(&self, state: u32) -> Vec<u16> {
        let mut s = state;
        let mut tail = Vec::with_capacity(self.nu as usize);
        for _ in 0..self.nu {
            let u = self.termination_input(s);
            tail.push(u);
            s = self.encode_step_packed(s, u).1;
        }
        debug_assert_eq!(s, 0);
        tail
    }
}

/// A periodic puncturing mask over `n0` output lines.
///
/// `mask[i][t]` decides whether output line `i` is kept at period step `t`.
#[derive(Debug, Clone)]
pub struct PuncturingPattern {
    period: usize,
    mask: Vec<Vec<u8>>,
    kept_per_step: Vec<usize>,
    n_kept: usize,
}

impl PuncturingPattern {
    pub fn new(n0: usize, period: usize, mask: Vec<Vec<u8>>) -> Result<Self> {
        if period == 0 {
            return Err(Error::Config("puncture period must be positive".into()));
        }
        if mask.len() != n0 || mask.iter().any(|row| row.len() != period) {
            return Err(Error::Config(format!(
                "puncture mask must be {n0} rows of {period} entries"
            )));
        }
        if mask.iter().flatten().any(|&b| b > 1) {
            return Err(Error::Config("puncture mask entries must be 0 or 1".into()));
        }
        let kept_per_step: Vec<usize> = (0..period)
            .map(|t| mask.iter().filter(|row| row[t] == 1).count())
            .collect();
        let n_kept = kept_per_step.iter().sum();
        if n_kept == 0 {
            return Err(Error::Config("puncture mask keeps no bits".into()));
        }
        Ok(PuncturingPattern {
            period,
            mask,
            kept_per_step,
            n_kept,
        })
    }

    /// The identity pattern (nothing punctured, period 1).
    pub fn all_ones(n0: usize) -> Self {
        PuncturingPattern::new(n0, 1, vec![vec![1]; n0]).unwrap()
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn mask(&self) -> &[Vec<u8>] {
        &self.mask
    }

    pub fn kept_at_step(&self, t: usize) -> usize {
        self.kept_per_step[t % self.period]
    }

    pub fn keeps(&self, line: usize, t: usize) -> bool {
        self.mask[line][t % self.period] == 1
    }

    pub fn n_kept(&self) -> usize {
        self.n_kept
    }
}

/// Deletes masked bits from a time-major output stream (bit `t*n0 + i` is
/// line `i` of step `t`), preserving order.
pub fn puncture(bits: &[u8], pattern: &PuncturingPattern) -> Result<Vec<u8>> {
    let n0 = pattern.mask.len();
    if bits.len() % (n0 * pattern.period) != 0 {
        return Err(Error::Framing(format!(
            "stream of {} bits is not a whole number of periods ({} lines x {} steps)",
            bits.len(),
            n0,
            pattern.period
        )));
    }
    let steps = bits.len() / n0;
    let mut out = Vec::with_capacity(steps / pattern.period * pattern.n_kept);
    for t in 0..steps {
        for i in 0..n0 {
            if pattern.keeps(i, t) {
                out.push(bits[t * n0 + i]);
            }
        }
    }
    Ok(out)
}

/// Per-phase schedule of one puncture period against symbol boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePlan {
    /// First period step this phase consumes.
    pub step_offset: usize,
    /// Encoder steps whose kept bits complete this phase's symbol.
    pub steps_consumed: usize,
    /// Information bits consumed: `k0 * steps_consumed`.
    pub input_bits: usize,
    /// Kept bits carried in across the leading symbol boundary.
    pub pending_in: usize,
    /// Kept bits carried out across the trailing symbol boundary.
    pub pending_out: usize,
}

/// How one puncture period maps onto `s` channel symbols.
///
/// `r` is the exact information rate in bits per symbol, as a reduced
/// fraction `k0 * period / s`.
#[derive(Debug, Clone)]
pub struct RatePlan {
    pub m: u32,
    pub s: usize,
    pub period: usize,
    pub k0: usize,
    pub r: (u64, u64),
    pub phases: Vec<PhasePlan>,
}

impl RatePlan {
    pub fn rate(&self) -> f64 {
        self.r.0 as f64 / self.r.1 as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Schedules one puncture period against `m`-bit symbol boundaries.
///
/// Kept bits are consumed in stream order; a symbol boundary falling inside
/// a step leaves `pending` bits (always fewer than `m`) to be promoted into
/// trellis state. Periods are self-contained: the first phase starts and
/// the last phase ends with no pending bits. Fully punctured steps after
/// the last boundary fold into the last phase so every period step is
/// consumed exactly once.
pub fn rate_plan(code: &ConvCode, pattern: &PuncturingPattern, m: u32) -> Result<RatePlan> {
    if pattern.mask.len() != code.n0() {
        return Err(Error::Config(format!(
            "puncture mask has {} rows but the code has n0={}",
            pattern.mask.len(),
            code.n0()
        )));
    }
    let n_kept = pattern.n_kept();
    if m == 0 {
        return Err(Error::Config("symbols need at least one label bit".into()));
    }
    if n_kept % m as usize != 0 {
        return Err(Error::RateIncompatible {
            n_kept,
            m: m as usize,
        });
    }
    let s = n_kept / m as usize;
    let p = pattern.period();
    let mut phases = Vec::with_capacity(s);
    let mut pending = 0usize;
    let mut t = 0usize;
    for phase in 0..s {
        let start = t;
        let pending_in = pending;
        let mut acc = pending;
        while acc < m as usize {
            debug_assert!(t < p);
            acc += pattern.kept_at_step(t);
            t += 1;
        }
        let pending_out = acc - m as usize;
        if pending_out >= m as usize {
            return Err(Error::Config(format!(
                "puncture step {} completes more than one symbol (pending would reach {})",
                t - 1,
                pending_out
            )));
        }
        if phase == s - 1 {
            // Trailing fully punctured steps belong to the last phase.
            while t < p {
                debug_assert_eq!(pattern.kept_at_step(t), 0);
                t += 1;
            }
        }
        phases.push(PhasePlan {
            step_offset: start,
            steps_consumed: t - start,
            input_bits: code.k0() * (t - start),
            pending_in,
            pending_out,
        });
        pending = pending_out;
    }
    debug_assert_eq!(t, p);
    debug_assert_eq!(pending, 0);
    let num = (code.k0() * p) as u64;
    let den = s as u64;
    let g = gcd(num, den);
    Ok(RatePlan {
        m,
        s,
        period: p,
        k0: code.k0(),
        r: (num / g, den / g),
        phases,
    })
}

/// Encodes a terminated block and maps it to symbol labels.
///
/// The input is extended with `nu` tail steps driving the encoder to state
/// zero, zero-padded to a whole number of puncture periods (padding keeps
/// the state at zero), and followed by `flush_len` known label-0 symbols
/// that flush channel memory. Returns one label per channel symbol.
pub fn encode_block(
    code: &ConvCode,
    pattern: &PuncturingPattern,
    plan: &RatePlan,
    info_bits: &[u8],
    flush_len: usize,
) -> Result<Vec<u16>> {
    let k0 = code.k0();
    if info_bits.len() % k0 != 0 {
        return Err(Error::Framing(format!(
            "{} info bits is not a multiple of k0={}",
            info_bits.len(),
            k0
        )));
    }
    let info_steps = info_bits.len() / k0;
    let min_steps = info_steps + code.nu() as usize;
    let total_steps = min_steps.div_ceil(pattern.period()) * pattern.period();
    let mut labels = Vec::with_capacity(total_steps / pattern.period() * plan.s + flush_len);
    let mut state = 0u32;
    let mut queue = 0u64;
    let mut queue_len = 0u32;
    let m = plan.m;
    let mut tail: Option<Vec<u16>> = None;
    for step in 0..total_steps {
        let input = if step < info_steps {
            let mut v = 0u16;
            for j in 0..k0 {
                v |= (info_bits[step * k0 + j] as u16) << j;
            }
            v
        } else if step < min_steps {
            let tail = tail.get_or_insert_with(|| code.tail_inputs(state));
            tail[step - info_steps]
        } else {
            0
        };
        let (out, next) = code.encode_step_packed(state, input);
        state = next;
        for i in 0..code.n0() {
            if pattern.keeps(i, step) {
                queue |= ((out >> i & 1) as u64) << queue_len;
                queue_len += 1;
            }
        }
        while queue_len >= m {
            labels.push((queue & ((1 << m) - 1)) as u16);
            queue >>= m;
            queue_len -= m;
        }
    }
    debug_assert_eq!(state, 0);
    debug_assert_eq!(queue_len, 0);
    labels.extend(std::iter::repeat(0u16).take(flush_len));
    Ok(labels)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn code75() -> ConvCode {
        ConvCode::new(1, 2, vec![vec![0o7], vec![0o5]], None).unwrap()
    }

    fn code133() -> ConvCode {
        ConvCode::new(1, 2, vec![vec![0o133], vec![0o171]], None).unwrap()
    }

    #[test]
    fn seven_five_single_step() {
        let c = code75();
        assert_eq!(c.nu(), 2);
        let (out, next) = c.encode_step(0b00, &[1]);
        assert_eq!(out, vec![1, 1]);
        assert_eq!(next, 0b10);
    }

    #[test]
    fn zero_input_from_zero_state_stays_zero() {
        for c in [code75(), code133()] {
            let (out, next) = c.encode_step_packed(0, 0);
            assert_eq!(out, 0);
            assert_eq!(next, 0);
        }
    }

    #[test]
    fn impulse_reproduces_generator_taps() {
        let c = code133();
        assert_eq!(c.nu(), 6);
        let mut state = 0;
        let mut y0 = Vec::new();
        let mut y1 = Vec::new();
        for step in 0..7 {
            let (out, next) = c.encode_step_packed(state, if step == 0 { 1 } else { 0 });
            y0.push(out & 1);
            y1.push(out >> 1 & 1);
            state = next;
        }
        // Taps LSB first: oracle is the octal value read bit by bit.
        let taps = |g: u32| (0..7).map(|d| g >> d & 1).collect::<Vec<_>>();
        assert_eq!(y0, taps(0o133));
        assert_eq!(y1, taps(0o171));
    }

    #[test]
    fn recursive_encoder_is_systematic_when_g_equals_h() {
        // y0 = u (g = h), y1 = u * 5/7.
        let c = ConvCode::new(1, 2, vec![vec![0o7], vec![0o5]], Some(0o7)).unwrap();
        assert!(c.is_recursive());
        let mut state = 0;
        let input = [1u16, 0, 1, 1, 0, 1, 0, 0];
        for &u in &input {
            let (out, next) = c.encode_step_packed(state, u);
            assert_eq!(out & 1, u as u32, "systematic output must copy the input");
            state = next;
        }
    }

    #[test]
    fn termination_reaches_zero_from_every_state() {
        let recursive = ConvCode::new(1, 2, vec![vec![0o7], vec![0o5]], Some(0o7)).unwrap();
        for c in [code75(), code133(), recursive] {
            for s0 in 0..c.num_states() {
                let tail = c.tail_inputs(s0);
                assert_eq!(tail.len(), c.nu() as usize);
                let mut s = s0;
                for u in tail {
                    s = c.encode_step_packed(s, u).1;
                }
                assert_eq!(s, 0, "state {s0} fails to terminate");
            }
        }
    }

    #[test]
    fn feedforward_tail_is_all_zero() {
        let c = code133();
        for s0 in 0..c.num_states() {
            assert!(c.tail_inputs(s0).iter().all(|&u| u == 0));
        }
    }

    #[test]
    fn multi_input_code_with_uncoded_line() {
        // Line 0 drives a nu=2 register, line 1 is uncoded.
        let c = ConvCode::new(2, 3, vec![vec![0o2, 0], vec![0o5, 0], vec![0, 1]], None).unwrap();
        assert_eq!(c.nu(), 2);
        // Input (u0, u1) = (1, 1) from state 0: y0 = u0(t-1) = 0, y1 = u0 ^ u0(t-2) = 1, y2 = u1 = 1.
        let (out, next) = c.encode_step(0, &[1, 1]);
        assert_eq!(out, vec![0, 1, 1]);
        assert_eq!(next, 0b10);
    }

    #[test]
    fn invalid_codes_are_rejected() {
        assert!(ConvCode::new(0, 2, vec![], None).is_err());
        assert!(ConvCode::new(1, 2, vec![vec![0o7]], None).is_err());
        assert!(ConvCode::new(2, 2, vec![vec![1, 0], vec![0, 1]], Some(0o7)).is_err());
        assert!(ConvCode::new(1, 2, vec![vec![0o7], vec![0o5]], Some(0o6)).is_err());
        assert!(parse_octal("139").is_err());
        assert_eq!(parse_octal("133").unwrap(), 0o133);
    }

    #[test]
    fn puncture_identity_keeps_everything() {
        let p = PuncturingPattern::all_ones(2);
        let bits: Vec<u8> = (0..12).map(|i| (i % 3 == 0) as u8).collect();
        assert_eq!(puncture(&bits, &p).unwrap(), bits);
    }

    #[test]
    fn puncture_rate_two_thirds_counts() {
        // Classic rate-2/3 mask from a rate-1/2 mother code.
        let p = PuncturingPattern::new(2, 2, vec![vec![1, 1], vec![1, 0]]).unwrap();
        assert_eq!(p.n_kept(), 3);
        let bits = vec![0u8; 16];
        assert_eq!(puncture(&bits, &p).unwrap().len(), 12);
    }

    #[test]
    fn puncture_positions_for_1_2_1() {
        let p = PuncturingPattern::new(2, 3, vec![vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        assert_eq!(p.n_kept(), 4);
        let bits: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
        let kept = puncture(&bits, &p).unwrap();
        let expected: Vec<u8> = [0usize, 2, 3, 5, 6, 8, 9, 11]
            .iter()
            .map(|&i| bits[i])
            .collect();
        assert_eq!(kept, expected);
    }

    #[test]
    fn puncture_length_mismatch_is_framing_error() {
        let p = PuncturingPattern::new(2, 3, vec![vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let bits = vec![0u8; 10];
        assert!(matches!(puncture(&bits, &p), Err(Error::Framing(_))));
    }

    #[test]
    fn rate_plan_unpunctured_is_single_phase() {
        let c = code75();
        let p = PuncturingPattern::all_ones(2);
        let plan = rate_plan(&c, &p, 2).unwrap();
        assert_eq!(plan.s, 1);
        assert_eq!(plan.r, (1, 1));
        assert_eq!(
            plan.phases,
            vec![PhasePlan {
                step_offset: 0,
                steps_consumed: 1,
                input_bits: 1,
                pending_in: 0,
                pending_out: 0
            }]
        );
    }

    #[test]
    fn rate_plan_2_1_1_has_no_pending() {
        let c = code75();
        let p = PuncturingPattern::new(2, 3, vec![vec![1, 1, 1], vec![1, 0, 0]]).unwrap();
        let plan = rate_plan(&c, &p, 2).unwrap();
        assert_eq!(plan.s, 2);
        assert_eq!(plan.r, (3, 2));
        assert_eq!(plan.phases[0].steps_consumed, 1);
        assert_eq!(plan.phases[1].steps_consumed, 2);
        assert!(plan.phases.iter().all(|ph| ph.pending_in == 0 && ph.pending_out == 0));
    }

    #[test]
    fn rate_plan_1_2_1_carries_one_pending_bit() {
        let c = code75();
        let p = PuncturingPattern::new(2, 3, vec![vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let plan = rate_plan(&c, &p, 2).unwrap();
        assert_eq!(plan.s, 2);
        assert_eq!(plan.r, (3, 2));
        assert_eq!(plan.phases[0].step_offset, 0);
        assert_eq!(plan.phases[0].steps_consumed, 2);
        assert_eq!(plan.phases[0].pending_in, 0);
        assert_eq!(plan.phases[0].pending_out, 1);
        assert_eq!(plan.phases[1].step_offset, 2);
        assert_eq!(plan.phases[1].steps_consumed, 1);
        assert_eq!(plan.phases[1].pending_in, 1);
        assert_eq!(plan.phases[1].pending_out, 0);
    }

    #[test]
    fn rate_plan_reports_incompatible_sizes() {
        let c = code75();
        let p = PuncturingPattern::all_ones(2);
        let err = rate_plan(&c, &p, 3).unwrap_err();
        match err {
            Error::RateIncompatible { n_kept, m } => {
                assert_eq!((n_kept, m), (2, 3));
            }
            other => panic!("unexpected error {other:?}"),
        }
        let msg = rate_plan(&c, &p, 3).unwrap_err().to_string();
        assert!(msg.contains('2') && msg.contains('3'));
    }

    #[test]
    fn rate_plan_rejects_steps_completing_two_symbols() {
        // 4 kept bits in one step with m=2 would cross two boundaries.
        let c = ConvCode::new(1, 4, vec![vec![1], vec![1], vec![1], vec![1]], None).unwrap();
        let p = PuncturingPattern::all_ones(4);
        assert!(matches!(rate_plan(&c, &p, 2), Err(Error::Config(_))));
    }

    #[test]
    fn rate_plan_folds_trailing_punctured_steps() {
        let c = code75();
        let p = PuncturingPattern::new(2, 2, vec![vec![1, 0], vec![1, 0]]).unwrap();
        let plan = rate_plan(&c, &p, 2).unwrap();
        assert_eq!(plan.s, 1);
        assert_eq!(plan.phases[0].steps_consumed, 2);
        assert_eq!(plan.r, (2, 1));
    }

    #[test]
    fn encode_block_terminates_and_pads_to_periods() {
        let c = code75();
        let p = PuncturingPattern::new(2, 3, vec![vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let plan = rate_plan(&c, &p, 2).unwrap();
        let info: Vec<u8> = (0..7).map(|i| (i % 2) as u8).collect();
        let labels = encode_block(&c, &p, &plan, &info, 1).unwrap();
        // 7 info + 2 tail = 9 steps -> same as one period boundary (9 % 3 == 0),
        // 9 steps / 3 per period * 2 symbols + 1 flush.
        assert_eq!(labels.len(), 9 / 3 * 2 + 1);
        assert_eq!(*labels.last().unwrap(), 0);
        assert!(labels.iter().all(|&l| l < 4));
    }

    #[test]
    fn encode_block_rejects_ragged_input() {
        let c = ConvCode::new(2, 3, vec![vec![0o2, 0], vec![0o5, 0], vec![0, 1]], None).unwrap();
        let p = PuncturingPattern::all_ones(3);
        let plan = rate_plan(&c, &p, 3).unwrap();
        assert!(matches!(
            encode_block(&c, &p, &plan, &[1, 0, 1], 0),
            Err(Error::Framing(_))
        ));
    }

    proptest! {
        /// Rate-plan bookkeeping holds for arbitrary valid patterns: phases
        /// cover the period exactly, pending bits chain and stay below m,
        /// and the rate identity R = k0*P*m / N_kept holds as a fraction.
        #[test]
        fn rate_plan_invariants(
            k0 in 1usize..=2,
            extra_outputs in 0usize..=2,
            period in 1usize..=4,
            mask_bits in proptest::collection::vec(proptest::bool::ANY, 16),
            m in 1u32..=3,
        ) {
            let n0 = k0 + 1 + extra_outputs;
            let gens: Vec<Vec<u32>> =
                (0..n0).map(|i| (0..k0).map(|j| if (i + j) % 2 == 0 { 0o7 } else { 0o5 }).collect()).collect();
            let code = ConvCode::new(k0, n0, gens, None).unwrap();
            let mask: Vec<Vec<u8>> = (0..n0)
                .map(|i| (0..period).map(|t| mask_bits[(i * period + t) % mask_bits.len()] as u8).collect())
                .collect();
            let Ok(pattern) = PuncturingPattern::new(n0, period, mask) else { return Ok(()) };
            match rate_plan(&code, &pattern, m) {
                Err(_) => {}
                Ok(plan) => {
                    prop_assert_eq!(plan.s * m as usize, pattern.n_kept());
                    prop_assert_eq!(
                        plan.phases.iter().map(|p| p.steps_consumed).sum::<usize>(),
                        period
                    );
                    prop_assert_eq!(plan.phases[0].pending_in, 0);
                    prop_assert_eq!(plan.phases[plan.s - 1].pending_out, 0);
                    for w in plan.phases.windows(2) {
                        prop_assert_eq!(w[0].pending_out, w[1].pending_in);
                    }
                    for ph in &plan.phases {
                        prop_assert!(ph.pending_in < m as usize);
                        prop_assert!(ph.pending_out < m as usize);
                        prop_assert!(ph.steps_consumed >= 1);
                        prop_assert_eq!(ph.input_bits, k0 * ph.steps_consumed);
                    }
                    // R = k0 * P / S and equivalently k0 * P * m / N_kept.
                    let lhs = (plan.r.0 as u128) * (pattern.n_kept() as u128);
                    let rhs = (plan.r.1 as u128) * (k0 as u128) * (period as u128) * (m as u128);
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }
    }
}
