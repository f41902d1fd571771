//! Constellations and Ungerboeck set partitioning.
//!
//! A constellation is a unit-average-energy point set together with a label
//! bijection derived from its partition tree. Labels encode the partition
//! path LSB first: bit `j` of a label is the binary split decision taken at
//! level `j`, so the depth-`J` subset index of a label is simply its `J`
//! lowest bits. Splits are chosen greedily to maximize the minimum
//! intra-subset Euclidean distance, with deterministic tie-breaking (the
//! half containing the lowest canonical point index becomes branch 0), so
//! trees are reproducible across runs.

use num_complex::Complex64;

use crate::{Error, Result};

/// Constellation family. Square QAM only; cross constellations are out of scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    Pam,
    Psk,
    Qam,
}

impl ConstellationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstellationKind::Pam => "pam",
            ConstellationKind::Psk => "psk",
            ConstellationKind::Qam => "qam",
        }
    }
}

/// A labeled constellation with unit average energy.
///
/// `points` holds the canonical geometric order (PAM ascending, PSK
/// counter-clockwise from angle 0, QAM row-major from the lower-left
/// corner); the label mapping comes from set partitioning and is exposed
/// through [`Constellation::point`].
#[derive(Debug, Clone)]
pub struct Constellation {
    kind: ConstellationKind,
    bits: u32,
    points: Vec<Complex64>,
    point_of_label: Vec<u16>,
    label_of_point: Vec<u16>,
}

impl Constellation {
    /// Number of points `M`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Label width `m = log2(M)`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    /// The point selected by a label.
    #[inline]
    pub fn point(&self, label: u16) -> Complex64 {
        self.points[self.point_of_label[label as usize] as usize]
    }

    /// Points in canonical geometric order.
    pub fn points_canonical(&self) -> &[Complex64] {
        &self.points
    }

    pub fn label_of_canonical(&self, index: usize) -> u16 {
        self.label_of_point[index]
    }

    /// True when every point lies on the real axis.
    pub fn is_real(&self) -> bool {
        self.points.iter().all(|p| p.im == 0.0)
    }

    /// Short config name, e.g. `psk8`.
    pub fn name(&self) -> String {
        format!("{}{}", self.kind.as_str(), self.size())
    }

    /// Parses names like `pam4`, `psk8`, `qam16`.
    pub fn from_name(name: &str) -> Result<Constellation> {
        let lower = name.to_ascii_lowercase();
        let (kind, rest) = if let Some(r) = lower.strip_prefix("pam") {
            (ConstellationKind::Pam, r)
        } else if let Some(r) = lower.strip_prefix("psk") {
            (ConstellationKind::Psk, r)
        } else if let Some(r) = lower.strip_prefix("qam") {
            (ConstellationKind::Qam, r)
        } else {
            return Err(Error::Config(format!(
                "unknown constellation name {name:?} (expected pam/psk/qam followed by a size)"
            )));
        };
        let m: usize = rest
            .parse()
            .map_err(|_| Error::Config(format!("bad constellation size in {name:?}")))?;
        build_constellation(kind, m)
    }
}

/// Builds a unit-energy constellation of `m_points` points and labels it by
/// set partitioning.
pub fn build_constellation(kind: ConstellationKind, m_points: usize) -> Result<Constellation> {
    let supported: &[usize] = match kind {
        ConstellationKind::Pam | ConstellationKind::Psk => &[2, 4, 8, 16],
        ConstellationKind::Qam => &[4, 16],
    };
    if !supported.contains(&m_points) {
        return Err(Error::Config(format!(
            "unsupported constellation {}{m_points} (supported sizes: {supported:?})",
            kind.as_str()
        )));
    }
    let bits = m_points.trailing_zeros();
    let points = match kind {
        ConstellationKind::Pam => {
            // Amplitudes -(M-1), ..., (M-1); mean square (M^2-1)/3.
            let scale = (((m_points * m_points - 1) as f64) / 3.0).sqrt();
            (0..m_points)
                .map(|i| Complex64::new((2.0 * i as f64 - (m_points as f64 - 1.0)) / scale, 0.0))
                .collect()
        }
        ConstellationKind::Psk => (0..m_points)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / m_points as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect(),
        ConstellationKind::Qam => {
            let side = (m_points as f64).sqrt() as usize;
            debug_assert_eq!(side * side, m_points);
            // Per-dimension amplitudes +-1, +-3, ...; mean square 2(side^2-1)/3.
            let scale = ((2 * (side * side - 1)) as f64 / 3.0).sqrt();
            let mut pts = Vec::with_capacity(m_points);
            for iy in 0..side {
                for ix in 0..side {
                    pts.push(Complex64::new(
                        (2.0 * ix as f64 - (side as f64 - 1.0)) / scale,
                        (2.0 * iy as f64 - (side as f64 - 1.0)) / scale,
                    ));
                }
            }
            pts
        }
    };
    let point_of_label = partition_labels(&points);
    let mut label_of_point = vec![0u16; m_points];
    for (label, &idx) in point_of_label.iter().enumerate() {
        label_of_point[idx as usize] = label as u16;
    }
    Ok(Constellation {
        kind,
        bits,
        points,
        point_of_label,
        label_of_point,
    })
}

/// Maps `m` label bits (LSB first: `bits[j]` is the level-`j` partition
/// decision) to the selected point.
///
/// # Panics
///
/// Panics if `bits.len()` differs from the label width.
pub fn map_label(c: &Constellation, bits: &[u8]) -> Complex64 {
    assert_eq!(
        bits.len(),
        c.bits as usize,
        "label for {} needs {} bits",
        c.name(),
        c.bits
    );
    let mut label = 0u16;
    for (j, &b) in bits.iter().enumerate() {
        debug_assert!(b <= 1);
        label |= (b as u16) << j;
    }
    c.point(label)
}

/// The m-level partition tree of a constellation.
///
/// `levels()[j]` lists the 2^j subsets at depth `j` (subset `i` holds the
/// labels whose `j` lowest bits equal `i`); `delta()[j]` is the minimum
/// intra-subset distance at depth `j` for `j < m`. Since depth-(j+1)
/// subsets refine depth-j subsets, `delta` is non-decreasing.
#[derive(Debug, Clone)]
pub struct PartitionTree {
    bits: u32,
    levels: Vec<Vec<Vec<u16>>>,
    delta: Vec<f64>,
}

impl PartitionTree {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> &[Vec<Vec<u16>>] {
        &self.levels
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// Depth-`depth` subset index of a label: its `depth` lowest bits.
    pub fn subset_index(&self, label: u16, depth: u32) -> Result<u16> {
        if depth > self.bits {
            return Err(Error::Config(format!(
                "subset depth {depth} out of range (m={})",
                self.bits
            )));
        }
        if label as usize >= 1 << self.bits {
            return Err(Error::Config(format!(
                "label {label} out of range (m={})",
                self.bits
            )));
        }
        Ok(label & ((1u16 << depth) - 1))
    }

    /// Renders the tree as indented text, one subset per line, singletons
    /// annotated with their points.
    pub fn render_text(&self, c: &Constellation) -> String {
        let mut out = String::new();
        self.render_subset(c, 0, 0, &mut out);
        out
    }

    fn render_subset(&self, c: &Constellation, level: u32, index: u16, out: &mut String) {
        let subset = &self.levels[level as usize][index as usize];
        for _ in 0..level {
            out.push_str("  ");
        }
        out.push('{');
        for (i, &l) in subset.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&l.to_string());
        }
        out.push('}');
        if subset.len() == 1 {
            let p = c.point(subset[0]);
            out.push_str(&format!(" -> ({:+.4}, {:+.4})\n", p.re, p.im));
            return;
        }
        out.push_str(&format!(" dmin={:.4}\n", self.delta[level as usize]));
        self.render_subset(c, level + 1, index, out);
        self.render_subset(c, level + 1, index | (1 << level), out);
    }
}

/// Recovers the partition tree of a labeled constellation.
pub fn build_partition_tree(c: &Constellation) -> PartitionTree {
    let m_points = c.size();
    let bits = c.bits;
    let mut levels = Vec::with_capacity(bits as usize + 1);
    for j in 0..=bits {
        let mask = (1u16 << j) - 1;
        let mut subsets = vec![Vec::new(); 1 << j];
        for label in 0..m_points as u16 {
            subsets[(label & mask) as usize].push(label);
        }
        levels.push(subsets);
    }
    let mut delta = Vec::with_capacity(bits as usize);
    for subsets in levels.iter().take(bits as usize) {
        let mut level_min = f64::INFINITY;
        for subset in subsets {
            let pts: Vec<Complex64> = subset.iter().map(|&l| c.point(l)).collect();
            let idx: Vec<u16> = (0..pts.len() as u16).collect();
            level_min = level_min.min(min_dist2(&pts, &idx));
        }
        delta.push(level_min.sqrt());
    }
    PartitionTree {
        bits,
        levels,
        delta,
    }
}

fn min_dist2(points: &[Complex64], subset: &[u16]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            let d = points[i as usize] - points[j as usize];
            best = best.min(d.norm_sqr());
        }
    }
    best
}

/// Splits a subset into two equal halves maximizing the minimum intra-half
/// distance, by exhaustive enumeration. The lowest canonical index is
/// pinned to half A (branch 0); among equally good splits the first in
/// enumeration order wins, so the result is deterministic.
fn split_subset(points: &[Complex64], subset: &[u16]) -> (Vec<u16>, Vec<u16>) {
    let n = subset.len();
    debug_assert!(n >= 2 && n % 2 == 0 && n <= 16);
    if n == 2 {
        return (vec![subset[0]], vec![subset[1]]);
    }
    let picks = n / 2 - 1;
    let mut best_score = f64::NEG_INFINITY;
    let mut best = (Vec::new(), Vec::new());
    for mask in 0u32..(1 << (n - 1)) {
        if mask.count_ones() as usize != picks {
            continue;
        }
        let mut a = Vec::with_capacity(n / 2);
        let mut b = Vec::with_capacity(n / 2);
        a.push(subset[0]);
        for (i, &p) in subset[1..].iter().enumerate() {
            if mask >> i & 1 == 1 {
                a.push(p);
            } else {
                b.push(p);
            }
        }
        let score = min_dist2(points, &a).min(min_dist2(points, &b));
        if score > best_score {
            best_score = score;
            best = (a, b);
        }
    }
    best
}

/// Runs greedy set partitioning and returns `point_of_label`.
fn partition_labels(points: &[Complex64]) -> Vec<u16> {
    let m_points = points.len();
    let bits = m_points.trailing_zeros();
    let mut level: Vec<Vec<u16>> = vec![(0..m_points as u16).collect()];
    for j in 0..bits {
        let mut next = vec![Vec::new(); 1 << (j + 1)];
        for (idx, subset) in level.iter().enumerate() {
            let (a, b) = split_subset(points, subset);
            next[idx] = a;
            next[idx | 1 << j] = b;
        }
        level = next;
    }
    level.iter().map(|s| s[0]).collect()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    /// Independent oracle: recompute delta by brute force from points.
    fn oracle_deltas(c: &Constellation, tree: &PartitionTree) -> Vec<f64> {
        (0..c.bits() as usize)
            .map(|j| {
                let mut level_min = f64::INFINITY;
                for subset in &tree.levels()[j] {
                    for (a, &l1) in subset.iter().enumerate() {
                        for &l2 in &subset[a + 1..] {
                            let d = (c.point(l1) - c.point(l2)).norm();
                            level_min = level_min.min(d);
                        }
                    }
                }
                level_min
            })
            .collect()
    }

    fn all_supported() -> Vec<Constellation> {
        let mut out = Vec::new();
        for &m in &[2usize, 4, 8, 16] {
            out.push(build_constellation(ConstellationKind::Pam, m).unwrap());
            out.push(build_constellation(ConstellationKind::Psk, m).unwrap());
        }
        for &m in &[4usize, 16] {
            out.push(build_constellation(ConstellationKind::Qam, m).unwrap());
        }
        out
    }

    #[test]
    fn psk8_deltas_match_known_values() {
        let c = build_constellation(ConstellationKind::Psk, 8).unwrap();
        let tree = build_partition_tree(&c);
        let expected = [2.0 * (std::f64::consts::PI / 8.0).sin(), 2f64.sqrt(), 2.0];
        assert_eq!(tree.delta().len(), 3);
        for (got, want) in tree.delta().iter().zip(expected) {
            assert!(close(*got, want), "delta {got} vs {want}");
        }
    }

    #[test]
    fn pam4_points_and_deltas() {
        let c = build_constellation(ConstellationKind::Pam, 4).unwrap();
        let s = 5f64.sqrt();
        let expected_pts = [-3.0 / s, -1.0 / s, 1.0 / s, 3.0 / s];
        for (p, want) in c.points_canonical().iter().zip(expected_pts) {
            assert!(close(p.re, want) && p.im == 0.0);
        }
        // All labels map onto the four amplitudes (bijection).
        let mut seen: Vec<f64> = (0..4).map(|l| c.point(l).re).collect();
        seen.sort_by(f64::total_cmp);
        for (got, want) in seen.iter().zip(expected_pts) {
            assert!(close(*got, want));
        }
        let tree = build_partition_tree(&c);
        assert!(close(tree.delta()[0], 2.0 / s));
        assert!(close(tree.delta()[1], 4.0 / s));
    }

    #[test]
    fn bpsk_tree_is_single_level() {
        let c = build_constellation(ConstellationKind::Pam, 2).unwrap();
        let tree = build_partition_tree(&c);
        assert_eq!(tree.delta().len(), 1);
        assert!(close(tree.delta()[0], 2.0));
    }

    #[test]
    fn qam16_deltas_follow_sqrt2_ladder() {
        let c = build_constellation(ConstellationKind::Qam, 16).unwrap();
        let tree = build_partition_tree(&c);
        let s = 10f64.sqrt();
        let expected = [2.0 / s, 2.0 * 2f64.sqrt() / s, 4.0 / s, 4.0 * 2f64.sqrt() / s];
        for (got, want) in tree.delta().iter().zip(expected) {
            assert!(close(*got, want), "delta {got} vs {want}");
        }
    }

    #[test]
    fn label_zero_is_first_canonical_point() {
        for c in all_supported() {
            let p = c.point(0);
            assert!(close(p.re, c.points_canonical()[0].re));
            assert!(close(p.im, c.points_canonical()[0].im));
        }
        // For 8-PSK that point is angle 0.
        let c = build_constellation(ConstellationKind::Psk, 8).unwrap();
        assert!(close(c.point(0).re, 1.0) && close(c.point(0).im, 0.0));
    }

    #[test]
    fn unit_energy_and_bijection() {
        for c in all_supported() {
            let e: f64 = c.points_canonical().iter().map(|p| p.norm_sqr()).sum::<f64>()
                / c.size() as f64;
            assert!((e - 1.0).abs() < EPS, "{} energy {e}", c.name());
            let mut seen = vec![false; c.size()];
            for l in 0..c.size() as u16 {
                let idx = c
                    .points_canonical()
                    .iter()
                    .position(|p| (p - c.point(l)).norm() < 1e-15)
                    .unwrap();
                assert!(!seen[idx], "{}: label {l} repeats a point", c.name());
                seen[idx] = true;
                assert_eq!(c.label_of_canonical(idx), l);
            }
        }
    }

    #[test]
    fn deltas_are_nondecreasing_and_match_oracle() {
        for c in all_supported() {
            let tree = build_partition_tree(&c);
            let oracle = oracle_deltas(&c, &tree);
            for (got, want) in tree.delta().iter().zip(&oracle) {
                assert!(close(*got, *want), "{}: {got} vs {want}", c.name());
            }
            for w in tree.delta().windows(2) {
                assert!(
                    w[1] >= w[0] - EPS,
                    "{}: deltas not monotone: {:?}",
                    c.name(),
                    tree.delta()
                );
            }
        }
    }

    #[test]
    fn subsets_refine_and_indices_follow_low_bits() {
        for c in all_supported() {
            let tree = build_partition_tree(&c);
            let m = c.bits();
            for label in 0..c.size() as u16 {
                for depth in 0..m {
                    let i = tree.subset_index(label, depth).unwrap();
                    let i_next = tree.subset_index(label, depth + 1).unwrap();
                    // Refinement: the deeper subset is contained in the shallower.
                    let coarse = &tree.levels()[depth as usize][i as usize];
                    let fine = &tree.levels()[depth as usize + 1][i_next as usize];
                    assert!(fine.iter().all(|l| coarse.contains(l)));
                    // Index depends only on the `depth` lowest label bits.
                    assert_eq!(i, label & ((1 << depth) - 1));
                }
                assert_eq!(tree.subset_index(label, m).unwrap(), label);
            }
            assert!(tree.subset_index(0, m + 1).is_err());
        }
    }

    #[test]
    fn map_label_follows_lsb_first_convention() {
        let c = build_constellation(ConstellationKind::Psk, 8).unwrap();
        assert!(close(map_label(&c, &[0, 0, 0]).re, 1.0));
        for label in 0..8u16 {
            let bits = [
                (label & 1) as u8,
                (label >> 1 & 1) as u8,
                (label >> 2 & 1) as u8,
            ];
            let p = map_label(&c, &bits);
            assert!((p - c.point(label)).norm() < 1e-15);
        }
    }

    #[test]
    fn unsupported_sizes_are_config_errors() {
        assert!(build_constellation(ConstellationKind::Pam, 3).is_err());
        assert!(build_constellation(ConstellationKind::Psk, 32).is_err());
        assert!(build_constellation(ConstellationKind::Qam, 8).is_err());
        assert!(Constellation::from_name("psk7").is_err());
        assert!(Constellation::from_name("apsk16").is_err());
        assert!(Constellation::from_name("psk8").is_ok());
    }

    #[test]
    fn render_text_lists_every_subset() {
        let c = build_constellation(ConstellationKind::Pam, 4).unwrap();
        let tree = build_partition_tree(&c);
        let text = tree.render_text(&c);
        // 1 + 2 + 4 subsets for m=2.
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("{0 1 2 3}"));
    }
}
