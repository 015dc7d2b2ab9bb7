//! Scenario compilation: node mobility sampling, ray-path ingestion, tap
//! quantization, and the serialized `.twsc` scenario bundle.
//!
//! A scenario holds one [`CirTimeline`] per directed node pair, all on the
//! same update grid, so the emulator can look up the channel between any two
//! active nodes frame by frame.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::{
    db_to_linear_amplitude, CirTimeline, Error, RadioParams, RawCir, RayPath, Result, Tap,
    TapSet, DEFAULT_UPDATE_INTERVAL_SECONDS, MAX_ACTIVE_TAPS, MAX_EXCESS_DELAY_SECONDS,
    TAP_SLOT_COUNT, TAP_SLOT_SECONDS,
};

/// Recommended spatial-consistency limit for trajectory sampling, meters.
pub const COHERENCE_DISTANCE_METERS: f64 = 15.0;

/// Fraction of total path power that may be dropped beyond the excess-delay
/// window before quantization refuses the snapshot.
pub const MAX_DROPPED_POWER_FRACTION: f64 = 0.05;

const TWSC_MAGIC: &[u8; 4] = b"TWSC";
const TWSC_VERSION: u32 = 1;

/// Role of a node in the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Antenna,
    Static,
    Mobile,
}

/// A radio node: fixed infrastructure, static terminal, or mobile terminal
/// with a waypoint trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub kind: NodeKind,
    /// Position in meters (x, y, z). For mobile nodes this is the start.
    pub position: [f64; 3],
    /// Movement speed in m/s; 0 for non-mobile nodes.
    pub speed_mps: f64,
    /// Waypoint polyline in meters; at least two waypoints for mobile nodes.
    #[serde(default)]
    pub trajectory: Vec<[f64; 3]>,
}

impl Node {
    pub fn validate(&self) -> Result<()> {
        if self.position[2] < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "node {} height must be >= 0, got {}",
                self.id, self.position[2]
            )));
        }
        match self.kind {
            NodeKind::Mobile => {
                if self.speed_mps <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "mobile node {} needs speed > 0",
                        self.id
                    )));
                }
                if self.trajectory.len() < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "mobile node {} needs a trajectory with >= 2 waypoints",
                        self.id
                    )));
                }
                if self.trajectory.iter().any(|w| w[2] < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "node {} trajectory dips below ground",
                        self.id
                    )));
                }
            }
            NodeKind::Antenna | NodeKind::Static => {
                if self.speed_mps != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "non-mobile node {} must have speed 0",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Positions along a mobile node's polyline spaced `speed * Ts` apart,
/// starting at the first waypoint; the final partial step lands exactly on
/// the endpoint.
pub fn sample_trajectory(node: &Node, sampling_interval: f64) -> Result<Vec<[f64; 3]>> {
    node.validate()?;
    if node.kind != NodeKind::Mobile {
        return Err(Error::InvalidArgument(format!(
            "node {} is not mobile",
            node.id
        )));
    }
    if !(sampling_interval > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling interval must be > 0, got {sampling_interval}"
        )));
    }
    let spacing = node.speed_mps * sampling_interval;

    // cumulative arc length per waypoint
    let mut cum = Vec::with_capacity(node.trajectory.len());
    let mut total = 0.0;
    cum.push(0.0);
    for pair in node.trajectory.windows(2) {
        let d = dist3(pair[0], pair[1]);
        total += d;
        cum.push(total);
    }
    if total <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "node {} trajectory has zero length",
            node.id
        )));
    }
    if spacing > COHERENCE_DISTANCE_METERS {
        log::warn!(
            "node {}: sample spacing {:.2} m exceeds the {:.0} m coherence distance",
            node.id,
            spacing,
            COHERENCE_DISTANCE_METERS
        );
    }

    let eps = 1e-9 * total.max(1.0);
    let mut out = Vec::new();
    let mut s = 0.0;
    while s < total - eps {
        out.push(point_at_arc(&node.trajectory, &cum, s));
        s += spacing;
    }
    out.push(point_at_arc(&node.trajectory, &cum, total));
    Ok(out)
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn point_at_arc(waypoints: &[[f64; 3]], cum: &[f64], s: f64) -> [f64; 3] {
    let total = *cum.last().unwrap();
    let s = s.clamp(0.0, total);
    // segment containing s
    let seg = match cum.binary_search_by(|c| c.total_cmp(&s)) {
        Ok(i) => i.min(waypoints.len() - 2),
        Err(i) => i - 1,
    };
    let seg = seg.min(waypoints.len() - 2);
    let seg_len = cum[seg + 1] - cum[seg];
    let frac = if seg_len > 0.0 { (s - cum[seg]) / seg_len } else { 0.0 };
    let a = waypoints[seg];
    let b = waypoints[seg + 1];
    [
        a[0] + (b[0] - a[0]) * frac,
        a[1] + (b[1] - a[1]) * frac,
        a[2] + (b[2] - a[2]) * frac,
    ]
}

/// One row of a ray-tracer export: a single path of a single link snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPathRecord {
    pub t_s: f64,
    pub tx: u32,
    pub rx: u32,
    pub toa_s: f64,
    pub gain_db: f64,
    pub phase_rad: f64,
}

/// Parsed ray-tracer export: the ingestion boundary for external tools.
///
/// CSV schema: `t_s,tx,rx,toa_s,gain_db,phase_rad`.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPathFile {
    records: Vec<RayPathRecord>,
}

impl RayPathFile {
    /// Wraps pre-parsed records, checking that timestamps are non-decreasing
    /// per link.
    pub fn new(records: Vec<RayPathRecord>) -> Result<Self> {
        let mut last_t: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for r in &records {
            if !r.t_s.is_finite()
                || !r.toa_s.is_finite()
                || !r.gain_db.is_finite()
                || !r.phase_rad.is_finite()
            {
                return Err(Error::InvalidArgument(format!(
                    "non-finite field in ray-path record {r:?}"
                )));
            }
            let key = (r.tx, r.rx);
            if let Some(&prev) = last_t.get(&key) {
                if r.t_s < prev {
                    return Err(Error::InvalidArgument(format!(
                        "timestamps for link {}->{} decrease: {} after {}",
                        r.tx, r.rx, r.t_s, prev
                    )));
                }
            }
            last_t.insert(key, r.t_s);
        }
        Ok(Self { records })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let mut records = Vec::new();
        for row in rdr.deserialize::<RayPathRecord>() {
            match row {
                Ok(r) => records.push(r),
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    return Err(Error::RayPathCsv {
                        line,
                        message: e.to_string(),
                    });
                }
            }
        }
        Self::new(records)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn records(&self) -> &[RayPathRecord] {
        &self.records
    }
}

/// Per-link channel snapshots keyed by directed link, ordered by timestamp.
pub type LinkSamples = BTreeMap<(u32, u32), Vec<RawCir>>;

/// Groups ray-path records into one [`RawCir`] per link per timestamp and
/// converts dB gain + phase into complex linear path coefficients.
///
/// Every link must be sampled at every timestamp seen in the file; a gap
/// breaks channel synchronization and is rejected.
pub fn parse_ray_paths(file: &RayPathFile) -> Result<LinkSamples> {
    let mut grouped: BTreeMap<(u32, u32), BTreeMap<u64, Vec<RayPath>>> = BTreeMap::new();
    for r in file.records() {
        if r.tx == r.rx {
            return Err(Error::InvalidArgument(format!(
                "self-link {}->{} in ray-path file",
                r.tx, r.rx
            )));
        }
        let gain = db_to_linear_amplitude(r.gain_db)?
            * Complex64::new(r.phase_rad.cos(), r.phase_rad.sin());
        let per_link = grouped.entry((r.tx, r.rx)).or_default();
        let paths = per_link.entry(r.t_s.to_bits()).or_default();
        if paths.iter().any(|p| p.toa_s == r.toa_s) {
            return Err(Error::DuplicateRayPath {
                tx: r.tx,
                rx: r.rx,
                timestamp_s: r.t_s,
                toa_s: r.toa_s,
            });
        }
        paths.push(RayPath {
            toa_s: r.toa_s,
            gain,
        });
    }

    // synchronization: all links share the same timestamp grid
    let all_stamps: BTreeSet<u64> = grouped.values().flat_map(|m| m.keys().copied()).collect();
    for (&(tx, rx), per_link) in &grouped {
        for &t in &all_stamps {
            if !per_link.contains_key(&t) {
                return Err(Error::MissingLinkSample {
                    tx,
                    rx,
                    timestamp_s: f64::from_bits(t),
                });
            }
        }
    }

    let mut out = LinkSamples::new();
    for ((tx, rx), per_link) in grouped {
        let mut cirs = Vec::with_capacity(per_link.len());
        for (t_bits, paths) in per_link {
            cirs.push(RawCir::new(f64::from_bits(t_bits), paths)?);
        }
        cirs.sort_by(|a, b| a.timestamp().total_cmp(&b.timestamp()));
        out.insert((tx, rx), cirs);
    }
    Ok(out)
}

/// Output of [`quantize_taps`]: the tap snapshot plus bookkeeping on what
/// had to be discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTaps {
    pub taps: TapSet,
    /// Absolute propagation delay of the first arrival, mapped to slot 0.
    pub first_arrival_s: f64,
    /// Paths dropped beyond the excess-delay window.
    pub dropped_paths: usize,
    /// Power fraction carried by the dropped paths.
    pub dropped_power_fraction: f64,
}

/// Reduces an arbitrary-multipath snapshot to at most [`MAX_ACTIVE_TAPS`]
/// taps on the 10 ns slot grid.
///
/// The earliest arrival maps to slot 0 and its absolute delay is reported
/// separately. Paths are clustered on the delay axis by power-weighted
/// 1-D k-means (k-means++ seeding, fixed seed, 50 iterations); each cluster
/// becomes one tap with the coherent (complex) sum of its member gains at
/// the power-weighted mean delay rounded to the nearest slot. Clusters that
/// round to the same slot merge.
pub fn quantize_taps(raw: &RawCir) -> Result<QuantizedTaps> {
    if raw.paths().is_empty() {
        return Err(Error::InvalidArgument(
            "cannot quantize an empty channel snapshot".into(),
        ));
    }
    let first_arrival_s = raw.paths()[0].toa_s;
    let total_power = raw.total_power();
    if total_power <= 0.0 {
        return Err(Error::InvalidArgument(
            "channel snapshot has zero total power".into(),
        ));
    }

    let mut kept: Vec<(f64, Complex64)> = Vec::with_capacity(raw.path_count());
    let mut dropped_paths = 0usize;
    let mut dropped_power = 0.0;
    for p in raw.paths() {
        let excess = p.toa_s - first_arrival_s;
        if excess > MAX_EXCESS_DELAY_SECONDS {
            dropped_paths += 1;
            dropped_power += p.gain.norm_sqr();
        } else {
            kept.push((excess, p.gain));
        }
    }
    let dropped_power_fraction = dropped_power / total_power;
    if dropped_power_fraction > MAX_DROPPED_POWER_FRACTION {
        return Err(Error::ExcessDelayPowerLoss {
            dropped_fraction: dropped_power_fraction * 100.0,
            max_excess_us: MAX_EXCESS_DELAY_SECONDS * 1e6,
        });
    }
    if dropped_paths > 0 {
        log::warn!(
            "dropped {dropped_paths} paths ({:.2}% of power) beyond the excess-delay window",
            dropped_power_fraction * 100.0
        );
    }

    let delays: Vec<f64> = kept.iter().map(|(d, _)| *d).collect();
    let weights: Vec<f64> = kept.iter().map(|(_, g)| g.norm_sqr()).collect();
    let k = kept.len().min(MAX_ACTIVE_TAPS);
    let assignment = weighted_kmeans_1d(&delays, &weights, k, 50);

    // cluster -> (coherent gain, power-weighted mean delay), merged by slot
    let mut by_slot: BTreeMap<u16, Complex64> = BTreeMap::new();
    for cluster in 0..k {
        let mut gain = Complex64::new(0.0, 0.0);
        let mut w_sum = 0.0;
        let mut wd_sum = 0.0;
        for (i, &(delay, g)) in kept.iter().enumerate() {
            if assignment[i] == cluster {
                gain += g;
                let w = g.norm_sqr();
                w_sum += w;
                wd_sum += w * delay;
            }
        }
        if w_sum == 0.0 {
            continue; // cluster got no members (duplicate seeds on tied delays)
        }
        let centroid = wd_sum / w_sum;
        let slot = ((centroid / TAP_SLOT_SECONDS).round() as usize).min(TAP_SLOT_COUNT - 1) as u16;
        *by_slot.entry(slot).or_insert(Complex64::new(0.0, 0.0)) += gain;
    }

    let taps: Vec<Tap> = by_slot
        .into_iter()
        .map(|(slot, gain)| Tap::new(slot, gain))
        .collect::<Result<_>>()?;
    Ok(QuantizedTaps {
        taps: TapSet::new(taps)?,
        first_arrival_s,
        dropped_paths,
        dropped_power_fraction,
    })
}

/// Power-weighted 1-D k-means with k-means++ seeding and a fixed seed, so
/// quantization is reproducible across runs and platforms.
fn weighted_kmeans_1d(values: &[f64], weights: &[f64], k: usize, max_iter: usize) -> Vec<usize> {
    let n = values.len();
    debug_assert!(k >= 1 && k <= n);
    if k == n {
        // Every point its own cluster; skip the seeding lottery.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut assignment = vec![0usize; n];
        for (cluster, &idx) in order.iter().enumerate() {
            assignment[idx] = cluster;
        }
        return assignment;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x7A11_C0DE);
    let mut centroids = Vec::with_capacity(k);

    // k-means++: first seed by weight, then by weight * squared distance.
    centroids.push(values[weighted_pick(&mut rng, weights)]);
    while centroids.len() < k {
        let scores: Vec<f64> = values
            .iter()
            .zip(weights)
            .map(|(&v, &w)| {
                let d = centroids
                    .iter()
                    .map(|&c| (v - c).abs())
                    .fold(f64::INFINITY, f64::min);
                w * d * d
            })
            .collect();
        if scores.iter().sum::<f64>() <= 0.0 {
            // all remaining points coincide with existing centroids
            centroids.push(values[0]);
            continue;
        }
        centroids.push(values[weighted_pick(&mut rng, &scores)]);
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, &v) in values.iter().enumerate() {
            let best = centroids
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (v - *a).abs().total_cmp(&(v - *b).abs()))
                .map(|(j, _)| j)
                .unwrap();
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        for (j, centroid) in centroids.iter_mut().enumerate() {
            let mut w_sum = 0.0;
            let mut wv_sum = 0.0;
            for (i, &v) in values.iter().enumerate() {
                if assignment[i] == j {
                    w_sum += weights[i];
                    wv_sum += weights[i] * v;
                }
            }
            if w_sum > 0.0 {
                *centroid = wv_sum / w_sum;
            }
        }
        if !changed {
            break;
        }
    }
    assignment
}

fn weighted_pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let threshold = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if acc >= threshold {
            return i;
        }
    }
    weights.len() - 1
}

/// Bundle metadata: provenance plus the grid constants used at build time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    pub name: String,
    /// Free-form creation parameters echoed by the builder.
    #[serde(default)]
    pub creation: serde_json::Value,
    /// Tap slot width in seconds; the single override point for the grid.
    pub slot_seconds: f64,
    pub slot_count: usize,
    pub coherence_distance_m: f64,
    /// Absolute first-arrival delay per link per frame, seconds, keyed
    /// `"tx->rx"`. Taps are stored relative to these.
    #[serde(default)]
    pub first_arrival_s: BTreeMap<String, Vec<f64>>,
}

impl ScenarioMetadata {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            creation: serde_json::Value::Null,
            slot_seconds: TAP_SLOT_SECONDS,
            slot_count: TAP_SLOT_COUNT,
            coherence_distance_m: COHERENCE_DISTANCE_METERS,
            first_arrival_s: BTreeMap::new(),
        }
    }
}

/// A complete emulation scenario: nodes, radio parameters, and one channel
/// timeline per directed node pair, all sharing one update grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    nodes: Vec<Node>,
    radio: RadioParams,
    sampling_interval: f64,
    links: BTreeMap<(u32, u32), CirTimeline>,
    metadata: ScenarioMetadata,
}

impl Scenario {
    pub fn new(
        nodes: Vec<Node>,
        radio: RadioParams,
        sampling_interval: f64,
        links: BTreeMap<(u32, u32), CirTimeline>,
        metadata: ScenarioMetadata,
    ) -> Result<Self> {
        radio.validate()?;
        if !(sampling_interval > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling interval must be > 0, got {sampling_interval}"
            )));
        }
        let mut ids = BTreeSet::new();
        for n in &nodes {
            n.validate()?;
            if !ids.insert(n.id) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate node id {}",
                    n.id
                )));
            }
        }
        // completeness: every ordered pair of distinct nodes
        for &a in &ids {
            for &b in &ids {
                if a != b && !links.contains_key(&(a, b)) {
                    return Err(Error::MissingLinkSample {
                        tx: a,
                        rx: b,
                        timestamp_s: 0.0,
                    });
                }
            }
        }
        for key in links.keys() {
            if !ids.contains(&key.0) || !ids.contains(&key.1) {
                return Err(Error::UnknownNode(if ids.contains(&key.0) {
                    key.1
                } else {
                    key.0
                }));
            }
        }
        // uniform update grid
        if let Some(first) = links.values().next() {
            let (ui, fc) = (first.update_interval(), first.frame_count());
            for tl in links.values() {
                if tl.update_interval() != ui || tl.frame_count() != fc {
                    return Err(Error::InvalidArgument(
                        "all link timelines must share update interval and frame count".into(),
                    ));
                }
            }
        }
        Ok(Self {
            nodes,
            radio,
            sampling_interval,
            links,
            metadata,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_ids(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    pub fn radio(&self) -> &RadioParams {
        &self.radio
    }

    pub fn sampling_interval(&self) -> f64 {
        self.sampling_interval
    }

    pub fn links(&self) -> &BTreeMap<(u32, u32), CirTimeline> {
        &self.links
    }

    pub fn link(&self, tx: u32, rx: u32) -> Result<&CirTimeline> {
        self.links
            .get(&(tx, rx))
            .ok_or(Error::MissingLinkSample {
                tx,
                rx,
                timestamp_s: 0.0,
            })
    }

    pub fn metadata(&self) -> &ScenarioMetadata {
        &self.metadata
    }

    pub fn update_interval(&self) -> f64 {
        self.links
            .values()
            .next()
            .map(|tl| tl.update_interval())
            .unwrap_or(DEFAULT_UPDATE_INTERVAL_SECONDS)
    }

    pub fn frame_count(&self) -> usize {
        self.links
            .values()
            .next()
            .map(|tl| tl.frame_count())
            .unwrap_or(0)
    }

    /// Serializes the bundle: JSON header plus a little-endian binary tap
    /// section, deterministic for identical inputs.
    pub fn write_twsc<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            format_version: u32,
            nodes: &'a [Node],
            radio: &'a RadioParams,
            sampling_interval_s: f64,
            update_interval_s: f64,
            frame_count: usize,
            links: Vec<(u32, u32)>,
            metadata: &'a ScenarioMetadata,
        }
        let header = Header {
            format_version: TWSC_VERSION,
            nodes: &self.nodes,
            radio: &self.radio,
            sampling_interval_s: self.sampling_interval,
            update_interval_s: self.update_interval(),
            frame_count: self.frame_count(),
            links: self.links.keys().copied().collect(),
            metadata: &self.metadata,
        };
        let header_bytes = serde_json::to_vec(&header)?;
        w.write_all(TWSC_MAGIC)?;
        w.write_all(&TWSC_VERSION.to_le_bytes())?;
        w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        w.write_all(&header_bytes)?;
        for timeline in self.links.values() {
            for frame in timeline.frames() {
                w.write_all(&[frame.taps().len() as u8])?;
                for tap in frame.taps() {
                    w.write_all(&tap.delay_slot().to_le_bytes())?;
                    w.write_all(&tap.gain().re.to_le_bytes())?;
                    w.write_all(&tap.gain().im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_twsc(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_twsc<R: Read>(mut r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
            nodes: Vec<Node>,
            radio: RadioParams,
            sampling_interval_s: f64,
            update_interval_s: f64,
            frame_count: usize,
            links: Vec<(u32, u32)>,
            metadata: ScenarioMetadata,
        }
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != TWSC_MAGIC {
            return Err(Error::BadBundle("bad magic; not a .twsc bundle".into()));
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)?;
        let version = u32::from_le_bytes(buf4);
        if version != TWSC_VERSION {
            return Err(Error::BadBundle(format!(
                "unsupported bundle version {version} (expected {TWSC_VERSION})"
            )));
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let header_len = u64::from_le_bytes(buf8) as usize;
        let mut header_bytes = vec![0u8; header_len];
        r.read_exact(&mut header_bytes)?;
        let header: Header = serde_json::from_slice(&header_bytes)?;
        if header.format_version != version {
            return Err(Error::BadBundle("header/container version mismatch".into()));
        }

        let mut links = BTreeMap::new();
        for &(tx, rx) in &header.links {
            let mut frames = Vec::with_capacity(header.frame_count);
            for _ in 0..header.frame_count {
                let mut count = [0u8; 1];
                r.read_exact(&mut count)?;
                let mut taps = Vec::with_capacity(count[0] as usize);
                for _ in 0..count[0] {
                    let mut slot = [0u8; 2];
                    r.read_exact(&mut slot)?;
                    r.read_exact(&mut buf8)?;
                    let re = f64::from_le_bytes(buf8);
                    r.read_exact(&mut buf8)?;
                    let im = f64::from_le_bytes(buf8);
                    taps.push(Tap::new(u16::from_le_bytes(slot), Complex64::new(re, im))?);
                }
                frames.push(TapSet::new(taps)?);
            }
            links.insert(
                (tx, rx),
                CirTimeline::new(header.update_interval_s, frames)?,
            );
        }
        Scenario::new(
            header.nodes,
            header.radio,
            header.sampling_interval_s,
            links,
            header.metadata,
        )
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_twsc(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Compiles per-link channel samples into a full scenario on the 1 ms
/// update grid.
///
/// Ray samples sparser than the update interval are held (zero-order hold):
/// frame `k` carries the latest sample taken at or before its start time.
pub fn build_scenario(
    nodes: Vec<Node>,
    radio: RadioParams,
    samples: &LinkSamples,
    sampling_interval: f64,
    name: &str,
) -> Result<Scenario> {
    if nodes.is_empty() {
        return Err(Error::InvalidArgument(
            "scenario needs at least one node".into(),
        ));
    }
    if !(sampling_interval > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling interval must be > 0, got {sampling_interval}"
        )));
    }
    let ids: Vec<u32> = nodes.iter().map(|n| n.id).collect();

    // coverage: every directed pair, identical timestamp grids
    let mut reference_grid: Option<Vec<f64>> = None;
    for &tx in &ids {
        for &rx in &ids {
            if tx == rx {
                continue;
            }
            let cirs = samples.get(&(tx, rx)).ok_or(Error::MissingLinkSample {
                tx,
                rx,
                timestamp_s: 0.0,
            })?;
            if cirs.is_empty() {
                return Err(Error::MissingLinkSample {
                    tx,
                    rx,
                    timestamp_s: 0.0,
                });
            }
            let grid: Vec<f64> = cirs.iter().map(|c| c.timestamp()).collect();
            match &reference_grid {
                None => reference_grid = Some(grid),
                Some(reference) => {
                    if let Some(&missing) =
                        reference.iter().find(|t| !grid.contains(t)).or_else(|| {
                            if reference.len() != grid.len() {
                                grid.first()
                            } else {
                                None
                            }
                        })
                    {
                        return Err(Error::MissingLinkSample {
                            tx,
                            rx,
                            timestamp_s: missing,
                        });
                    }
                }
            }
        }
    }
    let grid = reference_grid.ok_or_else(|| {
        Error::InvalidArgument("scenario needs at least two nodes to form a link".into())
    })?;

    let t_first = grid[0];
    let t_last = *grid.last().unwrap();
    let update = DEFAULT_UPDATE_INTERVAL_SECONDS;
    let duration = (t_last - t_first) + sampling_interval;
    let frame_count = ((duration / update).round() as usize).max(1);

    let mut links = BTreeMap::new();
    let mut first_arrivals = BTreeMap::new();
    for (&(tx, rx), cirs) in samples {
        if !ids.contains(&tx) || !ids.contains(&rx) {
            return Err(Error::UnknownNode(if ids.contains(&tx) { rx } else { tx }));
        }
        let quantized: Vec<QuantizedTaps> =
            cirs.iter().map(quantize_taps).collect::<Result<_>>()?;
        let mut frames = Vec::with_capacity(frame_count);
        let mut arrivals = Vec::with_capacity(frame_count);
        for k in 0..frame_count {
            let frame_time = t_first + k as f64 * update;
            // latest sample at or before the frame start (zero-order hold)
            let idx = grid.partition_point(|&t| t <= frame_time + 1e-12);
            let idx = idx.saturating_sub(1);
            frames.push(quantized[idx].taps.clone());
            arrivals.push(quantized[idx].first_arrival_s);
        }
        links.insert((tx, rx), CirTimeline::new(update, frames)?);
        first_arrivals.insert(format!("{tx}->{rx}"), arrivals);
    }

    let mut metadata = ScenarioMetadata::named(name);
    metadata.first_arrival_s = first_arrivals;
    metadata.creation = serde_json::json!({
        "sampling_interval_s": sampling_interval,
        "ray_timestamps": grid.len(),
    });
    Scenario::new(nodes, radio, sampling_interval, links, metadata)
}

/// Path-loss matrix for one frame, in dB loss: entry `(i, j)` is
/// `-10 log10(total tap power)` of link `i -> j` in node order; the diagonal
/// and silent links are `None`.
pub fn pathloss_matrix(scenario: &Scenario, frame: usize) -> Result<Vec<Vec<Option<f64>>>> {
    if frame >= scenario.frame_count() {
        return Err(Error::InvalidArgument(format!(
            "frame {frame} outside timeline of {} frames",
            scenario.frame_count()
        )));
    }
    let ids = scenario.node_ids();
    let mut matrix = vec![vec![None; ids.len()]; ids.len()];
    for (i, &tx) in ids.iter().enumerate() {
        for (j, &rx) in ids.iter().enumerate() {
            if i == j {
                continue;
            }
            let power = scenario.link(tx, rx)?.frames()[frame].total_power();
            matrix[i][j] = if power > 0.0 {
                Some(-10.0 * power.log10())
            } else {
                None
            };
        }
    }
    Ok(matrix)
}
