//! Wireless network model under the physical (SINR) interference model.
//!
//! A network is a set of nodes in the plane plus directed links. A set of
//! links can transmit in the same slot when every member's signal-to-
//! interference-and-noise ratio stays at or above the threshold `beta`:
//!
//! ```text
//! SINR(e, S) = (P / d(s_e, r_e)^alpha)
//!            / (gamma + sum over f in S\{e} of P / d(s_f, r_e)^alpha)
//! ```
//!
//! All SINR decisions are made in exact rational arithmetic. For the
//! default `alpha = 4` (any even integer `alpha`) the distance powers are
//! themselves rational in the coordinates, so every quantity in the model
//! is exact end to end.
//!
//! Besides the exact values, the network precomputes conservative integer
//! bounds (fixed-point with 80 fractional bits) for each gain and each
//! per-link interference budget. The matching enumerator uses them to
//! decide the vast majority of feasibility queries with integer adds and
//! compares alone, falling back to exact rationals only when the bounds
//! straddle the threshold. The bounds are precomputed once, so the fast
//! path is exactly as deterministic as the slow one.

use crate::exact::{dec_number, dec_string, Dec, Rat};
use crate::linkset::{LinkSet, MAX_LINKS};
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use rand_core::Rng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Physical-layer parameters. All values are exact decimals; power and
/// noise floor are in milliwatts, `beta` is a plain ratio, `alpha` the
/// path-loss exponent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysParams {
    #[serde(with = "dec_number")]
    pub power_mw: Dec,
    #[serde(with = "dec_number")]
    pub noise_mw: Dec,
    #[serde(with = "dec_number")]
    pub beta: Dec,
    #[serde(with = "dec_number")]
    pub alpha: Dec,
}

impl Default for PhysParams {
    /// 300 mW transmit power, 8e-11 mW noise floor, 25 dB SINR threshold
    /// (ratio 316.23), path-loss exponent 4.
    fn default() -> PhysParams {
        PhysParams {
            power_mw: Dec::new(300, 0),
            noise_mw: Dec::new(8, -11),
            beta: Dec::new(31623, -2),
            alpha: Dec::new(4, 0),
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.power_mw.is_positive() {
            return Err(ModelError::InvalidParams("power must be positive".into()));
        }
        if !self.noise_mw.is_positive() {
            return Err(ModelError::InvalidParams("noise floor must be positive".into()));
        }
        if self.beta.to_rat() <= Rat::from_integer(1.into()) {
            return Err(ModelError::InvalidParams("beta must exceed 1".into()));
        }
        if self.alpha.to_rat() <= Rat::from_integer(2.into()) {
            return Err(ModelError::InvalidParams("alpha must exceed 2".into()));
        }
        Ok(())
    }

    /// `alpha / 2` when `alpha` is an even integer; exact distance powers
    /// are available exactly in that case.
    pub fn alpha_half_even(&self) -> Option<u32> {
        let a = self.alpha.to_u32()?;
        (a % 2 == 0).then_some(a / 2)
    }

    /// Longest viable link length `(P / (beta gamma))^(1/alpha)` in meters,
    /// for display only.
    pub fn connection_radius_m(&self) -> f64 {
        let limit = self.max_dist_pow();
        let alpha = self.alpha.to_rat().to_f64().unwrap_or(f64::NAN);
        limit.to_f64().unwrap_or(f64::NAN).powf(1.0 / alpha)
    }

    /// `P / (beta gamma)`, the largest admissible `d^alpha` for a link.
    pub fn max_dist_pow(&self) -> Rat {
        self.power_mw.to_rat() / (self.beta.to_rat() * self.noise_mw.to_rat())
    }

    /// Raises a squared distance to `alpha/2`. Exact for even integer
    /// `alpha`; otherwise the nearest double, re-read as a rational so that
    /// downstream arithmetic stays deterministic.
    pub(crate) fn dist_pow(&self, d2: &Rat) -> Result<Rat, ModelError> {
        if let Some(half) = self.alpha_half_even() {
            let mut acc = Rat::from_integer(1.into());
            for _ in 0..half {
                acc *= d2;
            }
            return Ok(acc);
        }
        let alpha = self.alpha.to_rat().to_f64().ok_or_else(|| {
            ModelError::InvalidParams("alpha out of floating range".into())
        })?;
        let d2f = d2.to_f64().ok_or_else(|| {
            ModelError::InvalidNetwork("distance out of floating range".into())
        })?;
        let p = d2f.powf(alpha / 2.0);
        Rat::from_f64(p)
            .ok_or_else(|| ModelError::InvalidNetwork("non-finite distance power".into()))
    }
}

/// A node with exact planar coordinates in meters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    #[serde(with = "dec_string")]
    pub x: Dec,
    #[serde(with = "dec_string")]
    pub y: Dec,
}

/// A directed communication request from `sender` to `receiver`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: u32,
    pub sender: u32,
    pub receiver: u32,
}

/// Errors from model construction and queries.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("unknown link index {0}")]
    UnknownLink(u32),
    #[error("link {0} is not a member of the given set")]
    LinkNotInSet(u32),
    #[error("the empty set has no feasibility status")]
    EmptyLinkSet,
    #[error("network has {0} links, beyond the {MAX_LINKS}-link set capacity")]
    TooManyLinks(usize),
    #[error("network file: {0}")]
    Format(String),
}

/// Fixed-point scale for the conservative integer bounds: 80 fractional
/// bits keep roughly 16 significant decimal digits around the default
/// noise floor while leaving ample headroom in `i128` sums.
const FIXED_SHIFT: u32 = 80;
/// Magnitude cap for stored bounds; sums of up to 128 capped terms stay
/// far from `i128` overflow.
const FIXED_CAP: i128 = 1 << 110;

fn fixed_floor(r: &Rat) -> i128 {
    use num_integer::Integer;
    let scaled = (r.numer() << FIXED_SHIFT).div_floor(r.denom());
    match i128::try_from(&scaled) {
        Ok(v) => v.min(FIXED_CAP),
        Err(_) => {
            // Validated parameters keep every bounded quantity far above
            // the negative overflow range.
            debug_assert!(!scaled.is_negative());
            FIXED_CAP
        }
    }
}

fn fixed_ceil(r: &Rat) -> i128 {
    use num_integer::Integer;
    let scaled = (r.numer() << FIXED_SHIFT).div_ceil(r.denom());
    match i128::try_from(&scaled) {
        Ok(v) if v <= FIXED_CAP => v,
        _ => i128::MAX,
    }
}

/// Conservative integer bounds used by the hot feasibility path.
pub(crate) struct FastBounds {
    /// Per ordered node pair `(a, b)`: bounds on `P / d(a,b)^alpha`,
    /// flattened as `a * n_nodes + b`. Lower bounds are clamped into
    /// `[0, CAP]`; upper bounds saturate to `i128::MAX` when out of range.
    pub gain_lo: Vec<i128>,
    pub gain_hi: Vec<i128>,
    /// Per link: bounds on the interference budget
    /// `P / (beta d_e^alpha) - gamma`.
    pub theta_lo: Vec<i128>,
    pub theta_hi: Vec<i128>,
}

/// A concrete network instance with all exact caches in place.
pub struct Network {
    params: PhysParams,
    side_m: Dec,
    seed: Option<u64>,
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// `d(a, b)^alpha` per ordered node pair, flattened.
    dist_pow: Vec<Rat>,
    /// `P / d(a, b)^alpha` per ordered node pair, flattened.
    gain: Vec<Rat>,
    /// Per link: interference budget `P / (beta d_e^alpha) - gamma`.
    /// `S` is feasible for `e` exactly when the foreign interference at
    /// `r_e` stays at or below this value.
    theta: Vec<Rat>,
    /// Per link: the links sharing a node with it (self included), when
    /// the network fits the 128-link set capacity.
    conflict: Option<Vec<LinkSet>>,
    fast: FastBounds,
}

impl Network {
    /// Builds a network from explicit parts, validating everything: ids
    /// must be dense and in order, coordinates pairwise distinct, at most
    /// one link per node pair, and every link viable on its own.
    pub fn from_parts(
        params: PhysParams,
        side_m: Dec,
        seed: Option<u64>,
        nodes: Vec<Node>,
        links: Vec<Link>,
    ) -> Result<Network, ModelError> {
        params.validate()?;
        if !side_m.is_positive() {
            return Err(ModelError::InvalidNetwork("side length must be positive".into()));
        }
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.id as usize != i {
                return Err(ModelError::InvalidNetwork(format!(
                    "node ids must be 0..{n} in order, found {} at position {i}",
                    node.id
                )));
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                if nodes[a].x == nodes[b].x && nodes[a].y == nodes[b].y {
                    return Err(ModelError::InvalidNetwork(format!(
                        "nodes {a} and {b} share coordinates"
                    )));
                }
            }
        }

        let mut dist_pow = vec![Rat::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                if b < a {
                    dist_pow[a * n + b] = dist_pow[b * n + a].clone();
                    continue;
                }
                let dx = nodes[a].x.to_rat() - nodes[b].x.to_rat();
                let dy = nodes[a].y.to_rat() - nodes[b].y.to_rat();
                let d2 = &dx * &dx + &dy * &dy;
                dist_pow[a * n + b] = params.dist_pow(&d2)?;
            }
        }

        let power = params.power_mw.to_rat();
        let noise = params.noise_mw.to_rat();
        let beta = params.beta.to_rat();
        let max_dist_pow = params.max_dist_pow();

        let mut seen_pairs = HashSet::new();
        for (i, link) in links.iter().enumerate() {
            if link.id as usize != i {
                return Err(ModelError::InvalidNetwork(format!(
                    "link ids must be 0..{} in order, found {} at position {i}",
                    links.len(),
                    link.id
                )));
            }
            let (s, r) = (link.sender as usize, link.receiver as usize);
            if s >= n || r >= n {
                return Err(ModelError::InvalidNetwork(format!(
                    "link {i} references a missing node"
                )));
            }
            if s == r {
                return Err(ModelError::InvalidNetwork(format!(
                    "link {i} has identical endpoints"
                )));
            }
            if !seen_pairs.insert((s.min(r), s.max(r))) {
                return Err(ModelError::InvalidNetwork(format!(
                    "nodes {} and {} carry more than one link",
                    s.min(r),
                    s.max(r)
                )));
            }
            if dist_pow[s * n + r] > max_dist_pow {
                return Err(ModelError::InvalidNetwork(format!(
                    "link {i} is longer than the connection radius"
                )));
            }
        }

        let mut gain = vec![Rat::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    gain[a * n + b] = &power / &dist_pow[a * n + b];
                }
            }
        }

        let theta: Vec<Rat> = links
            .iter()
            .map(|l| {
                let g = &gain[l.sender as usize * n + l.receiver as usize];
                g / &beta - &noise
            })
            .collect();
        debug_assert!(theta.iter().all(|t| !t.is_negative()));

        let conflict = if links.len() <= MAX_LINKS as usize {
            let mut masks = vec![LinkSet::EMPTY; links.len()];
            for (i, a) in links.iter().enumerate() {
                for (j, b) in links.iter().enumerate() {
                    let touch = a.sender == b.sender
                        || a.sender == b.receiver
                        || a.receiver == b.sender
                        || a.receiver == b.receiver;
                    if touch {
                        masks[i] = masks[i].with(j as u32);
                    }
                }
            }
            Some(masks)
        } else {
            None
        };

        let fast = FastBounds {
            gain_lo: gain.iter().map(fixed_floor).collect(),
            gain_hi: gain.iter().map(fixed_ceil).collect(),
            theta_lo: theta.iter().map(fixed_floor).collect(),
            theta_hi: theta.iter().map(fixed_ceil).collect(),
        };

        Ok(Network {
            params,
            side_m,
            seed,
            nodes,
            links,
            dist_pow,
            gain,
            theta,
            conflict,
            fast,
        })
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn side_m(&self) -> &Dec {
        &self.side_m
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// `d(a, b)^alpha` for distinct node indices.
    pub fn dist_pow(&self, a: u32, b: u32) -> &Rat {
        &self.dist_pow[a as usize * self.nodes.len() + b as usize]
    }

    /// `P / d(a, b)^alpha` for distinct node indices.
    pub(crate) fn gain(&self, a: u32, b: u32) -> &Rat {
        &self.gain[a as usize * self.nodes.len() + b as usize]
    }

    pub(crate) fn gain_index(&self, a: u32, b: u32) -> usize {
        a as usize * self.nodes.len() + b as usize
    }

    /// Interference budget of link `e`: the largest total foreign power
    /// its receiver tolerates while keeping `SINR >= beta`.
    pub(crate) fn theta(&self, e: u32) -> &Rat {
        &self.theta[e as usize]
    }

    pub(crate) fn fast(&self) -> &FastBounds {
        &self.fast
    }

    /// Links sharing a node with each link, available when the network
    /// fits in a `LinkSet`.
    pub(crate) fn conflicts(&self) -> Option<&[LinkSet]> {
        self.conflict.as_deref()
    }

    fn check_link(&self, e: u32) -> Result<(), ModelError> {
        if (e as usize) < self.links.len() {
            Ok(())
        } else {
            Err(ModelError::UnknownLink(e))
        }
    }

    /// Exact SINR of link `e` within the concurrently transmitting set
    /// `s`, which must contain `e`.
    pub fn sinr(&self, e: u32, s: LinkSet) -> Result<Rat, ModelError> {
        self.check_link(e)?;
        if !s.contains(e) {
            return Err(ModelError::LinkNotInSet(e));
        }
        let link = self.links[e as usize];
        let mut denom = self.params.noise_mw.to_rat();
        for f in s.iter() {
            self.check_link(f)?;
            if f == e {
                continue;
            }
            let interferer = self.links[f as usize];
            denom += self.gain(interferer.sender, link.receiver);
        }
        Ok(self.gain(link.sender, link.receiver) / denom)
    }

    /// Whether every link in the non-empty set `s` can transmit at once:
    /// members must be pairwise node-disjoint and each must reach
    /// `SINR >= beta` against the rest. Decisions are exact.
    pub fn is_feasible(&self, s: LinkSet) -> Result<bool, ModelError> {
        if s.is_empty() {
            return Err(ModelError::EmptyLinkSet);
        }
        for e in s.iter() {
            self.check_link(e)?;
        }
        for e in s.iter() {
            for f in s.iter() {
                if f <= e {
                    continue;
                }
                let (a, b) = (self.links[e as usize], self.links[f as usize]);
                let touch = a.sender == b.sender
                    || a.sender == b.receiver
                    || a.receiver == b.sender
                    || a.receiver == b.receiver;
                if touch {
                    return Ok(false);
                }
            }
        }
        for e in s.iter() {
            let link = self.links[e as usize];
            let mut interference = Rat::zero();
            for f in s.iter() {
                if f != e {
                    interference += self.gain(self.links[f as usize].sender, link.receiver);
                }
            }
            if interference > self.theta[e as usize] {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Serializes the network, optionally attaching a provenance object.
    pub fn to_json(&self, provenance: Option<serde_json::Value>) -> String {
        let file = NetworkFile {
            provenance,
            params: self.params.clone(),
            side_m: self.side_m,
            seed: self.seed,
            nodes: self.nodes.clone(),
            links: self.links.clone(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("network serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Network, ModelError> {
        let file: NetworkFile =
            serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        Network::from_parts(file.params, file.side_m, file.seed, file.nodes, file.links)
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
    params: PhysParams,
    #[serde(with = "dec_number")]
    side_m: Dec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    nodes: Vec<Node>,
    links: Vec<Link>,
}

/// Pcg64 stream selectors. Placement draws and sender coin flips come from
/// separate streams of the same seed, so extending one never perturbs the
/// other. These constants are part of the reproducibility contract.
const STREAM_PLACEMENT: u128 = 0x706c6163;
const STREAM_COINS: u128 = 0x636f696e;

/// Unbiased uniform draw from `0..=bound_incl` by rejection sampling.
fn uniform_inclusive(rng: &mut Pcg64, bound_incl: u64) -> u64 {
    let Some(bound) = bound_incl.checked_add(1) else {
        return rng.next_u64();
    };
    if bound.is_power_of_two() {
        return rng.next_u64() & (bound - 1);
    }
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let r = rng.next_u64();
        if r >= threshold {
            return r % bound;
        }
    }
}

/// Samples a random instance: `n_nodes` points placed uniformly on a
/// square with the given side at micrometer resolution, coincident points
/// redrawn, and a link for every node pair within the connection radius,
/// its direction chosen by a fair coin.
///
/// The construction is fully reproducible: one seed always yields the
/// identical network, and coins are consumed in ascending pair order
/// `(a, b), a < b` only for pairs that actually form a link.
pub fn generate_network(
    n_nodes: u32,
    side_m: &Dec,
    params: &PhysParams,
    seed: u64,
) -> Result<Network, ModelError> {
    if n_nodes < 2 {
        return Err(ModelError::InvalidNetwork("need at least 2 nodes".into()));
    }
    params.validate()?;
    let side_um = side_m
        .to_micrometers()
        .and_then(|v| u64::try_from(v).ok())
        .filter(|&v| v > 0)
        .ok_or_else(|| {
            ModelError::InvalidNetwork(
                "side length must be a positive micrometer multiple".into(),
            )
        })?;

    let mut place = Pcg64::new(seed as u128, STREAM_PLACEMENT);
    let mut coins = Pcg64::new(seed as u128, STREAM_COINS);

    let mut nodes: Vec<Node> = Vec::with_capacity(n_nodes as usize);
    for id in 0..n_nodes {
        loop {
            let x = Dec::from_micrometers(uniform_inclusive(&mut place, side_um) as i128);
            let y = Dec::from_micrometers(uniform_inclusive(&mut place, side_um) as i128);
            if nodes.iter().all(|n| n.x != x || n.y != y) {
                nodes.push(Node { id, x, y });
                break;
            }
        }
    }

    let max_dist_pow = params.max_dist_pow();
    let mut links = Vec::new();
    for a in 0..n_nodes {
        for b in a + 1..n_nodes {
            let dx = nodes[a as usize].x.to_rat() - nodes[b as usize].x.to_rat();
            let dy = nodes[a as usize].y.to_rat() - nodes[b as usize].y.to_rat();
            let dpow = params.dist_pow(&(&dx * &dx + &dy * &dy))?;
            if dpow <= max_dist_pow {
                let heads = coins.next_u64() & 1 == 0;
                let (sender, receiver) = if heads { (a, b) } else { (b, a) };
                links.push(Link { id: links.len() as u32, sender, receiver });
            }
        }
    }

    Network::from_parts(params.clone(), *side_m, Some(seed), nodes, links)
}

/// Test fixture: parallel vertical 100 m links, one per entry of `xs`,
/// sender at `(x, 0)` and receiver at `(x, 100)`.
#[cfg(test)]
pub(crate) fn vertical_link_net(xs: &[i64]) -> Network {
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let base = (2 * i) as u32;
        nodes.push(Node { id: base, x: Dec::from_int(x), y: Dec::from_int(0) });
        nodes.push(Node { id: base + 1, x: Dec::from_int(x), y: Dec::from_int(100) });
        links.push(Link { id: i as u32, sender: base, receiver: base + 1 });
    }
    Network::from_parts(PhysParams::default(), Dec::from_int(10_000), None, nodes, links)
        .unwrap()
}

/// Test fixture: nodes on the x axis at the given positions, linked
/// whenever within connection range, so neighboring links share nodes.
/// Positions must keep `d^4` within `i128`.
#[cfg(test)]
pub(crate) fn collinear_link_net(xs: &[i64]) -> Network {
    let params = PhysParams::default();
    let nodes: Vec<Node> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| Node { id: i as u32, x: Dec::from_int(x), y: Dec::ZERO })
        .collect();
    let mut links = Vec::new();
    for a in 0..xs.len() {
        for b in a + 1..xs.len() {
            let d = (xs[b] - xs[a]).unsigned_abs() as i128;
            let dist_pow = Rat::from_integer(d.pow(4).into());
            if dist_pow <= params.max_dist_pow() {
                links.push(Link {
                    id: links.len() as u32,
                    sender: a as u32,
                    receiver: b as u32,
                });
            }
        }
    }
    Network::from_parts(params, Dec::from_int(10_000), None, nodes, links).unwrap()
}
