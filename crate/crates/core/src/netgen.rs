//! Interbank loan networks.
//!
//! Topologies are grown by a directed preferential-attachment process and
//! then thinned (or filled) to an exact edge count. Loan values follow
//! `w ∝ (k_in(creditor) · k_out(debtor))^r`, with `r` searched so the five
//! largest lenders hold a target share of all interbank loans.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::balsheet::{self, SystemParams};
use crate::error::{Error, Result};
use crate::seeds::{self, stream};

/// Upper end of the exponent search.
pub const MAX_EXPONENT: f64 = 20.0;
/// Bisection steps before the exponent search gives up.
pub const MAX_BISECTION_STEPS: usize = 60;
/// Number of banks summed in the concentration measure.
pub const TOP_LENDERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BankClass {
    Shadow,
    Regulated,
}

impl BankClass {
    pub fn code(self) -> char {
        match self {
            BankClass::Shadow => 'S',
            BankClass::Regulated => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    None,
    ShadowLayer,
    RegulatedLayer,
}

impl Layer {
    pub fn code(self) -> char {
        match self {
            Layer::None => '-',
            Layer::ShadowLayer => 'S',
            Layer::RegulatedLayer => 'R',
        }
    }
}

/// Directed loan graph. An edge `(n, n')` means bank `n` lends to bank `n'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n_banks: usize,
    /// Sorted by (creditor, debtor), no duplicates, no self-loops.
    edges: Vec<(u32, u32)>,
    classes: Vec<BankClass>,
    layers: Vec<Layer>,
}

impl Topology {
    /// Builds a topology from creditor → debtor pairs. Duplicates collapse;
    /// every bank starts out `Regulated` with no layer.
    pub fn from_edges(n_banks: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list = Vec::new();
        for (c, d) in edges {
            if c >= n_banks || d >= n_banks {
                return Err(Error::invalid("edges", format!("edge ({c},{d}) outside 0..{n_banks}")));
            }
            if c == d {
                return Err(Error::invalid("edges", format!("self-loop at bank {c}")));
            }
            list.push((c as u32, d as u32));
        }
        list.sort_unstable();
        list.dedup();
        Ok(Topology {
            n_banks,
            edges: list,
            classes: vec![BankClass::Regulated; n_banks],
            layers: vec![Layer::None; n_banks],
        })
    }

    pub fn n_banks(&self) -> usize {
        self.n_banks
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, creditor: usize, debtor: usize) -> bool {
        self.edges
            .binary_search(&(creditor as u32, debtor as u32))
            .is_ok()
    }

    /// Edges over ordered bank pairs, `E / (N (N-1))`.
    pub fn denseness(&self) -> f64 {
        let n = self.n_banks as f64;
        self.edges.len() as f64 / (n * (n - 1.0))
    }

    pub fn mean_out_degree(&self) -> f64 {
        self.edges.len() as f64 / self.n_banks as f64
    }

    /// Number of banks each bank lends to.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut k = vec![0; self.n_banks];
        for &(c, _) in &self.edges {
            k[c as usize] += 1;
        }
        k
    }

    /// Number of banks each bank borrows from.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut k = vec![0; self.n_banks];
        for &(_, d) in &self.edges {
            k[d as usize] += 1;
        }
        k
    }

    pub fn total_degrees(&self) -> Vec<usize> {
        self.out_degrees()
            .into_iter()
            .zip(self.in_degrees())
            .map(|(o, i)| o + i)
            .collect()
    }

    pub fn classes(&self) -> &[BankClass] {
        &self.classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn count_class(&self, class: BankClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn with_classes(mut self, classes: Vec<BankClass>) -> Result<Self> {
        if classes.len() != self.n_banks {
            return Err(Error::DimensionMismatch(format!(
                "{} class labels for {} banks",
                classes.len(),
                self.n_banks
            )));
        }
        self.classes = classes;
        Ok(self)
    }

    pub fn with_layers(mut self, layers: Vec<Layer>) -> Result<Self> {
        if layers.len() != self.n_banks {
            return Err(Error::DimensionMismatch(format!(
                "{} layer labels for {} banks",
                layers.len(),
                self.n_banks
            )));
        }
        self.layers = layers;
        Ok(self)
    }

    /// Edges whose endpoints sit in different (non-`None`) layers.
    pub fn cross_layer_edges(&self) -> usize {
        self.edges
            .iter()
            .filter(|&&(c, d)| {
                let (lc, ld) = (self.layers[c as usize], self.layers[d as usize]);
                lc != Layer::None && ld != Layer::None && lc != ld
            })
            .count()
    }
}

/// Rounds `x ≥ 0` half-up, absorbing representation error such as
/// `0.35 * 10 = 3.4999999999999996`.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// `⌈κ (N-1)⌉`, again tolerant of representation error.
pub fn links_per_bank(denseness: f64, n_banks: usize) -> usize {
    (denseness * (n_banks as f64 - 1.0) - 1e-9).ceil().max(0.0) as usize
}

fn validate_denseness(n_banks: usize, denseness: f64) -> Result<()> {
    if n_banks < 2 {
        return Err(Error::invalid("n_banks", format!("need at least 2 banks, got {n_banks}")));
    }
    if !(denseness > 0.0 && denseness <= 1.0) {
        return Err(Error::invalid("denseness", format!("must lie in (0, 1], got {denseness}")));
    }
    if links_per_bank(denseness, n_banks) < 1 {
        return Err(Error::invalid("denseness", "κ(N-1) rounds up to zero links"));
    }
    Ok(())
}

/// Draws `m` distinct banks from `0..existing` with probability proportional
/// to the multiplicity of each bank in `urn` (total degree + 1).
fn pick_distinct<R: Rng>(urn: &[u32], degrees: &[usize], existing: usize, m: usize, rng: &mut R) -> Vec<u32> {
    let mut chosen = Vec::with_capacity(m);
    let mut seen = HashSet::with_capacity(m * 2);
    let mut attempts = 0usize;
    let budget = 32 * m + 64;
    while chosen.len() < m && attempts < budget {
        let v = urn[rng.random_range(0..urn.len())];
        if seen.insert(v) {
            chosen.push(v);
        }
        attempts += 1;
    }
    if chosen.len() < m {
        // Efraimidis–Spirakis keys over the remaining candidates give the same
        // sequential weighted draw without replacement.
        let mut keyed: Vec<(f64, u32)> = (0..existing as u32)
            .filter(|v| !seen.contains(v))
            .map(|v| {
                let w = (degrees[v as usize] + 1) as f64;
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                (u.ln() / w, v)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        chosen.extend(keyed.into_iter().take(m - chosen.len()).map(|(_, v)| v));
    }
    chosen
}

/// Grows a directed scale-free graph by preferential attachment.
///
/// Starts from a complete directed clique of `max(2, m)` banks with
/// `m = ⌈κ(N-1)⌉`. Each later bank lends to `m` existing banks and,
/// independently, borrows from `m` existing banks, both picked with
/// probability proportional to total degree + 1. The grown graph is then
/// thinned or filled uniformly at random to exactly `round(κ N (N-1))` edges.
pub fn generate_scale_free(n_banks: usize, denseness: f64, seed: u64) -> Result<Topology> {
    validate_denseness(n_banks, denseness)?;
    let m = links_per_bank(denseness, n_banks);
    let m0 = m.max(2).min(n_banks);
    let mut rng = seeds::rng_from(seed);

    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m0 * m0 + 2 * m * n_banks);
    let mut degrees = vec![0usize; n_banks];
    let mut urn: Vec<u32> = Vec::with_capacity(n_banks + 2 * edges.capacity());
    urn.extend(0..m0 as u32);

    fn add(c: u32, d: u32, edges: &mut Vec<(u32, u32)>, degrees: &mut [usize], urn: &mut Vec<u32>) {
        edges.push((c, d));
        degrees[c as usize] += 1;
        degrees[d as usize] += 1;
        urn.push(c);
        urn.push(d);
    }
    for c in 0..m0 as u32 {
        for d in 0..m0 as u32 {
            if c != d {
                add(c, d, &mut edges, &mut degrees, &mut urn);
            }
        }
    }
    for v in m0..n_banks {
        let debtors = pick_distinct(&urn, &degrees, v, m, &mut rng);
        let creditors = pick_distinct(&urn, &degrees, v, m, &mut rng);
        let v = v as u32;
        for d in debtors {
            add(v, d, &mut edges, &mut degrees, &mut urn);
        }
        for c in creditors {
            add(c, v, &mut edges, &mut degrees, &mut urn);
        }
        urn.push(v);
    }

    let target = round_half_up(denseness * n_banks as f64 * (n_banks as f64 - 1.0));
    adjust_edge_count(&mut edges, n_banks, target, &mut rng);
    edges.sort_unstable();
    Ok(Topology {
        n_banks,
        edges,
        classes: vec![BankClass::Regulated; n_banks],
        layers: vec![Layer::None; n_banks],
    })
}

fn adjust_edge_count<R: Rng>(edges: &mut Vec<(u32, u32)>, n_banks: usize, target: usize, rng: &mut R) {
    use std::cmp::Ordering;
    match edges.len().cmp(&target) {
        Ordering::Equal => {}
        Ordering::Greater => {
            let mut drop = vec![false; edges.len()];
            for i in index::sample(rng, edges.len(), edges.len() - target) {
                drop[i] = true;
            }
            let mut i = 0;
            edges.retain(|_| {
                let keep = !drop[i];
                i += 1;
                keep
            });
        }
        Ordering::Less => {
            let present: HashSet<(u32, u32)> = edges.iter().copied().collect();
            let mut missing = Vec::new();
            for c in 0..n_banks as u32 {
                for d in 0..n_banks as u32 {
                    if c != d && !present.contains(&(c, d)) {
                        missing.push((c, d));
                    }
                }
            }
            let need = target - edges.len();
            for i in index::sample(rng, missing.len(), need) {
                edges.push(missing[i]);
            }
        }
    }
}

/// Share of the total held by the five largest entries (all of it when
/// there are five or fewer).
pub fn top_share(values: &[f64]) -> f64 {
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    if values.len() <= TOP_LENDERS {
        return 1.0;
    }
    let mut v = values.to_vec();
    v.select_nth_unstable_by(TOP_LENDERS - 1, |a, b| b.total_cmp(a));
    let top: f64 = v[..TOP_LENDERS].iter().sum();
    (top / total).min(1.0)
}

/// Precomputed log-degrees for repeated evaluation of the weight law.
struct WeightLaw<'a> {
    topology: &'a Topology,
    ln_in: Vec<f64>,
    ln_out: Vec<f64>,
}

impl<'a> WeightLaw<'a> {
    fn new(topology: &'a Topology) -> Self {
        let ln = |k: usize| (k.max(1) as f64).ln();
        WeightLaw {
            topology,
            ln_in: topology.in_degrees().into_iter().map(ln).collect(),
            ln_out: topology.out_degrees().into_iter().map(ln).collect(),
        }
    }

    /// Unnormalized loans made per bank at exponent `r`.
    fn loans(&self, r: f64) -> Vec<f64> {
        let pout: Vec<f64> = self.ln_out.iter().map(|x| (r * x).exp()).collect();
        let mut l = vec![0.0; self.topology.n_banks];
        for &(c, d) in &self.topology.edges {
            l[c as usize] += pout[d as usize];
        }
        for (li, x) in l.iter_mut().zip(&self.ln_in) {
            *li *= (r * x).exp();
        }
        l
    }

    fn concentration(&self, r: f64) -> f64 {
        top_share(&self.loans(r))
    }

    fn weights(&self, r: f64) -> Vec<f64> {
        let raw: Vec<f64> = self
            .topology
            .edges
            .iter()
            .map(|&(c, d)| (r * (self.ln_in[c as usize] + self.ln_out[d as usize])).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

/// Top-5 loan share the weight law produces at exponent `r`.
pub fn concentration_at(topology: &Topology, r: f64) -> f64 {
    WeightLaw::new(topology).concentration(r)
}

/// Topology plus per-edge loan values (aligned with `topology.edges()`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    topology: Topology,
    weights: Vec<f64>,
    exponent: f64,
    realized_concentration: f64,
}

impl WeightedNetwork {
    /// Applies the weight law at a fixed exponent, normalized to unit total.
    pub fn with_exponent(topology: Topology, r: f64) -> Result<Self> {
        if topology.n_edges() == 0 {
            return Err(Error::invalid("topology", "no edges to weight"));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid("exponent", format!("must be finite and ≥ 0, got {r}")));
        }
        let law = WeightLaw::new(&topology);
        let weights = law.weights(r);
        let mut net = WeightedNetwork {
            topology,
            weights,
            exponent: r,
            realized_concentration: 0.0,
        };
        net.realized_concentration = top_share(&net.loans_made());
        Ok(net)
    }

    /// Builds a network from explicit edge weights; used for hand-made cases.
    pub fn from_weights(topology: Topology, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != topology.n_edges() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} edges",
                weights.len(),
                topology.n_edges()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights", format!("loan values must be positive, got {w}")));
        }
        let mut net = WeightedNetwork {
            topology,
            weights,
            exponent: f64::NAN,
            realized_concentration: 0.0,
        };
        net.realized_concentration = top_share(&net.loans_made());
        Ok(net)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exponent `r` of the weight law (NaN for hand-made weights).
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn realized_concentration(&self) -> f64 {
        self.realized_concentration
    }

    pub fn n_banks(&self) -> usize {
        self.topology.n_banks
    }

    /// Weighted edges as `(creditor, debtor, loan)`.
    pub fn loans(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.topology
            .edges
            .iter()
            .zip(&self.weights)
            .map(|(&(c, d), &w)| (c as usize, d as usize, w))
    }

    /// `l_n`: total value each bank has lent.
    pub fn loans_made(&self) -> Vec<f64> {
        let mut l = vec![0.0; self.n_banks()];
        for (c, _, w) in self.loans() {
            l[c] += w;
        }
        l
    }

    /// `b_n`: total value each bank has borrowed.
    pub fn borrowings(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n_banks()];
        for (_, d, w) in self.loans() {
            b[d] += w;
        }
        b
    }

    /// Same loans, new class labels.
    pub fn relabel(mut self, topology: Topology) -> Result<Self> {
        if topology.edges != self.topology.edges {
            return Err(Error::DimensionMismatch("relabel needs an identical edge set".into()));
        }
        self.topology = topology;
        Ok(self)
    }

    /// Writes the edge list export: a `# N=.. classes=.. layers=..` header
    /// followed by one `creditor,debtor,weight` line per loan.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        let classes: Vec<String> = self.topology.classes.iter().map(|c| c.code().to_string()).collect();
        let layers: Vec<String> = self.topology.layers.iter().map(|l| l.code().to_string()).collect();
        writeln!(
            out,
            "# N={} classes={} layers={}",
            self.n_banks(),
            classes.join(","),
            layers.join(",")
        )?;
        for (c, d, w) in self.loans() {
            writeln!(out, "{c},{d},{w}")?;
        }
        Ok(())
    }
}

/// Searches the weight-law exponent `r ∈ [0, 10]` by bisection until the
/// top-5 loan share is within `tolerance` of `target`.
pub fn assign_weights(topology: Topology, target: f64, tolerance: f64) -> Result<WeightedNetwork> {
    if topology.n_edges() == 0 {
        return Err(Error::invalid("topology", "no edges to weight"));
    }
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::invalid("target_concentration", format!("must lie in (0, 1], got {target}")));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::invalid("tolerance", format!("must be ≥ 0, got {tolerance}")));
    }
    let law = WeightLaw::new(&topology);
    let floor = law.concentration(0.0);
    if target < floor - tolerance {
        return Err(Error::UnreachableConcentration {
            target,
            reason: format!("uniform loans already give a top-5 share of {floor:.4}"),
        });
    }
    let r = if (floor - target).abs() <= tolerance {
        0.0
    } else {
        let ceiling = law.concentration(MAX_EXPONENT);
        if ceiling < target - tolerance {
            return Err(Error::UnreachableConcentration {
                target,
                reason: format!("top-5 share reaches only {ceiling:.4} at r = {MAX_EXPONENT}"),
            });
        }
        let (mut lo, mut hi) = (0.0, MAX_EXPONENT);
        let mut found = None;
        for _ in 0..MAX_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let c = law.concentration(mid);
            if (c - target).abs() <= tolerance {
                found = Some(mid);
                break;
            }
            if c < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        match found {
            Some(r) => r,
            None => {
                return Err(Error::UnreachableConcentration {
                    target,
                    reason: format!("bisection stalled near r = {lo:.6} (concentration jumps past the target)"),
                })
            }
        }
    };
    WeightedNetwork::with_exponent(topology, r)
}

/// Labels `round(f N)` banks, chosen uniformly, as shadow banks.
pub fn mix_random(topology: Topology, shadow_fraction: f64, seed: u64) -> Result<Topology> {
    validate_fraction(shadow_fraction)?;
    let n = topology.n_banks;
    let k = round_half_up(shadow_fraction * n as f64).min(n);
    let mut rng = seeds::rng_from(seed);
    let mut classes = vec![BankClass::Regulated; n];
    for i in index::sample(&mut rng, n, k) {
        classes[i] = BankClass::Shadow;
    }
    topology.with_classes(classes)
}

/// Labels the largest-asset banks regulated and the `round(f N)` smallest
/// shadow. Ties rank the lower index as larger.
pub fn mix_by_assets(topology: Topology, assets: &[f64], shadow_fraction: f64) -> Result<Topology> {
    validate_fraction(shadow_fraction)?;
    let n = topology.n_banks;
    if assets.len() != n {
        return Err(Error::DimensionMismatch(format!("{} asset values for {n} banks", assets.len())));
    }
    let n_shadow = round_half_up(shadow_fraction * n as f64).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| assets[b].total_cmp(&assets[a]).then(a.cmp(&b)));
    let mut classes = vec![BankClass::Shadow; n];
    for &i in &order[..n - n_shadow] {
        classes[i] = BankClass::Regulated;
    }
    topology.with_classes(classes)
}

/// Asset-correlated mixing: ranks banks by the total assets their balance
/// sheets will carry (class-independent) and labels the small ones shadow.
pub fn mix_asset_correlated(network: &WeightedNetwork, params: &SystemParams, shadow_fraction: f64) -> Result<Topology> {
    let assets = balsheet::provisional_assets(network, params)?;
    mix_by_assets(network.topology.clone(), &assets, shadow_fraction)
}

fn validate_fraction(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::invalid("shadow_fraction", format!("must lie in [0, 1], got {f}")));
    }
    Ok(())
}

/// Two-layer topology: banks `0..n` form the shadow layer and `n..2n` the
/// regulated layer, each grown independently; `round(q κ 2n²)` cross-layer
/// loans join uniformly chosen ordered pairs.
pub fn layered_topology(n_per_layer: usize, denseness: f64, coupling: f64, seed: u64) -> Result<Topology> {
    let mut v = layered_topologies(n_per_layer, denseness, &[coupling], seed)?;
    Ok(v.remove(0))
}

/// [`layered_topology`] for several couplings at once. Both layers are
/// grown once and cross-layer pairs come from one stream per seed, so the
/// cross-layer loans at a smaller `q` are a prefix of those at a larger `q`.
pub fn layered_topologies(n_per_layer: usize, denseness: f64, couplings: &[f64], seed: u64) -> Result<Vec<Topology>> {
    if n_per_layer < 2 {
        return Err(Error::invalid("n_per_layer", format!("need at least 2 banks per layer, got {n_per_layer}")));
    }
    if let Some(q) = couplings.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::invalid("relative_coupling", format!("must lie in [0, 1], got {q}")));
    }
    let shadow = generate_scale_free(n_per_layer, denseness, seeds::derive_seed(seed, &[stream::LAYER_SHADOW]))?;
    let regulated =
        generate_scale_free(n_per_layer, denseness, seeds::derive_seed(seed, &[stream::LAYER_REGULATED]))?;

    let n = n_per_layer;
    let offset = n as u32;
    let mut intra: Vec<(u32, u32)> = shadow.edges.clone();
    intra.extend(regulated.edges.iter().map(|&(c, d)| (c + offset, d + offset)));

    let cross_pairs = 2 * n * n;
    let count = |q: f64| round_half_up(q * denseness * cross_pairs as f64).min(cross_pairs);
    let most = couplings.iter().map(|&q| count(q)).max().unwrap_or(0);
    let mut rng = seeds::child_rng(seed, &[stream::INTER_LAYER]);
    let mut seen = HashSet::with_capacity(most * 2);
    let mut cross = Vec::with_capacity(most);
    while cross.len() < most {
        let creditor = rng.random_range(0..2 * n as u32);
        let debtor = rng.random_range(0..n as u32);
        let debtor = if creditor < offset { debtor + offset } else { debtor };
        if seen.insert((creditor, debtor)) {
            cross.push((creditor, debtor));
        }
    }

    let mut classes = vec![BankClass::Shadow; n];
    classes.extend(std::iter::repeat_n(BankClass::Regulated, n));
    let mut layers = vec![Layer::ShadowLayer; n];
    layers.extend(std::iter::repeat_n(Layer::RegulatedLayer, n));
    Ok(couplings
        .iter()
        .map(|&q| {
            let mut edges = intra.clone();
            edges.extend_from_slice(&cross[..count(q)]);
            edges.sort_unstable();
            Topology {
                n_banks: 2 * n,
                edges,
                classes: classes.clone(),
                layers: layers.clone(),
            }
        })
        .collect())
}

/// Layered system with loan weights assigned over the combined graph.
pub fn build_layered(
    n_per_layer: usize,
    denseness: f64,
    coupling: f64,
    target_concentration: f64,
    tolerance: f64,
    seed: u64,
) -> Result<WeightedNetwork> {
    let topology = layered_topology(n_per_layer, denseness, coupling, seed)?;
    assign_weights(topology, target_concentration, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_banks_at_full_denseness_are_mutually_linked() {
        let t = generate_scale_free(2, 1.0, 9).unwrap();
        assert_eq!(t.edges(), &[(0, 1), (1, 0)]);
        assert_eq!(t.denseness(), 1.0);
    }

    #[test]
    fn rejects_bad_denseness_and_size() {
        assert!(generate_scale_free(1, 0.5, 0).is_err());
        assert!(generate_scale_free(10, 0.0, 0).is_err());
        assert!(generate_scale_free(10, -0.1, 0).is_err());
        assert!(generate_scale_free(10, 1.5, 0).is_err());
    }

    #[test]
    fn exact_edge_count_and_no_self_loops() {
        for (n, k) in [(50, 0.1), (120, 0.05), (30, 0.9), (7, 1.0)] {
            let t = generate_scale_free(n, k, 3).unwrap();
            let target = round_half_up(k * n as f64 * (n as f64 - 1.0));
            assert_eq!(t.n_edges(), target, "n={n} κ={k}");
            assert!(t.edges().iter().all(|&(c, d)| c != d));
            assert!(t.edges().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let a = generate_scale_free(200, 0.05, 11).unwrap();
        let b = generate_scale_free(200, 0.05, 11).unwrap();
        let c = generate_scale_free(200, 0.05, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_weights_at_zero_exponent() {
        let t = generate_scale_free(60, 0.1, 1).unwrap();
        let net = WeightedNetwork::with_exponent(t, 0.0).unwrap();
        let w0 = net.weights()[0];
        assert!(net.weights().iter().all(|&w| (w - w0).abs() < 1e-15));
        assert!((net.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn five_lenders_hold_everything() {
        let t = Topology::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let net = assign_weights(t, 1.0, 0.01).unwrap();
        assert_eq!(net.realized_concentration(), 1.0);
        assert_eq!(top_share(&[1.0, 2.0]), 1.0);
    }

    #[test]
    fn target_below_uniform_share_is_unreachable() {
        let t = Topology::from_edges(5, [(0, 1), (1, 2)]).unwrap();
        let err = assign_weights(t, 0.5, 0.01).unwrap_err();
        assert!(matches!(err, Error::UnreachableConcentration { .. }));
    }

    #[test]
    fn top_share_picks_largest_five() {
        let v = [1.0, 9.0, 2.0, 8.0, 3.0, 7.0, 4.0, 6.0, 5.0, 5.0];
        assert!((top_share(&v) - 35.0 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn random_mixing_counts() {
        let t = generate_scale_free(30, 0.2, 5).unwrap();
        let m = mix_random(t.clone(), 0.5, 1).unwrap();
        assert_eq!(m.count_class(BankClass::Shadow), 15);
        assert_eq!(m.count_class(BankClass::Regulated), 15);
        assert_eq!(mix_random(t.clone(), 0.0, 1).unwrap().count_class(BankClass::Shadow), 0);
        assert_eq!(mix_random(t.clone(), 1.0, 1).unwrap().count_class(BankClass::Regulated), 0);
        assert!(mix_random(t, 1.1, 1).is_err());
    }

    #[test]
    fn asset_ranking_three_banks() {
        let t = Topology::from_edges(3, [(0, 1)]).unwrap();
        let m = mix_by_assets(t.clone(), &[5.0, 3.0, 1.0], 1.0 / 3.0).unwrap();
        assert_eq!(m.classes(), &[BankClass::Regulated, BankClass::Regulated, BankClass::Shadow]);
        let all_reg = mix_by_assets(t.clone(), &[1.0, 3.0, 5.0], 0.0).unwrap();
        assert_eq!(all_reg.count_class(BankClass::Regulated), 3);
        // equal assets: lower index counts as larger
        let tie = mix_by_assets(t, &[2.0, 2.0, 2.0], 2.0 / 3.0).unwrap();
        assert_eq!(tie.classes(), &[BankClass::Regulated, BankClass::Shadow, BankClass::Shadow]);
    }

    #[test]
    fn layered_small_case_counts() {
        let t = layered_topology(3, 2.0 / 3.0, 0.5, 4).unwrap();
        assert_eq!(t.cross_layer_edges(), 6);
        let decoupled = layered_topology(3, 2.0 / 3.0, 0.0, 4).unwrap();
        assert_eq!(decoupled.cross_layer_edges(), 0);
        assert!(layered_topology(3, 0.5, 1.5, 4).is_err());
        assert!(layered_topology(3, 0.5, -0.1, 4).is_err());
    }

    #[test]
    fn cross_layer_loans_are_nested_in_coupling() {
        let small = layered_topology(40, 0.1, 0.2, 8).unwrap();
        let large = layered_topology(40, 0.1, 0.6, 8).unwrap();
        let cross = |t: &Topology| -> HashSet<(u32, u32)> {
            t.edges()
                .iter()
                .copied()
                .filter(|&(c, d)| (c < 40) != (d < 40))
                .collect()
        };
        assert!(cross(&small).is_subset(&cross(&large)));
    }

    #[test]
    fn edge_list_header() {
        let t = Topology::from_edges(3, [(0, 1), (2, 1)]).unwrap();
        let t = t.with_classes(vec![BankClass::Shadow, BankClass::Regulated, BankClass::Shadow]).unwrap();
        let net = WeightedNetwork::from_weights(t, vec![0.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        net.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# N=3 classes=S,R,S layers=-,-,-\n0,1,0.25\n2,1,0.75\n");
    }
}
