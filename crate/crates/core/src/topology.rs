//! Topology of decision regions over the likelihood space `[-1, 1]^p`.
//!
//! A [`GridSpec`] discretizes the space into cells; [`label_grid`] assigns
//! every cell the decision at its center; [`signature_from_grid`] splits each
//! label into face-connected components (union-find) and records which
//! components share a border. Two borders only count as shared when at least
//! `resolution / 32` cell faces touch, which drops point and tangent contacts.
//!
//! Signatures keep class identity (swapping ω1 and ω2 gives a different
//! signature) but not the arbitrary numbering of components that share a
//! label: component ordinals are canonicalized.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::encoding::{ClassDecision, ClassEncodingSet, DecisionRule, LikelihoodVector, ThresholdPolicy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    resolution: usize,
}

impl GridSpec {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::invalid(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if resolution < 16 {
            return Err(Error::invalid(format!("grid resolution must be >= 16, got {resolution}")));
        }
        Ok(Self { dim, resolution })
    }

    /// 256 points per axis in 2D, 64 in 3D.
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::new(dim, if dim == 2 { 256 } else { 64 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn cell_width(&self) -> f64 {
        2.0 / self.resolution as f64
    }

    fn coord(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.cell_width()
    }

    /// Center of a cell; axis 0 varies fastest in the cell index.
    pub fn cell_center(&self, mut index: usize, out: &mut [f64]) {
        for c in out.iter_mut().take(self.dim) {
            *c = self.coord(index % self.resolution);
            index /= self.resolution;
        }
    }

    /// Minimum number of touching cell faces for two regions to count as adjacent.
    pub fn min_contact(&self) -> usize {
        (self.resolution / 32).max(1)
    }
}

/// Label of a decision region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionLabel {
    Class(usize),
    Oos,
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionLabel::Class(i) => write!(f, "w{}", i + 1),
            RegionLabel::Oos => f.write_str("o"),
        }
    }
}

impl From<ClassDecision> for RegionLabel {
    fn from(d: ClassDecision) -> Self {
        match d {
            ClassDecision::InScope(i) => RegionLabel::Class(i),
            ClassDecision::OutOfScope => RegionLabel::Oos,
        }
    }
}

/// A grid whose cells carry a decision. Codes: 0 is OOS, `i + 1` is class `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGrid {
    spec: GridSpec,
    num_classes: usize,
    codes: Vec<u16>,
}

impl LabeledGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label(&self, index: usize) -> RegionLabel {
        match self.codes[index] {
            0 => RegionLabel::Oos,
            c => RegionLabel::Class(c as usize - 1),
        }
    }

    pub fn count(&self, label: RegionLabel) -> usize {
        let code = code_of(label);
        self.codes.iter().filter(|&&c| c == code).count()
    }

    /// Plain-text PGM (`P2`) raster of the label codes. In 3D the slices along
    /// the last axis are stacked vertically.
    pub fn to_pgm(&self) -> String {
        let r = self.spec.resolution;
        let rows = self.codes.len() / r;
        let mut out = String::new();
        writeln!(out, "P2").unwrap();
        writeln!(out, "# label codes: 0 = out-of-scope, k = class k").unwrap();
        writeln!(out, "{r} {rows}").unwrap();
        writeln!(out, "{}", self.num_classes.max(1)).unwrap();
        for row in (0..rows).rev() {
            let cells: Vec<String> = self.codes[row * r..(row + 1) * r].iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
        out
    }
}

fn code_of(label: RegionLabel) -> u16 {
    match label {
        RegionLabel::Oos => 0,
        RegionLabel::Class(i) => i as u16 + 1,
    }
}

/// Labels every cell of `grid` with `decide` evaluated at the cell center.
pub fn label_grid<F>(decide: F, grid: &GridSpec, num_classes: usize) -> LabeledGrid
where
    F: Fn(&LikelihoodVector) -> ClassDecision + Sync,
{
    let r = grid.resolution;
    let mut codes = vec![0u16; grid.cell_count()];
    codes.par_chunks_mut(r).enumerate().for_each(|(row, chunk)| {
        let mut center = vec![0.0; grid.dim];
        let mut z = LikelihoodVector::new(vec![0.0; grid.dim]).expect("non-empty");
        for (i, code) in chunk.iter_mut().enumerate() {
            grid.cell_center(row * r + i, &mut center);
            z.overwrite(&center);
            *code = code_of(decide(&z).into());
        }
    });
    LabeledGrid {
        spec: *grid,
        num_classes,
        codes,
    }
}

/// Labels the grid with a rule at threshold `theta`.
pub fn label_grid_with_rule(rule: &DecisionRule, theta: f64, grid: &GridSpec) -> Result<LabeledGrid> {
    if rule.input_dim() != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            actual: rule.input_dim(),
        });
    }
    let policy = ThresholdPolicy::new(theta, rule.semantics())?;
    Ok(label_grid(
        |z| rule.decide(z, &policy).expect("dimension checked"),
        grid,
        rule.num_classes(),
    ))
}

struct DisjointSet {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grandparent = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grandparent;
            x = grandparent;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (ra_rank, rb_rank) = (self.rank[ra as usize], self.rank[rb as usize]);
        if ra_rank < rb_rank {
            self.parent[ra as usize] = rb;
        } else {
            self.parent[rb as usize] = ra;
            if ra_rank == rb_rank {
                self.rank[ra as usize] += 1;
            }
        }
    }
}

/// A connected component: its label and its canonical ordinal among the
/// components carrying that label.
pub type ComponentRef = (RegionLabel, usize);

/// Component counts per label plus the component adjacency graph, in
/// canonical form so equal topologies compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TopologySignature {
    counts: BTreeMap<RegionLabel, usize>,
    adjacency: BTreeSet<(ComponentRef, ComponentRef)>,
}

impl TopologySignature {
    /// Builds a canonical signature from raw component labels and edges
    /// between component indices.
    pub fn from_components(num_classes: usize, labels: &[RegionLabel], edges: &[(usize, usize)]) -> Self {
        let mut counts: BTreeMap<RegionLabel, usize> = (0..num_classes).map(|i| (RegionLabel::Class(i), 0)).collect();
        counts.insert(RegionLabel::Oos, 0);
        let mut groups: BTreeMap<RegionLabel, Vec<usize>> = BTreeMap::new();
        for (idx, &label) in labels.iter().enumerate() {
            *counts.entry(label).or_default() += 1;
            groups.entry(label).or_default().push(idx);
        }
        let adjacency = canonical_edges(labels, &groups, edges);
        Self { counts, adjacency }
    }

    pub fn counts(&self) -> &BTreeMap<RegionLabel, usize> {
        &self.counts
    }

    pub fn adjacency(&self) -> &BTreeSet<(ComponentRef, ComponentRef)> {
        &self.adjacency
    }

    pub fn component_count(&self, label: RegionLabel) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn oos_components(&self) -> usize {
        self.component_count(RegionLabel::Oos)
    }

    /// Whether any component of `a` borders any component of `b`.
    pub fn labels_adjacent(&self, a: RegionLabel, b: RegionLabel) -> bool {
        self.adjacency
            .iter()
            .any(|((la, _), (lb, _))| (*la == a && *lb == b) || (*la == b && *lb == a))
    }

    /// Labels bordering a given component.
    pub fn neighbors(&self, component: ComponentRef) -> BTreeSet<RegionLabel> {
        self.adjacency
            .iter()
            .filter_map(|&(x, y)| {
                if x == component {
                    Some(y.0)
                } else if y == component {
                    Some(x.0)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Whether some OOS component borders exactly one class.
    pub fn has_oos_component_touching_one_class(&self) -> bool {
        (0..self.oos_components()).any(|k| {
            self.neighbors((RegionLabel::Oos, k))
                .iter()
                .filter(|l| matches!(l, RegionLabel::Class(_)))
                .count()
                == 1
        })
    }

    /// Every class has one component, every pair of classes borders, and
    /// there is exactly one OOS component.
    pub fn classes_connected_with_single_oos(&self) -> bool {
        let classes: Vec<RegionLabel> = self
            .counts
            .keys()
            .copied()
            .filter(|l| matches!(l, RegionLabel::Class(_)))
            .collect();
        self.oos_components() == 1
            && classes.iter().all(|&c| self.component_count(c) == 1)
            && classes
                .iter()
                .enumerate()
                .all(|(i, &a)| classes[i + 1..].iter().all(|&b| self.labels_adjacent(a, b)))
    }

    /// `{"counts": {"w1": n, ..., "o": n}, "adjacency": [["w1", 0, "o", 0], ...]}`
    pub fn to_json(&self) -> serde_json::Value {
        let counts: serde_json::Map<String, serde_json::Value> =
            self.counts.iter().map(|(l, n)| (l.to_string(), (*n).into())).collect();
        let adjacency: Vec<serde_json::Value> = self
            .adjacency
            .iter()
            .map(|((la, ka), (lb, kb))| serde_json::json!([la.to_string(), ka, lb.to_string(), kb]))
            .collect();
        serde_json::json!({ "counts": counts, "adjacency": adjacency })
    }
}

impl fmt::Display for TopologySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<String> = self.counts.iter().map(|(l, n)| format!("{l}:{n}")).collect();
        let edges: Vec<String> = self
            .adjacency
            .iter()
            .map(|((la, ka), (lb, kb))| format!("{la}.{ka}-{lb}.{kb}"))
            .collect();
        write!(f, "[{}] {{{}}}", counts.join(" "), edges.join(" "))
    }
}

const MAX_PERMUTATIONS: usize = 40_320;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Chooses ordinals within each label group so the sorted edge list is
/// lexicographically smallest. Falls back to ordering by neighbor profile
/// when the search space is too large.
fn canonical_edges(
    labels: &[RegionLabel],
    groups: &BTreeMap<RegionLabel, Vec<usize>>,
    edges: &[(usize, usize)],
) -> BTreeSet<(ComponentRef, ComponentRef)> {
    let render = |ordinal: &[usize]| -> Vec<(ComponentRef, ComponentRef)> {
        let mut out: Vec<(ComponentRef, ComponentRef)> = edges
            .iter()
            .map(|&(a, b)| {
                let (ra, rb) = ((labels[a], ordinal[a]), (labels[b], ordinal[b]));
                if ra <= rb {
                    (ra, rb)
                } else {
                    (rb, ra)
                }
            })
            .collect();
        out.sort();
        out.dedup();
        out
    };

    let mut search_space = 1usize;
    for members in groups.values() {
        let factorial = (1..=members.len()).try_fold(1usize, |acc, k| acc.checked_mul(k));
        search_space = search_space.saturating_mul(factorial.unwrap_or(usize::MAX));
    }

    let mut ordinal = vec![0usize; labels.len()];
    if search_space > MAX_PERMUTATIONS {
        let mut profile: Vec<Vec<RegionLabel>> = vec![Vec::new(); labels.len()];
        for &(a, b) in edges {
            profile[a].push(labels[b]);
            profile[b].push(labels[a]);
        }
        for p in profile.iter_mut() {
            p.sort();
        }
        for members in groups.values() {
            let mut sorted = members.clone();
            sorted.sort_by(|&x, &y| profile[x].cmp(&profile[y]).then(x.cmp(&y)));
            for (k, &m) in sorted.iter().enumerate() {
                ordinal[m] = k;
            }
        }
        return render(&ordinal).into_iter().collect();
    }

    let group_list: Vec<&Vec<usize>> = groups.values().collect();
    let perms: Vec<Vec<Vec<usize>>> = group_list.iter().map(|g| permutations(g.len())).collect();
    let mut choice = vec![0usize; group_list.len()];
    let mut best: Option<Vec<(ComponentRef, ComponentRef)>> = None;
    loop {
        for (g, members) in group_list.iter().enumerate() {
            for (k, &m) in members.iter().enumerate() {
                ordinal[m] = perms[g][choice[g]][k];
            }
        }
        let candidate = render(&ordinal);
        if best.as_ref().is_none_or(|b| candidate < *b) {
            best = Some(candidate);
        }
        // odometer over the per-group permutation choices
        let mut g = 0;
        loop {
            if g == choice.len() {
                return best.unwrap_or_default().into_iter().collect();
            }
            choice[g] += 1;
            if choice[g] < perms[g].len() {
                break;
            }
            choice[g] = 0;
            g += 1;
        }
    }
}

type Contacts = BTreeMap<(usize, usize), usize>;

/// Merges every flagged component into its unflagged neighbor with the most
/// shared faces (lowest id on ties) and renumbers the survivors in order.
fn absorb(labels: &[RegionLabel], contacts: &Contacts, flagged: &[bool]) -> (Vec<RegionLabel>, Contacts) {
    let mut host: Vec<Option<(usize, usize)>> = vec![None; labels.len()];
    for (&(a, b), &count) in contacts {
        for (me, other) in [(a, b), (b, a)] {
            if flagged[me] && !flagged[other] && host[me].is_none_or(|(_, c)| count > c) {
                host[me] = Some((other, count));
            }
        }
    }
    let target: Vec<usize> = (0..labels.len()).map(|c| host[c].map_or(c, |(h, _)| h)).collect();
    let mut new_id = vec![usize::MAX; labels.len()];
    let mut kept = Vec::new();
    for c in 0..labels.len() {
        if target[c] == c {
            new_id[c] = kept.len();
            kept.push(labels[c]);
        }
    }
    let mut merged = Contacts::new();
    for (&(a, b), &count) in contacts {
        let (a, b) = (new_id[target[a]], new_id[target[b]]);
        if a != b {
            *merged.entry((a.min(b), a.max(b))).or_default() += count;
        }
    }
    (kept, merged)
}

/// Connected components (face neighbors) and their adjacency. Adjacency
/// needs at least [`GridSpec::min_contact`] touching faces (or a quarter of
/// a small component's border); components with fewer cells than that are
/// absorbed into their main neighbor.
pub fn signature_from_grid(grid: &LabeledGrid) -> TopologySignature {
    signature_with_min_contact(grid, grid.spec.min_contact())
}

pub fn signature_with_min_contact(grid: &LabeledGrid, min_contact: usize) -> TopologySignature {
    let spec = grid.spec;
    let r = spec.resolution;
    let n = grid.codes.len();
    let strides: Vec<usize> = (0..spec.dim).map(|a| r.pow(a as u32)).collect();
    let has_next = |idx: usize, axis: usize| (idx / strides[axis]) % r + 1 < r;

    let mut sets = DisjointSet::new(n);
    for idx in 0..n {
        for (axis, &stride) in strides.iter().enumerate() {
            if has_next(idx, axis) && grid.codes[idx] == grid.codes[idx + stride] {
                sets.union(idx as u32, (idx + stride) as u32);
            }
        }
    }

    // component ids in raster order of first appearance
    let mut component_of_root: HashMap<u32, usize> = HashMap::new();
    let mut component = vec![0usize; n];
    let mut labels = Vec::new();
    for (idx, slot) in component.iter_mut().enumerate() {
        let root = sets.find(idx as u32);
        *slot = *component_of_root.entry(root).or_insert_with(|| {
            labels.push(grid.label(idx));
            labels.len() - 1
        });
    }

    let mut contacts = Contacts::new();
    for idx in 0..n {
        for (axis, &stride) in strides.iter().enumerate() {
            if has_next(idx, axis) {
                let (a, b) = (component[idx], component[idx + stride]);
                if a != b {
                    *contacts.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
        }
    }

    // Components with fewer than `min_contact` cells have no interior at
    // this resolution (e.g. a threshold exactly on a tie surface).
    let mut sizes = vec![0usize; labels.len()];
    for &c in &component {
        sizes[c] += 1;
    }
    let tiny: Vec<bool> = sizes.iter().map(|&s| s < min_contact).collect();
    let (labels, contacts) = absorb(&labels, &contacts, &tiny);

    // A border counts when it spans `min_contact` faces, or a quarter of the
    // smaller component's total border for components too small to have one
    // that long.
    let mut perimeter = vec![0usize; labels.len()];
    for (&(a, b), &count) in &contacts {
        perimeter[a] += count;
        perimeter[b] += count;
    }
    let edges: Vec<(usize, usize)> = contacts
        .into_iter()
        .filter(|&((a, b), count)| count >= min_contact || 4 * count >= perimeter[a].min(perimeter[b]))
        .map(|(pair, _)| pair)
        .collect();

    TopologySignature::from_components(grid.num_classes, &labels, &edges)
}

/// Signature of a rule at one threshold.
pub fn signature_for(rule: &DecisionRule, theta: f64, grid: &GridSpec) -> Result<TopologySignature> {
    Ok(signature_from_grid(&label_grid_with_rule(rule, theta, grid)?))
}

/// A family of decision functions to sweep. The one-hot families take their
/// class count from the grid dimension.
#[derive(Debug, Clone, Copy)]
pub enum DecisionFamily<'a> {
    Max,
    Softmax,
    OneHotDistance,
    /// One-hot distance rule with ceiling `1 − θ`: class regions are balls of
    /// radius `1 − θ` around the basis vectors, so larger θ shrinks them.
    OneHotDistanceComplement,
    Dense(&'a [ClassEncodingSet]),
}

fn family_rules(family: &DecisionFamily<'_>, grid: &GridSpec) -> Result<Vec<DecisionRule>> {
    let c = grid.dim;
    Ok(match family {
        DecisionFamily::Max => vec![DecisionRule::Max { classes: c }],
        DecisionFamily::Softmax => vec![DecisionRule::Softmax { classes: c }],
        DecisionFamily::OneHotDistance | DecisionFamily::OneHotDistanceComplement => {
            vec![DecisionRule::OneHotDistance { classes: c }]
        }
        DecisionFamily::Dense(encs) => {
            if encs.is_empty() {
                return Err(Error::invalid("dense family needs at least one encoding"));
            }
            encs.iter().map(|e| DecisionRule::Dense(e.clone())).collect()
        }
    })
}

/// Signature at every `(encoding, θ)` pair, in sweep order.
pub fn sweep_signatures(
    family: &DecisionFamily<'_>,
    thetas: &[f64],
    grid: &GridSpec,
) -> Result<Vec<(f64, TopologySignature)>> {
    if thetas.is_empty() {
        return Err(Error::invalid("threshold sweep is empty"));
    }
    let mut out = Vec::new();
    for rule in family_rules(family, grid)? {
        for &theta in thetas {
            let effective = match family {
                DecisionFamily::OneHotDistanceComplement => 1.0 - theta,
                _ => theta,
            };
            out.push((theta, signature_for(&rule, effective, grid)?));
        }
    }
    Ok(out)
}

/// Distinct signatures over the product of thresholds and encodings.
pub fn enumerate_signatures(
    family: &DecisionFamily<'_>,
    thetas: &[f64],
    grid: &GridSpec,
) -> Result<BTreeSet<TopologySignature>> {
    Ok(sweep_signatures(family, thetas, grid)?.into_iter().map(|(_, s)| s).collect())
}

/// Occurrence count of each signature over paired `(encoding, θ)` draws.
pub fn survey_dense<'a, I>(draws: I, grid: &GridSpec) -> Result<BTreeMap<TopologySignature, usize>>
where
    I: IntoIterator<Item = (&'a ClassEncodingSet, f64)>,
{
    let mut seen = BTreeMap::new();
    for (enc, theta) in draws {
        let sig = signature_for(&DecisionRule::Dense(enc.clone()), theta, grid)?;
        *seen.entry(sig).or_insert(0) += 1;
    }
    Ok(seen)
}

/// Thresholds at which the softmax rule changes topology: `1/c, 1/(c−1), …, 1/2`.
pub fn softmax_threshold_boundaries(c: usize) -> Result<Vec<f64>> {
    if c < 2 {
        return Err(Error::invalid(format!("need c >= 2, got {c}")));
    }
    Ok((2..=c).rev().map(|k| 1.0 / k as f64).collect())
}

/// Candidate topology boundaries of the one-hot distance rule.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceBoundaries {
    /// `1/√c, 1/√(c−1), …, 1/√2`: the thresholds where `k` balls of radius θ
    /// around basis vectors start to meet (pairs meet at `1/√2`).
    pub interval_endpoints: Vec<f64>,
    /// For `c = 2` only: `1 − 1/√2`, the boundary of the planar analysis in
    /// which class regions are discs of radius `1 − θ`.
    pub planar_boundary: Option<f64>,
}

pub fn distance_threshold_boundaries(c: usize) -> Result<DistanceBoundaries> {
    if c < 2 {
        return Err(Error::invalid(format!("need c >= 2, got {c}")));
    }
    Ok(DistanceBoundaries {
        interval_endpoints: (2..=c).rev().map(|k| 1.0 / (k as f64).sqrt()).collect(),
        planar_boundary: (c == 2).then(|| 1.0 - 1.0 / 2f64.sqrt()),
    })
}
