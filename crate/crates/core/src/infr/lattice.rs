//! Direct summation of nested multilinear compositions over the lattice.

use num_complex::Complex64;
use serde::Serialize;

use super::term::NonlinearTerm;
use crate::spectral::{Grid, Region};

/// One monomial in a composition; `parent = (node, slot)` says which slot of
/// an earlier node this monomial replaces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Node {
    pub term: NonlinearTerm,
    pub parent: Option<(usize, usize)>,
}

/// A product structure: node 0 is the root, later nodes fill slots of earlier
/// ones. Slots that are not filled are leaves.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Composition {
    pub nodes: Vec<Node>,
    /// Extra frequency restrictions on individual leaves `(node, slot)`.
    pub leaf_regions: Vec<((usize, usize), Region)>,
}

/// A leaf of a composition with its effective conjugation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Leaf {
    pub node: usize,
    pub slot: usize,
    pub conj: bool,
    pub regions: Vec<Region>,
}

impl Composition {
    pub fn single(term: NonlinearTerm) -> Self {
        Self {
            nodes: vec![Node { term, parent: None }],
            leaf_regions: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.nodes.len()
    }

    fn child_of(&self, node: usize, slot: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.parent == Some((node, slot)))
    }

    /// Conjugation parity of each node: odd when it sits inside an odd number
    /// of conjugated slots.
    pub fn parities(&self) -> Vec<bool> {
        let mut par = vec![false; self.nodes.len()];
        for i in 1..self.nodes.len() {
            let (p, s) = self.nodes[i].parent.expect("non-root node has a parent");
            par[i] = par[p] ^ self.nodes[p].term.slots[s].conj;
        }
        par
    }

    pub fn leaves(&self) -> Vec<Leaf> {
        let par = self.parities();
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            for (j, slot) in n.term.slots.iter().enumerate() {
                if self.child_of(i, j).is_none() {
                    let mut regions = vec![slot.region];
                    regions.extend(
                        self.leaf_regions
                            .iter()
                            .filter(|(at, _)| *at == (i, j))
                            .map(|(_, r)| *r),
                    );
                    out.push(Leaf {
                        node: i,
                        slot: j,
                        conj: par[i] ^ slot.conj,
                        regions,
                    });
                }
            }
        }
        out
    }

    /// Number of leaves (the degree of the composition in `V`).
    pub fn degree(&self) -> usize {
        self.nodes.iter().map(|n| n.term.arity()).sum::<usize>() + 1 - self.nodes.len()
    }

    /// Replaces leaf `(node, slot)` by `term`.
    pub fn substitute(&self, node: usize, slot: usize, term: NonlinearTerm) -> Self {
        let mut c = self.clone();
        c.nodes.push(Node {
            term,
            parent: Some((node, slot)),
        });
        c
    }

    pub fn with_leaf_region(&self, node: usize, slot: usize, region: Region) -> Self {
        let mut c = self.clone();
        c.leaf_regions.push(((node, slot), region));
        c
    }

    /// Upper bound for `|partial phase|` over the lattice.
    pub fn phase_bound(&self, grid: &Grid) -> f64 {
        let m = grid.xi_max().powi(2);
        (self.degree() as f64 + self.depth() as f64) * m
    }
}

/// A visited lattice tuple.
pub struct Tuple<'a> {
    /// Lattice index of the output frequency.
    pub out: usize,
    /// Partial phases `Phi_1, ..., Phi_depth`.
    pub phases: &'a [f64],
    /// Lattice measure times all multipliers.
    pub factor: Complex64,
    /// Lattice index of each leaf, in [`Composition::leaves`] order.
    pub leaves: &'a [usize],
}

/// Enumerates every admissible tuple of leaf frequencies. `candidates[l]` lists
/// the lattice indices allowed for leaf `l` (typically the active modes of its
/// input); region restrictions are applied here.
pub fn enumerate(
    comp: &Composition,
    grid: &Grid,
    candidates: &[Vec<usize>],
    mut visit: impl FnMut(&Tuple<'_>),
) {
    let leaves = comp.leaves();
    assert_eq!(leaves.len(), candidates.len(), "one candidate list per leaf");
    let filtered: Vec<Vec<usize>> = leaves
        .iter()
        .zip(candidates)
        .map(|(leaf, cand)| {
            cand.iter()
                .copied()
                .filter(|&i| i != 0 && leaf.regions.iter().all(|r| r.contains(grid.xi(i))))
                .collect()
        })
        .collect();
    if filtered.iter().any(|c| c.is_empty()) {
        return;
    }
    let ctx = Context::new(comp, grid, &leaves);
    let mut chosen = vec![0usize; leaves.len()];
    let mut scratch = Scratch::new(comp);
    recurse(&ctx, &filtered, 0, &mut chosen, &mut scratch, &mut visit);
}

struct Context<'a> {
    comp: &'a Composition,
    grid: &'a Grid,
    parities: Vec<bool>,
    /// For each node and slot: `Ok(leaf index)` or `Err(child node)`.
    slot_source: Vec<Vec<std::result::Result<usize, usize>>>,
    measure: f64,
    half: i64,
}

impl<'a> Context<'a> {
    fn new(comp: &'a Composition, grid: &'a Grid, leaves: &[Leaf]) -> Self {
        let slot_source = comp
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                (0..n.term.arity())
                    .map(|j| match comp.child_of(i, j) {
                        Some(c) => Err(c),
                        None => Ok(leaves
                            .iter()
                            .position(|l| l.node == i && l.slot == j)
                            .expect("leaf listed")),
                    })
                    .collect()
            })
            .collect();
        let convolutions = comp.nodes.iter().map(|n| n.term.arity() - 1).sum::<usize>();
        Self {
            comp,
            grid,
            parities: comp.parities(),
            slot_source,
            measure: grid.spectral_weight().powi(convolutions as i32),
            half: grid.n_points() as i64 / 2,
        }
    }
}

struct Scratch {
    outputs: Vec<i64>,
    slot_xis: Vec<Vec<f64>>,
    phases: Vec<f64>,
}

impl Scratch {
    fn new(comp: &Composition) -> Self {
        Self {
            outputs: vec![0; comp.nodes.len()],
            slot_xis: comp.nodes.iter().map(|n| vec![0.0; n.term.arity()]).collect(),
            phases: vec![0.0; comp.nodes.len()],
        }
    }
}

fn recurse(
    ctx: &Context<'_>,
    cand: &[Vec<usize>],
    depth: usize,
    chosen: &mut Vec<usize>,
    scratch: &mut Scratch,
    visit: &mut impl FnMut(&Tuple<'_>),
) {
    if depth == cand.len() {
        evaluate(ctx, chosen, scratch, visit);
        return;
    }
    for &i in &cand[depth] {
        chosen[depth] = i;
        recurse(ctx, cand, depth + 1, chosen, scratch, visit);
    }
}

fn evaluate(
    ctx: &Context<'_>,
    chosen: &[usize],
    s: &mut Scratch,
    visit: &mut impl FnMut(&Tuple<'_>),
) {
    let grid = ctx.grid;
    let nodes = &ctx.comp.nodes;
    // outputs bottom-up: children always come after their parents
    for i in (0..nodes.len()).rev() {
        let term = &nodes[i].term;
        let mut out = 0i64;
        for (j, slot) in term.slots.iter().enumerate() {
            let k = match ctx.slot_source[i][j] {
                Ok(l) => chosen[l] as i64 - ctx.half,
                Err(c) => s.outputs[c],
            };
            s.slot_xis[i][j] = k as f64 * grid.dxi();
            out += if slot.conj { -k } else { k };
        }
        if out.abs() >= ctx.half {
            return;
        }
        s.outputs[i] = out;
    }
    let mut factor = Complex64::new(ctx.measure, 0.0);
    let mut total = 0.0;
    for (i, node) in nodes.iter().enumerate() {
        let xi = s.outputs[i] as f64 * grid.dxi();
        let term = &node.term;
        if !term.admits(xi, &s.slot_xis[i]) {
            return;
        }
        let m = term.multiplier.eval(xi, &s.slot_xis[i], term.inner_frequency(&s.slot_xis[i]));
        let local = term.phase_unchecked(xi, &s.slot_xis[i]);
        if ctx.parities[i] {
            factor *= m.conj();
            total -= local;
        } else {
            factor *= m;
            total += local;
        }
        s.phases[i] = total;
    }
    if factor == Complex64::new(0.0, 0.0) {
        return;
    }
    visit(&Tuple {
        out: (s.outputs[0] + ctx.half) as usize,
        phases: &s.phases,
        factor,
        leaves: chosen,
    });
}

/// Lattice indices where `|c| > rel * max|c|` (the active modes of an input).
pub fn active_modes(coeffs: &[Complex64], rel: f64) -> Vec<usize> {
    let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    (0..coeffs.len())
        .filter(|&i| coeffs[i].norm() > rel * max)
        .collect()
}

/// Union of the active modes of several inputs.
pub fn active_union<'a>(inputs: impl IntoIterator<Item = &'a [Complex64]>, rel: f64) -> Vec<usize> {
    let mut all: Vec<usize> = inputs.into_iter().flat_map(|c| active_modes(c, rel)).collect();
    all.sort_unstable();
    all.dedup();
    all
}
