//! Term trees of the normal form reduction.
//!
//! A tree at level `J` is a [`Composition`] of `J` monomials (for integrands)
//! or `J - 1` monomials (for boundary and remainder terms), together with the
//! role it plays in the expansion.

use serde::Serialize;

use super::lattice::{Composition, Leaf};
use super::params::InfrParams;
use super::term::RhsFamily;
use crate::spectral::Region;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeKind {
    /// `N^{(J)}` before splitting.
    Integrand,
    /// `N_1^{(J)}`: near-resonant part, kept as a time integral.
    Resonant,
    /// `N_2^{(J)}`: nonresonant part, integrated by parts at the next step.
    Nonresonant,
    /// `N_0^{(J)}`: boundary term with phase denominators.
    Boundary,
    /// `R^{(J)}`: boundary structure with one slot replaced by its time
    /// derivative.
    Remainder,
    /// Remainder whose differentiated slot carries `V_lo`; never expanded.
    LowRemainder,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermTree {
    pub level: usize,
    pub kind: TreeKind,
    pub comp: Composition,
    /// Leaf `(node, slot)` carrying a time derivative.
    pub dt_leaf: Option<(usize, usize)>,
}

impl TermTree {
    /// Level-1 integrands, one per monomial of the system.
    pub fn roots(system: &[RhsFamily]) -> Vec<TermTree> {
        system
            .iter()
            .flat_map(|f| f.monomials.iter())
            .map(|m| TermTree {
                level: 1,
                kind: TreeKind::Integrand,
                comp: Composition::single(m.clone()),
                dt_leaf: None,
            })
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.comp.degree()
    }

    /// Split the integrand into its resonant and nonresonant halves.
    pub fn split(&self) -> (TermTree, TermTree) {
        let mut near = self.clone();
        near.kind = TreeKind::Resonant;
        let mut far = self.clone();
        far.kind = TreeKind::Nonresonant;
        (near, far)
    }

    pub fn dump(&self, params: Option<&InfrParams>) -> TreeDump {
        let depth = self.comp.depth();
        let thresholds = (1..=depth)
            .map(|j| ThresholdDump {
                step: j,
                rule: if j == 1 {
                    "N".to_string()
                } else {
                    format!("c_{j} |Phi_1|^delta")
                },
                value: params.map(|p| if j == 1 { p.n_threshold } else { p.c(j) }),
            })
            .collect();
        TreeDump {
            level: self.level,
            kind: self.kind,
            degree: self.degree(),
            thresholds,
            nodes: self
                .comp
                .nodes
                .iter()
                .map(|n| NodeDump {
                    term: n.term.name.clone(),
                    parent: n.parent,
                    conj: n.term.slots.iter().map(|s| s.conj).collect(),
                    slot_regions: n.term.slots.iter().map(|s| s.region.label().to_string()).collect(),
                })
                .collect(),
            leaves: self
                .comp
                .leaves()
                .into_iter()
                .map(|l| LeafDump {
                    at: (l.node, l.slot),
                    conj: l.conj,
                    regions: l.regions.iter().map(|r| r.label().to_string()).collect(),
                    time_derivative: self.dt_leaf == Some((l.node, l.slot)),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdDump {
    pub step: usize,
    pub rule: String,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDump {
    pub term: String,
    pub parent: Option<(usize, usize)>,
    pub conj: Vec<bool>,
    pub slot_regions: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LeafDump {
    pub at: (usize, usize),
    pub conj: bool,
    pub regions: Vec<String>,
    pub time_derivative: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeDump {
    pub level: usize,
    pub kind: TreeKind,
    pub degree: usize,
    pub thresholds: Vec<ThresholdDump>,
    pub nodes: Vec<NodeDump>,
    pub leaves: Vec<LeafDump>,
}

pub fn dump_json(trees: &[TermTree], params: Option<&InfrParams>) -> Result<String> {
    let dumps: Vec<TreeDump> = trees.iter().map(|t| t.dump(params)).collect();
    Ok(serde_json::to_string_pretty(&dumps)?)
}

/// Representative points of the cells `(-inf,-1)`, `[-1,0)`, `{0}`, `(0,1]`,
/// `(1,inf)` from which every [`Region`] is built.
const CELLS: [f64; 5] = [-2.0, -0.5, 0.0, 0.5, 2.0];

pub fn regions_meet(a: &[Region], b: &[Region]) -> bool {
    CELLS
        .iter()
        .any(|&x| a.iter().chain(b).all(|r| r.contains(x)))
}

/// One step of the expansion. Each integrand at level `J` produces its
/// boundary tree at level `J+1`, and for every leaf a remainder tree whose
/// high-frequency part is replaced by each monomial of `system` (the
/// substitution trees, integrands at level `J+1`) and whose low-frequency
/// part is kept as a [`TreeKind::LowRemainder`].
pub fn expand_infr(trees: &[TermTree], system: &[RhsFamily]) -> Vec<TermTree> {
    let mut out = Vec::new();
    for tree in trees.iter().filter(|t| t.kind == TreeKind::Integrand) {
        let next = tree.level + 1;
        out.push(TermTree {
            level: next,
            kind: TreeKind::Boundary,
            comp: tree.comp.clone(),
            dt_leaf: None,
        });
        for Leaf { node, slot, regions, .. } in tree.comp.leaves() {
            out.push(TermTree {
                level: next,
                kind: TreeKind::Remainder,
                comp: tree.comp.clone(),
                dt_leaf: Some((node, slot)),
            });
            for m in system.iter().flat_map(|f| f.monomials.iter()) {
                if regions_meet(&regions, &[m.output]) {
                    out.push(TermTree {
                        level: next,
                        kind: TreeKind::Integrand,
                        comp: tree.comp.substitute(node, slot, m.clone()),
                        dt_leaf: None,
                    });
                }
            }
            if regions_meet(&regions, &[Region::Lo]) {
                out.push(TermTree {
                    level: next,
                    kind: TreeKind::LowRemainder,
                    comp: tree.comp.with_leaf_region(node, slot, Region::Lo),
                    dt_leaf: Some((node, slot)),
                });
            }
        }
    }
    out
}
