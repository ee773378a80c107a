//! Plot unit graphs: definitions, recognition of bound instances in event
//! sequences, and instantiation as scenario skeletons.
//!
//! An event sequence is first flattened into *elements*: positive and
//! negative outcomes and mental states, each on the lane of the agent it
//! belongs to. Recognition is subgraph matching of a definition's nodes onto
//! elements, subject to lane consistency and link order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::concept::{Bindings, Concept, Symbol, Term};
use crate::error::{Error, Result};
use crate::planner::{EventKind, ScenarioEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Positive,
    Negative,
    Mental,
}

impl NodeKind {
    fn parse(s: &str) -> Option<NodeKind> {
        match s {
            "positive" | "pos" => Some(NodeKind::Positive),
            "negative" | "neg" => Some(NodeKind::Negative),
            "mental" | "m" => Some(NodeKind::Mental),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinkKind {
    /// `from` precedes `to`.
    Initiation,
    /// `from` comes after the `to` state it ends.
    Termination,
    /// Same situation seen from two lanes; no order.
    Coreference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PuNode {
    pub name: Symbol,
    pub lane: Symbol,
    pub kind: NodeKind,
    /// `None` matches any tag.
    pub tag: Option<Symbol>,
    /// Concept pattern over role variables used when the node becomes a
    /// skeleton step.
    pub template: Option<Concept>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PuLink {
    pub from: usize,
    pub to: usize,
    pub kind: LinkKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotUnitDef {
    pub name: Symbol,
    pub roles: Vec<Symbol>,
    pub nodes: Vec<PuNode>,
    pub links: Vec<PuLink>,
}

/// An outcome or mental state extracted from an event.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub event: usize,
    pub lane: Symbol,
    pub kind: NodeKind,
    pub tag: Symbol,
    pub concept: Concept,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PuInstance {
    pub def: Symbol,
    /// Role to agent.
    pub bindings: BTreeMap<Symbol, Symbol>,
    /// Node index to element index.
    pub node_map: Vec<usize>,
}

impl fmt::Display for PuInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PU-{}", self.def.as_str().to_uppercase())?;
        for agent in self.bindings.values().rev() {
            write!(f, " {}", agent.as_str().to_uppercase())?;
        }
        Ok(())
    }
}

/// One node of a skeleton, with its template bound.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonStep {
    pub node: Symbol,
    pub kind: NodeKind,
    pub agent: Symbol,
    pub template: Option<Concept>,
}

fn bad(c: &Concept, why: &str) -> Error {
    Error::Domain(format!("bad plot-unit form {}: {}", c, why))
}

impl PlotUnitDef {
    /// Read a `(plot-unit NAME (roles A ...) (node ...) ... (link ...) ...)`
    /// form. Nodes are `(node NAME LANE KIND [TAG [TEMPLATE]])` with `any`
    /// as the wildcard tag; links are `(link FROM TO KIND)`.
    pub fn from_concept(form: &Concept) -> Result<PlotUnitDef> {
        if form.head().as_str() != "plot-unit" {
            return Err(bad(form, "expected plot-unit"));
        }
        let name = form.atom_arg(0).ok_or_else(|| bad(form, "missing name"))?.clone();
        let mut roles = Vec::new();
        let mut nodes: Vec<PuNode> = Vec::new();
        let mut pending_links = Vec::new();
        for part in form.args().skip(1) {
            let part = part.as_concept().ok_or_else(|| bad(form, "expected sub-forms"))?;
            match part.head().as_str() {
                "roles" => roles = part.args().filter_map(|t| t.as_atom().cloned()).collect(),
                "node" => {
                    let get = |i| part.atom_arg(i).cloned().ok_or_else(|| bad(part, "node needs name, lane, kind"));
                    let kind_sym = get(2)?;
                    let kind = NodeKind::parse(kind_sym.as_str()).ok_or_else(|| bad(part, "unknown node kind"))?;
                    let tag = part.atom_arg(3).filter(|t| t.as_str() != "any").cloned();
                    nodes.push(PuNode {
                        name: get(0)?,
                        lane: get(1)?,
                        kind,
                        tag,
                        template: part.concept_arg(4).or_else(|| part.concept_arg(3)).cloned(),
                    });
                }
                "link" => pending_links.push(part.clone()),
                _ => return Err(bad(part, "unknown sub-form")),
            }
        }
        let index = |s: &Symbol| nodes.iter().position(|n| &n.name == s);
        let mut links = Vec::new();
        for l in pending_links {
            let (Some(f), Some(t), Some(k)) = (l.atom_arg(0), l.atom_arg(1), l.atom_arg(2)) else {
                return Err(bad(&l, "link needs from, to, kind"));
            };
            let kind = match k.as_str() {
                "initiation" | "i" => LinkKind::Initiation,
                "termination" | "t" => LinkKind::Termination,
                "coreference" | "c" => LinkKind::Coreference,
                _ => return Err(bad(&l, "unknown link kind")),
            };
            let from = index(f).ok_or_else(|| bad(&l, "link names an undeclared node"))?;
            let to = index(t).ok_or_else(|| bad(&l, "link names an undeclared node"))?;
            links.push(PuLink { from, to, kind });
        }
        if let Some(n) = nodes.iter().find(|n| !roles.contains(&n.lane)) {
            return Err(bad(form, &format!("node {} is on undeclared lane {}", n.name, n.lane)));
        }
        Ok(PlotUnitDef { name, roles, nodes, links })
    }

    /// Node sequence bound to agents. `bindings` maps role variables (and
    /// any extra template variables) to terms.
    pub fn skeleton(&self, bindings: &Bindings) -> Result<Vec<SkeletonStep>> {
        for r in &self.roles {
            if !matches!(bindings.get(r), Some(Term::Atom(_))) {
                return Err(Error::UnboundRole(r.to_string()));
            }
        }
        Ok(self
            .nodes
            .iter()
            .map(|n| SkeletonStep {
                node: n.name.clone(),
                kind: n.kind,
                agent: bindings.get(&n.lane).and_then(|t| t.as_atom()).cloned().expect("checked above"),
                template: n.template.as_ref().map(|t| t.substitute(bindings)),
            })
            .collect())
    }
}

/// Flatten events into plot-unit elements. GOAL-CHANGE and RECALL outcomes
/// become positive or negative states on the lane of the goal's owner
/// (its first argument); goals over `mental_heads` and every ACTION become
/// mental states. Only agents in `agents` own lanes.
pub fn elements(events: &[ScenarioEvent], agents: &BTreeSet<Symbol>, mental_heads: &BTreeSet<Symbol>) -> Vec<Element> {
    let mut out = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let (kind, c) = match e.kind {
            EventKind::GoalChange | EventKind::Recall => {
                let Some((status, g)) = e.goal_change() else { continue };
                let k = match status {
                    "succeeded" if mental_heads.contains(g.head()) => NodeKind::Mental,
                    "succeeded" => NodeKind::Positive,
                    "failed" => NodeKind::Negative,
                    _ => continue,
                };
                (k, g)
            }
            EventKind::Action => (NodeKind::Mental, &e.payload),
            _ => continue,
        };
        let Some(owner) = c.atom_arg(0).filter(|a| agents.contains(*a)) else { continue };
        out.push(Element { event: i, lane: owner.clone(), kind, tag: c.head().clone(), concept: c.clone() });
    }
    out
}

struct Matcher<'a> {
    def: &'a PlotUnitDef,
    elements: &'a [Element],
    found: Vec<PuInstance>,
}

impl<'a> Matcher<'a> {
    fn link_ok(&self, link: &PuLink, assign: &[usize]) -> bool {
        let (Some(&f), Some(&t)) = (assign.get(link.from), assign.get(link.to)) else {
            return true;
        };
        let (fe, te) = (self.elements[f].event, self.elements[t].event);
        match link.kind {
            LinkKind::Initiation => fe < te,
            LinkKind::Termination => fe > te,
            LinkKind::Coreference => true,
        }
    }

    fn search(&mut self, assign: &mut Vec<usize>, roles: &mut BTreeMap<Symbol, Symbol>) {
        let n = assign.len();
        if n == self.def.nodes.len() {
            self.found.push(PuInstance { def: self.def.name.clone(), bindings: roles.clone(), node_map: assign.clone() });
            return;
        }
        let node = &self.def.nodes[n];
        for (ei, el) in self.elements.iter().enumerate() {
            if assign.contains(&ei) || el.kind != node.kind {
                continue;
            }
            if node.tag.as_ref().map(|t| t != &el.tag).unwrap_or(false) {
                continue;
            }
            let fresh = match roles.get(&node.lane) {
                Some(agent) if agent != &el.lane => continue,
                Some(_) => false,
                None => {
                    if roles.values().any(|a| a == &el.lane) {
                        continue;
                    }
                    roles.insert(node.lane.clone(), el.lane.clone());
                    true
                }
            };
            assign.push(ei);
            if self.def.links.iter().all(|l| self.link_ok(l, assign)) {
                self.search(assign, roles);
            }
            assign.pop();
            if fresh {
                roles.remove(&node.lane);
            }
        }
    }
}

/// Every node assignment of `def` onto `elements`, in lexicographic order
/// of element indices.
pub fn recognize_all(def: &PlotUnitDef, elements: &[Element]) -> Vec<PuInstance> {
    let mut m = Matcher { def, elements, found: Vec::new() };
    m.search(&mut Vec::new(), &mut BTreeMap::new());
    m.found
}

/// Distinct instances (one per definition and role binding) of every
/// definition in `catalog`, in catalog order.
pub fn recognize(catalog: &[PlotUnitDef], elements: &[Element]) -> Vec<PuInstance> {
    let mut out: Vec<PuInstance> = Vec::new();
    for def in catalog {
        for inst in recognize_all(def, elements) {
            if !out.iter().any(|o| o.def == inst.def && o.bindings == inst.bindings) {
                out.push(inst);
            }
        }
    }
    out
}

/// The built-in definitions.
pub fn builtin_catalog() -> Vec<PlotUnitDef> {
    const TEXT: &str = include_str!("../data/plot-units.dd");
    crate::concept::parse_concepts(TEXT)
        .expect("built-in plot units parse")
        .iter()
        .map(|c| PlotUnitDef::from_concept(c).expect("built-in plot units are well formed"))
        .collect()
}
