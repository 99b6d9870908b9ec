//! Road-network data model: links, intersections, movements, stages, and
//! the JSON network file.
//!
//! Links and intersections carry an external integer `label` (the id used
//! in files and reports) and a dense internal index used for all matrix
//! work. Every movement has exactly one flow sensor, identified by the
//! movement index.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntersectionId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SensorId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Entry,
    Internal,
    Exit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub label: u64,
    pub kind: LinkKind,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub label: u64,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Movement {
    pub from: LinkId,
    pub to: LinkId,
    /// Saturation flow c(i,j), vehicles per sample period.
    pub saturation: f64,
    pub sensor: SensorId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub intersection: IntersectionId,
    /// Movement indices activated together.
    pub phases: Vec<usize>,
    pub name: Option<String>,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed network file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("invalid flows: {0}")]
    Flows(String),
    #[error("grid generation failed: {0}")]
    Generation(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, NetworkError> {
    Err(NetworkError::Validation(msg.into()))
}

/// Validated, immutable road network.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    links: Vec<Link>,
    intersections: Vec<Intersection>,
    movements: Vec<Movement>,
    stages: Vec<Stage>,
    lost_time: f64,
    sample_rate: f64,
    movement_intersection: Vec<IntersectionId>,
    stages_of_movement: Vec<Vec<usize>>,
    stages_of_intersection: Vec<Vec<usize>>,
    movements_of_intersection: Vec<Vec<usize>>,
    into_link: Vec<Vec<usize>>,
    out_of_link: Vec<Vec<usize>>,
    movement_lookup: HashMap<(usize, usize), usize>,
    link_lookup: HashMap<u64, LinkId>,
}

/// Nonnegative flow per movement (vehicles per sample period).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix(Vec<f64>);

impl FlowMatrix {
    pub fn new(values: Vec<f64>) -> Result<Self, NetworkError> {
        if let Some((m, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(NetworkError::Flows(format!("movement {m} has flow {v}")));
        }
        Ok(FlowMatrix(values))
    }

    pub fn zeros(len: usize) -> Self {
        FlowMatrix(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, m: usize) -> f64 {
        self.0[m]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Copy with one entry replaced.
    pub fn with(&self, m: usize, value: f64) -> Result<Self, NetworkError> {
        let mut v = self.0.clone();
        v[m] = value;
        FlowMatrix::new(v)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, NetworkError> {
        FlowMatrix::new(self.0.iter().map(|v| v * factor).collect())
    }
}

/// Σ f(i,j) over all movements.
pub fn total_flow(flows: &FlowMatrix) -> f64 {
    flows.0.iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationViolation {
    pub link: LinkId,
    pub inflow: f64,
    pub outflow: f64,
}

impl ConservationViolation {
    pub fn magnitude(&self) -> f64 {
        (self.inflow - self.outflow).abs()
    }
}

/// Internal links whose inflow and outflow differ by more than `tol`.
pub fn check_conservation(net: &RoadNetwork, flows: &FlowMatrix, tol: f64) -> Vec<ConservationViolation> {
    let mut out = Vec::new();
    for (l, link) in net.links.iter().enumerate() {
        if link.kind != LinkKind::Internal {
            continue;
        }
        let inflow: f64 = net.into_link[l].iter().map(|&m| flows.get(m)).sum();
        let outflow: f64 = net.out_of_link[l].iter().map(|&m| flows.get(m)).sum();
        if (inflow - outflow).abs() > tol {
            out.push(ConservationViolation { link: LinkId(l), inflow, outflow });
        }
    }
    out
}

/// Incremental constructor; `build` runs the full validation.
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    links: Vec<Link>,
    intersections: Vec<Intersection>,
    movements: Vec<(LinkId, LinkId, f64)>,
    stages: Vec<Stage>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn link(&mut self, label: u64, kind: LinkKind, name: Option<String>) -> LinkId {
        self.links.push(Link { label, kind, name });
        LinkId(self.links.len() - 1)
    }

    pub fn intersection(&mut self, label: u64, name: Option<String>) -> IntersectionId {
        self.intersections.push(Intersection { label, name });
        IntersectionId(self.intersections.len() - 1)
    }

    pub fn movement(&mut self, from: LinkId, to: LinkId, saturation: f64) -> usize {
        self.movements.push((from, to, saturation));
        self.movements.len() - 1
    }

    pub fn stage(&mut self, intersection: IntersectionId, phases: Vec<usize>, name: Option<String>) -> usize {
        self.stages.push(Stage { intersection, phases, name });
        self.stages.len() - 1
    }

    pub fn build(self, lost_time: f64, sample_rate: f64) -> Result<RoadNetwork, NetworkError> {
        let NetworkBuilder { links, intersections, movements, stages } = self;
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return invalid(format!("sample_rate must be positive, got {sample_rate}"));
        }
        if !(lost_time.is_finite() && lost_time >= 0.0) {
            return invalid(format!("lost_time must be nonnegative, got {lost_time}"));
        }
        let mut link_lookup = HashMap::new();
        for (i, l) in links.iter().enumerate() {
            if link_lookup.insert(l.label, LinkId(i)).is_some() {
                return invalid(format!("duplicate link id {}", l.label));
            }
        }
        let mut seen = HashSet::new();
        for n in &intersections {
            if !seen.insert(n.label) {
                return invalid(format!("duplicate intersection id {}", n.label));
            }
        }
        let label = |l: LinkId| links[l.0].label;
        let mut movement_lookup = HashMap::new();
        let mut into_link = vec![Vec::new(); links.len()];
        let mut out_of_link = vec![Vec::new(); links.len()];
        for (m, &(from, to, sat)) in movements.iter().enumerate() {
            if from.0 >= links.len() || to.0 >= links.len() {
                return invalid(format!("movement {m} references an unknown link"));
            }
            if !(sat.is_finite() && sat > 0.0) {
                return invalid(format!(
                    "movement ({},{}) has non-positive saturation {sat}",
                    label(from),
                    label(to)
                ));
            }
            if links[from.0].kind == LinkKind::Exit {
                return invalid(format!("movement ({},{}) leaves exit link {}", label(from), label(to), label(from)));
            }
            if links[to.0].kind == LinkKind::Entry {
                return invalid(format!("movement ({},{}) enters entry link {}", label(from), label(to), label(to)));
            }
            if from == to {
                return invalid(format!("movement ({},{}) is a self loop", label(from), label(to)));
            }
            if movement_lookup.insert((from.0, to.0), m).is_some() {
                return invalid(format!("duplicate movement ({},{})", label(from), label(to)));
            }
            out_of_link[from.0].push(m);
            into_link[to.0].push(m);
        }
        let mut stages_of_movement = vec![Vec::new(); movements.len()];
        let mut stage_owner: Vec<Option<IntersectionId>> = vec![None; movements.len()];
        let mut stages_of_intersection = vec![Vec::new(); intersections.len()];
        for (s, st) in stages.iter().enumerate() {
            if st.intersection.0 >= intersections.len() {
                return invalid(format!("stage {s} references an unknown intersection"));
            }
            if st.phases.is_empty() {
                return invalid(format!("stage {s} has no phases"));
            }
            let mut uniq = HashSet::new();
            for &m in &st.phases {
                if m >= movements.len() {
                    return invalid(format!("stage {s} references an unknown movement"));
                }
                if !uniq.insert(m) {
                    return invalid(format!("stage {s} lists a phase twice"));
                }
                match stage_owner[m] {
                    Some(n) if n != st.intersection => {
                        let (f, t, _) = movements[m];
                        return invalid(format!(
                            "movement ({},{}) belongs to stages of two intersections",
                            label(f),
                            label(t)
                        ));
                    }
                    _ => stage_owner[m] = Some(st.intersection),
                }
                stages_of_movement[m].push(s);
            }
            stages_of_intersection[st.intersection.0].push(s);
        }
        // Movements outside every stage inherit the intersection of a
        // sibling sharing their from-link or to-link.
        let mut end_node: Vec<Option<IntersectionId>> = vec![None; links.len()];
        let mut start_node: Vec<Option<IntersectionId>> = vec![None; links.len()];
        for (m, owner) in stage_owner.iter().enumerate() {
            if let Some(n) = owner {
                let (from, to, _) = movements[m];
                end_node[from.0].get_or_insert(*n);
                start_node[to.0].get_or_insert(*n);
            }
        }
        let mut movement_intersection = Vec::with_capacity(movements.len());
        for (m, &(from, to, _)) in movements.iter().enumerate() {
            let n = stage_owner[m].or(end_node[from.0]).or(start_node[to.0]);
            let Some(n) = n else {
                return invalid(format!(
                    "movement ({},{}) cannot be placed at any intersection",
                    label(from),
                    label(to)
                ));
            };
            movement_intersection.push(n);
        }
        for (m, &(from, to, _)) in movements.iter().enumerate() {
            let n = movement_intersection[m];
            for &other in out_of_link[from.0].iter().chain(&into_link[to.0]) {
                let o = movement_intersection[other];
                if o != n {
                    return invalid(format!(
                        "movements ({},{}) and ({},{}) share a link but sit at different intersections",
                        label(from),
                        label(to),
                        label(movements[other].0),
                        label(movements[other].1)
                    ));
                }
            }
        }
        for (l, link) in links.iter().enumerate() {
            if link.kind == LinkKind::Internal && (into_link[l].is_empty() || out_of_link[l].is_empty()) {
                return invalid(format!("internal link {} needs both incoming and outgoing movements", link.label));
            }
        }
        for (n, ss) in stages_of_intersection.iter().enumerate() {
            if ss.is_empty() {
                return invalid(format!("intersection {} has no stages", intersections[n].label));
            }
        }
        let mut movements_of_intersection = vec![Vec::new(); intersections.len()];
        for (m, n) in movement_intersection.iter().enumerate() {
            movements_of_intersection[n.0].push(m);
        }
        let movements = movements
            .into_iter()
            .enumerate()
            .map(|(m, (from, to, saturation))| Movement { from, to, saturation, sensor: SensorId(m) })
            .collect();
        Ok(RoadNetwork {
            links,
            intersections,
            movements,
            stages,
            lost_time,
            sample_rate,
            movement_intersection,
            stages_of_movement,
            stages_of_intersection,
            movements_of_intersection,
            into_link,
            out_of_link,
            movement_lookup,
            link_lookup,
        })
    }
}

impl RoadNetwork {
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn intersections(&self) -> &[Intersection] {
        &self.intersections
    }

    pub fn movements(&self) -> &[Movement] {
        &self.movements
    }

    pub fn movement(&self, m: usize) -> &Movement {
        &self.movements[m]
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn num_movements(&self) -> usize {
        self.movements.len()
    }

    pub fn lost_time(&self) -> f64 {
        self.lost_time
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn movement_intersection(&self, m: usize) -> IntersectionId {
        self.movement_intersection[m]
    }

    pub fn stages_of_movement(&self, m: usize) -> &[usize] {
        &self.stages_of_movement[m]
    }

    pub fn stages_of_intersection(&self, n: IntersectionId) -> &[usize] {
        &self.stages_of_intersection[n.0]
    }

    pub fn movements_of_intersection(&self, n: IntersectionId) -> &[usize] {
        &self.movements_of_intersection[n.0]
    }

    /// Movements entering link `l` (In(l) side).
    pub fn movements_into(&self, l: LinkId) -> &[usize] {
        &self.into_link[l.0]
    }

    /// Movements leaving link `l` (Out(l) side).
    pub fn movements_out_of(&self, l: LinkId) -> &[usize] {
        &self.out_of_link[l.0]
    }

    pub fn internal_links(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == LinkKind::Internal)
            .map(|(i, _)| LinkId(i))
    }

    pub fn link_by_label(&self, label: u64) -> Option<LinkId> {
        self.link_lookup.get(&label).copied()
    }

    /// Movement index for the link labels `(from, to)`.
    pub fn find_movement(&self, from: u64, to: u64) -> Option<usize> {
        let f = self.link_by_label(from)?;
        let t = self.link_by_label(to)?;
        self.movement_lookup.get(&(f.0, t.0)).copied()
    }

    pub fn movement_labels(&self, m: usize) -> (u64, u64) {
        let mv = &self.movements[m];
        (self.links[mv.from.0].label, self.links[mv.to.0].label)
    }

    pub fn stage_label(&self, s: usize) -> String {
        self.stages[s].name.clone().unwrap_or_else(|| format!("S{}", s + 1))
    }

    /// Non-fatal findings: movements outside every stage cannot be served
    /// and force zero flow.
    pub fn warnings(&self) -> Vec<String> {
        (0..self.movements.len())
            .filter(|&m| self.stages_of_movement[m].is_empty())
            .map(|m| {
                let (f, t) = self.movement_labels(m);
                format!("movement ({f},{t}) is not part of any stage")
            })
            .collect()
    }
}

impl fmt::Display for RoadNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} links, {} intersections, {} movements, {} stages",
            self.links.len(),
            self.intersections.len(),
            self.movements.len(),
            self.stages.len()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkRecord {
    pub id: u64,
    pub kind: LinkKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectionRecord {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovementRecord {
    pub from: u64,
    pub to: u64,
    pub saturation: f64,
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub intersection: u64,
    pub phases: Vec<[u64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// On-disk network document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub links: Vec<LinkRecord>,
    pub intersections: Vec<IntersectionRecord>,
    pub movements: Vec<MovementRecord>,
    pub stages: Vec<StageRecord>,
    pub lost_time: f64,
    pub sample_rate: f64,
}

impl NetworkFile {
    pub fn into_network(self) -> Result<(RoadNetwork, FlowMatrix), NetworkError> {
        let mut b = NetworkBuilder::new();
        let mut links = BTreeMap::new();
        for l in &self.links {
            if links.insert(l.id, b.link(l.id, l.kind, l.name.clone())).is_some() {
                return invalid(format!("duplicate link id {}", l.id));
            }
        }
        let mut nodes = BTreeMap::new();
        for n in &self.intersections {
            if nodes.insert(n.id, b.intersection(n.id, n.name.clone())).is_some() {
                return invalid(format!("duplicate intersection id {}", n.id));
            }
        }
        let mut by_pair = HashMap::new();
        let mut flows = Vec::with_capacity(self.movements.len());
        for mv in &self.movements {
            let from = *links
                .get(&mv.from)
                .ok_or_else(|| NetworkError::Validation(format!("movement ({},{}) references unknown link {}", mv.from, mv.to, mv.from)))?;
            let to = *links
                .get(&mv.to)
                .ok_or_else(|| NetworkError::Validation(format!("movement ({},{}) references unknown link {}", mv.from, mv.to, mv.to)))?;
            if !(mv.flow.is_finite() && mv.flow >= 0.0) {
                return invalid(format!("movement ({},{}) has invalid flow {}", mv.from, mv.to, mv.flow));
            }
            let m = b.movement(from, to, mv.saturation);
            by_pair.insert((mv.from, mv.to), m);
            flows.push(mv.flow);
        }
        for (s, st) in self.stages.iter().enumerate() {
            let n = *nodes
                .get(&st.intersection)
                .ok_or_else(|| NetworkError::Validation(format!("stage {s} references unknown intersection {}", st.intersection)))?;
            let mut phases = Vec::with_capacity(st.phases.len());
            for [f, t] in &st.phases {
                let m = by_pair
                    .get(&(*f, *t))
                    .ok_or_else(|| NetworkError::Validation(format!("stage {s} references unknown movement ({f},{t})")))?;
                phases.push(*m);
            }
            b.stage(n, phases, st.name.clone());
        }
        let net = b.build(self.lost_time, self.sample_rate)?;
        Ok((net, FlowMatrix::new(flows)?))
    }

    pub fn from_network(net: &RoadNetwork, flows: &FlowMatrix) -> Self {
        NetworkFile {
            links: net
                .links
                .iter()
                .map(|l| LinkRecord { id: l.label, kind: l.kind, name: l.name.clone() })
                .collect(),
            intersections: net
                .intersections
                .iter()
                .map(|n| IntersectionRecord { id: n.label, name: n.name.clone() })
                .collect(),
            movements: (0..net.num_movements())
                .map(|m| {
                    let (from, to) = net.movement_labels(m);
                    MovementRecord { from, to, saturation: net.movements[m].saturation, flow: flows.get(m) }
                })
                .collect(),
            stages: net
                .stages
                .iter()
                .map(|s| StageRecord {
                    intersection: net.intersections[s.intersection.0].label,
                    phases: s.phases.iter().map(|&m| net.movement_labels(m).into()).collect(),
                    name: s.name.clone(),
                })
                .collect(),
            lost_time: net.lost_time,
            sample_rate: net.sample_rate,
        }
    }
}

pub fn parse_network(text: &str) -> Result<(RoadNetwork, FlowMatrix), NetworkError> {
    let file: NetworkFile = serde_json::from_str(text)?;
    file.into_network()
}

pub fn load_network(path: impl AsRef<Path>) -> Result<(RoadNetwork, FlowMatrix), NetworkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| NetworkError::Io { path: path.display().to_string(), source })?;
    parse_network(&text)
}

pub fn network_to_json(net: &RoadNetwork, flows: &FlowMatrix) -> String {
    let mut s = serde_json::to_string_pretty(&NetworkFile::from_network(net, flows)).expect("network serializes");
    s.push('\n');
    s
}

pub fn save_network(path: impl AsRef<Path>, net: &RoadNetwork, flows: &FlowMatrix) -> Result<(), NetworkError> {
    let path = path.as_ref();
    fs::write(path, network_to_json(net, flows)).map_err(|source| NetworkError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> NetworkFile {
        serde_json::from_str(
            r#"{
              "links": [{"id": 1, "kind": "entry"}, {"id": 2, "kind": "internal"},
                        {"id": 3, "kind": "exit"}, {"id": 4, "kind": "exit"}],
              "intersections": [{"id": 1}, {"id": 2}],
              "movements": [{"from": 1, "to": 2, "saturation": 10, "flow": 4},
                            {"from": 2, "to": 3, "saturation": 10, "flow": 3},
                            {"from": 2, "to": 4, "saturation": 10, "flow": 1}],
              "stages": [{"intersection": 1, "phases": [[1, 2]]},
                         {"intersection": 2, "phases": [[2, 3]]},
                         {"intersection": 2, "phases": [[2, 4]]}],
              "lost_time": 1, "sample_rate": 2
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn tiny_network_loads() {
        let (net, flows) = tiny().into_network().unwrap();
        assert_eq!(net.num_movements(), 3);
        assert_eq!(total_flow(&flows), 8.0);
        assert!(check_conservation(&net, &flows, 0.0).is_empty());
        assert_eq!(net.find_movement(2, 4), Some(2));
        assert_eq!(net.movement_intersection(0), IntersectionId(0));
        assert_eq!(net.movement_intersection(2), IntersectionId(1));
        assert!(net.warnings().is_empty());
    }

    #[test]
    fn unknown_link_rejected() {
        let mut f = tiny();
        f.movements[1].to = 99;
        let err = f.into_network().unwrap_err();
        assert!(matches!(err, NetworkError::Validation(ref m) if m.contains("unknown link 99")), "{err}");
    }

    #[test]
    fn zero_saturation_rejected() {
        let mut f = tiny();
        f.movements[0].saturation = 0.0;
        let err = f.into_network().unwrap_err();
        assert!(matches!(err, NetworkError::Validation(ref m) if m.contains("saturation")), "{err}");
    }

    #[test]
    fn structural_errors() {
        let mut f = tiny();
        f.movements[0].from = 3;
        assert!(f.into_network().is_err(), "movement out of an exit link");

        let mut f = tiny();
        f.stages[1].intersection = 1;
        assert!(f.into_network().is_err(), "one link ending at two intersections");

        let mut f = tiny();
        f.stages.remove(0);
        assert!(f.into_network().is_err(), "intersection without stages");

        let mut f = tiny();
        f.movements[0].flow = -1.0;
        assert!(f.into_network().is_err());

        let mut f = tiny();
        f.sample_rate = 0.0;
        assert!(f.into_network().is_err());

        assert!(matches!(parse_network("{\"links\": 3}"), Err(NetworkError::Parse(_))));
    }

    #[test]
    fn unstaged_movement_warns() {
        let mut f = tiny();
        f.stages.pop();
        let (net, _) = f.into_network().unwrap();
        assert_eq!(net.warnings(), vec!["movement (2,4) is not part of any stage".to_string()]);
        assert_eq!(net.movement_intersection(2), IntersectionId(1));
    }

    #[test]
    fn conservation_violation_reported() {
        let (net, flows) = tiny().into_network().unwrap();
        let broken = flows.with(1, 1.0).unwrap();
        let v = check_conservation(&net, &broken, 1e-9);
        assert_eq!(v.len(), 1);
        assert_eq!(net.link(v[0].link).label, 2);
        assert_eq!(v[0].magnitude(), 2.0);
    }
}
