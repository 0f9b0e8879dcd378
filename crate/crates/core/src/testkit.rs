//! Generators and fixture helpers for tests and benchmarks.

use std::path::PathBuf;

use proptest::prelude::*;

use crate::dfd::{DataFlow, DfdElement, DfdModel, ElementKind, IdentityMode, TrustBoundary};
use crate::layer::Layer;
use crate::process::{
    ConstraintKind, DataStoreRef, Lane, MessageFlow, Pool, ProcessModel, SecurityConstraint,
    SequenceFlow, TaskKind, TaskNode,
};

/// Directory holding the bundled fixture corpus.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(relative: &str) -> Vec<u8> {
    let path = fixtures_dir().join(relative);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Raw choices from which a DFD is assembled; every draw yields a valid model.
#[derive(Debug, Clone)]
pub struct DfdDraw {
    pub kinds: Vec<u8>,
    pub modes: Vec<u8>,
    pub zones: Vec<usize>,
    pub levels: Vec<i64>,
    pub flows: Vec<(usize, usize)>,
}

impl DfdDraw {
    pub fn build(&self) -> DfdModel {
        let n = self.kinds.len();
        let elements: Vec<DfdElement> = (0..n)
            .map(|i| {
                let kind = match self.kinds[i] % 3 {
                    0 => ElementKind::Process,
                    1 => ElementKind::Datastore,
                    _ => ElementKind::ExternalEntity,
                };
                let identity_mode = match (kind, self.modes[i] % 3) {
                    (ElementKind::ExternalEntity, _) => IdentityMode::Anonymous,
                    (_, 0) => IdentityMode::EndUser,
                    (_, 1) => IdentityMode::System,
                    _ => IdentityMode::Anonymous,
                };
                DfdElement {
                    id: format!("e{i:02}"),
                    name: format!("element {i}"),
                    kind,
                    identity_mode,
                    acting_identity: None,
                }
            })
            .collect();
        let flows = if n == 0 {
            Vec::new()
        } else {
            self.flows
                .iter()
                .enumerate()
                .map(|(j, (s, t))| DataFlow {
                    id: format!("f{j:02}"),
                    source: format!("e{:02}", s % n),
                    target: format!("e{:02}", t % n),
                    label: format!("data {j}"),
                })
                .collect()
        };
        // zone 0 is the external zone; 1..=levels.len() are boundaries
        let boundaries = self
            .levels
            .iter()
            .enumerate()
            .map(|(b, level)| TrustBoundary {
                id: format!("b{b}"),
                name: format!("boundary {b}"),
                trust_level: *level,
                members: (0..n)
                    .filter(|&i| self.zones[i] % (self.levels.len() + 1) == b + 1)
                    .map(|i| format!("e{i:02}"))
                    .collect(),
            })
            .collect();
        DfdModel {
            elements,
            flows,
            boundaries,
        }
    }
}

/// Random valid DFDs with at most `max_elements` elements.
pub fn arb_dfd(max_elements: usize) -> impl Strategy<Value = DfdModel> {
    (0..=max_elements, 0usize..=3)
        .prop_flat_map(|(n, b)| {
            (
                proptest::collection::vec(any::<u8>(), n),
                proptest::collection::vec(any::<u8>(), n),
                proptest::collection::vec(any::<usize>(), n),
                proptest::collection::vec(1i64..=3, b),
                proptest::collection::vec((any::<usize>(), any::<usize>()), 0..=2 * n),
            )
        })
        .prop_map(|(kinds, modes, zones, levels, flows)| {
            DfdDraw {
                kinds,
                modes,
                zones,
                levels,
                flows,
            }
            .build()
        })
}

/// Copy of `dfd` with every element inside one boundary.
pub fn collapse_to_single_boundary(dfd: &DfdModel) -> DfdModel {
    DfdModel {
        elements: dfd.elements.clone(),
        flows: dfd.flows.clone(),
        boundaries: vec![TrustBoundary {
            id: "everything".into(),
            name: "everything".into(),
            trust_level: 1,
            members: dfd.elements.iter().map(|e| e.id.clone()).collect(),
        }],
    }
}

/// Random valid process models: 1 to 4 pools with lanes, tasks, flows and
/// non-contradictory constraints.
pub fn arb_process_model() -> impl Strategy<Value = ProcessModel> {
    (
        proptest::collection::vec((0usize..=3, 0usize..=5), 1..=4),
        proptest::collection::vec(any::<(usize, usize, u8)>(), 0..=8),
        proptest::collection::vec(any::<usize>(), 0..=20),
        proptest::collection::vec(any::<bool>(), 20),
    )
        .prop_map(|(shape, constraint_draws, picks, flags)| {
            build_process(&shape, &constraint_draws, &picks, &flags)
        })
}

fn build_process(
    shape: &[(usize, usize)],
    constraint_draws: &[(usize, usize, u8)],
    picks: &[usize],
    flags: &[bool],
) -> ProcessModel {
    let mut pools = Vec::new();
    let mut all_tasks: Vec<(usize, String)> = Vec::new();
    let mut pick = picks.iter().copied().cycle();
    let mut flag = flags.iter().copied().cycle();
    for (p, &(lane_count, task_count)) in shape.iter().enumerate() {
        let mut lanes: Vec<Lane> = (0..lane_count)
            .map(|l| Lane {
                id: format!("p{p}_lane{l}"),
                role_name: format!("role {p}.{l}"),
                task_ids: Vec::new(),
            })
            .collect();
        let mut tasks = Vec::new();
        for t in 0..task_count {
            let id = format!("p{p}_task{t}");
            let lane_id = if lane_count > 0 && flag.next().unwrap_or(true) {
                let l = pick.next().unwrap_or(0) % lane_count;
                lanes[l].task_ids.push(id.clone());
                Some(lanes[l].id.clone())
            } else {
                None
            };
            tasks.push(TaskNode {
                id: id.clone(),
                name: format!("task {p}.{t}"),
                kind: if flag.next().unwrap_or(false) {
                    TaskKind::Automated
                } else {
                    TaskKind::Manual
                },
                lane_id,
                security_critical: flag.next().unwrap_or(false),
            });
            all_tasks.push((p, id));
        }
        let sequence_flows = tasks
            .windows(2)
            .enumerate()
            .map(|(i, w)| SequenceFlow {
                id: format!("p{p}_seq{i}"),
                source: w[0].id.clone(),
                target: w[1].id.clone(),
            })
            .collect();
        pools.push(Pool {
            id: format!("pool{p}"),
            name: format!("organization {p}"),
            lanes,
            tasks,
            nodes: Vec::new(),
            sequence_flows,
        });
    }

    let mut message_flows = Vec::new();
    for (i, w) in all_tasks.windows(2).enumerate() {
        if w[0].0 != w[1].0 && flag.next().unwrap_or(false) {
            message_flows.push(MessageFlow {
                id: format!("msg{i}"),
                name: String::new(),
                source: w[0].1.clone(),
                target: w[1].1.clone(),
            });
        }
    }

    let data_stores = (0..shape.len())
        .filter(|_| flag.next().unwrap_or(false))
        .map(|p| DataStoreRef {
            id: format!("store{p}"),
            name: format!("store {p}"),
            pool_id: Some(format!("pool{p}")),
        })
        .collect();

    let mut constraints: Vec<SecurityConstraint> = Vec::new();
    if !all_tasks.is_empty() {
        for (i, &(a, b, k)) in constraint_draws.iter().enumerate() {
            let ta = all_tasks[a % all_tasks.len()].1.clone();
            let tb = all_tasks[b % all_tasks.len()].1.clone();
            let candidate = match k % 3 {
                0 | 1 if ta != tb => SecurityConstraint {
                    id: format!("C{i}"),
                    kind: if k % 3 == 0 {
                        ConstraintKind::SoD
                    } else {
                        ConstraintKind::BoD
                    },
                    task_ids: vec![ta, tb],
                    role_name: None,
                    declared_layer: Layer::Business,
                },
                2 => SecurityConstraint {
                    id: format!("C{i}"),
                    kind: ConstraintKind::RoleAssignment,
                    task_ids: vec![ta],
                    role_name: Some("clerk".into()),
                    declared_layer: Layer::Business,
                },
                _ => continue,
            };
            let (_, set) = candidate.key();
            let clash = constraints.iter().any(|c| {
                let (_, other) = c.key();
                other == set
                    && (c.kind == candidate.kind
                        || c.kind != ConstraintKind::RoleAssignment
                            && candidate.kind != ConstraintKind::RoleAssignment)
            });
            if !clash {
                constraints.push(candidate);
            }
        }
    }

    ProcessModel {
        id: "generated".into(),
        pools,
        message_flows,
        data_stores,
        constraints,
        subject_interactions: Vec::new(),
    }
}
