//! Reader for the supported BPMN 2.0 XML subset.
//!
//! The document is first loaded into a small element tree; elements outside
//! the BPMN model namespace (diagram interchange, extensions) are kept but
//! never interpreted.

use std::collections::{BTreeMap, HashMap};

use quick_xml::events::Event;
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;

use super::{
    parse_constraint_text, DataStoreRef, FlowNode, Lane, MessageFlow, NodeKind, Pool, ProcessModel,
    SecurityConstraint, SequenceFlow, TaskKind, TaskNode,
};
use crate::error::{Error, Result};

pub const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

pub(super) struct ParsedBpmn {
    pub model: ProcessModel,
    pub annotation_constraints: Vec<SecurityConstraint>,
}

#[derive(Debug, Default)]
struct Element {
    name: String,
    bpmn: bool,
    attrs: HashMap<String, String>,
    children: Vec<Element>,
    text: String,
}

impl Element {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.attr(key).ok_or_else(|| {
            Error::Bpmn(format!(
                "<{}{}> lacks the `{key}` attribute",
                self.name,
                self.attr("id")
                    .map(|id| format!(" id=\"{id}\""))
                    .unwrap_or_default()
            ))
        })
    }

    fn bpmn_children<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Element> + 'a {
        self.children
            .iter()
            .filter(move |c| c.bpmn && c.name == name)
    }

    fn text_of(&self, child: &str) -> String {
        self.bpmn_children(child)
            .map(|c| c.text.trim())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn line_column(doc: &[u8], offset: usize) -> (usize, usize) {
    let prefix = &doc[..offset.min(doc.len())];
    let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = prefix.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
    (line, column)
}

fn xml_error(doc: &[u8], offset: u64, message: impl ToString) -> Error {
    let (line, column) = line_column(doc, offset as usize);
    Error::Xml {
        what: "bpmn",
        line,
        column,
        message: message.to_string(),
    }
}

fn load_tree(doc: &[u8]) -> Result<Element> {
    let mut reader = NsReader::from_reader(doc);
    reader.config_mut().trim_text(true);
    let mut buf = Vec::new();
    let mut stack: Vec<Element> = Vec::new();
    let mut root = None;

    loop {
        let (bpmn, event) = match reader.read_resolved_event_into(&mut buf) {
            Ok((ns, event)) => (
                matches!(ns, ResolveResult::Bound(n) if n.as_ref() == BPMN_NS.as_bytes()),
                event,
            ),
            Err(e) => return Err(xml_error(doc, reader.error_position(), e)),
        };
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let mut el = Element {
                    name: String::from_utf8_lossy(e.local_name().as_ref()).into_owned(),
                    bpmn,
                    ..Element::default()
                };
                for attr in e.attributes() {
                    let attr = attr.map_err(|err| xml_error(doc, reader.buffer_position(), err))?;
                    if attr.key.prefix().is_some() {
                        continue;
                    }
                    let value = attr
                        .unescape_value()
                        .map_err(|err| xml_error(doc, reader.buffer_position(), err))?;
                    el.attrs.insert(
                        String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned(),
                        value.into_owned(),
                    );
                }
                if matches!(event, Event::Start(_)) {
                    stack.push(el);
                } else if let Some(parent) = stack.last_mut() {
                    parent.children.push(el);
                } else if root.is_none() {
                    root = Some(el);
                }
            }
            Event::End(_) => {
                let el = stack.pop().expect("reader checks end tags");
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::Text(t) => {
                let text = t
                    .unescape()
                    .map_err(|err| xml_error(doc, reader.buffer_position(), err))?;
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&text);
                }
            }
            Event::CData(c) => {
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&String::from_utf8_lossy(&c));
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !stack.is_empty() {
        return Err(xml_error(
            doc,
            reader.buffer_position(),
            "unclosed element at end of document",
        ));
    }
    root.ok_or_else(|| xml_error(doc, 0, "document has no root element"))
}

fn task_kind(name: &str) -> Option<TaskKind> {
    match name {
        "task" | "userTask" | "manualTask" => Some(TaskKind::Manual),
        "serviceTask" | "sendTask" | "receiveTask" | "scriptTask" | "businessRuleTask" => {
            Some(TaskKind::Automated)
        }
        _ => None,
    }
}

fn node_kind(name: &str) -> Option<NodeKind> {
    match name {
        "startEvent"
        | "endEvent"
        | "intermediateThrowEvent"
        | "intermediateCatchEvent"
        | "boundaryEvent" => Some(NodeKind::Event),
        "exclusiveGateway" => Some(NodeKind::ExclusiveGateway),
        "parallelGateway" | "inclusiveGateway" | "eventBasedGateway" | "complexGateway" => {
            Some(NodeKind::Gateway)
        }
        "subProcess" | "adHocSubProcess" | "transaction" | "callActivity" => {
            Some(NodeKind::Activity)
        }
        _ => None,
    }
}

fn collect_lanes(lane_set: &Element, out: &mut Vec<(String, String, Vec<String>)>) -> Result<()> {
    for lane in lane_set.bpmn_children("lane") {
        let id = lane.required("id")?.to_string();
        let name = lane.attr("name").unwrap_or(&id).to_string();
        let refs = lane
            .bpmn_children("flowNodeRef")
            .map(|r| r.text.trim().to_string())
            .collect();
        out.push((id, name, refs));
        for child in lane.bpmn_children("childLaneSet") {
            collect_lanes(child, out)?;
        }
    }
    Ok(())
}

#[derive(Default)]
struct ProcessContent {
    name: Option<String>,
    lanes: Vec<Lane>,
    tasks: Vec<TaskNode>,
    nodes: Vec<FlowNode>,
    sequence_flows: Vec<SequenceFlow>,
    stores: Vec<DataStoreRef>,
}

fn read_process(
    process: &Element,
    store_names: &BTreeMap<String, String>,
    annotations: &mut Vec<(String, String)>,
) -> Result<ProcessContent> {
    let mut content = ProcessContent {
        name: process.attr("name").map(str::to_string),
        ..ProcessContent::default()
    };
    let mut raw_lanes = Vec::new();
    for child in process.children.iter().filter(|c| c.bpmn) {
        let name = child.name.as_str();
        if let Some(kind) = task_kind(name) {
            let id = child.required("id")?.to_string();
            content.tasks.push(TaskNode {
                name: child.attr("name").unwrap_or(&id).to_string(),
                id,
                kind,
                lane_id: None,
                security_critical: false,
            });
        } else if let Some(kind) = node_kind(name) {
            content.nodes.push(FlowNode {
                id: child.required("id")?.to_string(),
                kind,
            });
        } else {
            match name {
                "laneSet" => collect_lanes(child, &mut raw_lanes)?,
                "sequenceFlow" => content.sequence_flows.push(SequenceFlow {
                    id: child.required("id")?.to_string(),
                    source: child.required("sourceRef")?.to_string(),
                    target: child.required("targetRef")?.to_string(),
                }),
                "dataStoreReference" => {
                    let id = child.required("id")?.to_string();
                    let name = child
                        .attr("name")
                        .or_else(|| {
                            child
                                .attr("dataStoreRef")
                                .and_then(|r| store_names.get(r).map(String::as_str))
                        })
                        .unwrap_or(&id)
                        .to_string();
                    content.stores.push(DataStoreRef {
                        id,
                        name,
                        pool_id: None,
                    });
                }
                "textAnnotation" => {
                    annotations.push((child.required("id")?.to_string(), child.text_of("text")))
                }
                _ => {}
            }
        }
    }

    let task_index: HashMap<String, usize> = content
        .tasks
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id.clone(), i))
        .collect();
    for (lane_id, role_name, refs) in raw_lanes {
        let mut task_ids = Vec::new();
        for r in refs {
            if let Some(&i) = task_index.get(&r) {
                content.tasks[i].lane_id = Some(lane_id.clone());
                task_ids.push(r);
            } else if !content.nodes.iter().any(|n| n.id == r) {
                return Err(Error::dangling(r, format!("lane `{lane_id}`")));
            }
        }
        task_ids.sort();
        content.lanes.push(Lane {
            id: lane_id,
            role_name,
            task_ids,
        });
    }
    Ok(content)
}

pub(super) fn parse(doc: &[u8]) -> Result<ParsedBpmn> {
    let root = load_tree(doc)?;
    if !(root.bpmn && root.name == "definitions") {
        return Err(Error::Bpmn(format!(
            "root element must be <definitions> in namespace {BPMN_NS}, found <{}>",
            root.name
        )));
    }

    let store_names: BTreeMap<String, String> = root
        .bpmn_children("dataStore")
        .filter_map(|s| {
            let id = s.attr("id")?;
            Some((id.to_string(), s.attr("name").unwrap_or(id).to_string()))
        })
        .collect();

    let mut annotations = Vec::new();
    let mut processes: BTreeMap<String, ProcessContent> = BTreeMap::new();
    let mut process_order = Vec::new();
    for process in root.bpmn_children("process") {
        let id = process.required("id")?.to_string();
        let content = read_process(process, &store_names, &mut annotations)?;
        if processes.insert(id.clone(), content).is_some() {
            return Err(Error::duplicate(id, "processes"));
        }
        process_order.push(id);
    }

    let mut pools = Vec::new();
    let mut data_stores = Vec::new();
    let mut message_flows = Vec::new();
    let mut push_pool = |id: String, name: String, content: ProcessContent| {
        for mut store in content.stores {
            store.pool_id = Some(id.clone());
            data_stores.push(store);
        }
        pools.push(Pool {
            id,
            name,
            lanes: content.lanes,
            tasks: content.tasks,
            nodes: content.nodes,
            sequence_flows: content.sequence_flows,
        });
    };

    for collaboration in root.bpmn_children("collaboration") {
        for participant in collaboration.bpmn_children("participant") {
            let id = participant.required("id")?.to_string();
            let content = match participant.attr("processRef") {
                Some(r) => processes
                    .remove(r)
                    .ok_or_else(|| Error::dangling(r, format!("participant `{id}`")))?,
                None => ProcessContent::default(),
            };
            let name = participant
                .attr("name")
                .map(str::to_string)
                .or_else(|| content.name.clone())
                .unwrap_or_else(|| id.clone());
            push_pool(id, name, content);
        }
        for flow in collaboration.bpmn_children("messageFlow") {
            let id = flow.required("id")?.to_string();
            message_flows.push(MessageFlow {
                name: flow.attr("name").unwrap_or_default().to_string(),
                source: flow.required("sourceRef")?.to_string(),
                target: flow.required("targetRef")?.to_string(),
                id,
            });
        }
        for ann in collaboration.bpmn_children("textAnnotation") {
            annotations.push((ann.required("id")?.to_string(), ann.text_of("text")));
        }
    }
    // Processes without a participant become their own pool.
    for id in process_order {
        if let Some(content) = processes.remove(&id) {
            let name = content.name.clone().unwrap_or_else(|| id.clone());
            push_pool(id, name, content);
        }
    }

    pools.sort_by(|a, b| a.id.cmp(&b.id));
    for pool in &mut pools {
        pool.lanes.sort_by(|a, b| a.id.cmp(&b.id));
        pool.tasks.sort_by(|a, b| a.id.cmp(&b.id));
        pool.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        pool.sequence_flows.sort_by(|a, b| a.id.cmp(&b.id));
    }
    data_stores.sort_by(|a, b| a.id.cmp(&b.id));
    message_flows.sort_by(|a, b| a.id.cmp(&b.id));

    let annotation_constraints = annotations
        .iter()
        .flat_map(|(id, text)| parse_constraint_text(id, text))
        .collect();

    Ok(ParsedBpmn {
        model: ProcessModel {
            id: root.attr("id").unwrap_or_default().to_string(),
            pools,
            message_flows,
            data_stores,
            constraints: Vec::new(),
            subject_interactions: Vec::new(),
        },
        annotation_constraints,
    })
}
