//! In-process simulation of data owners sharing sanitized data with a
//! cloud service provider (CSP).
//!
//! Owners partition their table, perturb the sensitive part and upload the
//! recombined table. The CSP pools uploads in arrival order, trains a model
//! and answers label queries, routing each answer only to the owner that
//! asked. Every delivered message is appended to a [`TraceLog`].
//!
//! Query rows are forwarded exactly as the owner supplies them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classifiers::TrainedModel;
use crate::dataset::{Dataset, SplitIndices};
use crate::error::{Error, Result};
use crate::evaluation::{Averaging, MetricsReport};
use crate::partition::{partition, PartitionSpec, PartitionedDataset};
use crate::pipeline::{self, Fitted, TrainSpec};
use crate::privacy::{privatize, NoiseConfig, NoiseRecord};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Owner(usize),
    Csp,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Owner(id) => write!(f, "owner-{id}"),
            Party::Csp => f.write_str("csp"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum Payload<T> {
    UploadSanitized { dataset: Dataset<T> },
    ClassifyQuery { rows: Vec<Vec<T>> },
    ClassifyResponse { labels: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Message<T> {
    /// Per-sender sequence number, starting at 0.
    pub seq: u64,
    pub sender: Party,
    pub receiver: Party,
    pub payload: Payload<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case", bound = "T: Scalar")]
pub enum TraceEntry<T> {
    Deliver(Message<T>),
    Train(TrainSpec),
}

/// Append-only record of everything the CSP saw, in delivery order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TraceLog<T> {
    entries: Vec<TraceEntry<T>>,
}

impl<T: Scalar> TraceLog<T> {
    pub fn new() -> Self {
        TraceLog { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[TraceEntry<T>] {
        &self.entries
    }

    pub fn messages(&self) -> impl Iterator<Item = &Message<T>> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Deliver(m) => Some(m),
            TraceEntry::Train(_) => None,
        })
    }

    fn push(&mut self, entry: TraceEntry<T>) {
        self.entries.push(entry);
    }

    /// Messages an owner sent or received; nothing else is visible to it.
    pub fn owner_view(&self, owner: usize) -> Vec<&Message<T>> {
        let me = Party::Owner(owner);
        self.messages().filter(|m| m.sender == me || m.receiver == me).collect()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        for line in input.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                entries.push(serde_json::from_str(&line)?);
            }
        }
        Ok(TraceLog { entries })
    }

    /// Rebuilds the CSP by feeding it every CSP-bound message and training
    /// event in order.
    pub fn replay(&self) -> Result<CspState<T>> {
        let mut csp = CspState::new();
        for e in &self.entries {
            match e {
                TraceEntry::Deliver(m) if m.receiver == Party::Csp => {
                    csp.receive(m.clone())?;
                }
                TraceEntry::Deliver(_) => {}
                TraceEntry::Train(spec) => csp.train(spec)?,
            }
        }
        Ok(csp)
    }
}

/// A data owner. The raw table, its partition and the noise log stay here.
#[derive(Debug, Clone)]
pub struct OwnerState<T> {
    pub id: usize,
    data: Dataset<T>,
    pub spec: PartitionSpec,
    pub noise: NoiseConfig,
    partitioned: Option<PartitionedDataset<T>>,
    noise_log: Option<NoiseRecord<T>>,
    rounds: u64,
    next_seq: u64,
    pub inbox: Vec<Message<T>>,
}

impl<T: Scalar> OwnerState<T> {
    pub fn new(id: usize, data: Dataset<T>, spec: PartitionSpec, noise: NoiseConfig) -> Self {
        OwnerState {
            id,
            data,
            spec,
            noise,
            partitioned: None,
            noise_log: None,
            rounds: 0,
            next_seq: 0,
            inbox: Vec::new(),
        }
    }

    pub fn data(&self) -> &Dataset<T> {
        &self.data
    }

    pub fn partitioned(&self) -> Option<&PartitionedDataset<T>> {
        self.partitioned.as_ref()
    }

    /// Noise added in the most recent upload.
    pub fn noise_log(&self) -> Option<&NoiseRecord<T>> {
        self.noise_log.as_ref()
    }

    fn next_message(&mut self, payload: Payload<T>) -> Message<T> {
        let m = Message { seq: self.next_seq, sender: Party::Owner(self.id), receiver: Party::Csp, payload };
        self.next_seq += 1;
        m
    }

    /// Partition, perturb and recombine; only the sanitized table leaves.
    pub fn prepare_upload(&mut self) -> Result<Message<T>> {
        let pd = partition(&self.data, &self.spec)?;
        let seed = self.noise.seed_for_round(self.rounds);
        let sanitized = privatize(&pd, &self.noise, seed)?;
        self.rounds += 1;
        self.partitioned = Some(pd);
        self.noise_log = Some(sanitized.noise_log);
        Ok(self.next_message(Payload::UploadSanitized { dataset: sanitized.data }))
    }

    pub fn prepare_query(&mut self, rows: Vec<Vec<T>>) -> Message<T> {
        self.next_message(Payload::ClassifyQuery { rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub owner: usize,
    pub rows: usize,
}

/// The service provider: stores uploads, trains, answers queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CspState<T> {
    /// Latest upload per owner.
    received: BTreeMap<usize, Dataset<T>>,
    /// Owners in order of their first upload.
    arrival: Vec<usize>,
    fitted: Option<Fitted<T>>,
    pooled: Option<Dataset<T>>,
    pub query_log: Vec<QueryRecord>,
    next_seq: u64,
}

impl<T: Scalar> Default for CspState<T> {
    fn default() -> Self {
        CspState {
            received: BTreeMap::new(),
            arrival: Vec::new(),
            fitted: None,
            pooled: None,
            query_log: Vec::new(),
            next_seq: 0,
        }
    }
}

impl<T: Scalar> CspState<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn received(&self) -> &BTreeMap<usize, Dataset<T>> {
        &self.received
    }

    pub fn model(&self) -> Option<&TrainedModel<T>> {
        self.fitted.as_ref().map(|f| &f.model)
    }

    pub fn split(&self) -> Option<&SplitIndices> {
        self.fitted.as_ref().map(|f| &f.split)
    }

    pub fn pooled(&self) -> Option<&Dataset<T>> {
        self.pooled.as_ref()
    }

    /// Handles one incoming message; queries produce a response.
    pub fn receive(&mut self, msg: Message<T>) -> Result<Option<Message<T>>> {
        let Party::Owner(owner) = msg.sender else {
            return Err(Error::Integrity("the CSP does not message itself".into()));
        };
        match msg.payload {
            Payload::UploadSanitized { dataset } => {
                if let Some(first) = self.arrival.first() {
                    if self.received[first].schema() != dataset.schema() {
                        return Err(Error::SchemaIncompatible(format!(
                            "owner {owner} uploaded a schema that differs from owner {first}'s"
                        )));
                    }
                }
                if !self.received.contains_key(&owner) {
                    self.arrival.push(owner);
                }
                self.received.insert(owner, dataset);
                Ok(None)
            }
            Payload::ClassifyQuery { rows } => {
                let model = self
                    .model()
                    .ok_or_else(|| Error::ServiceUnavailable("no model has been trained".into()))?;
                let labels = model.predict(&rows)?;
                self.query_log.push(QueryRecord { owner, rows: rows.len() });
                let reply = Message {
                    seq: self.next_seq,
                    sender: Party::Csp,
                    receiver: Party::Owner(owner),
                    payload: Payload::ClassifyResponse { labels },
                };
                self.next_seq += 1;
                Ok(Some(reply))
            }
            Payload::ClassifyResponse { .. } => Err(Error::Integrity("owners do not send responses".into())),
        }
    }

    /// Pools every owner's latest upload (in arrival order) and trains.
    pub fn train(&mut self, spec: &TrainSpec) -> Result<()> {
        let pooled = Dataset::concat("pooled", self.arrival.iter().map(|o| &self.received[o]))?;
        let fitted = pipeline::fit(&pooled, spec)?;
        self.pooled = Some(pooled);
        self.fitted = Some(fitted);
        Ok(())
    }

    /// Metrics on the held-out part of the pooled data.
    pub fn evaluate(&self, averaging: Averaging) -> Result<MetricsReport> {
        match (&self.pooled, &self.fitted) {
            (Some(ds), Some(f)) => pipeline::score(ds, f, averaging),
            _ => Err(Error::ServiceUnavailable("no model has been trained".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Schedule {
    /// Owners upload in id order.
    #[default]
    RoundRobin,
    /// Upload order is a seeded permutation of the owners.
    Seeded { seed: u64 },
}

pub struct Simulation<T> {
    pub owners: Vec<OwnerState<T>>,
    pub csp: CspState<T>,
    pub schedule: Schedule,
    trace: TraceLog<T>,
    round: u64,
}

impl<T: Scalar> Simulation<T> {
    pub fn new(owners: Vec<OwnerState<T>>, schedule: Schedule) -> Result<Self> {
        if owners.is_empty() {
            return Err(Error::Config("a simulation needs at least one owner".into()));
        }
        let ids: HashSet<usize> = owners.iter().map(|o| o.id).collect();
        if ids.len() != owners.len() {
            return Err(Error::Config("owner ids must be distinct".into()));
        }
        let schema = owners[0].data.schema();
        if let Some(o) = owners.iter().find(|o| o.data.schema() != schema) {
            return Err(Error::SchemaIncompatible(format!(
                "owner {} does not share owner {}'s schema",
                o.id, owners[0].id
            )));
        }
        Ok(Simulation { owners, csp: CspState::new(), schedule, trace: TraceLog::new(), round: 0 })
    }

    pub fn trace(&self) -> &TraceLog<T> {
        &self.trace
    }

    pub fn into_trace(self) -> TraceLog<T> {
        self.trace
    }

    fn owner_index(&self, id: usize) -> Result<usize> {
        self.owners
            .iter()
            .position(|o| o.id == id)
            .ok_or_else(|| Error::Config(format!("no owner with id {id}")))
    }

    fn deliver(&mut self, msg: Message<T>) -> Result<Option<Message<T>>> {
        self.trace.push(TraceEntry::Deliver(msg.clone()));
        match msg.receiver {
            Party::Csp => self.csp.receive(msg),
            Party::Owner(id) => {
                let i = self.owner_index(id)?;
                self.owners[i].inbox.push(msg);
                Ok(None)
            }
        }
    }

    /// Upload order for the current round.
    pub fn upload_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.owners.len()).collect();
        if let Schedule::Seeded { seed } = self.schedule {
            order.shuffle(&mut rng::stream(rng::derive_seed(seed, &[self.round])));
        }
        order
    }

    /// Every owner sanitizes and uploads once, in schedule order.
    pub fn upload_round(&mut self) -> Result<()> {
        for i in self.upload_order() {
            let msg = self.owners[i].prepare_upload()?;
            self.deliver(msg)?;
        }
        self.round += 1;
        Ok(())
    }

    pub fn train(&mut self, spec: &TrainSpec) -> Result<()> {
        self.csp.train(spec)?;
        self.trace.push(TraceEntry::Train(spec.clone()));
        Ok(())
    }

    /// Sends `rows` to the CSP on behalf of `owner` and returns the labels
    /// delivered to that owner's inbox.
    pub fn query(&mut self, owner: usize, rows: Vec<Vec<T>>) -> Result<Vec<usize>> {
        let i = self.owner_index(owner)?;
        let msg = self.owners[i].prepare_query(rows);
        let reply = self
            .deliver(msg)?
            .ok_or_else(|| Error::Integrity("query produced no response".into()))?;
        let Payload::ClassifyResponse { labels } = &reply.payload else {
            return Err(Error::Integrity("unexpected reply payload".into()));
        };
        let labels = labels.clone();
        self.deliver(reply)?;
        Ok(labels)
    }

    /// Checks every CSP-bound payload against the owners' raw sensitive
    /// cells; see [`LeakageReport`].
    pub fn leakage_scan(&self) -> LeakageReport {
        leakage_scan(&self.owners, &self.trace)
    }
}

/// Outcome of a confidentiality scan of a trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    /// Sensitive cells compared against their uploaded counterpart.
    pub cells_checked: usize,
    /// Uploaded counterparts equal to the raw value.
    pub raw_matches: usize,
    /// Counterparts that differ from raw value plus logged noise.
    pub noise_mismatches: usize,
    /// Values in a sensitive column of any CSP-bound payload that equal a
    /// raw sensitive value of that column held by any owner.
    pub value_hits: usize,
    /// Rows in CSP-bound payloads whose sensitive cells all equal some
    /// owner's raw sensitive row.
    pub tuple_hits: usize,
}

impl LeakageReport {
    pub fn is_clean(&self) -> bool {
        self.raw_matches == 0 && self.noise_mismatches == 0 && self.value_hits == 0 && self.tuple_hits == 0
    }
}

/// Scans the last upload of every owner position by position (the
/// counterpart of raw cell `v` must differ from `v` and equal `v` plus the
/// logged noise) and scans every CSP-bound payload for exact raw values.
pub fn leakage_scan<T: Scalar>(owners: &[OwnerState<T>], trace: &TraceLog<T>) -> LeakageReport {
    let mut report = LeakageReport::default();
    let mut last_upload: BTreeMap<usize, &Dataset<T>> = BTreeMap::new();
    for m in trace.messages() {
        if let (Party::Owner(o), Payload::UploadSanitized { dataset }) = (m.sender, &m.payload) {
            last_upload.insert(o, dataset);
        }
    }

    // raw sensitive values, per feature index, and raw sensitive rows
    let mut raw_values: BTreeMap<usize, HashSet<u64>> = BTreeMap::new();
    let mut raw_tuples: HashSet<Vec<u64>> = HashSet::new();
    let mut sensitive_features: Vec<usize> = Vec::new();
    for owner in owners {
        let Some(pd) = owner.partitioned() else { continue };
        for (i, row) in pd.sensitive.rows.iter().enumerate() {
            let mut tuple = Vec::with_capacity(row.len());
            for (j, v) in row.iter().enumerate() {
                let (_, feature) = pd.locate_sensitive(i, j);
                raw_values.entry(feature).or_default().insert(v.as_f64().to_bits());
                tuple.push(v.as_f64().to_bits());
                if !sensitive_features.contains(&feature) {
                    sensitive_features.push(feature);
                }
            }
            raw_tuples.insert(tuple);
        }

        let (Some(upload), Some(log)) = (last_upload.get(&owner.id), owner.noise_log()) else { continue };
        for (i, row) in pd.sensitive.rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let (r, f) = pd.locate_sensitive(i, j);
                let Some(u) = upload.records().get(r).and_then(|rec| rec.values.get(f)) else {
                    report.noise_mismatches += 1;
                    continue;
                };
                report.cells_checked += 1;
                if *u == *v {
                    report.raw_matches += 1;
                }
                if *u != *v + log.noise[i][j] {
                    report.noise_mismatches += 1;
                }
            }
        }
    }
    sensitive_features.sort_unstable();

    let mut scan_row = |values: &[T]| {
        for &f in &sensitive_features {
            if let Some(v) = values.get(f) {
                if raw_values.get(&f).is_some_and(|s| s.contains(&v.as_f64().to_bits())) {
                    report.value_hits += 1;
                }
            }
        }
        for owner in owners {
            let Some(pd) = owner.partitioned() else { continue };
            if pd.sensitive.is_empty() {
                continue;
            }
            // the sensitive feature positions of this owner's partition, in view order
            let positions: Vec<usize> = (0..pd.sensitive.width()).map(|j| pd.locate_sensitive(0, j).1).collect();
            if positions.iter().all(|&f| f < values.len()) {
                let tuple: Vec<u64> = positions.iter().map(|&f| values[f].as_f64().to_bits()).collect();
                if raw_tuples.contains(&tuple) {
                    report.tuple_hits += 1;
                    return;
                }
            }
        }
    };
    for m in trace.messages().filter(|m| m.receiver == Party::Csp) {
        match &m.payload {
            Payload::UploadSanitized { dataset } => dataset.records().iter().for_each(|r| scan_row(&r.values)),
            Payload::ClassifyQuery { rows } => rows.iter().for_each(|r| scan_row(r)),
            Payload::ClassifyResponse { .. } => {}
        }
    }
    report
}
