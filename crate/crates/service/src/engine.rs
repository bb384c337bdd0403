//! The engine owns all persisted state. Every mutation arrives as a
//! [`Command`], is written to the journal, and is then applied under the
//! subject's lock, so one subject's commands never interleave.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use mhn_core::activity_fca::Recognizer;
use mhn_core::chronicle::{ChronicleStore, EventRecord, EventSource, SubjectId};
use mhn_core::config::Config;
use mhn_core::estimator::{classify_regions, ScreenBand, StateSpace, AROUSAL, SOCIAL};
use mhn_core::ingest::SampleBatch;
use mhn_core::navigator::{
    apply_feedback, default_catalog, load_catalog, plan_route, recommend, Constraints, FeedbackOutcome, Goal,
    GoalStatus, GuidancePlan, InterventionSpec, RecommendProfile, Recommendation,
};
use mhn_core::personal_model::{Metric, ProfileContext, ThresholdSet};
use mhn_core::pipeline::{DayBuffer, DayOutcome, SubjectPipeline};
use mhn_core::stats::mean;
use mhn_core::time::{self, EpochMs};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::alerts::{Alert, AlertKind, AlertState, ScreenCrossing, StressRun};
use crate::error::ServiceError;
use crate::journal::{read_entries, state_hash, Command, Journal, JOURNAL_FILE};
use crate::model::{
    EventInput, GoalCommand, GoalRequest, GuidanceRequest, IngestReport, PlanView, StateView, SubjectSummary,
    Timeline, TimelineDay,
};

const SUBJECTS_DIR: &str = "subjects";
const CHRONICLE_DIR: &str = "chronicle";
/// Consecutive high-stress windows before an alert.
pub const SUSTAINED_STRESS_WINDOWS: usize = 6;
/// Days of history the recommendation profile looks back over.
const PROFILE_DAYS: usize = 14;

/// Everything the engine needs besides its data directory.
#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub config: Config,
    pub space: StateSpace,
    pub catalog: Vec<InterventionSpec>,
    /// Timezone for subjects first seen through ingest.
    pub default_timezone: String,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            config: Config::default(),
            space: StateSpace::production_5d(),
            catalog: default_catalog(),
            default_timezone: "UTC".into(),
        }
    }
}

impl EngineOptions {
    /// Reads a TOML config; the intervention catalog comes from
    /// `navigator.catalog_path` when set.
    pub fn load(config_path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut opts = EngineOptions::default();
        if let Some(p) = config_path {
            opts.config = Config::load(p).map_err(|e| ServiceError::Config(e.to_string()))?;
        }
        if let Some(c) = &opts.config.navigator.catalog_path {
            let text = std::fs::read_to_string(c)?;
            opts.catalog = load_catalog(&text)?;
        }
        opts.space.grid = opts.config.navigator.grid;
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredPlan {
    version: u64,
    plan: GuidancePlan,
    feedback: Option<FeedbackOutcome>,
    drift_alerted: bool,
}

/// Persisted per-subject state, written to `subjects/{id}.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SubjectRecord {
    pipeline: SubjectPipeline,
    goals: BTreeMap<String, Goal>,
    goal_counter: u64,
    plan: Option<StoredPlan>,
    plan_counter: u64,
    alerts: Vec<Alert>,
    alert_counter: u64,
    screen: ScreenCrossing,
    stress: StressRun,
}

struct Slot {
    record: SubjectRecord,
    buffer: DayBuffer,
}

/// Result of applying one command.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Ingest(IngestReport),
    Profile(ProfileContext),
    Event(EventRecord),
    Goal(Goal),
    Plan(PlanView),
    Alert(Alert),
}

pub struct Engine {
    dir: PathBuf,
    opts: EngineOptions,
    recognizer: Recognizer,
    subjects: RwLock<BTreeMap<String, Arc<Mutex<Slot>>>>,
    chronicle: Mutex<ChronicleStore>,
    journal: Mutex<Journal>,
}

impl Engine {
    /// Opens a data directory. Derived state is discarded and rebuilt by
    /// replaying the journal, which is the source of truth.
    pub fn open(dir: impl AsRef<Path>, opts: EngineOptions) -> Result<Self, ServiceError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        for sub in [SUBJECTS_DIR, CHRONICLE_DIR] {
            let p = dir.join(sub);
            if p.exists() {
                std::fs::remove_dir_all(&p)?;
            }
            std::fs::create_dir_all(&p)?;
        }
        let journal_path = dir.join(JOURNAL_FILE);
        let entries = if journal_path.exists() { read_entries(&journal_path)? } else { Vec::new() };
        let recognizer =
            Recognizer::new(opts.config.activity.clone()).map_err(|e| ServiceError::Config(e.to_string()))?;
        let engine = Engine {
            chronicle: Mutex::new(ChronicleStore::open(dir.join(CHRONICLE_DIR))?),
            journal: Mutex::new(Journal::open(&journal_path)?),
            subjects: RwLock::new(BTreeMap::new()),
            recognizer,
            opts,
            dir,
        };
        for e in &entries {
            if let Err(err) = engine.execute(&e.command, e.ts) {
                tracing::debug!(seq = e.seq, %err, "journal entry rejected on replay, as it was originally");
            }
        }
        if !entries.is_empty() {
            tracing::info!(entries = entries.len(), "journal replayed");
        }
        Ok(engine)
    }

    pub fn data_dir(&self) -> &Path {
        &self.dir
    }

    pub fn options(&self) -> &EngineOptions {
        &self.opts
    }

    pub fn state_hash(&self) -> Result<String, ServiceError> {
        state_hash(&self.dir)
    }

    /// Journals and applies one command.
    pub fn submit(&self, command: Command) -> Result<Outcome, ServiceError> {
        let ts = chrono::Utc::now().timestamp_millis();
        self.submit_at(command, ts)
    }

    /// Like [`submit`](Self::submit) with an explicit receipt time.
    pub fn submit_at(&self, command: Command, ts: EpochMs) -> Result<Outcome, ServiceError> {
        match command.subject() {
            Some(s) => {
                let slot = self.slot(s, matches!(command, Command::Ingest { .. } | Command::SetProfile { .. }))?;
                let mut slot = slot.lock();
                self.journal.lock().append(ts, &command)?;
                self.apply(&mut slot, &command, ts)
            }
            None => Err(ServiceError::BadRequest("command names no subject".into())),
        }
    }

    /// Closes every subject's open day, one journaled command per subject.
    pub fn flush_all(&self) -> Result<Vec<IngestReport>, ServiceError> {
        let ids: Vec<String> = self.subjects.read().keys().cloned().collect();
        let mut out = Vec::new();
        for id in ids {
            if let Outcome::Ingest(r) = self.submit(Command::Flush { subject: id })? {
                out.push(r);
            }
        }
        Ok(out)
    }

    fn execute(&self, command: &Command, ts: EpochMs) -> Result<Outcome, ServiceError> {
        let s = command.subject().ok_or_else(|| ServiceError::BadRequest("command names no subject".into()))?;
        let slot = self.slot(s, matches!(command, Command::Ingest { .. } | Command::SetProfile { .. }))?;
        let mut slot = slot.lock();
        self.apply(&mut slot, command, ts)
    }

    fn slot(&self, id: &str, create: bool) -> Result<Arc<Mutex<Slot>>, ServiceError> {
        if let Some(s) = self.subjects.read().get(id) {
            return Ok(s.clone());
        }
        if !create {
            return Err(ServiceError::NotFound(format!("subject {id}")));
        }
        let subject = SubjectId::new(id)?;
        let context = ProfileContext { timezone: self.opts.default_timezone.clone(), ..Default::default() };
        let record = SubjectRecord {
            pipeline: SubjectPipeline::new(subject, context)?,
            goals: BTreeMap::new(),
            goal_counter: 0,
            plan: None,
            plan_counter: 0,
            alerts: Vec::new(),
            alert_counter: 0,
            screen: ScreenCrossing::default(),
            stress: StressRun::default(),
        };
        let mut map = self.subjects.write();
        Ok(map
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(Slot { record, buffer: DayBuffer::default() })))
            .clone())
    }

    fn save(&self, record: &SubjectRecord) -> Result<(), ServiceError> {
        let path = self.dir.join(SUBJECTS_DIR).join(format!("{}.json", record.pipeline.subject));
        let tmp = path.with_extension("json.tmp");
        let bytes = serde_json::to_vec(record).map_err(|e| ServiceError::Journal(e.to_string()))?;
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    fn apply(&self, slot: &mut Slot, command: &Command, ts: EpochMs) -> Result<Outcome, ServiceError> {
        match command {
            Command::Ingest { batch } => self.ingest(slot, batch.clone()).map(Outcome::Ingest),
            Command::Flush { .. } => {
                let mut report = self.report(slot);
                if let Some((date, batches)) = slot.buffer.take() {
                    self.close_day(slot, date, &batches, &mut report)?;
                }
                report.buffered_date = None;
                Ok(Outcome::Ingest(report))
            }
            Command::SetProfile { context, .. } => {
                let p = &mut slot.record.pipeline;
                if context.timezone != p.context.timezone {
                    if !p.history.is_empty() || slot.buffer.date.is_some() {
                        return Err(ServiceError::Conflict("timezone cannot change once data has arrived".into()));
                    }
                    *p = SubjectPipeline::new(p.subject.clone(), context.clone())?;
                } else {
                    p.context = context.clone();
                }
                self.save(&slot.record)?;
                Ok(Outcome::Profile(context.clone()))
            }
            Command::AddEvent { event, .. } => {
                let e = self.manual_event(&slot.record, event)?;
                self.chronicle.lock().append_event(e.clone())?;
                Ok(Outcome::Event(e))
            }
            Command::Goal { request, .. } => {
                let g = self.goal(&mut slot.record, request, ts)?;
                self.save(&slot.record)?;
                Ok(Outcome::Goal(g))
            }
            Command::Guidance { request, created_by, .. } => {
                let plan = match &request.manual_plan {
                    Some(p) => self.check_manual(&slot.record, p)?,
                    None => self.compute_plan(&slot.record, request, created_by)?,
                };
                let current = slot.record.plan.as_ref().map_or(0, |p| p.version);
                if let Some(v) = request.version {
                    if v != current {
                        return Err(ServiceError::VersionConflict { resource: "plan".into(), expected: v, current });
                    }
                }
                slot.record.plan_counter += 1;
                slot.record.plan =
                    Some(StoredPlan { version: slot.record.plan_counter, plan, feedback: None, drift_alerted: false });
                self.save(&slot.record)?;
                Ok(Outcome::Plan(plan_view(&slot.record).expect("plan just stored")))
            }
            Command::AckAlert { id } => {
                let a = slot
                    .record
                    .alerts
                    .iter_mut()
                    .find(|a| &a.id == id)
                    .ok_or_else(|| ServiceError::NotFound(format!("alert {id}")))?;
                if a.state == AlertState::Acknowledged {
                    return Err(ServiceError::Conflict(format!("alert {id} is already acknowledged")));
                }
                a.state = AlertState::Acknowledged;
                a.acknowledged_at = Some(ts);
                let a = a.clone();
                self.save(&slot.record)?;
                Ok(Outcome::Alert(a))
            }
        }
    }

    fn report(&self, slot: &Slot) -> IngestReport {
        IngestReport {
            subject: slot.record.pipeline.subject.to_string(),
            buffered_date: slot.buffer.date,
            closed_days: Vec::new(),
            events_appended: 0,
            alerts: Vec::new(),
        }
    }

    fn ingest(&self, slot: &mut Slot, batch: SampleBatch) -> Result<IngestReport, ServiceError> {
        batch.validate().map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let tz = slot.record.pipeline.tz();
        if slot.record.pipeline.history.last().is_some_and(|d| {
            batch.first_ts().is_some_and(|t| time::local_date(t, tz) <= d.date)
        }) {
            let date = time::local_date(batch.first_ts().unwrap(), tz);
            return Err(ServiceError::Pipeline(mhn_core::pipeline::PipelineError::DayAlreadyProcessed(date)));
        }
        let closed = slot.buffer.push(batch, tz)?;
        let mut report = self.report(slot);
        if let Some((date, batches)) = closed {
            self.close_day(slot, date, &batches, &mut report)?;
        }
        Ok(report)
    }

    fn close_day(
        &self,
        slot: &mut Slot,
        date: NaiveDate,
        batches: &[SampleBatch],
        report: &mut IngestReport,
    ) -> Result<(), ServiceError> {
        let rec = &mut slot.record;
        let result = rec.pipeline.process_day(date, batches, &self.opts.config, &self.recognizer)?;
        {
            let mut chron = self.chronicle.lock();
            chron.register_subject(&rec.pipeline.subject);
            for e in result.events {
                match chron.append_event(e) {
                    Ok(_) => report.events_appended += 1,
                    Err(err) => tracing::warn!(%err, "recognized event rejected"),
                }
            }
        }
        report.closed_days.push(date);
        report.alerts.extend(self.evaluate_alerts(rec, &result.outcome));
        self.save(rec)
    }

    fn push_alert(rec: &mut SubjectRecord, kind: AlertKind, created_at: EpochMs, payload: serde_json::Value) -> Alert {
        rec.alert_counter += 1;
        let a = Alert {
            id: format!("{}-{:04}", rec.pipeline.subject, rec.alert_counter),
            subject: rec.pipeline.subject.to_string(),
            kind,
            created_at,
            payload,
            state: AlertState::Open,
            acknowledged_at: None,
        };
        rec.alerts.push(a.clone());
        a
    }

    fn evaluate_alerts(&self, rec: &mut SubjectRecord, day: &DayOutcome) -> Vec<Alert> {
        let mut out = Vec::new();
        let (default_z, default_band) = ThresholdSet::default_alerts();
        let thresholds = rec.pipeline.thresholds();
        let boundary = thresholds.as_ref().map_or(default_band, |t| t.screen_alert_band);
        let noon = time::day_bounds(day.date, rec.pipeline.tz()).0 + 12 * time::HOUR_MS;

        if let Some(s) = &day.screen {
            if rec.screen.observe(s.band, boundary) {
                let payload = json!({
                    "date": day.date, "score": s.score, "band": s.band, "boundary": boundary,
                });
                out.push(Self::push_alert(rec, AlertKind::ScreenBandIncrease, noon, payload));
            }
        }
        for w in &day.windows {
            if rec.stress.observe(w.high_stress, SUSTAINED_STRESS_WINDOWS) {
                let payload = json!({
                    "date": day.date,
                    "window_start_ms": w.start_ms,
                    "windows": SUSTAINED_STRESS_WINDOWS,
                    "stress_alert_z": thresholds.as_ref().map_or(default_z, |t| t.stress_alert_z),
                });
                out.push(Self::push_alert(rec, AlertKind::SustainedHighStress, w.end_ms, payload));
            }
        }
        if let Some(stored) = rec.plan.clone() {
            let goal = rec.goals.get(&stored.plan.goal_id);
            let obs = rec.pipeline.states();
            if let Some(goal) = goal {
                let constraints = Constraints::from_config(&self.opts.config.navigator, false);
                let fb = apply_feedback(
                    Some(&stored.plan),
                    &obs,
                    goal,
                    &self.opts.catalog,
                    &self.opts.space,
                    &constraints,
                    &self.opts.config.navigator,
                );
                if let Ok(fb) = fb {
                    let drifted = matches!(fb, FeedbackOutcome::Drifted { .. });
                    let mut alert_now = false;
                    if let Some(p) = rec.plan.as_mut() {
                        p.feedback = Some(fb.clone());
                        alert_now = drifted && !p.drift_alerted;
                        p.drift_alerted |= drifted;
                    }
                    if alert_now {
                        let payload = json!({ "plan_version": stored.version, "feedback": fb });
                        out.push(Self::push_alert(rec, AlertKind::PlanDrift, noon, payload));
                    }
                }
            }
        }
        out
    }

    fn manual_event(&self, rec: &SubjectRecord, e: &EventInput) -> Result<EventRecord, ServiceError> {
        let r = EventRecord::new(rec.pipeline.subject.clone(), e.label, e.start_ms, e.end_ms, EventSource::Manual)
            .with_attributes(e.attributes.iter().cloned());
        r.validate()?;
        Ok(r)
    }

    fn goal(&self, rec: &mut SubjectRecord, req: &GoalRequest, ts: EpochMs) -> Result<Goal, ServiceError> {
        match (&req.goal_id, &req.action) {
            (None, GoalCommand::Propose { target, proposed_by }) => {
                target.resolve(&self.opts.space)?;
                rec.goal_counter += 1;
                let id = format!("{}-g{:03}", rec.pipeline.subject, rec.goal_counter);
                let g = Goal::propose(&id, rec.pipeline.subject.clone(), target.clone(), *proposed_by, ts);
                rec.goals.insert(id, g.clone());
                Ok(g)
            }
            (None, _) => Err(ServiceError::BadRequest("goal_id is required for this action".into())),
            (Some(_), GoalCommand::Propose { .. }) => {
                Err(ServiceError::BadRequest("propose creates a goal; omit goal_id".into()))
            }
            (Some(id), action) => {
                let cur = rec.goals.get(id).ok_or_else(|| ServiceError::NotFound(format!("goal {id}")))?;
                let expected = req.version.ok_or_else(|| ServiceError::BadRequest("version is required".into()))?;
                if expected != cur.version {
                    return Err(ServiceError::VersionConflict {
                        resource: format!("goal {id}"),
                        expected,
                        current: cur.version,
                    });
                }
                if let GoalCommand::Revise { target } = action {
                    target.resolve(&self.opts.space)?;
                }
                let act = action.clone().into_action().expect("propose handled above");
                let next = mhn_core::navigator::update_goal(cur, act, ts)?;
                rec.goals.insert(id.clone(), next.clone());
                Ok(next)
            }
        }
    }

    fn compute_plan(
        &self,
        rec: &SubjectRecord,
        req: &GuidanceRequest,
        created_by: &str,
    ) -> Result<GuidancePlan, ServiceError> {
        let goal = match &req.goal_id {
            Some(id) => rec.goals.get(id).ok_or_else(|| ServiceError::NotFound(format!("goal {id}")))?,
            None => rec
                .goals
                .values()
                .rev()
                .find(|g| g.status == GoalStatus::Consensus)
                .ok_or_else(|| ServiceError::NotFound("consensus goal".into()))?,
        };
        let current = rec
            .pipeline
            .latest_state()
            .ok_or_else(|| ServiceError::NotFound(format!("state for {}", rec.pipeline.subject)))?;
        let constraints = Constraints::from_config(&self.opts.config.navigator, req.provider_approved);
        Ok(plan_route(current, goal, &self.opts.catalog, &self.opts.space, &constraints, created_by)?)
    }

    fn check_manual(&self, rec: &SubjectRecord, p: &GuidancePlan) -> Result<GuidancePlan, ServiceError> {
        if p.subject != rec.pipeline.subject.as_str() {
            return Err(ServiceError::BadRequest("manual plan names another subject".into()));
        }
        if !rec.goals.contains_key(&p.goal_id) {
            return Err(ServiceError::NotFound(format!("goal {}", p.goal_id)));
        }
        if p.trajectory.is_empty() {
            return Err(ServiceError::BadRequest("manual plan has an empty trajectory".into()));
        }
        let known: Vec<&str> = self.opts.catalog.iter().map(|c| c.id.as_str()).collect();
        if let Some(bad) = p.steps.iter().flat_map(|s| &s.interventions).find(|i| !known.contains(&i.as_str())) {
            return Err(ServiceError::BadRequest(format!("unknown intervention {bad}")));
        }
        // Cells after the start must stay out of disorder regions.
        for state in p.predicted_states().iter().skip(1) {
            let labels = classify_regions(state, &self.opts.space).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
            if let Some(r) = self.opts.space.regions.iter().find(|r| r.disorder && labels.contains(&r.label)) {
                return Err(ServiceError::BadRequest(format!("manual plan enters disorder region {}", r.label)));
            }
        }
        Ok(p.clone())
    }

    /// Plans without storing anything.
    pub fn preview_guidance(
        &self,
        subject: &str,
        req: &GuidanceRequest,
        created_by: &str,
    ) -> Result<PlanView, ServiceError> {
        let slot = self.slot(subject, false)?;
        let slot = slot.lock();
        let plan = match &req.manual_plan {
            Some(p) => self.check_manual(&slot.record, p)?,
            None => self.compute_plan(&slot.record, req, created_by)?,
        };
        Ok(PlanView {
            subject: subject.to_string(),
            version: 0,
            predicted_states: plan.predicted_states(),
            plan,
            feedback: None,
        })
    }

    // Reads.

    pub fn has_subject(&self, id: &str) -> bool {
        self.subjects.read().contains_key(id)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Slot) -> Result<T, ServiceError>) -> Result<T, ServiceError> {
        let slot = self.slot(id, false)?;
        let slot = slot.lock();
        f(&slot)
    }

    pub fn subjects(&self) -> Vec<SubjectSummary> {
        let slots: Vec<Arc<Mutex<Slot>>> = self.subjects.read().values().cloned().collect();
        slots
            .iter()
            .map(|s| {
                let s = s.lock();
                let r = &s.record;
                let screen = r.pipeline.latest_screen();
                SubjectSummary {
                    id: r.pipeline.subject.to_string(),
                    days: r.pipeline.history.len(),
                    latest_date: r.pipeline.latest().map(|d| d.date),
                    screen_band: screen.map(|x| x.band),
                    screen_score: screen.map(|x| x.score),
                    open_alerts: r.alerts.iter().filter(|a| a.state == AlertState::Open).count(),
                    has_plan: r.plan.is_some(),
                }
            })
            .collect()
    }

    pub fn state(&self, id: &str) -> Result<StateView, ServiceError> {
        self.read(id, |s| {
            let p = &s.record.pipeline;
            let day = p
                .history
                .iter()
                .rev()
                .find(|d| d.state.is_some())
                .ok_or_else(|| ServiceError::NotFound(format!("state for {id}")))?;
            let (z, band) = p.thresholds().map_or(ThresholdSet::default_alerts(), |t| (t.stress_alert_z, t.screen_alert_band));
            Ok(StateView {
                subject: id.to_string(),
                date: day.date,
                state: day.state.clone().expect("found above"),
                regions: day.regions.clone(),
                screen: p.latest_screen().cloned(),
                stress_score: day.stress_score,
                high_stress_windows: day.windows.iter().filter(|w| w.high_stress).count(),
                screen_alert_band: band,
                stress_alert_z: z,
            })
        })
    }

    pub fn screen_band(&self, id: &str) -> Result<Option<ScreenBand>, ServiceError> {
        self.read(id, |s| Ok(s.record.pipeline.latest_screen().map(|x| x.band)))
    }

    pub fn timeline(&self, id: &str, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Result<Timeline, ServiceError> {
        if let (Some(a), Some(b)) = (from, to) {
            if a > b {
                return Err(ServiceError::BadRequest(format!("from {a} is after to {b}")));
            }
        }
        self.read(id, |s| {
            let p = &s.record.pipeline;
            let days: Vec<TimelineDay> = p
                .history
                .iter()
                .filter(|d| from.is_none_or(|f| d.date >= f) && to.is_none_or(|t| d.date <= t))
                .map(|d| TimelineDay {
                    date: d.date,
                    features: d.features.clone(),
                    mood: d.mood.clone(),
                    mean_hr: d.mean_hr,
                    resting_hr: d.resting_hr,
                    label_minutes: d.label_minutes.clone(),
                    stress_score: d.stress_score,
                    state: d.state.clone(),
                    regions: d.regions.clone(),
                    screen: d.screen.clone(),
                })
                .collect();
            let tz = p.tz();
            let start = from.or(days.first().map(|d| d.date));
            let end = to.or(days.last().map(|d| d.date));
            let events = match (start, end) {
                (Some(a), Some(b)) => {
                    let chron = self.chronicle.lock();
                    if chron.contains(&p.subject) {
                        chron.query_window(&p.subject, time::day_bounds(a, tz).0, time::day_bounds(b, tz).1, None)?
                    } else {
                        Vec::new()
                    }
                }
                _ => Vec::new(),
            };
            Ok(Timeline { subject: id.to_string(), from, to, days, events })
        })
    }

    pub fn plan(&self, id: &str) -> Result<PlanView, ServiceError> {
        self.read(id, |s| plan_view(&s.record).ok_or_else(|| ServiceError::NotFound(format!("plan for {id}"))))
    }

    pub fn goals(&self, id: &str) -> Result<Vec<Goal>, ServiceError> {
        self.read(id, |s| Ok(s.record.goals.values().cloned().collect()))
    }

    pub fn profile(&self, id: &str) -> Result<ProfileContext, ServiceError> {
        self.read(id, |s| Ok(s.record.pipeline.context.clone()))
    }

    /// Alerts across subjects, oldest first.
    pub fn alerts(&self, state: Option<AlertState>, subject: Option<&str>) -> Vec<Alert> {
        let slots: Vec<(String, Arc<Mutex<Slot>>)> =
            self.subjects.read().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut out: Vec<Alert> = slots
            .iter()
            .filter(|(k, _)| subject.is_none_or(|s| s == k))
            .flat_map(|(_, s)| s.lock().record.alerts.clone())
            .filter(|a| state.is_none_or(|st| a.state == st))
            .collect();
        out.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        out
    }

    pub fn recommend_profile(&self, id: &str) -> Result<RecommendProfile, ServiceError> {
        self.read(id, |s| {
            let p = &s.record.pipeline;
            let recent: Vec<&DayOutcome> = p.history.iter().rev().take(PROFILE_DAYS).collect();
            let home = mean(&recent.iter().take(7).filter_map(|d| d.features.home_minutes).collect::<Vec<_>>());
            let daily_arousal: Vec<f64> =
                recent.iter().rev().filter_map(|d| d.state.as_ref().and_then(|v| v.get(AROUSAL))).collect();
            let (mut sm, mut conflict) = (0, 0);
            if let (Some(first), Some(last)) = (recent.last(), recent.first()) {
                let chron = self.chronicle.lock();
                if chron.contains(&p.subject) {
                    let tz = p.tz();
                    let from = time::day_bounds(first.date, tz).0;
                    let to = time::day_bounds(last.date, tz).1;
                    for e in chron.query_window(&p.subject, from, to, None)? {
                        if e.attributes.contains("social_media") && e.attributes.contains("arousal") {
                            sm += 1;
                        }
                        if e.attributes.contains("conflict") {
                            conflict += 1;
                        }
                    }
                }
            }
            Ok(RecommendProfile {
                days_of_data: p.history.len(),
                social_engagement: p.latest_state().and_then(|v| v.get(SOCIAL)),
                home_z: home.filter(|_| p.baseline.days(Metric::HomeMinutes) >= 3).map(|h| p.baseline.z(Metric::HomeMinutes, h)),
                social_media_arousal_events: sm,
                daily_arousal,
                conflict_events: conflict,
            })
        })
    }

    pub fn recommendations(&self, id: &str) -> Result<Recommendation, ServiceError> {
        let profile = self.recommend_profile(id)?;
        Ok(recommend(&profile, &self.opts.catalog, &self.opts.config.navigator)?)
    }

    pub fn lattice(&self) -> serde_json::Value {
        self.recognizer.lattice.to_json(&self.recognizer.table)
    }

    /// Regime phases detected over the subject's history.
    pub fn regimes(&self, id: &str) -> Result<Vec<mhn_core::estimator::RegimePhase>, ServiceError> {
        self.read(id, |s| {
            s.record.pipeline.regimes(&self.opts.config).map_err(|e| ServiceError::BadRequest(e.to_string()))
        })
    }
}

fn plan_view(rec: &SubjectRecord) -> Option<PlanView> {
    rec.plan.as_ref().map(|p| PlanView {
        subject: rec.pipeline.subject.to_string(),
        version: p.version,
        predicted_states: p.plan.predicted_states(),
        plan: p.plan.clone(),
        feedback: p.feedback.clone(),
    })
}

/// Rebuilds a data directory from a journal and returns its state hash.
pub fn replay_journal(journal: &Path, out_dir: &Path, opts: EngineOptions) -> Result<String, ServiceError> {
    std::fs::create_dir_all(out_dir)?;
    let target = out_dir.join(JOURNAL_FILE);
    if target.exists() && std::fs::canonicalize(&target)? == std::fs::canonicalize(journal)? {
        return Err(ServiceError::BadRequest("output directory already holds this journal".into()));
    }
    std::fs::copy(journal, &target)?;
    let engine = Engine::open(out_dir, opts)?;
    engine.state_hash()
}
