//! Interval description, concept matching and complex-event rules.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::lattice::{build_lattice, enumerate_concepts, ConceptLattice, CrossTable};
use super::{
    default_table, ActivityConfig, FcaError, ATTR_HR_ELEVATED, ATTR_HR_LOW, ATTR_HR_RESTING,
    ATTR_LONG, ATTR_MEDIUM, ATTR_PHONE, ATTR_RUNNING, ATTR_SHORT, ATTR_STILL, ATTR_WALKING,
};
use crate::chronicle::{ActivityLabel, EventRecord, EventSource, SubjectId};
use crate::ingest::{FrameRow, LocationClass};
use crate::stats::median;
use crate::time::{self, EpochMs, Timeband, MINUTE_MS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Still,
    Walking,
    Running,
}

impl Motion {
    fn attribute(self) -> &'static str {
        match self {
            Motion::Still => ATTR_STILL,
            Motion::Walking => ATTR_WALKING,
            Motion::Running => ATTR_RUNNING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HrClass {
    Low,
    Resting,
    Elevated,
}

impl HrClass {
    fn attribute(self) -> &'static str {
        match self {
            HrClass::Low => ATTR_HR_LOW,
            HrClass::Resting => ATTR_HR_RESTING,
            HrClass::Elevated => ATTR_HR_ELEVATED,
        }
    }
}

pub fn location_attribute(loc: LocationClass) -> Option<&'static str> {
    match loc {
        LocationClass::Unknown => None,
        LocationClass::Home => Some("Home"),
        LocationClass::Work => Some("Work"),
        LocationClass::Restaurant => Some("Restaurant"),
        LocationClass::Transit => Some("Transit"),
        LocationClass::SocialVenue => Some("Social venue"),
        LocationClass::Outdoor => Some("Outdoor"),
    }
}

fn timeband_attribute(tb: Timeband) -> &'static str {
    match tb {
        Timeband::Morning => "Morning",
        Timeband::Afternoon => "Afternoon",
        Timeband::Evening => "Evening",
        Timeband::Night => "Night",
    }
}

/// Activities that can plausibly happen at a location.
fn permitted(label: ActivityLabel, loc: LocationClass) -> bool {
    use ActivityLabel::*;
    match loc {
        LocationClass::Home => matches!(
            label,
            Still
                | Walking
                | DirectCommunication
                | RemoteCommunication
                | OnTheSmartphone
                | Eating
                | UsingToilet
                | WatchingTv
                | PreparingFood
                | Housework
                | IntimateRelations
                | Relaxing
                | Sleeping
        ),
        LocationClass::Work => matches!(label, UsingToilet | Working | TakingABreak | Relaxing),
        LocationClass::Restaurant => matches!(
            label,
            Still | Walking | DirectCommunication | RemoteCommunication | OnTheSmartphone | Eating
                | Socializing | UsingToilet
        ),
        LocationClass::Transit => matches!(
            label,
            Still | Walking | Running | Cycling | Driving | Commuting | DirectCommunication
                | RemoteCommunication | OnTheSmartphone
        ),
        LocationClass::SocialVenue => matches!(
            label,
            Still | Walking | DirectCommunication | RemoteCommunication | OnTheSmartphone
                | ReligiousEvent | Shopping | Socializing | Eating | UsingToilet
        ),
        LocationClass::Outdoor => matches!(
            label,
            Still | Walking | Running | Cycling | Exercising | DirectCommunication
                | RemoteCommunication | OnTheSmartphone | Socializing
        ),
        LocationClass::Unknown => label != HomeEvent,
    }
}

/// Table plus its lattice, shared read-only across classifications.
#[derive(Debug, Clone)]
pub struct Recognizer {
    pub table: CrossTable,
    pub lattice: ConceptLattice,
    pub cfg: ActivityConfig,
}

impl Recognizer {
    pub fn new(cfg: ActivityConfig) -> Result<Self, FcaError> {
        let table = match cfg.table_path {
            None => default_table(),
            Some(_) => cfg.load_table()?,
        };
        Self::with_table(table, cfg)
    }

    pub fn with_table(table: CrossTable, cfg: ActivityConfig) -> Result<Self, FcaError> {
        let lattice = build_lattice(enumerate_concepts(&table)?)?;
        Ok(Recognizer { table, lattice, cfg })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub ranked: Vec<(ActivityLabel, f64)>,
}

impl Classification {
    pub fn best(&self) -> (ActivityLabel, f64) {
        self.ranked.first().copied().unwrap_or((ActivityLabel::Unknown, 0.0))
    }
}

/// Ranks activities for one interval.
///
/// An activity scores the share of the interval's attributes covered by the
/// most specific concept that contains it and whose intent the interval
/// satisfies. Candidates not allowed at `location` are dropped.
pub fn classify_interval<S: AsRef<str>>(
    attributes: &[S],
    location: LocationClass,
    rec: &Recognizer,
) -> Classification {
    let t = &rec.table;
    let total = attributes.len();
    let have = attributes
        .iter()
        .filter_map(|a| t.attribute_index(a.as_ref()))
        .fold(0u64, |m, i| m | 1 << i);
    let mut best: BTreeMap<ActivityLabel, f64> = BTreeMap::new();
    if total > 0 {
        for c in &rec.lattice.concepts {
            if c.extent == 0 || c.intent == 0 || c.intent & !have != 0 {
                continue;
            }
            let score = c.intent_len() as f64 / total as f64;
            for obj in t.object_names(c.extent) {
                let e = best.entry(obj).or_insert(0.0);
                if score > *e {
                    *e = score;
                }
            }
        }
    }
    let mut ranked: Vec<(ActivityLabel, f64)> = best
        .into_iter()
        .filter(|(l, _)| permitted(*l, location))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.order().cmp(&b.0.order())));
    Classification { ranked }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedInterval {
    pub start_ms: EpochMs,
    pub end_ms: EpochMs,
    pub motion: Option<Motion>,
    pub location: LocationClass,
    pub hr_mean: Option<f64>,
    pub hr_class: Option<HrClass>,
    pub phone: bool,
    pub attributes: Vec<String>,
    pub label: ActivityLabel,
    pub confidence: f64,
    pub source: EventSource,
}

impl ClassifiedInterval {
    fn still_at_home(&self) -> bool {
        self.motion == Some(Motion::Still) && self.location == LocationClass::Home
    }

    fn moving_at_home(&self) -> bool {
        matches!(self.motion, Some(Motion::Walking | Motion::Running))
            && self.location == LocationClass::Home
    }
}

#[derive(Default)]
struct TileAcc {
    accel: Vec<f64>,
    hr: Vec<f64>,
    gps: BTreeMap<i64, usize>,
    screen: f64,
    rows: usize,
}

/// Cuts `[from, to)` into fixed intervals and derives their attributes.
/// Labels are left at `Unknown`.
pub fn describe_intervals(
    rows: &[FrameRow],
    from: EpochMs,
    to: EpochMs,
    tz: Tz,
    cfg: &ActivityConfig,
) -> Vec<ClassifiedInterval> {
    let g = cfg.granularity_min.max(1) as i64 * MINUTE_MS;
    let n = ((to - from).max(0) / g) as usize;
    let mut tiles: Vec<TileAcc> = (0..n).map(|_| TileAcc::default()).collect();
    for r in rows {
        if r.ts_ms < from || r.ts_ms >= from + n as i64 * g {
            continue;
        }
        let t = &mut tiles[((r.ts_ms - from) / g) as usize];
        t.rows += 1;
        if let Some(v) = r.values.get("accel_mag") {
            t.accel.push(*v);
        }
        if let Some(v) = r.values.get("hr") {
            t.hr.push(*v);
        }
        if let Some(v) = r.values.get("gps_class") {
            *t.gps.entry(v.round() as i64).or_default() += 1;
        }
        if let Some(v) = r.values.get("screen_on") {
            t.screen = t.screen.max(*v);
        }
    }
    let hr_means: Vec<Option<f64>> = tiles
        .iter()
        .map(|t| (!t.hr.is_empty()).then(|| t.hr.iter().sum::<f64>() / t.hr.len() as f64))
        .collect();
    let present: Vec<f64> = hr_means.iter().flatten().copied().collect();
    let reference = median(&present);
    let mut out: Vec<ClassifiedInterval> = tiles
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let motion = crate::stats::pop_std(&t.accel).filter(|_| t.accel.len() >= 2).map(|sd| {
                if sd < cfg.still_max_std {
                    Motion::Still
                } else if sd < cfg.walking_max_std {
                    Motion::Walking
                } else {
                    Motion::Running
                }
            });
            let location = t
                .gps
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(c, _)| LocationClass::from_code(*c as f64))
                .unwrap_or(LocationClass::Unknown);
            let hr_class = match (hr_means[k], reference) {
                (Some(h), Some(r)) if h < r - cfg.hr_low_delta => Some(HrClass::Low),
                (Some(h), Some(r)) if h > r + cfg.hr_elevated_delta => Some(HrClass::Elevated),
                (Some(_), Some(_)) => Some(HrClass::Resting),
                _ => None,
            };
            let start = from + k as i64 * g;
            ClassifiedInterval {
                start_ms: start,
                end_ms: start + g,
                motion,
                location,
                hr_mean: hr_means[k],
                hr_class,
                phone: t.screen >= 0.5,
                attributes: Vec::new(),
                label: ActivityLabel::Unknown,
                confidence: 0.0,
                source: EventSource::Fca,
            }
        })
        .collect();

    let sig = |c: &ClassifiedInterval| (c.motion, c.location, c.hr_class);
    let mut i = 0;
    while i < out.len() {
        let mut j = i + 1;
        while j < out.len() && sig(&out[j]) == sig(&out[i]) {
            j += 1;
        }
        let minutes = (j - i) as f64 * cfg.granularity_min as f64;
        let duration = if minutes < cfg.short_max_min {
            ATTR_SHORT
        } else if minutes < cfg.medium_max_min {
            ATTR_MEDIUM
        } else {
            ATTR_LONG
        };
        for c in &mut out[i..j] {
            if c.motion.is_none() && c.location == LocationClass::Unknown {
                continue;
            }
            let mut attrs: Vec<String> = Vec::new();
            if let Some(m) = c.motion {
                attrs.push(m.attribute().into());
            }
            if c.phone {
                attrs.push(ATTR_PHONE.into());
            }
            attrs.push(duration.into());
            attrs.push(timeband_attribute(Timeband::at(c.start_ms, tz)).into());
            if let Some(l) = location_attribute(c.location) {
                attrs.push(l.into());
            }
            if let Some(h) = c.hr_class {
                attrs.push(h.attribute().into());
            }
            c.attributes = attrs;
        }
        i = j;
    }
    out
}

fn mean_hr(ivs: &[ClassifiedInterval]) -> Option<f64> {
    let hs: Vec<f64> = ivs.iter().filter_map(|c| c.hr_mean).collect();
    crate::stats::mean(&hs)
}

/// Applies the meal and food-preparation rules over a classified interval
/// sequence, relabeling the intervals they cover. Returns the inferred events.
pub fn recognize_complex(
    subject: &SubjectId,
    intervals: &mut [ClassifiedInterval],
    cfg: &ActivityConfig,
) -> Vec<EventRecord> {
    let g = cfg.granularity_min.max(1) as i64;
    let n = intervals.len();
    let mark = |c: &mut ClassifiedInterval, label: ActivityLabel| {
        c.label = label;
        c.confidence = 1.0;
        c.source = EventSource::Rule;
    };

    // Still at a restaurant is a meal even when the lattice preferred something else.
    for c in intervals.iter_mut() {
        if c.motion == Some(Motion::Still)
            && c.location == LocationClass::Restaurant
            && c.label != ActivityLabel::Eating
        {
            mark(c, ActivityLabel::Eating);
        }
    }

    // Meals at home show up as a heart-rate rise after settling down.
    let w = (cfg.eating_window_min / g).max(1) as usize;
    let dur = (cfg.eating_duration_min / g).max(1) as usize;
    let mut i = 1;
    while i < n {
        let starts_run = intervals[i].still_at_home() && !intervals[i - 1].still_at_home();
        let after_low = intervals[i - 1].hr_class == Some(HrClass::Low);
        if starts_run && !after_low && i >= w && i + w <= n {
            let before = mean_hr(&intervals[i - w..i]);
            let after = mean_hr(&intervals[i..i + w]);
            if let (Some(b), Some(a)) = (before, after) {
                if a >= b + cfg.eating_hr_rise {
                    let mut k = i;
                    while k < n && k < i + dur && intervals[k].still_at_home() {
                        mark(&mut intervals[k], ActivityLabel::Eating);
                        k += 1;
                    }
                    i = k;
                    continue;
                }
            }
        }
        i += 1;
    }

    // Movement at home just before a meal at home is food preparation.
    let gap = (cfg.prep_max_gap_min / g).max(0) as usize;
    let mut k = 0;
    while k < n {
        let meal_start = intervals[k].label == ActivityLabel::Eating
            && intervals[k].location == LocationClass::Home
            && (k == 0 || intervals[k - 1].label != ActivityLabel::Eating);
        if meal_start {
            let end = (1..=gap + 1)
                .take_while(|off| *off <= k)
                .map(|off| k - off)
                .take_while(|m| intervals[*m].location == LocationClass::Home)
                .find(|m| intervals[*m].moving_at_home());
            if let Some(m) = end {
                let mut a = m;
                while a > 0 && intervals[a - 1].moving_at_home() {
                    a -= 1;
                }
                if ((m - a + 1) as i64) * g >= cfg.prep_min_minutes {
                    for c in &mut intervals[a..=m] {
                        mark(c, ActivityLabel::PreparingFood);
                    }
                }
            }
        }
        k += 1;
    }

    merge_events(subject, intervals, |c| c.source == EventSource::Rule)
}

fn merge_events(
    subject: &SubjectId,
    intervals: &[ClassifiedInterval],
    keep: impl Fn(&ClassifiedInterval) -> bool,
) -> Vec<EventRecord> {
    let mut out: Vec<(EventRecord, usize)> = Vec::new();
    for c in intervals.iter().filter(|c| keep(c)) {
        if let Some((last, count)) = out.last_mut() {
            if last.label == c.label && last.source == c.source && last.end_ms == c.start_ms {
                last.end_ms = c.end_ms;
                last.confidence += c.confidence;
                last.attributes.extend(c.attributes.iter().cloned());
                *count += 1;
                continue;
            }
        }
        let e = EventRecord::new(subject.clone(), c.label, c.start_ms, c.end_ms, c.source)
            .with_attributes(c.attributes.iter().cloned())
            .with_confidence(c.confidence);
        out.push((e, 1));
    }
    out.into_iter()
        .map(|(mut e, n)| {
            e.confidence = (e.confidence / n as f64).clamp(0.0, 1.0);
            e
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecognition {
    pub date: NaiveDate,
    pub intervals: Vec<ClassifiedInterval>,
    /// Activity events (one per run of equal labels) plus one home event per
    /// contiguous stay at home.
    pub events: Vec<EventRecord>,
}

impl DayRecognition {
    pub fn minutes(&self, label: ActivityLabel) -> f64 {
        self.events
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.duration_ms() as f64 / MINUTE_MS as f64)
            .sum()
    }
}

/// Describes, classifies and refines one local day of aligned frames.
pub fn recognize_day(
    subject: &SubjectId,
    rows: &[FrameRow],
    date: NaiveDate,
    tz: Tz,
    rec: &Recognizer,
) -> DayRecognition {
    let (from, to) = time::day_bounds(date, tz);
    let mut intervals = describe_intervals(rows, from, to, tz, &rec.cfg);
    for c in &mut intervals {
        if c.location == LocationClass::Unknown || c.attributes.is_empty() {
            continue;
        }
        let (label, conf) = classify_interval(&c.attributes, c.location, rec).best();
        c.label = label;
        c.confidence = conf;
    }
    recognize_complex(subject, &mut intervals, &rec.cfg);
    let mut events = merge_events(subject, &intervals, |c| {
        !(c.label == ActivityLabel::Unknown && c.location != LocationClass::Unknown && c.attributes.is_empty())
    });
    let home: Vec<ClassifiedInterval> = intervals
        .iter()
        .filter(|c| c.location == LocationClass::Home)
        .map(|c| ClassifiedInterval {
            label: ActivityLabel::HomeEvent,
            confidence: 1.0,
            source: EventSource::Rule,
            attributes: vec!["Home".into()],
            ..c.clone()
        })
        .collect();
    events.extend(merge_events(subject, &home, |_| true));
    events.sort_by_key(|e| (e.start_ms, e.label));
    DayRecognition { date, intervals, events }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity_fca::table2;
    use chrono::NaiveTime;

    fn subject() -> SubjectId {
        SubjectId::new("s1").unwrap()
    }

    #[test]
    fn table2_classification() {
        let rec = Recognizer::with_table(table2(), ActivityConfig::default()).unwrap();
        let c = classify_interval(&["Medium time-duration", "Work"], LocationClass::Work, &rec);
        assert_eq!(c.best(), (ActivityLabel::Working, 1.0));
        let c = classify_interval(&["Walking", "Work"], LocationClass::Work, &rec);
        assert_eq!(c.best(), (ActivityLabel::UsingToilet, 1.0));
        let c = classify_interval(&["Walking", "Medium time-duration"], LocationClass::Transit, &rec);
        assert_eq!(c.best().0, ActivityLabel::Commuting);
    }

    #[test]
    fn nothing_matches_is_unknown() {
        let rec = Recognizer::new(ActivityConfig::default()).unwrap();
        let c = classify_interval(&["Running"], LocationClass::Home, &rec);
        assert_eq!(c.best(), (ActivityLabel::Unknown, 0.0));
        let empty: [&str; 0] = [];
        assert_eq!(classify_interval(&empty, LocationClass::Home, &rec).best().0, ActivityLabel::Unknown);
    }

    #[test]
    fn default_table_typical_contexts() {
        let rec = Recognizer::new(ActivityConfig::default()).unwrap();
        let cases: &[(&[&str], LocationClass, ActivityLabel)] = &[
            (&["Still", "Long time-duration", "Night", "Home", "Low HR"], LocationClass::Home, ActivityLabel::Sleeping),
            (&["Still", "Long time-duration", "Afternoon", "Work", "Resting HR"], LocationClass::Work, ActivityLabel::Working),
            (&["Walking", "Medium time-duration", "Morning", "Transit", "Elevated HR"], LocationClass::Transit, ActivityLabel::Commuting),
            (&["Running", "Medium time-duration", "Evening", "Outdoor", "Elevated HR"], LocationClass::Outdoor, ActivityLabel::Exercising),
            (&["Still", "Long time-duration", "Evening", "Social venue", "Resting HR"], LocationClass::SocialVenue, ActivityLabel::Socializing),
            (&["Still", "Medium time-duration", "Afternoon", "Restaurant", "Resting HR"], LocationClass::Restaurant, ActivityLabel::Eating),
            (&["Walking", "Medium time-duration", "Evening", "Home", "Resting HR"], LocationClass::Home, ActivityLabel::PreparingFood),
            (&["Still", "Long time-duration", "Evening", "Home", "Resting HR"], LocationClass::Home, ActivityLabel::Relaxing),
        ];
        for (attrs, loc, want) in cases {
            assert_eq!(classify_interval(attrs, *loc, &rec).best().0, *want, "{attrs:?}");
        }
    }

    #[test]
    fn classification_is_deterministic() {
        let rec = Recognizer::new(ActivityConfig::default()).unwrap();
        let a = classify_interval(&["Still", "Home"], LocationClass::Home, &rec);
        for _ in 0..10 {
            assert_eq!(classify_interval(&["Still", "Home"], LocationClass::Home, &rec), a);
        }
        for w in a.ranked.windows(2) {
            assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        }
    }

    fn iv(min: i64, motion: Motion, loc: LocationClass, hr: f64, label: ActivityLabel) -> ClassifiedInterval {
        ClassifiedInterval {
            start_ms: min * MINUTE_MS,
            end_ms: (min + 5) * MINUTE_MS,
            motion: Some(motion),
            location: loc,
            hr_mean: Some(hr),
            hr_class: Some(HrClass::Resting),
            phone: false,
            attributes: vec![],
            label,
            confidence: 0.5,
            source: EventSource::Fca,
        }
    }

    #[test]
    fn movement_before_home_meal_is_preparation() {
        use ActivityLabel::*;
        let h = LocationClass::Home;
        let mut ivs = vec![
            iv(11 * 60 + 30, Motion::Still, h, 70.0, Relaxing),
            iv(11 * 60 + 35, Motion::Still, h, 70.0, Relaxing),
            iv(11 * 60 + 40, Motion::Still, h, 70.0, Relaxing),
            iv(11 * 60 + 45, Motion::Walking, h, 70.0, Walking),
            iv(11 * 60 + 50, Motion::Walking, h, 70.0, Walking),
            iv(11 * 60 + 55, Motion::Still, h, 70.0, Relaxing),
        ];
        for k in 0..6 {
            ivs.push(iv(12 * 60 + 5 * k, Motion::Still, h, 70.0, Eating));
        }
        let ev = recognize_complex(&subject(), &mut ivs, &ActivityConfig::default());
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].label, PreparingFood);
        assert_eq!(ev[0].start_ms, (11 * 60 + 45) * MINUTE_MS);
        assert_eq!(ev[0].end_ms, (11 * 60 + 55) * MINUTE_MS);
        assert_eq!(ev[0].source, EventSource::Rule);
    }

    #[test]
    fn flat_hr_meal_without_movement_infers_nothing() {
        use ActivityLabel::*;
        let h = LocationClass::Home;
        let mut ivs: Vec<_> = (0..12).map(|k| iv(600 + 5 * k, Motion::Still, h, 70.0, Relaxing)).collect();
        for k in 0..6 {
            ivs.push(iv(660 + 5 * k, Motion::Still, h, 70.0, Eating));
        }
        assert!(recognize_complex(&subject(), &mut ivs, &ActivityConfig::default()).is_empty());
    }

    #[test]
    fn postprandial_rise_marks_a_meal() {
        use ActivityLabel::*;
        let h = LocationClass::Home;
        let mut ivs: Vec<_> = (0..4).map(|k| iv(600 + 5 * k, Motion::Walking, h, 70.0, PreparingFood)).collect();
        ivs.extend((0..10).map(|k| iv(620 + 5 * k, Motion::Still, h, 82.0, Relaxing)));
        let ev = recognize_complex(&subject(), &mut ivs, &ActivityConfig::default());
        let meal = ev.iter().find(|e| e.label == Eating).unwrap();
        assert_eq!(meal.start_ms, 620 * MINUTE_MS);
        assert_eq!(meal.end_ms, 650 * MINUTE_MS);
        assert!(ev.iter().any(|e| e.label == PreparingFood && e.end_ms == 620 * MINUTE_MS));
    }

    #[test]
    fn describes_a_synthetic_day() {
        let cfg = ActivityConfig::default();
        let rec = Recognizer::new(cfg).unwrap();
        let date = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let base = time::local_to_epoch(date, NaiveTime::MIN, chrono_tz::UTC);
        let mut rows = Vec::new();
        for k in 0..(1440 * 6) {
            let t = base + k * 10_000;
            let minute = k / 6;
            let sleeping = minute < 420;
            let mut v = BTreeMap::new();
            let jitter = if k % 2 == 0 { 0.005 } else { -0.005 };
            v.insert("accel_mag".into(), 1.0 + jitter);
            v.insert("hr".into(), if sleeping { 55.0 } else { 68.0 });
            v.insert("gps_class".into(), 1.0);
            rows.push(FrameRow { ts_ms: t, values: v });
        }
        let day = recognize_day(&subject(), &rows, date, chrono_tz::UTC, &rec);
        assert_eq!(day.intervals.len(), 288);
        assert_eq!(day.minutes(ActivityLabel::Sleeping), 420.0);
        assert_eq!(day.minutes(ActivityLabel::HomeEvent), 1440.0);
        assert_eq!(day.minutes(ActivityLabel::Relaxing), 1020.0);
    }
}
