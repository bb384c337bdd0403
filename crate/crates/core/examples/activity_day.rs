//! Recognizes one synthetic day of activities and compares the minutes per
//! label with the simulator's ground truth.

use mhn_core::activity_fca::{ActivityConfig, Recognizer};
use mhn_core::config::Config;
use mhn_core::personal_model::ProfileContext;
use mhn_core::pipeline::SubjectPipeline;
use mhn_core::simkit::{generate_day, CohortConfig};
use mhn_core::ActivityLabel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = CohortConfig { days: 1, ..CohortConfig::default() }.with_short_windows();
    let day = generate_day(&cohort, 0, 0)?;
    let rec = Recognizer::new(ActivityConfig::default())?;
    let mut p = SubjectPipeline::new(cohort.subject_id(0), ProfileContext::default())?;
    let r = p.process_day(day.truth.date, &day.batches, &Config::default(), &rec)?;
    let tz = p.tz();
    println!("{} {}: {} events", r.outcome.date, cohort.subject_id(0).as_str(), r.events.len());
    for e in &r.events {
        let at = |ms| chrono::DateTime::from_timestamp_millis(ms).unwrap().with_timezone(&tz).format("%H:%M");
        println!("  {} - {}  {}", at(e.start_ms), at(e.end_ms), e.label);
    }
    println!("{:<16} {:>8} {:>8}", "label", "truth", "found");
    for &l in ActivityLabel::ALL {
        let (want, got) = (day.truth.minutes(l), r.outcome.minutes(l));
        if want > 0.0 || got > 0.0 {
            println!("{:<16} {want:>8.0} {got:>8.0}", l.to_string());
        }
    }
    Ok(())
}
