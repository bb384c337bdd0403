//! Runs a cohort with planted poor-mood blocks through the pipeline and
//! prints the detected phases next to the planted ones.

use mhn_core::activity_fca::{ActivityConfig, Recognizer};
use mhn_core::config::Config;
use mhn_core::estimator::{detect_regime, Phase};
use mhn_core::pipeline::simulate_subject;
use mhn_core::simkit::CohortConfig;

fn main() -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let cohort = CohortConfig::regime_cohort(42).with_short_windows();
    let cfg = Config::default();
    let rec = Recognizer::new(ActivityConfig::default())?;
    for s in 0..cohort.subjects {
        let (p, _) = simulate_subject(&cohort, s, &cfg, &rec)?;
        let planted: String = (0..cohort.days)
            .map(|d| if cohort.phase(s, d) == Phase::PoorMood { '#' } else { '.' })
            .collect();
        let mut found = vec!['.'; cohort.days];
        for r in detect_regime(&p.features(), &cfg.estimator)? {
            if r.phase == Phase::PoorMood {
                found[r.start_day..=r.end_day].iter_mut().for_each(|c| *c = '#');
            }
        }
        println!("{} planted {planted}", cohort.subject_id(s).as_str());
        println!("{} found   {}", " ".repeat(cohort.subject_id(s).as_str().len()), found.iter().collect::<String>());
    }
    Ok(())
}
