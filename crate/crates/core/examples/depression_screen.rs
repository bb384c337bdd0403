//! Daily depression screen over sixty days for a well subject and for one
//! whose mood declines in the last third.

use mhn_core::activity_fca::{ActivityConfig, Recognizer};
use mhn_core::config::Config;
use mhn_core::pipeline::simulate_subject;
use mhn_core::simkit::CohortConfig;

fn main() -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let cfg = Config::default();
    let rec = Recognizer::new(ActivityConfig::default())?;
    for (name, cohort) in [("january", CohortConfig::january_like()), ("april", CohortConfig::april_like())] {
        let (p, _) = simulate_subject(&cohort.with_short_windows(), 0, &cfg, &rec)?;
        let scores: Vec<String> = p
            .history
            .iter()
            .step_by(5)
            .filter_map(|d| d.screen.as_ref().map(|s| s.score.to_string()))
            .collect();
        let last = p.latest_screen().ok_or("no screen")?;
        println!("{name:<8} every 5th day: {}", scores.join(" "));
        println!("{name:<8} final {} ({}), contributors {:?}", last.score, last.band.as_str(), last.contributors);
    }
    Ok(())
}
