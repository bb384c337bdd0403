//! Schedules a fortnight of uniform prompts, simulates a subject who mostly
//! answers in the evening, then reschedules with the learned timing model.

use chrono::{Duration, NaiveDate};
use mhn_core::ema::{schedule_prompts, schedule_prompts_with_model, EmaConfig, EmaLog, EmaResponse};
use mhn_core::personal_model::ema_timing_model;
use mhn_core::time::local_hour;
use mhn_core::SubjectId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tz = chrono_tz::Europe::Rome;
    let cfg = EmaConfig::default();
    let subject = SubjectId::new("demo")?;
    let start = NaiveDate::from_ymd_opt(2020, 4, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut log = EmaLog::default();
    for d in 0..21 {
        let prompts = schedule_prompts(&subject, start + Duration::days(d), tz, &cfg, d as u64)?;
        log.add_prompts(prompts.clone());
        for p in prompts {
            let answer_p = if local_hour(p.scheduled_at, tz) >= 17 { 0.9 } else { 0.2 };
            if rng.gen_bool(answer_p) {
                log.record_response(EmaResponse {
                    prompt_id: p.id.clone(),
                    answered_at: p.scheduled_at + 60_000,
                    positive_affect: rng.gen_range(2..=5),
                    negative_affect: rng.gen_range(1..=3),
                    free_text: None,
                    weekly: false,
                })?;
            }
        }
    }
    let mood = log.daily_mood(start, tz)?;
    println!("day 1: {}/{} answered, PA {:.2}, NA {:.2}", mood.answered, mood.scheduled, mood.mean_positive, mood.mean_negative);

    let model = ema_timing_model(&log.outcomes(), tz)?;
    let day = start + Duration::days(30);
    let before = schedule_prompts(&subject, day, tz, &cfg, 99)?;
    let after = schedule_prompts_with_model(&subject, day, tz, &cfg, 99, &model)?;
    let hours = |ps: &[mhn_core::ema::EmaPrompt]| ps.iter().map(|p| local_hour(p.scheduled_at, tz)).collect::<Vec<_>>();
    println!("uniform hours  {:?}", hours(&before));
    println!("learned hours  {:?}", hours(&after));
    Ok(())
}
