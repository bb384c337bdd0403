//! Breathing rate from a PPG pulse train, by both the amplitude envelope and
//! the sinus arrhythmia of the beat intervals.

use mhn_core::physio::{detect_beats, respiration_rate, PhysioConfig};
use mhn_core::simkit::pulse_train;
use mhn_core::{Channel, SampleBatch, SubjectId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PhysioConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for breaths in [9.0, 15.0, 21.0] {
        let train = pulse_train(&mut rng, 1_712_000_000_000, 180, &|_| 68.0, 40.0, 0.0, breaths / 60.0, true);
        let ppg = SampleBatch::new(SubjectId::new("demo")?, Channel::Ppg.default_descriptor(), train.timestamps, train.values)?;
        let ibi = detect_beats(&ppg, &cfg)?;
        let r = respiration_rate(&ppg, &ibi, &cfg)?;
        println!(
            "true {breaths:>4.1}  amplitude {:>5.2}  sinus {}",
            r.breaths_per_min,
            r.sinus_breaths_per_min.map_or("-".into(), |s| format!("{s:.2}"))
        );
    }
    Ok(())
}
