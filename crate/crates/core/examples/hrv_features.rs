//! HRV from a synthetic five-minute pulse train: beats are detected from the
//! PPG, then time and frequency domain features are computed.

use mhn_core::physio::hrv::hrv_features;
use mhn_core::physio::{detect_beats, PhysioConfig};
use mhn_core::simkit::pulse_train;
use mhn_core::{Channel, SampleBatch, SubjectId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PhysioConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t0 = 1_712_000_000_000;
    let train = pulse_train(&mut rng, t0, 300, &|_| 72.0, 30.0, 10.0, 0.25, true);
    let ppg = SampleBatch::new(SubjectId::new("demo")?, Channel::Ppg.default_descriptor(), train.timestamps, train.values)?;
    let ibi = detect_beats(&ppg, &cfg)?;
    println!("{} true beats, {} detected", train.beats.len(), ibi.beat_times.len());
    let f = hrv_features(&ibi, [t0, t0 + 300_000], &cfg)?;
    println!("mean HR {:.1} bpm, SDNN {:.1} ms, RMSSD {:.1} ms", f.mean_hr, f.sdnn, f.rmssd);
    if let (Some(lf), Some(hf), Some(r)) = (f.lf_power, f.hf_power, f.lf_hf_ratio) {
        println!("LF {lf:.1}, HF {hf:.1}, LF/HF {r:.2}");
    }
    Ok(())
}
