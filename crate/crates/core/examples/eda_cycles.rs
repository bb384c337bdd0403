//! Segments a skin conductance trace into the normal, arousal, peak and relax
//! states and counts complete stimulus-response cycles.

use mhn_core::physio::{eda_segment, EdaConfig};
use mhn_core::simkit::gsr_trace;
use mhn_core::{Channel, SampleBatch, SubjectId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = 2.0;
    let (ts, vs, stimuli) = gsr_trace(&mut rng, 1_712_000_000_000, 600, base, 90.0);
    let t0 = ts[0];
    let gsr = SampleBatch::new(SubjectId::new("demo")?, Channel::Gsr.default_descriptor(), ts, vs)?;
    let seg = eda_segment(&gsr, base, &EdaConfig::default())?;
    println!("{} stimuli planted, {} cycles found", stimuli.len(), seg.cycle_count());
    for s in &seg.segments {
        println!("{:>7.1}s - {:>7.1}s  {:?}", (s.start_ms - t0) as f64 / 1e3, (s.end_ms - t0) as f64 / 1e3, s.state);
    }
    Ok(())
}
