use mhn_core::estimator::{screen_band, ScreenBand};
use mhn_service::alerts::{ScreenCrossing, StressRun};
use proptest::prelude::*;

fn band() -> impl Strategy<Value = ScreenBand> {
    (0u32..=63).prop_map(screen_band)
}

proptest! {
    #[test]
    fn one_screen_alert_per_upward_crossing(
        bands in proptest::collection::vec(band(), 0..120),
        boundary in prop_oneof![Just(ScreenBand::Mild), Just(ScreenBand::Moderate), Just(ScreenBand::Severe)],
    ) {
        let mut c = ScreenCrossing::default();
        let fired: Vec<bool> = bands.iter().map(|b| c.observe(*b, boundary)).collect();
        let above: Vec<bool> = bands.iter().map(|b| *b >= boundary).collect();
        let rising = (0..above.len()).filter(|&i| above[i] && (i == 0 || !above[i - 1])).count();
        prop_assert_eq!(fired.iter().filter(|f| **f).count(), rising);
        // Between two alerts the band must have dropped below the boundary.
        let idx: Vec<usize> = (0..fired.len()).filter(|&i| fired[i]).collect();
        for w in idx.windows(2) {
            prop_assert!(above[w[0]..w[1]].iter().any(|a| !a));
        }
        prop_assert_eq!(c.is_above(), above.last().copied().unwrap_or(false));
    }

    #[test]
    fn one_stress_alert_per_long_run(highs in proptest::collection::vec(any::<bool>(), 0..200), needed in 1usize..10) {
        let mut r = StressRun::default();
        let fired = highs.iter().filter(|h| r.observe(**h, needed)).count();
        let mut runs = Vec::new();
        let mut len = 0;
        for h in highs.iter().chain([&false]) {
            if *h {
                len += 1;
            } else {
                if len > 0 {
                    runs.push(len);
                }
                len = 0;
            }
        }
        prop_assert_eq!(fired, runs.iter().filter(|l| **l >= needed).count());
    }
}
