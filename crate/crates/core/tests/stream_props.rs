use proptest::prelude::*;
use spdsim::detector::{apply_dead_time, simulate_event_level, DetectorModel};
use spdsim::source::{sample_cox_stream, sample_poisson_stream, CavityMode, SourceConfig, StatsModel};
use spdsim::stats::{fano_factor, fit_exponential, interval_stats, waiting_time_histogram, Binning};
use spdsim::stream::merge_streams;
use spdsim::{EventLabel, EventStream};

fn intervals() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6..10.0f64, 3..400)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn from_intervals_round_trips(xs in intervals()) {
        let s = EventStream::from_intervals(&xs, EventLabel::Dark).unwrap();
        prop_assert_eq!(s.len(), xs.len() + 1);
        for (a, b) in s.intervals().iter().zip(&xs) {
            prop_assert!((a - b).abs() <= 1e-9 * s.duration());
        }
    }

    #[test]
    fn fit_exponential_is_the_mean(xs in intervals()) {
        let s = EventStream::from_intervals(&xs, EventLabel::Dark).unwrap();
        let iv = s.intervals();
        let mean = iv.iter().sum::<f64>() / iv.len() as f64;
        prop_assert_eq!(fit_exponential(&s).unwrap(), mean);
    }

    #[test]
    fn histogram_is_normalized(xs in intervals(), n_bins in 1usize..80, log in any::<bool>()) {
        let s = EventStream::from_intervals(&xs, EventLabel::Dark).unwrap();
        let binning = if log { Binning::Log } else { Binning::Linear };
        let h = waiting_time_histogram(&s, binning, n_bins).unwrap();
        prop_assert_eq!(h.edges.len(), n_bins + 1);
        prop_assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(h.counts.iter().sum::<u64>() as usize, xs.len());
        prop_assert!((h.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn merge_keeps_order_and_labels(
        a in prop::collection::vec(0.0..100.0f64, 0..200),
        b in prop::collection::vec(0.0..100.0f64, 0..200),
    ) {
        let mk = |mut v: Vec<f64>, l| {
            v.sort_by(f64::total_cmp);
            v.dedup();
            EventStream::uniform(v, l, 100.0).unwrap()
        };
        let (sa, sb) = (mk(a, EventLabel::Mode(0)), mk(b, EventLabel::Dark));
        let m = merge_streams(&[&sa, &sb]).unwrap();
        prop_assert!(m.validate().is_ok());
        prop_assert_eq!(m.len(), sa.len() + sb.len());
        prop_assert_eq!(m.count_label(EventLabel::Dark), sb.len());
    }

    #[test]
    fn dead_time_is_respected(rate in 1.0..500.0f64, dead in 0.0..0.05f64, seed in any::<u64>()) {
        let s = sample_poisson_stream(rate, 20.0, EventLabel::Dark, seed).unwrap();
        let d = apply_dead_time(&s, dead);
        prop_assert!(d.intervals().iter().all(|&dt| dt >= dead));
        prop_assert!(d.len() <= s.len());
    }

    #[test]
    fn generators_are_deterministic(rate in 1.0..200.0f64, seed in any::<u64>()) {
        let a = sample_poisson_stream(rate, 10.0, EventLabel::Dark, seed).unwrap();
        let b = sample_poisson_stream(rate, 10.0, EventLabel::Dark, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let c = sample_cox_stream(rate, 0.01, 10.0, EventLabel::Mode(1), seed).unwrap();
        let d = sample_cox_stream(rate, 0.01, 10.0, EventLabel::Mode(1), seed).unwrap();
        prop_assert_eq!(&c, &d);
    }

    #[test]
    fn poisson_count_within_four_sigma(rate in 10.0..1000.0f64, seed in any::<u64>()) {
        let dur = 50.0;
        let s = sample_poisson_stream(rate, dur, EventLabel::Dark, seed).unwrap();
        let mean = rate * dur;
        prop_assert!((s.len() as f64 - mean).abs() < 4.0 * mean.sqrt());
    }

    #[test]
    fn event_level_respects_dead_time(t in 0.04..0.1f64, dead in 1e-4..1e-2f64, seed in any::<u64>()) {
        let mut modes = vec![CavityMode::new(13.95e9, 4650.0, 0.45).with_stats(StatsModel::Poisson)];
        modes.push(CavityMode::new(8.81e9, 7340.0, 0.0125).with_stats(StatsModel::Poisson));
        let src = SourceConfig { modes, dark_rate: 0.5, temperature: t };
        let det = DetectorModel { detection_probabilities: vec![0.9, 0.9], dead_time: dead, dark_rate: 0.5 };
        let s = simulate_event_level(&src, &det, 5.0, seed).unwrap();
        prop_assert!(s.validate().is_ok());
        prop_assert!(s.intervals().iter().all(|&dt| dt >= dead));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bunched_streams_show_both_signatures(r_tau in 0.2..1.0f64, seed in any::<u64>()) {
        let tau_int = 0.01;
        let rate = r_tau / tau_int;
        let s = sample_cox_stream(rate, tau_int, 4e4 / rate, EventLabel::Mode(0), seed).unwrap();
        let st = interval_stats(&s).unwrap();
        let f = fano_factor(&s, 40.0 * tau_int).unwrap();
        prop_assert!(st.ratio < 1.0, "ratio {}", st.ratio);
        prop_assert!(f > 1.0, "fano {}", f);
    }
}
