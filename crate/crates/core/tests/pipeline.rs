use irb_core::data_io::{load_panel, read_panel, save_panel, synthesize_panel, write_panel, Grade, PanelRow, RatePanel, SynthesisTargets};
use irb_core::presets::lgd_summary;
use irb_core::stats::{describe, pearson, SampleSeries};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn row_strategy() -> impl Strategy<Value = (f64, Option<f64>, Option<f64>)> {
    (0.0..=1.0f64, proptest::option::of(0.0..=1.0f64), proptest::option::of(0.0..=1.0f64))
}

proptest! {
    #[test]
    fn written_panels_read_back_bit_exactly(start in 1800i32..2100, rows in proptest::collection::vec(row_strategy(), 1..40)) {
        let rows: Vec<PanelRow> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (lgd_rate, pd_all_ratings, pd_speculative))| PanelRow { year: start + i as i32, lgd_rate, pd_all_ratings, pd_speculative })
            .collect();
        let panel = RatePanel::validate(rows, "generated").unwrap();
        let mut buf = Vec::new();
        write_panel(&panel, &mut buf).unwrap();
        let back = read_panel(buf.as_slice(), "generated").unwrap();
        prop_assert_eq!(back.rows, panel.rows);
    }

    #[test]
    fn synthetic_panels_pass_validation(seed in any::<u64>()) {
        let panel = synthesize_panel(&SynthesisTargets::reference(), seed).unwrap();
        let mut buf = Vec::new();
        write_panel(&panel, &mut buf).unwrap();
        let back = read_panel(buf.as_slice(), "synthetic").unwrap();
        prop_assert_eq!(back.len(), 37);
        prop_assert_eq!(back.rows, panel.rows);
    }
}

#[test]
fn file_round_trip_of_a_37_year_panel() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("panel.csv");
    let panel = synthesize_panel(&SynthesisTargets::reference(), 2024).unwrap();
    save_panel(&panel, &path).unwrap();
    let loaded = load_panel(&path).unwrap();
    assert_eq!(loaded.len(), 37);
    assert_eq!(loaded.years().first(), Some(&1983));
    assert_eq!(loaded.years().last(), Some(&2019));
    assert_eq!(loaded.rows, panel.rows);
}

/// 37 LGD rates with the reference minimum, maximum, median, mean and
/// standard deviation: two fixed extremes, the median, and 17 points on each
/// side scaled so the first two moments come out exactly.
fn reference_lgd_fixture() -> Vec<f64> {
    let (min, max, median, mean, std) =
        (lgd_summary::MIN, lgd_summary::MAX, lgd_summary::MEDIAN, lgd_summary::MEAN, lgd_summary::STD);
    let shape: Vec<f64> = (1..=17).map(|i| i as f64 / 18.0).collect();
    let build = |s: f64, t: f64| {
        let mut v = vec![min, max, median];
        v.extend(shape.iter().map(|u| median - s * u));
        v.extend(shape.iter().map(|u| median + t * u));
        v
    };
    let u_sum: f64 = shape.iter().sum();
    // the mean pins t given s
    let t_of = |s: f64| (37.0 * mean - (min + max + 35.0 * median) + s * u_sum) / u_sum;
    let std_of = |s: f64| describe(&SampleSeries::new("x", build(s, t_of(s)), None).unwrap()).std;
    let (mut lo, mut hi) = (0.0, median - min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if std_of(mid) < std {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    build(s, t_of(s))
}

#[test]
fn describe_reproduces_reference_lgd_row() {
    let values = reference_lgd_fixture();
    assert!(values.iter().all(|&v| (lgd_summary::MIN..=lgd_summary::MAX).contains(&v)));
    let d = describe(&SampleSeries::new("LGD", values, None).unwrap());
    assert_eq!(d.n, 37);
    assert_eq!(d.min, lgd_summary::MIN);
    assert_eq!(d.max, lgd_summary::MAX);
    assert_eq!(d.median, lgd_summary::MEDIAN);
    assert!((d.mean - lgd_summary::MEAN).abs() < 1e-12);
    assert!((d.std - lgd_summary::STD).abs() < 1e-9);
}

#[test]
fn fisher_interval_covers_at_nominal_rate() {
    let (rho, n, reps) = (0.7, 37, 4000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut covered = 0;
    for _ in 0..reps {
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            a.push(z1);
            b.push(rho * z1 + (1.0f64 - rho * rho).sqrt() * z2);
        }
        let c = pearson(&SampleSeries::new("a", a, None).unwrap(), &SampleSeries::new("b", b, None).unwrap()).unwrap();
        covered += usize::from(c.ci_low <= rho && rho <= c.ci_high);
    }
    let coverage = covered as f64 / reps as f64;
    // binomial s.e. at 4000 reps is 0.0034
    assert!((0.935..=0.965).contains(&coverage), "{coverage}");
}

#[test]
fn panel_series_by_grade() {
    let panel = synthesize_panel(&SynthesisTargets::reference(), 1).unwrap();
    let ar = panel.pd_series(Grade::AllRatings).unwrap();
    let sg = panel.pd_series(Grade::Speculative).unwrap();
    assert_eq!(ar.len(), sg.len());
    assert!(describe(&sg).mean > describe(&ar).mean);
}
