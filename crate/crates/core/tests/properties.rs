use chrono::NaiveDate;
use proptest::prelude::*;

use loadsim::appliance::{aggregate_load, LoadCurve};
use loadsim::calendar::{Period, MINUTES_PER_DAY};
use loadsim::metrics::{frechet_discrete, mae, mda, rmse, wape};
use loadsim::scenario::shift_for;
use loadsim::tusdata::{symmetric_band, VariabilityParam};

fn start() -> chrono::NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

fn covered(values: &[u32], mean: f64, delta: u32) -> usize {
    values.iter().filter(|&&v| (f64::from(v) - mean).abs() <= f64::from(delta) + 1e-9).count()
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-500.0f64..500.0, 1..40)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (prop::collection::vec(0.0f64..3000.0, n), prop::collection::vec(1.0f64..3000.0, n))
    })
}

proptest! {
    #[test]
    fn band_covers_x_percent_and_is_minimal(
        values in prop::collection::vec((0u32..144).prop_map(|s| s * 10), 1..80),
        x in 1.0f64..=100.0,
    ) {
        let vp = VariabilityParam::new(x).unwrap();
        let b = symmetric_band(&values, vp, 10).unwrap();
        let n = values.len();
        prop_assert_eq!(b.delta % 10, 0);
        prop_assert!(covered(&values, b.mean, b.delta) as f64 * 100.0 >= x * n as f64 - 1e-9);
        if b.delta >= 10 {
            let smaller = covered(&values, b.mean, b.delta - 10);
            prop_assert!((smaller as f64) * 100.0 < x * n as f64);
        }
        prop_assert!(b.lower <= b.upper);
        prop_assert!(b.lower >= f64::from(*values.iter().min().unwrap()));
        prop_assert!(b.upper <= f64::from(*values.iter().max().unwrap()));
    }

    #[test]
    fn band_widens_with_x(values in prop::collection::vec((0u32..144).prop_map(|s| s * 10), 1..60), a in 1.0f64..=100.0, b in 1.0f64..=100.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let narrow = symmetric_band(&values, VariabilityParam::new(lo).unwrap(), 10).unwrap();
        let wide = symmetric_band(&values, VariabilityParam::new(hi).unwrap(), 10).unwrap();
        prop_assert!(narrow.delta <= wide.delta);
    }

    #[test]
    fn error_metrics_ordered((a, b) in pair()) {
        let m = mae(&a, &b).unwrap();
        let r = rmse(&a, &b).unwrap();
        prop_assert!(m >= 0.0);
        prop_assert!(m <= r + 1e-9);
        prop_assert!(wape(&a, &b).unwrap() >= 0.0);
        prop_assert_eq!(mae(&b, &b).unwrap(), 0.0);
    }

    #[test]
    fn mda_in_unit_interval_and_one_on_self((a, _) in pair()) {
        prop_assume!(a.len() >= 2);
        let d = mda(&a, &a).unwrap();
        prop_assert_eq!(d, 1.0);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let d = mda(&a, &neg).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn frechet_symmetric_and_bounded(a in series(), b in series()) {
        let ab = frechet_discrete(&a, &b).unwrap();
        let ba = frechet_discrete(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ab + 1e-9 >= (a[0] - b[0]).abs());
        prop_assert!(ab + 1e-9 >= (a[a.len() - 1] - b[b.len() - 1]).abs());
        prop_assert_eq!(frechet_discrete(&a, &a).unwrap(), 0.0);
        let worst = a.iter().flat_map(|x| b.iter().map(move |y| (x - y).abs())).fold(0.0, f64::max);
        prop_assert!(ab <= worst + 1e-9);
    }

    #[test]
    fn frechet_between_pointwise_bounds((a, b) in pair()) {
        let f = frechet_discrete(&a, &b).unwrap();
        let lower = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(f64::INFINITY, f64::min);
        let upper = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(f + 1e-9 >= lower);
        prop_assert!(f <= upper + 1e-9);
    }

    #[test]
    fn shift_never_exceeds_cap_and_stays_in_day(
        s in 0u32..1380, len in 10u32..240,
        ws in 0u32..1300, wlen in 30u32..300,
        cap in 0u32..120,
    ) {
        let pp = Period::new(s, (s + len).min(MINUTES_PER_DAY)).unwrap();
        let w = Period::new(ws, (ws + wlen).min(MINUTES_PER_DAY)).unwrap();
        let shift = shift_for(pp, w, cap);
        prop_assert!(shift.unsigned_abs() <= cap);
        prop_assert!(pp.start as i32 + shift >= 0);
        prop_assert!(pp.end as i32 + shift <= MINUTES_PER_DAY as i32);
        if !pp.overlaps(&w) {
            prop_assert_eq!(shift, 0);
        }
        let moved = Period::new((pp.start as i32 + shift) as u32, (pp.end as i32 + shift) as u32).unwrap();
        prop_assert!(moved.overlap_len(&w) <= pp.overlap_len(&w));
    }

    #[test]
    fn aggregation_is_mean_and_conserves_energy(
        rows in (1usize..6, 1usize..50).prop_flat_map(|(d, n)| prop::collection::vec(prop::collection::vec(0.0f64..5000.0, n), d)),
    ) {
        let curves: Vec<LoadCurve> = rows.iter().map(|v| LoadCurve::new(start(), 1, v.clone()).unwrap()).collect();
        let agg = aggregate_load(&curves).unwrap();
        let total: f64 = curves.iter().map(LoadCurve::energy_wh).sum();
        prop_assert!((agg.energy_wh() * curves.len() as f64 - total).abs() <= 1e-6 * total.max(1.0));
        for i in 0..agg.len() {
            let lo = curves.iter().map(|c| c.values[i]).fold(f64::INFINITY, f64::min);
            let hi = curves.iter().map(|c| c.values[i]).fold(0.0, f64::max);
            prop_assert!(agg.values[i] >= lo - 1e-9 && agg.values[i] <= hi + 1e-9);
        }
    }

    #[test]
    fn resample_preserves_energy(v in prop::collection::vec(0.0f64..5000.0, 1..20).prop_map(|b| b.repeat(30))) {
        let c = LoadCurve::new(start(), 1, v).unwrap();
        let r = c.resample(30).unwrap();
        prop_assert_eq!(r.len(), c.len() / 30);
        prop_assert!((r.energy_wh() - c.energy_wh()).abs() <= 1e-6 * c.energy_wh().max(1.0));
    }
}
