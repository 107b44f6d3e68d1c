use proptest::prelude::*;
use reprtune_core::transform::{
    generate_windows, moving_average, split_train_test, weighted_moving_average, window_count,
};

fn brute_force_count(len: usize, w: usize, h: usize, s: usize) -> usize {
    let mut count = 0;
    let mut start = 0;
    while start + w + h <= len {
        count += 1;
        start += s;
    }
    count
}

proptest! {
    #[test]
    fn smoothing_preserves_constants(c in -1e3..1e3f64, len in 1usize..60, m in 1usize..20) {
        prop_assume!(m <= len);
        let x = vec![c; len];
        for out in [moving_average(&x, m).unwrap(), weighted_moving_average(&x, m).unwrap()] {
            prop_assert_eq!(out.len(), len - m + 1);
            for v in out {
                prop_assert_eq!(v, c);
            }
        }
    }

    #[test]
    fn smoothing_stays_within_window_bounds(x in prop::collection::vec(-1e3..1e3f64, 1..80), m in 1usize..16) {
        prop_assume!(m <= x.len());
        let ma = moving_average(&x, m).unwrap();
        let wma = weighted_moving_average(&x, m).unwrap();
        for (t, w) in x.windows(m).enumerate() {
            let lo = w.iter().copied().fold(f64::INFINITY, f64::min) - 1e-9;
            let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1e-9;
            prop_assert!(ma[t] >= lo && ma[t] <= hi);
            prop_assert!(wma[t] >= lo && wma[t] <= hi);
        }
    }

    #[test]
    fn window_count_matches_enumeration(len in 1usize..400, w in 1usize..60, h in 1usize..20, s in 1usize..12) {
        prop_assert_eq!(window_count(len, w, h, s), brute_force_count(len, w, h, s));
    }

    #[test]
    fn windows_tile_the_series(len in 10usize..120, w in 1usize..20, h in 1usize..6, s in 1usize..5, k in 1usize..4) {
        prop_assume!(w + h <= len);
        let series: Vec<Vec<f64>> = (0..k).map(|j| (0..len).map(|t| (t * 10 + j) as f64).collect()).collect();
        let windows = generate_windows(&series, w, h, s, k - 1).unwrap();
        prop_assert_eq!(windows.len(), window_count(len, w, h, s));
        for (i, win) in windows.iter().enumerate() {
            prop_assert_eq!(win.start, i * s);
            prop_assert_eq!(win.input.dim(), (w, k));
            prop_assert_eq!(win.input[[0, 0]], series[0][win.start]);
            prop_assert_eq!(&win.target[..], &series[k - 1][win.start + w..win.start + w + h]);
        }
    }

    #[test]
    fn split_is_chronological(n in 2usize..500, ratio in 0.01..0.99f64) {
        let ids: Vec<usize> = (0..n).collect();
        let (train, test) = split_train_test(&ids, ratio).unwrap();
        prop_assert!(!train.is_empty() && !test.is_empty());
        prop_assert_eq!(train.len() + test.len(), n);
        prop_assert!(train.last().unwrap() < test.first().unwrap());
    }
}
