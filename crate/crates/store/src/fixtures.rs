//! Deterministic synthetic datasets shaped like the monthly sunspot record
//! and hourly urban air-quality measurements.

use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Solar-cycle minima (months since December 1982) and peak smoothed
/// amplitudes of the cycles that follow them.
const CYCLES: [(f64, f64); 5] = [(-73.0, 160.0), (45.0, 214.0), (164.0, 180.0), (312.0, 116.0), (444.0, 175.0)];

fn cycle_value(t: f64) -> f64 {
    let Some(i) = CYCLES.iter().rposition(|&(start, _)| start <= t) else {
        return 0.0;
    };
    let (start, amp) = CYCLES[i];
    let len = CYCLES.get(i + 1).map_or(132.0, |next| next.0 - start);
    let x = ((t - start) / len).clamp(0.0, 1.0);
    amp * (std::f64::consts::PI * x.powf(0.75)).sin().powi(2)
}

/// Monthly mean sunspot numbers, `months` rows starting December 1982.
///
/// Columns: `month` (`YYYY-MM`) and `sunspots`. Values follow four and a
/// half solar cycles with level-dependent noise, rounded to 0.1.
pub fn sunspot_csv(months: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = String::from("month,sunspots\n");
    for m in 0..months {
        let total = 1982 * 12 + 11 + m;
        let (year, month) = (total / 12, total % 12 + 1);
        let level = cycle_value(m as f64);
        let value = (level + noise.sample(&mut rng) * (4.0 + 0.18 * level)).max(0.0);
        writeln!(out, "{year:04}-{month:02},{value:.1}").expect("write to string");
    }
    out
}

/// Hourly air-quality records starting 2014-01-01 00:00.
///
/// Six variables: `pm25` (target), dew point, temperature, pressure, wind
/// speed and relative humidity. Particulate matter accumulates under calm,
/// humid conditions and is flushed by wind.
pub fn air_quality_csv(hours: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let tau = std::f64::consts::TAU;
    let mut out = String::from("time,pm25 [ug/m3],DEWP [degC],TEMP [degC],PRES [hPa],WSPM [m/s],RH [%]\n");
    let start = chrono::NaiveDate::from_ymd_opt(2014, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid start");
    let (mut temp_anom, mut rh_anom, mut wind_log, mut pm) = (0.0, 0.0, 0.0, 60.0);
    for h in 0..hours {
        let day = h as f64 / 24.0;
        let hour = (h % 24) as f64;
        temp_anom = 0.95 * temp_anom + 0.6 * noise.sample(&mut rng);
        rh_anom = 0.97 * rh_anom + 1.5 * noise.sample(&mut rng);
        wind_log = 0.9 * wind_log + 0.25 * noise.sample(&mut rng);

        let temp = 12.0 - 14.0 * (tau * (day + 10.0) / 365.0).cos() + 5.0 * (tau * (hour - 9.0) / 24.0).sin() + temp_anom;
        let rh = (55.0 + 15.0 * (tau * (day - 200.0) / 365.0).cos() - 12.0 * (tau * (hour - 9.0) / 24.0).sin() + rh_anom)
            .clamp(8.0, 100.0);
        let dewp = temp - (100.0 - rh) / 5.0;
        let pres = 1016.0 - 0.45 * (temp - 12.0) + 0.8 * noise.sample(&mut rng);
        let wspm = 1.8 * wind_log.exp();
        pm = (0.92 * pm + 7.0 * rh / 60.0 - 3.5 * (wspm - 1.0) + 4.0 * noise.sample(&mut rng)).max(3.0);

        let stamp = (start + chrono::Duration::hours(h as i64)).format("%Y-%m-%d %H:%M");
        writeln!(out, "{stamp},{pm:.1},{dewp:.1},{temp:.1},{pres:.1},{wspm:.2},{rh:.1}").expect("write to string");
    }
    out
}
