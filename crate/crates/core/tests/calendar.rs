//! Calendar decomposition checked against the `time` crate.

use proptest::prelude::*;
use time::{OffsetDateTime, Weekday};
use vnf_autoscale::features::calendar_features;

fn oracle(secs: i64) -> [f64; 6] {
    let t = OffsetDateTime::from_unix_timestamp(secs).unwrap();
    let dow = t.weekday().number_from_monday();
    let weekday = !matches!(t.weekday(), Weekday::Saturday | Weekday::Sunday);
    [
        t.day() as f64,
        dow as f64,
        if weekday { 1.0 } else { 0.0 },
        t.hour() as f64,
        t.minute() as f64,
        secs as f64,
    ]
}

#[test]
fn tuesday_afternoon() {
    // 2024-01-02 14:05:00 UTC, a Tuesday.
    let secs = 1_704_204_300;
    let ts = chrono::DateTime::from_timestamp(secs, 0).unwrap();
    let c = calendar_features(ts);
    assert_eq!(&c[1..5], &[2.0, 1.0, 14.0, 5.0]);
    assert_eq!(c, oracle(secs));
}

proptest! {
    #[test]
    fn matches_time_crate(secs in 0i64..4_102_444_800) {
        let ts = chrono::DateTime::from_timestamp(secs, 0).unwrap();
        prop_assert_eq!(calendar_features(ts), oracle(secs));
    }
}
