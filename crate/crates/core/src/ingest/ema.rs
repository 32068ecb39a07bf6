use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::types::{DayClock, EmaItem, EmaResponse};

/// Mean score per item over the responses given on `date`. Items without a
/// response that day are absent.
pub fn daily_ema_average(
    responses: &[EmaResponse],
    date: NaiveDate,
    clock: &DayClock,
) -> BTreeMap<EmaItem, f64> {
    let mut sums: BTreeMap<EmaItem, (f64, usize)> = BTreeMap::new();
    for r in responses.iter().filter(|r| clock.date_of(r.timestamp) == date) {
        let e = sums.entry(r.item).or_default();
        e.0 += f64::from(r.score);
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(item, (sum, n))| (item, sum / n as f64))
        .collect()
}

/// Daily averages for every day with at least one response.
pub fn daily_ema_table(
    responses: &[EmaResponse],
    clock: &DayClock,
) -> BTreeMap<NaiveDate, BTreeMap<EmaItem, f64>> {
    let mut sums: BTreeMap<NaiveDate, BTreeMap<EmaItem, (f64, usize)>> = BTreeMap::new();
    for r in responses {
        let e = sums
            .entry(clock.date_of(r.timestamp))
            .or_default()
            .entry(r.item)
            .or_default();
        e.0 += f64::from(r.score);
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(date, items)| {
            let means = items
                .into_iter()
                .map(|(item, (sum, n))| (item, sum / n as f64))
                .collect();
            (date, means)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(clock: &DayClock, date: NaiveDate, hour: i64, item: EmaItem, score: u8) -> EmaResponse {
        EmaResponse {
            timestamp: clock.day_start(date) + hour * 3600,
            item,
            score,
        }
    }

    #[test]
    fn examples() {
        let clock = DayClock::new(-5 * 3600);
        let d = NaiveDate::from_ymd_opt(2022, 11, 2).unwrap();
        let responses = vec![
            at(&clock, d, 8, EmaItem::Stress, 4),
            at(&clock, d, 21, EmaItem::Stress, 6),
            at(&clock, d, 21, EmaItem::Mood, 3),
            at(&clock, d.succ_opt().unwrap(), 8, EmaItem::Mood, 7),
        ];
        let avg = daily_ema_average(&responses, d, &clock);
        assert_eq!(avg.get(&EmaItem::Stress), Some(&5.0));
        assert_eq!(avg.get(&EmaItem::Mood), Some(&3.0));
        assert_eq!(avg.len(), 2);
        assert!(daily_ema_average(&responses, d.pred_opt().unwrap(), &clock).is_empty());
        let table = daily_ema_table(&responses, &clock);
        assert_eq!(table.len(), 2);
        assert_eq!(table[&d], avg);
    }
}
