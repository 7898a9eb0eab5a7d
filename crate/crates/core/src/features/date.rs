use chrono::{Datelike, NaiveDate};

use crate::error::Result;
use crate::matrix::DesignMatrix;
use crate::scalar::Scalar;

pub const DATE_FEATURES: [&str; 4] = ["day_of_week", "month", "year", "day_of_month"];

/// `[day_of_week (Monday = 0), month, year, day_of_month]`.
pub fn date_parts(date: NaiveDate) -> [f64; 4] {
    [
        f64::from(date.weekday().num_days_from_monday()),
        f64::from(date.month()),
        f64::from(date.year()),
        f64::from(date.day()),
    ]
}

/// One row of calendar features per date.
pub fn extract_date_features<T: Scalar>(dates: &[NaiveDate]) -> Result<DesignMatrix<T>> {
    let values = dates
        .iter()
        .flat_map(|&d| date_parts(d).map(T::from_f64_lossy))
        .collect();
    DesignMatrix::new(
        values,
        dates.len(),
        DATE_FEATURES.iter().map(|s| s.to_string()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    /// Zeller-style weekday oracle (Sakamoto's method), 0 = Sunday.
    fn sakamoto(y: i32, m: u32, day: u32) -> u32 {
        const T: [i32; 12] = [0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4];
        let y = if m < 3 { y - 1 } else { y };
        ((y + y / 4 - y / 100 + y / 400 + T[(m - 1) as usize] + day as i32) % 7) as u32
    }

    #[test]
    fn known_dates() {
        let m: DesignMatrix<f64> = extract_date_features(&[d(2017, 8, 15), d(2017, 1, 1)]).unwrap();
        assert_eq!(m.row(0), &[1.0, 8.0, 2017.0, 15.0]);
        assert_eq!(m.get(1, 0), 6.0);
        assert_eq!(m.get(1, 1), 1.0);
        // oracle agrees: Tuesday and Sunday
        assert_eq!(sakamoto(2017, 8, 15), 2);
        assert_eq!(sakamoto(2017, 1, 1), 0);
    }

    #[test]
    fn weekday_matches_independent_oracle() {
        let mut date = d(2012, 1, 1);
        while date < d(2018, 1, 1) {
            let ours = date_parts(date)[0] as u32;
            let oracle = (sakamoto(date.year(), date.month(), date.day()) + 6) % 7;
            assert_eq!(ours, oracle, "{date}");
            date = date.succ_opt().unwrap();
        }
    }

    #[test]
    fn equal_dates_equal_rows() {
        let m: DesignMatrix<f32> = extract_date_features(&[d(2016, 4, 16), d(2016, 4, 16)]).unwrap();
        assert_eq!(m.row(0), m.row(1));
    }
}
