use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::date_parts;
use crate::ingest::{HolidayEvent, Locale, Metadata, OilPrice, SalesRecord, StoreMeta};

const FAMILIES: [&str; 12] = [
    "GROCERY I",
    "BEVERAGES",
    "PRODUCE",
    "CLEANING",
    "DAIRY",
    "BREAD/BAKERY",
    "POULTRY",
    "MEATS",
    "PERSONAL CARE",
    "DELI",
    "EGGS",
    "FROZEN FOODS",
];
const CITIES: [(&str, &str); 6] = [
    ("Quito", "Pichincha"),
    ("Guayaquil", "Guayas"),
    ("Cuenca", "Azuay"),
    ("Ambato", "Tungurahua"),
    ("Machala", "El Oro"),
    ("Loja", "Loja"),
];
const STORE_TYPES: [&str; 5] = ["A", "B", "C", "D", "E"];

/// Parameters of the synthetic daily sales generator.
///
/// `sales = base(store, family) + weekly(t) + annual(t)
///          + promo_effect * onpromotion + noise`, clamped at 0, where
/// `base = base_level * exp(g_store + h_family + c_store_family)` with the
/// three log-offsets drawn uniformly from `[-spread, spread]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_stores: usize,
    pub n_families: usize,
    pub n_clusters: usize,
    pub start: NaiveDate,
    pub n_days: usize,
    pub base_level: f64,
    pub store_spread: f64,
    pub family_spread: f64,
    pub interaction_spread: f64,
    pub weekly_amplitude: f64,
    pub annual_amplitude: f64,
    pub promo_effect: f64,
    pub promo_probability: f64,
    pub max_promo: u32,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_stores: 6,
            n_families: 8,
            n_clusters: 3,
            start: NaiveDate::from_ymd_opt(2016, 1, 1).expect("valid date"),
            n_days: 420,
            base_level: 100.0,
            store_spread: 0.6,
            family_spread: 1.0,
            interaction_spread: 0.8,
            weekly_amplitude: 25.0,
            annual_amplitude: 15.0,
            promo_effect: 6.0,
            promo_probability: 0.2,
            max_promo: 10,
            noise_sd: 10.0,
            seed: 1,
        }
    }
}

/// The generating terms of one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub base: f64,
    pub weekly: f64,
    pub annual: f64,
    pub promo: f64,
    pub noise: f64,
}

impl Components {
    /// Sales before clamping.
    pub fn total(&self) -> f64 {
        self.base + self.weekly + self.annual + self.promo + self.noise
    }
}

/// The deterministic part of the generator, reusable past the generated
/// date range.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthModel {
    pub spec: SynthSpec,
    /// `base[store_index][family_index]`.
    pub base: Vec<Vec<f64>>,
    pub families: Vec<String>,
}

impl SynthModel {
    pub fn new(spec: &SynthSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let offset = |spread: f64, rng: &mut ChaCha8Rng| {
            if spread > 0.0 {
                rng.random_range(-spread..=spread)
            } else {
                0.0
            }
        };
        let g: Vec<f64> = (0..spec.n_stores).map(|_| offset(spec.store_spread, &mut rng)).collect();
        let h: Vec<f64> = (0..spec.n_families).map(|_| offset(spec.family_spread, &mut rng)).collect();
        let base = (0..spec.n_stores)
            .map(|s| {
                (0..spec.n_families)
                    .map(|f| {
                        let c = offset(spec.interaction_spread, &mut rng);
                        let e = g[s] + h[f] + c;
                        if e == 0.0 {
                            spec.base_level
                        } else {
                            spec.base_level * e.exp()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(SynthModel {
            spec: spec.clone(),
            base,
            families: family_names(spec.n_families),
        })
    }

    pub fn store_numbers(&self) -> impl Iterator<Item = u32> {
        1..=self.spec.n_stores as u32
    }

    pub fn family_index(&self, family: &str) -> Option<usize> {
        self.families.iter().position(|f| f == family)
    }

    /// Noise-free terms for one (date, store, family, promotion count).
    pub fn components(&self, date: NaiveDate, store_nbr: u32, family: usize, onpromotion: u32) -> Components {
        let dow = date_parts(date)[0];
        let doy = f64::from(date.ordinal0());
        Components {
            base: self.base[store_nbr as usize - 1][family],
            weekly: self.spec.weekly_amplitude * (2.0 * PI * dow / 7.0).sin(),
            annual: self.spec.annual_amplitude * (2.0 * PI * doy / 365.25).sin(),
            promo: self.spec.promo_effect * f64::from(onpromotion),
            noise: 0.0,
        }
    }

    /// Noise-free sales, clamped at 0.
    pub fn expected_sales(&self, date: NaiveDate, store_nbr: u32, family: usize, onpromotion: u32) -> f64 {
        self.components(date, store_nbr, family, onpromotion).total().max(0.0)
    }
}

fn family_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let name = FAMILIES[i % FAMILIES.len()];
            if i < FAMILIES.len() {
                name.to_string()
            } else {
                format!("{name} {}", i / FAMILIES.len() + 1)
            }
        })
        .collect()
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 {
            return Err(Error::invalid("synthetic date range is empty"));
        }
        if self.n_stores == 0 || self.n_families == 0 || self.n_clusters == 0 {
            return Err(Error::invalid("n_stores, n_families and n_clusters must be positive"));
        }
        let reals = [
            self.base_level,
            self.store_spread,
            self.family_spread,
            self.interaction_spread,
            self.weekly_amplitude,
            self.annual_amplitude,
            self.promo_effect,
            self.noise_sd,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("synthetic parameters must be finite"));
        }
        if self.noise_sd < 0.0 || self.store_spread < 0.0 || self.family_spread < 0.0 || self.interaction_spread < 0.0 {
            return Err(Error::invalid("noise_sd and spreads must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.promo_probability) {
            return Err(Error::invalid("promo_probability must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn end(&self) -> NaiveDate {
        self.start + Duration::days(self.n_days as i64 - 1)
    }
}

/// Generated tables plus the terms behind every sales row.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub sales: Vec<SalesRecord>,
    pub meta: Metadata,
    /// Row-aligned with `sales`.
    pub components: Vec<Components>,
    pub model: SynthModel,
}

/// Rows are ordered by date, then store, then family. Stores come with
/// cities, types and clusters; oil is a seeded random walk; New Year and
/// Christmas are national holidays.
pub fn generate_synthetic_sales(spec: &SynthSpec) -> Result<SynthData> {
    let model = SynthModel::new(spec)?;
    // separate stream so the base table does not depend on n_days
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;

    let mut sales = Vec::with_capacity(spec.n_days * spec.n_stores * spec.n_families);
    let mut components = Vec::with_capacity(sales.capacity());
    for d in 0..spec.n_days {
        let date = spec.start + Duration::days(d as i64);
        for store in model.store_numbers() {
            for (f, family) in model.families.iter().enumerate() {
                let promo = if spec.max_promo > 0 && rng.random_bool(spec.promo_probability) {
                    rng.random_range(1..=spec.max_promo)
                } else {
                    0
                };
                let mut c = model.components(date, store, f, promo);
                if spec.noise_sd > 0.0 {
                    c.noise = noise.sample(&mut rng);
                }
                sales.push(SalesRecord {
                    id: sales.len() as u64,
                    date,
                    store_nbr: store,
                    family: family.clone(),
                    sales: c.total().max(0.0),
                    onpromotion: promo,
                });
                components.push(c);
            }
        }
    }

    let stores = model
        .store_numbers()
        .map(|s| {
            let i = s as usize - 1;
            let (city, state) = CITIES[i % CITIES.len()];
            StoreMeta {
                store_nbr: s,
                city: city.into(),
                state: state.into(),
                store_type: STORE_TYPES[i % STORE_TYPES.len()].into(),
                cluster: (i % spec.n_clusters) as u32 + 1,
            }
        })
        .collect();
    let mut price = 60.0;
    let step = Normal::new(0.0, 0.8).expect("valid normal");
    let oil = (0..spec.n_days)
        .map(|d| {
            price = f64::max(price + step.sample(&mut rng), 10.0);
            OilPrice {
                date: spec.start + Duration::days(d as i64),
                price: Some((price * 100.0).round() / 100.0),
            }
        })
        .collect();
    let mut holidays = Vec::new();
    for year in spec.start.year()..=spec.end().year() {
        for (m, day, description) in [(1, 1, "Primer dia del ano"), (12, 25, "Navidad")] {
            let date = NaiveDate::from_ymd_opt(year, m, day).expect("valid date");
            if date >= spec.start && date <= spec.end() {
                holidays.push(HolidayEvent {
                    date,
                    kind: "Holiday".into(),
                    locale: Locale::National,
                    locale_name: "Ecuador".into(),
                    description: description.into(),
                    transferred: false,
                });
            }
        }
    }
    Ok(SynthData {
        sales,
        meta: Metadata {
            stores,
            oil,
            holidays,
        },
        components,
        model,
    })
}
