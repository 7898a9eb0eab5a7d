//! Loading and cleaning of the four retail CSV inputs.
//!
//! Files follow the public Favorita layout:
//!
//! | file                 | header                                                   |
//! |----------------------|----------------------------------------------------------|
//! | `train.csv`          | `id,date,store_nbr,family,sales,onpromotion`             |
//! | `stores.csv`         | `store_nbr,city,state,type,cluster`                      |
//! | `oil.csv`            | `date,dcoilwtico`                                        |
//! | `holidays_events.csv`| `date,type,locale,locale_name,description,transferred`   |
//!
//! Empty cells and the literal `NA` both denote a missing value.

mod clean;
mod load;
mod records;

pub use clean::{drop_duplicates, impute_missing, CategoricalStrategy, NumericStrategy};
pub use load::{
    load_holidays, load_oil_prices, load_sales_csv, load_store_metadata, write_holidays,
    write_oil_prices, write_sales_csv, write_store_metadata, HOLIDAYS_HEADER, OIL_HEADER,
    SALES_HEADER, STORES_HEADER,
};
pub use records::{
    HolidayEvent, Locale, Metadata, OilPrice, RawSalesRecord, RawTable, SalesRecord, StoreMeta,
};
