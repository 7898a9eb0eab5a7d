use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use super::records::{HolidayEvent, Locale, OilPrice, RawSalesRecord, RawTable, StoreMeta};
use crate::error::{Error, Result};

pub const SALES_HEADER: &[&str] = &["id", "date", "store_nbr", "family", "sales", "onpromotion"];
pub const STORES_HEADER: &[&str] = &["store_nbr", "city", "state", "type", "cluster"];
pub const OIL_HEADER: &[&str] = &["date", "dcoilwtico"];
pub const HOLIDAYS_HEADER: &[&str] = &[
    "date",
    "type",
    "locale",
    "locale_name",
    "description",
    "transferred",
];

const DATE_FORMAT: &str = "%Y-%m-%d";

/// One data row with enough context to produce located schema errors.
struct Row<'a> {
    path: &'a Path,
    line: u64,
    header: &'static [&'static str],
    record: csv::StringRecord,
}

impl Row<'_> {
    fn err(&self, col: usize, message: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path.to_path_buf(),
            line: self.line,
            column: self.header[col].to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, col: usize) -> Result<&str> {
        self.record
            .get(col)
            .ok_or_else(|| self.err(col, "missing field"))
    }

    /// Cell text, or `None` for empty/`NA`.
    fn optional(&self, col: usize) -> Result<Option<&str>> {
        let s = self.raw(col)?.trim();
        Ok(if s.is_empty() || s == "NA" {
            None
        } else {
            Some(s)
        })
    }

    fn required(&self, col: usize) -> Result<&str> {
        self.optional(col)?
            .ok_or_else(|| self.err(col, "required value is missing"))
    }

    fn parse<T: FromStr>(&self, col: usize, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.err(col, format!("cannot parse `{s}`")))
    }

    fn date(&self, col: usize) -> Result<NaiveDate> {
        let s = self.required(col)?;
        NaiveDate::parse_from_str(s, DATE_FORMAT)
            .map_err(|_| self.err(col, format!("`{s}` is not a YYYY-MM-DD date")))
    }

    fn non_negative(&self, col: usize, s: &str) -> Result<f64> {
        let v: f64 = self.parse(col, s)?;
        if !v.is_finite() || v < 0.0 {
            return Err(self.err(col, format!("`{s}` must be a finite non-negative number")));
        }
        Ok(v)
    }
}

fn read_rows<F>(path: &Path, header: &'static [&'static str], mut each: F) -> Result<()>
where
    F: FnMut(Row<'_>) -> Result<()>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let found = reader.headers()?.clone();
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    for result in reader.records() {
        let record = result?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line,
                column: "*".into(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        each(Row {
            path,
            line,
            header,
            record,
        })?;
    }
    Ok(())
}

pub fn load_sales_csv(path: &Path) -> Result<RawTable> {
    let mut records = Vec::new();
    read_rows(path, SALES_HEADER, |row| {
        let id = row.parse(0, row.required(0)?)?;
        let date = row.date(1)?;
        let store_nbr = row.parse(2, row.required(2)?)?;
        let family = row.optional(3)?.map(str::to_string);
        let sales = row
            .optional(4)?
            .map(|s| row.non_negative(4, s))
            .transpose()?;
        let onpromotion = row.optional(5)?.map(|s| row.parse(5, s)).transpose()?;
        records.push(RawSalesRecord {
            id,
            date,
            store_nbr,
            family,
            sales,
            onpromotion,
        });
        Ok(())
    })?;
    Ok(RawTable {
        records,
        source: Some(path.to_path_buf()),
    })
}

pub fn load_store_metadata(path: &Path) -> Result<Vec<StoreMeta>> {
    let mut stores = Vec::new();
    let mut seen = HashSet::new();
    read_rows(path, STORES_HEADER, |row| {
        let store_nbr: u32 = row.parse(0, row.required(0)?)?;
        if !seen.insert(store_nbr) {
            return Err(row.err(0, format!("duplicate store_nbr {store_nbr}")));
        }
        let cluster: u32 = row.parse(4, row.required(4)?)?;
        if cluster < 1 {
            return Err(row.err(4, "cluster must be >= 1"));
        }
        stores.push(StoreMeta {
            store_nbr,
            city: row.required(1)?.to_string(),
            state: row.required(2)?.to_string(),
            store_type: row.required(3)?.to_string(),
            cluster,
        });
        Ok(())
    })?;
    Ok(stores)
}

pub fn load_oil_prices(path: &Path) -> Result<Vec<OilPrice>> {
    let mut prices = Vec::new();
    let mut seen = HashSet::new();
    read_rows(path, OIL_HEADER, |row| {
        let date = row.date(0)?;
        if !seen.insert(date) {
            return Err(row.err(0, format!("duplicate date {date}")));
        }
        let price = row
            .optional(1)?
            .map(|s| row.non_negative(1, s))
            .transpose()?;
        prices.push(OilPrice { date, price });
        Ok(())
    })?;
    Ok(prices)
}

pub fn load_holidays(path: &Path) -> Result<Vec<HolidayEvent>> {
    let mut events = Vec::new();
    read_rows(path, HOLIDAYS_HEADER, |row| {
        let locale: Locale = row
            .required(2)?
            .parse()
            .map_err(|e: String| row.err(2, e))?;
        let transferred = match row.required(5)?.to_ascii_lowercase().as_str() {
            "true" => true,
            "false" => false,
            other => return Err(row.err(5, format!("`{other}` is not a boolean"))),
        };
        events.push(HolidayEvent {
            date: row.date(0)?,
            kind: row.required(1)?.to_string(),
            locale,
            locale_name: row.required(3)?.to_string(),
            description: row.raw(4)?.trim().to_string(),
            transferred,
        });
        Ok(())
    })?;
    Ok(events)
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, ToString::to_string)
}

pub fn write_sales_csv(table: &RawTable, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SALES_HEADER)?;
    for r in &table.records {
        w.write_record([
            r.id.to_string(),
            r.date.format(DATE_FORMAT).to_string(),
            r.store_nbr.to_string(),
            opt(&r.family),
            opt(&r.sales),
            opt(&r.onpromotion),
        ])?;
    }
    finish(w, path)
}

pub fn write_store_metadata(stores: &[StoreMeta], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(STORES_HEADER)?;
    for s in stores {
        w.write_record([
            s.store_nbr.to_string(),
            s.city.clone(),
            s.state.clone(),
            s.store_type.clone(),
            s.cluster.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_oil_prices(oil: &[OilPrice], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(OIL_HEADER)?;
    for o in oil {
        w.write_record([o.date.format(DATE_FORMAT).to_string(), opt(&o.price)])?;
    }
    finish(w, path)
}

pub fn write_holidays(events: &[HolidayEvent], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(HOLIDAYS_HEADER)?;
    for h in events {
        w.write_record([
            h.date.format(DATE_FORMAT).to_string(),
            h.kind.clone(),
            h.locale.as_str().to_string(),
            h.locale_name.clone(),
            h.description.clone(),
            if h.transferred { "True" } else { "False" }.to_string(),
        ])?;
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn parses_three_rows_with_fractional_sales() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "train.csv",
            "id,date,store_nbr,family,sales,onpromotion\n\
             0,2013-01-01,1,AUTOMOTIVE,0,0\n\
             1,2013-01-01,1,DAIRY,1.5,2\n\
             2,2013-01-02,1,DAIRY,,NA\n",
        );
        let t = load_sales_csv(&p).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.records[1].sales, Some(1.5));
        assert_eq!(t.records[1].onpromotion, Some(2));
        assert_eq!(t.records[2].sales, None);
        assert_eq!(t.records[2].onpromotion, None);
    }

    #[test]
    fn non_numeric_store_reports_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "train.csv",
            "id,date,store_nbr,family,sales,onpromotion\n\
             0,2013-01-01,1,A,0,0\n\
             1,2013-01-01,x,A,0,0\n",
        );
        match load_sales_csv(&p).unwrap_err() {
            Error::Schema { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "store_nbr");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_negative_sales_and_bad_dates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "a.csv",
            "id,date,store_nbr,family,sales,onpromotion\n0,2013-01-01,1,A,-1,0\n",
        );
        assert!(matches!(load_sales_csv(&p), Err(Error::Schema { .. })));
        let p = write_tmp(
            &dir,
            "b.csv",
            "id,date,store_nbr,family,sales,onpromotion\n0,2013-13-01,1,A,1,0\n",
        );
        assert!(matches!(load_sales_csv(&p), Err(Error::Schema { .. })));
    }

    #[test]
    fn header_must_match_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "oil.csv", "date,price\n2013-01-01,93.1\n");
        assert!(matches!(load_oil_prices(&p), Err(Error::Header { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_sales_csv(Path::new("/nonexistent/train.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.is_input_error());
    }

    #[test]
    fn stores_oil_holidays() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("store_nbr,city,state,type,cluster\n");
        for s in 1..=54 {
            body.push_str(&format!("{s},Quito,Pichincha,D,{}\n", s % 17 + 1));
        }
        let stores = load_store_metadata(&write_tmp(&dir, "stores.csv", &body)).unwrap();
        assert_eq!(stores.len(), 54);

        let dup = "store_nbr,city,state,type,cluster\n1,Quito,Pichincha,D,13\n1,Quito,Pichincha,D,13\n";
        assert!(matches!(
            load_store_metadata(&write_tmp(&dir, "dup.csv", dup)),
            Err(Error::Schema { .. })
        ));

        let oil = load_oil_prices(&write_tmp(
            &dir,
            "oil.csv",
            "date,dcoilwtico\n2013-01-01,\n2013-01-02,93.14\n",
        ))
        .unwrap();
        assert_eq!(oil[0].price, None);
        assert_eq!(oil[1].price, Some(93.14));

        let hol = load_holidays(&write_tmp(
            &dir,
            "holidays_events.csv",
            "date,type,locale,locale_name,description,transferred\n\
             2012-03-02,Holiday,Local,Manta,Fundacion de Manta,False\n\
             2012-08-10,Holiday,National,Ecuador,Primer Grito de Independencia,True\n",
        ))
        .unwrap();
        assert_eq!(hol[0].locale, Locale::Local);
        assert!(hol[1].transferred);

        let bad = "date,type,locale,locale_name,description,transferred\n2012-03-02,Holiday,Galactic,X,Y,False\n";
        assert!(load_holidays(&write_tmp(&dir, "bad.csv", bad)).is_err());
    }
}
