use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDateTime};

use crate::calendar::{format_timestamp, parse_timestamp};
use crate::error::{Error, Result};

/// Timestamped power series in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadCurve {
    pub start: NaiveDateTime,
    pub step_minutes: u32,
    pub values: Vec<f64>,
}

impl LoadCurve {
    pub fn new(start: NaiveDateTime, step_minutes: u32, values: Vec<f64>) -> Result<Self> {
        if step_minutes == 0 {
            return Err(Error::validation("load curve step must be >= 1 minute"));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::validation("load curve values must be finite and >= 0"));
        }
        Ok(LoadCurve { start, step_minutes, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + Duration::minutes(i as i64 * i64::from(self.step_minutes))
    }

    pub fn end(&self) -> NaiveDateTime {
        self.timestamp(self.values.len())
    }

    /// Block means at a coarser step that must be a multiple of the current one.
    /// A trailing partial block is dropped.
    pub fn resample(&self, step_minutes: u32) -> Result<LoadCurve> {
        if step_minutes == 0 || step_minutes % self.step_minutes != 0 {
            return Err(Error::validation(format!(
                "cannot resample a {}-min curve to {step_minutes} min",
                self.step_minutes
            )));
        }
        let k = (step_minutes / self.step_minutes) as usize;
        let values = self.values.chunks_exact(k).map(|c| c.iter().sum::<f64>() / k as f64).collect();
        Ok(LoadCurve { start: self.start, step_minutes, values })
    }

    pub fn energy_wh(&self) -> f64 {
        self.values.iter().sum::<f64>() * f64::from(self.step_minutes) / 60.0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "watts"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format_timestamp(self.timestamp(i)), format!("{v:.3}")])?;
        }
        w.flush().map_err(|e| Error::Io { path: "<load curve>".into(), source: e })?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| e.in_file(path))
    }

    /// Reads `timestamp, watts`; the step comes from the first two rows and
    /// every row must follow it.
    pub fn read_csv<R: Read>(input: R) -> Result<LoadCurve> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut stamps = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i as u64 + 2;
            let schema = |message: String| Error::Schema { row, message };
            let ts = parse_timestamp(rec.get(0).unwrap_or("")).map_err(|e| schema(e.to_string()))?;
            let v: f64 = rec
                .get(1)
                .unwrap_or("")
                .parse()
                .map_err(|_| schema(format!("bad watts `{}`", rec.get(1).unwrap_or(""))))?;
            stamps.push((ts, row));
            values.push(v);
        }
        let (start, _) = *stamps.first().ok_or(Error::EmptyInput)?;
        let step = if stamps.len() > 1 { (stamps[1].0 - start).num_minutes() } else { 1 };
        if step <= 0 {
            return Err(Error::Schema { row: 3, message: "timestamps must increase".into() });
        }
        for (i, &(ts, row)) in stamps.iter().enumerate() {
            if ts != start + Duration::minutes(step * i as i64) {
                return Err(Error::Schema { row, message: format!("expected a {step}-minute step") });
            }
        }
        LoadCurve::new(start, step as u32, values)
    }

    pub fn load(path: &Path) -> Result<LoadCurve> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f).map_err(|e| e.in_file(path))
    }
}

/// Per-step arithmetic mean across dwellings.
pub fn aggregate_load(curves: &[LoadCurve]) -> Result<LoadCurve> {
    let first = curves.first().ok_or(Error::EmptyInput)?;
    for c in &curves[1..] {
        if c.start != first.start || c.step_minutes != first.step_minutes || c.len() != first.len() {
            return Err(Error::Misaligned(format!(
                "{} x {} min from {} vs {} x {} min from {}",
                c.len(),
                c.step_minutes,
                format_timestamp(c.start),
                first.len(),
                first.step_minutes,
                format_timestamp(first.start)
            )));
        }
    }
    let n = curves.len() as f64;
    let values = (0..first.len()).map(|i| curves.iter().map(|c| c.values[i]).sum::<f64>() / n).collect();
    Ok(LoadCurve { start: first.start, step_minutes: first.step_minutes, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t0() -> NaiveDateTime {
        parse_timestamp("2024-01-01T00:00").unwrap()
    }

    #[test]
    fn aggregate_cases() {
        let a = LoadCurve::new(t0(), 1, vec![100.0; 5]).unwrap();
        let b = LoadCurve::new(t0(), 1, vec![300.0; 5]).unwrap();
        assert_eq!(aggregate_load(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(aggregate_load(&[a.clone(), b]).unwrap().values, vec![200.0; 5]);
        let short = LoadCurve::new(t0(), 1, vec![1.0; 4]).unwrap();
        assert!(matches!(aggregate_load(&[a, short]), Err(Error::Misaligned(_))));
    }

    #[test]
    fn csv_round_trip_and_resample() {
        let c = LoadCurve::new(t0(), 1, (0..120).map(f64::from).collect()).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = LoadCurve::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, c);
        let r = c.resample(30).unwrap();
        assert_eq!(r.values, vec![14.5, 44.5, 74.5, 104.5]);
        assert!((r.energy_wh() - c.energy_wh()).abs() < 1e-9);
    }
}
