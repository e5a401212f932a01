//! Physiological recordings as `t,ecg,resp,trigger` CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dsp::TimeSeries;
use crate::error::{Error, Result};

/// Maximum deviation of any timestamp step from the nominal step, seconds.
const TIMESTAMP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysioRecord {
    pub sample_rate: f64,
    pub ecg: TimeSeries,
    pub resp: TimeSeries,
    /// Event code per sample, 0 where nothing happened.
    pub trigger: Vec<u32>,
}

impl PhysioRecord {
    pub fn new(ecg: TimeSeries, resp: TimeSeries, trigger: Vec<u32>) -> Result<Self> {
        if ecg.sample_rate() != resp.sample_rate() {
            return Err(Error::invalid("ECG and respiration sample rates differ"));
        }
        if ecg.len() != resp.len() || ecg.len() != trigger.len() {
            return Err(Error::invalid(format!(
                "channel lengths differ: ecg {}, resp {}, trigger {}",
                ecg.len(),
                resp.len(),
                trigger.len()
            )));
        }
        Ok(Self {
            sample_rate: ecg.sample_rate(),
            ecg,
            resp,
            trigger,
        })
    }

    pub fn len(&self) -> usize {
        self.trigger.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trigger.is_empty()
    }
}

pub fn load_physio_csv(path: &Path) -> Result<PhysioRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: String| Error::format(path, format!("line {line}: {msg}"));

    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::format(path, "empty file"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let index_of = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::format(path, format!("missing column `{name}`")))
    };
    let (ti, ei, ri, gi) = (index_of("t")?, index_of("ecg")?, index_of("resp")?, index_of("trigger")?);

    let (mut t, mut ecg, mut resp, mut trigger) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(bad(i + 1, format!("expected {} cells, got {}", columns.len(), cells.len())));
        }
        let num = |k: usize| -> Result<f64> {
            cells[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(i + 1, format!("non-numeric cell {:?}", cells[k])))
        };
        t.push(num(ti)?);
        ecg.push(num(ei)?);
        resp.push(num(ri)?);
        let code = num(gi)?;
        if code < 0.0 || code.fract() != 0.0 || code > f64::from(u32::MAX) {
            return Err(bad(i + 1, format!("trigger {code} is not a non-negative integer")));
        }
        trigger.push(code as u32);
    }
    if t.len() < 2 {
        return Err(Error::format(path, "need at least two samples to infer the sample rate"));
    }
    let step = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::format(path, "timestamps are not increasing"));
    }
    if let Some(k) = t.windows(2).position(|w| ((w[1] - w[0]) - step).abs() > TIMESTAMP_TOLERANCE) {
        return Err(Error::format(
            path,
            format!(
                "non-uniform timestamps between rows {} and {} (step {} s, expected {step} s)",
                k + 2,
                k + 3,
                t[k + 1] - t[k]
            ),
        ));
    }
    let fs = 1.0 / step;
    PhysioRecord::new(TimeSeries::new(ecg, fs)?, TimeSeries::new(resp, fs)?, trigger)
}

/// Writes the record with `t = i / sample_rate` and shortest round-trip numbers.
pub fn write_physio_csv(path: &Path, record: &PhysioRecord) -> Result<()> {
    let mut out = String::with_capacity(record.len() * 32 + 32);
    out.push_str("t,ecg,resp,trigger\n");
    for i in 0..record.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i as f64 / record.sample_rate,
            record.ecg.samples()[i],
            record.resp.samples()[i],
            record.trigger[i]
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("physio.csv");
        fs::write(&path, text).unwrap();
        (dir, path)
    }

    fn rows(n: usize, fs: f64, skip: Option<usize>) -> String {
        let mut s = String::from("t,ecg,resp,trigger\n");
        for i in (0..n).filter(|i| Some(*i) != skip) {
            s.push_str(&format!("{},0,0,0\n", i as f64 / fs));
        }
        s
    }

    #[test]
    fn infers_128_hz() {
        let (_d, p) = write(&rows(128, 128.0, None));
        let r = load_physio_csv(&p).unwrap();
        assert_eq!(r.sample_rate, 128.0);
        assert_eq!(r.len(), 128);
        assert!(r.ecg.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn skipped_sample_is_an_error() {
        let (_d, p) = write(&rows(128, 128.0, Some(40)));
        assert!(load_physio_csv(&p).unwrap_err().to_string().contains("non-uniform"));
    }

    #[test]
    fn column_and_cell_errors() {
        let (_d, p) = write("t,ecg,resp\n0,0,0\n1,0,0\n");
        assert!(load_physio_csv(&p).is_err());
        let (_d, p) = write("t,ecg,resp,trigger\n0,0,x,0\n1,0,0,0\n");
        assert!(load_physio_csv(&p).is_err());
        let (_d, p) = write("t,ecg,resp,trigger\n0,0,0,1.5\n1,0,0,0\n");
        assert!(load_physio_csv(&p).is_err());
    }

    #[test]
    fn write_then_load() {
        let fs_hz = 128.0;
        let ecg = TimeSeries::new((0..256).map(|i| (i as f64 * 0.1).sin()).collect(), fs_hz).unwrap();
        let resp = TimeSeries::new((0..256).map(|i| i as f64 / 7.0).collect(), fs_hz).unwrap();
        let mut trigger = vec![0; 256];
        trigger[10] = 3;
        let rec = PhysioRecord::new(ecg, resp, trigger).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_physio_csv(&path, &rec).unwrap();
        assert_eq!(load_physio_csv(&path).unwrap(), rec);
    }
}
