//! Per-tick flight log and its CSV form.
//!
//! Column set and order are fixed (see [`COLUMNS`]); every header carries a
//! unit suffix. Numbers are written with 9 significant digits.

use std::io::{Read, Write};

use crate::autopilot::{LoopId, SurfaceCommand};
use crate::error::{Error, Result};

/// One inner-loop tick.
#[derive(Clone, Debug, PartialEq)]
pub struct FlightRecord {
    pub time: f64,
    pub roll_s: f64,
    pub roll_m: f64,
    pub pitch_s: f64,
    pub pitch_m: f64,
    pub xtrack: f64,
    pub omega_s: [f64; 3],
    pub omega_m: [f64; 3],
    /// Gains of the five adaptive loops, padded to (K_p, K_i, K_d, K_ff).
    pub gains: [[f64; 4]; 5],
    pub command: SurfaceCommand,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub yaw: f64,
    pub airspeed: f64,
    pub left_aileron: f64,
    pub right_aileron: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlightLog {
    pub records: Vec<FlightRecord>,
}

const BASE_COLUMNS: [&str; 12] = [
    "time_s",
    "roll_sp_rad",
    "roll_rad",
    "pitch_sp_rad",
    "pitch_rad",
    "xtrack_m",
    "p_sp_rad_s",
    "q_sp_rad_s",
    "r_sp_rad_s",
    "p_rad_s",
    "q_rad_s",
    "r_rad_s",
];

const GAIN_SUFFIXES: [&str; 4] = ["kp_1_s", "ki_1_s2", "kd_1_s", "kff_1_s"];

const TAIL_COLUMNS: [&str; 14] = [
    "aileron_cmd_rad",
    "elevator_cmd_rad",
    "rudder_cmd_rad",
    "throttle_cmd_frac",
    "north_m",
    "east_m",
    "down_m",
    "v_north_m_s",
    "v_east_m_s",
    "v_down_m_s",
    "yaw_rad",
    "airspeed_m_s",
    "left_aileron_rad",
    "right_aileron_rad",
];

/// Header of the flight-log CSV, in order.
pub fn columns() -> Vec<String> {
    let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for id in LoopId::ALL {
        for suffix in GAIN_SUFFIXES {
            cols.push(format!("theta_{}_{}", id.name(), suffix));
        }
    }
    cols.extend(TAIL_COLUMNS.iter().map(|s| s.to_string()));
    cols
}

/// `%.9g`-style formatting; zero of either sign prints as `0`.
pub fn format_g9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}

impl FlightRecord {
    fn values(&self) -> Vec<f64> {
        let mut v = vec![
            self.time,
            self.roll_s,
            self.roll_m,
            self.pitch_s,
            self.pitch_m,
            self.xtrack,
        ];
        v.extend_from_slice(&self.omega_s);
        v.extend_from_slice(&self.omega_m);
        for row in &self.gains {
            v.extend_from_slice(row);
        }
        v.extend_from_slice(&[
            self.command.aileron,
            self.command.elevator,
            self.command.rudder,
            self.command.throttle,
        ]);
        v.extend_from_slice(&self.position);
        v.extend_from_slice(&self.velocity);
        v.extend_from_slice(&[self.yaw, self.airspeed, self.left_aileron, self.right_aileron]);
        v
    }

    fn from_values(v: &[f64]) -> Self {
        let three = |i: usize| [v[i], v[i + 1], v[i + 2]];
        let mut gains = [[0.0; 4]; 5];
        for (l, row) in gains.iter_mut().enumerate() {
            row.copy_from_slice(&v[12 + 4 * l..16 + 4 * l]);
        }
        let t = 32;
        FlightRecord {
            time: v[0],
            roll_s: v[1],
            roll_m: v[2],
            pitch_s: v[3],
            pitch_m: v[4],
            xtrack: v[5],
            omega_s: three(6),
            omega_m: three(9),
            gains,
            command: SurfaceCommand {
                aileron: v[t],
                elevator: v[t + 1],
                rudder: v[t + 2],
                throttle: v[t + 3],
            },
            position: three(t + 4),
            velocity: three(t + 7),
            yaw: v[t + 10],
            airspeed: v[t + 11],
            left_aileron: v[t + 12],
            right_aileron: v[t + 13],
        }
    }
}

impl FlightLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: FlightRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Nonempty, strictly increasing and evenly spaced in time.
    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::input("flight log is empty"));
        }
        if self.records.len() >= 2 {
            let dt = self.records[1].time - self.records[0].time;
            for (i, w) in self.records.windows(2).enumerate() {
                let step = w[1].time - w[0].time;
                if !(step > 0.0) {
                    return Err(Error::input(format!("log time not increasing at record {}", i + 1)));
                }
                if (step - dt).abs() > 1e-6 * dt.max(1.0) {
                    return Err(Error::input(format!("uneven tick spacing at record {}", i + 1)));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(columns())?;
        for rec in &self.records {
            w.write_record(rec.values().into_iter().map(format_g9))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the time column plus the 20 adaptive gain columns.
    pub fn write_gain_csv<W: Write>(&self, writer: W) -> Result<()> {
        let cols = columns();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![cols[0].clone()];
        header.extend_from_slice(&cols[12..32]);
        w.write_record(header)?;
        for rec in &self.records {
            let v = rec.values();
            let mut row = vec![format_g9(v[0])];
            row.extend(v[12..32].iter().map(|x| format_g9(*x)));
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let expected = columns();
        let header: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
        if header != expected {
            return Err(Error::input("flight log header does not match the expected column set"));
        }
        let mut log = FlightLog::new();
        for (line, row) in r.records().enumerate() {
            let row = row?;
            let values: Vec<f64> = row
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::input(format!("record {}: {e}", line + 1)))?;
            if values.len() != expected.len() {
                return Err(Error::input(format!("record {} has {} fields", line + 1, values.len())));
            }
            log.push(FlightRecord::from_values(&values));
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_unit_suffixed_and_stable() {
        let cols = columns();
        assert_eq!(cols.len(), 46);
        assert_eq!(cols[0], "time_s");
        assert_eq!(cols[12], "theta_pitch_kp_1_s");
        assert_eq!(cols[31], "theta_yaw_rate_kff_1_s");
        assert_eq!(cols[45], "right_aileron_rad");
        let units = ["_s", "_rad", "_m", "_rad_s", "_1_s", "_1_s2", "_frac", "_m_s"];
        for c in &cols {
            assert!(units.iter().any(|u| c.ends_with(u)), "{c}");
        }
    }

    #[test]
    fn g9_formatting() {
        assert_eq!(format_g9(0.0), "0");
        assert_eq!(format_g9(-0.0), "0");
        assert_eq!(format_g9(1.0), "1");
        assert_eq!(format_g9(0.004), "0.004");
        assert_eq!(format_g9(123.456), "123.456");
        assert_eq!(format_g9(-2.5), "-2.5");
        assert_eq!(format_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_g9(123456789.0), "123456789");
        assert_eq!(format_g9(1.5e9), "1.5e9");
        assert_eq!(format_g9(1.25e-7), "1.25e-7");
        assert_eq!(format_g9(0.00012345678912), "0.000123456789");
    }

    proptest! {
        #[test]
        fn g9_keeps_nine_significant_digits(v in -1e12f64..1e12) {
            let back: f64 = format_g9(v).parse().unwrap();
            prop_assert!((back - v).abs() <= 5e-9 * v.abs() + 1e-300);
        }
    }

    fn record(t: f64) -> FlightRecord {
        FlightRecord {
            time: t,
            roll_s: 0.1,
            roll_m: 0.05,
            pitch_s: 0.02,
            pitch_m: 0.01,
            xtrack: 3.0,
            omega_s: [0.1, 0.2, 0.3],
            omega_m: [0.0, -0.1, 0.2],
            gains: [[1.0, 2.0, 0.0, 0.0]; 5],
            command: SurfaceCommand {
                aileron: 0.01,
                elevator: -0.02,
                rudder: 0.0,
                throttle: 0.3,
            },
            position: [1.0, 2.0, -100.0],
            velocity: [20.0, 0.0, 0.5],
            yaw: 0.0,
            airspeed: 20.0,
            left_aileron: 0.01,
            right_aileron: -0.01,
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut log = FlightLog::new();
        for k in 0..5 {
            log.push(record(k as f64 * 0.004));
        }
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = FlightLog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn validation() {
        assert!(FlightLog::new().validate().is_err());
        let mut log = FlightLog::new();
        log.push(record(0.0));
        log.push(record(0.004));
        log.push(record(0.004));
        assert!(log.validate().is_err());
        let mut log = FlightLog::new();
        log.push(record(0.0));
        log.push(record(0.004));
        log.push(record(0.012));
        assert!(log.validate().is_err());
    }

    #[test]
    fn rejects_foreign_header() {
        let text = "a,b\n1,2\n";
        assert!(FlightLog::read_csv(text.as_bytes()).is_err());
    }
}
