//! CSV time series of [`SimRecord`]s.
//!
//! Header is fixed; numbers carry 9 significant digits. Units: seconds,
//! radians, radians per second, N·m and metres.

use std::io::{Read, Write};

use crate::brake::Wheel;
use crate::error::{Error, Result};
use crate::sim::SimRecord;

pub const CSV_HEADER: [&str; 13] = [
    "t",
    "beta",
    "r",
    "beta_ref",
    "r_ref",
    "delta_f_cmd",
    "M_cmd",
    "delta_f_driver",
    "wheel",
    "T_brake",
    "X",
    "Y",
    "psi",
];

/// Formats `v` with 9 significant digits, like C's `%.9g`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

pub fn write_records<W: Write>(out: W, records: &[SimRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let numbers = [r.t, r.beta, r.r, r.beta_ref, r.r_ref, r.delta_f_cmd, r.m_cmd, r.delta_f_driver];
        let mut row: Vec<String> = numbers.iter().map(|&v| format_sig9(v)).collect();
        row.push(r.wheel.to_string());
        row.extend([r.t_brake, r.x, r.y, r.psi].iter().map(|&v| format_sig9(v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<SimRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidArgument("unexpected CSV header".into()));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad number {:?} in column {}", &row[i], CSV_HEADER[i])))
        };
        records.push(SimRecord {
            t: num(0)?,
            beta: num(1)?,
            r: num(2)?,
            beta_ref: num(3)?,
            r_ref: num(4)?,
            delta_f_cmd: num(5)?,
            m_cmd: num(6)?,
            delta_f_driver: num(7)?,
            wheel: row[8].parse::<Wheel>()?,
            t_brake: num(9)?,
            x: num(10)?,
            y: num(11)?,
            psi: num(12)?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.001), "0.001");
        assert_eq!(format_sig9(-6.245268735806), "-6.24526874");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1.23456789e9");
        assert_eq!(format_sig9(4.71698113207547e-4), "0.000471698113");
        assert_eq!(format_sig9(1.5e-7), "1.5e-7");
        assert_eq!(format_sig9(9.9999999999), "10");
    }

    fn record(v: [f64; 12], wheel: Wheel) -> SimRecord {
        SimRecord {
            t: v[0],
            beta: v[1],
            r: v[2],
            beta_ref: v[3],
            r_ref: v[4],
            delta_f_cmd: v[5],
            m_cmd: v[6],
            delta_f_driver: v[7],
            wheel,
            t_brake: v[8],
            x: v[9],
            y: v[10],
            psi: v[11],
        }
    }

    #[test]
    fn header_is_fixed() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,beta,r,beta_ref,r_ref,delta_f_cmd,M_cmd,delta_f_driver,wheel,T_brake,X,Y,psi\n"
        );
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_to_nine_digits(
            v in proptest::array::uniform12(prop_oneof![-1e6f64..1e6, -1e-3f64..1e-3, Just(0.0)]),
            w in 0usize..5,
        ) {
            let wheel = [Wheel::FrontLeft, Wheel::FrontRight, Wheel::RearLeft, Wheel::RearRight, Wheel::None][w];
            let rec = record(v, wheel);
            let mut buf = Vec::new();
            write_records(&mut buf, &[rec]).unwrap();
            let back = read_records(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 1);
            let b = back[0];
            prop_assert_eq!(b.wheel, wheel);
            let got = [b.t, b.beta, b.r, b.beta_ref, b.r_ref, b.delta_f_cmd, b.m_cmd, b.delta_f_driver, b.t_brake, b.x, b.y, b.psi];
            for (g, o) in got.iter().zip(v.iter()) {
                prop_assert!((g - o).abs() <= 5e-9 * o.abs(), "{} vs {}", g, o);
            }
        }
    }
}
