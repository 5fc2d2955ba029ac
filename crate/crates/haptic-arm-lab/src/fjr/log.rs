use nalgebra::DVector;
use std::io::Write;

use crate::Result;

/// One logged instant of a simulation run.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub theta: DVector<f64>,
    pub thetadot: DVector<f64>,
    pub tau_m: DVector<f64>,
    pub tau_j: DVector<f64>,
    pub tau_ext: DVector<f64>,
    pub e_stored: f64,
    pub e_in: f64,
    pub e_diss: f64,
}

/// Time series of a simulation run plus the gravity reference it was
/// recorded with.
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    dof: usize,
    pub u_ref: f64,
    pub samples: Vec<TrajectorySample>,
}

impl TrajectoryLog {
    pub fn new(dof: usize, u_ref: f64) -> Self {
        TrajectoryLog {
            dof,
            u_ref,
            samples: Vec::new(),
        }
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn push(&mut self, sample: TrajectorySample) {
        debug_assert_eq!(sample.q.len(), self.dof);
        self.samples.push(sample);
    }

    /// CSV header: `t,q*,qdot*,theta*,thetadot*,tau_m*,tau_j*,tau_ext*,
    /// E_stored,E_in,E_diss`, starred groups repeated per joint (1-based).
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for group in ["q", "qdot", "theta", "thetadot", "tau_m", "tau_j", "tau_ext"] {
            for j in 1..=self.dof {
                h.push(format!("{group}{j}"));
            }
        }
        h.extend(["E_stored".into(), "E_in".into(), "E_diss".into()]);
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.csv_header())?;
        for s in &self.samples {
            let mut row = vec![fmt(s.t)];
            for v in [
                &s.q, &s.qdot, &s.theta, &s.thetadot, &s.tau_m, &s.tau_j, &s.tau_ext,
            ] {
                row.extend(v.iter().map(|x| fmt(*x)));
            }
            row.push(fmt(s.e_stored));
            row.push(fmt(s.e_in));
            row.push(fmt(s.e_diss));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| crate::Error::Io {
            path: "<csv writer>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Shortest round-trip float formatting; keeps logs bit-reproducible.
pub fn fmt(x: f64) -> String {
    let mut buf = format!("{x}");
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}
