//! Per-run epoch logs and their versioned CSV form.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub const RUNLOG_VERSION: u32 = 1;

pub const RUNLOG_COLUMNS: [&str; 13] = [
    "epoch",
    "eta_batch0",
    "psi",
    "u",
    "cooldown_left",
    "consecutive_over",
    "z",
    "epsilon",
    "delta",
    "train_loss",
    "val_loss",
    "val_acc",
    "test_acc",
];

/// Controller-side quantities; absent for baseline schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlRow {
    pub psi: f64,
    pub u: f64,
    pub cooldown_left: usize,
    pub consecutive_over: usize,
    pub z: f64,
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub eta_batch0: f64,
    pub control: Option<ControlRow>,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    /// Elapsed seconds since the run started; kept out of the CSV.
    #[serde(skip)]
    pub wall_seconds: f64,
    /// Every emitted rate of the epoch; kept out of the CSV.
    #[serde(skip)]
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    /// Schedule tag, suffixed with the distance for controller runs (`cg_alr-top`).
    pub method: String,
    pub schedule: String,
    pub distance: Option<String>,
    pub seed: u64,
    pub eta_star: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub meta: RunMeta,
    pub rows: Vec<EpochRow>,
}

impl RunLog {
    pub fn file_stem(&self) -> String {
        format!("{}_eta{}_seed{}", self.meta.method, self.meta.eta_star, self.meta.seed)
    }

    pub fn final_train_loss(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.train_loss)
    }

    /// First epoch reaching the maximum validation accuracy.
    pub fn best_row(&self) -> Option<&EpochRow> {
        self.rows.iter().fold(None, |best: Option<&EpochRow>, r| match best {
            Some(b) if b.val_acc >= r.val_acc => Some(b),
            _ => Some(r),
        })
    }

    pub fn max_val_acc(&self) -> f64 {
        self.best_row().map_or(f64::NAN, |r| r.val_acc)
    }

    /// Test accuracy at the epoch with the highest validation accuracy.
    pub fn test_acc_at_best(&self) -> f64 {
        self.best_row().map_or(f64::NAN, |r| r.test_acc)
    }

    pub fn time_to_best(&self) -> f64 {
        self.best_row().map_or(f64::NAN, |r| r.wall_seconds)
    }

    /// Every logged number and every emitted rate is finite.
    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| {
            let base = [r.eta_batch0, r.train_loss, r.val_loss, r.val_acc, r.test_acc];
            let ctl = r.control.map_or([0.0; 4], |c| [c.psi, c.u, c.z, c.epsilon]);
            let delta = r.control.map_or(0.0, |c| c.delta);
            base.iter().chain(&ctl).chain(&[delta]).chain(&r.rates).all(|v| v.is_finite())
        })
    }

    /// Two comment lines (format version, metadata), a header, then one row per epoch.
    /// Controller columns are blank for baseline runs.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = &self.meta;
        writeln!(out, "# cgalr-runlog v{RUNLOG_VERSION}")?;
        writeln!(
            out,
            "# method={} schedule={} distance={} seed={} eta_star={} config_hash={}",
            m.method,
            m.schedule,
            m.distance.as_deref().unwrap_or(""),
            m.seed,
            m.eta_star,
            m.config_hash
        )?;
        writeln!(out, "{}", RUNLOG_COLUMNS.join(","))?;
        for r in &self.rows {
            let ctl = match r.control {
                Some(c) => format!(
                    "{},{},{},{},{},{},{}",
                    c.psi, c.u, c.cooldown_left, c.consecutive_over, c.z, c.epsilon, c.delta
                ),
                None => ",,,,,,".to_string(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.epoch, r.eta_batch0, ctl, r.train_loss, r.val_loss, r.val_acc, r.test_acc
            )?;
        }
        Ok(())
    }
}
