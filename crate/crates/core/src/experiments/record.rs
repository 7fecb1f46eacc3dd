use std::io::{self, Write};

use super::Task;

pub const RUN_CSV_HEADER: &str = "epoch,train_loss,test_loss,metric";

/// One evaluation point. Epoch 0 is the untrained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    /// Accuracy for classification, MSE for regression.
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub task: Task,
    /// `epochs + 1` rows: the initial evaluation, then one per epoch.
    pub rows: Vec<EpochRow>,
    pub param_count: usize,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn last(&self) -> &EpochRow {
        self.rows.last().expect("a run always has its epoch-0 row")
    }

    pub fn first(&self) -> &EpochRow {
        &self.rows[0]
    }

    pub fn final_metric(&self) -> f64 {
        self.last().metric
    }

    /// Comment lines (written with a `# ` prefix), header, then one row per epoch.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> io::Result<()> {
        write_comments(&mut w, comments)?;
        writeln!(w, "{RUN_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.epoch, r.train_loss, r.test_loss, r.metric)?;
        }
        w.flush()
    }
}

pub(crate) fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    Ok(())
}
