use std::path::Path;

use super::{io_err, CurvePoint, PipelineError, PredictionRow, Result};

fn to_bytes<F>(fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(|e| PipelineError::Csv(e.to_string()))?;
    w.into_inner().map_err(|e| PipelineError::Csv(e.to_string()))
}

fn save(path: &Path, bytes: &[u8]) -> Result<()> {
    crate::fsutil::write_atomic(path, bytes).map_err(|e| io_err(path, e))
}

/// `epoch,train_l1,test_l1`; the test column is empty without a test split.
pub fn curve_csv(curve: &[CurvePoint]) -> Result<Vec<u8>> {
    to_bytes(|w| {
        w.write_record(["epoch", "train_l1", "test_l1"])?;
        for p in curve {
            let test = p.test_l1.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([p.epoch.to_string(), p.train_l1.to_string(), test])?;
        }
        Ok(())
    })
}

pub fn write_curve(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    save(path, &curve_csv(curve)?)
}

pub fn predictions_csv(rows: &[PredictionRow]) -> Result<Vec<u8>> {
    to_bytes(|w| {
        for r in rows {
            w.serialize(r)?;
        }
        if rows.is_empty() {
            w.write_record(["mall_id", "sample", "edge_k", "edge_u", "edge_v", "predicted", "actual", "abs_error"])?;
        }
        Ok(())
    })
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    save(path, &predictions_csv(rows)?)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| PipelineError::Csv(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<csv::Result<Vec<PredictionRow>>>()
        .map_err(|e| PipelineError::Csv(format!("{}: {e}", path.display())))
}
