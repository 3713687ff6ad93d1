//! CSV export of chain output.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::chain::ChainResult;
use super::summary::ImputationSummary;
use crate::error::{Error, Result};

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<csv writer>", e))
}

/// Writes one completed CSV per saved frame as `frame_0001.csv`, ... into `dir`.
pub fn write_frames(chain: &ChainResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = chain.frame_count().to_string().len().max(4);
    for k in 0..chain.frame_count() {
        let path = dir.join(format!("frame_{:0width$}.csv", k + 1));
        chain.frame(k)?.write_csv_file(path)?;
    }
    Ok(())
}

/// Long-format draws: `frame,row,column,value`, frames numbered from 1.
pub fn write_long_draws<W: Write>(chain: &ChainResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["frame", "row", "column", "value"])?;
    let names: Vec<&str> = chain
        .cells()
        .iter()
        .map(|c| chain.input().column(c.column).name.as_str())
        .collect();
    for f in 0..chain.frame_count() {
        let frame = (f + 1).to_string();
        for (c, cell) in chain.cells().iter().enumerate() {
            w.write_record([
                frame.as_str(),
                &cell.row.to_string(),
                names[c],
                &chain.draw(f, c).to_string(),
            ])?;
        }
    }
    flush(w)
}

/// Correlation draws: `frame,row_var,col_var,value` for the upper triangle.
pub fn write_correlations<W: Write>(chain: &ChainResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["frame", "row_var", "col_var", "value"])?;
    let names = chain.copula_columns();
    for (f, c) in chain.correlations().iter().enumerate() {
        let frame = (f + 1).to_string();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                w.write_record([frame.as_str(), &names[i], &names[j], &c[(i, j)].to_string()])?;
            }
        }
    }
    flush(w)
}

/// Summary CSV: `row,column,point,lower,upper`.
pub fn write_summary<W: Write>(summary: &ImputationSummary, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row", "column", "point", "lower", "upper"])?;
    for c in &summary.cells {
        w.write_record([
            c.row.to_string(),
            c.column.clone(),
            c.point.to_string(),
            c.lower.to_string(),
            c.upper.to_string(),
        ])?;
    }
    flush(w)
}

/// Draws keyed by `(row, column name)`, as read back from a long-format file.
pub type DrawMap = BTreeMap<(usize, String), Vec<f64>>;

pub fn read_long_draws<R: Read>(reader: R) -> Result<DrawMap> {
    #[derive(serde::Deserialize)]
    struct Rec {
        frame: usize,
        row: usize,
        column: String,
        value: f64,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: BTreeMap<(usize, String), Vec<(usize, f64)>> = BTreeMap::new();
    for rec in rdr.deserialize() {
        let rec: Rec = rec.map_err(|e| Error::Data(format!("draws file: {e}")))?;
        out.entry((rec.row, rec.column)).or_default().push((rec.frame, rec.value));
    }
    Ok(out
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(f, _)| *f);
            (k, v.into_iter().map(|(_, x)| x).collect())
        })
        .collect())
}

/// Summary rows keyed by `(row, column name)` → point.
pub fn read_summary_points<R: Read>(reader: R) -> Result<BTreeMap<(usize, String), f64>> {
    #[derive(serde::Deserialize)]
    struct Rec {
        row: usize,
        column: String,
        point: f64,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .map(|r| {
            let r: Rec = r.map_err(|e| Error::Data(format!("summary file: {e}")))?;
            Ok(((r.row, r.column), r.point))
        })
        .collect()
}

/// Draws for every tracked cell keyed by `(row, column name)`, in frame order.
pub fn draw_map(chain: &ChainResult) -> DrawMap {
    chain
        .cells()
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let name = chain.input().column(cell.column).name.clone();
            ((cell.row, name), chain.cell_draws(c))
        })
        .collect()
}
