//! Minimal reader for the run's own metrics.csv (comment line, header
//! row, plain numeric cells).

use std::collections::BTreeMap;
use std::path::Path;

use auction_gan::Error;

/// `gan_id -> [(epoch, coverage_w1)]` for rows where the metric is defined.
pub fn coverage_by_gan(path: &Path) -> Result<BTreeMap<usize, Vec<(usize, f64)>>, Error> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::artifact(path, "empty metrics file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| -> Result<usize, Error> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::artifact(path, format!("missing column `{name}`")))
    };
    let epoch_col = col("epoch")?;
    let gan_col = col("gan_id")?;
    let cov_col = col("coverage_w1")?;

    let mut out: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < columns.len() {
            return Err(Error::artifact(
                path,
                format!("row {} has {} cells, expected {}", i + 1, cells.len(), columns.len()),
            ));
        }
        let epoch: usize = cells[epoch_col]
            .parse()
            .map_err(|_| Error::artifact(path, format!("bad epoch `{}`", cells[epoch_col])))?;
        let gan: usize = cells[gan_col]
            .parse()
            .map_err(|_| Error::artifact(path, format!("bad gan_id `{}`", cells[gan_col])))?;
        let coverage: f64 = cells[cov_col]
            .parse()
            .map_err(|_| Error::artifact(path, format!("bad coverage `{}`", cells[cov_col])))?;
        if coverage.is_finite() {
            out.entry(gan).or_default().push((epoch, coverage));
        }
    }
    Ok(out)
}
